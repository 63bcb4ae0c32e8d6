#pragma once

// Fixed 2x2 gate matrices and rotation conventions used everywhere:
// rot_z(t) = exp(-i t Z / 2), rot_x(t) = exp(-i t X / 2), rot_y(t) = exp(-i t Y / 2).

#include <Eigen/Dense>

#include "mbqc/core.hpp"

namespace mbqc {

using Mat2 = Eigen::Matrix2cd;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline Mat2 pauli_i() { return Mat2::Identity(); }

inline Mat2 pauli_x() {
  Mat2 m;
  m << 0, 1, 1, 0;
  return m;
}

inline Mat2 pauli_y() {
  Mat2 m;
  m << 0, cplx(0, -1), cplx(0, 1), 0;
  return m;
}

inline Mat2 pauli_z() {
  Mat2 m;
  m << 1, 0, 0, -1;
  return m;
}

inline Mat2 hadamard() {
  Mat2 m;
  double s = 1.0 / std::sqrt(2.0);
  m << s, s, s, -s;
  return m;
}

inline Mat2 rot_z(double t) {
  Mat2 m = Mat2::Zero();
  m(0, 0) = std::exp(cplx(0, -t / 2));
  m(1, 1) = std::exp(cplx(0, t / 2));
  return m;
}

inline Mat2 rot_x(double t) {
  Mat2 m;
  double c = std::cos(t / 2), s = std::sin(t / 2);
  m << c, cplx(0, -s), cplx(0, -s), c;
  return m;
}

inline Mat2 rot_y(double t) {
  Mat2 m;
  double c = std::cos(t / 2), s = std::sin(t / 2);
  m << c, -s, s, c;
  return m;
}

inline Mat2 pauli_letter(char l) {
  switch (l) {
    case 'I': return pauli_i();
    case 'X': return pauli_x();
    case 'Y': return pauli_y();
    case 'Z': return pauli_z();
    default: fail("Unsupported", std::string("unknown Pauli letter: ") + l);
  }
}

// Max-entry distance from the identity of U^dagger U; the unitarity residual.
inline double unitarity_residual(const Mat& u) {
  Mat g = u.adjoint() * u;
  g -= Mat::Identity(g.rows(), g.cols());
  return g.cwiseAbs().maxCoeff();
}

}  // namespace mbqc
