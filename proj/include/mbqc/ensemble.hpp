#pragma once

// Unitary ensembles induced by measuring open graphs: exhaustive branch
// extraction, the linear-cluster fast path, phase-insensitive comparison,
// and moment (twirl) operators including the Haar reference.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <json.hpp>

#include <cstdint>
#include <numeric>
#include <vector>

#include "mbqc/branches.hpp"
#include "mbqc/core.hpp"
#include "mbqc/gates.hpp"
#include "mbqc/graph.hpp"

namespace mbqc {

struct UnitaryEnsemble {
  int d = 2;
  std::vector<std::pair<double, Mat>> elements;  // (probability, unitary)
  bool uniform = false;

  void validate(double prob_tol = 1e-10, double unitary_tol = 1e-9) const {
    if (elements.empty()) fail("EmptyEnsemble", "ensemble has no elements");
    double total = 0.0;
    for (const auto& [p, u] : elements) {
      if (u.rows() != d || u.cols() != d) fail("BadGraphIO", "element dimension mismatch");
      if (unitarity_residual(u) > unitary_tol) fail("NonUnitaryBranch", "ensemble element not unitary");
      total += p;
    }
    if (std::abs(total - 1.0) > prob_tol) fail("NumericalError", "probabilities do not sum to 1");
    if (uniform) {
      double p0 = elements.front().first;
      for (const auto& [p, u] : elements) {
        (void)u;
        if (std::abs(p - p0) > prob_tol) fail("NumericalError", "uniform flag with unequal probabilities");
      }
    }
  }
};

// Branch map of a single measured node: H Z^m rot_z(angle).
inline Mat2 single_qubit_branch_unitary(int outcome, double angle) {
  Mat2 u = hadamard();
  if (outcome & 1) u = u * pauli_z();
  return u * rot_z(angle);
}

// All 2^L branch unitaries of a measured path, each with probability 2^-L.
// Outcome bit k belongs to the k-th measured vertex, and later vertices'
// maps compose on the left.
inline UnitaryEnsemble linear_cluster_ensemble(const std::vector<double>& angles) {
  const int len = static_cast<int>(angles.size());
  if (len < 1) fail("DegenerateLength", "need at least one angle");
  if (len > 26) fail("TooLarge", "2^L elements exceed the materialization limit");
  UnitaryEnsemble e;
  e.d = 2;
  e.uniform = true;
  const std::uint64_t count = 1ull << len;
  const double p = 1.0 / static_cast<double>(count);
  e.elements.reserve(count);
  for (std::uint64_t m = 0; m < count; ++m) {
    Mat2 u = Mat2::Identity();
    for (int k = 0; k < len; ++k) {
      u = single_qubit_branch_unitary(static_cast<int>((m >> k) & 1u), angles[k]) * u;
    }
    e.elements.emplace_back(p, u);
  }
  return e;
}

// Exhaustive ensemble of an arbitrary measured open graph. Verifies that
// every non-negligible branch is proportional to a unitary.
inline UnitaryEnsemble graph_ensemble(const OpenGraph& g, double tol = 1e-9,
                                      const BranchOptions& opt = {}) {
  g.validate();
  if (g.inputs.size() != g.outputs.size()) {
    fail("BadGraphIO", "need equally many inputs and outputs for a unitary ensemble");
  }
  if (g.vertices.size() > 24) fail("TooLarge", "graph exceeds 24 vertices");
  auto measured = g.measured_vertices();
  if (measured.size() > 24) fail("TooLarge", "too many measured vertices");

  auto branches = enumerate_branches(g, opt);
  UnitaryEnsemble e;
  e.d = static_cast<int>(1ull << g.outputs.size());
  double psum = 0.0;
  for (const auto& br : branches) psum += br.p;
  bool all_equal = true;
  double first_p = -1.0;
  for (const auto& br : branches) {
    double p = br.p / psum;
    if (p < 1e-14) continue;  // zero-weight branch, never sampled
    double scale = (br.op.adjoint() * br.op).trace().real() / static_cast<double>(e.d);
    Mat u = br.op / std::sqrt(scale);
    if (unitarity_residual(u) > tol) {
      fail("NonUnitaryBranch", "branch " + std::to_string(br.outcome) + " is not proportional to a unitary");
    }
    if (first_p < 0) {
      first_p = p;
    } else if (std::abs(p - first_p) > 1e-10) {
      all_equal = false;
    }
    e.elements.emplace_back(p, std::move(u));
  }
  e.uniform = all_equal;
  e.validate(1e-10, tol);
  return e;
}

// Phase-blind equality: | |tr(U^dagger V)| - d | <= tol.
inline bool equal_up_to_phase(const Mat& u, const Mat& v, double tol = 1e-9) {
  if (u.rows() != v.rows() || u.cols() != v.cols() || u.rows() != u.cols()) {
    fail("BadGraphIO", "dimension mismatch in phase comparison");
  }
  double overlap = std::abs((u.adjoint() * v).trace());
  return std::abs(overlap - static_cast<double>(u.rows())) <= tol;
}

// ---------------------------------------------------------------------------
// Moment (twirl) operators. Superoperators act on vec'd operators with the
// matrix-unit basis ordered row-major: index i*dim + j represents |i><j|.

namespace detail {

inline std::vector<std::vector<int>> all_permutations(int t) {
  std::vector<int> idx(t);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::vector<int>> out;
  do {
    out.push_back(idx);
  } while (std::next_permutation(idx.begin(), idx.end()));
  return out;
}

// Permutation operator on (C^2)^{tensor t}: basis state with qubit k in bit
// b_k maps to the state whose qubit perm[k] is in bit b_k.
inline Mat permutation_operator(const std::vector<int>& perm) {
  const int t = static_cast<int>(perm.size());
  const std::uint64_t dim = 1ull << t;
  Mat w = Mat::Zero(dim, dim);
  for (std::uint64_t in = 0; in < dim; ++in) {
    std::uint64_t out = 0;
    for (int k = 0; k < t; ++k) {
      int bit = static_cast<int>((in >> (t - 1 - k)) & 1u);
      if (bit) out |= 1ull << (t - 1 - perm[static_cast<std::size_t>(k)]);
    }
    w(out, in) = 1.0;
  }
  return w;
}

inline int cycle_count(const std::vector<int>& perm) {
  const int t = static_cast<int>(perm.size());
  std::vector<bool> seen(perm.size(), false);
  int cycles = 0;
  for (int s = 0; s < t; ++s) {
    if (seen[static_cast<std::size_t>(s)]) continue;
    ++cycles;
    int v = s;
    while (!seen[static_cast<std::size_t>(v)]) {
      seen[static_cast<std::size_t>(v)] = true;
      v = perm[static_cast<std::size_t>(v)];
    }
  }
  return cycles;
}

inline std::uint64_t row_major_vec_index(std::uint64_t i, std::uint64_t j, std::uint64_t dim) {
  return i * dim + j;
}

}  // namespace detail

// The t-th Haar moment superoperator for qubits: the orthogonal projection
// onto the span of the t! qubit-permutation operators, built from the
// permutation Gram matrix pseudo-inverse (cutoff 1e-10; the permutation
// operators are linearly dependent for t > 2 at d = 2).
inline Mat haar_moment_operator(int t) {
  if (t < 1) fail("Unsupported", "order must be positive");
  if (t > 5) fail("TooLarge", "Haar moment supported for t <= 5");
  auto perms = detail::all_permutations(t);
  const int np = static_cast<int>(perms.size());
  const std::uint64_t dim = 1ull << t;

  // Gram entries: tr(W_sigma^dagger W_pi) = 2^{#cycles(sigma^{-1} pi)}.
  Eigen::MatrixXd gram(np, np);
  for (int a = 0; a < np; ++a) {
    std::vector<int> inv_a(perms[static_cast<std::size_t>(a)].size());
    for (std::size_t k = 0; k < inv_a.size(); ++k) {
      inv_a[static_cast<std::size_t>(perms[static_cast<std::size_t>(a)][k])] = static_cast<int>(k);
    }
    for (int b = 0; b < np; ++b) {
      std::vector<int> composed(inv_a.size());
      for (std::size_t k = 0; k < composed.size(); ++k) {
        composed[k] = inv_a[static_cast<std::size_t>(perms[static_cast<std::size_t>(b)][k])];
      }
      gram(a, b) = std::pow(2.0, detail::cycle_count(composed));
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(gram, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::VectorXd sv = svd.singularValues();
  Eigen::VectorXd inv_sv = sv;
  for (int k = 0; k < sv.size(); ++k) {
    inv_sv(k) = sv(k) > 1e-10 ? 1.0 / sv(k) : 0.0;
  }
  Eigen::MatrixXd pinv = svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();

  std::vector<Vec> vecs(perms.size());
  for (std::size_t a = 0; a < perms.size(); ++a) {
    Mat w = detail::permutation_operator(perms[a]);
    Vec v(dim * dim);
    for (std::uint64_t i = 0; i < dim; ++i) {
      for (std::uint64_t j = 0; j < dim; ++j) {
        v(detail::row_major_vec_index(i, j, dim)) = w(i, j);
      }
    }
    vecs[a] = v;
  }
  Mat op = Mat::Zero(dim * dim, dim * dim);
  for (int a = 0; a < np; ++a) {
    for (int b = 0; b < np; ++b) {
      if (pinv(a, b) == 0.0) continue;
      op += pinv(a, b) * (vecs[static_cast<std::size_t>(a)] * vecs[static_cast<std::size_t>(b)].adjoint());
    }
  }
  return op;
}

// The t-fold twirl of an ensemble as a superoperator matrix in the same
// row-major matrix-unit basis: rho -> sum_i p_i U_i^{ot t} rho (U_i^{ot t})^dagger.
inline Mat moment_operator(const UnitaryEnsemble& e, int t) {
  if (t < 1) fail("Unsupported", "order must be positive");
  e.validate();
  const std::uint64_t d_single = static_cast<std::uint64_t>(e.d);
  std::uint64_t dim = 1;
  for (int k = 0; k < t; ++k) {
    dim *= d_single;
    if (dim > (1ull << 12)) fail("TooLarge", "twirl dimension exceeds memory budget");
  }
  Mat op = Mat::Zero(dim * dim, dim * dim);
  for (const auto& [p, u] : e.elements) {
    Mat ut = Mat::Ones(1, 1);
    for (int k = 0; k < t; ++k) {
      Mat next(ut.rows() * d_single, ut.cols() * d_single);
      for (std::uint64_t i = 0; i < d_single; ++i) {
        for (std::uint64_t j = 0; j < d_single; ++j) {
          next.block(i * ut.rows(), j * ut.cols(), ut.rows(), ut.cols()) = u(i, j) * ut;
        }
      }
      ut = std::move(next);
    }
    // vec(U rho U^dagger)[(i,j)] = sum_{k,l} U(i,k) conj(U(j,l)) vec(rho)[(k,l)]
    Mat utc = ut.conjugate();
    for (std::uint64_t i = 0; i < dim; ++i) {
      for (std::uint64_t j = 0; j < dim; ++j) {
        std::uint64_t row = detail::row_major_vec_index(i, j, dim);
        for (std::uint64_t k = 0; k < dim; ++k) {
          for (std::uint64_t l = 0; l < dim; ++l) {
            op(row, detail::row_major_vec_index(k, l, dim)) += p * ut(i, k) * utc(j, l);
          }
        }
      }
    }
  }
  return op;
}

// Uniform re-weighted concatenation of two ensembles of equal dimension.
inline UnitaryEnsemble uniform_union(const UnitaryEnsemble& a, const UnitaryEnsemble& b) {
  if (a.d != b.d) fail("BadGraphIO", "dimension mismatch in ensemble union");
  UnitaryEnsemble e;
  e.d = a.d;
  const double p = 1.0 / static_cast<double>(a.elements.size() + b.elements.size());
  for (const auto& [q, u] : a.elements) {
    (void)q;
    e.elements.emplace_back(p, u);
  }
  for (const auto& [q, u] : b.elements) {
    (void)q;
    e.elements.emplace_back(p, u);
  }
  e.uniform = true;
  return e;
}

// All-pairs tensor product ensemble {p_i q_j, U_i (x) V_j}.
inline UnitaryEnsemble tensor_product(const UnitaryEnsemble& a, const UnitaryEnsemble& b) {
  UnitaryEnsemble e;
  e.d = a.d * b.d;
  for (const auto& [pa, ua] : a.elements) {
    for (const auto& [pb, ub] : b.elements) {
      Mat u(e.d, e.d);
      for (int i = 0; i < a.d; ++i) {
        for (int j = 0; j < a.d; ++j) {
          u.block(i * b.d, j * b.d, b.d, b.d) = ua(i, j) * ub;
        }
      }
      e.elements.emplace_back(pa * pb, std::move(u));
    }
  }
  e.uniform = a.uniform && b.uniform;
  return e;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json ensemble_to_json(const UnitaryEnsemble& e) {
  nlohmann::json j;
  j["d"] = e.d;
  j["uniform"] = e.uniform;
  auto elements = nlohmann::json::array();
  for (const auto& [p, u] : e.elements) {
    nlohmann::json el;
    el["p"] = p;
    auto re = nlohmann::json::array();
    auto im = nlohmann::json::array();
    for (int i = 0; i < u.rows(); ++i) {
      auto rrow = nlohmann::json::array();
      auto irow = nlohmann::json::array();
      for (int jj = 0; jj < u.cols(); ++jj) {
        rrow.push_back(u(i, jj).real());
        irow.push_back(u(i, jj).imag());
      }
      re.push_back(rrow);
      im.push_back(irow);
    }
    el["re"] = re;
    el["im"] = im;
    elements.push_back(el);
  }
  j["elements"] = elements;
  return j;
}

}  // namespace mbqc
