#pragma once

// Dense statevector realization of open graph states and the measurement-bra
// conventions.
//
// Qubit ordering: ascending vertex id maps to tensor positions left to right,
// so the first (smallest-id) vertex owns the most significant bit of a basis
// index. Input-state indices use the ordered input list the same way (first
// listed input = most significant bit).
//
// Measurement conventions (validated against branch-unitary closed forms by
// the acceptance suite):
//   XY plane, angle phi, outcome m: applied bra (<0| + (-1)^m e^{+i phi} <1|)/sqrt(2).
//   ZY plane, angle phi, outcome m: eigenbasis of cos(phi) Z + sin(phi) Y with
//     the +1 eigenvector (cos(phi/2), i sin(phi/2)) assigned to m = 0.

#include <Eigen/Dense>

#include "mbqc/core.hpp"
#include "mbqc/gates.hpp"
#include "mbqc/graph.hpp"

namespace mbqc {

inline constexpr int kMaxStatevectorQubits = 24;

using RowVec2 = Eigen::Matrix<cplx, 1, 2>;

inline RowVec2 measurement_bra(const MeasurementSpec& spec, int outcome) {
  RowVec2 b;
  if (spec.plane == Plane::XY) {
    double s = outcome ? -1.0 : 1.0;
    b << 1.0 / std::sqrt(2.0), s * std::exp(cplx(0, spec.angle)) / std::sqrt(2.0);
  } else {
    double c = std::cos(spec.angle / 2), s = std::sin(spec.angle / 2);
    if (outcome == 0) {
      b << c, cplx(0, -s);
    } else {
      b << cplx(0, -s), c;
    }
  }
  return b;
}

// Bit of basis index `idx` belonging to tensor position `pos` out of `n`.
inline int bit_at(std::uint64_t idx, int pos, int n) {
  return static_cast<int>((idx >> (n - 1 - pos)) & 1u);
}

// Position of vertex v in the ascending vertex list.
inline int vertex_position(const OpenGraph& g, int v) {
  auto it = std::lower_bound(g.vertices.begin(), g.vertices.end(), v);
  if (it == g.vertices.end() || *it != v) fail("NoSuchVertex", "vertex " + std::to_string(v));
  return static_cast<int>(it - g.vertices.begin());
}

// CZ-entangled product state: the given state on the inputs, |+> elsewhere,
// then one CZ per edge.
inline Vec open_graph_state(const OpenGraph& g, const Vec& input_state) {
  g.validate();
  const int n = static_cast<int>(g.vertices.size());
  if (n > kMaxStatevectorQubits) {
    fail("TooLarge", "statevector limited to " + std::to_string(kMaxStatevectorQubits) + " qubits");
  }
  const int ni = static_cast<int>(g.inputs.size());
  const std::uint64_t din = 1ull << ni;
  if (static_cast<std::uint64_t>(input_state.size()) != din) {
    fail("BadInputDimension", "expected dimension " + std::to_string(din));
  }
  if (std::abs(input_state.norm() - 1.0) > 1e-12) {
    fail("BadInputDimension", "input state must be normalized");
  }

  std::vector<int> input_pos(g.inputs.size());
  for (std::size_t k = 0; k < g.inputs.size(); ++k) {
    input_pos[k] = vertex_position(g, g.inputs[k]);
  }

  const std::uint64_t dim = 1ull << n;
  const double plus_amp = std::pow(2.0, -0.5 * (n - ni));
  Vec state(dim);
  for (std::uint64_t idx = 0; idx < dim; ++idx) {
    std::uint64_t in_idx = 0;
    for (std::size_t k = 0; k < input_pos.size(); ++k) {
      in_idx = (in_idx << 1) | static_cast<std::uint64_t>(bit_at(idx, input_pos[k], n));
    }
    state(idx) = plus_amp * input_state(in_idx);
  }
  for (const auto& e : g.edges) {
    int pu = vertex_position(g, e.first);
    int pv = vertex_position(g, e.second);
    for (std::uint64_t idx = 0; idx < dim; ++idx) {
      if (bit_at(idx, pu, n) && bit_at(idx, pv, n)) state(idx) = -state(idx);
    }
  }
  return state;
}

// Apply a 2x2 matrix to tensor position pos of an n-qubit state.
inline void apply_single_qubit(Vec& state, const Mat2& u, int pos, int n) {
  const std::uint64_t mask = 1ull << (n - 1 - pos);
  const std::uint64_t dim = state.size();
  for (std::uint64_t idx = 0; idx < dim; ++idx) {
    if (idx & mask) continue;
    cplx a0 = state(idx);
    cplx a1 = state(idx | mask);
    state(idx) = u(0, 0) * a0 + u(0, 1) * a1;
    state(idx | mask) = u(1, 0) * a0 + u(1, 1) * a1;
  }
}

inline void apply_cz(Vec& state, int pos_u, int pos_v, int n) {
  const std::uint64_t mu = 1ull << (n - 1 - pos_u);
  const std::uint64_t mv = 1ull << (n - 1 - pos_v);
  const std::uint64_t dim = state.size();
  for (std::uint64_t idx = 0; idx < dim; ++idx) {
    if ((idx & mu) && (idx & mv)) state(idx) = -state(idx);
  }
}

// Contract a bra onto tensor position pos, dropping that qubit.
inline Vec project_qubit(const Vec& state, const RowVec2& bra, int pos, int n) {
  const std::uint64_t dim = state.size();
  const std::uint64_t half = dim >> 1;
  const int shift = n - 1 - pos;
  const std::uint64_t low_mask = (1ull << shift) - 1;
  Vec out(half);
  for (std::uint64_t r = 0; r < half; ++r) {
    std::uint64_t high = (r & ~low_mask) << 1;
    std::uint64_t low = r & low_mask;
    std::uint64_t i0 = high | low;
    std::uint64_t i1 = i0 | (1ull << shift);
    out(r) = bra(0) * state(i0) + bra(1) * state(i1);
  }
  return out;
}

// Apply a Pauli string (with its phase) to a state over the graph's qubits.
inline Vec apply_pauli_string(const OpenGraph& g, const PauliString& p, const Vec& state) {
  const int n = static_cast<int>(g.vertices.size());
  Vec out = state;
  for (const auto& [v, letter] : p.letters) {
    apply_single_qubit(out, pauli_letter(letter), vertex_position(g, v), n);
  }
  out *= p.phase;
  return out;
}

}  // namespace mbqc
