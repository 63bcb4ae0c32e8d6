#pragma once

// Outcome-indexed symbolic unitaries: ordered lists of gate factors whose
// exponents are GF(2)-affine expressions in measurement outcome bits. Factor
// lists compose right-to-left (index 0 is applied first), evaluate to dense
// matrices for any outcome assignment, expose the GF(2) rank of their
// exponents, and support normalization with all Pauli factors moved leftmost.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mbqc/core.hpp"
#include "mbqc/gates.hpp"
#include "mbqc/statevector.hpp"

namespace mbqc {

// XOR of a set of outcome bits plus a constant bit. Bits are keyed by the
// owning vertex id.
struct OutcomeBitExpr {
  std::set<int> bits;
  int constant = 0;

  static OutcomeBitExpr zero() { return {}; }
  static OutcomeBitExpr one() { return {{}, 1}; }
  static OutcomeBitExpr bit(int v) { return {{v}, 0}; }
  static OutcomeBitExpr bit_plus_one(int v) { return {{v}, 1}; }

  bool is_constant() const { return bits.empty(); }
  bool is_zero() const { return bits.empty() && constant == 0; }
  bool is_one() const { return bits.empty() && constant == 1; }

  OutcomeBitExpr operator^(const OutcomeBitExpr& o) const {
    OutcomeBitExpr r;
    std::set_symmetric_difference(bits.begin(), bits.end(), o.bits.begin(), o.bits.end(),
                                  std::inserter(r.bits, r.bits.end()));
    r.constant = constant ^ o.constant;
    return r;
  }
  OutcomeBitExpr& operator^=(const OutcomeBitExpr& o) { return *this = *this ^ o; }

  friend bool operator==(const OutcomeBitExpr&, const OutcomeBitExpr&) = default;
  friend bool operator<(const OutcomeBitExpr& a, const OutcomeBitExpr& b) {
    if (a.bits != b.bits) return a.bits < b.bits;
    return a.constant < b.constant;
  }

  int eval(const std::map<int, int>& outcome) const {
    int r = constant;
    for (int b : bits) {
      auto it = outcome.find(b);
      if (it == outcome.end()) fail("NoSuchVertex", "outcome bit " + std::to_string(b));
      r ^= (it->second & 1);
    }
    return r;
  }

  std::string to_string() const {
    if (bits.empty()) return std::to_string(constant);
    std::string s;
    for (int b : bits) {
      if (!s.empty()) s += "+";
      s += "m" + std::to_string(b);
    }
    if (constant) s += "+1";
    return s;
  }

  nlohmann::json to_json() const {
    return {{"bits", std::vector<int>(bits.begin(), bits.end())}, {"const", constant}};
  }
};

enum class GateTag { PauliX, PauliZ, RotX, RotZ, Hadamard, CZ };

struct SymbolicFactor {
  GateTag tag = GateTag::PauliZ;
  double angle = 0.0;        // RotX / RotZ only
  std::vector<int> targets;  // one qubit index, or two for CZ
  OutcomeBitExpr exponent = OutcomeBitExpr::one();
};

inline SymbolicFactor sym_pauli_x(int q, OutcomeBitExpr e) {
  return {GateTag::PauliX, 0.0, {q}, std::move(e)};
}
inline SymbolicFactor sym_pauli_z(int q, OutcomeBitExpr e) {
  return {GateTag::PauliZ, 0.0, {q}, std::move(e)};
}
inline SymbolicFactor sym_rot_x(int q, double angle, OutcomeBitExpr e) {
  return {GateTag::RotX, angle, {q}, std::move(e)};
}
inline SymbolicFactor sym_rot_z(int q, double angle, OutcomeBitExpr e) {
  return {GateTag::RotZ, angle, {q}, std::move(e)};
}
inline SymbolicFactor sym_hadamard(int q, OutcomeBitExpr e) {
  return {GateTag::Hadamard, 0.0, {q}, std::move(e)};
}
inline SymbolicFactor sym_cz(int q, int r, OutcomeBitExpr e) {
  return {GateTag::CZ, 0.0, {q, r}, std::move(e)};
}

// Ordered factor list over `qubits` lines; index 0 is applied first, so the
// matrix is factors[k-1] * ... * factors[0]. Qubit 0 owns the most
// significant state-index bit.
struct SymbolicUnitary {
  int qubits = 1;
  std::vector<SymbolicFactor> factors;
};

namespace detail {

inline Mat2 factor_base_matrix(const SymbolicFactor& f) {
  switch (f.tag) {
    case GateTag::PauliX:
      return pauli_x();
    case GateTag::PauliZ:
      return pauli_z();
    case GateTag::RotX:
      return rot_x(f.angle);
    case GateTag::RotZ:
      return rot_z(f.angle);
    case GateTag::Hadamard:
      return hadamard();
    default:
      fail("Unsupported", "factor has no single-qubit matrix");
  }
}

inline void apply_single_qubit(Mat& state, int qubits, int q, const Mat2& u) {
  const std::uint64_t mask = 1ull << (qubits - 1 - q);
  const std::uint64_t rows = state.rows();
  for (std::uint64_t r = 0; r < rows; ++r) {
    if (r & mask) continue;
    for (Eigen::Index c = 0; c < state.cols(); ++c) {
      cplx a0 = state(r, c);
      cplx a1 = state(r | mask, c);
      state(r, c) = u(0, 0) * a0 + u(0, 1) * a1;
      state(r | mask, c) = u(1, 0) * a0 + u(1, 1) * a1;
    }
  }
}

inline void apply_cz_rows(Mat& state, int qubits, int q, int r) {
  const std::uint64_t mq = 1ull << (qubits - 1 - q);
  const std::uint64_t mr = 1ull << (qubits - 1 - r);
  const std::uint64_t rows = state.rows();
  for (std::uint64_t i = 0; i < rows; ++i) {
    if ((i & mq) && (i & mr)) {
      for (Eigen::Index c = 0; c < state.cols(); ++c) state(i, c) = -state(i, c);
    }
  }
}

}  // namespace detail

// Dense matrix of the factor list at one outcome assignment.
inline Mat evaluate_symbolic(const SymbolicUnitary& su, const std::map<int, int>& outcome) {
  const std::uint64_t dim = 1ull << su.qubits;
  Mat m = Mat::Identity(dim, dim);
  for (const SymbolicFactor& f : su.factors) {
    if (f.exponent.eval(outcome) == 0) continue;
    if (f.tag == GateTag::CZ) {
      if (f.targets.size() != 2) fail("BadArity", "CZ needs two targets");
      detail::apply_cz_rows(m, su.qubits, f.targets[0], f.targets[1]);
    } else {
      if (f.targets.size() != 1) fail("BadArity", "single-qubit factor needs one target");
      detail::apply_single_qubit(m, su.qubits, f.targets[0], detail::factor_base_matrix(f));
    }
  }
  return m;
}

// ---- GF(2) rank of exponent linear parts ------------------------------------

struct RankReport {
  std::vector<OutcomeBitExpr> rows;           // all factor exponents
  std::vector<OutcomeBitExpr> rotation_rows;  // exponents of non-Pauli factors
  int rank = 0;
  int rotation_rank = 0;
};

namespace detail {

inline int gf2_rank(const std::vector<std::set<int>>& rows) {
  std::vector<std::set<int>> basis;
  for (std::set<int> r : rows) {
    for (const auto& b : basis) {
      if (!r.empty() && b.count(*r.begin())) {
        std::set<int> nxt;
        std::set_symmetric_difference(r.begin(), r.end(), b.begin(), b.end(),
                                      std::inserter(nxt, nxt.end()));
        r.swap(nxt);
      }
    }
    // Repeat reduction until the leading bit is not covered by any basis row.
    bool changed = true;
    while (changed && !r.empty()) {
      changed = false;
      for (const auto& b : basis) {
        if (!b.empty() && *b.begin() == *r.begin()) {
          std::set<int> nxt;
          std::set_symmetric_difference(r.begin(), r.end(), b.begin(), b.end(),
                                        std::inserter(nxt, nxt.end()));
          r.swap(nxt);
          changed = true;
          break;
        }
      }
    }
    if (!r.empty()) basis.push_back(std::move(r));
  }
  return static_cast<int>(basis.size());
}

}  // namespace detail

inline RankReport outcome_bit_rank(const SymbolicUnitary& su) {
  RankReport rep;
  std::vector<std::set<int>> all, rot;
  for (const SymbolicFactor& f : su.factors) {
    rep.rows.push_back(f.exponent);
    all.push_back(f.exponent.bits);
    if (f.tag != GateTag::PauliX && f.tag != GateTag::PauliZ) {
      rep.rotation_rows.push_back(f.exponent);
      rot.push_back(f.exponent.bits);
    }
  }
  rep.rank = detail::gf2_rank(all);
  rep.rotation_rank = detail::gf2_rank(rot);
  return rep;
}

// ---- Pauli push-through -----------------------------------------------------
//
// Rewrites the list so every Pauli factor sits at the end (matrix-leftmost),
// preserving each outcome branch up to global phase. Crossing rules:
//   Z X(t) = X(-t) Z,  X Z(t) = Z(-t) X  (angle sign flips);
//   H X = Z H,  H Z = X H;
//   CZ X_q = X_q Z_r CZ on the pair (q, r).
// Conditional flips stay affine through the exact split
//   X((-1)^z t)^e = X(t)^(z^e) X(-t)^z,
// and a conditional CZ crossing a conditional X emits the Z string
//   Z^(e AND x) = Z(pi/2)^(e^x) Z(-pi/2)^e Z(-pi/2)^x  (up to global phase).
inline SymbolicUnitary pauli_pushthrough(const SymbolicUnitary& su) {
  SymbolicUnitary out;
  out.qubits = su.qubits;
  std::vector<OutcomeBitExpr> accx(su.qubits), accz(su.qubits);

  auto cross_rotation = [&](const SymbolicFactor& f, const OutcomeBitExpr& anti) {
    if (anti.is_zero()) {
      out.factors.push_back(f);
    } else {
      SymbolicFactor pos = f, neg = f;
      pos.exponent = f.exponent ^ anti;
      neg.exponent = anti;
      neg.angle = -f.angle;
      out.factors.push_back(std::move(pos));
      out.factors.push_back(std::move(neg));
    }
  };
  // Append diagonal factors realizing Z^(e AND x) on qubit q, up to phase.
  auto emit_and_string = [&](int q, const OutcomeBitExpr& e, const OutcomeBitExpr& x) {
    if (x.is_zero() || e.is_zero()) return;
    if (e.is_one()) {
      accz[q] ^= x;
      return;
    }
    if (x.is_one()) {
      accz[q] ^= e;
      return;
    }
    out.factors.push_back(sym_rot_z(q, pi / 2.0, e ^ x));
    out.factors.push_back(sym_rot_z(q, -pi / 2.0, e));
    out.factors.push_back(sym_rot_z(q, -pi / 2.0, x));
  };

  for (const SymbolicFactor& f : su.factors) {
    switch (f.tag) {
      case GateTag::PauliX:
        accx[f.targets[0]] ^= f.exponent;
        break;
      case GateTag::PauliZ:
        accz[f.targets[0]] ^= f.exponent;
        break;
      case GateTag::RotX:
        cross_rotation(f, accz[f.targets[0]]);
        break;
      case GateTag::RotZ:
        cross_rotation(f, accx[f.targets[0]]);
        break;
      case GateTag::Hadamard: {
        const int q = f.targets[0];
        if (f.exponent.is_constant()) {
          if (f.exponent.constant == 1) {
            std::swap(accx[q], accz[q]);
            out.factors.push_back(f);
          }
        } else if (accx[q].is_zero() && accz[q].is_zero()) {
          out.factors.push_back(f);
        } else {
          fail("Unsupported", "cannot cross accumulated Paulis through a conditional H");
        }
        break;
      }
      case GateTag::CZ: {
        const int q = f.targets[0], r = f.targets[1];
        if (f.exponent.is_constant() && f.exponent.constant == 0) break;
        emit_and_string(r, f.exponent, accx[q]);
        emit_and_string(q, f.exponent, accx[r]);
        out.factors.push_back(f);
        break;
      }
    }
  }
  for (int q = 0; q < su.qubits; ++q) {
    if (!accz[q].is_zero()) out.factors.push_back(sym_pauli_z(q, accz[q]));
    if (!accx[q].is_zero()) out.factors.push_back(sym_pauli_x(q, accx[q]));
  }
  return out;
}

// ---- serialization ----------------------------------------------------------

inline std::string gate_label(const SymbolicFactor& f) {
  switch (f.tag) {
    case GateTag::PauliX:
      return "X";
    case GateTag::PauliZ:
      return "Z";
    case GateTag::Hadamard:
      return "H";
    case GateTag::CZ:
      return "CZ";
    case GateTag::RotX:
      return "X(" + format_double(f.angle) + ")";
    case GateTag::RotZ:
      return "Z(" + format_double(f.angle) + ")";
  }
  return "?";
}

inline nlohmann::json symbolic_to_json(const SymbolicUnitary& su) {
  nlohmann::json factors = nlohmann::json::array();
  for (const SymbolicFactor& f : su.factors) {
    factors.push_back({{"gate", gate_label(f)},
                       {"targets", f.targets},
                       {"exponent", f.exponent.to_json()}});
  }
  return {{"qubits", su.qubits}, {"factors", factors}};
}

}  // namespace mbqc
