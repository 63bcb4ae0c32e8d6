#pragma once

// Gadget catalog: small open graphs whose measurement branches implement
// known outcome-indexed unitaries. Each gadget carries a symbolic claim that
// can be checked branch-by-branch against the contraction machinery. Claims
// with underdetermined bits (the two-qubit coupler's extra bit, the universal
// pair's full bit string, the fused-Hadamard Paulis) are discovered by fitting
// GF(2)-affine forms to enumerated or sampled branch data, then re-verified.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mbqc/branches.hpp"
#include "mbqc/core.hpp"
#include "mbqc/fusion.hpp"
#include "mbqc/gates.hpp"
#include "mbqc/graph.hpp"
#include "mbqc/parallel.hpp"
#include "mbqc/symbolic.hpp"

namespace mbqc {

struct Gadget {
  std::string name;
  OpenGraph graph;
  SymbolicUnitary claim;
  // Vertex sets whose outcomes were (or must be) equalized by X-type fusion.
  std::vector<std::vector<int>> correlation_sets;
};

namespace detail {

// Outcome map {vertex id -> bit} for one enumeration index.
inline std::map<int, int> outcome_map(const std::vector<int>& measured, std::uint64_t outcome) {
  std::map<int, int> m;
  for (std::size_t k = 0; k < measured.size(); ++k) {
    m[measured[k]] = static_cast<int>((outcome >> k) & 1u);
  }
  return m;
}

// Entrywise equality up to one global phase, aligned on b's largest entry.
// (A Gram-based distance 2 - 2|<a,b>| would lose the comparison to rounding
// noise in the inner product at tolerances this tight.)
inline bool match_mod_phase(const Mat& a, const Mat& b, double tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  Eigen::Index rr = 0, rc = 0;
  double best = 0.0;
  for (Eigen::Index r = 0; r < b.rows(); ++r) {
    for (Eigen::Index c = 0; c < b.cols(); ++c) {
      double m = std::abs(b(r, c));
      if (m > best) {
        best = m;
        rr = r;
        rc = c;
      }
    }
  }
  if (best < 1e-12) return a.norm() <= tol;
  cplx phase = a(rr, rc) / b(rr, rc);
  const double mag = std::abs(phase);
  if (mag < 1e-12) return false;
  phase /= mag;
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      if (std::abs(a(r, c) - phase * b(r, c)) > tol) return false;
    }
  }
  return true;
}

// A branch operator realizes a unitary iff op^dag op is a multiple of the
// identity. Ancilla-chain couplers produce branches that are instead parity
// projectors, which no unitary claim can reproduce. The tolerance is
// relative to ||op^dag op||: post-selected branch norms shrink with the
// number of measured vertices, so an absolute floor would wave projectors
// through on large graphs.
inline bool proportional_to_unitary(const Mat& op, double tol = 1e-7) {
  Mat g = op.adjoint() * op;
  const double scale = g.trace().real() / static_cast<double>(g.rows());
  Mat dev = g - scale * Mat::Identity(g.rows(), g.cols());
  return dev.norm() <= tol * g.norm();
}

// Linear system over GF(2): rows are coefficient masks with a right-hand
// bit. solve() eliminates incrementally and sets free variables to zero.
struct Gf2System {
  int unknowns = 0;
  std::vector<std::uint64_t> rows;  // bit i = coefficient of unknown i, bit 63 = rhs

  explicit Gf2System(int n) : unknowns(n) {
    if (n > 62) fail("TooLarge", "too many unknowns for a word-packed solve");
  }
  void add(std::uint64_t mask, int rhs) {
    rows.push_back(mask | (rhs & 1 ? 1ull << 63 : 0ull));
  }
  std::optional<std::uint64_t> solve() const {
    const std::uint64_t coeff_mask = (1ull << unknowns) - 1;
    std::vector<std::uint64_t> basis;  // echelon rows, pivot = lowest set bit
    for (std::uint64_t r : rows) {
      for (std::uint64_t b : basis) {
        std::uint64_t pivot = b & coeff_mask;
        pivot &= ~pivot + 1ull;
        if (r & pivot) r ^= b;
      }
      if ((r & coeff_mask) == 0) {
        if (r >> 63) return std::nullopt;  // 0 = 1: inconsistent
        continue;
      }
      basis.push_back(r);
    }
    // Resolve higher pivots first so substitution only sees settled bits.
    std::sort(basis.begin(), basis.end(), [&](std::uint64_t a, std::uint64_t b) {
      std::uint64_t pa = a & coeff_mask;
      pa &= ~pa + 1ull;
      std::uint64_t pb = b & coeff_mask;
      pb &= ~pb + 1ull;
      return pa > pb;
    });
    std::uint64_t solution = 0;
    for (std::uint64_t b : basis) {
      std::uint64_t pivot = b & coeff_mask;
      pivot &= ~pivot + 1ull;
      int acc = static_cast<int>(b >> 63);
      std::uint64_t rest = (b & coeff_mask) ^ pivot;
      while (rest) {
        std::uint64_t bit = rest & (~rest + 1ull);
        if (solution & bit) acc ^= 1;
        rest ^= bit;
      }
      if (acc) solution |= pivot;
    }
    return solution;
  }
};

// Coefficient mask of an affine form's value row for one sample: unknowns
// `base..base+|bit_ids|` are the linear coefficients, `base+|bit_ids|` the
// constant term.
inline std::uint64_t affine_row(const std::map<int, int>& sample,
                                const std::vector<int>& bit_ids, int base) {
  std::uint64_t mask = 1ull << (base + bit_ids.size());
  for (std::size_t i = 0; i < bit_ids.size(); ++i) {
    auto it = sample.find(bit_ids[i]);
    if (it == sample.end()) fail("NoSuchVertex", "sample misses a fitted bit");
    if (it->second & 1) mask |= 1ull << (base + i);
  }
  return mask;
}

inline OutcomeBitExpr expr_from_solution(std::uint64_t solution,
                                         const std::vector<int>& bit_ids, int base) {
  OutcomeBitExpr e;
  for (std::size_t i = 0; i < bit_ids.size(); ++i) {
    if (solution & (1ull << (base + i))) e.bits.insert(bit_ids[i]);
  }
  e.constant = static_cast<int>((solution >> (base + bit_ids.size())) & 1ull);
  return e;
}

// Fit rhs = c0 + XOR_{i in on-bits} c_i; returns the affine expression with
// free coefficients zero, or nothing if the samples are inconsistent.
inline std::optional<OutcomeBitExpr> fit_affine(const std::vector<std::map<int, int>>& samples,
                                                const std::vector<int>& rhs,
                                                const std::vector<int>& bit_ids) {
  Gf2System sys(static_cast<int>(bit_ids.size()) + 1);
  for (std::size_t s = 0; s < samples.size(); ++s) {
    sys.add(affine_row(samples[s], bit_ids, 0), rhs[s]);
  }
  auto sol = sys.solve();
  if (!sol) return std::nullopt;
  OutcomeBitExpr e = expr_from_solution(*sol, bit_ids, 0);
  for (std::size_t s = 0; s < samples.size(); ++s) {
    if (e.eval(samples[s]) != (rhs[s] & 1)) return std::nullopt;
  }
  return e;
}

}  // namespace detail

// ---- parameterized catalog graphs ------------------------------------------

// One measured input feeding one output: the elementary random unitary
// H Z^m Z(phi).
inline Gadget wire_gadget(double phi) {
  Gadget g;
  g.name = "wire";
  g.graph.vertices = {1, 2};
  g.graph.edges = {make_edge(1, 2)};
  g.graph.inputs = {1};
  g.graph.outputs = {2};
  g.graph.measurements[1] = xy(phi);
  g.graph.validate();
  g.claim.qubits = 1;
  g.claim.factors = {sym_rot_z(0, phi, OutcomeBitExpr::one()),
                     sym_pauli_z(0, OutcomeBitExpr::bit(1)),
                     sym_hadamard(0, OutcomeBitExpr::one())};
  return g;
}

// Five-vertex line implementing Z^{m1+m3} X^{m2+m4} Z(theta)^{m2+1}.
inline Gadget zrot_gadget(double theta) {
  Gadget g;
  g.name = "zrot";
  g.graph.vertices = {1, 2, 3, 4, 5};
  for (int v = 1; v <= 4; ++v) g.graph.edges.insert(make_edge(v, v + 1));
  g.graph.inputs = {1};
  g.graph.outputs = {5};
  g.graph.measurements[1] = xy(theta / 2.0);
  g.graph.measurements[2] = xy(0.0);
  g.graph.measurements[3] = xy(theta / 2.0);
  g.graph.measurements[4] = xy(0.0);
  g.graph.validate();
  g.claim.qubits = 1;
  g.claim.factors = {sym_rot_z(0, theta, OutcomeBitExpr::bit_plus_one(2)),
                     sym_pauli_x(0, OutcomeBitExpr::bit(2) ^ OutcomeBitExpr::bit(4)),
                     sym_pauli_z(0, OutcomeBitExpr::bit(1) ^ OutcomeBitExpr::bit(3))};
  return g;
}

// Five-vertex line implementing Z^{m3} X^{m2+m4} X(theta)^{m3+1} Z^{m1}.
inline Gadget xrot_gadget(double theta) {
  Gadget g;
  g.name = "xrot";
  g.graph.vertices = {1, 2, 3, 4, 5};
  for (int v = 1; v <= 4; ++v) g.graph.edges.insert(make_edge(v, v + 1));
  g.graph.inputs = {1};
  g.graph.outputs = {5};
  g.graph.measurements[1] = xy(0.0);
  g.graph.measurements[2] = xy(theta / 2.0);
  g.graph.measurements[3] = xy(0.0);
  g.graph.measurements[4] = xy(theta / 2.0);
  g.graph.validate();
  g.claim.qubits = 1;
  g.claim.factors = {sym_pauli_z(0, OutcomeBitExpr::bit(1)),
                     sym_rot_x(0, theta, OutcomeBitExpr::bit_plus_one(3)),
                     sym_pauli_x(0, OutcomeBitExpr::bit(2) ^ OutcomeBitExpr::bit(4)),
                     sym_pauli_z(0, OutcomeBitExpr::bit(3))};
  return g;
}

namespace detail {

inline OpenGraph two_qubit_graph() {
  OpenGraph g;
  g.vertices = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
  g.edges = {make_edge(1, 2), make_edge(2, 10), make_edge(3, 4),  make_edge(4, 11),
             make_edge(5, 10), make_edge(5, 11), make_edge(5, 6), make_edge(6, 7),
             make_edge(7, 8),  make_edge(8, 9)};
  g.inputs = {1, 3};
  g.outputs = {10, 11};
  g.measurements[1] = xy(0.0);
  g.measurements[2] = xy(0.0);
  g.measurements[3] = xy(0.0);
  g.measurements[4] = xy(0.0);
  g.measurements[5] = xy(pi / 4.0);
  g.measurements[6] = xy(0.0);
  g.measurements[7] = xy(pi / 4.0);
  g.measurements[8] = xy(0.0);
  g.measurements[9] = xy(pi / 2.0);
  g.validate();
  return g;
}

// Claim skeleton of the two-qubit coupler; `corr` is the exponent of the
// correlated Z x Z tail. Qubit 0 is the upper wire (output 10), qubit 1 the
// lower (output 11). The coupler realizes a unitary only on the half of the
// branches where the CZ block fires (its ancilla chain otherwise projects
// onto a Z x Z parity eigenspace), so the block's exponent is the plain
// chain bit m6: constantly one on the realizable half.
inline SymbolicUnitary two_qubit_claim(const OutcomeBitExpr& corr) {
  const OutcomeBitExpr cz_bit = OutcomeBitExpr::bit(6);
  SymbolicUnitary su;
  su.qubits = 2;
  su.factors = {sym_pauli_z(0, OutcomeBitExpr::bit(1)),
                sym_pauli_z(1, OutcomeBitExpr::bit(3)),
                sym_pauli_x(0, OutcomeBitExpr::bit(2)),
                sym_pauli_x(1, OutcomeBitExpr::bit(4)),
                sym_cz(0, 1, cz_bit),
                sym_rot_z(0, pi / 2.0, cz_bit),
                sym_rot_z(1, pi / 2.0, cz_bit),
                sym_pauli_z(0, corr),
                sym_pauli_z(1, corr)};
  return su;
}

}  // namespace detail

// Two-wire coupler whose branches realize Pauli corrections, a correlated
// Z(pi/2) x Z(pi/2) CZ block, and a correlated Z x Z pair whose exponent is
// discovered from the branch data.
inline const Gadget& two_qubit_gadget() {
  static const Gadget cached = [] {
    Gadget g;
    g.name = "two_qubit";
    g.graph = detail::two_qubit_graph();
    auto branches = enumerate_branches(g.graph);
    const std::vector<int> measured = g.graph.measured_vertices();
    std::vector<std::map<int, int>> samples;
    std::vector<int> rhs;
    for (const auto& br : branches) {
      if (br.op.norm() < 1e-10) continue;                     // vacuous branches
      if (!detail::proportional_to_unitary(br.op)) continue;  // projector half
      auto m = detail::outcome_map(measured, br.outcome);
      Mat op = br.op / br.op.norm();
      int found = -1;
      for (int bit = 0; bit < 2; ++bit) {
        OutcomeBitExpr e;
        e.constant = bit;
        Mat cand = evaluate_symbolic(detail::two_qubit_claim(e), m);
        if (detail::match_mod_phase(op, cand / cand.norm(), 1e-9)) {
          if (found >= 0) fail("NumericalError", "ambiguous correlated bit");
          found = bit;
        }
      }
      if (found < 0) fail("NumericalError", "no correlated bit reproduces a branch");
      samples.push_back(std::move(m));
      rhs.push_back(found);
    }
    if (samples.empty()) fail("NumericalError", "no realizable coupler branches");
    auto corr = detail::fit_affine(samples, rhs, {5, 7, 8, 9});
    if (!corr) fail("NumericalError", "correlated bit is not affine in m5,m7,m8,m9");
    g.claim = detail::two_qubit_claim(*corr);
    return g;
  }();
  return cached;
}

// ---- universal pair (16-bit claim family) -----------------------------------

namespace detail {

inline OpenGraph universal_pair_graph() {
  OpenGraph g;
  for (int v = 1; v <= 27; ++v) g.vertices.push_back(v);
  for (int v = 1; v <= 10; ++v) g.edges.insert(make_edge(v, v + 1));
  g.edges.insert(make_edge(11, 12));
  g.edges.insert(make_edge(12, 13));
  for (int v = 13; v <= 22; ++v) g.edges.insert(make_edge(v, v + 1));
  g.edges.insert(make_edge(12, 24));
  g.edges.insert(make_edge(24, 25));
  g.edges.insert(make_edge(25, 26));
  g.edges.insert(make_edge(26, 27));
  g.inputs = {1, 23};
  g.outputs = {11, 13};
  const double e = pi / 8.0;
  const double q = pi / 4.0;
  std::map<int, double> ang = {{1, e},  {2, 0},  {3, e},  {4, 0},  {5, 0},  {6, e},  {7, 0},
                               {8, e},  {9, 0},  {10, 0}, {12, q}, {14, 0}, {15, 0}, {16, e},
                               {17, 0}, {18, e}, {19, 0}, {20, 0}, {21, e}, {22, 0}, {23, e},
                               {24, 0}, {25, q}, {26, 0}, {27, pi / 2.0}};
  for (const auto& [v, a] : ang) g.measurements[v] = xy(a);
  g.validate();
  return g;
}

// Sixteen-factor family over bit ids 1..16; instantiating the ids with
// concrete expressions gives the discovered claim. Qubit 0 is output 11,
// qubit 1 is output 13. Factor order follows the graph's temporal order:
// each wire applies its Z(pi/4) pair before its X(pi/4) pair (the pi/8
// vertices nearest the input are Z-axis after Hadamard collection), and the
// diagonal coupler block acts on the outputs, hence last.
inline SymbolicUnitary universal_pair_template(const std::array<OutcomeBitExpr, 17>& m) {
  SymbolicUnitary su;
  su.qubits = 2;
  su.factors = {sym_pauli_z(0, m[16]),          sym_pauli_z(1, m[15]),
                sym_rot_z(0, pi / 4.0, m[8]),   sym_rot_z(1, pi / 4.0, m[7]),
                sym_pauli_z(0, m[12]),          sym_pauli_z(1, m[11]),
                sym_pauli_x(0, m[10]),          sym_pauli_x(1, m[9]),
                sym_rot_x(0, pi / 4.0, m[14]),  sym_rot_x(1, pi / 4.0, m[13]),
                sym_pauli_z(0, m[6]),           sym_pauli_z(1, m[5]),
                sym_pauli_x(0, m[4]),           sym_pauli_x(1, m[3]),
                sym_cz(0, 1, m[2]),             sym_rot_z(0, pi / 2.0, m[2]),
                sym_rot_z(1, pi / 2.0, m[2]),   sym_pauli_z(0, m[1]),
                sym_pauli_z(1, m[1])};
  return su;
}

inline std::array<OutcomeBitExpr, 17> bits_of(std::uint32_t word) {
  std::array<OutcomeBitExpr, 17> m;
  for (int k = 1; k <= 16; ++k) {
    m[k].constant = static_cast<int>((word >> (k - 1)) & 1u);
  }
  return m;
}

struct FamilyTable {
  std::vector<Mat> matrices;  // normalized, indexed by the 16-bit word

  // Smallest word whose matrix equals `target` (normalized) up to phase.
  // Scanning ascending makes the returned word a fixed gauge choice for the
  // degenerate words that share one gate.
  std::int32_t lookup(const Mat& target, double tol = 1e-8) const {
    for (std::uint32_t w = 0; w < matrices.size(); ++w) {
      if (match_mod_phase(target, matrices[w], tol)) return static_cast<std::int32_t>(w);
    }
    return -1;
  }
};

inline const FamilyTable& universal_pair_table() {
  static const FamilyTable table = [] {
    FamilyTable t;
    const std::uint32_t count = 1u << 16;
    t.matrices.resize(count);
    std::map<int, int> empty_outcome;
    for (std::uint32_t w = 0; w < count; ++w) {
      Mat u = evaluate_symbolic(universal_pair_template(bits_of(w)), empty_outcome);
      t.matrices[w] = u / u.norm();
    }
    return t;
  }();
  return table;
}

}  // namespace detail

// Twenty-seven-vertex pair sampler: two rotation wires, a correlated coupler,
// and pi/8 angles giving the sixteen-bit gate family. The map from raw
// outcomes to the family's bits is discovered by sampling.
inline const Gadget& universal_pair_gadget() {
  static const Gadget cached = [] {
    Gadget g;
    g.name = "universal_pair";
    g.graph = detail::universal_pair_graph();
    const auto& table = detail::universal_pair_table();
    auto plan = detail::ContractionPlan::build(g.graph);
    const std::vector<int> measured = g.graph.measured_vertices();

    std::mt19937_64 rng(20240817ull);
    const int fit_samples = 160;
    const int max_attempts = 64 * fit_samples;
    std::vector<std::map<int, int>> samples;
    std::vector<std::array<int, 17>> words;
    for (int s = 0; static_cast<int>(samples.size()) < fit_samples; ++s) {
      if (s >= max_attempts) fail("NumericalError", "too few realizable branches sampled");
      std::uint64_t outcome = rng() & ((1ull << measured.size()) - 1);
      OutcomeBranch br = compute_branch(g.graph, plan, outcome, {});
      if (br.op.norm() < 1e-10) continue;                     // vacuous branches
      if (!detail::proportional_to_unitary(br.op)) continue;  // projector branches
      Mat op = br.op / br.op.norm();
      std::int32_t w = table.lookup(op);
      if (w < 0) fail("NumericalError", "sampled branch is outside the gate family");
      std::array<int, 17> bits{};
      for (int k = 1; k <= 16; ++k) bits[k] = static_cast<int>((w >> (k - 1)) & 1);
      // The family word is only defined up to degeneracies: Pauli layers
      // commute through diagonal or same-axis factors, so several words share
      // one gate and the minimal matching word is a nonlinear gauge. Reduce
      // to canonical coordinates by eliminating one leader bit per
      // unconditional degeneracy: {1,5,6}, {15,11}, {16,12}, {9,3}, {10,4}.
      if (bits[1]) { bits[1] = 0; bits[5] ^= 1; bits[6] ^= 1; }
      if (bits[15]) { bits[15] = 0; bits[11] ^= 1; }
      if (bits[16]) { bits[16] = 0; bits[12] ^= 1; }
      if (bits[9]) { bits[9] = 0; bits[3] ^= 1; }
      if (bits[10]) { bits[10] = 0; bits[4] ^= 1; }
      samples.push_back(detail::outcome_map(measured, outcome));
      words.push_back(bits);
    }
    // Two degeneracies remain conditional: when a wire's X(pi/4) does not
    // fire (bit 13 resp. 14 is zero), the Z layers on its either side merge,
    // flipping bits {5,11} resp. {6,12} jointly. Their XORs are gauge
    // invariant and fitted everywhere; the members are pinned on the slices
    // where the rotation fires and extended affinely, which stays inside the
    // branch's degeneracy class on the complementary slices.
    // fit over samples selected by `gate` (gate < 0: all samples) the value
    // words[s][k] ^ words[s][k2] (k2 = 0 reads the always-zero slot).
    auto fit_bits = [&](int k, int k2, int gate) {
      std::vector<std::map<int, int>> sub;
      std::vector<int> rhs;
      for (std::size_t s = 0; s < samples.size(); ++s) {
        if (gate >= 0 && !words[s][gate]) continue;
        sub.push_back(samples[s]);
        rhs.push_back(words[s][k] ^ words[s][k2]);
      }
      auto e = detail::fit_affine(sub, rhs, measured);
      if (!e) fail("NumericalError", "family bit is not affine in the outcomes");
      return *e;
    };
    std::array<OutcomeBitExpr, 17> exprs;
    for (int k : {2, 3, 4, 7, 8, 13, 14}) exprs[k] = fit_bits(k, 0, -1);
    exprs[5] = fit_bits(5, 0, 13);
    exprs[11] = exprs[5] ^ fit_bits(5, 11, -1);
    exprs[6] = fit_bits(6, 0, 14);
    exprs[12] = exprs[6] ^ fit_bits(6, 12, -1);
    // Leader bits are identically zero in the canonical gauge.
    for (int k : {1, 9, 10, 15, 16}) exprs[k] = OutcomeBitExpr::zero();
    g.claim = detail::universal_pair_template(exprs);
    return g;
  }();
  return cached;
}

// ---- Hadamard pair ----------------------------------------------------------

// Thirteen-vertex chain: three rotation gadgets in series whose three
// half-turn rotations fire independently (the motivating failure case).
inline Gadget hadamard_naive_gadget();

// Fused Hadamard: the naive chain after X-type fusion of {2,7,10}. One new
// vertex (14) carries the merged outcome bit and controls the single H; the
// graph, planes, and ZY angles agree with the hand-drawn fused pattern, while
// XY angles and the bit labeling of vertex 14 differ by the local-unitary
// bookkeeping the fusion rewrite folds into measurement bases.
inline const Gadget& hadamard_fused_gadget() {
  static const Gadget cached = [] {
    Gadget g;
    g.name = "hadamard_fused";
    FusionResult fused = fuse_x(hadamard_naive_gadget().graph, {2, 7, 10},
                                {{2, 3}, {7, 8}, {10, 11}});
    if (!fused.byproducts.empty()) {
      fail("NumericalError", "fused Hadamard left unfolded byproducts");
    }
    g.graph = std::move(fused.graph);
    g.correlation_sets = {{2, 7, 10}};

    // Discover the outcome dependence of the branch family. Every branch is
    // a single-qubit Clifford of the form X^a Z^b H^c up to phase. The bit c
    // is affine in the outcomes, but a and b are not: Paulis crossing the
    // correlated rotations pick up products of outcome bits with c. The
    // family is still exactly expressible with affine exponents by keeping
    // the correlated Euler triple RotZ(pi/2)^c RotX(pi/2)^c RotZ(pi/2)^c
    // (equal to H^c up to global phase) and placing Pauli slots around and
    // inside it; the slots' exponents are read off from affine fits of the
    // observed Pauli frame on each c slice.
    auto branches = enumerate_branches(g.graph);
    const std::vector<int> measured = g.graph.measured_vertices();
    std::vector<std::map<int, int>> samples;
    std::vector<int> rhs_h, rhs_x, rhs_z;
    for (const auto& br : branches) {
      auto m = detail::outcome_map(measured, br.outcome);
      if (br.op.norm() < 1e-10) continue;  // vacuous: wrong correlation parity
      Mat op = br.op / br.op.norm();
      int fh = -1, fx = -1, fz = -1;
      for (int bh = 0; bh < 2; ++bh) {
        for (int bx = 0; bx < 2; ++bx) {
          for (int bz = 0; bz < 2; ++bz) {
            SymbolicUnitary cand;
            cand.qubits = 1;
            cand.factors = {sym_hadamard(0, {{}, bh}),
                            sym_pauli_z(0, {{}, bz}),
                            sym_pauli_x(0, {{}, bx})};
            Mat cm = evaluate_symbolic(cand, m);
            if (detail::match_mod_phase(op, cm / cm.norm(), 1e-9)) {
              if (fh >= 0) fail("NumericalError", "ambiguous fused frame");
              fh = bh;
              fx = bx;
              fz = bz;
            }
          }
        }
      }
      if (fh < 0) fail("NumericalError", "fused branch is not X^M Z^M' H^m");
      samples.push_back(std::move(m));
      rhs_h.push_back(fh);
      rhs_x.push_back(fx);
      rhs_z.push_back(fz);
    }
    if (samples.empty()) fail("NumericalError", "all fused branches vanish");
    auto eh = detail::fit_affine(samples, rhs_h, measured);
    if (!eh) fail("NumericalError", "fused Hadamard bit is not affine");
    // The observed Pauli frame (fx, fz) is affine on each c slice; fit the
    // four slice functions independently.
    std::vector<std::map<int, int>> slice0, slice1;
    std::vector<int> fx0, fz0, fx1, fz1;
    for (std::size_t s = 0; s < samples.size(); ++s) {
      if (rhs_h[s]) {
        slice1.push_back(samples[s]);
        fx1.push_back(rhs_x[s]);
        fz1.push_back(rhs_z[s]);
      } else {
        slice0.push_back(samples[s]);
        fx0.push_back(rhs_x[s]);
        fz0.push_back(rhs_z[s]);
      }
    }
    auto u1 = detail::fit_affine(slice0, fx0, measured);
    auto u2 = detail::fit_affine(slice0, fz0, measured);
    auto u3 = detail::fit_affine(slice1, fx1, measured);
    auto u4 = detail::fit_affine(slice1, fz1, measured);
    if (!u1 || !u2 || !u3 || !u4) {
      fail("NumericalError", "fused Pauli frame is not affine on the H slices");
    }
    // Claim matrix: X^{x3} Z^{z3} RotZ^c RotX^c X^{x1} Z^{z1} RotZ^c. Pushing
    // the inner Paulis out reproduces exactly u1/u2 on the c=0 slice and
    // u3/u4 on the c=1 slice for the slot choice below, so any affine
    // extension of the slice fits yields the same branch operators.
    OutcomeBitExpr x1slot = *u1 ^ *u2 ^ *u3 ^ *u4;
    OutcomeBitExpr z1slot = *u1 ^ *u3;
    OutcomeBitExpr x3slot = *u2 ^ *u3 ^ *u4;
    OutcomeBitExpr z3slot = *u1 ^ *u2 ^ *u3;
    g.claim.qubits = 1;
    g.claim.factors.clear();
    auto push_pauli = [&](bool x_axis, const OutcomeBitExpr& e) {
      if (e.bits.empty() && e.constant == 0) return;  // identically zero
      g.claim.factors.push_back(x_axis ? sym_pauli_x(0, e) : sym_pauli_z(0, e));
    };
    g.claim.factors.push_back(sym_rot_z(0, pi / 2, *eh));
    push_pauli(false, z1slot);
    push_pauli(true, x1slot);
    g.claim.factors.push_back(sym_rot_x(0, pi / 2, *eh));
    g.claim.factors.push_back(sym_rot_z(0, pi / 2, *eh));
    push_pauli(false, z3slot);
    push_pauli(true, x3slot);
    return g;
  }();
  return cached;
}

// ---- composition ------------------------------------------------------------

// Concatenate gadgets output-to-input. Each junction's wiring maps outputs of
// the earlier gadget to inputs of the later one; it must pair them in
// ascending order on both sides so claim qubits line up. Later gadgets'
// vertices are renumbered to fresh ids (identified inputs keep the earlier
// vertex's id), so outcome bits stay unambiguous.
inline Gadget compose_gadgets(const std::vector<Gadget>& sequence,
                              const std::vector<std::map<int, int>>& wirings = {}) {
  if (sequence.empty()) fail("BadWiring", "empty gadget sequence");
  Gadget acc = sequence[0];
  for (std::size_t s = 1; s < sequence.size(); ++s) {
    const Gadget& next = sequence[s];
    std::map<int, int> wiring;
    if (s - 1 < wirings.size() && !wirings[s - 1].empty()) {
      wiring = wirings[s - 1];
    } else {
      if (acc.graph.outputs.size() != next.graph.inputs.size()) {
        fail("BadWiring", "output arity does not match input arity");
      }
      std::vector<int> outs = acc.graph.outputs, ins = next.graph.inputs;
      std::sort(outs.begin(), outs.end());
      std::sort(ins.begin(), ins.end());
      for (std::size_t k = 0; k < outs.size(); ++k) wiring[outs[k]] = ins[k];
    }
    if (wiring.size() != acc.graph.outputs.size() ||
        wiring.size() != next.graph.inputs.size()) {
      fail("BadWiring", "wiring must pair every output with every input");
    }
    {  // Bijection onto next's inputs, order-preserving on both sides.
      std::set<int> hit;
      int prev_out = -1, prev_in = -1;
      for (const auto& [o, i] : wiring) {
        if (!acc.graph.is_output(o)) fail("BadWiring", "wiring source is not an output");
        if (!next.graph.is_input(i)) fail("BadWiring", "wiring target is not an input");
        if (!hit.insert(i).second) fail("BadWiring", "wiring reuses an input");
        if (o > prev_out && i < prev_in) fail("BadWiring", "wiring must preserve order");
        prev_out = o;
        prev_in = i;
      }
    }
    // Renumber `next`: identified inputs take the wired output's id, other
    // vertices get fresh ids above the current maximum.
    std::map<int, int> rename;
    for (const auto& [o, i] : wiring) rename[i] = o;
    int fresh = acc.graph.max_vertex_id();
    for (int v : next.graph.vertices) {
      if (!rename.count(v)) rename[v] = ++fresh;
    }
    OpenGraph merged;
    merged.vertices = acc.graph.vertices;
    for (int v : next.graph.vertices) {
      if (!next.graph.is_input(v)) merged.vertices.push_back(rename.at(v));
    }
    std::sort(merged.vertices.begin(), merged.vertices.end());
    merged.edges = acc.graph.edges;
    for (const Edge& e : next.graph.edges) {
      merged.edges.insert(make_edge(rename.at(e.first), rename.at(e.second)));
    }
    merged.inputs = acc.graph.inputs;
    for (int o : next.graph.outputs) merged.outputs.push_back(rename.at(o));
    merged.measurements = acc.graph.measurements;  // old outputs now interior
    for (const auto& [v, spec] : next.graph.measurements) {
      merged.measurements[rename.at(v)] = spec;
    }
    merged.validate();

    Gadget combined;
    combined.name = acc.name + "+" + next.name;
    combined.graph = std::move(merged);
    combined.claim.qubits = acc.claim.qubits;
    combined.claim.factors = acc.claim.factors;
    for (SymbolicFactor f : next.claim.factors) {
      OutcomeBitExpr renamed;
      renamed.constant = f.exponent.constant;
      for (int b : f.exponent.bits) renamed.bits.insert(rename.at(b));
      f.exponent = std::move(renamed);
      combined.claim.factors.push_back(std::move(f));
    }
    combined.correlation_sets = acc.correlation_sets;
    for (const auto& cs : next.correlation_sets) {
      std::vector<int> renamed;
      for (int v : cs) renamed.push_back(rename.at(v));
      combined.correlation_sets.push_back(std::move(renamed));
    }
    acc = std::move(combined);
  }
  return acc;
}

inline Gadget hadamard_naive_gadget() {
  Gadget g = compose_gadgets({zrot_gadget(pi / 2.0), xrot_gadget(pi / 2.0),
                              zrot_gadget(pi / 2.0)});
  g.name = "hadamard_naive";
  return g;
}

// All seven catalog gadgets with representative parameter values.
inline std::vector<Gadget> gadget_catalog() {
  return {wire_gadget(0.4),      zrot_gadget(0.7),        xrot_gadget(0.7),
          two_qubit_gadget(),    universal_pair_gadget(), hadamard_naive_gadget(),
          hadamard_fused_gadget()};
}

// ---- verification -----------------------------------------------------------

enum class VerifyKind { Exhaustive, Sampled };

struct VerifyOptions {
  VerifyKind kind = VerifyKind::Exhaustive;
  std::uint64_t samples = 0;  // Sampled only
  std::uint64_t seed = 0;     // Sampled only
  double tol = 1e-9;
  unsigned threads = 0;
};

struct GadgetVerifyReport {
  std::string name;
  std::uint64_t total = 0;
  std::uint64_t matched = 0;
  std::uint64_t vacuous = 0;     // zero-probability branches (no claim to check)
  std::uint64_t nonunitary = 0;  // projector branches (coupler chains), reported apart
  std::vector<std::uint64_t> failures;
  bool pass() const { return failures.empty(); }
};

inline GadgetVerifyReport verify_gadget(const Gadget& g, const VerifyOptions& opt = {}) {
  GadgetVerifyReport rep;
  rep.name = g.name;
  auto plan = detail::ContractionPlan::build(g.graph);
  const std::vector<int> measured = g.graph.measured_vertices();
  if (opt.kind == VerifyKind::Exhaustive && measured.size() > 25) {
    fail("TooLarge", "exhaustive verification needs at most 2^25 branches");
  }

  struct Tally {
    std::uint64_t matched = 0, vacuous = 0, nonunitary = 0;
    std::vector<std::uint64_t> failures;
  };
  auto check_outcome = [&](std::uint64_t outcome, Tally& tally) {
    OutcomeBranch br = compute_branch(g.graph, plan, outcome, {});
    if (br.op.norm() < 1e-10) {
      ++tally.vacuous;
      return;
    }
    if (!detail::proportional_to_unitary(br.op)) {
      ++tally.nonunitary;
      return;
    }
    auto m = detail::outcome_map(measured, outcome);
    Mat cm = evaluate_symbolic(g.claim, m);
    if (detail::match_mod_phase(br.op / br.op.norm(), cm / cm.norm(), opt.tol)) {
      ++tally.matched;
    } else {
      tally.failures.push_back(outcome);
    }
  };

  std::vector<Tally> tallies;
  if (opt.kind == VerifyKind::Exhaustive) {
    rep.total = 1ull << measured.size();
    unsigned workers = resolve_thread_count(opt.threads);
    if (rep.total < 2048) workers = 1;
    tallies.resize(workers);
    if (workers <= 1) {
      for (std::uint64_t o = 0; o < rep.total; ++o) check_outcome(o, tallies[0]);
    } else {
      std::vector<std::thread> pool;
      for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          for (std::uint64_t o = w; o < rep.total; o += workers) {
            check_outcome(o, tallies[w]);
          }
        });
      }
      for (auto& t : pool) t.join();
    }
  } else {
    if (opt.samples == 0) fail("BadArity", "sampled verification needs a sample count");
    rep.total = opt.samples;
    std::mt19937_64 rng(opt.seed);
    const std::uint64_t mask =
        measured.size() >= 64 ? ~0ull : ((1ull << measured.size()) - 1);
    tallies.resize(1);
    for (std::uint64_t s = 0; s < opt.samples; ++s) {
      check_outcome(rng() & mask, tallies[0]);
    }
  }
  for (const Tally& t : tallies) {
    rep.matched += t.matched;
    rep.vacuous += t.vacuous;
    rep.nonunitary += t.nonunitary;
    rep.failures.insert(rep.failures.end(), t.failures.begin(), t.failures.end());
  }
  std::sort(rep.failures.begin(), rep.failures.end());
  return rep;
}

inline nlohmann::json verify_report_to_json(const GadgetVerifyReport& rep) {
  return {{"name", rep.name},
          {"total", rep.total},
          {"matched", rep.matched},
          {"vacuous", rep.vacuous},
          {"nonunitary", rep.nonunitary},
          {"failures", rep.failures},
          {"pass", rep.pass()}};
}

// ---- inverse closure of the universal family --------------------------------

struct InverseClosureReport {
  int checked = 0;
  int closed = 0;  // cases where some word realizes the inverse up to phase
  int restricted_checked = 0;  // words with the coupler and Z(pi/4) layer idle
  int restricted_closed = 0;
  bool pass() const {
    return restricted_checked > 0 && restricted_checked == restricted_closed;
  }
};

// For random family words, search (over the same family) for a word whose
// gate equals the inverse up to phase. Angle-sign flips absorb into Pauli
// conjugations only where Pauli slots flank the factor, so exact closure
// holds on the subfamily whose coupler and Z(pi/4) layer idle (bits 2, 7, 8
// zero): there the X(pi/4) signs absorb into the neighboring Z slots. For
// the full family the adjoint reverses the coupler's position and the
// rotation-layer order, and the closed fraction drops well below one; the
// report carries both tallies.
inline InverseClosureReport family_inverse_closure(int count, std::uint64_t seed) {
  const auto& table = detail::universal_pair_table();
  InverseClosureReport rep;
  std::mt19937_64 rng(seed);
  auto closed_under_inverse = [&](std::uint32_t w) {
    Mat inv = table.matrices[w].adjoint();
    inv /= inv.norm();
    std::int32_t found = table.lookup(inv);
    return found >= 0 && detail::match_mod_phase(table.matrices[found], inv, 1e-8);
  };
  const std::uint32_t idle_mask =
      ~((1u << 1) | (1u << 6) | (1u << 7));  // family bits 2, 7, 8 idle
  for (int c = 0; c < count; ++c) {
    std::uint32_t w = static_cast<std::uint32_t>(rng() & 0xFFFFu);
    ++rep.checked;
    if (closed_under_inverse(w)) ++rep.closed;
    ++rep.restricted_checked;
    if (closed_under_inverse(w & idle_mask)) ++rep.restricted_closed;
  }
  return rep;
}

// ---- shift decomposition ----------------------------------------------------

struct ShiftGadgetStep {
  std::string kind;  // "cz", "zrot", or "xrot"
  double angle = 0.0;
  std::vector<int> qubits;  // one qubit, or the CZ pair
};

struct ShiftDecomposition {
  int n = 0;
  // Swaps in written order (leftmost applied last).
  std::vector<std::pair<int, int>> swaps;
  // Elementary gadget sequence, applied first to last.
  std::vector<ShiftGadgetStep> sequence;
  // Per-H rotation index triples whose outcome bits must be X-fused.
  std::vector<std::array<int, 3>> correlation_sets;
  int gadgets_per_swap = 21;  // 3 CZ + 18 rotations
  std::uint64_t total_gadgets = 0;
};

// Swap network shifting an even-width register by one position using two
// ancillas: S_{n-2,n+1} S_{n-1,n+2} S_{1,2} ... S_{n-2,n-1}. Each swap
// expands as three CZ-conjugated-by-H blocks and each H as
// Z(pi/2) X(pi/2) Z(pi/2).
inline ShiftDecomposition shift_decomposition(int n) {
  if (n < 4 || n % 2 != 0) fail("BadArity", "shift needs an even width of at least 4");
  ShiftDecomposition d;
  d.n = n;
  d.swaps.emplace_back(n - 2, n + 1);
  d.swaps.emplace_back(n - 1, n + 2);
  for (int i = 1; i <= n - 2; ++i) d.swaps.emplace_back(i, i + 1);

  auto emit_h = [&](int q) {
    int base = static_cast<int>(d.sequence.size());
    d.sequence.push_back({"zrot", pi / 2.0, {q}});
    d.sequence.push_back({"xrot", pi / 2.0, {q}});
    d.sequence.push_back({"zrot", pi / 2.0, {q}});
    d.correlation_sets.push_back({base, base + 1, base + 2});
  };
  auto emit_cnot = [&](int control, int target) {
    emit_h(target);
    d.sequence.push_back({"cz", 0.0, {control, target}});
    emit_h(target);
  };
  // Applied first to last: the written product runs right-to-left.
  for (auto it = d.swaps.rbegin(); it != d.swaps.rend(); ++it) {
    const auto [i, j] = *it;
    emit_cnot(i, j);
    emit_cnot(j, i);
    emit_cnot(i, j);
  }
  d.total_gadgets = static_cast<std::uint64_t>(d.gadgets_per_swap) * d.swaps.size();
  return d;
}

// Repetitions after which the iterated two-layer circuit forms an
// epsilon-approximate t-design (log base 2 throughout):
// ceil(C * ceil(log2 4t)^2 * t^5 * t^3.1 * (n t + log2(1/epsilon))).
inline std::uint64_t bhh_repetitions(int n, int t, double epsilon, double C) {
  const double lg = std::ceil(std::log2(4.0 * static_cast<double>(t)));
  const double poly = std::pow(static_cast<double>(t), 5.0) *
                      std::pow(static_cast<double>(t), 3.1);
  const double tail = static_cast<double>(n) * static_cast<double>(t) +
                      std::log2(1.0 / epsilon);
  return static_cast<std::uint64_t>(std::ceil(C * lg * lg * poly * tail));
}

inline nlohmann::json gadget_to_json(const Gadget& g) {
  return {{"name", g.name},
          {"graph", graph_to_json(g.graph)},
          {"claim", symbolic_to_json(g.claim)},
          {"correlation_sets", g.correlation_sets}};
}

inline nlohmann::json shift_to_json(const ShiftDecomposition& d) {
  nlohmann::json swaps = nlohmann::json::array();
  for (const auto& [i, j] : d.swaps) swaps.push_back({i, j});
  nlohmann::json seq = nlohmann::json::array();
  for (const auto& s : d.sequence) {
    seq.push_back({{"kind", s.kind}, {"angle", s.angle}, {"qubits", s.qubits}});
  }
  return {{"n", d.n},
          {"swaps", swaps},
          {"sequence", seq},
          {"correlation_sets", d.correlation_sets},
          {"gadgets_per_swap", d.gadgets_per_swap},
          {"total_gadgets", d.total_gadgets}};
}

}  // namespace mbqc
