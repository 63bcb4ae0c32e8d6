#pragma once

// Pauli-basis fusion projections as graph rewrite rules. Fusing a vertex set A
// replaces it by a single vertex alpha whose outcome stands for the common
// outcome imposed on A. The Z fusion is a pure rewrite; X and Y fusions
// compose local complementations first and leave local-unitary byproducts,
// which are folded into measurement-plane/angle changes wherever possible and
// otherwise reported explicitly.

#include <json.hpp>

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "mbqc/core.hpp"
#include "mbqc/gates.hpp"
#include "mbqc/graph.hpp"
#include "mbqc/statevector.hpp"

namespace mbqc {

// One single-qubit correction factor. `order` is the application index
// (0 = applied first); a byproduct list is arranged so that it composes
// right-to-left, i.e. later list entries are applied earlier.
struct LocalUnitary {
  int vertex = 0;
  char axis = 'Z';        // 'X', 'Y' or 'Z'
  bool rotation = false;  // true: rotation by `angle`; false: plain Pauli
  double angle = 0.0;
  int order = 0;
};

inline Mat2 local_unitary_matrix(const LocalUnitary& u) {
  if (u.rotation) {
    switch (u.axis) {
      case 'X': return rot_x(u.angle);
      case 'Y': return rot_y(u.angle);
      default: return rot_z(u.angle);
    }
  }
  switch (u.axis) {
    case 'X': return pauli_x();
    case 'Y': return pauli_y();
    default: return pauli_z();
  }
}

struct FusionResult {
  OpenGraph graph;
  std::vector<LocalUnitary> byproducts;          // residual corrections only
  std::map<int, MeasurementSpec> updated_specs;  // folded changes, incl. alpha
};

namespace detail {

// Tries to absorb a net correction u into a measurement spec: finds a spec S'
// whose outcome bras equal bra(spec, m) * u up to per-outcome phases. The
// original plane is preferred when both representations exist.
inline std::optional<MeasurementSpec> fold_into_spec(const MeasurementSpec& spec, const Mat2& u,
                                                     double tol = 1e-9) {
  const RowVec2 b0 = measurement_bra(spec, 0) * u;
  const RowVec2 b1 = measurement_bra(spec, 1) * u;
  auto matches = [&](const MeasurementSpec& cand) {
    for (int m = 0; m < 2; ++m) {
      const RowVec2 want = measurement_bra(cand, m);
      const RowVec2& got = (m == 0) ? b0 : b1;
      cplx overlap = got(0) * std::conj(want(0)) + got(1) * std::conj(want(1));
      if (std::abs(overlap) < 1.0 - tol) return false;
    }
    return true;
  };
  std::vector<MeasurementSpec> candidates;
  if (std::abs(b0(0)) > tol) {
    candidates.push_back(xy(std::arg(b0(1) / b0(0))));
  }
  // ZY form: b0 ~ e^{i psi} (cos(f/2), -i sin(f/2)).
  {
    double c = std::abs(b0(0));
    double psi = (c > tol) ? std::arg(b0(0)) : std::arg(b0(1) * cplx(0, 1));
    double s = (b0(1) * std::polar(1.0, -psi) * cplx(0, 1)).real();
    candidates.push_back(zy(2.0 * std::atan2(s, c)));
  }
  if (spec.plane == Plane::ZY) std::reverse(candidates.begin(), candidates.end());
  for (const auto& cand : candidates) {
    if (matches(cand)) return cand;
  }
  return std::nullopt;
}

inline bool specs_close(const MeasurementSpec& a, const MeasurementSpec& b,
                        double tol = 1e-12) {
  if (a.plane != b.plane) return false;
  double d = std::abs(a.angle - b.angle);
  return d < tol || std::abs(d - two_pi) < tol;
}

// Folds the longest last-applied run of factors into the spec; the unfolded
// leading factors (applied before the folded run) are returned as residual.
struct FoldOutcome {
  MeasurementSpec spec;
  std::vector<LocalUnitary> residual;  // application order preserved
  bool changed = false;
};

inline FoldOutcome fold_factors(const MeasurementSpec& spec,
                                const std::vector<LocalUnitary>& factors) {
  const std::size_t k = factors.size();
  for (std::size_t j = 0; j <= k; ++j) {
    // Net of factors j..k-1 in matrix order (last applied leftmost).
    Mat2 net = Mat2::Identity();
    for (std::size_t i = j; i < k; ++i) net = local_unitary_matrix(factors[i]) * net;
    auto folded = fold_into_spec(spec, net);
    if (!folded) continue;
    FoldOutcome out;
    out.spec = *folded;
    out.residual.assign(factors.begin(), factors.begin() + static_cast<std::ptrdiff_t>(j));
    out.changed = (j < k) && !specs_close(*folded, spec);
    return out;
  }
  FoldOutcome out;  // nothing folds (cannot happen for j == k, kept for safety)
  out.spec = spec;
  out.residual = factors;
  return out;
}

enum class FusionBasis { Z, X, Y };

inline std::set<int> neighbor_set(const OpenGraph& g, int v) {
  auto n = g.neighbors(v);
  return {n.begin(), n.end()};
}

// The X/Y fusions are evaluated from their exact basis-rotation forms:
//   X: Y(pi/2)_alpha diag(1,(-1)^{|A|+1}) Fz prod_a Y(-pi/2)_a
//   Y: X(-pi/2)_alpha diag(1,i^{|A|-1})  Fz prod_a X(pi/2)_a
// where Fz keeps only equal computational outcomes on A and re-emits them on
// alpha. Per-vertex corrections are tracked exactly (matrix order, global
// phase dropped); each X(pi/2) factor adjacent to the state converts into a
// local complementation plus Z(pi/2) spills on the old neighborhood,
//   X(pi/2)_a |G> ~ prod_{x in N(a)} Z(pi/2)_x |tau_a(G)>,
// and the same identity inserted backwards realizes the extra complementation
// about the chosen neighbor b^a. Corrections left on fused vertices pass the
// equal-outcome projection via their diagonal/antidiagonal split: an
// antidiagonal part X_a acts on the rewritten graph state as the Z string over
// N(a) (stabilizer), so every term becomes diagonal. A two-term mixture is
// reduced to one local factor through a remaining-graph stabilizer when
// possible, otherwise the fusion is rejected as unsupported.
inline FusionResult fuse_impl(const OpenGraph& g, const std::vector<int>& fused,
                              FusionBasis basis, const std::map<int, int>& neighbor_map) {
  constexpr double tol = 1e-9;
  if (fused.empty()) fail("NoSuchVertex", "fusion set must be non-empty");
  std::set<int> a_set(fused.begin(), fused.end());
  for (int a : a_set) {
    if (!g.has_vertex(a)) fail("NoSuchVertex", "fusion vertex " + std::to_string(a));
    if (g.is_input(a)) fail("InputInFusionSet", "vertex " + std::to_string(a) + " is an input");
    if (g.is_output(a)) fail("InputInFusionSet", "vertex " + std::to_string(a) + " is an output");
  }
  if (basis == FusionBasis::X) {
    std::set<int> used;
    for (int a : a_set) {
      auto it = neighbor_map.find(a);
      if (it == neighbor_map.end()) {
        fail("BadNeighborChoice", "no neighbor chosen for vertex " + std::to_string(a));
      }
      int b = it->second;
      std::set<int> na = neighbor_set(g, a);
      if (!na.count(b)) fail("BadNeighborChoice", "chosen vertex is not a neighbor");
      if (a_set.count(b)) fail("BadNeighborChoice", "chosen neighbor lies in the fused set");
      if (g.is_input(b)) fail("BadNeighborChoice", "chosen neighbor is an input");
      for (int x : g.neighbors(b)) {
        if (x != a && a_set.count(x)) {
          fail("BadNeighborChoice", "neighbor touches other fused vertices");
        }
      }
      if (!used.insert(b).second) fail("BadNeighborChoice", "neighbor chosen for two vertices");
    }
  }

  // ---- rewrite stage --------------------------------------------------------
  OpenGraph cur = g;
  std::map<int, Mat2> pending;                     // net correction, matrix order
  std::map<int, std::vector<LocalUnitary>> tags;   // reportable factors, matrix order
  auto pend = [&](int v, const Mat2& m) {
    auto it = pending.find(v);
    if (it == pending.end()) {
      pending.emplace(v, m);
    } else {
      it->second = Mat2(it->second * m);  // new factors arrive next to the state
    }
  };
  auto pend_tag = [&](int v, char axis, bool rotation, double angle, const Mat2& m) {
    pend(v, m);
    if (!a_set.count(v)) tags[v].push_back({v, axis, rotation, angle, 0});
  };
  // X(pi/2)_v |cur> ~ prod_{x in N(v)} Z(pi/2)_x |tau_v(cur)>  (scalar dropped)
  auto absorb_rewrite = [&](int a) {
    auto na = cur.neighbors(a);
    pend(a, rot_x(-pi / 2.0));
    cur = local_complement(cur, a);
    for (int x : na) pend_tag(x, 'Z', true, pi / 2.0, rot_z(pi / 2.0));
  };
  // |cur> ~ X(-pi/2)_b prod_{x in N(b)} Z(pi/2)_x |tau_b(cur)>
  auto insert_rewrite = [&](int b) {
    auto nb = cur.neighbors(b);
    pend_tag(b, 'X', true, -pi / 2.0, rot_x(-pi / 2.0));
    for (int x : nb) pend_tag(x, 'Z', true, pi / 2.0, rot_z(pi / 2.0));
    cur = local_complement(cur, b);
  };

  if (basis == FusionBasis::X) {
    for (int a : a_set) pend(a, rot_y(-pi / 2.0));
    for (int a : a_set) {
      insert_rewrite(neighbor_map.at(a));
      absorb_rewrite(a);
    }
  } else if (basis == FusionBasis::Y) {
    for (int a : a_set) pend(a, rot_x(pi / 2.0));
    for (int a : a_set) absorb_rewrite(a);
  }

  // ---- fused graph shape ----------------------------------------------------
  std::set<int> odd;
  for (int a : a_set) {
    std::set<int> na = neighbor_set(cur, a);
    std::set<int> next;
    std::set_symmetric_difference(odd.begin(), odd.end(), na.begin(), na.end(),
                                  std::inserter(next, next.end()));
    odd.swap(next);
  }
  for (int a : a_set) odd.erase(a);
  const int alpha = g.max_vertex_id() + 1;

  OpenGraph out;
  for (int v : cur.vertices) {
    if (!a_set.count(v)) out.vertices.push_back(v);
  }
  out.vertices.push_back(alpha);
  for (const Edge& e : cur.edges) {
    if (!a_set.count(e.first) && !a_set.count(e.second)) out.edges.insert(e);
  }
  for (int v : odd) out.edges.insert(make_edge(alpha, v));
  out.inputs = cur.inputs;
  out.outputs = cur.outputs;
  for (const auto& [v, spec] : cur.measurements) {
    if (!a_set.count(v)) out.measurements[v] = spec;
  }

  // ---- equal-outcome projection over A --------------------------------------
  // Terms: choice of diagonal vs antidiagonal part per fused vertex. Forced
  // except on "mixed" vertices (at most one supported).
  struct VertexSplit {
    cplx d0, d1;  // diagonal entries
    cplx a0, a1;  // antidiagonal entries (row 0 and row 1)
    int kind;     // 0 diag-only, 1 anti-only, 2 mixed
  };
  std::map<int, VertexSplit> split;
  int mixed_count = 0;
  for (int a : a_set) {
    Mat2 m = Mat2::Identity();
    auto it = pending.find(a);
    if (it != pending.end()) m = it->second;
    VertexSplit s{m(0, 0), m(1, 1), m(0, 1), m(1, 0), 0};
    double dn = std::max(std::abs(s.d0), std::abs(s.d1));
    double an = std::max(std::abs(s.a0), std::abs(s.a1));
    s.kind = (an < tol) ? 0 : (dn < tol) ? 1 : 2;
    if (s.kind == 2) ++mixed_count;
    split.emplace(a, s);
  }
  if (mixed_count > 1) {
    fail("Unsupported", "fusion corrections do not reduce to local byproducts");
  }

  struct Term {
    std::set<int> string;  // Z string outside the fused set
    cplx c0, c1;           // per-outcome coefficients
  };
  std::vector<Term> terms;
  for (int choice = 0; choice < (mixed_count ? 2 : 1); ++choice) {
    double sign = 1.0;
    std::set<int> s;
    cplx c0 = 1.0, c1 = 1.0;
    for (int a : a_set) {
      const VertexSplit& vs = split.at(a);
      bool anti = (vs.kind == 1) || (vs.kind == 2 && choice == 1);
      if (anti) {
        if (s.count(a)) sign = -sign;  // X_a passes the accumulated Z string
        std::set<int> na = neighbor_set(cur, a);
        std::set<int> next;
        std::set_symmetric_difference(s.begin(), s.end(), na.begin(), na.end(),
                                      std::inserter(next, next.end()));
        s.swap(next);
        c0 *= vs.a0;
        c1 *= vs.a1;
      } else {
        c0 *= vs.d0;
        c1 *= vs.d1;
      }
    }
    int in_a = 0;
    for (int v : s) {
      if (a_set.count(v)) ++in_a;
    }
    if (in_a % 2) c1 = -c1;  // Z components on A flip the outcome-1 branch
    Term t;
    for (int v : s) {
      if (!a_set.count(v)) t.string.insert(v);
    }
    t.c0 = sign * c0;
    t.c1 = sign * c1;
    terms.push_back(std::move(t));
  }
  if (terms.size() == 2 && terms[0].string == terms[1].string) {
    terms[0].c0 += terms[1].c0;
    terms[0].c1 += terms[1].c1;
    terms.pop_back();
  }
  terms.erase(std::remove_if(terms.begin(), terms.end(),
                             [&](const Term& t) {
                               return std::abs(t.c0) + std::abs(t.c1) < tol;
                             }),
              terms.end());
  if (terms.empty()) fail("NumericalError", "fusion corrections vanished");

  cplx kappa0 = 0.0, kappa1 = 0.0;
  if (terms.size() == 1) {
    for (int v : terms[0].string) pend_tag(v, 'Z', false, 0.0, pauli_z());
    kappa0 = terms[0].c0;
    kappa1 = terms[0].c1;
  } else {
    // Two Z strings: Z_{S2} = Z_{S1} Z_D. If some non-input remainder vertex w
    // has exactly D \ {w} as neighborhood, its stabilizer turns Z_D into i Y_w
    // and the mixture becomes one local factor on w.
    const std::set<int>& s1 = terms[0].string;
    std::set<int> d;
    std::set_symmetric_difference(s1.begin(), s1.end(), terms[1].string.begin(),
                                  terms[1].string.end(), std::inserter(d, d.end()));
    const cplx iu(0.0, 1.0);
    const Mat2 e0 = Mat2(terms[0].c0 * Mat2::Identity() + terms[1].c0 * iu * pauli_y());
    const Mat2 e1_raw = Mat2(terms[0].c1 * Mat2::Identity() + terms[1].c1 * iu * pauli_y());
    const double nrm0 = std::sqrt(std::abs((e0.adjoint() * e0).trace()));
    // The outcome-1 factor must be proportional to the outcome-0 one; whether
    // it is depends on the conjugation by Z when w neighbors alpha, so keep
    // searching candidates until one satisfies it.
    int w = -1;
    Mat2 e1;
    cplx ratio = 0.0;
    for (int cand : d) {
      if (out.is_input(cand)) continue;
      std::set<int> nr = neighbor_set(out, cand);
      nr.erase(alpha);
      std::set<int> want = d;
      want.erase(cand);
      if (nr != want) continue;
      Mat2 e1_cand = e1_raw;
      if (out.has_edge(alpha, cand)) e1_cand = Mat2(pauli_z() * e1_cand * pauli_z());
      cplx r = (e0.adjoint() * e1_cand).trace() / (nrm0 * nrm0);
      if ((e1_cand - r * e0).cwiseAbs().maxCoeff() > tol) continue;
      w = cand;
      e1 = e1_cand;
      ratio = r;
      break;
    }
    if (w < 0) fail("Unsupported", "fusion corrections do not reduce to local byproducts");
    const double scale = nrm0 / std::sqrt(2.0);
    Mat2 u = e0 / scale;
    if ((u * u.adjoint() - Mat2::Identity()).cwiseAbs().maxCoeff() > 1e-7) {
      fail("Unsupported", "fusion corrections do not reduce to local byproducts");
    }
    for (int v : s1) pend_tag(v, 'Z', false, 0.0, pauli_z());
    // Express u as a Y rotation or Y Pauli (mod phase).
    if (std::abs(u(0, 0)) > tol) {
      Mat2 un = Mat2(u * std::polar(1.0, -std::arg(u(0, 0))));
      bool rot_form = std::abs(un(0, 0).imag()) < tol && std::abs(un(1, 1).imag()) < tol &&
                      std::abs(un(0, 0) - un(1, 1)) < tol &&
                      std::abs(un(0, 1) + un(1, 0)) < tol && std::abs(un(1, 0).imag()) < tol;
      if (!rot_form) fail("Unsupported", "fusion corrections do not reduce to local byproducts");
      double theta = 2.0 * std::atan2(un(1, 0).real(), un(0, 0).real());
      if (std::abs(theta) > tol) pend_tag(w, 'Y', true, theta, rot_y(theta));
    } else {
      if (std::abs(u(0, 1) + u(1, 0)) > tol) {
        fail("Unsupported", "fusion corrections do not reduce to local byproducts");
      }
      pend_tag(w, 'Y', false, 0.0, pauli_y());
    }
    kappa0 = scale;
    kappa1 = ratio * scale;
  }
  if (std::abs(std::abs(kappa0) - std::abs(kappa1)) > tol) {
    fail("Unsupported", "fusion corrections do not reduce to local byproducts");
  }

  // ---- alpha measurement ----------------------------------------------------
  MeasurementSpec alpha_base = zy(0.0);
  Mat2 p_alpha = Mat2::Identity();
  const int asz = static_cast<int>(a_set.size());
  if (basis == FusionBasis::X) {
    alpha_base = xy(0.0);
    Mat2 dd = Mat2::Identity();
    dd(1, 1) = (asz % 2 == 0) ? -1.0 : 1.0;
    p_alpha = Mat2(rot_y(pi / 2.0) * dd);
  } else if (basis == FusionBasis::Y) {
    alpha_base = zy(pi / 2.0);
    Mat2 dd = Mat2::Identity();
    dd(1, 1) = std::pow(cplx(0.0, 1.0), (asz - 1) % 4 + 4);
    p_alpha = Mat2(rot_x(-pi / 2.0) * dd);
  }
  Mat2 kd = Mat2::Identity();
  kd(0, 0) = kappa0 / std::abs(kappa0);
  kd(1, 1) = kappa1 / std::abs(kappa1);
  auto alpha_spec = fold_into_spec(alpha_base, Mat2(p_alpha * kd));
  if (!alpha_spec) fail("Unsupported", "fusion corrections do not reduce to local byproducts");
  out.measurements[alpha] = *alpha_spec;

  // ---- fold corrections into specs, report the rest -------------------------
  FusionResult result;
  result.updated_specs[alpha] = *alpha_spec;
  std::vector<LocalUnitary> residual;
  for (auto& [v, list] : tags) {
    if (list.empty()) continue;
    if (out.is_output(v)) {
      for (const auto& f : list) residual.push_back(f);
      continue;
    }
    // fold_factors expects application order: reverse the matrix-order list.
    std::vector<LocalUnitary> app(list.rbegin(), list.rend());
    FoldOutcome fold = fold_factors(out.measurements.at(v), app);
    out.measurements[v] = fold.spec;
    if (fold.changed) result.updated_specs[v] = fold.spec;
    // Residual is in application order; emit matrix order (last applied first).
    for (auto it = fold.residual.rbegin(); it != fold.residual.rend(); ++it) {
      residual.push_back(*it);
    }
  }
  int n = static_cast<int>(residual.size());
  for (int i = 0; i < n; ++i) residual[i].order = n - 1 - i;
  result.byproducts = std::move(residual);
  out.validate();
  result.graph = std::move(out);
  return result;
}

}  // namespace detail

inline FusionResult fuse_z(const OpenGraph& g, const std::vector<int>& fused) {
  return detail::fuse_impl(g, fused, detail::FusionBasis::Z, {});
}

inline FusionResult fuse_x(const OpenGraph& g, const std::vector<int>& fused,
                           const std::map<int, int>& neighbor_map) {
  return detail::fuse_impl(g, fused, detail::FusionBasis::X, neighbor_map);
}

inline FusionResult fuse_y(const OpenGraph& g, const std::vector<int>& fused) {
  return detail::fuse_impl(g, fused, detail::FusionBasis::Y, {});
}

// Picks b^a for every fused vertex: a neighbor outside the fused set whose own
// neighborhood meets the set only in a. Candidates keeping the pair of
// complementations away from outputs are preferred, then lower ids.
inline std::map<int, int> choose_fusion_neighbors(const OpenGraph& g,
                                                  const std::vector<int>& fused) {
  std::set<int> a_set(fused.begin(), fused.end());
  std::map<int, int> choice;
  for (int a : a_set) {
    if (!g.has_vertex(a)) fail("NoSuchVertex", "fusion vertex " + std::to_string(a));
    int best = -1;
    bool best_clean = false;
    for (int b : g.neighbors(a)) {
      if (a_set.count(b) || g.is_input(b) || g.is_output(b)) continue;
      bool ok = true;
      bool clean = true;
      for (int x : g.neighbors(b)) {
        if (x != a && a_set.count(x)) ok = false;
        if (g.is_output(x)) clean = false;
      }
      if (!ok) continue;
      if (best < 0 || (clean && !best_clean)) {
        best = b;
        best_clean = clean;
      }
    }
    if (best < 0) {
      fail("NoValidNeighbor", "no admissible neighbor for vertex " + std::to_string(a));
    }
    choice[a] = best;
  }
  return choice;
}

inline nlohmann::json fusion_result_to_json(const FusionResult& r) {
  nlohmann::json j = graph_to_json(r.graph);
  nlohmann::json list = nlohmann::json::array();
  for (const auto& u : r.byproducts) {
    nlohmann::json entry{{"vertex", u.vertex}, {"gate", std::string(1, u.axis)}};
    if (u.rotation) {
      entry["angle"] = u.angle;
    } else {
      entry["angle"] = nullptr;
    }
    list.push_back(entry);
  }
  j["byproducts"] = list;
  return j;
}

}  // namespace mbqc
