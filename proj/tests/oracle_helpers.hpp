#pragma once

// Shared test oracles. The central one checks a fusion rewrite against first
// principles: enumerate the original graph's branches with the fusion bases
// substituted on the fused set, post-select the equal-outcome branches, and
// demand that they coincide (as a weighted multiset, each element up to a
// phase) with the branches of the rewritten graph under its reported
// byproducts. A seeded generator supplies random small graphs to feed it.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "mbqc/branches.hpp"
#include "mbqc/fusion.hpp"
#include "mbqc/graph.hpp"

namespace mbqc_test {

using namespace mbqc;

// Net pre-measurement matrix per vertex from a byproduct list (listed in
// right-to-left composition order: the first entry is applied last).
inline std::map<int, Mat2> byproduct_matrices(const std::vector<LocalUnitary>& list) {
  std::map<int, Mat2> nets;
  for (const auto& u : list) {
    auto [it, fresh] = nets.try_emplace(u.vertex, Mat2::Identity());
    it->second = it->second * local_unitary_matrix(u);
  }
  return nets;
}

inline bool ops_match_mod_phase(const Mat& a, const Mat& b, double tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  double na = a.squaredNorm(), nb = b.squaredNorm();
  double ov = std::abs((a.adjoint() * b).trace());
  return std::abs(na - nb) < tol && na + nb - 2.0 * ov < tol;
}

// True when the fused graph (with its byproducts) reproduces the original
// graph's equal-outcome post-selection in the given basis.
inline bool fusion_matches_postselection(const OpenGraph& g, const std::vector<int>& A,
                                         char basis, const std::map<int, int>& nb = {},
                                         double tol = 1e-9) {
  FusionResult fr = basis == 'Z'   ? fuse_z(g, A)
                    : basis == 'X' ? fuse_x(g, A, nb.empty() ? choose_fusion_neighbors(g, A) : nb)
                                   : fuse_y(g, A);
  BranchOptions opt;
  opt.pre_measurement = byproduct_matrices(fr.byproducts);
  auto lhs = enumerate_branches(fr.graph, opt);

  OpenGraph orig = g;
  MeasurementSpec bspec = basis == 'Z' ? zy(0.0) : basis == 'X' ? xy(0.0) : zy(pi / 2);
  for (int a : A) orig.measurements[a] = bspec;
  auto all = enumerate_branches(orig);
  std::vector<int> meas = orig.measured_vertices();
  std::vector<int> ranks;
  for (std::size_t k = 0; k < meas.size(); ++k) {
    for (int a : A) {
      if (meas[k] == a) ranks.push_back(static_cast<int>(k));
    }
  }
  std::vector<OutcomeBranch> rhs;
  double total = 0.0;
  for (auto& br : all) {
    int first = static_cast<int>((br.outcome >> ranks[0]) & 1);
    bool equal = true;
    for (int r : ranks) {
      if (((br.outcome >> r) & 1) != static_cast<std::uint64_t>(first)) equal = false;
    }
    if (!equal) continue;
    total += br.p;
    rhs.push_back(br);
  }
  for (auto& br : rhs) {
    br.p /= total;
    br.op /= std::sqrt(total);
  }
  if (lhs.size() != rhs.size()) return false;
  std::vector<bool> used(rhs.size(), false);
  for (const auto& l : lhs) {
    bool found = false;
    for (std::size_t j = 0; j < rhs.size(); ++j) {
      if (used[j]) continue;
      if (std::abs(l.p - rhs[j].p) < tol && ops_match_mod_phase(l.op, rhs[j].op, tol)) {
        used[j] = true;
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

struct FusionCase {
  OpenGraph graph;
  std::vector<int> fused;
  std::map<int, int> neighbors;  // x-basis choices; empty = engine picks
};

// The thirteen-step chain whose three-step runs collapse to single vertices
// under x fusion (the composed-rotation construction).
inline OpenGraph hadamard_chain_graph() {
  OpenGraph g;
  for (int v = 1; v <= 13; ++v) g.vertices.push_back(v);
  for (int v = 1; v <= 12; ++v) g.edges.insert(make_edge(v, v + 1));
  g.inputs = {1};
  g.outputs = {13};
  const double q = pi / 4.0;
  const double angles[12] = {q, 0, q, 0, 0, q, 0, q, q, 0, q, 0};
  for (int v = 1; v <= 12; ++v) g.measurements[v] = xy(angles[v - 1]);
  return g;
}

// Hand-built graphs covering the tricky correction routes: corrections on
// outputs, adjacent fused pairs, dense neighborhoods, expansion neighbors
// sharing vertices, and fully measured graphs.
inline std::vector<FusionCase> curated_fusion_cases() {
  std::vector<FusionCase> cases;
  {
    OpenGraph g;  // two chains joined only through the fusion
    g.vertices = {1, 2, 3, 4, 5, 6};
    g.edges = {make_edge(1, 2), make_edge(2, 3), make_edge(4, 5), make_edge(5, 6)};
    g.inputs = {1};
    g.outputs = {6};
    g.measurements[1] = xy(0.3);
    g.measurements[2] = xy(0.7);
    g.measurements[3] = xy(0.0);
    g.measurements[4] = xy(0.0);
    g.measurements[5] = xy(1.1);
    cases.push_back({g, {3, 4}, {}});
  }
  {
    OpenGraph g;  // plain path, interior pair
    g.vertices = {1, 2, 3, 4};
    g.edges = {make_edge(1, 2), make_edge(2, 3), make_edge(3, 4)};
    g.inputs = {1};
    g.outputs = {4};
    g.measurements[1] = xy(0.4);
    g.measurements[2] = xy(0.9);
    g.measurements[3] = xy(1.7);
    cases.push_back({g, {2, 3}, {}});
    cases.push_back({g, {2}, {{2, 3}}});
  }
  {
    OpenGraph g;  // short path: corrections land on the output
    g.vertices = {1, 2, 3};
    g.edges = {make_edge(1, 2), make_edge(2, 3)};
    g.inputs = {1};
    g.outputs = {3};
    g.measurements[1] = xy(0.6);
    g.measurements[2] = xy(2.1);
    cases.push_back({g, {2}, {}});
  }
  {
    OpenGraph g;  // two chains with both ends open
    g.vertices = {1, 2, 3, 4, 5, 6};
    g.edges = {make_edge(1, 2), make_edge(2, 3), make_edge(4, 5), make_edge(5, 6)};
    g.outputs = {1, 6};
    g.measurements[2] = xy(0.7);
    g.measurements[3] = xy(0.0);
    g.measurements[4] = xy(0.0);
    g.measurements[5] = xy(1.1);
    cases.push_back({g, {3, 4}, {}});
  }
  {
    OpenGraph g;  // star with an open centre
    g.vertices = {1, 2, 3};
    g.edges = {make_edge(1, 3), make_edge(2, 3)};
    g.outputs = {3};
    g.measurements[1] = xy(0.0);
    g.measurements[2] = xy(0.0);
    cases.push_back({g, {1, 2}, {}});
  }
  {
    OpenGraph g;  // triangle plus tail: dense adjacency
    g.vertices = {1, 2, 3, 4};
    g.edges = {make_edge(1, 2), make_edge(1, 3), make_edge(2, 3), make_edge(3, 4)};
    g.inputs = {1};
    g.outputs = {4};
    g.measurements[1] = xy(0.2);
    g.measurements[2] = xy(1.3);
    g.measurements[3] = xy(0.8);
    cases.push_back({g, {2}, {{2, 3}}});
  }
  {
    OpenGraph g;  // fused vertices adjacent to each other
    g.vertices = {1, 2, 3, 4, 5, 6};
    g.edges = {make_edge(1, 2), make_edge(2, 3), make_edge(4, 5),
               make_edge(5, 6), make_edge(2, 5)};
    g.inputs = {1};
    g.outputs = {6};
    g.measurements[1] = xy(0.3);
    g.measurements[2] = xy(0.7);
    g.measurements[3] = xy(1.1);
    g.measurements[4] = xy(1.9);
    g.measurements[5] = xy(2.6);
    cases.push_back({g, {2, 5}, {{2, 3}, {5, 4}}});
  }
  {
    OpenGraph g;  // expansion neighbor shares a further vertex with the fused one
    g.vertices = {1, 2, 3, 4, 5};
    g.edges = {make_edge(1, 2), make_edge(2, 3), make_edge(2, 4),
               make_edge(3, 4), make_edge(4, 5)};
    g.inputs = {1};
    g.outputs = {5};
    g.measurements[1] = xy(0.3);
    g.measurements[2] = xy(0.8);
    g.measurements[3] = xy(1.2);
    g.measurements[4] = xy(2.0);
    cases.push_back({g, {3}, {{3, 4}}});
  }
  {
    OpenGraph g;  // fully measured; exercises the stabilizer-resolution search
    g.vertices = {1, 2, 3, 4};
    g.edges = {make_edge(1, 2), make_edge(2, 3), make_edge(3, 4)};
    g.measurements[1] = xy(0.4);
    g.measurements[2] = zy(pi / 2);
    g.measurements[3] = zy(pi / 2);
    g.measurements[4] = xy(1.2);
    cases.push_back({g, {2, 3}, {}});
  }
  return cases;
}

// Random connected graph on 4..6 vertices: a spanning tree plus extra edges,
// one output, an optional input, uniform random angles.
inline OpenGraph random_graph(std::mt19937_64& rng) {
  auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  const int n = 4 + static_cast<int>(rng() % 3);
  OpenGraph g;
  for (int v = 1; v <= n; ++v) g.vertices.push_back(v);
  for (int v = 2; v <= n; ++v) {
    g.edges.insert(make_edge(1 + static_cast<int>(rng() % static_cast<unsigned>(v - 1)), v));
  }
  for (int i = 1; i <= n; ++i) {
    for (int j = i + 1; j <= n; ++j) {
      if (rng() % 3 == 0) g.edges.insert(make_edge(i, j));
    }
  }
  g.outputs = {n};
  if (rng() & 1) g.inputs = {1};
  for (int v = 1; v < n; ++v) {
    g.measurements[v] = (rng() % 4 == 0) ? zy(uniform() * two_pi) : xy(uniform() * two_pi);
  }
  return g;
}

// Draws random graphs and fusion sets until one satisfies the preconditions
// of `basis` and stays within the rewriter's supported correction class.
inline FusionCase next_random_case(std::mt19937_64& rng, char basis) {
  for (;;) {
    OpenGraph g = random_graph(rng);
    std::vector<int> meas;
    for (int v : g.measured_vertices()) {
      if (!g.is_input(v)) meas.push_back(v);
    }
    if (meas.size() < 2) continue;
    std::vector<int> A;
    std::size_t first = rng() % meas.size();
    A.push_back(meas[first]);
    if (rng() & 1) {
      std::size_t second = rng() % meas.size();
      if (second != first) A.push_back(meas[second]);
    }
    std::sort(A.begin(), A.end());
    try {
      FusionCase c{g, A, {}};
      if (basis == 'X') c.neighbors = choose_fusion_neighbors(g, A);
      FusionResult probe = basis == 'Z'   ? fuse_z(g, A)
                           : basis == 'X' ? fuse_x(g, A, c.neighbors)
                                          : fuse_y(g, A);
      (void)probe;
      return c;
    } catch (const Error&) {
      continue;  // precondition violated or outside the supported class
    }
  }
}

}  // namespace mbqc_test
