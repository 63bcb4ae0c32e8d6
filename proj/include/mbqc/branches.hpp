#pragma once

// Outcome-branch enumeration: contracts an open graph state against its
// measurement bras, one outcome string at a time, keeping only the frontier
// of not-yet-projected qubits in memory. The input space is carried as a
// batch leg, so each branch yields the full linear map (2^|outputs| x
// 2^|inputs|) it induces.
//
// Outcome bit order: the k-th measured vertex in ascending id order owns bit
// k of the outcome index, least significant bit first.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "mbqc/core.hpp"
#include "mbqc/parallel.hpp"
#include "mbqc/statevector.hpp"

namespace mbqc {

struct OutcomeBranch {
  std::uint64_t outcome = 0;
  Mat op;          // rows: outputs in listed order (first = most significant bit)
  double p = 0.0;  // tr(op^dagger op) / 2^|inputs|
};

struct BranchOptions {
  // Local unitaries applied to the graph state before any measurement: a
  // measured vertex's bra becomes bra * U, an output row picks up U on its
  // qubit. Used to realize fusion byproducts that stay explicit.
  std::map<int, Mat2> pre_measurement;
  unsigned threads = 0;
};

namespace detail {

// Contraction plan fixed per graph: vertices activate in ascending id order;
// a measured vertex is projected out as soon as every incident edge has been
// applied, keeping the frontier small.
struct ContractionPlan {
  struct Step {
    int vertex = 0;
    int input_slot = -1;        // >= 0 when the vertex is an input
    std::vector<int> edges_to;  // already-active endpoints
    std::vector<int> project_after;
  };
  std::vector<Step> steps;
  std::vector<int> measured;  // ascending ids
  int n_inputs = 0;
  int n_outputs = 0;

  static ContractionPlan build(const OpenGraph& g) {
    ContractionPlan plan;
    plan.measured = g.measured_vertices();
    plan.n_inputs = static_cast<int>(g.inputs.size());
    plan.n_outputs = static_cast<int>(g.outputs.size());
    std::map<int, int> input_slot;
    for (std::size_t k = 0; k < g.inputs.size(); ++k) {
      input_slot[g.inputs[k]] = static_cast<int>(k);
    }
    std::vector<int> pending;  // activated, measured, not yet projected
    for (int v : g.vertices) {
      Step step;
      step.vertex = v;
      auto slot = input_slot.find(v);
      if (slot != input_slot.end()) step.input_slot = slot->second;
      for (int u : g.neighbors(v)) {
        if (u < v) step.edges_to.push_back(u);
      }
      if (g.measurements.count(v)) pending.push_back(v);
      // Everything whose last neighbor is now active is fully wired.
      for (auto it = pending.begin(); it != pending.end();) {
        std::vector<int> nbr = g.neighbors(*it);
        if (nbr.empty() || nbr.back() <= v) {
          step.project_after.push_back(*it);
          it = pending.erase(it);
        } else {
          ++it;
        }
      }
      plan.steps.push_back(std::move(step));
    }
    return plan;
  }
};

inline constexpr std::uint64_t kMaxFrontierEntries = 1ull << 26;

}  // namespace detail

// Contract one outcome string into its branch operator. `bra_for(v, m)`
// supplies the applied bra for measured vertex v at outcome bit m.
inline Mat contract_branch(const OpenGraph& g, const detail::ContractionPlan& plan,
                           std::uint64_t outcome,
                           const std::function<RowVec2(int, int)>& bra_for,
                           const std::map<int, Mat2>& output_unitaries = {}) {
  Vec data = Vec::Ones(1ull << plan.n_inputs);
  std::vector<int> active;  // vertex ids, activation order; leg i owns q bit a-1-i

  std::map<int, int> measured_rank;
  for (std::size_t k = 0; k < plan.measured.size(); ++k) {
    measured_rank[plan.measured[k]] = static_cast<int>(k);
  }
  auto leg_of = [&](int v) {
    for (std::size_t i = 0; i < active.size(); ++i) {
      if (active[i] == v) return static_cast<int>(i);
    }
    fail("NoSuchVertex", "vertex not active: " + std::to_string(v));
  };

  for (const auto& step : plan.steps) {
    {  // Activate: append a leg at the least significant position.
      const int a = static_cast<int>(active.size());
      const std::uint64_t old_size = data.size();
      if (old_size * 2 > detail::kMaxFrontierEntries) {
        fail("TooLarge", "contraction frontier exceeds memory budget");
      }
      Vec next(old_size * 2);
      const double plus = 1.0 / std::sqrt(2.0);
      for (std::uint64_t idx = 0; idx < old_size; ++idx) {
        cplx v = data(idx);
        if (step.input_slot >= 0) {
          std::uint64_t b = idx >> a;
          int in_bit = static_cast<int>((b >> (plan.n_inputs - 1 - step.input_slot)) & 1u);
          next(idx << 1) = (in_bit == 0) ? v : cplx(0);
          next((idx << 1) | 1) = (in_bit == 1) ? v : cplx(0);
        } else {
          next(idx << 1) = plus * v;
          next((idx << 1) | 1) = plus * v;
        }
      }
      data = std::move(next);
      active.push_back(step.vertex);
    }
    for (int u : step.edges_to) {  // Entangle with already-active neighbors.
      const int a = static_cast<int>(active.size());
      const std::uint64_t mu = 1ull << (a - 1 - leg_of(u));
      const std::uint64_t mv = 1;  // the fresh vertex owns the lowest bit
      for (std::uint64_t idx = 0; idx < static_cast<std::uint64_t>(data.size()); ++idx) {
        if ((idx & mu) && (idx & mv)) data(idx) = -data(idx);
      }
    }
    for (int v : step.project_after) {  // Project finished measured vertices.
      const int a = static_cast<int>(active.size());
      const int leg = leg_of(v);
      const int bitpos = a - 1 - leg;
      int m = static_cast<int>((outcome >> measured_rank.at(v)) & 1u);
      RowVec2 bra = bra_for(v, m);
      const std::uint64_t half = data.size() >> 1;
      const std::uint64_t low_mask = (1ull << bitpos) - 1;
      Vec next(half);
      for (std::uint64_t r = 0; r < half; ++r) {
        std::uint64_t high = (r & ~low_mask) << 1;
        std::uint64_t low = r & low_mask;
        std::uint64_t i0 = high | low;
        next(r) = bra(0) * data(i0) + bra(1) * data(i0 | (1ull << bitpos));
      }
      data = std::move(next);
      active.erase(active.begin() + leg);
    }
  }

  // Remaining legs are exactly the outputs; emit rows in listed output order.
  const int a = static_cast<int>(active.size());
  if (a != plan.n_outputs) fail("BadGraphIO", "unprojected non-output vertices remain");
  const std::uint64_t rows = 1ull << a;
  const std::uint64_t cols = 1ull << plan.n_inputs;
  std::vector<int> out_bit(g.outputs.size());
  for (std::size_t k = 0; k < g.outputs.size(); ++k) {
    int leg = leg_of(g.outputs[k]);
    out_bit[k] = a - 1 - leg;  // bit position in q of listed output k
  }
  Mat op(rows, cols);
  for (std::uint64_t b = 0; b < cols; ++b) {
    for (std::uint64_t q = 0; q < rows; ++q) {
      std::uint64_t row = 0;
      for (std::size_t k = 0; k < out_bit.size(); ++k) {
        row = (row << 1) | ((q >> out_bit[k]) & 1u);
      }
      op(row, b) = data((b << a) | q);
    }
  }
  for (std::size_t k = 0; k < g.outputs.size(); ++k) {
    auto it = output_unitaries.find(g.outputs[k]);
    if (it == output_unitaries.end()) continue;
    // Left-multiply the branch by a single-qubit unitary on output k
    // (listed order, first output = most significant row bit).
    const int nbits = static_cast<int>(g.outputs.size());
    const std::uint64_t mask = 1ull << (nbits - 1 - static_cast<int>(k));
    const Mat2& u = it->second;
    for (std::uint64_t r = 0; r < rows; ++r) {
      if (r & mask) continue;
      for (std::uint64_t c = 0; c < cols; ++c) {
        cplx a0 = op(r, c);
        cplx a1 = op(r | mask, c);
        op(r, c) = u(0, 0) * a0 + u(0, 1) * a1;
        op(r | mask, c) = u(1, 0) * a0 + u(1, 1) * a1;
      }
    }
  }
  return op;
}

// Branch operator for one outcome string, honoring pre-measurement unitaries.
inline OutcomeBranch compute_branch(const OpenGraph& g, const detail::ContractionPlan& plan,
                                    std::uint64_t outcome, const BranchOptions& opt) {
  auto bra_for = [&](int v, int m) -> RowVec2 {
    RowVec2 bra = measurement_bra(g.measurements.at(v), m);
    auto it = opt.pre_measurement.find(v);
    if (it != opt.pre_measurement.end()) bra = bra * it->second;
    return bra;
  };
  std::map<int, Mat2> output_unitaries;
  for (const auto& [v, u] : opt.pre_measurement) {
    if (g.is_output(v)) output_unitaries[v] = u;
  }
  OutcomeBranch br;
  br.outcome = outcome;
  br.op = contract_branch(g, plan, outcome, bra_for, output_unitaries);
  br.p = (br.op.adjoint() * br.op).trace().real() / static_cast<double>(1ull << plan.n_inputs);
  return br;
}

// Materialize every outcome branch (2^#measured of them).
inline std::vector<OutcomeBranch> enumerate_branches(const OpenGraph& g,
                                                     const BranchOptions& opt = {}) {
  g.validate();
  auto plan = detail::ContractionPlan::build(g);
  if (plan.measured.size() > 24) fail("TooLarge", "too many measured vertices to enumerate");
  const std::uint64_t count = 1ull << plan.measured.size();
  std::vector<OutcomeBranch> out(count);
  for (std::uint64_t m = 0; m < count; ++m) {
    out[m] = compute_branch(g, plan, m, opt);
  }
  return out;
}

}  // namespace mbqc
