#pragma once

// Angle-pattern search over measured paths: constant-angle sweeps,
// single-angle scalar minimization, and multi-start multi-angle coordinate
// descent, all in the x = cos^2(angle) box coordinate. Every search is
// deterministic under its configuration (including the seed), and every
// reported minimum is re-checked against an independent frame-potential
// evaluation at the reported angles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mbqc/core.hpp"
#include "mbqc/designs.hpp"
#include "mbqc/ensemble.hpp"

namespace mbqc {

// ---------------------------------------------------------------------------
// Data shapes.

enum class SweepPattern { pi4, single_min, multi_min };

inline const char* sweep_pattern_name(SweepPattern p) {
  switch (p) {
    case SweepPattern::pi4: return "pi4";
    case SweepPattern::single_min: return "single_min";
    case SweepPattern::multi_min: return "multi_min";
  }
  return "?";
}

struct SweepPoint {
  int length = 0;
  int t = 1;
  SweepPattern pattern = SweepPattern::pi4;
  double delta_f = 0.0;  // frame potential minus the order-t bound
};

struct SweepCurve {
  std::vector<SweepPoint> points;
};

// CSV with full round-trip float precision; one row per point.
inline std::string sweep_to_csv(const SweepCurve& curve) {
  std::string out = "L,t,pattern,delta_f\n";
  for (const auto& p : curve.points) {
    out += std::to_string(p.length);
    out += ',';
    out += std::to_string(p.t);
    out += ',';
    out += sweep_pattern_name(p.pattern);
    out += ',';
    out += format_double(p.delta_f);
    out += '\n';
  }
  return out;
}

struct SearchConfig {
  int restarts = 32;
  std::uint64_t seed = 0;
  double coordinate_tol = 1e-10;  // on x = cos^2(angle)
  int max_iterations = 60;        // coordinate-descent sweeps per restart
  double f_tol = 1e-12;           // stop when a sweep improves F by less
};

inline void validate(const SearchConfig& cfg) {
  if (cfg.restarts < 1 || cfg.coordinate_tol <= 0.0 || cfg.max_iterations < 1 ||
      cfg.f_tol <= 0.0) {
    fail("BadConfig", "search configuration fields must be positive");
  }
}

struct SingleAngleResult {
  double angle = 0.0;  // best constant interior angle
  double x = 0.0;      // cos^2 of it
  double value = 0.0;  // frame potential there
};

struct MultiAngleResult {
  std::vector<double> angles;      // full pattern, endpoint angles pinned to 0
  std::vector<double> interior_x;  // cos^2 of the interior angles
  double value = 0.0;
};

// ---------------------------------------------------------------------------
// Evaluation plumbing.

namespace detail {

// Direct pair sum below ten steps, the interior-window recursion from there:
// the direct 4^L cost crosses the recursion's and both agree to 1e-8.
inline double path_frame_potential(const std::vector<double>& angles, int t) {
  if (angles.size() >= 10) return frame_potential_recursive(angles, t);
  return frame_potential(linear_cluster_ensemble(angles), t);
}

inline double angle_from_x(double x) {
  return std::acos(std::sqrt(std::clamp(x, 0.0, 1.0)));
}

// Pattern of the given length whose interior takes the given box coordinates;
// the two endpoint angles never enter the frame potential and stay at zero.
inline std::vector<double> pattern_from_interior(int length, const std::vector<double>& xs) {
  std::vector<double> angles(static_cast<std::size_t>(length), 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) angles[i + 1] = angle_from_x(xs[i]);
  return angles;
}

inline double eval_interior(int length, int t, const std::vector<double>& xs) {
  return path_frame_potential(pattern_from_interior(length, xs), t);
}

// Golden-section minimization on [lo, hi]; returns the best sampled point.
// Purely a function of its inputs, so searches replay bit-for-bit.
template <typename F>
inline std::pair<double, double> golden_section(F&& f, double lo, double hi, double xtol) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  const double invphi2 = 1.0 - invphi;
  double a = lo, b = hi;
  double h = b - a;
  double c = a + invphi2 * h;
  double d = a + invphi * h;
  double yc = f(c);
  double yd = f(d);
  while (h > xtol) {
    if (yc <= yd) {
      b = d;
      d = c;
      yd = yc;
      h = b - a;
      c = a + invphi2 * h;
      yc = f(c);
    } else {
      a = c;
      c = d;
      yc = yd;
      h = b - a;
      d = a + invphi * h;
      yd = f(d);
    }
  }
  return yc <= yd ? std::make_pair(c, yc) : std::make_pair(d, yd);
}

// Fractional part of the square root of the i-th prime: the classic
// badly-approximable directions for an additive low-discrepancy lattice.
inline double kronecker_alpha(int i) {
  int count = 0, p = 1;
  while (count <= i) {
    ++p;
    bool is_prime = true;
    for (int d = 2; d * d <= p; ++d) {
      if (p % d == 0) {
        is_prime = false;
        break;
      }
    }
    if (is_prime) ++count;
  }
  double s = std::sqrt(static_cast<double>(p));
  return s - std::floor(s);
}

// Restart initializers: the two known rational-x seeds first, then a seeded
// additive lattice over the box.
inline std::vector<std::vector<double>> start_points(int n, const SearchConfig& cfg) {
  std::vector<std::vector<double>> starts;
  starts.emplace_back(static_cast<std::size_t>(n), 0.5);
  {
    std::vector<double> s(static_cast<std::size_t>(n), 0.5);
    if (n >= 2) s[1] = 1.0 / 3.0;
    starts.push_back(std::move(s));
  }
  std::mt19937_64 rng(cfg.seed);
  std::vector<double> alpha(static_cast<std::size_t>(n));
  std::vector<double> offset(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    alpha[static_cast<std::size_t>(i)] = kronecker_alpha(i);
    offset[static_cast<std::size_t>(i)] =
        static_cast<double>(rng() >> 11) * 0x1.0p-53;
  }
  for (int k = static_cast<int>(starts.size()); k < cfg.restarts; ++k) {
    std::vector<double> s(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      double v = offset[static_cast<std::size_t>(i)] +
                 static_cast<double>(k) * alpha[static_cast<std::size_t>(i)];
      s[static_cast<std::size_t>(i)] = v - std::floor(v);
    }
    starts.push_back(std::move(s));
  }
  starts.resize(static_cast<std::size_t>(std::max(cfg.restarts, 1)),
                std::vector<double>(static_cast<std::size_t>(n), 0.5));
  return starts;
}

// Reported minima must agree with a fresh frame-potential evaluation at the
// reported angles; a breach means the search bookkeeping went stale.
inline void check_reported_minimum(const std::vector<double>& angles, int t, double reported) {
  double direct = angles.size() <= 12
                      ? frame_potential(linear_cluster_ensemble(angles), t)
                      : frame_potential_recursive(angles, t);
  if (std::abs(direct - reported) > 1e-9) {
    fail("NumericalError", "search result disagrees with direct re-evaluation");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Constant-angle sweep.

// Design gap at every length from 2 to l_max with all interior angles equal.
// The series carries the pi4 tag: that is the strategy family, with pi/4 the
// canonical choice of the constant.
inline SweepCurve sweep_constant_angle(int l_max, int t, double angle) {
  if (l_max < 2) fail("DegenerateLength", "sweeps start at two steps");
  SweepCurve curve;
  const double bound = static_cast<double>(design_bound(t));
  for (int length = 2; length <= l_max; ++length) {
    std::vector<double> xs(static_cast<std::size_t>(length - 2),
                           std::cos(angle) * std::cos(angle));
    double f = detail::eval_interior(length, t, xs);
    double delta = f - bound;
    if (delta < -1e-9) fail("NumericalError", "frame potential fell below the bound");
    curve.points.push_back({length, t, SweepPattern::pi4, delta});
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Single-angle minimization.

// Best constant interior angle by golden-section searches on x = cos^2(angle),
// one per subinterval of [0,1] (config.restarts of them), with the box ends
// and x = 1/2 always in the candidate set — the latter guarantees the result
// never exceeds the pi/4 value.
inline SingleAngleResult minimize_single_angle(int length, int t, const SearchConfig& cfg) {
  if (length < 2) fail("DegenerateLength", "patterns need at least two steps");
  validate(cfg);
  auto eval_x = [&](double x) {
    return detail::eval_interior(length, t,
                                 std::vector<double>(static_cast<std::size_t>(length - 2), x));
  };
  SingleAngleResult best;
  best.x = 0.5;
  best.value = eval_x(0.5);
  if (length > 2) {
    auto consider = [&](double x, double y) {
      if (y < best.value || (y == best.value && x < best.x)) {
        best.x = x;
        best.value = y;
      }
    };
    consider(0.0, eval_x(0.0));
    consider(1.0, eval_x(1.0));
    const int cells = std::max(cfg.restarts, 1);
    for (int k = 0; k < cells; ++k) {
      double lo = static_cast<double>(k) / cells;
      double hi = static_cast<double>(k + 1) / cells;
      auto [x, y] = detail::golden_section(eval_x, lo, hi, cfg.coordinate_tol);
      consider(x, y);
    }
  }
  best.angle = detail::angle_from_x(best.x);
  detail::check_reported_minimum(
      detail::pattern_from_interior(length, std::vector<double>(
                                                static_cast<std::size_t>(length - 2), best.x)),
      t, best.value);
  return best;
}

// ---------------------------------------------------------------------------
// Multi-angle minimization.

// Multi-start coordinate descent over the interior box coordinates. Each
// restart sweeps the coordinates with golden-section line searches (box ends
// checked explicitly) until a full sweep improves the potential by less than
// the configured tolerance. The winner is picked by value and then by
// lexicographic coordinates, so equal-value minima resolve deterministically.
inline MultiAngleResult minimize_multi_angle(int length, int t, const SearchConfig& cfg) {
  if (length < 2) fail("DegenerateLength", "patterns need at least two steps");
  validate(cfg);
  const int n = length - 2;
  MultiAngleResult best;
  if (n == 0) {
    best.value = detail::eval_interior(length, t, {});
    best.angles = detail::pattern_from_interior(length, {});
    detail::check_reported_minimum(best.angles, t, best.value);
    return best;
  }
  bool have_best = false;
  for (const auto& start : detail::start_points(n, cfg)) {
    std::vector<double> xs = start;
    double f_cur = detail::eval_interior(length, t, xs);
    for (int sweep = 0; sweep < cfg.max_iterations; ++sweep) {
      double f_before = f_cur;
      for (int i = 0; i < n; ++i) {
        auto line = [&](double v) {
          std::vector<double> probe = xs;
          probe[static_cast<std::size_t>(i)] = v;
          return detail::eval_interior(length, t, probe);
        };
        double cand_x = xs[static_cast<std::size_t>(i)];
        double cand_y = f_cur;
        auto take = [&](double x, double y) {
          if (y < cand_y) {
            cand_x = x;
            cand_y = y;
          }
        };
        auto [gx, gy] = detail::golden_section(line, 0.0, 1.0, cfg.coordinate_tol);
        take(gx, gy);
        take(0.0, line(0.0));
        take(1.0, line(1.0));
        xs[static_cast<std::size_t>(i)] = cand_x;
        f_cur = cand_y;
      }
      if (f_before - f_cur < cfg.f_tol) break;
    }
    if (!have_best || f_cur < best.value ||
        (f_cur == best.value && xs < best.interior_x)) {
      best.interior_x = xs;
      best.value = f_cur;
      have_best = true;
    }
  }
  best.angles = detail::pattern_from_interior(length, best.interior_x);
  detail::check_reported_minimum(best.angles, t, best.value);
  return best;
}

// ---------------------------------------------------------------------------
// Sweeps driven by the minimizers, for multi-series curves.

inline SweepCurve sweep_single_angle(int l_max, int t, const SearchConfig& cfg) {
  if (l_max < 2) fail("DegenerateLength", "sweeps start at two steps");
  SweepCurve curve;
  const double bound = static_cast<double>(design_bound(t));
  for (int length = 2; length <= l_max; ++length) {
    auto r = minimize_single_angle(length, t, cfg);
    double delta = r.value - bound;
    if (delta < -1e-9) fail("NumericalError", "frame potential fell below the bound");
    curve.points.push_back({length, t, SweepPattern::single_min, delta});
  }
  return curve;
}

inline SweepCurve sweep_multi_angle(int l_max, int t, const SearchConfig& cfg) {
  if (l_max < 2) fail("DegenerateLength", "sweeps start at two steps");
  SweepCurve curve;
  const double bound = static_cast<double>(design_bound(t));
  for (int length = 2; length <= l_max; ++length) {
    auto r = minimize_multi_angle(length, t, cfg);
    double delta = r.value - bound;
    if (delta < -1e-9) fail("NumericalError", "frame potential fell below the bound");
    curve.points.push_back({length, t, SweepPattern::multi_min, delta});
  }
  return curve;
}

}  // namespace mbqc
