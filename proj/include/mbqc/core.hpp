#pragma once

// Shared basics: error type with stable code strings, numeric constants,
// angle normalization, float formatting, and reproducible summation helpers.

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace mbqc {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846264338327950288;
inline constexpr double two_pi = 2.0 * pi;

// All failures carry a stable machine-readable code plus a human detail string.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& detail)
      : std::runtime_error(code + ": " + detail), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& detail) {
  throw Error(code, detail);
}

// Map an angle to the canonical interval [0, 2*pi).
inline double normalize_angle(double a) {
  double r = std::fmod(a, two_pi);
  if (r < 0) r += two_pi;
  // fmod can return exactly two_pi after the correction when a is a tiny
  // negative number; fold that back to zero.
  if (r >= two_pi) r = 0.0;
  return r;
}

// Full round-trip precision for all serialized floats.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Neumaier-compensated accumulator: deterministic for a fixed add order and
// robust against cancellation in long sums.
class CompensatedSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Fixed-shape pairwise tree combine. The result depends only on the input
// order, never on how the terms were produced.
inline double pairwise_combine(std::vector<double> terms) {
  if (terms.empty()) return 0.0;
  while (terms.size() > 1) {
    std::vector<double> next;
    next.reserve((terms.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < terms.size(); i += 2) {
      next.push_back(terms[i] + terms[i + 1]);
    }
    if (terms.size() % 2 == 1) next.push_back(terms.back());
    terms = std::move(next);
  }
  return terms[0];
}

}  // namespace mbqc
