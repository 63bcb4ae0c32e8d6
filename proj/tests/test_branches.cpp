#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "mbqc/branches.hpp"
#include "mbqc/graph.hpp"

using namespace mbqc;

namespace {

bool equal_mod_phase(const Mat& a, const Mat& b, double tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  Eigen::Index rr = 0, rc = 0;
  double best = 0.0;
  for (Eigen::Index r = 0; r < b.rows(); ++r) {
    for (Eigen::Index c = 0; c < b.cols(); ++c) {
      if (std::abs(b(r, c)) > best) {
        best = std::abs(b(r, c));
        rr = r;
        rc = c;
      }
    }
  }
  if (best < 1e-12) return a.norm() <= tol;
  cplx phase = a(rr, rc) / b(rr, rc);
  phase /= std::abs(phase);
  return (a - phase * b).norm() <= tol;
}

OpenGraph wire_graph(const MeasurementSpec& spec) {
  OpenGraph g;
  g.vertices = {1, 2};
  g.edges = {make_edge(1, 2)};
  g.inputs = {1};
  g.outputs = {2};
  g.measurements[1] = spec;
  g.validate();
  return g;
}

}  // namespace

TEST_CASE("single measured step implements H Z^m Z(angle) up to phase") {
  std::mt19937_64 rng(41);
  for (int k = 0; k < 20; ++k) {
    double phi = static_cast<double>(rng() >> 11) * 0x1.0p-53 * two_pi;
    auto branches = enumerate_branches(wire_graph(xy(phi)));
    REQUIRE(branches.size() == 2);
    for (int m = 0; m < 2; ++m) {
      Mat2 want = hadamard();
      if (m) want = want * pauli_z();
      want = want * rot_z(phi);
      CHECK(equal_mod_phase(branches[static_cast<std::size_t>(m)].op * std::sqrt(2.0),
                            want, 1e-10));
      CHECK(branches[static_cast<std::size_t>(m)].p == Catch::Approx(0.5).margin(1e-12));
    }
  }
}

TEST_CASE("the other measurement plane projects onto its stated bras") {
  const double f = 1.1;
  auto branches = enumerate_branches(wire_graph(zy(f)));
  const cplx mi(0, -1);
  RowVec2 bras[2];
  bras[0] << std::cos(f / 2), mi * std::sin(f / 2);
  bras[1] << mi * std::sin(f / 2), std::cos(f / 2);
  Vec plus(2), minus(2);
  plus << 1 / std::sqrt(2.0), 1 / std::sqrt(2.0);
  minus << 1 / std::sqrt(2.0), -1 / std::sqrt(2.0);
  for (int m = 0; m < 2; ++m) {
    Mat want(2, 2);
    want.col(0) = plus * bras[m](0);
    want.col(1) = minus * bras[m](1);
    CHECK((branches[static_cast<std::size_t>(m)].op - want).norm() < 1e-12);
  }
}

TEST_CASE("outcome bit k belongs to the k-th measured vertex") {
  OpenGraph g = make_linear_cluster(2, {0.3, 0.9});
  auto branches = enumerate_branches(g);
  REQUIRE(branches.size() == 4);
  auto u = [](int m, double phi) {
    Mat2 w = hadamard();
    if (m) w = w * pauli_z();
    return Mat2(w * rot_z(phi));
  };
  for (std::uint64_t outcome = 0; outcome < 4; ++outcome) {
    int m1 = static_cast<int>(outcome & 1);
    int m2 = static_cast<int>((outcome >> 1) & 1);
    Mat2 want = u(m2, 0.9) * u(m1, 0.3);
    CHECK(equal_mod_phase(branches[outcome].op * 2.0, want, 1e-10));
  }
}

TEST_CASE("branch probabilities sum to one") {
  OpenGraph g = make_linear_cluster(3, {0.2, 1.4, 2.6});
  auto branches = enumerate_branches(g);
  double total = 0.0;
  for (const auto& br : branches) total += br.p;
  CHECK(total == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("pre-measurement unitaries act before the bras") {
  const double phi = 0.8;
  OpenGraph g = wire_graph(xy(phi));
  auto plain = enumerate_branches(g);

  SECTION("Z before a planar bra flips the outcome label") {
    BranchOptions opt;
    opt.pre_measurement[1] = pauli_z();
    auto flipped = enumerate_branches(g, opt);
    CHECK(equal_mod_phase(flipped[0].op, plain[1].op, 1e-12));
    CHECK(equal_mod_phase(flipped[1].op, plain[0].op, 1e-12));
  }
  SECTION("a unitary on an output multiplies the branch from the left") {
    BranchOptions opt;
    opt.pre_measurement[2] = rot_x(0.3);
    auto rotated = enumerate_branches(g, opt);
    for (int m = 0; m < 2; ++m) {
      Mat want = rot_x(0.3) * plain[static_cast<std::size_t>(m)].op;
      CHECK((rotated[static_cast<std::size_t>(m)].op - want).norm() < 1e-12);
    }
  }
}

TEST_CASE("single branches agree with full enumeration") {
  OpenGraph g = make_linear_cluster(3, {0.2, 1.4, 2.6});
  auto plan = detail::ContractionPlan::build(g);
  auto all = enumerate_branches(g);
  for (std::uint64_t m = 0; m < all.size(); ++m) {
    OutcomeBranch one = compute_branch(g, plan, m, {});
    CHECK((one.op - all[m].op).norm() < 1e-14);
    CHECK(one.p == Catch::Approx(all[m].p).margin(1e-14));
  }
}

TEST_CASE("enumeration refuses oversized outcome spaces") {
  std::vector<double> angles(25, 0.0);
  OpenGraph g = make_linear_cluster(25, angles);
  CHECK_THROWS_AS(enumerate_branches(g), Error);
  try {
    enumerate_branches(g);
  } catch (const Error& e) {
    CHECK(e.code() == "TooLarge");
  }
}
