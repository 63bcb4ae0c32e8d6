#include <catch2/catch_amalgamated.hpp>

#include "mbqc/designs.hpp"
#include "mbqc/ensemble.hpp"
#include "mbqc/graph.hpp"

using namespace mbqc;

TEST_CASE("single step branch unitary is H Z^m Z(angle)") {
  const double phi = 0.37;
  CHECK((single_qubit_branch_unitary(0, phi) - Mat2(hadamard() * rot_z(phi))).norm() < 1e-15);
  CHECK((single_qubit_branch_unitary(1, phi) -
         Mat2(hadamard() * pauli_z() * rot_z(phi))).norm() < 1e-15);
}

TEST_CASE("measured-path ensemble enumerates all outcome products uniformly") {
  auto e = linear_cluster_ensemble({0.3, 0.9, 1.4});
  CHECK(e.d == 2);
  CHECK(e.uniform);
  REQUIRE(e.elements.size() == 8);
  for (const auto& [p, u] : e.elements) {
    CHECK(p == Catch::Approx(1.0 / 8.0).margin(1e-15));
    CHECK(unitarity_residual(u) < 1e-12);
  }
  CHECK_NOTHROW(e.validate());
  CHECK_THROWS_AS(linear_cluster_ensemble({}), Error);
}

TEST_CASE("path ensemble agrees with the generic graph contraction") {
  std::vector<double> angles{0.3, 0.9, 1.4};
  auto fast = linear_cluster_ensemble(angles);
  auto generic = graph_ensemble(make_linear_cluster(3, angles));
  REQUIRE(generic.elements.size() == fast.elements.size());
  CHECK(generic.uniform);
  for (std::size_t k = 0; k < fast.elements.size(); ++k) {
    CHECK(equal_up_to_phase(generic.elements[k].second, fast.elements[k].second, 1e-10));
  }
}

TEST_CASE("phase-blind equality accepts phases and rejects different gates") {
  Mat2 u = rot_z(0.7);
  CHECK(equal_up_to_phase(u, cplx(std::polar(1.0, 1.23)) * u, 1e-10));
  CHECK_FALSE(equal_up_to_phase(u, rot_z(0.8), 1e-6));
}

TEST_CASE("a disconnected input makes a branch non-unitary") {
  OpenGraph g;
  g.vertices = {1, 2};
  g.inputs = {1};
  g.outputs = {2};
  g.measurements[1] = xy(0.0);
  g.validate();
  CHECK_THROWS_AS(graph_ensemble(g), Error);
  try {
    graph_ensemble(g);
  } catch (const Error& e) {
    CHECK(e.code() == "NonUnitaryBranch");
  }
}

TEST_CASE("the Haar moment operator is a Hermitian projector") {
  for (int t : {1, 2, 3}) {
    Mat h = haar_moment_operator(t);
    CHECK((h - h.adjoint()).norm() < 1e-12);
    CHECK((h * h - h).norm() < 1e-10);
  }
}

TEST_CASE("moment-operator distance squares to the design gap") {
  // || M_E - M_Haar ||_F^2 equals the frame potential minus its bound, so the
  // moment operator gives an independent check on both quantities.
  auto check_gap = [](const UnitaryEnsemble& e, int t) {
    Mat diff = moment_operator(e, t) - haar_moment_operator(t);
    double frob2 = diff.squaredNorm();
    double gap = frame_potential(e, t) - static_cast<double>(design_bound(t));
    CHECK(frob2 == Catch::Approx(gap).margin(1e-9));
    return frob2;
  };
  auto design = linear_cluster_ensemble(optimal_five_step_angles());
  CHECK(check_gap(design, 2) < 1e-10);
  auto shallow = linear_cluster_ensemble({pi / 4, pi / 4, pi / 4, pi / 4});
  CHECK(check_gap(shallow, 2) == Catch::Approx(0.25).margin(1e-9));
}

TEST_CASE("uniform union reweights both element lists") {
  auto a = linear_cluster_ensemble({0.3, 0.9});
  auto b = linear_cluster_ensemble({1.1});
  auto u = uniform_union(a, b);
  REQUIRE(u.elements.size() == 6);
  for (const auto& [p, m] : u.elements) {
    (void)m;
    CHECK(p == Catch::Approx(1.0 / 6.0).margin(1e-15));
  }
  // A union of an ensemble with itself leaves every moment unchanged.
  auto same = uniform_union(a, a);
  CHECK(frame_potential(same, 2) == Catch::Approx(frame_potential(a, 2)).margin(1e-12));
}

TEST_CASE("tensor products multiply frame potentials and leave the qubit bound") {
  auto e = linear_cluster_ensemble({0.0, pi / 4, 0.0});
  double f = frame_potential(e, 2);
  CHECK(f == Catch::Approx(3.0).margin(1e-10));
  auto prod = tensor_product(e, e);
  CHECK(prod.d == 4);
  CHECK(frame_potential(prod, 2) == Catch::Approx(f * f).margin(1e-8));
  // Two-qubit pairs of a perfect single-qubit design still miss the d=4 bound.
  auto design = linear_cluster_ensemble(optimal_five_step_angles());
  auto pairs = tensor_product(design, design);
  CHECK(frame_potential(pairs, 2) == Catch::Approx(4.0).margin(1e-8));
  CHECK(frame_potential(pairs, 2) > 2.0 + 1e-6);
}

TEST_CASE("ensemble JSON carries dimension, weights, and matrices") {
  auto e = linear_cluster_ensemble({0.3});
  nlohmann::json j = ensemble_to_json(e);
  CHECK(j.at("d") == 2);
  CHECK(j.at("uniform") == true);
  REQUIRE(j.at("elements").size() == 2);
  CHECK(j.at("elements")[0].contains("p"));
}

TEST_CASE("validation spots bad ensembles") {
  UnitaryEnsemble e;
  CHECK_THROWS_AS(e.validate(), Error);
  e.d = 2;
  e.elements.emplace_back(0.7, Mat(Mat2::Identity()));
  CHECK_THROWS_AS(e.validate(), Error);  // probabilities must sum to one
  e.elements.emplace_back(0.3, Mat(0.5 * Mat2::Identity()));
  CHECK_THROWS_AS(e.validate(), Error);  // elements must be unitary
}
