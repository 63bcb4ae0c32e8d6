#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "mbqc/graph.hpp"

using namespace mbqc;

TEST_CASE("edges normalize to smaller id first") {
  CHECK(make_edge(3, 7) == Edge{3, 7});
  CHECK(make_edge(7, 3) == Edge{3, 7});
}

TEST_CASE("measurement specs normalize their angle") {
  CHECK(xy(-pi / 2).angle == Catch::Approx(3 * pi / 2));
  CHECK(zy(2 * two_pi + 0.25).angle == Catch::Approx(0.25));
  CHECK(xy(0.1).plane == Plane::XY);
  CHECK(zy(0.1).plane == Plane::ZY);
  CHECK(plane_name(Plane::XY) == "XY");
  CHECK(plane_name(Plane::ZY) == "ZY");
}

TEST_CASE("linear cluster has path edges and one angle per step") {
  OpenGraph g = make_linear_cluster(3, {0.1, 0.2, 0.3});
  CHECK(g.vertices == std::vector<int>{1, 2, 3, 4});
  CHECK(g.edges == std::set<Edge>{{1, 2}, {2, 3}, {3, 4}});
  CHECK(g.inputs == std::vector<int>{1});
  CHECK(g.outputs == std::vector<int>{4});
  CHECK(g.measured_vertices() == std::vector<int>{1, 2, 3});
  CHECK(g.measurements.at(2).angle == Catch::Approx(0.2));
  CHECK_THROWS_AS(make_linear_cluster(0, {}), Error);
  CHECK_THROWS_AS(make_linear_cluster(2, {0.1}), Error);
}

TEST_CASE("neighbors are sorted and deduplicated by the edge set") {
  OpenGraph g = make_linear_cluster(3, {0, 0, 0});
  CHECK(g.neighbors(2) == std::vector<int>{1, 3});
  CHECK(g.neighbors(1) == std::vector<int>{2});
  CHECK(g.has_edge(2, 1));
  CHECK_FALSE(g.has_edge(1, 3));
}

TEST_CASE("validation rejects malformed graphs") {
  OpenGraph g = make_linear_cluster(2, {0.0, 0.0});

  SECTION("edge endpoint must exist") {
    g.edges.insert(make_edge(2, 9));
    CHECK_THROWS_AS(g.validate(), Error);
  }
  SECTION("self loops are rejected") {
    g.edges.insert(Edge{2, 2});
    CHECK_THROWS_AS(g.validate(), Error);
  }
  SECTION("outputs may not carry measurements") {
    g.measurements[3] = xy(0.0);
    CHECK_THROWS_AS(g.validate(), Error);
  }
  SECTION("non-outputs need measurements") {
    g.measurements.erase(2);
    CHECK_THROWS_AS(g.validate(), Error);
  }
  SECTION("error carries a stable code") {
    g.measurements.erase(2);
    try {
      g.validate();
      FAIL("expected a validation error");
    } catch (const Error& e) {
      CHECK(e.code() == "BadGraphIO");
    }
  }
}

TEST_CASE("local complementation toggles edges among the neighborhood") {
  OpenGraph g;
  g.vertices = {1, 2, 3, 4};
  g.edges = {make_edge(1, 2), make_edge(1, 3), make_edge(1, 4)};
  g.outputs = {1, 2, 3, 4};

  OpenGraph t = local_complement(g, 1);
  CHECK(t.edges == std::set<Edge>{{1, 2}, {1, 3}, {1, 4}, {2, 3}, {2, 4}, {3, 4}});

  SECTION("applying it twice restores the graph") {
    CHECK(local_complement(t, 1).edges == g.edges);
  }
  SECTION("unknown vertex is rejected") {
    CHECK_THROWS_AS(local_complement(g, 9), Error);
  }
}

TEST_CASE("stabilizer generator is X on the vertex and Z on neighbors") {
  OpenGraph g = make_linear_cluster(3, {0, 0, 0});
  PauliString p = stabilizer_generator(g, 2);
  CHECK(p.letters == std::map<int, char>{{1, 'Z'}, {2, 'X'}, {3, 'Z'}});
  CHECK(p.phase == cplx(1.0));
  CHECK_THROWS_AS(stabilizer_generator(g, 1), Error);  // inputs have none
}

TEST_CASE("graph JSON round-trips exactly") {
  OpenGraph g;
  g.vertices = {1, 2, 3, 5};
  g.edges = {make_edge(1, 2), make_edge(2, 3), make_edge(3, 5)};
  g.inputs = {1};
  g.outputs = {5};
  g.measurements[1] = xy(0.25);
  g.measurements[2] = zy(1.5);
  g.measurements[3] = xy(0.0);
  g.validate();

  nlohmann::json j = graph_to_json(g);
  OpenGraph back = graph_from_json(j);
  CHECK(back == g);
  CHECK(j.at("measurements").at("2").at("plane") == "ZY");
}

TEST_CASE("graph JSON rejects malformed input") {
  nlohmann::json j{{"vertices", {1, 2}},
                   {"edges", {{1, 2}}},
                   {"inputs", nlohmann::json::array()},
                   {"outputs", {2}},
                   {"measurements", {{"1", {{"plane", "XY"}, {"angle", 0.0}}}}}};
  CHECK_NOTHROW(graph_from_json(j));

  SECTION("edge that is not a pair") {
    j["edges"] = {{1, 2, 3}};
    CHECK_THROWS_AS(graph_from_json(j), Error);
  }
  SECTION("unknown measurement plane") {
    j["measurements"]["1"]["plane"] = "XZ";
    CHECK_THROWS_AS(graph_from_json(j), Error);
  }
  SECTION("missing field") {
    j.erase("outputs");
    CHECK_THROWS_AS(graph_from_json(j), Error);
  }
  SECTION("non-numeric measurement key") {
    j["measurements"]["one"] = j["measurements"]["1"];
    j["measurements"].erase("1");
    CHECK_THROWS_AS(graph_from_json(j), Error);
  }
}
