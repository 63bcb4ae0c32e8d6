#pragma once

// Open graphs as immutable values: vertices with integer ids, undirected
// edges, ordered input/output lists, and a measurement spec (plane + angle)
// on every non-output vertex. Includes local complementation, stabilizer
// generators, and a JSON interchange format.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mbqc/core.hpp"

namespace mbqc {

enum class Plane { XY, ZY };

inline std::string plane_name(Plane p) { return p == Plane::XY ? "XY" : "ZY"; }

struct MeasurementSpec {
  Plane plane = Plane::XY;
  double angle = 0.0;  // radians in [0, 2*pi)

  friend bool operator==(const MeasurementSpec&, const MeasurementSpec&) = default;
};

inline MeasurementSpec xy(double angle) { return {Plane::XY, normalize_angle(angle)}; }
inline MeasurementSpec zy(double angle) { return {Plane::ZY, normalize_angle(angle)}; }

using Edge = std::pair<int, int>;  // stored smaller id first

inline Edge make_edge(int u, int v) { return u < v ? Edge{u, v} : Edge{v, u}; }

struct OpenGraph {
  std::vector<int> vertices;            // ascending, unique
  std::set<Edge> edges;                 // normalized pairs
  std::vector<int> inputs;              // ordered
  std::vector<int> outputs;             // ordered
  std::map<int, MeasurementSpec> measurements;  // every non-output vertex

  bool has_vertex(int v) const {
    return std::binary_search(vertices.begin(), vertices.end(), v);
  }
  bool has_edge(int u, int v) const { return edges.count(make_edge(u, v)) > 0; }
  bool is_input(int v) const {
    return std::find(inputs.begin(), inputs.end(), v) != inputs.end();
  }
  bool is_output(int v) const {
    return std::find(outputs.begin(), outputs.end(), v) != outputs.end();
  }

  std::vector<int> neighbors(int v) const {
    std::vector<int> out;
    for (const auto& e : edges) {
      if (e.first == v) out.push_back(e.second);
      else if (e.second == v) out.push_back(e.first);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  // Measured vertices in ascending id order; the k-th entry owns outcome
  // bit k (least significant first).
  std::vector<int> measured_vertices() const {
    std::vector<int> out;
    for (int v : vertices) {
      if (measurements.count(v)) out.push_back(v);
    }
    return out;
  }

  int max_vertex_id() const {
    return vertices.empty() ? 0 : vertices.back();
  }

  void validate() const {
    std::vector<int> sorted = vertices;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      fail("BadGraphIO", "duplicate vertex ids");
    }
    if (sorted != vertices) fail("BadGraphIO", "vertices must be listed ascending");
    for (const auto& e : edges) {
      if (e.first == e.second) fail("BadGraphIO", "self-loop on vertex " + std::to_string(e.first));
      if (!has_vertex(e.first) || !has_vertex(e.second)) {
        fail("BadGraphIO", "edge endpoint does not exist");
      }
    }
    for (int v : inputs) {
      if (!has_vertex(v)) fail("BadGraphIO", "input vertex missing: " + std::to_string(v));
    }
    for (int v : outputs) {
      if (!has_vertex(v)) fail("BadGraphIO", "output vertex missing: " + std::to_string(v));
    }
    for (int v : vertices) {
      bool out = is_output(v);
      bool meas = measurements.count(v) > 0;
      if (out && meas) fail("BadGraphIO", "output vertex carries a measurement: " + std::to_string(v));
      if (!out && !meas) fail("BadGraphIO", "non-output vertex lacks a measurement: " + std::to_string(v));
    }
    for (const auto& [v, spec] : measurements) {
      if (!has_vertex(v)) fail("BadGraphIO", "measurement on unknown vertex: " + std::to_string(v));
      if (!std::isfinite(spec.angle)) fail("BadGraphIO", "non-finite angle");
    }
  }

  friend bool operator==(const OpenGraph&, const OpenGraph&) = default;
};

// A tensor product of single-vertex Pauli letters with a global phase
// restricted to {1, i, -1, -i}.
struct PauliString {
  std::map<int, char> letters;  // values in {'X','Y','Z'}; identity omitted
  cplx phase = 1.0;
};

// Path graph on length+1 vertices: vertex 1 is the input, vertex length+1 the
// output, and vertex k carries the k-th XY-plane angle.
inline OpenGraph make_linear_cluster(int length, const std::vector<double>& angles) {
  if (length < 1) fail("DegenerateLength", "cluster length must be at least 1");
  if (static_cast<int>(angles.size()) != length) {
    fail("DegenerateLength", "expected exactly " + std::to_string(length) + " angles");
  }
  OpenGraph g;
  for (int v = 1; v <= length + 1; ++v) g.vertices.push_back(v);
  for (int v = 1; v <= length; ++v) {
    g.edges.insert({v, v + 1});
    g.measurements[v] = xy(angles[static_cast<std::size_t>(v - 1)]);
  }
  g.inputs = {1};
  g.outputs = {length + 1};
  g.validate();
  return g;
}

// Complement the edges among the neighbors of vertex a; everything else is
// untouched.
inline OpenGraph local_complement(const OpenGraph& g, int a) {
  if (!g.has_vertex(a)) fail("NoSuchVertex", "vertex " + std::to_string(a));
  OpenGraph out = g;
  std::vector<int> nbr = g.neighbors(a);
  for (std::size_t i = 0; i < nbr.size(); ++i) {
    for (std::size_t j = i + 1; j < nbr.size(); ++j) {
      Edge e = make_edge(nbr[i], nbr[j]);
      if (out.edges.count(e)) {
        out.edges.erase(e);
      } else {
        out.edges.insert(e);
      }
    }
  }
  return out;
}

// X on a, Z on each neighbor: the operator that fixes the graph state when a
// is not an input.
inline PauliString stabilizer_generator(const OpenGraph& g, int a) {
  if (!g.has_vertex(a)) fail("NoSuchVertex", "vertex " + std::to_string(a));
  if (g.is_input(a)) fail("InputVertex", "no stabilizer relation on input vertex " + std::to_string(a));
  PauliString p;
  p.letters[a] = 'X';
  for (int b : g.neighbors(a)) p.letters[b] = 'Z';
  return p;
}

// ---------------------------------------------------------------------------
// JSON interchange

inline nlohmann::json graph_to_json(const OpenGraph& g) {
  nlohmann::json j;
  j["vertices"] = g.vertices;
  auto edges = nlohmann::json::array();
  for (const auto& e : g.edges) edges.push_back({e.first, e.second});
  j["edges"] = edges;
  j["inputs"] = g.inputs;
  j["outputs"] = g.outputs;
  auto meas = nlohmann::json::object();
  for (const auto& [v, spec] : g.measurements) {
    meas[std::to_string(v)] = {{"plane", plane_name(spec.plane)}, {"angle", spec.angle}};
  }
  j["measurements"] = meas;
  return j;
}

inline OpenGraph graph_from_json(const nlohmann::json& j) {
  OpenGraph g;
  try {
    g.vertices = j.at("vertices").get<std::vector<int>>();
    std::sort(g.vertices.begin(), g.vertices.end());
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) fail("BadGraphIO", "edge must be a pair");
      g.edges.insert(make_edge(e[0].get<int>(), e[1].get<int>()));
    }
    g.inputs = j.at("inputs").get<std::vector<int>>();
    g.outputs = j.at("outputs").get<std::vector<int>>();
    for (const auto& [key, val] : j.at("measurements").items()) {
      int v = std::stoi(key);
      std::string plane = val.at("plane").get<std::string>();
      double angle = val.at("angle").get<double>();
      if (plane != "XY" && plane != "ZY") fail("BadGraphIO", "unknown plane: " + plane);
      g.measurements[v] = {plane == "XY" ? Plane::XY : Plane::ZY, normalize_angle(angle)};
    }
  } catch (const nlohmann::json::exception& e) {
    fail("BadGraphIO", std::string("malformed graph JSON: ") + e.what());
  } catch (const std::invalid_argument&) {
    fail("BadGraphIO", "measurement keys must be decimal vertex ids");
  }
  g.validate();
  return g;
}

}  // namespace mbqc
