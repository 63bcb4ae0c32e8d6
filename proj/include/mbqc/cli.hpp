#pragma once

// Command-line surface over the library: frame potentials and design reports,
// ensemble emission, catalog and graph verification, fusion rewrites, the
// gadget catalog with its verifiers, angle-pattern sweeps, and the repetition
// calculator. Commands are pure functions from arguments to a CommandResult so
// tests can drive them in-process; the binary wrapper only forwards streams.
//
// Exit codes: 0 success, 1 a verification ran and failed (including claims the
// engine cannot express), 2 usage, configuration, or I/O errors. All angles
// are radians; every randomized mode demands an explicit --seed.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mbqc/core.hpp"
#include "mbqc/designs.hpp"
#include "mbqc/ensemble.hpp"
#include "mbqc/fusion.hpp"
#include "mbqc/gadgets.hpp"
#include "mbqc/graph.hpp"
#include "mbqc/optimize.hpp"

namespace mbqc {

struct CommandResult {
  int exit_code = 0;
  std::string output;       // primary stream: JSON or CSV
  std::string diagnostics;  // human-readable messages
};

namespace cli_detail {

// Problems found while verifying map to 1; bad requests and I/O map to 2.
inline int exit_code_for_error(const std::string& code) {
  if (code == "Unsupported" || code == "NumericalError" || code == "NonUnitaryBranch") {
    return 1;
  }
  return 2;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("IOError", "cannot open " + path);
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    fail("BadGraphIO", "malformed JSON in " + path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail("IOError", "cannot write " + path);
  out << text;
  out.flush();
  if (!out) fail("IOError", "write to " + path + " failed");
}

inline void reject_degrees(bool flag) {
  if (flag) fail("BadFlag", "angles are radians only; --degrees is not supported");
}

// Resolve the step angles of a measured path from the mutually exclusive
// --angles / --pattern flags.
inline std::vector<double> resolve_path_angles(int length, const std::vector<double>& angles,
                                               const std::string& pattern) {
  if (length < 1) fail("DegenerateLength", "length must be at least 1");
  if (!angles.empty() && !pattern.empty()) {
    fail("BadFlag", "give either --angles or --pattern, not both");
  }
  if (!pattern.empty()) {
    if (pattern != "pi4") fail("BadFlag", "unknown pattern: " + pattern);
    return std::vector<double>(static_cast<std::size_t>(length), pi / 4.0);
  }
  if (angles.empty()) fail("BadFlag", "one of --angles or --pattern is required");
  if (static_cast<int>(angles.size()) != length) {
    fail("BadFlag", "expected " + std::to_string(length) + " angles, got " +
                        std::to_string(angles.size()));
  }
  return angles;
}

// Gadget factory by catalog name; angle-bearing gadgets take --angle, the
// rest reject it. NaN marks "not supplied".
inline Gadget make_gadget(const std::string& name, double angle) {
  const bool has_angle = !std::isnan(angle);
  auto need_no_angle = [&] {
    if (has_angle) fail("BadFlag", name + " takes no --angle");
  };
  if (name == "wire") return wire_gadget(has_angle ? angle : 0.4);
  if (name == "zrot") return zrot_gadget(has_angle ? angle : 0.7);
  if (name == "xrot") return xrot_gadget(has_angle ? angle : 0.7);
  if (name == "two_qubit") {
    need_no_angle();
    return two_qubit_gadget();
  }
  if (name == "universal_pair") {
    need_no_angle();
    return universal_pair_gadget();
  }
  if (name == "hadamard_naive") {
    need_no_angle();
    return hadamard_naive_gadget();
  }
  if (name == "hadamard_fused") {
    need_no_angle();
    return hadamard_fused_gadget();
  }
  fail("BadFlag", "unknown gadget: " + name);
}

inline nlohmann::json catalog_report_to_json(const CatalogMatchReport& rep, std::size_t total) {
  return {{"mode", "catalog"},
          {"total", total},
          {"matched", total - rep.unmatched_ensemble.size()},
          {"perfect", rep.perfect},
          {"frame_aligned", rep.frame_aligned},
          {"match", rep.match},
          {"unmatched_ensemble", rep.unmatched_ensemble},
          {"unmatched_catalog", rep.unmatched_catalog}};
}

inline nlohmann::json rank_report_to_json(const RankReport& rk) {
  return {{"rank", rk.rank}, {"rotation_rank", rk.rotation_rank}};
}

// "a:b,c:d" -> {a: b, c: d}
inline std::map<int, int> parse_neighbor_map(const std::vector<std::string>& pairs) {
  std::map<int, int> out;
  for (const std::string& p : pairs) {
    auto colon = p.find(':');
    if (colon == std::string::npos) {
      fail("BadFlag", "neighbor entries look like fusedVertex:neighbor, got " + p);
    }
    try {
      int a = std::stoi(p.substr(0, colon));
      int b = std::stoi(p.substr(colon + 1));
      out[a] = b;
    } catch (const std::exception&) {
      fail("BadFlag", "neighbor entries must be integer pairs, got " + p);
    }
  }
  return out;
}

}  // namespace cli_detail

inline CommandResult run_command(const std::vector<std::string>& arguments) {
  CommandResult result;
  CLI::App app{"measurement-based unitary ensembles: frame potentials, designs, "
               "graph fusion, gadget verification, and angle search",
               "mbqc"};
  app.require_subcommand(1);

  // ---- fp -------------------------------------------------------------------
  auto* fp = app.add_subcommand("fp", "design report for a measured path ensemble");
  int fp_length = 0;
  int fp_t = 0;
  std::vector<double> fp_angles;
  std::string fp_pattern;
  bool fp_degrees = false;
  double fp_tol = 1e-9;
  unsigned fp_threads = 0;
  fp->add_option("--length", fp_length, "number of measured steps")->required();
  fp->add_option("--t", fp_t, "moment order")->required();
  fp->add_option("--angles", fp_angles, "comma-separated step angles in radians")
      ->delimiter(',');
  fp->add_option("--pattern", fp_pattern, "named pattern: pi4 (all angles pi/4)");
  fp->add_flag("--degrees", fp_degrees, "rejected: angles are radians only");
  fp->add_option("--tol", fp_tol, "exactness tolerance on the design gap");
  fp->add_option("--threads", fp_threads, "worker threads (0 = MBQC_THREADS or hardware)");
  fp->callback([&] {
    cli_detail::reject_degrees(fp_degrees);
    if (fp_t < 1) fail("BadFlag", "t must be at least 1");
    auto angles = cli_detail::resolve_path_angles(fp_length, fp_angles, fp_pattern);
    auto report = make_design_report(linear_cluster_ensemble(angles), fp_t, fp_tol, fp_threads);
    result.output = design_report_to_json(report).dump(2) + "\n";
  });

  // ---- ensemble -------------------------------------------------------------
  auto* ens = app.add_subcommand("ensemble", "emit the branch-unitary ensemble as JSON");
  std::string ens_graph;
  int ens_length = 0;
  std::vector<double> ens_angles;
  std::string ens_pattern;
  bool ens_degrees = false;
  double ens_tol = 1e-9;
  ens->add_option("--graph", ens_graph, "open-graph JSON file");
  ens->add_option("--length", ens_length, "measured-path length (without --graph)");
  ens->add_option("--angles", ens_angles, "comma-separated step angles in radians")
      ->delimiter(',');
  ens->add_option("--pattern", ens_pattern, "named pattern: pi4");
  ens->add_flag("--degrees", ens_degrees, "rejected: angles are radians only");
  ens->add_option("--tol", ens_tol, "branch unitarity tolerance");
  ens->callback([&] {
    cli_detail::reject_degrees(ens_degrees);
    UnitaryEnsemble e;
    if (!ens_graph.empty()) {
      if (ens_length != 0 || !ens_angles.empty() || !ens_pattern.empty()) {
        fail("BadFlag", "--graph excludes the path flags");
      }
      e = graph_ensemble(graph_from_json(cli_detail::read_json_file(ens_graph)), ens_tol);
    } else {
      auto angles = cli_detail::resolve_path_angles(ens_length, ens_angles, ens_pattern);
      e = linear_cluster_ensemble(angles);
    }
    result.output = ensemble_to_json(e).dump(2) + "\n";
  });

  // ---- verify ---------------------------------------------------------------
  auto* ver = app.add_subcommand("verify", "check a graph ensemble against a design order, "
                                           "or the five-step ensemble against the catalog");
  bool ver_catalog = false;
  std::string ver_graph;
  int ver_t = 0;
  double ver_tol = 1e-9;
  unsigned ver_threads = 0;
  ver->add_flag("--catalog", ver_catalog, "match the optimal five-step ensemble to the 32-entry catalog");
  ver->add_option("--graph", ver_graph, "open-graph JSON file");
  ver->add_option("--t", ver_t, "design order for --graph verification");
  ver->add_option("--tol", ver_tol, "matching / exactness tolerance");
  ver->add_option("--threads", ver_threads, "worker threads");
  ver->callback([&] {
    if (ver_catalog == !ver_graph.empty()) {
      fail("BadFlag", "give exactly one of --catalog or --graph");
    }
    if (ver_catalog) {
      auto e = linear_cluster_ensemble(optimal_five_step_angles());
      auto catalog = l5_catalog();
      auto rep = verify_catalog_match(e, catalog, ver_tol);
      result.output = cli_detail::catalog_report_to_json(rep, catalog.size()).dump(2) + "\n";
      result.exit_code = rep.perfect ? 0 : 1;
      return;
    }
    if (ver_t < 1) fail("BadFlag", "--graph verification needs --t >= 1");
    auto g = graph_from_json(cli_detail::read_json_file(ver_graph));
    auto report = make_design_report(graph_ensemble(g), ver_t, ver_tol, ver_threads);
    nlohmann::json j = design_report_to_json(report);
    j["mode"] = "graph";
    result.output = j.dump(2) + "\n";
    result.exit_code = report.exact ? 0 : 1;
  });

  // ---- fuse -----------------------------------------------------------------
  auto* fuse = app.add_subcommand("fuse", "equal-outcome fusion rewrite of an open graph");
  std::string fuse_graph;
  std::string fuse_basis;
  std::vector<int> fuse_set;
  std::vector<std::string> fuse_neighbors;
  std::string fuse_out;
  fuse->add_option("--graph", fuse_graph, "open-graph JSON file")->required();
  fuse->add_option("--basis", fuse_basis, "fusion basis: z, x, or y")->required();
  fuse->add_option("--set", fuse_set, "comma-separated fused vertex ids")
      ->delimiter(',')
      ->required();
  fuse->add_option("--neighbors", fuse_neighbors,
                   "x fusion neighbor choices as fusedVertex:neighbor pairs")
      ->delimiter(',');
  fuse->add_option("--out", fuse_out, "also write the result JSON to this file");
  fuse->callback([&] {
    auto g = graph_from_json(cli_detail::read_json_file(fuse_graph));
    FusionResult r;
    if (fuse_basis == "z") {
      if (!fuse_neighbors.empty()) fail("BadFlag", "--neighbors applies to x fusion only");
      r = fuse_z(g, fuse_set);
    } else if (fuse_basis == "y") {
      if (!fuse_neighbors.empty()) fail("BadFlag", "--neighbors applies to x fusion only");
      r = fuse_y(g, fuse_set);
    } else if (fuse_basis == "x") {
      auto nb = fuse_neighbors.empty() ? choose_fusion_neighbors(g, fuse_set)
                                       : cli_detail::parse_neighbor_map(fuse_neighbors);
      r = fuse_x(g, fuse_set, nb);
    } else {
      fail("BadFlag", "basis must be z, x, or y");
    }
    std::string text = fusion_result_to_json(r).dump(2) + "\n";
    if (!fuse_out.empty()) cli_detail::write_text_file(fuse_out, text);
    result.output = text;
  });

  // ---- gadget ---------------------------------------------------------------
  auto* gad = app.add_subcommand("gadget", "gadget catalog: list, show, verify, "
                                           "shift decomposition, inverse closure");
  gad->require_subcommand(1);

  auto* glist = gad->add_subcommand("list", "catalog names");
  glist->callback([&] {
    nlohmann::json names = nlohmann::json::array();
    for (const auto& g : gadget_catalog()) names.push_back(g.name);
    result.output = names.dump(2) + "\n";
  });

  auto* gshow = gad->add_subcommand("show", "graph, claim, and correlation sets of one gadget");
  std::string gshow_name;
  double gshow_angle = std::nan("");
  gshow->add_option("name", gshow_name, "gadget name")->required();
  gshow->add_option("--angle", gshow_angle, "rotation angle for wire/zrot/xrot (radians)");
  gshow->callback([&] {
    Gadget g = cli_detail::make_gadget(gshow_name, gshow_angle);
    nlohmann::json j = gadget_to_json(g);
    j["outcome_rank"] = cli_detail::rank_report_to_json(outcome_bit_rank(g.claim));
    result.output = j.dump(2) + "\n";
  });

  auto* gver = gad->add_subcommand("verify", "check every branch against the gadget's claim");
  std::string gver_name;
  std::string gver_mode = "exhaustive";
  std::uint64_t gver_count = 10000;
  std::uint64_t gver_seed = 0;
  double gver_angle = std::nan("");
  double gver_tol = 1e-9;
  unsigned gver_threads = 0;
  gver->add_option("name", gver_name, "gadget name")->required();
  gver->add_option("--mode", gver_mode, "exhaustive or sampled");
  gver->add_option("--count", gver_count, "sample count for sampled mode");
  auto* gver_seed_opt = gver->add_option("--seed", gver_seed, "sample seed for sampled mode");
  gver->add_option("--angle", gver_angle, "rotation angle for wire/zrot/xrot (radians)");
  gver->add_option("--tol", gver_tol, "phase-blind match tolerance");
  gver->add_option("--threads", gver_threads, "worker threads");
  gver->callback([&] {
    Gadget g = cli_detail::make_gadget(gver_name, gver_angle);
    VerifyOptions opt;
    opt.tol = gver_tol;
    opt.threads = gver_threads;
    if (gver_mode == "sampled") {
      if (gver_seed_opt->count() == 0) {
        fail("BadFlag", "sampled verification requires an explicit --seed");
      }
      opt.kind = VerifyKind::Sampled;
      opt.samples = gver_count;
      opt.seed = gver_seed;
    } else if (gver_mode != "exhaustive") {
      fail("BadFlag", "mode must be exhaustive or sampled");
    }
    auto rep = verify_gadget(g, opt);
    nlohmann::json j = verify_report_to_json(rep);
    j["claim"] = symbolic_to_json(g.claim);
    j["outcome_rank"] = cli_detail::rank_report_to_json(outcome_bit_rank(g.claim));
    result.output = j.dump(2) + "\n";
    result.exit_code = rep.pass() ? 0 : 1;
  });

  auto* gshift = gad->add_subcommand("shift", "swap-network decomposition into elementary gadgets");
  int gshift_n = 0;
  gshift->add_option("--n", gshift_n, "even register width, at least 4")->required();
  gshift->callback([&] {
    result.output = shift_to_json(shift_decomposition(gshift_n)).dump(2) + "\n";
  });

  auto* ginv = gad->add_subcommand("inverse-closure",
                                   "sampled inverse-closure census of the two-qubit gate family");
  int ginv_count = 0;
  std::uint64_t ginv_seed = 0;
  ginv->add_option("--count", ginv_count, "number of random family words")->required();
  auto* ginv_seed_opt = ginv->add_option("--seed", ginv_seed, "sampling seed");
  ginv->callback([&] {
    if (ginv_seed_opt->count() == 0) {
      fail("BadFlag", "inverse-closure sampling requires an explicit --seed");
    }
    if (ginv_count < 1) fail("BadFlag", "--count must be at least 1");
    auto rep = family_inverse_closure(ginv_count, ginv_seed);
    nlohmann::json j{{"checked", rep.checked},
                     {"closed", rep.closed},
                     {"restricted_checked", rep.restricted_checked},
                     {"restricted_closed", rep.restricted_closed},
                     {"pass", rep.pass()}};
    result.output = j.dump(2) + "\n";
    result.exit_code = rep.pass() ? 0 : 1;
  });

  // ---- sweep ----------------------------------------------------------------
  auto* sweep = app.add_subcommand("sweep", "design-gap curves over pattern length");
  int sweep_t = 0;
  int sweep_lmax = 0;
  std::vector<std::string> sweep_patterns;
  std::string sweep_out;
  std::uint64_t sweep_seed = 0;
  int sweep_restarts = 32;
  sweep->add_option("--t", sweep_t, "moment order")->required();
  sweep->add_option("--lmax", sweep_lmax, "largest pattern length")->required();
  sweep->add_option("--patterns", sweep_patterns, "any of pi4, single, multi")
      ->delimiter(',')
      ->required();
  sweep->add_option("--out", sweep_out, "CSV output path")->required();
  auto* sweep_seed_opt = sweep->add_option("--seed", sweep_seed, "search seed");
  sweep->add_option("--restarts", sweep_restarts, "search restarts per minimization");
  sweep->callback([&] {
    if (sweep_t < 1) fail("BadFlag", "t must be at least 1");
    if (sweep_lmax < 2) fail("DegenerateLength", "--lmax must be at least 2");
    bool want_pi4 = false, want_single = false, want_multi = false;
    for (const auto& p : sweep_patterns) {
      if (p == "pi4") {
        want_pi4 = true;
      } else if (p == "single" || p == "single_min") {
        want_single = true;
      } else if (p == "multi" || p == "multi_min") {
        want_multi = true;
      } else {
        fail("BadFlag", "unknown pattern: " + p);
      }
    }
    if ((want_single || want_multi) && sweep_seed_opt->count() == 0) {
      fail("BadFlag", "single/multi sweeps are seeded searches; --seed is required");
    }
    if (sweep_lmax > 16) fail("TooLarge", "sweeps support --lmax up to 16");
    if (want_multi && sweep_lmax > 12) {
      fail("TooLarge", "multi-angle sweeps support --lmax up to 12");
    }
    SearchConfig cfg;
    cfg.seed = sweep_seed;
    cfg.restarts = sweep_restarts;
    SweepCurve all;
    if (want_pi4) {
      auto c = sweep_constant_angle(sweep_lmax, sweep_t, pi / 4.0);
      all.points.insert(all.points.end(), c.points.begin(), c.points.end());
    }
    if (want_single) {
      auto c = sweep_single_angle(sweep_lmax, sweep_t, cfg);
      all.points.insert(all.points.end(), c.points.begin(), c.points.end());
    }
    if (want_multi) {
      auto c = sweep_multi_angle(sweep_lmax, sweep_t, cfg);
      all.points.insert(all.points.end(), c.points.begin(), c.points.end());
    }
    std::string csv = sweep_to_csv(all);
    cli_detail::write_text_file(sweep_out, csv);
    nlohmann::json summary{{"t", sweep_t},
                           {"lmax", sweep_lmax},
                           {"rows", all.points.size()},
                           {"csv_path", sweep_out}};
    nlohmann::json names = nlohmann::json::array();
    if (want_pi4) names.push_back("pi4");
    if (want_single) names.push_back("single_min");
    if (want_multi) names.push_back("multi_min");
    summary["patterns"] = names;
    nlohmann::json minima = nlohmann::json::object();
    for (const auto& p : all.points) {
      const char* tag = sweep_pattern_name(p.pattern);
      if (!minima.contains(tag) || p.delta_f < minima[tag].get<double>()) {
        minima[tag] = p.delta_f;
      }
    }
    summary["min_delta_f"] = minima;
    result.output = summary.dump(2) + "\n";
  });

  // ---- bhh-size -------------------------------------------------------------
  auto* bhh = app.add_subcommand("bhh-size", "iterations after which the iterated "
                                             "construction is an epsilon-approximate design");
  int bhh_n = 0;
  int bhh_t = 0;
  double bhh_eps = 0.0;
  double bhh_c = 1.0;
  bhh->add_option("--n", bhh_n, "register width")->required();
  bhh->add_option("--t", bhh_t, "design order")->required();
  bhh->add_option("--epsilon", bhh_eps, "target accuracy")->required();
  bhh->add_option("--C", bhh_c, "leading constant");
  bhh->callback([&] {
    if (bhh_n < 1 || bhh_t < 1) fail("BadFlag", "--n and --t must be at least 1");
    if (!(bhh_eps > 0.0)) fail("BadFlag", "--epsilon must be positive");
    if (!(bhh_c > 0.0)) fail("BadFlag", "--C must be positive");
    nlohmann::json j{{"n", bhh_n},
                     {"t", bhh_t},
                     {"epsilon", bhh_eps},
                     {"C", bhh_c},
                     {"repetitions", bhh_repetitions(bhh_n, bhh_t, bhh_eps, bhh_c)}};
    result.output = j.dump(2) + "\n";
  });

  try {
    std::vector<std::string> reversed(arguments.rbegin(), arguments.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream out, err;
    int code = app.exit(e, out, err);
    result.output += out.str();
    result.diagnostics += err.str();
    result.exit_code = code == 0 ? 0 : 2;
  } catch (const Error& e) {
    result.exit_code = cli_detail::exit_code_for_error(e.code());
    result.diagnostics += std::string(e.what()) + "\n";
    result.output = nlohmann::json{{"error", e.code()}, {"detail", e.what()}}.dump(2) + "\n";
  }
  return result;
}

// Binary entry point: forward the streams and the exit code.
inline int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  args.reserve(static_cast<std::size_t>(argc > 0 ? argc - 1 : 0));
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  CommandResult r = run_command(args);
  if (!r.output.empty()) std::fwrite(r.output.data(), 1, r.output.size(), stdout);
  if (!r.diagnostics.empty()) {
    std::fwrite(r.diagnostics.data(), 1, r.diagnostics.size(), stderr);
  }
  return r.exit_code;
}

}  // namespace mbqc
