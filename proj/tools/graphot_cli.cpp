// graphot: command-line front end for the graph optimal-transport library.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#if __has_include(<CLI/CLI.hpp>)
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif
#include <nlohmann/json.hpp>

#include "graphot/graphot.hpp"
#include "graphot/io.hpp"

namespace {

using graphot::Error;
using graphot::ErrorCode;
using graphot::Matrix;
using graphot::Measure;
using graphot::Vector;
using graphot::WeightedGraph;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

enum ExitCode { kOk = 0, kInputError = 2, kConvergenceError = 3, kVerificationFailure = 4 };

std::string g_command_echo;

json envelope(const std::string& command, json inputs, json payload) {
  return {{"command", command},
          {"echo", g_command_echo},
          {"version", kVersion},
          {"inputs", std::move(inputs)},
          {"payload", std::move(payload)}};
}

void print(const json& doc) { std::cout << doc.dump(2) << '\n'; }

json solution_json(const graphot::BeckmannSolution& s) {
  return {{"p", s.p},
          {"distance", s.distance},
          {"duality_gap", s.duality_gap},
          {"flow", graphot::io::to_json(s.flow.values)},
          {"potential", graphot::io::to_json(s.potential)},
          {"feasibility_residual", s.flow.residual}};
}

json report_json(const graphot::BoundReport& r) {
  json constants = json::object();
  for (const auto& [name, value] : r.constants) constants[name] = value;
  json out = {{"id", r.id}, {"skipped", r.skipped}};
  if (r.skipped) {
    out["note"] = r.note;
  } else {
    out["left"] = r.left;
    out["right"] = r.right;
    out["slack"] = r.slack;
    out["constants"] = constants;
  }
  return out;
}

void write_matrix_csv(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << '\n';
  }
}

Matrix ground_metric(const WeightedGraph& g, const std::string& k, double p) {
  if (k == "d1") return graphot::shortest_path_metric(g, 1.0).matrix();
  if (k == "d2") return graphot::shortest_path_metric(g, 2.0).matrix();
  if (k == "dp") return graphot::shortest_path_metric(g, p).matrix();
  if (k == "r") return graphot::resistance_matrix(graphot::decompose_transport(g));
  throw Error(ErrorCode::kInvalidArgument, "unknown ground metric " + k);
}

// ---------------------------------------------------------------- dist

struct DistArgs {
  std::string graph, alpha, beta, metric = "beckmann", k = "d1", coupling_out;
  double p = 2.0;
};

int cmd_dist(const DistArgs& args) {
  const WeightedGraph g = graphot::io::load_graph(args.graph);
  const Measure a = graphot::io::load_measure(args.alpha);
  const Measure b = graphot::io::load_measure(args.beta);
  graphot::detail::require(args.p >= 1.0, ErrorCode::kInvalidArgument, "p must be >= 1");
  json payload;
  if (args.metric == "beckmann") {
    graphot::BeckmannSolution sol;
    if (args.p == 1.0) {
      sol = graphot::beckmann_p1(g, a, b);
    } else if (args.p == 2.0) {
      sol = graphot::beckmann_p2(graphot::decompose_transport(g), a, b);
    } else {
      sol = graphot::beckmann_general(g, a, b, args.p);
    }
    payload = solution_json(sol);
    payload["metric"] = "beckmann";
  } else if (args.metric == "wasserstein") {
    const auto res = graphot::wasserstein(ground_metric(g, args.k, args.p), a, b, args.p);
    payload = {{"metric", "wasserstein"},
               {"p", args.p},
               {"k", args.k},
               {"distance", res.distance},
               {"min_reduced_cost", res.min_reduced_cost}};
    if (!args.coupling_out.empty()) write_matrix_csv(args.coupling_out, res.coupling.plan);
  } else if (args.metric == "resistance") {
    const double r = graphot::measure_resistance(graphot::decompose(g), a, b);
    payload = {{"metric", "resistance"}, {"resistance", r}, {"sqrt_resistance", std::sqrt(r)}};
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown metric " + args.metric);
  }
  json inputs = {{"graph", graphot::io::hex64(graphot::io::hash_graph(g))},
                 {"alpha", graphot::io::hex64(graphot::io::hash_vector(a.mass()))},
                 {"beta", graphot::io::hex64(graphot::io::hash_vector(b.mass()))}};
  print(envelope("dist", std::move(inputs), std::move(payload)));
  return kOk;
}

// ---------------------------------------------------------------- verify

struct Instance {
  WeightedGraph g;
  Measure a, b;
  double p = 1.0;
};

json instance_json(const Instance& inst) {
  return {{"graph", graphot::io::graph_to_json(inst.g)},
          {"alpha", graphot::io::to_json(inst.a.mass())},
          {"beta", graphot::io::to_json(inst.b.mass())},
          {"p", inst.p}};
}

Instance random_instance(std::mt19937_64& rng, int index, bool allow_unit = true) {
  std::uniform_int_distribution<int> size(4, 12);
  const int n = size(rng);
  const bool unit = allow_unit && index % 3 == 0;
  WeightedGraph g = unit ? graphot::random_connected_graph(rng, n, 0.3, 1.0, 1.0)
                         : graphot::random_connected_graph(rng, n, 0.3, 0.5, 4.0);
  Measure a = graphot::random_measure(rng, n, 0.3);
  Measure b = graphot::random_measure(rng, n, 0.3);
  static const double ps[] = {1.0, 1.5, 2.0, 3.0};
  return {std::move(g), std::move(a), std::move(b), ps[index % 4]};
}

struct SuiteOutcome {
  json checks = json::array();
  std::optional<json> failure;
};

// Each suite records per-instance results and stops at the first failure.
SuiteOutcome suite_bounds(std::mt19937_64& rng, int instances) {
  SuiteOutcome out;
  int skipped = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < instances && !out.failure; ++k) {
    const Instance inst = random_instance(rng, k);
    json reports = json::array();
    bool ok = true;
    for (const auto& r : graphot::verify_bounds(inst.g, inst.a, inst.b, inst.p)) {
      reports.push_back(report_json(r));
      if (r.skipped) ++skipped;
      else worst = std::min(worst, r.slack);
      ok = ok && r.holds();
    }
    if (!ok) out.failure = json{{"instance", instance_json(inst)}, {"reports", reports}};
  }
  out.checks.push_back({{"check", "bounds"}, {"min_slack", worst}, {"skipped", skipped}});
  return out;
}

SuiteOutcome suite_duality(std::mt19937_64& rng, int instances) {
  SuiteOutcome out;
  double worst_gap = 0.0, worst_p1 = 0.0;
  for (int k = 0; k < instances && !out.failure; ++k) {
    Instance inst = random_instance(rng, k);
    if (inst.p == 1.0) {
      const auto sol = graphot::beckmann_p1(inst.g, inst.a, inst.b);
      const double dual = graphot::dual_value(inst.g, sol.potential, inst.a, inst.b, 1.0);
      const double err = std::abs(dual - sol.distance);
      worst_p1 = std::max(worst_p1, err);
      if (err > 1e-6) out.failure = json{{"instance", instance_json(inst)}, {"lipschitz_dual", dual}, {"b1", sol.distance}};
    } else {
      const auto sol = graphot::beckmann_general(inst.g, inst.a, inst.b, inst.p);
      const double rel = sol.duality_gap / std::max(1.0, sol.distance);
      worst_gap = std::max(worst_gap, rel);
      if (rel > 1e-8) out.failure = json{{"instance", instance_json(inst)}, {"duality_gap", sol.duality_gap}};
    }
  }
  out.checks.push_back({{"check", "relative_duality_gap"}, {"max", worst_gap}, {"tolerance", 1e-8}});
  out.checks.push_back({{"check", "p1_lipschitz_dual"}, {"max_error", worst_p1}, {"tolerance", 1e-6}});
  return out;
}

SuiteOutcome suite_commute(std::mt19937_64& rng, int instances) {
  SuiteOutcome out;
  double worst_identity = 0.0, worst_green = 0.0, worst_slack = std::numeric_limits<double>::infinity();
  for (int k = 0; k < instances && !out.failure; ++k) {
    const Instance inst = random_instance(rng, k);
    const auto ws = graphot::exact_hitting_times(inst.g);
    const auto s = graphot::decompose(inst.g);
    const double r = graphot::measure_resistance(s, inst.a, inst.b);
    const double err = std::abs(r - graphot::generalized_commute_resistance(ws, inst.a, inst.b));
    const int n = inst.g.num_vertices();
    const Matrix center = Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / n);
    const double green =
        (center * graphot::green_function(ws) * center - s.pinv_matrix()).cwiseAbs().maxCoeff();
    worst_identity = std::max(worst_identity, err);
    worst_green = std::max(worst_green, green);
    bool ok = err <= 1e-8 && green <= 1e-8;
    for (const auto& rep : graphot::verify_commute_inequalities(ws, s, inst.a, inst.b)) {
      worst_slack = std::min(worst_slack, rep.slack);
      ok = ok && rep.holds();
    }
    if (!ok) out.failure = json{{"instance", instance_json(inst)}, {"identity_error", err}, {"green_error", green}};
  }
  out.checks.push_back({{"check", "generalized_commute"}, {"max_error", worst_identity}, {"tolerance", 1e-8}});
  out.checks.push_back({{"check", "centered_green_function"}, {"max_error", worst_green}, {"tolerance", 1e-8}});
  out.checks.push_back({{"check", "commute_inequalities"}, {"min_slack", worst_slack}});
  return out;
}

SuiteOutcome suite_bb(std::mt19937_64& rng, int instances) {
  SuiteOutcome out;
  double worst_linear = 0.0, worst_curve = std::numeric_limits<double>::infinity();
  std::uniform_int_distribution<int> pieces(2, 5);
  for (int k = 0; k < instances && !out.failure; ++k) {
    const Instance inst = random_instance(rng, k);
    const auto s = graphot::decompose_transport(inst.g);
    const auto lin = graphot::benamou_brenier(s, graphot::CurveSpec::linear(inst.a, inst.b), inst.a, inst.b);
    const double rel = std::abs(lin.gap) / std::max(1e-300, lin.b2_squared);
    worst_linear = std::max(worst_linear, lin.b2_squared > 0.0 ? rel : std::abs(lin.gap));
    graphot::CurveSpec curve;
    const int segs = pieces(rng);
    curve.times.push_back(0.0);
    curve.points.push_back(inst.a.mass());
    for (int t = 1; t < segs; ++t) {
      curve.times.push_back(static_cast<double>(t) / segs);
      curve.points.push_back(graphot::random_measure(rng, inst.g.num_vertices()).mass());
    }
    curve.times.push_back(1.0);
    curve.points.push_back(inst.b.mass());
    const auto bent = graphot::benamou_brenier(s, curve, inst.a, inst.b);
    worst_curve = std::min(worst_curve, bent.gap);
    if (rel > 1e-9 || bent.gap < -1e-7) {
      out.failure = json{{"instance", instance_json(inst)}, {"linear_gap", lin.gap}, {"curve_gap", bent.gap}};
    }
  }
  out.checks.push_back({{"check", "linear_curve_relative_gap"}, {"max", worst_linear}, {"tolerance", 1e-9}});
  out.checks.push_back({{"check", "random_curve_gap"}, {"min", worst_curve}, {"tolerance", -1e-7}});
  return out;
}

SuiteOutcome suite_separability(std::mt19937_64& rng, int instances, std::uint64_t seed) {
  SuiteOutcome out;
  double worst_margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < instances && !out.failure; ++k) {
    Instance inst = random_instance(rng, k);
    const int n = inst.g.num_vertices();
    inst.a = graphot::random_measure(rng, n);
    inst.b = graphot::random_measure(rng, n);
    const auto s = graphot::decompose_transport(inst.g);
    const auto rep = graphot::separability_check(s, inst.a, inst.b, 50, seed + static_cast<std::uint64_t>(k));
    worst_margin = std::min(worst_margin, rep.margin);
    if (!rep.separated || rep.min_raw_distance < rep.raw_lower_bound - 1e-12) {
      out.failure = json{{"instance", instance_json(inst)}, {"margin", rep.margin}};
    }
  }
  out.checks.push_back({{"check", "hard_margin"}, {"min_margin", worst_margin}});
  return out;
}

struct VerifyArgs {
  std::string suite;
  std::uint64_t seed = 7;
  int instances = 50;
  std::string replay_out;
};

int cmd_verify(const VerifyArgs& args) {
  std::mt19937_64 rng(args.seed);
  SuiteOutcome outcome;
  if (args.suite == "bounds") outcome = suite_bounds(rng, args.instances);
  else if (args.suite == "duality") outcome = suite_duality(rng, args.instances);
  else if (args.suite == "commute") outcome = suite_commute(rng, args.instances);
  else if (args.suite == "bb") outcome = suite_bb(rng, args.instances);
  else if (args.suite == "separability") outcome = suite_separability(rng, args.instances, args.seed);
  else throw Error(ErrorCode::kInvalidArgument, "unknown suite " + args.suite);

  json payload = {{"suite", args.suite}, {"instances", args.instances}, {"passed", !outcome.failure},
                  {"checks", outcome.checks}};
  if (outcome.failure) {
    payload["failure"] = *outcome.failure;
    if (!args.replay_out.empty()) {
      std::ofstream(args.replay_out) << outcome.failure->dump(2) << '\n';
    }
  }
  print(envelope("verify", {{"seed", args.seed}}, std::move(payload)));
  return outcome.failure ? kVerificationFailure : kOk;
}

// ---------------------------------------------------------------- walk

struct WalkArgs {
  std::string graph, alpha, rule, check_beta;
  long walks = 1000;
  std::uint64_t seed = 1;
  long cap = 10'000'000;
  int threads = 1;
};

int cmd_walk(const WalkArgs& args) {
  const WeightedGraph g = graphot::io::load_graph(args.graph);
  const Measure a = graphot::io::load_measure(args.alpha);
  const auto colon = args.rule.find(':');
  graphot::detail::require(colon != std::string::npos, ErrorCode::kParseError,
                           "rule must be naive:<file>, hit:<j> or horizon:<t>");
  const std::string kind = args.rule.substr(0, colon);
  const std::string arg = args.rule.substr(colon + 1);
  graphot::StoppingRule rule;
  try {
    if (kind == "naive") rule = graphot::StoppingRule::naive(graphot::io::load_measure(arg));
    else if (kind == "hit") rule = graphot::StoppingRule::hit(std::stoi(arg));
    else if (kind == "horizon") rule = graphot::StoppingRule::fixed_horizon(std::stol(arg));
    else throw Error(ErrorCode::kParseError, "unknown rule " + kind);
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::kParseError, "bad rule argument: " + args.rule);
  }
  graphot::SimulationOptions opt;
  opt.max_steps = args.cap;
  opt.threads = args.threads;
  const auto rep = graphot::simulate_walks(g, a, rule, args.walks, args.seed, opt);
  json payload = {{"walks", rep.n_walks},
                  {"stop_counts", rep.stop_counts},
                  {"stop_distribution", graphot::io::to_json(graphot::stop_distribution(rep))},
                  {"target_law", graphot::io::to_json(rep.target_law)},
                  {"mean_length", rep.mean_length},
                  {"length_se", rep.length_se},
                  {"edge_traversals", rep.edge_traversals},
                  {"exit_frequency", graphot::io::to_json(rep.exit_frequency)}};
  if (!args.check_beta.empty()) {
    const Measure b = graphot::io::load_measure(args.check_beta);
    const auto chk = graphot::exit_frequency_check(g, rep, a, b);
    payload["exit_frequency_check"] = {{"residual", chk.residual},
                                       {"worst_se_ratio", chk.worst_ratio},
                                       {"within_5_se", chk.within_five_se},
                                       {"potential_error", chk.potential_error}};
  }
  json inputs = {{"graph", graphot::io::hex64(graphot::io::hash_graph(g))},
                 {"alpha", graphot::io::hex64(graphot::io::hash_vector(a.mass()))},
                 {"rule", args.rule},
                 {"seed", args.seed}};
  print(envelope("walk", std::move(inputs), std::move(payload)));
  return kOk;
}

// ---------------------------------------------------------------- embed

struct EmbedArgs {
  std::string graph, alpha, data, layout = "pixels", out;
};

graphot::CsvLayout parse_layout(const std::string& s) {
  if (s == "pixels") return graphot::CsvLayout::kPixelsWithLabel;
  if (s == "measures") return graphot::CsvLayout::kMeasureRows;
  throw Error(ErrorCode::kInvalidArgument, "layout must be pixels or measures");
}

int cmd_embed(const EmbedArgs& args) {
  const WeightedGraph g = graphot::io::load_graph(args.graph);
  Matrix rows;
  json inputs = {{"graph", graphot::io::hex64(graphot::io::hash_graph(g))}};
  if (!args.data.empty()) {
    rows = graphot::embed_dataset(graphot::ingest_csv(args.data, parse_layout(args.layout), g));
  } else {
    const Measure a = graphot::io::load_measure(args.alpha);
    rows = graphot::embed(graphot::decompose_transport(g), a).transpose();
    inputs["alpha"] = graphot::io::hex64(graphot::io::hash_vector(a.mass()));
  }
  json payload = {{"rows", rows.rows()}, {"dimension", rows.cols()}};
  if (!args.out.empty()) {
    write_matrix_csv(args.out, rows.transpose());
    payload["csv"] = args.out;
  } else if (rows.rows() == 1) {
    payload["embedding"] = graphot::io::to_json(rows.row(0).transpose());
  }
  print(envelope("embed", std::move(inputs), std::move(payload)));
  return kOk;
}

// ---------------------------------------------------------------- cluster

struct ClusterArgs {
  std::string data, graph = "lattice:8x8", layout = "pixels", metric = "beckmann2", scatter_out, svg_out;
  int k = 42, clusters = 10, runs = 100, threads = 1, synthetic = 200;
  std::uint64_t seed = 0;
  long max_pairs = 100000;
};

json evaluation_json(const graphot::ClusterEvaluation& e) {
  return {{"RI", e.rand_index},           {"ARI", e.adjusted_rand_index},
          {"MI", e.mutual_information},   {"AMI", e.adjusted_mutual_information},
          {"homogeneity", e.homogeneity}, {"completeness", e.completeness}};
}

void write_svg(const std::string& path, const std::vector<double>& x, const std::vector<double>& y, double slope) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  const double w = 480, h = 360, pad = 40;
  double xmax = 1e-12, ymax = 1e-12;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xmax = std::max(xmax, x[i]);
    ymax = std::max(ymax, y[i]);
  }
  auto sx = [&](double v) { return pad + v / xmax * (w - 2 * pad); };
  auto sy = [&](double v) { return h - pad - v / ymax * (h - 2 * pad); };
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << pad << "\" y1=\"" << h - pad << "\" x2=\"" << w - pad << "\" y2=\"" << h - pad
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << h - pad
      << "\" stroke=\"black\"/>\n";
  const std::size_t stride = std::max<std::size_t>(1, x.size() / 5000);
  for (std::size_t i = 0; i < x.size(); i += stride) {
    out << "<circle cx=\"" << sx(x[i]) << "\" cy=\"" << sy(y[i]) << "\" r=\"1\" fill=\"steelblue\" fill-opacity=\"0.4\"/>\n";
  }
  const double xend = std::min(xmax, ymax / slope);
  out << "<line x1=\"" << sx(0) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(xend) << "\" y2=\"" << sy(slope * xend)
      << "\" stroke=\"crimson\"/>\n";
  out << "<text x=\"" << w / 2 << "\" y=\"" << h - 8 << "\" text-anchor=\"middle\">B2</text>\n";
  out << "<text x=\"12\" y=\"" << h / 2 << "\">W2</text>\n";
  out << "<text x=\"" << pad + 8 << "\" y=\"" << pad << "\">slope " << slope << "</text>\n";
  out << "</svg>\n";
}

int cmd_cluster(const ClusterArgs& args) {
  const WeightedGraph base = graphot::io::load_graph(args.graph);
  graphot::DistributionalDataset ds;
  json inputs = {{"graph", graphot::io::hex64(graphot::io::hash_graph(base))}, {"seed", args.seed}};
  if (args.data.empty()) {
    graphot::detail::require(args.graph.rfind("lattice:", 0) == 0, ErrorCode::kInvalidArgument,
                             "the synthetic dataset needs a lattice:RxC graph");
    const auto x = args.graph.find('x');
    const int rows = std::stoi(args.graph.substr(8, x - 8));
    const int cols = std::stoi(args.graph.substr(x + 1));
    ds = graphot::synthetic_two_class(rows, cols, args.synthetic, args.seed);
    inputs["data"] = "synthetic";
  } else {
    const std::string text = graphot::io::read_file(args.data);
    std::istringstream in(text);
    ds = graphot::ingest_csv(in, parse_layout(args.layout), base);
    inputs["data"] = graphot::io::hex64(graphot::io::fnv1a(text.data(), text.size()));
  }
  graphot::detail::require(ds.size() >= 2, ErrorCode::kInvalidArgument, "dataset needs at least two samples");

  graphot::DistanceKind kind;
  if (args.metric == "beckmann2") kind = graphot::DistanceKind::kBeckmann2;
  else if (args.metric == "wasserstein2") kind = graphot::DistanceKind::kWasserstein2;
  else throw Error(ErrorCode::kInvalidArgument, "metric must be beckmann2 or wasserstein2");

  const Matrix dist = graphot::pairwise_distances(ds, kind, args.threads);
  const Matrix kernel = graphot::kernel_matrix(dist);
  const WeightedGraph knn = graphot::knn_graph(dist, std::min(args.k, ds.size() - 1));
  const Matrix emb = graphot::spectral_embedding(knn, args.clusters);
  const auto runs = graphot::kmeans_runs(emb, args.clusters, args.seed, args.runs);
  const auto& best = graphot::best_inertia(runs);

  double off_min = 1.0, off_sum = 0.0;
  for (int i = 0; i < ds.size(); ++i) {
    for (int j = i + 1; j < ds.size(); ++j) {
      off_min = std::min(off_min, kernel(i, j));
      off_sum += kernel(i, j);
    }
  }
  const double pairs = 0.5 * ds.size() * (ds.size() - 1.0);
  json payload = {{"metric", args.metric},
                  {"samples", ds.size()},
                  {"k", args.k},
                  {"clusters", args.clusters},
                  {"runs", args.runs},
                  {"knn_edges", knn.num_edges()},
                  {"kernel", {{"min_offdiag", off_min}, {"mean_offdiag", off_sum / pairs}}},
                  {"labels", best.labels},
                  {"inertia", best.inertia}};
  if (ds.has_labels()) {
    payload["evaluation"] = evaluation_json(graphot::evaluate(best.labels, ds.labels));
    graphot::ClusterEvaluation top;
    top.rand_index = top.adjusted_rand_index = top.mutual_information = -1e300;
    top.adjusted_mutual_information = top.homogeneity = top.completeness = -1e300;
    for (const auto& run : runs) {
      const auto e = graphot::evaluate(run.labels, ds.labels);
      top.rand_index = std::max(top.rand_index, e.rand_index);
      top.adjusted_rand_index = std::max(top.adjusted_rand_index, e.adjusted_rand_index);
      top.mutual_information = std::max(top.mutual_information, e.mutual_information);
      top.adjusted_mutual_information = std::max(top.adjusted_mutual_information, e.adjusted_mutual_information);
      top.homogeneity = std::max(top.homogeneity, e.homogeneity);
      top.completeness = std::max(top.completeness, e.completeness);
    }
    payload["best_of_runs"] = evaluation_json(top);
  }

  if (!args.scatter_out.empty() || !args.svg_out.empty()) {
    const auto pairs_list = graphot::sample_pairs(ds.size(), args.max_pairs, args.seed);
    const Matrix emb2 = graphot::embed_dataset(ds);
    std::vector<double> b2(pairs_list.size());
    for (std::size_t k = 0; k < pairs_list.size(); ++k) {
      b2[k] = (emb2.row(pairs_list[k].first) - emb2.row(pairs_list[k].second)).norm();
    }
    const std::vector<double> w2 = graphot::wasserstein2_pairs(ds, pairs_list, args.threads);
    const double slope = graphot::regression_slope(b2, w2);
    payload["scatter"] = {{"pairs", pairs_list.size()}, {"slope", slope}};
    if (!args.scatter_out.empty()) {
      std::ofstream out(args.scatter_out);
      if (!out) throw Error(ErrorCode::kIoError, "cannot write " + args.scatter_out);
      out.precision(17);
      out << "i,j,b2,w2\n";
      for (std::size_t k = 0; k < pairs_list.size(); ++k) {
        out << pairs_list[k].first << ',' << pairs_list[k].second << ',' << b2[k] << ',' << w2[k] << '\n';
      }
    }
    if (!args.svg_out.empty()) write_svg(args.svg_out, b2, w2, slope);
  }
  print(envelope("cluster run", std::move(inputs), std::move(payload)));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 0; i < argc; ++i) g_command_echo += (i ? " " : "") + std::string(argv[i] ? argv[i] : "");
  // The echo should not depend on where the binary lives.
  if (const auto slash = g_command_echo.find(' '); slash != std::string::npos) {
    g_command_echo = "graphot" + g_command_echo.substr(slash);
  } else {
    g_command_echo = "graphot";
  }

  CLI::App app{"Graph optimal transport: Beckmann and Wasserstein distances, resistance, walks, clustering"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  DistArgs dist;
  auto* dist_cmd = app.add_subcommand("dist", "Distance between two measures on a graph");
  dist_cmd->add_option("--graph", dist.graph, "Graph file (JSON/TSV) or generator such as path:3")->required();
  dist_cmd->add_option("--alpha", dist.alpha, "First measure (JSON array or one-column CSV)")->required();
  dist_cmd->add_option("--beta", dist.beta, "Second measure")->required();
  dist_cmd->add_option("--metric", dist.metric)->check(CLI::IsMember({"beckmann", "wasserstein", "resistance"}));
  dist_cmd->add_option("--p", dist.p, "Exponent p >= 1");
  dist_cmd->add_option("--k", dist.k, "Ground metric for wasserstein")->check(CLI::IsMember({"d1", "d2", "dp", "r"}));
  dist_cmd->add_option("--emit-coupling", dist.coupling_out, "Write the optimal coupling as CSV");

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify", "Randomized verification suites");
  verify_cmd->add_option("suite", verify.suite)
      ->required()
      ->check(CLI::IsMember({"bounds", "duality", "commute", "bb", "separability"}));
  verify_cmd->add_option("--seed", verify.seed);
  verify_cmd->add_option("--instances", verify.instances)->check(CLI::PositiveNumber);
  verify_cmd->add_option("--replay-out", verify.replay_out, "Write the first failing instance here");

  WalkArgs walk;
  auto* walk_cmd = app.add_subcommand("walk", "Monte-Carlo random walks with a stopping rule");
  walk_cmd->add_option("--graph", walk.graph)->required();
  walk_cmd->add_option("--alpha", walk.alpha)->required();
  walk_cmd->add_option("--rule", walk.rule, "naive:<beta file> | hit:<j> | horizon:<t>")->required();
  walk_cmd->add_option("--walks", walk.walks)->check(CLI::PositiveNumber);
  walk_cmd->add_option("--seed", walk.seed);
  walk_cmd->add_option("--cap", walk.cap, "Per-walk step cap");
  walk_cmd->add_option("--threads", walk.threads)->check(CLI::PositiveNumber);
  walk_cmd->add_option("--check-exit-frequencies", walk.check_beta, "Target measure for the exit-frequency check");

  EmbedArgs embed;
  auto* embed_cmd = app.add_subcommand("embed", "L^{-1/2} embedding of a measure or a dataset");
  embed_cmd->add_option("--graph", embed.graph)->required();
  auto* embed_alpha = embed_cmd->add_option("--alpha", embed.alpha);
  auto* embed_data = embed_cmd->add_option("--data", embed.data);
  embed_alpha->excludes(embed_data);
  embed_cmd->add_option("--layout", embed.layout)->check(CLI::IsMember({"pixels", "measures"}));
  embed_cmd->add_option("--out", embed.out, "CSV output, one row per vertex");

  ClusterArgs cluster;
  auto* cluster_cmd = app.add_subcommand("cluster", "Distributional clustering experiments");
  cluster_cmd->require_subcommand(1);
  auto* run_cmd = cluster_cmd->add_subcommand("run", "kNN spectral clustering with a B2 or W2 kernel");
  run_cmd->add_option("--data", cluster.data, "CSV dataset; omitted means the bundled synthetic set");
  run_cmd->add_option("--graph", cluster.graph);
  run_cmd->add_option("--layout", cluster.layout)->check(CLI::IsMember({"pixels", "measures"}));
  run_cmd->add_option("--metric", cluster.metric)->check(CLI::IsMember({"beckmann2", "wasserstein2"}));
  run_cmd->add_option("--k", cluster.k)->check(CLI::PositiveNumber);
  run_cmd->add_option("--clusters", cluster.clusters)->check(CLI::Range(2, 1 << 20));
  run_cmd->add_option("--seed", cluster.seed);
  run_cmd->add_option("--runs", cluster.runs)->check(CLI::PositiveNumber);
  run_cmd->add_option("--threads", cluster.threads)->check(CLI::PositiveNumber);
  run_cmd->add_option("--max-pairs", cluster.max_pairs, "Pairs sampled for the B2/W2 scatter")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--synthetic-samples", cluster.synthetic)->check(CLI::PositiveNumber);
  run_cmd->add_option("--emit-scatter", cluster.scatter_out, "CSV of (i, j, B2, W2) pairs");
  run_cmd->add_option("--emit-svg", cluster.svg_out, "SVG scatter plot with the fitted slope");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*dist_cmd) return cmd_dist(dist);
    if (*verify_cmd) return cmd_verify(verify);
    if (*walk_cmd) return cmd_walk(walk);
    if (*embed_cmd) {
      graphot::detail::require(!embed.alpha.empty() || !embed.data.empty(), ErrorCode::kInvalidArgument,
                               "embed needs --alpha or --data");
      return cmd_embed(embed);
    }
    if (*run_cmd) return cmd_cluster(cluster);
  } catch (const Error& e) {
    std::cerr << "graphot: " << e.what() << '\n';
    return e.is_convergence() ? kConvergenceError : kInputError;
  } catch (const std::exception& e) {
    std::cerr << "graphot: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}
