// Command-line front-end: classify, build, verify, extract, prove,
// random-test and symbolic-check. Results go to stdout as JSON; failures
// print a one-line JSON reason to stderr and exit with the codes of
// ckgen::ExitCode.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "ckgen/closure.hpp"
#include "ckgen/error.hpp"
#include "ckgen/extraction.hpp"
#include "ckgen/generator.hpp"
#include "ckgen/graph.hpp"
#include "ckgen/representation.hpp"
#include "ckgen/schedule.hpp"
#include "ckgen/symbolic.hpp"

using namespace ckgen;
using nlohmann::json;

namespace {

/// A check that ran to completion but came out negative.
struct Failed : Error {
  explicit Failed(const std::string& what) : Error(ExitCode::InvariantViolation, what) {}
};

std::string_view kind_of(ExitCode c) {
  switch (c) {
    case ExitCode::Pass: return "pass";
    case ExitCode::InvariantViolation: return "invariant_violation";
    case ExitCode::ConvergenceFailure: return "convergence_failure";
    case ExitCode::InputError: return "input_error";
  }
  return "unknown";
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << j.dump(2) << '\n';
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

/// Graph plus everything derived from it that every command needs.
struct Loaded {
  DirectedGraph graph;
  Classification cls;
};

Loaded load(const std::string& path) {
  Loaded l{load_graph(path), {}};
  const GraphValidation v = validate_graph(l.graph);
  if (!v.ok()) {
    std::string msg = path + ": invalid graph";
    for (const auto& s : v.violations) msg += "; " + s;
    throw InputError(msg);
  }
  l.cls = classify(l.graph);
  return l;
}

void require_extractable(const Loaded& l) {
  if (!l.graph.is_acyclic()) {
    throw InputError("graph has directed cycles and sinks; extraction needs an acyclic graph "
                     "(sink-free cyclic graphs use the no-sinks path)");
  }
}

CoefficientSchedule schedule_for(const Loaded& l, const std::string& schedule_path) {
  CoefficientSchedule s = schedule_path.empty()
                              ? default_schedule(l.graph, l.cls)
                              : CoefficientSchedule::from_json(read_json(schedule_path), l.graph, l.cls);
  const ScheduleReport r = validate_schedule(s, l.graph, l.cls);
  if (!r.ok()) {
    std::string msg = "schedule violates its constraints:";
    for (const auto& v : r.violations) msg += " " + v.constraint + "[" + v.indices + "]";
    throw Failed(msg);
  }
  return s;
}

int cmd_classify(const std::string& path) {
  const Loaded l = load(path);
  json out = l.cls.to_json(l.graph);
  out["validation"] = validate_graph(l.graph).to_json();
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_build(const std::string& path, const std::string& schedule_path, const std::string& out_path) {
  const Loaded l = load(path);
  const CoefficientSchedule s = schedule_for(l, schedule_path);
  const MatrixCKFamily fam = l.graph.is_acyclic() ? build_path_representation(l.graph)
                                                  : build_truncated_representation(l.graph, 6);
  const GeneratorParts parts = build_generator(fam, l.graph, l.cls, s);
  const json j = parts.to_json(l.graph, l.cls);
  if (out_path.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    write_json(j, out_path);
    std::cout << json{{"dim", fam.dim},
                      {"spectral_margin", parts.spectral_margin},
                      {"out", out_path}}
                     .dump()
              << '\n';
  }
  return 0;
}

int cmd_verify(const std::string& family_path, const std::string& graph_path, double tol) {
  const Loaded l = load(graph_path);
  const MatrixCKFamily fam = load_family(family_path);
  const CKVerification v = verify_ck_family(fam, l.graph, tol);
  std::cout << v.to_json().dump(2) << '\n';
  if (!v.passed()) throw Failed("family violates the Cuntz-Krieger relations (max residual " +
                                std::to_string(v.max_residual()) + ")");
  return 0;
}

ExtractionOptions options_from(const std::string& mode, const std::string& order, double tol) {
  ExtractionOptions o;
  o.mode = parse_mode(mode);
  o.order = parse_order(order);
  o.tol = tol;
  return o;
}

int run_no_sinks(const Loaded& l, std::size_t depth, const ExtractionOptions& opt,
                 const std::string& report_path) {
  const NoSinksResult r = no_sinks_fast_path(l.graph, default_schedule(l.graph, l.cls), depth, opt);
  const json j = r.to_json();
  if (!report_path.empty()) write_json(j, report_path);
  std::cout << j.dump(2) << '\n';
  if (!r.passed()) throw Failed("window residual " + std::to_string(r.max_residual()) + " exceeds tol");
  return 0;
}

int cmd_extract(const std::string& path, const std::string& mode, const std::string& order, double tol,
                const std::string& report_path, std::size_t depth) {
  const Loaded l = load(path);
  const ExtractionOptions opt = options_from(mode, order, tol);
  if (!l.cls.has_sinks()) return run_no_sinks(l, depth, opt, report_path);
  require_extractable(l);
  const CoefficientSchedule s = default_schedule(l.graph, l.cls);
  const MatrixCKFamily fam = build_path_representation(l.graph);
  const GeneratorParts parts = build_generator(fam, l.graph, l.cls, s);
  const ExtractionResult r = run_full_extraction(parts.g, l.graph, l.cls, s, parts.intervals, &fam, opt);
  const json j = r.report.to_json();
  if (!report_path.empty()) write_json(j, report_path);
  std::cout << j.dump(2) << '\n';
  if (!r.report.passed()) {
    throw Failed("extraction residual " + std::to_string(r.report.max_residual()) + " exceeds tol");
  }
  return 0;
}

/// build + extract + single-generation check on one graph.
struct ProveOutcome {
  bool passed = false;
  std::size_t dim = 0;
  double max_residual = 0.0;
  SingleGeneration generation;
  RecoveryReport report;
  std::string reason;
};

ProveOutcome prove(const DirectedGraph& graph, const Classification& cls, const ExtractionOptions& opt) {
  ProveOutcome o;
  const MatrixCKFamily fam = build_path_representation(graph);
  o.dim = fam.dim;
  const CKVerification v = verify_ck_family(fam, graph, 1e-12);
  if (!v.passed()) throw Failed("path representation violates the relations");
  const CoefficientSchedule s = default_schedule(graph, cls);
  const ScheduleReport sr = validate_schedule(s, graph, cls);
  if (!sr.ok()) throw Failed("default schedule is invalid");
  const GeneratorParts parts = build_generator(fam, graph, cls, s);
  const ExtractionResult r = run_full_extraction(parts.g, graph, cls, s, parts.intervals, &fam, opt);
  o.report = r.report;
  o.max_residual = r.report.max_residual();
  o.generation = single_generation_check(parts.g, fam);
  o.passed = r.report.passed() && o.generation.generated;
  if (!r.report.passed()) o.reason = "extraction residual above tol";
  else if (!o.generation.generated) o.reason = "g does not generate the family's algebra";
  return o;
}

json generation_json(const SingleGeneration& g) {
  return {{"generated", g.generated},
          {"dim_g", g.dim_g},
          {"dim_family", g.dim_family},
          {"family_in_g", g.family_in_g},
          {"g_in_family", g.g_in_family}};
}

int cmd_prove(const std::string& path, const std::string& mode, double tol, const std::string& report_path) {
  const Loaded l = load(path);
  if (!l.cls.has_sinks()) {
    throw InputError("prove needs a graph with sinks; use extract for the no-sinks path");
  }
  require_extractable(l);
  const ProveOutcome o = prove(l.graph, l.cls, options_from(mode, "auto", tol));
  json j = o.report.to_json();
  j["single_generation"] = generation_json(o.generation);
  j["dims"] = {o.generation.dim_g, o.generation.dim_family};
  j["verdict"] = o.passed ? "PASS" : "FAIL";
  if (!report_path.empty()) write_json(j, report_path);
  std::cout << j.dump(2) << '\n';
  if (!o.passed) throw Failed(o.reason);
  return 0;
}

std::pair<std::uint64_t, std::uint64_t> parse_range(const std::string& s) {
  const auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      const auto v = std::stoull(s);
      return {v, v};
    }
    const auto a = std::stoull(s.substr(0, dots));
    const auto b = std::stoull(s.substr(dots + 2));
    if (b < a) throw InputError("empty seed range " + s);
    return {a, b};
  } catch (const std::logic_error&) {
    throw InputError("seed range must look like A..B, got '" + s + "'");
  }
}

struct SeedResult {
  std::uint64_t seed = 0;
  bool passed = false;
  std::string line;
};

SeedResult run_seed(std::uint64_t seed, std::size_t max_v, std::size_t max_e, std::size_t max_in,
                    std::size_t max_dim, const ExtractionOptions& opt) {
  SeedResult r{seed, false, {}};
  std::ostringstream os;
  os << "seed " << seed << ": ";
  try {
    const DirectedGraph g = random_corpus_graph(seed, max_v, max_e, max_in, max_dim);
    const Classification cls = classify(g);
    os << "|V|=" << g.num_vertices() << " |E|=" << g.num_edges() << ' ';
    const ProveOutcome o = prove(g, cls, opt);
    r.passed = o.passed;
    os << "dim=" << o.dim << " order=" << o.report.order << " residual=" << o.max_residual
       << " dims=(" << o.generation.dim_g << ',' << o.generation.dim_family << ") "
       << (o.passed ? "PASS" : "FAIL " + o.reason);
  } catch (const Error& e) {
    os << "FAIL " << kind_of(e.code()) << ": " << e.what();
  }
  r.line = os.str();
  return r;
}

int cmd_random_test(const std::string& seeds, std::size_t max_v, std::size_t max_e, std::size_t max_in,
                    std::size_t max_dim, bool parallel, const std::string& mode, double tol) {
  const auto [a, b] = parse_range(seeds);
  const ExtractionOptions opt = options_from(mode, "auto", tol);
  const std::size_t count = static_cast<std::size_t>(b - a + 1);
  std::vector<SeedResult> results(count);
  const auto t0 = std::chrono::steady_clock::now();
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      results[i] = run_seed(a + i, max_v, max_e, max_in, max_dim, opt);
    }
  };
  const unsigned threads = parallel ? std::max(1u, std::thread::hardware_concurrency()) : 1u;
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::size_t passed = 0;
  for (const SeedResult& r : results) {
    std::cout << r.line << '\n';
    passed += r.passed;
  }
  std::cout << passed << '/' << count << " PASS (" << secs << " s, " << threads << " thread"
            << (threads == 1 ? "" : "s") << ")\n";
  if (passed != count) throw Failed(std::to_string(count - passed) + " seeds failed");
  return 0;
}

int cmd_symbolic_check(const std::string& path) {
  const Loaded l = load(path);
  auto g = std::make_shared<const DirectedGraph>(l.graph);
  const OrthogonalityReport r = verify_orthogonality_lemma(g, l.cls);
  std::cout << r.to_json().dump(2) << '\n';
  if (!r.passed()) throw Failed(std::to_string(r.failures()) + " identities fail");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-generator construction for graph C*-algebras of finite graphs"};
  app.require_subcommand(1);

  std::string graph_path, family_path, schedule_path, out_path, report_path;
  std::string mode = "power", order = "auto", seeds = "1..100";
  double tol = 1e-6, verify_tol = 1e-12;
  std::size_t depth = 6, max_v = 8, max_e = 14, max_in = 4, max_dim = 40;
  bool parallel = false;

  auto* classify_cmd = app.add_subcommand("classify", "Sink / boundary / interior taxonomy of a graph");
  classify_cmd->add_option("graph", graph_path, "Graph JSON")->required();

  auto* build_cmd = app.add_subcommand("build", "Assemble g = a+b+c+d and its construction metadata");
  build_cmd->add_option("graph", graph_path, "Graph JSON")->required();
  build_cmd->add_option("--schedule", schedule_path, "Coefficient schedule JSON (default formulas otherwise)");
  build_cmd->add_option("--out", out_path, "Write the parts JSON here instead of stdout");

  auto* verify_cmd = app.add_subcommand("verify", "Check a family file against the Cuntz-Krieger relations");
  verify_cmd->add_option("family", family_path, "Family JSON")->required();
  verify_cmd->add_option("graph", graph_path, "Graph JSON")->required();
  verify_cmd->add_option("--tol", verify_tol, "Residual tolerance");

  auto* extract_cmd = app.add_subcommand("extract", "Recover the family from g alone");
  extract_cmd->add_option("graph", graph_path, "Graph JSON")->required();
  extract_cmd->add_option("--mode", mode, "power or spectral")->check(CLI::IsMember({"power", "spectral"}));
  extract_cmd->add_option("--order", order, "auto, interior-first or sinks-first")
      ->check(CLI::IsMember({"auto", "interior-first", "sinks-first"}));
  extract_cmd->add_option("--tol", tol, "Residual threshold for PASS");
  extract_cmd->add_option("--report", report_path, "Write the report JSON here as well");
  extract_cmd->add_option("--depth", depth, "Truncation depth L for sink-free graphs")
      ->check(CLI::PositiveNumber);

  auto* prove_cmd = app.add_subcommand("prove", "build + extract + single-generation check");
  prove_cmd->add_option("graph", graph_path, "Graph JSON")->required();
  prove_cmd->add_option("--mode", mode, "power or spectral")->check(CLI::IsMember({"power", "spectral"}));
  prove_cmd->add_option("--tol", tol, "Residual threshold for PASS");
  prove_cmd->add_option("--report", report_path, "Write the report JSON here as well");

  auto* random_cmd = app.add_subcommand("random-test", "Run prove over a range of random acyclic graphs");
  random_cmd->add_option("--seeds", seeds, "Seed range A..B");
  random_cmd->add_option("--max-v", max_v, "Largest vertex count")->check(CLI::PositiveNumber);
  random_cmd->add_option("--max-e", max_e, "Largest edge count");
  random_cmd->add_option("--max-sink-indegree", max_in, "Largest in-degree of a sink")->check(CLI::PositiveNumber);
  random_cmd->add_option("--max-dim", max_dim, "Redraw graphs whose path space is larger")
      ->check(CLI::PositiveNumber);
  random_cmd->add_flag("--parallel", parallel, "Spread seeds over hardware threads");
  random_cmd->add_option("--mode", mode, "power or spectral")->check(CLI::IsMember({"power", "spectral"}));
  random_cmd->add_option("--tol", tol, "Residual threshold for PASS");

  auto* symbolic_cmd = app.add_subcommand("symbolic-check", "Exact check of the orthogonality relations");
  symbolic_cmd->add_option("graph", graph_path, "Graph JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    // Usage errors are input errors; --help stays a success.
    return rc == 0 ? 0 : static_cast<int>(ExitCode::InputError);
  }

  try {
    if (*classify_cmd) return cmd_classify(graph_path);
    if (*build_cmd) return cmd_build(graph_path, schedule_path, out_path);
    if (*verify_cmd) return cmd_verify(family_path, graph_path, verify_tol);
    if (*extract_cmd) return cmd_extract(graph_path, mode, order, tol, report_path, depth);
    if (*prove_cmd) return cmd_prove(graph_path, mode, tol, report_path);
    if (*random_cmd) return cmd_random_test(seeds, max_v, max_e, max_in, max_dim, parallel, mode, tol);
    if (*symbolic_cmd) return cmd_symbolic_check(graph_path);
  } catch (const Error& e) {
    std::cerr << json{{"status", "FAIL"}, {"reason", kind_of(e.code())}, {"message", e.what()}}.dump() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << json{{"status", "FAIL"}, {"reason", "internal_error"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
  return 0;
}
