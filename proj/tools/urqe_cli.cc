// urqe: statistics precompute, ad-hoc queries, benchmark protocols and the
// verification suite.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "urqe/dataset.h"
#include "urqe/eval.h"
#include "urqe/oracle.h"
#include "urqe/solver.h"
#include "urqe/stats.h"
#include "urqe/synthetic.h"

namespace {

using namespace urqe;

struct RunConfig {
  std::string train;
  std::string test;
  std::string stats;
  std::string out;
  std::string mode = "binary";
  double scale = 5.0;
  std::optional<double> r;
  double half_life = 5.0;
  std::string given;
  std::uint64_t seed = 1;
  bool clamp = true;
  bool complement = false;
  bool smooth_matrix = false;
  std::string averaging = "per-user";
  unsigned threads = 1;

  // query
  std::string evidence;
  std::string evidence_file;
  std::size_t top = 0;

  // verify
  double tol = 1e-6;
  std::size_t instances = 50;
  std::string perturb;

  // synth
  std::string kind = "events";
  std::size_t users = 2000;
  std::size_t items = 200;
  std::size_t clusters = 2;
  std::uint64_t model_seed = 7;

  bool graded() const { return mode == "graded"; }
  double default_r() const { return r.value_or(graded() ? 100.0 : 5.0); }

  LoadOptions load_options() const {
    LoadOptions o;
    o.format = graded() ? Format::kRatingsCsv : Format::kEventCsv;
    o.raw_scale = scale;
    return o;
  }

  QueryOptions query_options() const {
    QueryOptions q;
    q.confidence.r = default_r();
    q.confidence.smooth_matrix = smooth_matrix;
    q.functions.complement_indicators = complement;
    return q;
  }
};

std::string flag_text(std::uint8_t flags) {
  std::string s;
  auto add = [&](std::uint8_t bit, const char* name) {
    if (!(flags & bit)) return;
    if (!s.empty()) s += '|';
    s += name;
  };
  add(kFlagNoSupport, "no-support");
  add(kFlagFallbackConditional, "fallback");
  add(kFlagRegularized, "regularized");
  add(kFlagPriorFallback, "prior-fallback");
  return s.empty() ? "-" : s;
}

std::string reason_text(DroppedEvidence::Reason reason) {
  switch (reason) {
    case DroppedEvidence::Reason::kUnknownItem: return "unknown item";
    case DroppedEvidence::Reason::kDuplicate: return "duplicate";
    case DroppedEvidence::Reason::kNoSupport: return "no support in training data";
    case DroppedEvidence::Reason::kNegativeEvidence: return "negative evidence (use --complement)";
  }
  return "?";
}

CooccurrenceStats load_stats(const RunConfig& cfg) {
  if (!cfg.stats.empty()) return read_snapshot_file(cfg.stats);
  if (cfg.train.empty()) throw std::invalid_argument("either --train or --stats is required");
  return build_stats(load_events_file(cfg.train, cfg.load_options()));
}

int cmd_stats(const RunConfig& cfg) {
  const TrainingMatrix data = load_events_file(cfg.train, cfg.load_options());
  const CooccurrenceStats stats = build_stats(data);
  write_snapshot_file(cfg.out, stats);
  std::cout << "cases=" << stats.num_cases() << " items=" << stats.num_items()
            << " pairs=" << stats.num_pairs() << '\n';
  return 0;
}

// "id=value,id=value"; also accepts one pair per line in a file.
std::vector<std::pair<std::string, double>> parse_evidence(const RunConfig& cfg) {
  std::string text = cfg.evidence;
  if (!cfg.evidence_file.empty()) {
    std::ifstream in(cfg.evidence_file);
    if (!in) throw DataError("cannot open " + cfg.evidence_file);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      text += (text.empty() ? "" : ",") + line;
    }
  }
  std::vector<std::pair<std::string, double>> out;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token.empty()) continue;
    const auto eq = token.find('=');
    if (eq == std::string::npos || eq == 0) throw DataError("bad evidence '" + token + "'");
    out.emplace_back(token.substr(0, eq), std::stod(token.substr(eq + 1)));
  }
  return out;
}

int cmd_query(const RunConfig& cfg) {
  const CooccurrenceStats stats = load_stats(cfg);
  const bool graded = stats.mode() == ValueMode::kGraded;
  std::vector<LabeledItem> evidence;
  for (const auto& [id, raw] : parse_evidence(cfg)) {
    const auto index = stats.items().find(id);
    if (!index) {
      std::cerr << "warning: unknown item '" << id << "' ignored\n";
      continue;
    }
    const double value = graded ? raw / stats.raw_scale() : raw;
    if (value < 0.0 || value > 1.0) throw DataError("evidence value out of range for '" + id + "'");
    evidence.push_back({static_cast<ItemIndex>(*index), value});
  }

  QueryOptions options = cfg.query_options();
  if (!cfg.r) options.confidence.r = graded ? 100.0 : 5.0;
  const QueryResult result = answer_query(stats, evidence, options);
  for (const DroppedEvidence& d : result.functions.dropped) {
    std::cerr << "warning: evidence '" << stats.items().id(d.item) << "' dropped: "
              << reason_text(d.reason) << '\n';
  }
  if (result.prior_fallback) std::cerr << "warning: singular system, reporting priors\n";

  const RankedList ranking = rank(result.estimates, stats);
  std::vector<std::uint8_t> flags(stats.num_items(), 0);
  for (const Estimate& e : result.estimates.estimates) flags[e.item] = e.flags;

  std::cout << (graded ? "rank,item_id,y,rating,flags\n" : "rank,item_id,y,flags\n");
  std::cout << std::setprecision(6) << std::fixed;
  const std::size_t limit = cfg.top == 0 ? ranking.items.size() : std::min(cfg.top, ranking.items.size());
  for (std::size_t k = 0; k < limit; ++k) {
    const RankedItem& it = ranking.items[k];
    std::cout << k + 1 << ',' << stats.items().id(it.item) << ',' << it.score;
    if (graded) std::cout << ',' << predict_rating(it.score, stats.raw_scale(), cfg.clamp);
    std::cout << ',' << flag_text(flags[it.item]) << '\n';
  }
  return 0;
}

std::vector<SplitProtocol> protocols(const RunConfig& cfg) {
  if (cfg.given.empty()) {
    return {SplitProtocol::given(2, cfg.seed), SplitProtocol::given(5, cfg.seed),
            SplitProtocol::given(10, cfg.seed), SplitProtocol::all_but_one(cfg.seed)};
  }
  if (cfg.given == "all-but-1") return {SplitProtocol::all_but_one(cfg.seed)};
  std::size_t pos = 0;
  const long k = std::stol(cfg.given, &pos);
  if (pos != cfg.given.size() || k < 1) throw std::invalid_argument("--given expects INT >= 1 or all-but-1");
  return {SplitProtocol::given(static_cast<std::size_t>(k), cfg.seed)};
}

int cmd_bench(const RunConfig& cfg) {
  const TrainingMatrix train = load_events_file(cfg.train, cfg.load_options());
  const TrainingMatrix test = load_events_file(cfg.test, cfg.load_options(), &train.items());
  const CooccurrenceStats stats = build_stats(train);

  EvalConfig eval;
  eval.query = cfg.query_options();
  eval.half_life = cfg.half_life;
  eval.clamp = cfg.clamp;
  eval.threads = cfg.threads;
  eval.averaging = cfg.averaging == "pooled" ? MaeAveraging::kPooled : MaeAveraging::kPerUser;

  std::vector<EvalReport> reports;
  for (const SplitProtocol& protocol : protocols(cfg)) {
    for (Method method : {Method::kUrqe, Method::kBaseline}) {
      eval.method = method;
      try {
        const auto start = std::chrono::steady_clock::now();
        reports.push_back(run_protocol(stats, test, protocol, eval));
        const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
        if (method == Method::kUrqe) {
          std::cerr << protocol.name() << ": " << reports.back().cases_used << " cases in "
                    << std::setprecision(3) << took.count() << " s\n";
        }
      } catch (const EvalError& e) {
        std::cerr << "warning: " << e.what() << '\n';
      }
    }
  }
  if (reports.empty()) throw EvalError("no protocol produced a report");
  if (reports.front().dropped_items > 0) {
    std::cerr << "warning: " << reports.front().dropped_items
              << " test ratings reference items absent from training and were ignored\n";
  }
  write_report_table(std::cout, reports);
  if (!cfg.out.empty()) {
    std::ofstream out(cfg.out, std::ios::trunc);
    if (!out) throw DataError("cannot open " + cfg.out + " for writing");
    write_report_csv_header(out);
    for (const EvalReport& r : reports) write_report_csv_row(out, r);
  }
  return 0;
}

struct GoldenOutcome {
  std::vector<double> lambda;
  double y = 0.0;
  QuerySystem system;
};

GoldenOutcome run_golden(const std::optional<std::tuple<std::size_t, std::size_t, double>>& perturb) {
  const TrainingMatrix table = sample_problem();
  const CooccurrenceStats stats = build_stats(table);
  const auto id = [&](const char* name) { return static_cast<ItemIndex>(*stats.items().find(name)); };
  const std::vector<LabeledItem> evidence = {{id("r2"), 1.0}, {id("a1"), 1.0}};
  const ConfidenceConfig full{0.0, false};
  const FunctionSet fs = build_functions(stats, evidence);
  GoldenOutcome out;
  out.system = assemble_system(stats, fs, full);
  if (perturb) {
    const auto [row, col, delta] = *perturb;
    if (row >= out.system.matrix.size() || col >= out.system.matrix.size()) {
      throw std::invalid_argument("--perturb entry outside the 3x3 system");
    }
    out.system.matrix(row, col) += delta;
  }
  const SolvedSystem solved = solve_system(out.system);
  out.lambda = lambda_row(stats, fs, full, id("r1"), solved);
  const ItemIndex target = id("r1");
  out.y = estimate_all(stats, fs, full, solved, std::span<const ItemIndex>(&target, 1)).estimates[0].y;
  return out;
}

int cmd_verify(const RunConfig& cfg) {
  std::optional<std::tuple<std::size_t, std::size_t, double>> perturb;
  if (!cfg.perturb.empty()) {
    std::stringstream ss(cfg.perturb);
    std::size_t row = 0, col = 0;
    double delta = 0.0;
    char c1 = 0, c2 = 0;
    if (!(ss >> row >> c1 >> col >> c2 >> delta) || c1 != ',' || c2 != ',') {
      throw std::invalid_argument("--perturb expects ROW,COL,DELTA");
    }
    perturb = std::make_tuple(row, col, delta);
  }

  bool ok = true;
  const double golden_tol = std::max(cfg.tol, 1e-3);
  const GoldenOutcome g = run_golden(perturb);
  const std::vector<double> expected_lambda = {-0.167, 0.750, 0.250};
  const double expected_y = 0.833;
  double worst = std::abs(g.y - expected_y);
  for (std::size_t j = 0; j < 3; ++j) worst = std::max(worst, std::abs(g.lambda[j] - expected_lambda[j]));
  const bool golden_ok = worst <= golden_tol;
  ok &= golden_ok;
  std::cout << std::setprecision(6) << std::fixed;
  std::cout << (golden_ok ? "PASS" : "FAIL") << " golden worked example: lambda=(" << g.lambda[0]
            << ", " << g.lambda[1] << ", " << g.lambda[2] << ") y=" << g.y;
  if (!golden_ok) {
    std::cout << " expected lambda=(-0.167, 0.750, 0.250) y=0.833, max diff " << worst;
  }
  std::cout << '\n';

  const BatteryResult battery = run_battery(cfg.instances, cfg.seed, cfg.tol);
  const bool battery_ok = battery.failed == 0 && battery.passed >= cfg.instances;
  ok &= battery_ok;
  std::cout << (battery_ok ? "PASS" : "FAIL") << " oracle cross-check: " << battery.passed
            << " passed, " << battery.failed << " failed, " << battery.skipped
            << " degenerate skipped; worst discrepancy " << std::scientific
            << battery.worst_discrepancy << ", worst constraint violation "
            << battery.worst_violation << std::fixed << '\n';
  for (const std::string& f : battery.failures) std::cout << "  " << f << '\n';
  return ok ? 0 : 1;
}

int cmd_example() {
  const TrainingMatrix table = sample_problem();
  const CooccurrenceStats stats = build_stats(table);
  const auto id = [&](const char* name) { return static_cast<ItemIndex>(*stats.items().find(name)); };
  const std::vector<LabeledItem> evidence = {{id("r2"), 1.0}, {id("a1"), 1.0}};
  const ConfidenceConfig full{0.0, false};
  const FunctionSet fs = build_functions(stats, evidence);
  const QuerySystem sys = assemble_system(stats, fs, full);
  const SolvedSystem solved = solve_system(sys);
  const ItemIndex target = id("r1");

  std::cout << std::fixed << std::setprecision(3);
  std::cout << "evidence: r2=1, a1=1; target r1; full enforcement (r=0)\n";
  std::cout << "constraint vector p:";
  for (const auto& f : fs.functions) std::cout << ' ' << constraint_value(stats, target, f, full);
  std::cout << "\nfunction matrix P:\n";
  for (std::size_t j = 0; j < sys.matrix.size(); ++j) {
    std::cout << ' ';
    for (std::size_t k = 0; k < sys.matrix.size(); ++k) std::cout << ' ' << sys.matrix(j, k);
    std::cout << '\n';
  }
  const auto lambda = lambda_row(stats, fs, full, target, solved);
  std::cout << "lambda:";
  for (double l : lambda) std::cout << ' ' << l;
  const double y = estimate_all(stats, fs, full, solved, std::span<const ItemIndex>(&target, 1))
                       .estimates[0]
                       .y;
  std::cout << "\ny(r1 | r2=1, a1=1) = " << y << '\n';
  std::cout << "y at other evidence configurations: (r2,a1)=(1,0) " << lambda[0] + lambda[1]
            << ", (0,1) " << lambda[0] + lambda[2] << ", (0,0) " << lambda[0] << '\n';
  return 0;
}

int cmd_synth(const RunConfig& cfg) {
  const ClusteredModel model = make_clustered_model(cfg.items, cfg.clusters, cfg.model_seed);
  const TrainingMatrix data = cfg.kind == "ratings"
                                  ? sample_ratings(model, cfg.users, cfg.seed, static_cast<int>(cfg.scale))
                                  : sample_events(model, cfg.users, cfg.seed);
  std::ofstream out(cfg.out, std::ios::trunc);
  if (!out) throw DataError("cannot open " + cfg.out + " for writing");
  write_csv(out, data);
  std::cout << "cases=" << data.num_cases() << " items=" << data.num_items()
            << " cells=" << data.num_cells() << '\n';
  return 0;
}

void add_data_options(CLI::App* app, RunConfig& cfg) {
  app->add_option("--mode", cfg.mode, "binary (event-csv) or graded (ratings-csv)")
      ->check(CLI::IsMember({"binary", "graded"}));
  app->add_option("--scale", cfg.scale, "maximum raw rating for graded data")
      ->check(CLI::PositiveNumber);
}

void add_model_options(CLI::App* app, RunConfig& cfg) {
  app->add_option("--r", cfg.r, "confidence ratio (default 5 binary, 100 graded; 0 = full enforcement)")
      ->check(CLI::NonNegativeNumber);
  app->add_flag("--complement", cfg.complement, "use complement indicators for 0-valued binary evidence");
  app->add_flag("--smooth-matrix", cfg.smooth_matrix, "also shrink the function matrix off-diagonals");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quadratic-entropy collaborative filtering"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto* stats = app.add_subcommand("stats", "precompute co-occurrence statistics");
  stats->add_option("--train", cfg.train, "training data")->required();
  stats->add_option("--out", cfg.out, "snapshot path")->required();
  add_data_options(stats, cfg);

  auto* query = app.add_subcommand("query", "score items for one user's evidence");
  query->add_option("--train", cfg.train, "training data");
  query->add_option("--stats", cfg.stats, "statistics snapshot (instead of --train)");
  query->add_option("--evidence", cfg.evidence, "comma-separated item=value pairs");
  query->add_option("--evidence-file", cfg.evidence_file, "file with one item=value per line");
  query->add_option("--top", cfg.top, "print only the first N items (0 = all)");
  query->add_option("--clamp", cfg.clamp, "clamp predicted ratings to the scale");
  add_data_options(query, cfg);
  add_model_options(query, cfg);

  auto* bench = app.add_subcommand("bench", "run the given-k / all-but-1 protocols");
  bench->add_option("--train", cfg.train, "training data")->required();
  bench->add_option("--test", cfg.test, "test data")->required();
  bench->add_option("--half-life", cfg.half_life, "half-life b of the ranking utility")
      ->check(CLI::PositiveNumber);
  bench->add_option("--given", cfg.given, "INT or all-but-1 (default: 2, 5, 10 and all-but-1)");
  bench->add_option("--seed", cfg.seed, "split seed");
  bench->add_option("--clamp", cfg.clamp, "clamp predicted ratings to the scale");
  bench->add_option("--out", cfg.out, "report CSV path");
  bench->add_option("--threads", cfg.threads, "worker threads")->check(CLI::PositiveNumber);
  bench->add_option("--averaging", cfg.averaging, "MAE averaging")
      ->check(CLI::IsMember({"per-user", "pooled"}));
  add_data_options(bench, cfg);
  add_model_options(bench, cfg);

  auto* verify = app.add_subcommand("verify", "golden example and closed-form vs KKT battery");
  verify->add_option("--tol", cfg.tol, "cross-check tolerance")->check(CLI::PositiveNumber);
  verify->add_option("--instances", cfg.instances, "nondegenerate random instances");
  verify->add_option("--seed", cfg.seed, "instance seed");
  verify->add_option("--perturb", cfg.perturb, "ROW,COL,DELTA added to one golden matrix entry");

  auto* example = app.add_subcommand("example", "print the 6x4 sample problem solution");

  auto* synth = app.add_subcommand("synth", "write a planted-cluster synthetic dataset");
  synth->add_option("--kind", cfg.kind, "events or ratings")->check(CLI::IsMember({"events", "ratings"}));
  synth->add_option("--users", cfg.users, "number of users");
  synth->add_option("--items", cfg.items, "number of items");
  synth->add_option("--clusters", cfg.clusters, "number of taste clusters");
  synth->add_option("--seed", cfg.seed, "user sampling seed");
  synth->add_option("--model-seed", cfg.model_seed, "item model seed (share it between train and test)");
  synth->add_option("--scale", cfg.scale, "maximum rating for ratings");
  synth->add_option("--out", cfg.out, "output CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*stats) return cmd_stats(cfg);
    if (*query) return cmd_query(cfg);
    if (*bench) return cmd_bench(cfg);
    if (*verify) return cmd_verify(cfg);
    if (*example) return cmd_example();
    if (*synth) return cmd_synth(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
