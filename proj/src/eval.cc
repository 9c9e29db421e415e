#include "urqe/eval.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

namespace urqe {

namespace {

struct CaseOutcome {
  bool used = false;
  double score = 0.0;
  std::vector<RatingPrediction> predictions;
  bool regularized = false;
  bool fallback = false;
  std::size_t dropped = 0;
};

CaseOutcome evaluate_case(const CooccurrenceStats& stats, const RankedList& popularity,
                          const TestCase& test_case, std::size_t ordinal,
                          const SplitProtocol& protocol, const EvalConfig& cfg) {
  CaseOutcome out;
  TestCase known{test_case.id, {}};
  for (const LabeledItem& l : test_case.labeled) {
    if (l.item < stats.num_items()) known.labeled.push_back(l);
    else ++out.dropped;
  }
  const auto split = split_case(known, protocol, ordinal);
  if (!split) return out;

  if (stats.mode() == ValueMode::kBinary) {
    std::vector<ItemIndex> relevant;
    for (const LabeledItem& l : split->measurement) {
      if (l.value > 0.5) relevant.push_back(l.item);
    }
    if (relevant.empty()) return out;

    RankedList ranking;
    if (cfg.method == Method::kUrqe) {
      const QueryResult q = answer_query(stats, split->evidence, cfg.query);
      out.regularized = q.regularized;
      out.fallback = q.prior_fallback;
      ranking = rank(q.estimates, stats);
    } else {
      for (const RankedItem& r : popularity.items) {
        const bool is_evidence =
            std::any_of(split->evidence.begin(), split->evidence.end(),
                        [&](const LabeledItem& e) { return e.item == r.item; });
        if (!is_evidence) ranking.items.push_back(r);
      }
    }
    out.score = half_life_case_score(ranking, relevant, cfg.half_life);
    out.used = true;
    return out;
  }

  const double scale = stats.raw_scale();
  if (cfg.method == Method::kUrqe) {
    std::vector<ItemIndex> hidden;
    for (const LabeledItem& l : split->measurement) hidden.push_back(l.item);
    const QueryResult q = answer_query(stats, split->evidence, cfg.query, hidden);
    out.regularized = q.regularized;
    out.fallback = q.prior_fallback;
    for (std::size_t i = 0; i < hidden.size(); ++i) {
      out.predictions.push_back({ordinal, hidden[i],
                                 predict_rating(q.estimates.estimates[i].y, scale, cfg.clamp),
                                 split->measurement[i].value * scale});
    }
  } else {
    for (const LabeledItem& l : split->measurement) {
      out.predictions.push_back(
          {ordinal, l.item, baseline_mean_rating(stats, l.item).value, l.value * scale});
    }
  }
  out.score = mae(out.predictions, MaeAveraging::kPooled);
  out.used = true;
  return out;
}

}  // namespace

RankedList rank(const EstimateVector& estimates, const CooccurrenceStats& stats) {
  struct Keyed {
    RankedItem item;
    double prior;
  };
  std::vector<Keyed> keyed;
  keyed.reserve(estimates.estimates.size());
  for (const Estimate& e : estimates.estimates) {
    keyed.push_back({{e.item, e.y}, prior(stats, e.item).value});
  }
  std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
    if (a.item.score != b.item.score) return a.item.score > b.item.score;
    if (a.prior != b.prior) return a.prior > b.prior;
    return a.item.item < b.item.item;
  });
  RankedList list;
  list.items.reserve(keyed.size());
  for (const Keyed& k : keyed) list.items.push_back(k.item);
  return list;
}

double half_life_case_score(const RankedList& list, std::span<const ItemIndex> measurement,
                            double half_life) {
  if (!(half_life > 0.0)) throw std::invalid_argument("half-life must be positive");
  if (measurement.empty()) throw std::invalid_argument("empty measurement set");
  std::vector<ItemIndex> wanted(measurement.begin(), measurement.end());
  std::sort(wanted.begin(), wanted.end());

  double achieved = 0.0;
  for (std::size_t k = 1; k <= list.items.size(); ++k) {
    if (std::binary_search(wanted.begin(), wanted.end(), list.items[k - 1].item)) {
      achieved += std::exp2(-static_cast<double>(k) / half_life);
    }
  }
  double best = 0.0;
  for (std::size_t k = 1; k <= measurement.size(); ++k) {
    best += std::exp2(-static_cast<double>(k) / half_life);
  }
  return 100.0 * achieved / best;
}

double half_life_score(std::span<const ScoredCase> cases, double half_life) {
  if (cases.empty()) throw std::invalid_argument("no cases to score");
  double total = 0.0;
  for (const ScoredCase& c : cases) total += half_life_case_score(c.ranking, c.measurement, half_life);
  return total / static_cast<double>(cases.size());
}

double mae(std::span<const RatingPrediction> predictions, MaeAveraging averaging) {
  if (predictions.empty()) throw std::invalid_argument("no predictions");
  if (averaging == MaeAveraging::kPooled) {
    double total = 0.0;
    for (const auto& p : predictions) total += std::abs(p.predicted - p.actual);
    return total / static_cast<double>(predictions.size());
  }
  std::map<std::size_t, std::pair<double, std::size_t>> per_user;
  for (const auto& p : predictions) {
    auto& [sum, count] = per_user[p.case_index];
    sum += std::abs(p.predicted - p.actual);
    ++count;
  }
  double total = 0.0;
  for (const auto& [user, acc] : per_user) total += acc.first / static_cast<double>(acc.second);
  return total / static_cast<double>(per_user.size());
}

RankedList baseline_popularity(const CooccurrenceStats& stats) {
  EstimateVector ev;
  for (ItemIndex i = 0; i < stats.num_items(); ++i) ev.estimates.push_back({i, prior(stats, i).value});
  return rank(ev, stats);
}

Frequency baseline_mean_rating(const CooccurrenceStats& stats, ItemIndex item) {
  const double scale = stats.raw_scale();
  if (item < stats.num_items() && stats.item_valid(item) > 0) {
    return {scale * stats.item_sum(item) / static_cast<double>(stats.item_valid(item)), false};
  }
  double sum = 0.0;
  double count = 0.0;
  for (ItemIndex i = 0; i < stats.num_items(); ++i) {
    sum += stats.item_sum(i);
    count += static_cast<double>(stats.item_valid(i));
  }
  return {count > 0.0 ? scale * sum / count : 0.0, true};
}

EvalReport run_protocol(const CooccurrenceStats& stats, const TrainingMatrix& test,
                        const SplitProtocol& protocol, const EvalConfig& cfg) {
  const std::vector<TestCase> cases = test_cases(test);
  const RankedList popularity = cfg.method == Method::kBaseline && stats.mode() == ValueMode::kBinary
                                    ? baseline_popularity(stats)
                                    : RankedList{};

  std::vector<CaseOutcome> outcomes(cases.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cases.size(); i = next++) {
      outcomes[i] = evaluate_case(stats, popularity, cases[i], i, protocol, cfg);
    }
  };
  const unsigned threads = std::max(1u, cfg.threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  EvalReport report;
  report.protocol = protocol.name();
  report.method = cfg.method;
  report.metric_name = stats.mode() == ValueMode::kBinary ? "cfaccuracy" : "mae";
  report.r = cfg.query.confidence.r;
  report.half_life = cfg.half_life;
  report.seed = protocol.seed;
  report.clamp = cfg.clamp;

  std::vector<RatingPrediction> predictions;
  double total = 0.0;
  for (const CaseOutcome& o : outcomes) {
    report.dropped_items += o.dropped;
    if (!o.used) {
      ++report.cases_skipped;
      continue;
    }
    ++report.cases_used;
    report.regularized_queries += o.regularized;
    report.fallback_queries += o.fallback;
    report.per_case.push_back(o.score);
    total += o.score;
    predictions.insert(predictions.end(), o.predictions.begin(), o.predictions.end());
  }
  if (report.cases_used == 0) {
    throw EvalError("no usable test cases for protocol " + report.protocol);
  }
  report.metric_value = stats.mode() == ValueMode::kBinary
                            ? total / static_cast<double>(report.cases_used)
                            : mae(predictions, cfg.averaging);
  return report;
}

EvalReport run_protocol(const TrainingMatrix& train, const TrainingMatrix& test,
                        const SplitProtocol& protocol, const EvalConfig& cfg) {
  return run_protocol(build_stats(train), test, protocol, cfg);
}

std::string method_name(Method method) { return method == Method::kUrqe ? "urqe" : "baseline"; }

void write_report_csv_header(std::ostream& out) {
  out << "protocol,cases,metric_name,metric_value,r,b,seed\n";
}

void write_report_csv_row(std::ostream& out, const EvalReport& report) {
  std::ostringstream line;
  line << std::setprecision(10) << report.protocol << ',' << report.cases_used << ','
       << method_name(report.method) << '_' << report.metric_name << ',' << report.metric_value
       << ',' << report.r << ',' << report.half_life << ',' << report.seed << '\n';
  out << line.str();
}

void write_report_table(std::ostream& out, std::span<const EvalReport> reports) {
  out << std::left << std::setw(12) << "protocol" << std::setw(10) << "method" << std::right
      << std::setw(8) << "cases" << std::setw(9) << "skipped" << std::setw(12) << "metric"
      << std::setw(12) << "value" << '\n';
  for (const EvalReport& r : reports) {
    out << std::left << std::setw(12) << r.protocol << std::setw(10) << method_name(r.method)
        << std::right << std::setw(8) << r.cases_used << std::setw(9) << r.cases_skipped
        << std::setw(12) << r.metric_name << std::setw(12) << std::fixed
        << std::setprecision(r.metric_name == "mae" ? 4 : 2) << r.metric_value << '\n';
    out.unsetf(std::ios::fixed);
  }
}

}  // namespace urqe
