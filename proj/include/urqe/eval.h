#ifndef URQE_EVAL_H_
#define URQE_EVAL_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "urqe/dataset.h"
#include "urqe/solver.h"
#include "urqe/stats.h"

namespace urqe {

struct RankedItem {
  ItemIndex item;
  double score;
};

// Rank 1 first. Scores are non-increasing.
struct RankedList {
  std::vector<RankedItem> items;
};

// Descending estimate; ties by descending prior, then ascending index.
RankedList rank(const EstimateVector& estimates, const CooccurrenceStats& stats);

// Per-case half-life utility in [0, 100]; hits past the end of the list
// contribute nothing.
double half_life_case_score(const RankedList& list, std::span<const ItemIndex> measurement,
                            double half_life);

struct ScoredCase {
  RankedList ranking;
  std::vector<ItemIndex> measurement;
};

// Mean of the per-case scores. Throws std::invalid_argument on an empty case
// list, an empty measurement set or a non-positive half-life.
double half_life_score(std::span<const ScoredCase> cases, double half_life);

struct RatingPrediction {
  std::size_t case_index;
  ItemIndex item;
  double predicted;  // raw scale
  double actual;     // raw scale
};

enum class MaeAveraging {
  kPerUser,  // mean within each case, then across cases
  kPooled,
};

double mae(std::span<const RatingPrediction> predictions,
           MaeAveraging averaging = MaeAveraging::kPerUser);

// Every item ordered by prior (ties by index).
RankedList baseline_popularity(const CooccurrenceStats& stats);

// Mean known rating on the raw scale. Items with no ratings get the global
// mean and the degenerate flag.
Frequency baseline_mean_rating(const CooccurrenceStats& stats, ItemIndex item);

enum class Method { kUrqe, kBaseline };

struct EvalConfig {
  Method method = Method::kUrqe;
  QueryOptions query;
  double half_life = 5.0;
  bool clamp = true;
  MaeAveraging averaging = MaeAveraging::kPerUser;
  unsigned threads = 1;
};

struct EvalReport {
  std::string protocol;
  Method method = Method::kUrqe;
  std::string metric_name;  // "cfaccuracy" or "mae"
  double metric_value = 0.0;
  std::size_t cases_used = 0;
  std::size_t cases_skipped = 0;
  std::size_t dropped_items = 0;  // test items unknown to training
  std::size_t regularized_queries = 0;
  std::size_t fallback_queries = 0;
  std::vector<double> per_case;
  // config echo
  double r = 0.0;
  double half_life = 0.0;
  std::uint64_t seed = 0;
  bool clamp = false;
};

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Splits every test case, queries, and scores: half-life utility for binary
// data, MAE for graded data. `test` must share the training item indices
// (load it with the training vocabulary as base). Throws EvalError when no
// case is usable.
EvalReport run_protocol(const CooccurrenceStats& stats, const TrainingMatrix& test,
                        const SplitProtocol& protocol, const EvalConfig& cfg);
EvalReport run_protocol(const TrainingMatrix& train, const TrainingMatrix& test,
                        const SplitProtocol& protocol, const EvalConfig& cfg);

std::string method_name(Method method);

// `protocol,cases,metric_name,metric_value,r,b,seed`
void write_report_csv_header(std::ostream& out);
void write_report_csv_row(std::ostream& out, const EvalReport& report);
void write_report_table(std::ostream& out, std::span<const EvalReport> reports);

}  // namespace urqe

#endif  // URQE_EVAL_H_
