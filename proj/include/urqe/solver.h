#ifndef URQE_SOLVER_H_
#define URQE_SOLVER_H_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "urqe/dataset.h"
#include "urqe/linalg.h"
#include "urqe/stats.h"

namespace urqe {

// Solver tolerances.
inline constexpr double kPivotTolerance = 1e-12;
inline constexpr double kResidualTolerance = 1e-9;
inline constexpr double kRegularizationScale = 1e-9;

enum class FunctionKind {
  kConstant,    // f_0 = 1
  kPositive,    // the item's value (x_j, or the rating membership)
  kComplement,  // 1 - x_j, binary data only
};

struct IndicatorFunction {
  FunctionKind kind = FunctionKind::kConstant;
  ItemIndex item = 0;
  double query_value = 1.0;  // f(x_E) for the querying user

  friend bool operator==(const IndicatorFunction&, const IndicatorFunction&) = default;
};

struct DroppedEvidence {
  enum class Reason { kUnknownItem, kDuplicate, kNoSupport, kNegativeEvidence };
  ItemIndex item;
  Reason reason;
};

// functions[0] is always the constant function; the rest are sorted by item.
struct FunctionSet {
  std::vector<IndicatorFunction> functions;
  std::vector<DroppedEvidence> dropped;

  std::size_t size() const { return functions.size(); }
  // Number of evidence functions, excluding the constant.
  std::size_t evidence_count() const { return functions.size() - 1; }
  bool uses_item(ItemIndex item) const;
};

struct FunctionOptions {
  // Turn binary value-0 evidence into complement indicators instead of
  // dropping it.
  bool complement_indicators = false;
};

// Throws std::invalid_argument when the statistics have no items.
FunctionSet build_functions(const CooccurrenceStats& stats,
                            std::span<const LabeledItem> evidence,
                            const FunctionOptions& options = {});

struct ConfidenceConfig {
  double r = 5.0;  // shrinkage ratio toward the prior; 0 enforces fully
  // Also shrink the off-diagonal entries of the function matrix.
  bool smooth_matrix = false;
};

// Empirical co-occurrence of two functions over the cases where both
// are defined.
PairStats function_pair(const CooccurrenceStats& stats, const IndicatorFunction& a,
                        const IndicatorFunction& b);

// P(f), the mass of the function over its known cases.
Frequency function_prior(const CooccurrenceStats& stats, const IndicatorFunction& f);

// m P(f) P(not f) / (r + m P(f) P(not f)) with m the function's known-case
// count; 0 when P(f) is 0 or 1, 1 for the constant function.
double confidence(const CooccurrenceStats& stats, const IndicatorFunction& f,
                  const ConfidenceConfig& cfg);

// P(X_target = 1 | f), falling back to the target's prior when f has no
// mass on the cases where the target is known.
Frequency conditional(const CooccurrenceStats& stats, ItemIndex target,
                      const IndicatorFunction& f);

// c P(X_target = 1 | f) + (1 - c) P(X_target = 1).
double constraint_value(const CooccurrenceStats& stats, ItemIndex target,
                        const IndicatorFunction& f, const ConfidenceConfig& cfg);

struct QuerySystem {
  DenseMatrix matrix;          // (j, k) = P(f_j | f_k)
  std::vector<double> fvec;    // query-time function values, fvec[0] = 1
  std::vector<double> conf;    // confidence per function, conf[0] = 1
};

QuerySystem assemble_system(const CooccurrenceStats& stats, const FunctionSet& fs,
                            const ConfidenceConfig& cfg);

class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolvedSystem {
  std::vector<double> z;      // matrix * z = fvec
  LuFactorization lu;         // of the matrix actually solved
  bool regularized = false;
  double regularization = 0.0;  // value added to the diagonal
  double residual = 0.0;        // max-norm residual of the accepted solve
};

// Pivoted LU; on a pivot below kPivotTolerance retries once with a ridge of
// kRegularizationScale * trace / n. Throws SingularSystemError if that also
// fails.
SolvedSystem solve_system(const QuerySystem& sys);

enum EstimateFlags : std::uint8_t {
  kFlagNone = 0,
  kFlagNoSupport = 1,        // item never known in training; y = 0
  kFlagFallbackConditional = 2,  // some conditional fell back to the prior
  kFlagRegularized = 4,
  kFlagPriorFallback = 8,    // system unsolvable; y = prior
};

struct Estimate {
  ItemIndex item;
  double y;  // unbounded; not clamped
  std::uint8_t flags = kFlagNone;
};

struct EstimateVector {
  std::vector<Estimate> estimates;
};

// y_i = C_i . z for each hidden item, with C_i the confidence-blended
// constraint row. One factorization serves every item.
EstimateVector estimate_all(const CooccurrenceStats& stats, const FunctionSet& fs,
                            const ConfidenceConfig& cfg, const SolvedSystem& solved,
                            std::span<const ItemIndex> hidden);

// Explicit multipliers lambda with lambda^T P = C_target.
std::vector<double> lambda_row(const CooccurrenceStats& stats, const FunctionSet& fs,
                               const ConfidenceConfig& cfg, ItemIndex target,
                               const SolvedSystem& solved);

double predict_rating(double y, double raw_scale, bool clamp);

struct QueryOptions {
  ConfidenceConfig confidence;
  FunctionOptions functions;
};

struct QueryResult {
  FunctionSet functions;
  EstimateVector estimates;
  bool regularized = false;
  bool prior_fallback = false;
};

// Full pipeline for one query. `hidden` empty means every item not used as
// evidence. An unsolvable system degrades to priors instead of throwing.
QueryResult answer_query(const CooccurrenceStats& stats, std::span<const LabeledItem> evidence,
                         const QueryOptions& options, std::span<const ItemIndex> hidden = {});

}  // namespace urqe

#endif  // URQE_SOLVER_H_
