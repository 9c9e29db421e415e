#ifndef URQE_STATS_H_
#define URQE_STATS_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "urqe/dataset.h"

namespace urqe {

// Co-occurrence of two items over the cases where both are known.
// `first_sum`/`second_sum` are the item sums restricted to those cases.
struct PairStats {
  double joint = 0.0;  // sum of min(value_first, value_second)
  double first_sum = 0.0;
  double second_sum = 0.0;
  double valid = 0.0;  // number of cases with both known
};

// One entry of an item's adjacency list; `self_sum` is the owning item's
// sum restricted to the pair's valid cases.
struct Neighbor {
  ItemIndex item;
  std::uint32_t valid;
  double joint;
  double self_sum;
  double other_sum;
};

// Per-item and pairwise fuzzy-joint sums under pairwise deletion. All query
// time frequencies are ratios of these. Immutable after construction.
class CooccurrenceStats {
 public:
  CooccurrenceStats() = default;

  std::size_t num_cases() const { return num_cases_; }
  std::size_t num_items() const { return item_sum_.size(); }
  ValueMode mode() const { return mode_; }
  MissingPolicy missing() const { return missing_; }
  double raw_scale() const { return raw_scale_; }
  const Vocabulary& items() const { return items_; }

  double item_sum(ItemIndex item) const { return item_sum_.at(item); }
  std::uint64_t item_valid(ItemIndex item) const { return item_valid_.at(item); }

  // Symmetric: pair(j, k) is pair(k, j) with first/second swapped.
  // pair(j, j) = {s_j, s_j, s_j, m_j}.
  PairStats pair(ItemIndex first, ItemIndex second) const;

  // Sorted by neighbor index; the item itself is never listed.
  std::span<const Neighbor> neighbors(ItemIndex item) const;

  // Number of distinct unordered pairs with a stored entry.
  std::size_t num_pairs() const { return neighbors_.size() / 2; }

  // Reading of a pair that has no stored entry.
  PairStats absent_pair(ItemIndex first, ItemIndex second) const;

  friend CooccurrenceStats build_stats(const TrainingMatrix& data);
  friend void write_snapshot(std::ostream& out, const CooccurrenceStats& stats);
  friend CooccurrenceStats read_snapshot(std::istream& in);
  friend bool operator==(const CooccurrenceStats&, const CooccurrenceStats&);

 private:
  std::size_t num_cases_ = 0;
  ValueMode mode_ = ValueMode::kBinary;
  MissingPolicy missing_ = MissingPolicy::kZero;
  double raw_scale_ = 1.0;
  Vocabulary items_;
  std::vector<double> item_sum_;
  std::vector<std::uint64_t> item_valid_;
  std::vector<std::size_t> offsets_;
  std::vector<Neighbor> neighbors_;
};

bool operator==(const Neighbor& a, const Neighbor& b);

// Throws DataError when the matrix has no cases.
CooccurrenceStats build_stats(const TrainingMatrix& data);

struct Frequency {
  double value = 0.0;
  bool degenerate = false;
};

// s_i / m_i; {0, degenerate} when item i is never known.
Frequency prior(const CooccurrenceStats& stats, ItemIndex item);

// P(i | j) = s_ij / s_j over cases where both are known. Falls back to
// prior(i), flagged, when j has no mass on those cases.
Frequency cond_freq(const CooccurrenceStats& stats, ItemIndex target, ItemIndex given);

// Versioned little-endian binary snapshot; read_snapshot throws DataError
// on a bad magic, version or truncated stream.
void write_snapshot(std::ostream& out, const CooccurrenceStats& stats);
CooccurrenceStats read_snapshot(std::istream& in);
void write_snapshot_file(const std::string& path, const CooccurrenceStats& stats);
CooccurrenceStats read_snapshot_file(const std::string& path);

// Exact-match empirical distribution over full training configurations.
// Binary data only.
class EmpiricalDistributionView {
 public:
  explicit EmpiricalDistributionView(const TrainingMatrix& data);

  const TrainingMatrix& data() const { return *data_; }

  // P(X = x) for every distinct fully-known configuration. Cases with an
  // unknown cell are excluded, so the probabilities always sum to 1.
  std::map<std::vector<std::uint8_t>, double> distribution() const;

 private:
  const TrainingMatrix* data_;
};

// P(X_target = 1 | x_E) by exact match of the evidence values; nullopt
// when no case matches (or none of the matches knows the target).
std::optional<double> empirical_conditional(const EmpiricalDistributionView& view,
                                            ItemIndex target,
                                            std::span<const LabeledItem> evidence);

}  // namespace urqe

#endif  // URQE_STATS_H_
