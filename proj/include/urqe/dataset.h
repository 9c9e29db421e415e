#ifndef URQE_DATASET_H_
#define URQE_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace urqe {

using ItemIndex = std::uint32_t;

enum class ValueMode { kBinary, kGraded };

// How an unstored (case, item) cell is read. Event logs only record the
// positive events, so absence there means 0; rating data leaves unrated
// items unknown.
enum class MissingPolicy { kUnknown, kZero };

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bidirectional external id <-> dense index map. Indices are assigned in
// first-appearance order and never change.
class Vocabulary {
 public:
  std::size_t intern(std::string_view id);
  std::optional<std::size_t> find(std::string_view id) const;
  const std::string& id(std::size_t index) const { return ids_.at(index); }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Cell {
  ItemIndex item;
  double value;  // unit interval
};

// Sparse m x a matrix of unit-interval preferences. Rows are stored sorted
// by item index. Immutable once constructed.
class TrainingMatrix {
 public:
  TrainingMatrix() = default;

  // Validates every invariant; throws DataError on violation.
  TrainingMatrix(Vocabulary cases, Vocabulary items,
                 std::vector<std::vector<Cell>> rows, ValueMode mode,
                 MissingPolicy missing, double raw_scale);

  std::size_t num_cases() const { return row_offsets_.empty() ? 0 : row_offsets_.size() - 1; }
  std::size_t num_items() const { return items_.size(); }
  std::size_t num_cells() const { return cells_.size(); }
  ValueMode mode() const { return mode_; }
  MissingPolicy missing() const { return missing_; }
  double raw_scale() const { return raw_scale_; }

  const Vocabulary& items() const { return items_; }
  const Vocabulary& cases() const { return cases_; }

  std::span<const Cell> row(std::size_t case_index) const;

  // Stored value, or the missing-policy reading of an unstored cell
  // (nullopt when unknown).
  std::optional<double> value(std::size_t case_index, ItemIndex item) const;

 private:
  Vocabulary cases_;
  Vocabulary items_;
  std::vector<std::size_t> row_offsets_;
  std::vector<Cell> cells_;
  ValueMode mode_ = ValueMode::kBinary;
  MissingPolicy missing_ = MissingPolicy::kZero;
  double raw_scale_ = 1.0;
};

enum class Format { kEventCsv, kRatingsCsv };

struct LoadOptions {
  Format format = Format::kEventCsv;
  double raw_scale = 5.0;  // ratings-csv only
  // Defaults to kZero for event-csv and kUnknown for ratings-csv.
  std::optional<MissingPolicy> missing;
};

// Reads `case_id,item_id,value` records. When `base_items` is given the
// item vocabulary starts from it, so test data shares training indices;
// unseen items are appended after the base entries.
TrainingMatrix load_events(std::istream& in, const LoadOptions& options,
                           const Vocabulary* base_items = nullptr);
TrainingMatrix load_events_file(const std::string& path, const LoadOptions& options,
                                const Vocabulary* base_items = nullptr);

struct LabeledItem {
  ItemIndex item;
  double value;

  friend bool operator==(const LabeledItem&, const LabeledItem&) = default;
};

struct TestCase {
  std::string id;
  std::vector<LabeledItem> labeled;
};

std::vector<TestCase> test_cases(const TrainingMatrix& data);

struct SplitProtocol {
  enum class Kind { kGivenK, kAllButOne };

  Kind kind = Kind::kGivenK;
  std::size_t k = 2;
  std::uint64_t seed = 0;

  static SplitProtocol given(std::size_t k, std::uint64_t seed);
  static SplitProtocol all_but_one(std::uint64_t seed);

  // "given-2", "all-but-1"
  std::string name() const;
};

struct Split {
  std::vector<LabeledItem> evidence;
  std::vector<LabeledItem> measurement;
};

// Deterministic in (protocol.seed, case_ordinal). Returns nullopt when the
// case has too few labeled items for the protocol.
std::optional<Split> split_case(const TestCase& test_case, const SplitProtocol& protocol,
                                std::uint64_t case_ordinal);

}  // namespace urqe

#endif  // URQE_DATASET_H_
