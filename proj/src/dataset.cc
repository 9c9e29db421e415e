#include "urqe/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <unordered_set>

namespace urqe {

namespace {

constexpr std::string_view kHeader = "case_id,item_id,value";

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Unbiased draw in [0, n) by rejection; independent of the standard
// library's distribution implementation so splits match across toolchains.
std::size_t bounded(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t range = n;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return static_cast<std::size_t>(draw % range);
}

[[noreturn]] void fail_at(std::size_t line, const std::string& what) {
  throw DataError("line " + std::to_string(line) + ": " + what);
}

double parse_value(std::string_view field, const LoadOptions& options, std::size_t line) {
  if (options.format == Format::kEventCsv) {
    if (field == "0") return 0.0;
    if (field == "1") return 1.0;
    fail_at(line, "event value must be 0 or 1, got '" + std::string(field) + "'");
  }
  double raw = 0.0;
  const auto* begin = field.data();
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, raw);
  if (ec != std::errc() || ptr != end || !std::isfinite(raw)) {
    fail_at(line, "malformed rating '" + std::string(field) + "'");
  }
  if (raw < 0.0 || raw > options.raw_scale) {
    fail_at(line, "rating " + std::string(field) + " outside [0, " +
                      std::to_string(options.raw_scale) + "]");
  }
  return raw / options.raw_scale;
}

}  // namespace

std::size_t Vocabulary::intern(std::string_view id) {
  auto it = index_.find(std::string(id));
  if (it != index_.end()) return it->second;
  const std::size_t index = ids_.size();
  ids_.emplace_back(id);
  index_.emplace(ids_.back(), index);
  return index;
}

std::optional<std::size_t> Vocabulary::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TrainingMatrix::TrainingMatrix(Vocabulary cases, Vocabulary items,
                               std::vector<std::vector<Cell>> rows, ValueMode mode,
                               MissingPolicy missing, double raw_scale)
    : cases_(std::move(cases)),
      items_(std::move(items)),
      mode_(mode),
      missing_(missing),
      raw_scale_(raw_scale) {
  if (rows.size() != cases_.size()) {
    throw DataError("row count does not match case vocabulary");
  }
  if (!(raw_scale_ > 0.0)) throw DataError("raw scale must be positive");
  row_offsets_.reserve(rows.size() + 1);
  row_offsets_.push_back(0);
  for (auto& row : rows) {
    std::sort(row.begin(), row.end(),
              [](const Cell& a, const Cell& b) { return a.item < b.item; });
    for (std::size_t i = 0; i < row.size(); ++i) {
      const Cell& cell = row[i];
      if (cell.item >= items_.size()) throw DataError("cell item index out of range");
      if (i > 0 && row[i - 1].item == cell.item) throw DataError("duplicate cell");
      if (!(cell.value >= 0.0 && cell.value <= 1.0)) {
        throw DataError("cell value outside [0,1]");
      }
      if (mode_ == ValueMode::kBinary && cell.value != 0.0 && cell.value != 1.0) {
        throw DataError("binary cell value must be 0 or 1");
      }
      cells_.push_back(cell);
    }
    row_offsets_.push_back(cells_.size());
  }
}

std::span<const Cell> TrainingMatrix::row(std::size_t case_index) const {
  const std::size_t begin = row_offsets_.at(case_index);
  const std::size_t end = row_offsets_.at(case_index + 1);
  return std::span<const Cell>(cells_).subspan(begin, end - begin);
}

std::optional<double> TrainingMatrix::value(std::size_t case_index, ItemIndex item) const {
  const auto cells = row(case_index);
  auto it = std::lower_bound(cells.begin(), cells.end(), item,
                             [](const Cell& c, ItemIndex i) { return c.item < i; });
  if (it != cells.end() && it->item == item) return it->value;
  if (missing_ == MissingPolicy::kZero && item < items_.size()) return 0.0;
  return std::nullopt;
}

TrainingMatrix load_events(std::istream& in, const LoadOptions& options,
                           const Vocabulary* base_items) {
  if (options.format == Format::kRatingsCsv && !(options.raw_scale > 0.0)) {
    throw DataError("raw scale must be positive for graded data");
  }
  const ValueMode mode =
      options.format == Format::kEventCsv ? ValueMode::kBinary : ValueMode::kGraded;
  const MissingPolicy missing = options.missing.value_or(
      options.format == Format::kEventCsv ? MissingPolicy::kZero : MissingPolicy::kUnknown);
  const double raw_scale = mode == ValueMode::kGraded ? options.raw_scale : 1.0;

  Vocabulary cases;
  Vocabulary items = base_items ? *base_items : Vocabulary{};
  std::vector<std::vector<Cell>> rows;
  std::unordered_set<std::uint64_t> seen;

  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header) {
      if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
      if (line != kHeader) fail_at(line_no, "expected header '" + std::string(kHeader) + "'");
      have_header = true;
      continue;
    }
    if (line.empty()) continue;

    const std::string_view text(line);
    const auto c1 = text.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : text.find(',', c1 + 1);
    if (c2 == std::string_view::npos || text.find(',', c2 + 1) != std::string_view::npos) {
      fail_at(line_no, "expected 3 comma-separated fields");
    }
    const auto case_id = text.substr(0, c1);
    const auto item_id = text.substr(c1 + 1, c2 - c1 - 1);
    const auto value_text = text.substr(c2 + 1);
    if (case_id.empty() || item_id.empty()) fail_at(line_no, "empty id");

    const double value = parse_value(value_text, options, line_no);
    const std::size_t case_index = cases.intern(case_id);
    if (case_index == rows.size()) rows.emplace_back();
    const std::size_t item_index = items.intern(item_id);
    if (item_index > std::numeric_limits<ItemIndex>::max()) fail_at(line_no, "too many items");

    const std::uint64_t key = (static_cast<std::uint64_t>(case_index) << 32) | item_index;
    if (!seen.insert(key).second) {
      fail_at(line_no, "duplicate record for case '" + std::string(case_id) + "', item '" +
                           std::string(item_id) + "'");
    }
    rows[case_index].push_back({static_cast<ItemIndex>(item_index), value});
  }
  if (!have_header) throw DataError("empty input: missing header");

  return TrainingMatrix(std::move(cases), std::move(items), std::move(rows), mode, missing,
                        raw_scale);
}

TrainingMatrix load_events_file(const std::string& path, const LoadOptions& options,
                                const Vocabulary* base_items) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  try {
    return load_events(in, options, base_items);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::vector<TestCase> test_cases(const TrainingMatrix& data) {
  std::vector<TestCase> out;
  out.reserve(data.num_cases());
  for (std::size_t c = 0; c < data.num_cases(); ++c) {
    TestCase tc{data.cases().id(c), {}};
    for (const Cell& cell : data.row(c)) tc.labeled.push_back({cell.item, cell.value});
    out.push_back(std::move(tc));
  }
  return out;
}

SplitProtocol SplitProtocol::given(std::size_t k, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("given-k requires k >= 1");
  return {Kind::kGivenK, k, seed};
}

SplitProtocol SplitProtocol::all_but_one(std::uint64_t seed) {
  return {Kind::kAllButOne, 1, seed};
}

std::string SplitProtocol::name() const {
  return kind == Kind::kAllButOne ? "all-but-1" : "given-" + std::to_string(k);
}

std::optional<Split> split_case(const TestCase& test_case, const SplitProtocol& protocol,
                                std::uint64_t case_ordinal) {
  const std::size_t n = test_case.labeled.size();
  const std::size_t needed = protocol.kind == SplitProtocol::Kind::kGivenK ? protocol.k + 1 : 2;
  if (n < needed) return std::nullopt;

  std::vector<LabeledItem> items = test_case.labeled;
  std::sort(items.begin(), items.end(),
            [](const LabeledItem& a, const LabeledItem& b) { return a.item < b.item; });

  std::mt19937_64 rng(splitmix64(protocol.seed ^ splitmix64(case_ordinal)));
  // Partial Fisher-Yates: the first `chosen` slots become the random pick.
  const std::size_t chosen = protocol.kind == SplitProtocol::Kind::kGivenK ? protocol.k : 1;
  for (std::size_t i = 0; i < chosen; ++i) {
    std::swap(items[i], items[i + bounded(rng, n - i)]);
  }

  Split split;
  auto picked_end = items.begin() + static_cast<std::ptrdiff_t>(chosen);
  if (protocol.kind == SplitProtocol::Kind::kGivenK) {
    split.evidence.assign(items.begin(), picked_end);
    split.measurement.assign(picked_end, items.end());
  } else {
    split.measurement.assign(items.begin(), picked_end);
    split.evidence.assign(picked_end, items.end());
  }
  const auto by_item = [](const LabeledItem& a, const LabeledItem& b) { return a.item < b.item; };
  std::sort(split.evidence.begin(), split.evidence.end(), by_item);
  std::sort(split.measurement.begin(), split.measurement.end(), by_item);
  return split;
}

}  // namespace urqe
