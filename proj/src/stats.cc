#include "urqe/stats.h"

#include <algorithm>
#include <limits>
#include <unordered_map>

namespace urqe {

namespace {

struct PairAccumulator {
  double joint = 0.0;
  double first_sum = 0.0;
  double second_sum = 0.0;
  std::uint32_t valid = 0;
};

std::uint64_t pair_key(ItemIndex a, ItemIndex b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

}  // namespace

bool operator==(const Neighbor& a, const Neighbor& b) {
  return a.item == b.item && a.valid == b.valid && a.joint == b.joint &&
         a.self_sum == b.self_sum && a.other_sum == b.other_sum;
}

bool operator==(const CooccurrenceStats& a, const CooccurrenceStats& b) {
  return a.num_cases_ == b.num_cases_ && a.mode_ == b.mode_ && a.missing_ == b.missing_ &&
         a.raw_scale_ == b.raw_scale_ && a.items_.ids() == b.items_.ids() &&
         a.item_sum_ == b.item_sum_ && a.item_valid_ == b.item_valid_ &&
         a.offsets_ == b.offsets_ && a.neighbors_ == b.neighbors_;
}

std::span<const Neighbor> CooccurrenceStats::neighbors(ItemIndex item) const {
  const std::size_t begin = offsets_.at(item);
  const std::size_t end = offsets_.at(item + 1);
  return std::span<const Neighbor>(neighbors_).subspan(begin, end - begin);
}

PairStats CooccurrenceStats::absent_pair(ItemIndex first, ItemIndex second) const {
  if (missing_ == MissingPolicy::kZero) {
    return {0.0, item_sum(first), item_sum(second), static_cast<double>(num_cases_)};
  }
  return {};
}

PairStats CooccurrenceStats::pair(ItemIndex first, ItemIndex second) const {
  if (first == second) {
    const double s = item_sum(first);
    return {s, s, s, static_cast<double>(item_valid(first))};
  }
  const auto list = neighbors(first);
  auto it = std::lower_bound(list.begin(), list.end(), second,
                             [](const Neighbor& n, ItemIndex i) { return n.item < i; });
  if (it != list.end() && it->item == second) {
    return {it->joint, it->self_sum, it->other_sum, static_cast<double>(it->valid)};
  }
  return absent_pair(first, second);
}

CooccurrenceStats build_stats(const TrainingMatrix& data) {
  const std::size_t m = data.num_cases();
  if (m == 0) throw DataError("cannot build statistics from an empty training set");
  if (m > std::numeric_limits<std::uint32_t>::max()) throw DataError("too many cases");
  const std::size_t a = data.num_items();
  const bool implicit_zero = data.missing() == MissingPolicy::kZero;

  CooccurrenceStats stats;
  stats.num_cases_ = m;
  stats.mode_ = data.mode();
  stats.missing_ = data.missing();
  stats.raw_scale_ = data.raw_scale();
  stats.items_ = data.items();
  stats.item_sum_.assign(a, 0.0);
  stats.item_valid_.assign(a, implicit_zero ? m : 0);

  std::unordered_map<std::uint64_t, PairAccumulator> pairs;
  std::vector<Cell> active;
  for (std::size_t c = 0; c < m; ++c) {
    const auto row = data.row(c);
    active.clear();
    for (const Cell& cell : row) {
      stats.item_sum_[cell.item] += cell.value;
      if (!implicit_zero) ++stats.item_valid_[cell.item];
      // With implicit zeros only co-positive pairs carry information; the
      // rest is recovered from the per-item totals.
      if (!implicit_zero || cell.value > 0.0) active.push_back(cell);
    }
    for (std::size_t x = 0; x < active.size(); ++x) {
      for (std::size_t y = x + 1; y < active.size(); ++y) {
        auto& acc = pairs[pair_key(active[x].item, active[y].item)];
        acc.joint += std::min(active[x].value, active[y].value);
        acc.first_sum += active[x].value;
        acc.second_sum += active[y].value;
        ++acc.valid;
      }
    }
  }

  std::vector<std::pair<std::uint64_t, PairAccumulator>> sorted(pairs.begin(), pairs.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& l, const auto& r) { return l.first < r.first; });

  std::vector<std::size_t> degree(a, 0);
  for (const auto& [key, acc] : sorted) {
    ++degree[key >> 32];
    ++degree[key & 0xffffffffULL];
  }
  stats.offsets_.assign(a + 1, 0);
  for (std::size_t i = 0; i < a; ++i) stats.offsets_[i + 1] = stats.offsets_[i] + degree[i];
  stats.neighbors_.resize(stats.offsets_[a]);
  std::vector<std::size_t> fill(stats.offsets_.begin(), stats.offsets_.end() - 1);

  for (const auto& [key, acc] : sorted) {
    const auto j = static_cast<ItemIndex>(key >> 32);
    const auto k = static_cast<ItemIndex>(key & 0xffffffffULL);
    double sum_j = acc.first_sum;
    double sum_k = acc.second_sum;
    std::uint32_t valid = acc.valid;
    if (implicit_zero) {
      sum_j = stats.item_sum_[j];
      sum_k = stats.item_sum_[k];
      valid = static_cast<std::uint32_t>(m);
    }
    stats.neighbors_[fill[j]++] = {k, valid, acc.joint, sum_j, sum_k};
    stats.neighbors_[fill[k]++] = {j, valid, acc.joint, sum_k, sum_j};
  }
  return stats;
}

Frequency prior(const CooccurrenceStats& stats, ItemIndex item) {
  const auto valid = stats.item_valid(item);
  if (valid == 0) return {0.0, true};
  return {stats.item_sum(item) / static_cast<double>(valid), false};
}

Frequency cond_freq(const CooccurrenceStats& stats, ItemIndex target, ItemIndex given) {
  const PairStats p = stats.pair(target, given);
  if (!(p.second_sum > 0.0)) return {prior(stats, target).value, true};
  return {p.joint / p.second_sum, false};
}

EmpiricalDistributionView::EmpiricalDistributionView(const TrainingMatrix& data) : data_(&data) {
  if (data.mode() != ValueMode::kBinary) {
    throw std::invalid_argument("empirical distribution requires binary data");
  }
}

std::map<std::vector<std::uint8_t>, double> EmpiricalDistributionView::distribution() const {
  std::map<std::vector<std::uint8_t>, double> counts;
  std::size_t included = 0;
  const std::size_t a = data_->num_items();
  for (std::size_t c = 0; c < data_->num_cases(); ++c) {
    std::vector<std::uint8_t> config(a);
    bool complete = true;
    for (ItemIndex i = 0; i < a && complete; ++i) {
      const auto v = data_->value(c, i);
      if (!v) complete = false;
      else config[i] = *v > 0.5 ? 1 : 0;
    }
    if (!complete) continue;
    counts[std::move(config)] += 1.0;
    ++included;
  }
  for (auto& [config, p] : counts) p /= static_cast<double>(included);
  return counts;
}

std::optional<double> empirical_conditional(const EmpiricalDistributionView& view,
                                            ItemIndex target,
                                            std::span<const LabeledItem> evidence) {
  const TrainingMatrix& data = view.data();
  double hits = 0.0;
  double matches = 0.0;
  for (std::size_t c = 0; c < data.num_cases(); ++c) {
    const bool match = std::all_of(evidence.begin(), evidence.end(), [&](const LabeledItem& e) {
      const auto v = data.value(c, e.item);
      return v && *v == e.value;
    });
    if (!match) continue;
    const auto t = data.value(c, target);
    if (!t) continue;
    matches += 1.0;
    hits += *t;
  }
  if (matches == 0.0) return std::nullopt;
  return hits / matches;
}

}  // namespace urqe
