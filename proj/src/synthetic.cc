#include "urqe/synthetic.h"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace urqe {

namespace {

Vocabulary item_vocabulary(std::size_t n) {
  Vocabulary items;
  for (std::size_t i = 0; i < n; ++i) items.intern("item" + std::to_string(i));
  return items;
}

double uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

ClusteredModel make_clustered_model(std::size_t num_items, std::size_t num_clusters,
                                    std::uint64_t seed, double in_cluster_rate,
                                    double out_cluster_rate) {
  if (num_items == 0 || num_clusters == 0) throw std::invalid_argument("empty model");
  ClusteredModel model{num_items, num_clusters, {}, in_cluster_rate, out_cluster_rate};
  std::mt19937_64 rng(seed);
  model.popularity.resize(num_items);
  for (double& w : model.popularity) w = 0.3 + 0.7 * uniform(rng);
  return model;
}

TrainingMatrix sample_events(const ClusteredModel& model, std::size_t num_users,
                             std::uint64_t seed, const std::string& user_prefix) {
  std::mt19937_64 rng(seed);
  Vocabulary users;
  std::vector<std::vector<Cell>> rows;
  for (std::size_t u = 0; u < num_users; ++u) {
    users.intern(user_prefix + std::to_string(u));
    const std::size_t cluster = rng() % model.num_clusters;
    std::vector<Cell> row;
    for (std::size_t i = 0; i < model.num_items; ++i) {
      const double rate =
          i % model.num_clusters == cluster ? model.in_cluster_rate : model.out_cluster_rate;
      if (uniform(rng) < rate * model.popularity[i]) {
        row.push_back({static_cast<ItemIndex>(i), 1.0});
      }
    }
    rows.push_back(std::move(row));
  }
  return TrainingMatrix(std::move(users), item_vocabulary(model.num_items), std::move(rows),
                        ValueMode::kBinary, MissingPolicy::kZero, 1.0);
}

TrainingMatrix sample_ratings(const ClusteredModel& model, std::size_t num_users,
                              std::uint64_t seed, int raw_scale,
                              const std::string& user_prefix) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.6);
  Vocabulary users;
  std::vector<std::vector<Cell>> rows;
  const double scale = raw_scale;
  for (std::size_t u = 0; u < num_users; ++u) {
    users.intern(user_prefix + std::to_string(u));
    const std::size_t cluster = rng() % model.num_clusters;
    std::vector<Cell> row;
    for (std::size_t i = 0; i < model.num_items; ++i) {
      const bool inside = i % model.num_clusters == cluster;
      // Rating propensity is cluster independent so that which items are
      // rated carries no signal; only the values do.
      if (uniform(rng) >= 0.5 * (model.in_cluster_rate + model.out_cluster_rate)) continue;
      const double mean = (inside ? 0.8 : 0.25) * scale + (model.popularity[i] - 0.65) * scale * 0.3;
      const double raw = std::clamp(std::round(mean + noise(rng)), 0.0, scale);
      row.push_back({static_cast<ItemIndex>(i), raw / scale});
    }
    rows.push_back(std::move(row));
  }
  return TrainingMatrix(std::move(users), item_vocabulary(model.num_items), std::move(rows),
                        ValueMode::kGraded, MissingPolicy::kUnknown, scale);
}

TrainingMatrix sample_problem() {
  static constexpr const char* kItems[] = {"r1", "r2", "a1", "a2"};
  static constexpr int kValues[6][4] = {{0, 1, 0, 0}, {1, 1, 0, 0}, {0, 0, 0, 1},
                                        {0, 0, 1, 1}, {0, 0, 1, 1}, {1, 1, 1, 0}};
  std::ostringstream csv;
  csv << "case_id,item_id,value\n";
  for (int u = 0; u < 6; ++u) {
    for (int i = 0; i < 4; ++i) csv << u + 1 << ',' << kItems[i] << ',' << kValues[u][i] << '\n';
  }
  std::istringstream in(csv.str());
  return load_events(in, LoadOptions{Format::kEventCsv, 1.0, MissingPolicy::kUnknown});
}

void write_csv(std::ostream& out, const TrainingMatrix& data) {
  out << "case_id,item_id,value\n";
  for (std::size_t c = 0; c < data.num_cases(); ++c) {
    for (const Cell& cell : data.row(c)) {
      out << data.cases().id(c) << ',' << data.items().id(cell.item) << ',';
      if (data.mode() == ValueMode::kBinary) {
        out << (cell.value > 0.5 ? 1 : 0);
      } else {
        out << cell.value * data.raw_scale();
      }
      out << '\n';
    }
  }
}

}  // namespace urqe
