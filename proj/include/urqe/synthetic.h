#ifndef URQE_SYNTHETIC_H_
#define URQE_SYNTHETIC_H_

#include <cstdint>
#include <string>
#include <vector>

#include "urqe/dataset.h"

namespace urqe {

// Planted-cluster preference model: item i belongs to cluster i % clusters
// and carries a popularity weight; users belong to one cluster.
struct ClusteredModel {
  std::size_t num_items = 0;
  std::size_t num_clusters = 0;
  std::vector<double> popularity;  // in [0.3, 1]
  double in_cluster_rate = 0.2;
  double out_cluster_rate = 0.02;
};

ClusteredModel make_clustered_model(std::size_t num_items, std::size_t num_clusters,
                                    std::uint64_t seed, double in_cluster_rate = 0.2,
                                    double out_cluster_rate = 0.02);

// Binary event data (positives only, absent = 0). Every model item is in the
// vocabulary as "item<N>" with index N, so samples drawn with different
// seeds share indices.
TrainingMatrix sample_events(const ClusteredModel& model, std::size_t num_users,
                             std::uint64_t seed, const std::string& user_prefix = "u");

// Integer ratings on 0..raw_scale: high inside the user's cluster, low
// outside, plus per-item bias and noise. Unrated items stay unknown.
TrainingMatrix sample_ratings(const ClusteredModel& model, std::size_t num_users,
                              std::uint64_t seed, int raw_scale = 5,
                              const std::string& user_prefix = "u");

// The 6-user, 4-movie romance/action sample problem (r1, r2, a1, a2), every
// cell explicit.
TrainingMatrix sample_problem();

// Writes the matrix back out as event-csv / ratings-csv.
void write_csv(std::ostream& out, const TrainingMatrix& data);

}  // namespace urqe

#endif  // URQE_SYNTHETIC_H_
