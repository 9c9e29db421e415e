#ifndef URQE_ORACLE_H_
#define URQE_ORACLE_H_

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "urqe/dataset.h"

namespace urqe {

inline constexpr std::size_t kMaxSupportConfigs = 1024;

// The quadratic-entropy program restricted to the empirical support:
// minimize sum_x w_x [y_x^2 + (1 - y_x)^2] subject to
// sum_x w_x f_j(x) y_x = P(X_target = 1, f_j) for f_0 = 1 and one
// indicator per evidence item.
struct SupportQP {
  std::vector<ItemIndex> evidence;
  ItemIndex target = 0;
  std::vector<std::vector<std::uint8_t>> configs;  // first-appearance order
  std::vector<double> weights;                     // P(x_E), sums to 1
  std::vector<std::vector<double>> rows;           // rows[j][x] = w_x f_j(x)
  std::vector<double> rhs;                         // rhs[j]

  std::size_t num_configs() const { return configs.size(); }
  // f_j at configuration x; f_0 = 1.
  double function_value(std::size_t j, std::size_t x) const;
};

// Binary data with every evidence/target cell known. Throws
// std::invalid_argument otherwise or when the support exceeds
// kMaxSupportConfigs.
SupportQP build_support_qp(const TrainingMatrix& train, std::span<const ItemIndex> evidence,
                           ItemIndex target);

struct KktSolution {
  std::vector<double> y;                 // per support configuration
  std::vector<std::size_t> dropped_rows;  // linearly dependent constraints
  double objective = 0.0;
};

KktSolution solve_kkt(const SupportQP& qp);

double qp_objective(const SupportQP& qp, std::span<const double> y);
// max_j |sum_x rows[j][x] y_x - rhs[j]|
double max_constraint_violation(const SupportQP& qp, std::span<const double> y);

struct CrossCheck {
  enum class Status { kPass, kFail, kSkippedRegularized, kSkippedDegenerate };
  Status status = Status::kPass;
  double discrepancy = 0.0;            // max |y_closed - y_kkt| over the support
  double constraint_violation = 0.0;   // closed form against the constraints
  std::string detail;
};

// Closed-form solve with full enforcement (r = 0) against the KKT optimum.
CrossCheck cross_check(const TrainingMatrix& train, std::span<const ItemIndex> evidence,
                       ItemIndex target, double tol = 1e-6);

std::string status_name(CrossCheck::Status status);

// Dense binary instance with every cell stored.
struct RandomInstance {
  TrainingMatrix data;
  std::vector<ItemIndex> evidence;
  ItemIndex target = 0;
};

RandomInstance random_instance(std::mt19937_64& rng, std::size_t max_cases = 32,
                               std::size_t max_items = 8, std::size_t max_evidence = 4);

struct BatteryResult {
  std::size_t passed = 0;
  std::size_t failed = 0;
  std::size_t skipped = 0;
  double worst_discrepancy = 0.0;
  double worst_violation = 0.0;
  std::vector<std::string> failures;
};

// Draws random instances until `nondegenerate` of them were checked.
BatteryResult run_battery(std::size_t nondegenerate, std::uint64_t seed, double tol = 1e-6);

}  // namespace urqe

#endif  // URQE_ORACLE_H_
