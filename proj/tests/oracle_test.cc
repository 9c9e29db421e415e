#include "urqe/oracle.h"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <random>
#include <sstream>

#include "urqe/synthetic.h"

namespace urqe {
namespace {

class SampleQP : public ::testing::Test {
 protected:
  SampleQP() : data(sample_problem()) {}
  ItemIndex id(const char* name) const { return static_cast<ItemIndex>(*data.items().find(name)); }

  TrainingMatrix data;
};

TEST_F(SampleQP, SupportConfigurations) {
  const ItemIndex ev[] = {id("r2"), id("a1")};
  const SupportQP qp = build_support_qp(data, ev, id("r1"));
  ASSERT_EQ(qp.num_configs(), 4u);
  const std::vector<std::vector<std::uint8_t>> configs = {{1, 0}, {0, 0}, {0, 1}, {1, 1}};
  EXPECT_EQ(qp.configs, configs);
  const double w[] = {2.0 / 6, 1.0 / 6, 2.0 / 6, 1.0 / 6};
  for (std::size_t x = 0; x < 4; ++x) EXPECT_NEAR(qp.weights[x], w[x], 1e-15);
  // P(r1) and P(r1, r2), P(r1, a1)
  EXPECT_NEAR(qp.rhs[0], 2.0 / 6, 1e-15);
  EXPECT_NEAR(qp.rhs[1], 2.0 / 6, 1e-15);
  EXPECT_NEAR(qp.rhs[2], 1.0 / 6, 1e-15);
}

TEST_F(SampleQP, SmallSupports) {
  const ItemIndex none[] = {0};
  EXPECT_EQ(build_support_qp(data, std::span<const ItemIndex>(none, 0), id("r1")).num_configs(),
            1u);
  std::istringstream in("case_id,item_id,value\nu,a,1\nu,b,0\n");
  const auto single = load_events(in, {Format::kEventCsv, 1.0, MissingPolicy::kUnknown});
  const ItemIndex ev[] = {0};
  EXPECT_EQ(build_support_qp(single, ev, 1).num_configs(), 1u);
}

TEST_F(SampleQP, RejectsBadInput) {
  const ItemIndex overlap[] = {id("r1")};
  EXPECT_THROW(build_support_qp(data, overlap, id("r1")), std::invalid_argument);
  const ItemIndex dup[] = {id("r2"), id("r2")};
  EXPECT_THROW(build_support_qp(data, dup, id("r1")), std::invalid_argument);
  std::istringstream in("case_id,item_id,value\nu,a,1\nv,b,1\n");
  const auto sparse = load_events(in, {Format::kEventCsv, 1.0, MissingPolicy::kUnknown});
  const ItemIndex ev[] = {0};
  EXPECT_THROW(build_support_qp(sparse, ev, 1), std::invalid_argument);
}

TEST_F(SampleQP, KktMatchesHandSolution) {
  const ItemIndex ev[] = {id("r2"), id("a1")};
  const SupportQP qp = build_support_qp(data, ev, id("r1"));
  const KktSolution kkt = solve_kkt(qp);
  EXPECT_TRUE(kkt.dropped_rows.empty());
  const double want[] = {7.0 / 12, -1.0 / 6, 1.0 / 12, 5.0 / 6};
  for (std::size_t x = 0; x < 4; ++x) EXPECT_NEAR(kkt.y[x], want[x], 1e-12);
  EXPECT_LE(max_constraint_violation(qp, kkt.y), 1e-8);
}

TEST_F(SampleQP, CrossCheckPasses) {
  const ItemIndex ev[] = {id("r2"), id("a1")};
  const CrossCheck check = cross_check(data, ev, id("r1"));
  EXPECT_EQ(check.status, CrossCheck::Status::kPass) << check.detail;
  EXPECT_LE(check.discrepancy, 1e-9);
  EXPECT_LE(check.constraint_violation, 1e-8);
}

TEST(CrossCheck, RandomBattery) {
  const BatteryResult result = run_battery(50, 2024, 1e-6);
  EXPECT_EQ(result.failed, 0u);
  EXPECT_EQ(result.passed, 50u);
  EXPECT_LE(result.worst_discrepancy, 1e-6);
  EXPECT_LE(result.worst_violation, 1e-8);
}

TEST(CrossCheck, CollinearEvidenceIsSkipped) {
  std::istringstream in(
      "case_id,item_id,value\n"
      "u1,x,1\nu1,y,1\nu1,t,1\n"
      "u2,x,0\nu2,y,0\nu2,t,1\n"
      "u3,x,1\nu3,y,1\nu3,t,0\n"
      "u4,x,0\nu4,y,0\nu4,t,0\n");
  const auto data = load_events(in, {Format::kEventCsv, 1.0, MissingPolicy::kUnknown});
  const ItemIndex ev[] = {0, 1};
  const CrossCheck check = cross_check(data, ev, 2);
  EXPECT_EQ(check.status, CrossCheck::Status::kSkippedRegularized);
  EXPECT_EQ(status_name(check.status), "skipped: regularized");

  // The KKT side drops the dependent row and still solves.
  const SupportQP qp = build_support_qp(data, ev, 2);
  const KktSolution kkt = solve_kkt(qp);
  EXPECT_EQ(kkt.dropped_rows.size(), 1u);
  EXPECT_LE(max_constraint_violation(qp, kkt.y), 1e-8);
}

TEST(CrossCheck, ConstantEvidenceIsSkipped) {
  std::istringstream in("case_id,item_id,value\nu1,x,1\nu1,t,1\nu2,x,1\nu2,t,0\n");
  const auto data = load_events(in, {Format::kEventCsv, 1.0, MissingPolicy::kUnknown});
  const ItemIndex ev[] = {0};
  EXPECT_EQ(cross_check(data, ev, 1).status, CrossCheck::Status::kSkippedDegenerate);
}

TEST(Kkt, FeasibleNullSpaceMovesNeverImprove) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 30; ++t) {
    const RandomInstance inst = random_instance(rng);
    const SupportQP qp = build_support_qp(inst.data, inst.evidence, inst.target);
    const KktSolution kkt = solve_kkt(qp);
    Eigen::MatrixXd a(qp.rows.size(), qp.num_configs());
    for (std::size_t j = 0; j < qp.rows.size(); ++j) {
      for (std::size_t x = 0; x < qp.num_configs(); ++x) a(j, x) = qp.rows[j][x];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    lu.setThreshold(1e-10);
    const Eigen::MatrixXd kernel = lu.kernel();
    if (lu.rank() == a.cols()) continue;
    for (Eigen::Index c = 0; c < kernel.cols(); ++c) {
      for (double step : {1e-3, -1e-3, 0.5, -0.5}) {
        std::vector<double> y = kkt.y;
        for (std::size_t x = 0; x < y.size(); ++x) y[x] += step * kernel(static_cast<Eigen::Index>(x), c);
        EXPECT_LE(max_constraint_violation(qp, y), 1e-8);
        EXPECT_GE(qp_objective(qp, y), kkt.objective - 1e-12);
      }
    }
  }
}

}  // namespace
}  // namespace urqe
