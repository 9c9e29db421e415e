#include "urqe/stats.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "test_util.h"
#include "urqe/synthetic.h"

namespace urqe {
namespace {

ItemIndex id(const CooccurrenceStats& s, const char* name) {
  return static_cast<ItemIndex>(*s.items().find(name));
}

TEST(BuildStats, SampleProblemCounts) {
  const auto stats = build_stats(sample_problem());
  EXPECT_EQ(stats.num_cases(), 6u);
  const auto r1 = id(stats, "r1"), r2 = id(stats, "r2"), a1 = id(stats, "a1"),
             a2 = id(stats, "a2");
  EXPECT_EQ(stats.item_sum(r1), 2.0);
  EXPECT_EQ(stats.item_sum(r2), 3.0);
  EXPECT_EQ(stats.item_sum(a1), 3.0);
  EXPECT_EQ(stats.item_sum(a2), 3.0);
  EXPECT_EQ(stats.pair(r2, a1).joint, 1.0);
  EXPECT_EQ(stats.pair(r1, r2).joint, 2.0);
  EXPECT_EQ(stats.pair(r1, a1).joint, 1.0);
  EXPECT_EQ(stats.pair(r1, r2).valid, 6.0);
}

TEST(BuildStats, EmptyRowGivesZeros) {
  Vocabulary cases;
  cases.intern("c");
  Vocabulary items;
  items.intern("x");
  items.intern("y");
  const TrainingMatrix m(cases, items, {{}}, ValueMode::kBinary, MissingPolicy::kUnknown, 1.0);
  const auto stats = build_stats(m);
  EXPECT_EQ(stats.num_cases(), 1u);
  for (ItemIndex i = 0; i < 2; ++i) {
    EXPECT_EQ(stats.item_sum(i), 0.0);
    EXPECT_EQ(stats.item_valid(i), 0u);
  }
  const PairStats p = stats.pair(0, 1);
  EXPECT_EQ(p.joint, 0.0);
  EXPECT_EQ(p.valid, 0.0);
  EXPECT_EQ(stats.num_pairs(), 0u);
}

TEST(BuildStats, NoCasesIsAnError) {
  EXPECT_THROW(build_stats(TrainingMatrix{}), DataError);
}

TrainingMatrix graded_hand_example() {
  // item j: (1.0, 0.4), item i: (0.6, 0.8)
  std::istringstream in("case_id,item_id,value\nk1,j,5\nk1,i,3\nk2,j,2\nk2,i,4\n");
  return load_events(in, {Format::kRatingsCsv, 5.0, std::nullopt});
}

TEST(BuildStats, GradedFuzzyJoint) {
  const auto stats = build_stats(graded_hand_example());
  const auto j = id(stats, "j"), i = id(stats, "i");
  EXPECT_NEAR(stats.pair(i, j).joint, 1.0, 1e-15);
  EXPECT_NEAR(stats.item_sum(j), 1.4, 1e-15);
  EXPECT_NEAR(cond_freq(stats, i, j).value, 1.0 / 1.4, 1e-12);
  EXPECT_NEAR(cond_freq(stats, i, j).value, 0.714, 1e-3);
}

TEST(CondFreq, SampleProblem) {
  const auto stats = build_stats(sample_problem());
  const auto r2 = id(stats, "r2"), a1 = id(stats, "a1");
  EXPECT_NEAR(cond_freq(stats, r2, a1).value, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(cond_freq(stats, r2, a1).value, 0.33, 5e-3);
  for (ItemIndex j = 0; j < 4; ++j) EXPECT_EQ(cond_freq(stats, j, j).value, 1.0);
}

TEST(CondFreq, DegenerateFallsBackToPrior) {
  std::istringstream in("case_id,item_id,value\nu1,a,1\nu2,a,0\nu2,b,0\n");
  const auto stats = build_stats(load_events(in, {Format::kEventCsv, 1.0, MissingPolicy::kUnknown}));
  const auto a = id(stats, "a"), b = id(stats, "b");
  const Frequency f = cond_freq(stats, a, b);
  EXPECT_TRUE(f.degenerate);
  EXPECT_EQ(f.value, prior(stats, a).value);
  EXPECT_EQ(prior(stats, a).value, 0.5);
}

TEST(Prior, SampleProblem) {
  const auto stats = build_stats(sample_problem());
  EXPECT_NEAR(prior(stats, id(stats, "r1")).value, 2.0 / 6.0, 1e-15);
  EXPECT_EQ(prior(stats, id(stats, "r2")).value, 0.5);
  EXPECT_FALSE(prior(stats, id(stats, "r2")).degenerate);
}

TEST(Prior, NeverKnownItemIsDegenerate) {
  std::istringstream in("case_id,item_id,value\nu1,a,4\n");
  Vocabulary base;
  base.intern("ghost");
  const auto stats = build_stats(load_events(in, {Format::kRatingsCsv, 5.0, std::nullopt}, &base));
  const Frequency p = prior(stats, 0);
  EXPECT_EQ(p.value, 0.0);
  EXPECT_TRUE(p.degenerate);
}

TEST(EmpiricalConditional, SampleProblem) {
  const TrainingMatrix table = sample_problem();
  const EmpiricalDistributionView view(table);
  const auto r1 = static_cast<ItemIndex>(*table.items().find("r1"));
  const auto r2 = static_cast<ItemIndex>(*table.items().find("r2"));
  const auto a1 = static_cast<ItemIndex>(*table.items().find("a1"));
  const auto a2 = static_cast<ItemIndex>(*table.items().find("a2"));
  const std::vector<LabeledItem> ev = {{r1, 1.0}};
  EXPECT_EQ(empirical_conditional(view, r2, ev), 1.0);
  EXPECT_EQ(empirical_conditional(view, a1, ev), 0.5);
  EXPECT_EQ(empirical_conditional(view, a2, ev), 0.0);
  const std::vector<LabeledItem> none = {{r1, 1.0}, {a2, 1.0}};
  EXPECT_FALSE(empirical_conditional(view, r2, none));
}

TEST(EmpiricalDistribution, SumsToOne) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    const auto m = testing::random_matrix(rng, 1 + rng() % 30, 1 + rng() % 6, ValueMode::kBinary,
                                          MissingPolicy::kUnknown, 0.9);
    const EmpiricalDistributionView view(m);
    double total = 0.0;
    for (const auto& [config, p] : view.distribution()) total += p;
    if (!view.distribution().empty()) EXPECT_NEAR(total, 1.0, 1e-12);
  }
  const TrainingMatrix table = sample_problem();
  const auto dist = EmpiricalDistributionView(table).distribution();
  EXPECT_EQ(dist.size(), 5u);  // users 4 and 5 coincide
}

// Brute-force pair counts straight from the matrix.
PairStats direct_pair(const TrainingMatrix& m, ItemIndex j, ItemIndex k) {
  PairStats p;
  for (std::size_t c = 0; c < m.num_cases(); ++c) {
    const auto vj = m.value(c, j);
    const auto vk = m.value(c, k);
    if (!vj || !vk) continue;
    p.valid += 1.0;
    p.first_sum += *vj;
    p.second_sum += *vk;
    p.joint += std::min(*vj, *vk);
  }
  return p;
}

TEST(BuildStats, MatchesDirectCountOnRandomBinary) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 60; ++t) {
    const std::size_t m = 1 + rng() % 64;
    const std::size_t a = 1 + rng() % 16;
    const auto missing = t % 2 ? MissingPolicy::kUnknown : MissingPolicy::kZero;
    const auto data = testing::random_matrix(rng, m, a, ValueMode::kBinary, missing,
                                             0.3 + 0.7 * testing::unit(rng));
    const auto stats = build_stats(data);
    for (ItemIndex j = 0; j < a; ++j) {
      double sum = 0.0, valid = 0.0;
      for (std::size_t c = 0; c < m; ++c) {
        if (auto v = data.value(c, j)) {
          sum += *v;
          valid += 1.0;
        }
      }
      EXPECT_EQ(stats.item_sum(j), sum);
      EXPECT_EQ(static_cast<double>(stats.item_valid(j)), valid);
      for (ItemIndex k = 0; k < a; ++k) {
        const PairStats want = direct_pair(data, j, k);
        const PairStats got = stats.pair(j, k);
        EXPECT_EQ(got.joint, want.joint);
        EXPECT_EQ(got.first_sum, want.first_sum);
        EXPECT_EQ(got.second_sum, want.second_sum);
        EXPECT_EQ(got.valid, want.valid);
        // symmetry
        EXPECT_EQ(stats.pair(k, j).joint, got.joint);
        EXPECT_EQ(stats.pair(k, j).first_sum, got.second_sum);
        // ordering invariant
        EXPECT_LE(got.joint, std::min(got.first_sum, got.second_sum));
        EXPECT_LE(std::max(got.first_sum, got.second_sum), got.valid);
        EXPECT_LE(got.valid, static_cast<double>(m));
      }
    }
  }
}

TEST(BuildStats, MatchesDirectSumsOnRandomGraded) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 30; ++t) {
    const std::size_t m = 1 + rng() % 40;
    const std::size_t a = 1 + rng() % 10;
    const auto data = testing::random_matrix(rng, m, a, ValueMode::kGraded,
                                             MissingPolicy::kUnknown, 0.6);
    const auto stats = build_stats(data);
    for (ItemIndex j = 0; j < a; ++j) {
      for (ItemIndex k = 0; k < a; ++k) {
        const PairStats want = direct_pair(data, j, k);
        const PairStats got = stats.pair(j, k);
        EXPECT_NEAR(got.joint, want.joint, 1e-12);
        EXPECT_NEAR(got.second_sum, want.second_sum, 1e-12);
        EXPECT_EQ(got.valid, want.valid);
        const Frequency f = cond_freq(stats, j, k);
        EXPECT_GE(f.value, 0.0);
        EXPECT_LE(f.value, 1.0 + 1e-15);
      }
    }
  }
}

TEST(BuildStats, PairwiseDeletionIsLocal) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    const auto data = testing::random_matrix(rng, 30, 6, ValueMode::kGraded,
                                             MissingPolicy::kUnknown, 0.8);
    // Drop one stored cell (case c, item i).
    std::size_t c = rng() % data.num_cases();
    while (data.row(c).empty()) c = rng() % data.num_cases();
    const ItemIndex removed = data.row(c)[rng() % data.row(c).size()].item;
    std::vector<std::vector<Cell>> rows;
    for (std::size_t r = 0; r < data.num_cases(); ++r) {
      std::vector<Cell> row(data.row(r).begin(), data.row(r).end());
      if (r == c) {
        row.erase(std::remove_if(row.begin(), row.end(),
                                 [&](const Cell& x) { return x.item == removed; }),
                  row.end());
      }
      rows.push_back(std::move(row));
    }
    const TrainingMatrix edited(data.cases(), data.items(), rows, data.mode(), data.missing(),
                                data.raw_scale());
    const auto before = build_stats(data);
    const auto after = build_stats(edited);
    for (ItemIndex j = 0; j < 6; ++j) {
      for (ItemIndex k = 0; k < 6; ++k) {
        if (j == removed || k == removed) continue;
        EXPECT_EQ(before.pair(j, k).joint, after.pair(j, k).joint);
        EXPECT_EQ(before.pair(j, k).valid, after.pair(j, k).valid);
      }
    }
  }
}

TEST(Snapshot, RoundTripsLosslessly) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 10; ++t) {
    const auto mode = t % 2 ? ValueMode::kGraded : ValueMode::kBinary;
    const auto missing = t % 3 ? MissingPolicy::kUnknown : MissingPolicy::kZero;
    const auto stats = build_stats(testing::random_matrix(rng, 20, 7, mode, missing, 0.7));
    std::stringstream buffer;
    write_snapshot(buffer, stats);
    const auto back = read_snapshot(buffer);
    EXPECT_TRUE(back == stats);
    std::stringstream again;
    write_snapshot(again, back);
    std::stringstream first;
    write_snapshot(first, stats);
    EXPECT_EQ(again.str(), first.str());
  }
}

TEST(Snapshot, RejectsGarbage) {
  std::stringstream bad("NOTSTATS....");
  EXPECT_THROW(read_snapshot(bad), DataError);
  std::stringstream full;
  write_snapshot(full, build_stats(sample_problem()));
  const std::string bytes = full.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() - 5));
  EXPECT_THROW(read_snapshot(truncated), DataError);
}

}  // namespace
}  // namespace urqe
