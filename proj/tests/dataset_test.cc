#include "urqe/dataset.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

namespace urqe {
namespace {

TrainingMatrix load(const std::string& text, LoadOptions options = {}) {
  std::istringstream in(text);
  return load_events(in, options);
}

TEST(LoadEvents, ThreeBinaryRecords) {
  const auto m = load("case_id,item_id,value\nu1,i1,1\nu1,i2,1\nu2,i2,1\n");
  EXPECT_EQ(m.num_cases(), 2u);
  EXPECT_EQ(m.num_items(), 2u);
  EXPECT_EQ(m.num_cells(), 3u);
  ASSERT_EQ(m.row(0).size(), 2u);
  EXPECT_EQ(m.row(0)[0].item, 0u);
  EXPECT_EQ(m.row(0)[1].item, 1u);
  ASSERT_EQ(m.row(1).size(), 1u);
  EXPECT_EQ(m.row(1)[0].item, 1u);
  EXPECT_EQ(m.row(1)[0].value, 1.0);
  // Event data reads absent cells as 0.
  EXPECT_EQ(m.value(1, 0), 0.0);
}

TEST(LoadEvents, GradedValueIsScaled) {
  LoadOptions options{Format::kRatingsCsv, 5.0, std::nullopt};
  const auto m = load("case_id,item_id,value\nu1,m7,3\n", options);
  EXPECT_EQ(m.mode(), ValueMode::kGraded);
  EXPECT_DOUBLE_EQ(m.row(0)[0].value, 0.6);
  EXPECT_EQ(m.value(0, 0), 0.6);
  EXPECT_EQ(m.missing(), MissingPolicy::kUnknown);
}

TEST(LoadEvents, SampleProblemFile) {
  const auto m = load_events_file(std::string(URQE_TEST_DATA) + "/table1.csv", {});
  EXPECT_EQ(m.num_cases(), 6u);
  EXPECT_EQ(m.num_items(), 4u);
  EXPECT_EQ(m.num_cells(), 24u);
  const int expected[6][4] = {{0, 1, 0, 0}, {1, 1, 0, 0}, {0, 0, 0, 1},
                              {0, 0, 1, 1}, {0, 0, 1, 1}, {1, 1, 1, 0}};
  for (std::size_t c = 0; c < 6; ++c) {
    for (ItemIndex i = 0; i < 4; ++i) EXPECT_EQ(*m.value(c, i), expected[c][i]) << c << "," << i;
  }
  EXPECT_EQ(m.items().id(0), "r1");
  EXPECT_EQ(m.items().id(3), "a2");
}

TEST(LoadEvents, CrlfAndBom) {
  const auto m = load("\xEF\xBB\xBF" "case_id,item_id,value\r\nu1,i1,1\r\nu2,i1,0\r\n");
  EXPECT_EQ(m.num_cases(), 2u);
  EXPECT_EQ(m.num_cells(), 2u);
}

TEST(LoadEvents, ErrorsReportLineNumbers) {
  auto message = [](const std::string& text, LoadOptions options = {}) {
    try {
      load(text, options);
    } catch (const DataError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("case_id,item_id,value\nu1,i1,1\nu1;i2;1\n").find("line 3"), std::string::npos);
  EXPECT_NE(message("case_id,item_id,value\nu1,i1,2\n").find("line 2"), std::string::npos);
  EXPECT_NE(message("case_id,item_id,value\nu1,i1,1\nu1,i1,1\n").find("duplicate"),
            std::string::npos);
  LoadOptions graded{Format::kRatingsCsv, 5.0, std::nullopt};
  EXPECT_NE(message("case_id,item_id,value\nu1,i1,5.5\n", graded).find("outside"),
            std::string::npos);
  EXPECT_NE(message("case_id,item_id,value\nu1,i1,-1\n", graded).find("outside"),
            std::string::npos);
  EXPECT_NE(message("case_id,item_id,value\nu1,i1,abc\n", graded).find("line 2"),
            std::string::npos);
  EXPECT_NE(message("").find("missing header"), std::string::npos);
  EXPECT_NE(message("user,item,rating\n").find("line 1"), std::string::npos);
  EXPECT_NE(message("case_id,item_id,value\n,i1,1\n").find("empty id"), std::string::npos);
}

TEST(LoadEvents, HeaderOnlyGivesEmptyMatrix) {
  const auto m = load("case_id,item_id,value\n");
  EXPECT_EQ(m.num_cases(), 0u);
  EXPECT_EQ(m.num_items(), 0u);
}

TEST(LoadEvents, ReloadIsDeterministic) {
  const std::string text = "case_id,item_id,value\nb,y,1\na,x,1\nb,x,1\nc,z,1\n";
  const auto m1 = load(text);
  const auto m2 = load(text);
  EXPECT_EQ(m1.items().ids(), m2.items().ids());
  EXPECT_EQ(m1.cases().ids(), m2.cases().ids());
  EXPECT_EQ(m1.items().ids(), (std::vector<std::string>{"y", "x", "z"}));
  for (std::size_t c = 0; c < m1.num_cases(); ++c) {
    ASSERT_EQ(m1.row(c).size(), m2.row(c).size());
    for (std::size_t k = 0; k < m1.row(c).size(); ++k) {
      EXPECT_EQ(m1.row(c)[k].item, m2.row(c)[k].item);
      EXPECT_EQ(m1.row(c)[k].value, m2.row(c)[k].value);
    }
  }
}

TEST(LoadEvents, GradedRoundTripsAtInputPrecision) {
  std::ostringstream text;
  text << "case_id,item_id,value\n";
  std::vector<double> raw;
  for (int i = 0; i <= 50; ++i) {
    raw.push_back(i / 10.0);
    text << "u" << i << ",m,"  << i / 10.0 << "\n";
  }
  const auto m = load(text.str(), {Format::kRatingsCsv, 5.0, std::nullopt});
  for (std::size_t c = 0; c < raw.size(); ++c) {
    const double back = m.row(c)[0].value * 5.0;
    EXPECT_EQ(std::round(back * 10.0) / 10.0, raw[c]);
    EXPECT_NEAR(back, raw[c], 1e-12);
  }
}

TEST(LoadEvents, BaseVocabularyKeepsTrainingIndices) {
  const auto train = load("case_id,item_id,value\nu1,a,1\nu1,b,1\n");
  std::istringstream in("case_id,item_id,value\nt1,b,1\nt1,new,1\n");
  const auto test = load_events(in, {}, &train.items());
  EXPECT_EQ(test.items().find("a"), 0u);
  EXPECT_EQ(test.items().find("b"), 1u);
  EXPECT_EQ(test.items().find("new"), 2u);
}

TEST(TrainingMatrix, RejectsInvariantViolations) {
  Vocabulary cases;
  cases.intern("c");
  Vocabulary items;
  items.intern("i");
  EXPECT_THROW(TrainingMatrix(cases, items, {{{0, 0.5}}}, ValueMode::kBinary,
                              MissingPolicy::kZero, 1.0),
               DataError);
  EXPECT_THROW(TrainingMatrix(cases, items, {{{0, 1.5}}}, ValueMode::kGraded,
                              MissingPolicy::kUnknown, 5.0),
               DataError);
  EXPECT_THROW(TrainingMatrix(cases, items, {{{3, 1.0}}}, ValueMode::kBinary,
                              MissingPolicy::kZero, 1.0),
               DataError);
}

TestCase make_case(std::size_t n) {
  TestCase tc{"c", {}};
  for (std::size_t i = 0; i < n; ++i) tc.labeled.push_back({static_cast<ItemIndex>(i * 3), 1.0});
  return tc;
}

TEST(SplitCase, GivenTwoOfFive) {
  const auto split = split_case(make_case(5), SplitProtocol::given(2, 11), 0);
  ASSERT_TRUE(split);
  EXPECT_EQ(split->evidence.size(), 2u);
  EXPECT_EQ(split->measurement.size(), 3u);
}

TEST(SplitCase, SkipRules) {
  EXPECT_FALSE(split_case(make_case(2), SplitProtocol::given(5, 1), 0));
  // given-k needs more than k items
  EXPECT_FALSE(split_case(make_case(2), SplitProtocol::given(2, 1), 0));
  EXPECT_TRUE(split_case(make_case(3), SplitProtocol::given(2, 1), 0));
  EXPECT_FALSE(split_case(make_case(1), SplitProtocol::all_but_one(1), 0));
  const auto split = split_case(make_case(2), SplitProtocol::all_but_one(1), 0);
  ASSERT_TRUE(split);
  EXPECT_EQ(split->evidence.size(), 1u);
  EXPECT_EQ(split->measurement.size(), 1u);
}

TEST(SplitCase, PartitionAndReproducibility) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 20;
    const TestCase tc = make_case(n);
    const auto protocol = trial % 2 ? SplitProtocol::all_but_one(rng())
                                    : SplitProtocol::given(1 + rng() % (n - 1), rng());
    const std::uint64_t ordinal = rng() % 1000;
    const auto a = split_case(tc, protocol, ordinal);
    const auto b = split_case(tc, protocol, ordinal);
    ASSERT_TRUE(a && b);
    EXPECT_EQ(a->evidence, b->evidence);
    EXPECT_EQ(a->measurement, b->measurement);
    std::set<ItemIndex> seen;
    for (const auto& l : a->evidence) seen.insert(l.item);
    for (const auto& l : a->measurement) EXPECT_FALSE(seen.count(l.item));
    for (const auto& l : a->measurement) seen.insert(l.item);
    EXPECT_EQ(seen.size(), n);
  }
}

TEST(SplitCase, DifferentOrdinalsGiveDifferentSplits) {
  const TestCase tc = make_case(10);
  std::set<std::vector<ItemIndex>> distinct;
  for (std::uint64_t ordinal = 0; ordinal < 50; ++ordinal) {
    const auto s = split_case(tc, SplitProtocol::given(2, 5), ordinal);
    std::vector<ItemIndex> ev;
    for (const auto& l : s->evidence) ev.push_back(l.item);
    distinct.insert(ev);
  }
  EXPECT_GT(distinct.size(), 20u);
}

TEST(SplitCase, EvidenceIsRoughlyUniform) {
  const TestCase tc = make_case(5);
  std::vector<int> hits(5, 0);
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    const auto s = split_case(tc, SplitProtocol::given(2, 99), static_cast<std::uint64_t>(t));
    for (const auto& l : s->evidence) ++hits[l.item / 3];
  }
  // Each item lands in evidence with probability 2/5.
  for (int h : hits) EXPECT_NEAR(h / static_cast<double>(trials), 0.4, 0.02);
}

TEST(SplitProtocol, Names) {
  EXPECT_EQ(SplitProtocol::given(10, 0).name(), "given-10");
  EXPECT_EQ(SplitProtocol::all_but_one(0).name(), "all-but-1");
  EXPECT_THROW(SplitProtocol::given(0, 0), std::invalid_argument);
}

}  // namespace
}  // namespace urqe
