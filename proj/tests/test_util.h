#ifndef URQE_TESTS_TEST_UTIL_H_
#define URQE_TESTS_TEST_UTIL_H_

#include <random>
#include <string>
#include <vector>

#include "urqe/dataset.h"

namespace urqe::testing {

inline double unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Random matrix; each cell is stored with probability `known`. Binary cells
// are 1 with probability `ones`; graded cells take a random k/5 value.
inline TrainingMatrix random_matrix(std::mt19937_64& rng, std::size_t m, std::size_t a,
                                    ValueMode mode, MissingPolicy missing, double known,
                                    double ones = 0.5) {
  Vocabulary cases;
  Vocabulary items;
  for (std::size_t i = 0; i < a; ++i) items.intern("i" + std::to_string(i));
  std::vector<std::vector<Cell>> rows;
  for (std::size_t c = 0; c < m; ++c) {
    cases.intern("c" + std::to_string(c));
    std::vector<Cell> row;
    for (std::size_t i = 0; i < a; ++i) {
      if (unit(rng) >= known) continue;
      double v = 0.0;
      if (mode == ValueMode::kBinary) v = unit(rng) < ones ? 1.0 : 0.0;
      else v = static_cast<double>(rng() % 6) / 5.0;
      row.push_back({static_cast<ItemIndex>(i), v});
    }
    rows.push_back(std::move(row));
  }
  return TrainingMatrix(std::move(cases), std::move(items), std::move(rows), mode, missing,
                        mode == ValueMode::kGraded ? 5.0 : 1.0);
}

}  // namespace urqe::testing

#endif  // URQE_TESTS_TEST_UTIL_H_
