#include "urqe/oracle.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "urqe/solver.h"
#include "urqe/stats.h"

namespace urqe {

namespace {

constexpr double kRankThreshold = 1e-10;

Eigen::MatrixXd constraint_matrix(const SupportQP& qp) {
  Eigen::MatrixXd a(qp.rows.size(), qp.num_configs());
  for (std::size_t j = 0; j < qp.rows.size(); ++j) {
    for (std::size_t x = 0; x < qp.num_configs(); ++x) a(j, x) = qp.rows[j][x];
  }
  return a;
}

}  // namespace

double SupportQP::function_value(std::size_t j, std::size_t x) const {
  return j == 0 ? 1.0 : static_cast<double>(configs.at(x).at(j - 1));
}

SupportQP build_support_qp(const TrainingMatrix& train, std::span<const ItemIndex> evidence,
                           ItemIndex target) {
  if (train.mode() != ValueMode::kBinary) throw std::invalid_argument("oracle needs binary data");
  if (train.num_cases() == 0) throw std::invalid_argument("oracle needs training cases");
  for (std::size_t i = 0; i < evidence.size(); ++i) {
    if (evidence[i] == target) throw std::invalid_argument("target is an evidence item");
    for (std::size_t j = 0; j < i; ++j) {
      if (evidence[i] == evidence[j]) throw std::invalid_argument("duplicate evidence item");
    }
  }

  SupportQP qp;
  qp.evidence.assign(evidence.begin(), evidence.end());
  qp.target = target;
  std::map<std::vector<std::uint8_t>, std::size_t> index;
  std::vector<double> counts;
  std::vector<double> target_counts;
  const auto read = [&](std::size_t c, ItemIndex item) {
    const auto v = train.value(c, item);
    if (!v) throw std::invalid_argument("oracle needs every evidence and target cell known");
    return *v > 0.5 ? 1 : 0;
  };

  for (std::size_t c = 0; c < train.num_cases(); ++c) {
    std::vector<std::uint8_t> config(evidence.size());
    for (std::size_t e = 0; e < evidence.size(); ++e) config[e] = read(c, evidence[e]);
    const int t = read(c, target);
    auto [it, inserted] = index.emplace(config, qp.configs.size());
    if (inserted) {
      if (qp.configs.size() == kMaxSupportConfigs) {
        throw std::invalid_argument("support exceeds the oracle size guard");
      }
      qp.configs.push_back(std::move(config));
      counts.push_back(0.0);
      target_counts.push_back(0.0);
    }
    counts[it->second] += 1.0;
    target_counts[it->second] += t;
  }

  const auto m = static_cast<double>(train.num_cases());
  const std::size_t n = qp.configs.size();
  qp.weights.resize(n);
  for (std::size_t x = 0; x < n; ++x) qp.weights[x] = counts[x] / m;

  const std::size_t rows = evidence.size() + 1;
  qp.rows.assign(rows, std::vector<double>(n, 0.0));
  qp.rhs.assign(rows, 0.0);
  for (std::size_t j = 0; j < rows; ++j) {
    for (std::size_t x = 0; x < n; ++x) {
      const double f = qp.function_value(j, x);
      qp.rows[j][x] = qp.weights[x] * f;
      qp.rhs[j] += f * target_counts[x] / m;
    }
  }
  return qp;
}

KktSolution solve_kkt(const SupportQP& qp) {
  const std::size_t n = qp.num_configs();
  const Eigen::MatrixXd full = constraint_matrix(qp);

  // Keep a maximal independent subset of the constraint rows, in order.
  KktSolution out;
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < qp.rows.size(); ++j) {
    Eigen::MatrixXd trial(kept.size() + 1, n);
    for (std::size_t r = 0; r < kept.size(); ++r) trial.row(r) = full.row(kept[r]);
    trial.row(kept.size()) = full.row(j);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(trial);
    lu.setThreshold(kRankThreshold);
    if (static_cast<std::size_t>(lu.rank()) == kept.size() + 1) kept.push_back(j);
    else out.dropped_rows.push_back(j);
  }

  const std::size_t k = kept.size();
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
  Eigen::VectorXd rhs(n + k);
  for (std::size_t x = 0; x < n; ++x) {
    kkt(x, x) = 4.0 * qp.weights[x];
    rhs(x) = 2.0 * qp.weights[x];
  }
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t x = 0; x < n; ++x) {
      kkt(n + r, x) = full(kept[r], x);
      kkt(x, n + r) = full(kept[r], x);
    }
    rhs(n + r) = qp.rhs[kept[r]];
  }
  const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
  out.y.assign(sol.data(), sol.data() + n);
  out.objective = qp_objective(qp, out.y);
  return out;
}

double qp_objective(const SupportQP& qp, std::span<const double> y) {
  double total = 0.0;
  for (std::size_t x = 0; x < qp.num_configs(); ++x) {
    total += qp.weights[x] * (y[x] * y[x] + (1.0 - y[x]) * (1.0 - y[x]));
  }
  return total;
}

double max_constraint_violation(const SupportQP& qp, std::span<const double> y) {
  double worst = 0.0;
  for (std::size_t j = 0; j < qp.rows.size(); ++j) {
    double lhs = 0.0;
    for (std::size_t x = 0; x < qp.num_configs(); ++x) lhs += qp.rows[j][x] * y[x];
    worst = std::max(worst, std::abs(lhs - qp.rhs[j]));
  }
  return worst;
}

CrossCheck cross_check(const TrainingMatrix& train, std::span<const ItemIndex> evidence,
                       ItemIndex target, double tol) {
  CrossCheck result;
  const CooccurrenceStats stats = build_stats(train);
  std::vector<LabeledItem> labeled;
  for (ItemIndex e : evidence) labeled.push_back({e, 1.0});

  const FunctionSet fs = build_functions(stats, labeled);
  const ConfidenceConfig full{0.0, false};
  if (fs.evidence_count() != evidence.size()) {
    result.status = CrossCheck::Status::kSkippedDegenerate;
    result.detail = "evidence item without support";
    return result;
  }
  for (std::size_t j = 1; j < fs.size(); ++j) {
    if (confidence(stats, fs.functions[j], full) != 1.0) {
      result.status = CrossCheck::Status::kSkippedDegenerate;
      result.detail = "evidence item constant over the training set";
      return result;
    }
  }

  const QuerySystem sys = assemble_system(stats, fs, full);
  std::optional<SolvedSystem> solved;
  try {
    solved = solve_system(sys);
  } catch (const SingularSystemError&) {
  }
  if (!solved || solved->regularized) {
    result.status = CrossCheck::Status::kSkippedRegularized;
    result.detail = "skipped: regularized";
    return result;
  }
  const std::vector<double> lambda = lambda_row(stats, fs, full, target, *solved);

  const SupportQP qp = build_support_qp(train, evidence, target);
  const KktSolution kkt = solve_kkt(qp);

  std::vector<double> closed(qp.num_configs());
  for (std::size_t x = 0; x < qp.num_configs(); ++x) {
    double y = lambda[0];
    for (std::size_t j = 1; j < fs.size(); ++j) {
      const auto pos = std::find(evidence.begin(), evidence.end(), fs.functions[j].item) -
                       evidence.begin();
      y += lambda[j] * qp.configs[x][static_cast<std::size_t>(pos)];
    }
    closed[x] = y;
    result.discrepancy = std::max(result.discrepancy, std::abs(y - kkt.y[x]));
  }
  result.constraint_violation = max_constraint_violation(qp, closed);
  if (!(result.discrepancy <= tol)) {
    std::ostringstream os;
    os << "closed form differs from KKT optimum by " << result.discrepancy << " (tol " << tol
       << ")";
    result.status = CrossCheck::Status::kFail;
    result.detail = os.str();
  }
  return result;
}

std::string status_name(CrossCheck::Status status) {
  switch (status) {
    case CrossCheck::Status::kPass: return "pass";
    case CrossCheck::Status::kFail: return "fail";
    case CrossCheck::Status::kSkippedRegularized: return "skipped: regularized";
    case CrossCheck::Status::kSkippedDegenerate: return "skipped: degenerate";
  }
  return "unknown";
}

RandomInstance random_instance(std::mt19937_64& rng, std::size_t max_cases,
                               std::size_t max_items, std::size_t max_evidence) {
  auto draw = [&](std::size_t lo, std::size_t hi) { return lo + rng() % (hi - lo + 1); };
  const std::size_t a = draw(2, std::max<std::size_t>(2, max_items));
  const std::size_t m = draw(std::min<std::size_t>(4, max_cases), max_cases);
  const std::size_t e = draw(1, std::min(max_evidence, a - 1));

  Vocabulary items;
  for (std::size_t i = 0; i < a; ++i) items.intern("i" + std::to_string(i));
  Vocabulary cases;
  std::vector<double> rate(a);
  for (double& p : rate) p = 0.2 + 0.6 * static_cast<double>(rng() % 1000) / 1000.0;
  std::vector<std::vector<Cell>> rows;
  for (std::size_t c = 0; c < m; ++c) {
    cases.intern("c" + std::to_string(c));
    std::vector<Cell> row;
    for (std::size_t i = 0; i < a; ++i) {
      const bool on = static_cast<double>(rng() % 1000) / 1000.0 < rate[i];
      row.push_back({static_cast<ItemIndex>(i), on ? 1.0 : 0.0});
    }
    rows.push_back(std::move(row));
  }

  std::vector<ItemIndex> order(a);
  for (std::size_t i = 0; i < a; ++i) order[i] = static_cast<ItemIndex>(i);
  for (std::size_t i = 0; i + 1 < a; ++i) std::swap(order[i], order[draw(i, a - 1)]);

  RandomInstance inst{TrainingMatrix(std::move(cases), std::move(items), std::move(rows),
                                     ValueMode::kBinary, MissingPolicy::kUnknown, 1.0),
                      std::vector<ItemIndex>(order.begin(), order.begin() + e), order[e]};
  return inst;
}

BatteryResult run_battery(std::size_t nondegenerate, std::uint64_t seed, double tol) {
  BatteryResult result;
  std::mt19937_64 rng(seed);
  const std::size_t max_attempts = nondegenerate * 100 + 100;
  for (std::size_t attempt = 0;
       attempt < max_attempts && result.passed + result.failed < nondegenerate; ++attempt) {
    const RandomInstance inst = random_instance(rng);
    const CrossCheck check = cross_check(inst.data, inst.evidence, inst.target, tol);
    switch (check.status) {
      case CrossCheck::Status::kPass: ++result.passed; break;
      case CrossCheck::Status::kFail:
        ++result.failed;
        result.failures.push_back("attempt " + std::to_string(attempt) + ": " + check.detail);
        break;
      default: ++result.skipped; continue;
    }
    result.worst_discrepancy = std::max(result.worst_discrepancy, check.discrepancy);
    result.worst_violation = std::max(result.worst_violation, check.constraint_violation);
  }
  return result;
}

}  // namespace urqe
