#include "urqe/solver.h"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace urqe {

namespace {

// Joint mass of (target item, f) and the mass of f, given the item pair
// statistics with the target first and f's item second.
struct JointMass {
  double joint;
  double mass;
};

JointMass target_vs_function(const PairStats& p, FunctionKind kind) {
  if (kind == FunctionKind::kComplement) {
    return {p.first_sum - p.joint, p.valid - p.second_sum};
  }
  return {p.joint, p.second_sum};
}

Frequency ratio_or_prior(const JointMass& jm, const CooccurrenceStats& stats, ItemIndex target) {
  if (!(jm.mass > 0.0)) return {prior(stats, target).value, true};
  return {jm.joint / jm.mass, false};
}

// P(f_a | f_b) with the prior of f_a as the degenerate fallback.
Frequency function_conditional(const CooccurrenceStats& stats, const IndicatorFunction& a,
                               const IndicatorFunction& b) {
  const PairStats p = function_pair(stats, a, b);
  if (!(p.second_sum > 0.0)) return {function_prior(stats, a).value, true};
  return {p.joint / p.second_sum, false};
}

// Dense P(X_i = 1 | f) over every item, from f's adjacency list.
void conditional_row(const CooccurrenceStats& stats, const IndicatorFunction& f,
                     std::vector<double>& row, std::vector<std::uint8_t>& fallback) {
  const std::size_t a = stats.num_items();
  row.resize(a);
  fallback.assign(a, 0);
  for (ItemIndex i = 0; i < a; ++i) {
    const Frequency fr =
        ratio_or_prior(target_vs_function(stats.absent_pair(i, f.item), f.kind), stats, i);
    row[i] = fr.value;
    fallback[i] = fr.degenerate;
  }
  for (const Neighbor& n : stats.neighbors(f.item)) {
    const PairStats p{n.joint, n.other_sum, n.self_sum, static_cast<double>(n.valid)};
    const Frequency fr = ratio_or_prior(target_vs_function(p, f.kind), stats, n.item);
    row[n.item] = fr.value;
    fallback[n.item] = fr.degenerate;
  }
  const Frequency self = conditional(stats, f.item, f);
  row[f.item] = self.value;
  fallback[f.item] = self.degenerate;
}

std::optional<SolvedSystem> try_solve(const DenseMatrix& a, std::span<const double> fvec) {
  auto lu = LuFactorization::factor(a, kPivotTolerance);
  if (!lu) return std::nullopt;
  const double bound = kResidualTolerance * (1.0 + max_abs(fvec));
  std::vector<double> z = lu->solve(fvec);
  auto residual_of = [&](const std::vector<double>& x) {
    std::vector<double> r = a.multiply(x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = fvec[i] - r[i];
    return r;
  };
  std::vector<double> r = residual_of(z);
  if (max_abs(r) > bound) {
    // One step of iterative refinement.
    const std::vector<double> dz = lu->solve(r);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += dz[i];
    r = residual_of(z);
  }
  const double residual = max_abs(r);
  if (!(residual <= bound)) return std::nullopt;
  for (double v : z) {
    if (!std::isfinite(v)) return std::nullopt;
  }
  SolvedSystem out{std::move(z), std::move(*lu), false, 0.0, residual};
  return out;
}

}  // namespace

bool FunctionSet::uses_item(ItemIndex item) const {
  return std::any_of(functions.begin() + 1, functions.end(),
                     [item](const IndicatorFunction& f) { return f.item == item; });
}

FunctionSet build_functions(const CooccurrenceStats& stats, std::span<const LabeledItem> evidence,
                            const FunctionOptions& options) {
  if (stats.num_items() == 0) throw std::invalid_argument("empty item vocabulary");
  FunctionSet fs;
  fs.functions.push_back({FunctionKind::kConstant, 0, 1.0});
  std::unordered_set<ItemIndex> seen;
  for (const LabeledItem& e : evidence) {
    using Reason = DroppedEvidence::Reason;
    if (e.item >= stats.num_items()) {
      fs.dropped.push_back({e.item, Reason::kUnknownItem});
      continue;
    }
    if (!seen.insert(e.item).second) {
      fs.dropped.push_back({e.item, Reason::kDuplicate});
      continue;
    }
    IndicatorFunction f{FunctionKind::kPositive, e.item, e.value};
    if (stats.mode() == ValueMode::kBinary) {
      f.query_value = 1.0;
      if (e.value < 0.5) {
        if (!options.complement_indicators) {
          fs.dropped.push_back({e.item, Reason::kNegativeEvidence});
          continue;
        }
        f.kind = FunctionKind::kComplement;
      }
    }
    const Frequency p = function_prior(stats, f);
    if (p.degenerate || !(p.value > 0.0)) {
      fs.dropped.push_back({e.item, Reason::kNoSupport});
      continue;
    }
    fs.functions.push_back(f);
  }
  std::sort(fs.functions.begin() + 1, fs.functions.end(),
            [](const IndicatorFunction& l, const IndicatorFunction& r) { return l.item < r.item; });
  return fs;
}

PairStats function_pair(const CooccurrenceStats& stats, const IndicatorFunction& a,
                        const IndicatorFunction& b) {
  const bool a_const = a.kind == FunctionKind::kConstant;
  const bool b_const = b.kind == FunctionKind::kConstant;
  if (a_const && b_const) {
    const auto m = static_cast<double>(stats.num_cases());
    return {m, m, m, m};
  }
  if (a_const || b_const) {
    const IndicatorFunction& f = a_const ? b : a;
    const auto m = static_cast<double>(stats.item_valid(f.item));
    double s = stats.item_sum(f.item);
    if (f.kind == FunctionKind::kComplement) s = m - s;
    return a_const ? PairStats{s, m, s, m} : PairStats{s, s, m, m};
  }
  const PairStats p = stats.pair(a.item, b.item);
  const bool ac = a.kind == FunctionKind::kComplement;
  const bool bc = b.kind == FunctionKind::kComplement;
  if (!ac && !bc) return p;
  if (ac && !bc) return {p.second_sum - p.joint, p.valid - p.first_sum, p.second_sum, p.valid};
  if (!ac && bc) return {p.first_sum - p.joint, p.first_sum, p.valid - p.second_sum, p.valid};
  return {p.valid - p.first_sum - p.second_sum + p.joint, p.valid - p.first_sum,
          p.valid - p.second_sum, p.valid};
}

Frequency function_prior(const CooccurrenceStats& stats, const IndicatorFunction& f) {
  if (f.kind == FunctionKind::kConstant) return {1.0, false};
  const Frequency p = prior(stats, f.item);
  if (p.degenerate) return p;
  return {f.kind == FunctionKind::kComplement ? 1.0 - p.value : p.value, false};
}

double confidence(const CooccurrenceStats& stats, const IndicatorFunction& f,
                  const ConfidenceConfig& cfg) {
  if (f.kind == FunctionKind::kConstant) return 1.0;
  const auto m = static_cast<double>(stats.item_valid(f.item));
  const Frequency p = function_prior(stats, f);
  if (m == 0.0 || p.degenerate || p.value <= 0.0 || p.value >= 1.0) return 0.0;
  const double support = m * p.value * (1.0 - p.value);
  return support / (cfg.r + support);
}

Frequency conditional(const CooccurrenceStats& stats, ItemIndex target,
                      const IndicatorFunction& f) {
  if (f.kind == FunctionKind::kConstant) return prior(stats, target);
  return ratio_or_prior(target_vs_function(stats.pair(target, f.item), f.kind), stats, target);
}

double constraint_value(const CooccurrenceStats& stats, ItemIndex target,
                        const IndicatorFunction& f, const ConfidenceConfig& cfg) {
  const double c = confidence(stats, f, cfg);
  return c * conditional(stats, target, f).value + (1.0 - c) * prior(stats, target).value;
}

QuerySystem assemble_system(const CooccurrenceStats& stats, const FunctionSet& fs,
                            const ConfidenceConfig& cfg) {
  const std::size_t n = fs.size();
  QuerySystem sys{DenseMatrix(n), std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t k = 0; k < n; ++k) {
    sys.fvec[k] = fs.functions[k].query_value;
    sys.conf[k] = confidence(stats, fs.functions[k], cfg);
  }
  sys.fvec[0] = 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double prior_j = function_prior(stats, fs.functions[j]).value;
    for (std::size_t k = 0; k < n; ++k) {
      double v = j == 0 ? 1.0 : function_conditional(stats, fs.functions[j], fs.functions[k]).value;
      if (cfg.smooth_matrix && j != k && j > 0 && k > 0) {
        v = sys.conf[k] * v + (1.0 - sys.conf[k]) * prior_j;
      }
      sys.matrix(j, k) = v;
    }
  }
  return sys;
}

SolvedSystem solve_system(const QuerySystem& sys) {
  if (sys.matrix.size() != sys.fvec.size()) throw std::invalid_argument("dimension mismatch");
  if (auto solved = try_solve(sys.matrix, sys.fvec)) return std::move(*solved);

  const std::size_t n = sys.matrix.size();
  const double eps = kRegularizationScale * sys.matrix.trace() / static_cast<double>(n);
  DenseMatrix ridge = sys.matrix;
  for (std::size_t i = 0; i < n; ++i) ridge(i, i) += eps;
  auto solved = try_solve(ridge, sys.fvec);
  if (!solved) throw SingularSystemError("function matrix is singular after regularization");
  solved->regularized = true;
  solved->regularization = eps;
  return std::move(*solved);
}

EstimateVector estimate_all(const CooccurrenceStats& stats, const FunctionSet& fs,
                            const ConfidenceConfig& cfg, const SolvedSystem& solved,
                            std::span<const ItemIndex> hidden) {
  const std::size_t n = fs.size();
  if (solved.z.size() != n) throw std::invalid_argument("solution does not match function set");

  std::vector<double> conf(n);
  for (std::size_t j = 0; j < n; ++j) conf[j] = confidence(stats, fs.functions[j], cfg);

  EstimateVector out;
  out.estimates.reserve(hidden.size());
  const std::uint8_t base_flags = solved.regularized ? kFlagRegularized : kFlagNone;
  for (ItemIndex i : hidden) {
    const Frequency p = prior(stats, i);
    out.estimates.push_back({i, p.value * solved.z[0], base_flags});
  }

  // Dense rows pay O(a) per function; only worth it for large hidden sets.
  const bool dense = hidden.size() * 8 >= stats.num_items();
  std::vector<double> row;
  std::vector<std::uint8_t> fallback;
  for (std::size_t j = 1; j < n; ++j) {
    const IndicatorFunction& f = fs.functions[j];
    if (dense) conditional_row(stats, f, row, fallback);
    for (Estimate& e : out.estimates) {
      Frequency cond;
      if (dense) {
        cond = {row[e.item], fallback[e.item] != 0};
      } else {
        cond = conditional(stats, e.item, f);
      }
      const double pr = prior(stats, e.item).value;
      const double c = conf[j] * cond.value + (1.0 - conf[j]) * pr;
      e.y += c * solved.z[j];
      if (cond.degenerate) e.flags |= kFlagFallbackConditional;
    }
  }
  for (Estimate& e : out.estimates) {
    if (stats.item_valid(e.item) == 0) {
      e.y = 0.0;
      e.flags |= kFlagNoSupport;
    }
  }
  return out;
}

std::vector<double> lambda_row(const CooccurrenceStats& stats, const FunctionSet& fs,
                               const ConfidenceConfig& cfg, ItemIndex target,
                               const SolvedSystem& solved) {
  std::vector<double> constraints(fs.size());
  for (std::size_t j = 0; j < fs.size(); ++j) {
    constraints[j] = constraint_value(stats, target, fs.functions[j], cfg);
  }
  return solved.lu.solve_transposed(constraints);
}

double predict_rating(double y, double raw_scale, bool clamp) {
  const double rating = y * raw_scale;
  return clamp ? std::clamp(rating, 0.0, raw_scale) : rating;
}

QueryResult answer_query(const CooccurrenceStats& stats, std::span<const LabeledItem> evidence,
                         const QueryOptions& options, std::span<const ItemIndex> hidden) {
  QueryResult result;
  result.functions = build_functions(stats, evidence, options.functions);

  std::vector<ItemIndex> all_hidden;
  if (hidden.empty()) {
    std::vector<std::uint8_t> is_evidence(stats.num_items(), 0);
    for (const LabeledItem& e : evidence) {
      if (e.item < stats.num_items()) is_evidence[e.item] = 1;
    }
    for (ItemIndex i = 0; i < stats.num_items(); ++i) {
      if (!is_evidence[i]) all_hidden.push_back(i);
    }
    hidden = all_hidden;
  }

  const QuerySystem sys = assemble_system(stats, result.functions, options.confidence);
  try {
    const SolvedSystem solved = solve_system(sys);
    result.regularized = solved.regularized;
    result.estimates = estimate_all(stats, result.functions, options.confidence, solved, hidden);
  } catch (const SingularSystemError&) {
    result.prior_fallback = true;
    for (ItemIndex i : hidden) {
      const Frequency p = prior(stats, i);
      result.estimates.estimates.push_back(
          {i, p.value, static_cast<std::uint8_t>(kFlagPriorFallback |
                                                 (p.degenerate ? kFlagNoSupport : 0))});
    }
  }
  return result;
}

}  // namespace urqe
