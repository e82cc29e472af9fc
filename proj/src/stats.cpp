#include "theseus/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/special_functions/beta.hpp>
#include <nlohmann/json.hpp>

#include "theseus/errors.hpp"

namespace theseus {

std::string to_string(Alternative a) {
  switch (a) {
    case Alternative::TwoSided: return "two-sided";
    case Alternative::Greater: return "greater";
    case Alternative::Less: return "less";
  }
  return "?";
}

std::string to_string(TestMethod m) {
  switch (m) {
    case TestMethod::Exact: return "exact";
    case TestMethod::NormalApprox: return "normal-approx";
    case TestMethod::StudentT: return "student-t";
  }
  return "?";
}

nlohmann::json to_json(const TestResult& r) {
  return {{"statistic", r.statistic},
          {"p_value", r.p_value},
          {"n_effective", r.n_effective},
          {"method", to_string(r.method)},
          {"alternative", to_string(r.alternative)}};
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double student_t_cdf(double t, double dof) {
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double x = dof / (dof + t * t);
  const double tail = 0.5 * boost::math::ibeta(dof / 2.0, 0.5, x);
  return t > 0 ? 1.0 - tail : tail;
}

double median(std::vector<double> values) {
  if (values.empty()) throw PreconditionError("median of empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

std::vector<double> signed_rank_null_counts(std::span<const double> ranks) {
  // Subset-sum DP over doubled ranks; counts stay exact in double up to 2^53.
  std::size_t total = 0;
  std::vector<std::size_t> doubled;
  doubled.reserve(ranks.size());
  for (double r : ranks) {
    const double d = 2.0 * r;
    if (d < 0 || d != std::floor(d)) throw PreconditionError("signed_rank_null_counts: ranks must be multiples of 0.5");
    doubled.push_back(static_cast<std::size_t>(d));
    total += doubled.back();
  }
  std::vector<double> counts(total + 1, 0.0);
  counts[0] = 1.0;
  std::size_t reach = 0;
  for (std::size_t r : doubled) {
    for (std::size_t s = reach + 1; s-- > 0;) {
      if (counts[s] != 0.0) counts[s + r] += counts[s];
    }
    reach += r;
  }
  return counts;
}

TestResult wilcoxon_signed_rank(std::span<const double> diffs, Alternative alternative,
                                const WilcoxonOptions& options) {
  for (double d : diffs) {
    if (!std::isfinite(d)) throw DataError("wilcoxon_signed_rank: non-finite difference");
  }
  std::vector<double> abs_all;
  std::vector<double> kept;
  for (double d : diffs) {
    if (options.zero_method == ZeroMethod::Pratt || d != 0.0) {
      kept.push_back(d);
      abs_all.push_back(std::fabs(d));
    }
  }
  const auto ranks_all = average_ranks(abs_all);
  std::vector<double> ranks;  // ranks of nonzero differences
  double w_plus = 0.0;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (kept[i] == 0.0) continue;
    ranks.push_back(ranks_all[i]);
    if (kept[i] > 0.0) w_plus += ranks_all[i];
  }
  const std::size_t n = ranks.size();
  if (n == 0) throw DegenerateSampleError("wilcoxon_signed_rank: every difference is zero");

  TestResult res;
  res.statistic = w_plus;
  res.n_effective = n;
  res.alternative = alternative;

  double p_greater = 1.0;
  double p_less = 1.0;
  if (n <= options.exact_threshold) {
    res.method = TestMethod::Exact;
    const auto counts = signed_rank_null_counts(ranks);
    const auto observed = static_cast<std::size_t>(std::llround(2.0 * w_plus));
    double ge = 0.0;
    double le = 0.0;
    for (std::size_t s = 0; s < counts.size(); ++s) {
      if (s >= observed) ge += counts[s];
      if (s <= observed) le += counts[s];
    }
    const double total = std::ldexp(1.0, static_cast<int>(n));
    p_greater = ge / total;
    p_less = le / total;
  } else {
    // Under H0, W+ = sum r_i B_i with B_i ~ Bernoulli(1/2): this reproduces
    // the textbook tie-corrected moments for any rank set.
    res.method = TestMethod::NormalApprox;
    double mean = 0.0;
    double var = 0.0;
    for (double r : ranks) {
      mean += r / 2.0;
      var += r * r / 4.0;
    }
    const double sd = std::sqrt(var);
    const double cc = options.continuity_correction ? 0.5 : 0.0;
    p_greater = 1.0 - normal_cdf((w_plus - mean - cc) / sd);
    p_less = normal_cdf((w_plus - mean + cc) / sd);
  }
  switch (alternative) {
    case Alternative::Greater: res.p_value = p_greater; break;
    case Alternative::Less: res.p_value = p_less; break;
    case Alternative::TwoSided: res.p_value = std::min(1.0, 2.0 * std::min(p_greater, p_less)); break;
  }
  res.p_value = std::clamp(res.p_value, 0.0, 1.0);
  return res;
}

TestResult pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw PreconditionError("pearson: series differ in length");
  const std::size_t n = x.size();
  if (n < 3) throw PreconditionError("pearson: need at least 3 observations");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw DataError("pearson: non-finite observation");
  }
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedError("pearson: correlation undefined for a constant series");
  const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);

  TestResult res;
  res.statistic = r;
  res.n_effective = n;
  res.method = TestMethod::StudentT;
  res.alternative = Alternative::TwoSided;
  const double dof = static_cast<double>(n - 2);
  if (std::fabs(r) >= 1.0) {
    res.p_value = 0.0;
  } else {
    const double t = r * std::sqrt(dof / (1.0 - r * r));
    // Two-sided tail: I_{dof/(dof+t^2)}(dof/2, 1/2).
    res.p_value = std::clamp(boost::math::ibeta(dof / 2.0, 0.5, dof / (dof + t * t)), 0.0, 1.0);
  }
  return res;
}

TestResult paired_policy_test(std::span<const double> f1_traditional, std::span<const double> f1_alternative) {
  if (f1_traditional.size() != f1_alternative.size()) {
    throw PreconditionError("paired_policy_test: series differ in length");
  }
  if (f1_traditional.size() < 3) throw PreconditionError("paired_policy_test: need at least 3 pairs");
  std::vector<double> diffs(f1_traditional.size());
  for (std::size_t i = 0; i < diffs.size(); ++i) diffs[i] = f1_alternative[i] - f1_traditional[i];
  return wilcoxon_signed_rank(diffs, Alternative::Greater);
}

}  // namespace theseus
