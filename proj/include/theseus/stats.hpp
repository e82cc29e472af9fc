#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace theseus {

enum class Alternative { TwoSided, Greater, Less };
enum class TestMethod { Exact, NormalApprox, StudentT };
enum class ZeroMethod { Drop, Pratt };

std::string to_string(Alternative a);
std::string to_string(TestMethod m);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n_effective = 0;
  TestMethod method = TestMethod::Exact;
  Alternative alternative = Alternative::TwoSided;
};

nlohmann::json to_json(const TestResult& r);

struct WilcoxonOptions {
  std::size_t exact_threshold = 25;
  ZeroMethod zero_method = ZeroMethod::Drop;
  bool continuity_correction = true;
};

/// Average ranks (1-based) of the values; ties share the mean of their ranks.
std::vector<double> average_ranks(std::span<const double> values);

/// One-sample Wilcoxon signed-rank test on the differences.
///
/// Zeros are dropped (or, with ZeroMethod::Pratt, ranked and then excluded
/// from the sign sum). The statistic is W+, the sum of ranks of positive
/// differences. With at most `exact_threshold` nonzero differences the p-value
/// comes from the exact null distribution of W+ over all 2^n sign
/// assignments (tie ranks included); above it, a normal approximation with
/// tie-corrected variance and 0.5 continuity correction is used.
/// Throws DegenerateSampleError when every difference is zero.
TestResult wilcoxon_signed_rank(std::span<const double> diffs, Alternative alternative,
                                const WilcoxonOptions& options = {});

/// Exact null distribution of W+ for the given ranks, as counts over
/// doubled rank sums: counts[s] = #{sign assignments with 2 * W+ == s}.
/// Ranks must be multiples of 0.5.
std::vector<double> signed_rank_null_counts(std::span<const double> ranks);

/// Pearson correlation with a two-sided p-value from Student's t with n - 2
/// degrees of freedom. Throws UndefinedError for a constant series and
/// PreconditionError for fewer than 3 or unequal-length samples.
TestResult pearson(std::span<const double> x, std::span<const double> y);

/// Wilcoxon signed-rank on (alternative - traditional), one-sided Greater.
/// Requires at least 3 pairs.
TestResult paired_policy_test(std::span<const double> f1_traditional, std::span<const double> f1_alternative);

double normal_cdf(double z);

/// CDF of Student's t via the regularized incomplete beta function.
double student_t_cdf(double t, double dof);

double median(std::vector<double> values);

}  // namespace theseus
