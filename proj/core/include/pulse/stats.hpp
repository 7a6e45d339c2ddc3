#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace pulse {

using json = nlohmann::json;

// Standard normal CDF.
double normal_cdf(double z);

// Regularized upper incomplete gamma Q(a, x) = Γ(a, x) / Γ(a), for a > 0,
// x >= 0. Series expansion below a + 1, continued fraction above.
double gamma_q(double a, double x);

// Survival function of the chi-square distribution with `dof` degrees of
// freedom: P(X >= x).
double chi_square_sf(double x, int dof);

// Rank-sum comparison of two samples. U is the statistic for the first
// sample; the p-value uses the normal approximation with the tie-corrected
// variance and a 0.5 continuity correction; the rank-biserial effect size is
// r = 1 - 2U / (n1 * n2), so full separation with the first group lower gives
// r = +1. Groups with fewer than two values, or a pooled sample with no
// variation, set the degenerate flag (U and r still reported when defined).
struct MwuResult {
  double u = 0;
  double p_two_sided = 1;
  double rank_biserial_r = 0;
  bool degenerate = false;
};
MwuResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b);

// Pearson chi-square over a k x 2 contingency table; counts_a and counts_b
// list per-category counts for the two groups in the same category order.
// Categories whose pooled count is zero are dropped and flag the result as
// degenerate, as does a group with zero total or fewer than two categories
// left.
struct ChiSquareResult {
  double chi2 = 0;
  int dof = 0;
  double p = 1;
  bool degenerate = false;
};
ChiSquareResult chi_square(const std::vector<double>& counts_a,
                           const std::vector<double>& counts_b);

// A group's descriptive sample: raw observations per continuous measure and
// per-category counts per categorical measure.
struct GroupSamples {
  std::map<std::string, std::vector<double>> continuous;
  std::map<std::string, std::map<std::string, double>> categorical;
};

// Measure-by-measure comparison of two groups: rank tests for continuous
// measures, chi-square for categorical ones. Measures are the union of the
// two groups' keys (a side missing a measure contributes an empty sample and
// is flagged); categorical categories are likewise unioned.
json representativeness(const GroupSamples& a, const GroupSamples& b);

}  // namespace pulse
