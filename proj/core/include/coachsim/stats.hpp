#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace coachsim::stats {

// ---------------------------------------------------------------------------
// Special functions
//
// The regularized incomplete beta function is evaluated with the modified
// Lentz continued fraction (at most 200 iterations, relative tolerance 1e-12),
// using the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) to stay in the fast-converging
// region.

inline constexpr int beta_cf_max_iterations = 200;
inline constexpr double beta_cf_tolerance = 1e-12;

/// I_x(a, b) for a, b > 0 and x in [0, 1].
[[nodiscard]] double regularized_incomplete_beta(double a, double b, double x);

/// P(T <= t) for Student's t with `df` > 0 degrees of freedom.
[[nodiscard]] double student_t_cdf(double t, double df);

/// P(|T| >= |t|).
[[nodiscard]] double student_t_two_sided_p(double t, double df);

/// Inverse CDF by bisection on student_t_cdf, to an absolute tolerance of 1e-9 or better.
[[nodiscard]] double student_t_quantile(double p, double df);

// ---------------------------------------------------------------------------
// Welch two-sample t-test from summary statistics

struct SummaryStats
{
    double mean = 0.0;
    double sd = 0.0; // sample SD (n - 1)
    std::int64_t n = 0;
    std::string label;

    /// Throws ValidationError unless n >= 2 and sd >= 0 (and both finite).
    void validate() const;
};

/// Sample mean / SD of raw values (n - 1 denominator). Needs at least two values.
[[nodiscard]] SummaryStats summarize(std::vector<double> const & values, std::string label = {});

struct WelchResult
{
    double t = 0.0;
    double df = 0.0;
    double p_two_sided = 1.0;
    double ci_low = 0.0;  // of mean_a - mean_b
    double ci_high = 0.0;
    double alpha = 0.05;
    double mean_difference = 0.0;
    double standard_error = 0.0;
    std::pair<std::string, std::string> group_order; // (label_a, label_b)
};

/**
 * t = (mean_a - mean_b) / sqrt(sd_a^2/n_a + sd_b^2/n_b), Welch-Satterthwaite
 * df, two-sided p, and the (1 - alpha) confidence interval of the mean
 * difference. Throws ValidationError for invalid inputs or zero standard error.
 */
[[nodiscard]] WelchResult welch_t_test(SummaryStats const & a, SummaryStats const & b, double alpha = 0.05);

// ---------------------------------------------------------------------------
// Quadratically weighted Cohen's kappa

/// k x k contingency table; rows are rater 1, columns rater 2.
struct RatingMatrix
{
    std::size_t k = 0;
    std::vector<std::vector<std::int64_t>> counts;
    std::vector<std::string> labels;

    [[nodiscard]] static RatingMatrix zeros(std::size_t k, std::vector<std::string> labels = {});
    [[nodiscard]] std::int64_t total() const;
    /// Throws ValidationError unless square, k >= 2, counts >= 0 and total >= 1.
    void validate() const;

    /// "rater1\rater2,<labels...>" header then one row per rater-1 category.
    [[nodiscard]] std::string to_csv() const;
};

enum class Weighting { Quadratic };

struct KappaResult
{
    double kappa = 0.0;
    Weighting weighting = Weighting::Quadratic;
    std::int64_t n_items = 0;
    double observed_agreement = 0.0; // weighted P_o
    double expected_agreement = 0.0; // weighted P_e
    /// Set when P_e == 1 (both raters constant and equal); kappa is then 1.
    bool degenerate = false;
};

/**
 * w_ij = 1 - (i-j)^2/(k-1)^2, P_o = sum w_ij p_ij, P_e = sum w_ij r_i c_j,
 * kappa = (P_o - P_e) / (1 - P_e), in double precision.
 */
[[nodiscard]] KappaResult weighted_kappa(RatingMatrix const & matrix);

} // namespace coachsim::stats
