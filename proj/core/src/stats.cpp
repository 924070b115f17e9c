#include "coachsim/stats.hpp"

#include "coachsim/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace coachsim::stats {

namespace {

double beta_continued_fraction(double a, double b, double x)
{
    constexpr double tiny = 1e-300;
    double const qab = a + b;
    double const qap = a + 1.0;
    double const qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) {
        d = tiny;
    }
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= beta_cf_max_iterations; ++m) {
        double const m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) {
            c = tiny;
        }
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) {
            c = tiny;
        }
        d = 1.0 / d;
        double const delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < beta_cf_tolerance) {
            return h;
        }
    }
    throw Error(ErrorCode::Internal, "incomplete beta continued fraction did not converge");
}

void require_df(double df)
{
    if (!(df > 0.0) || !std::isfinite(df)) {
        throw ValidationError("degrees of freedom must be positive and finite");
    }
}

} // namespace

double regularized_incomplete_beta(double a, double b, double x)
{
    if (!(a > 0.0) || !(b > 0.0)) {
        throw ValidationError("incomplete beta: a and b must be positive");
    }
    if (!(x >= 0.0 && x <= 1.0)) {
        throw ValidationError("incomplete beta: x must lie in [0, 1]");
    }
    if (x == 0.0 || x == 1.0) {
        return x;
    }
    double const log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x)
        + b * std::log1p(-x);
    double const front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df)
{
    require_df(df);
    if (std::isnan(t)) {
        throw ValidationError("t statistic is NaN");
    }
    if (std::isinf(t)) {
        return 0.0;
    }
    double const x = df / (df + t * t);
    return std::clamp(regularized_incomplete_beta(df / 2.0, 0.5, x), 0.0, 1.0);
}

double student_t_cdf(double t, double df)
{
    double const tail = 0.5 * student_t_two_sided_p(t, df);
    return t >= 0.0 ? 1.0 - tail : tail;
}

double student_t_quantile(double p, double df)
{
    require_df(df);
    if (!(p > 0.0 && p < 1.0)) {
        throw ValidationError("quantile probability must lie in (0, 1)");
    }
    if (p == 0.5) {
        return 0.0;
    }
    if (p < 0.5) {
        return -student_t_quantile(1.0 - p, df);
    }
    double lo = 0.0;
    double hi = 1.0;
    while (student_t_cdf(hi, df) < p) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) {
            throw Error(ErrorCode::Internal, "t quantile bracket overflow");
        }
    }
    // 1e-12 relative width keeps the absolute error well below 1e-9 for any realistic quantile.
    while (hi - lo > 1e-12 * std::max(1.0, hi)) {
        double const mid = 0.5 * (lo + hi);
        if (student_t_cdf(mid, df) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------

void SummaryStats::validate() const
{
    auto const who = label.empty() ? std::string("group") : "group '" + label + "'";
    if (n < 2) {
        throw ValidationError(who + " needs n >= 2 (has " + std::to_string(n) + ")");
    }
    if (!(sd >= 0.0) || !std::isfinite(sd)) {
        throw ValidationError(who + " needs a finite sd >= 0");
    }
    if (!std::isfinite(mean)) {
        throw ValidationError(who + " needs a finite mean");
    }
}

SummaryStats summarize(std::vector<double> const & values, std::string label)
{
    if (values.size() < 2) {
        throw ValidationError((label.empty() ? std::string("group") : "group '" + label + "'") + " needs n >= 2 (has "
            + std::to_string(values.size()) + ")");
    }
    double const n = static_cast<double>(values.size());
    double const mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) {
        ss += (v - mean) * (v - mean);
    }
    return {mean, std::sqrt(ss / (n - 1.0)), static_cast<std::int64_t>(values.size()), std::move(label)};
}

WelchResult welch_t_test(SummaryStats const & a, SummaryStats const & b, double alpha)
{
    a.validate();
    b.validate();
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ValidationError("alpha must lie in (0, 1)");
    }
    double const va = a.sd * a.sd / static_cast<double>(a.n);
    double const vb = b.sd * b.sd / static_cast<double>(b.n);
    double const se2 = va + vb;
    if (!(se2 > 0.0)) {
        throw ValidationError("both groups have zero variance; the t statistic is undefined");
    }
    WelchResult r;
    r.alpha = alpha;
    r.group_order = {a.label, b.label};
    r.mean_difference = a.mean - b.mean;
    r.standard_error = std::sqrt(se2);
    r.t = r.mean_difference / r.standard_error;
    r.df = se2 * se2 / (va * va / static_cast<double>(a.n - 1) + vb * vb / static_cast<double>(b.n - 1));
    r.p_two_sided = student_t_two_sided_p(r.t, r.df);
    double const q = student_t_quantile(1.0 - alpha / 2.0, r.df);
    r.ci_low = r.mean_difference - q * r.standard_error;
    r.ci_high = r.mean_difference + q * r.standard_error;
    return r;
}

// ---------------------------------------------------------------------------

RatingMatrix RatingMatrix::zeros(std::size_t k, std::vector<std::string> labels)
{
    RatingMatrix m;
    m.k = k;
    m.counts.assign(k, std::vector<std::int64_t>(k, 0));
    if (labels.empty()) {
        for (std::size_t i = 0; i < k; ++i) {
            labels.push_back(std::to_string(i + 1));
        }
    }
    m.labels = std::move(labels);
    return m;
}

std::int64_t RatingMatrix::total() const
{
    std::int64_t sum = 0;
    for (auto const & row : counts) {
        sum = std::accumulate(row.begin(), row.end(), sum);
    }
    return sum;
}

void RatingMatrix::validate() const
{
    if (k < 2) {
        throw ValidationError("rating matrix needs at least 2 categories");
    }
    if (counts.size() != k) {
        throw ValidationError("rating matrix must be square");
    }
    for (auto const & row : counts) {
        if (row.size() != k) {
            throw ValidationError("rating matrix must be square");
        }
        for (auto v : row) {
            if (v < 0) {
                throw ValidationError("rating matrix counts must be non-negative");
            }
        }
    }
    if (total() < 1) {
        throw ValidationError("rating matrix is empty");
    }
}

std::string RatingMatrix::to_csv() const
{
    std::ostringstream out;
    out << "rater1\\rater2";
    for (std::size_t j = 0; j < k; ++j) {
        out << ',' << (j < labels.size() ? labels[j] : std::to_string(j + 1));
    }
    out << '\n';
    for (std::size_t i = 0; i < k; ++i) {
        out << (i < labels.size() ? labels[i] : std::to_string(i + 1));
        for (std::size_t j = 0; j < k; ++j) {
            out << ',' << counts[i][j];
        }
        out << '\n';
    }
    return out.str();
}

KappaResult weighted_kappa(RatingMatrix const & m)
{
    m.validate();
    auto const n = static_cast<double>(m.total());
    auto const km1 = static_cast<double>(m.k - 1);
    std::vector<double> rows(m.k, 0.0);
    std::vector<double> cols(m.k, 0.0);
    for (std::size_t i = 0; i < m.k; ++i) {
        for (std::size_t j = 0; j < m.k; ++j) {
            rows[i] += static_cast<double>(m.counts[i][j]);
            cols[j] += static_cast<double>(m.counts[i][j]);
        }
    }
    double observed = 0.0;
    double expected = 0.0;
    for (std::size_t i = 0; i < m.k; ++i) {
        for (std::size_t j = 0; j < m.k; ++j) {
            double const d = static_cast<double>(i) - static_cast<double>(j);
            double const w = 1.0 - d * d / (km1 * km1);
            observed += w * static_cast<double>(m.counts[i][j]) / n;
            expected += w * (rows[i] / n) * (cols[j] / n);
        }
    }
    KappaResult r;
    r.n_items = m.total();
    r.observed_agreement = observed;
    r.expected_agreement = expected;
    if (std::fabs(1.0 - expected) < 1e-12) {
        r.kappa = 1.0;
        r.degenerate = true;
        return r;
    }
    r.kappa = std::min(1.0, (observed - expected) / (1.0 - expected));
    return r;
}

} // namespace coachsim::stats
