#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace echelon::stats {

/// Regularized incomplete beta I_x(a, b) via the Lentz continued fraction;
/// absolute error well below 1e-10 over the df ranges used here.
inline double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;

    const auto cont_frac = [](double aa, double bb, double xx) {
        constexpr int kMaxIter = 500;
        constexpr double kEps = 1e-15;
        constexpr double kTiny = 1e-300;
        const double qab = aa + bb, qap = aa + 1.0, qam = aa - 1.0;
        double c = 1.0;
        double d = 1.0 - qab * xx / qap;
        if (std::abs(d) < kTiny) d = kTiny;
        d = 1.0 / d;
        double h = d;
        for (int m = 1; m <= kMaxIter; ++m) {
            const double m2 = 2.0 * m;
            double num = m * (bb - m) * xx / ((qam + m2) * (aa + m2));
            d = 1.0 + num * d;
            if (std::abs(d) < kTiny) d = kTiny;
            c = 1.0 + num / c;
            if (std::abs(c) < kTiny) c = kTiny;
            d = 1.0 / d;
            h *= d * c;
            num = -(aa + m) * (qab + m) * xx / ((aa + m2) * (qap + m2));
            d = 1.0 + num * d;
            if (std::abs(d) < kTiny) d = kTiny;
            c = 1.0 + num / c;
            if (std::abs(c) < kTiny) c = kTiny;
            d = 1.0 / d;
            const double del = d * c;
            h *= del;
            if (std::abs(del - 1.0) < kEps) break;
        }
        return h;
    };

    const double front =
        std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                 b * std::log1p(-x));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * cont_frac(a, b, x) / a;
    return 1.0 - front * cont_frac(b, a, 1.0 - x) / b;
}

/// Two-sided p-value of a t statistic.
inline double student_t_pvalue(double t, double df) {
    if (df <= 0.0) return 1.0;
    if (std::isinf(t)) return 0.0;
    return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

/// Upper-tail p-value of an F statistic.
inline double f_pvalue(double f, double df1, double df2) {
    if (f <= 0.0) return 1.0;
    if (std::isinf(f)) return 0.0;
    return incomplete_beta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f));
}

struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;
};

/// Welch's unequal-variance t-test with the Welch-Satterthwaite df. A
/// degenerate zero-variance comparison reports t = 0, p = 1 for equal means
/// and an infinite statistic otherwise.
inline WelchResult welch_t(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("welch_t: need >= 2 samples");
    const auto stats_of = [](std::span<const double> xs) {
        double mean = 0.0;
        for (double v : xs) mean += v;
        mean /= static_cast<double>(xs.size());
        double ss = 0.0;
        for (double v : xs) ss += (v - mean) * (v - mean);
        return std::pair{mean, ss / static_cast<double>(xs.size() - 1)};
    };
    const auto [ma, va] = stats_of(a);
    const auto [mb, vb] = stats_of(b);
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double se2 = va / na + vb / nb;

    WelchResult r;
    if (se2 == 0.0) {
        if (ma == mb) return r;  // t = 0, p = 1
        r.t = ma > mb ? std::numeric_limits<double>::infinity()
                      : -std::numeric_limits<double>::infinity();
        r.df = na + nb - 2.0;
        r.p = 0.0;
        return r;
    }
    r.t = (ma - mb) / std::sqrt(se2);
    r.df = se2 * se2 /
           ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
    r.p = student_t_pvalue(r.t, r.df);
    return r;
}

struct AnovaResult {
    double f = 0.0;
    double df1 = 0.0;
    double df2 = 0.0;
    double p = 1.0;
};

/// One-way between/within decomposition. All-equal data gives F = 0; zero
/// within-variance with distinct means gives the +inf sentinel.
inline AnovaResult anova_f(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw std::invalid_argument("anova_f: need >= 2 groups");
    std::size_t total_n = 0;
    for (const auto& g : groups) {
        if (g.size() < 2) throw std::invalid_argument("anova_f: each group needs >= 2 samples");
        total_n += g.size();
    }
    const double k = static_cast<double>(groups.size());
    double grand = 0.0;
    std::vector<double> means;
    for (const auto& g : groups) {
        double m = 0.0;
        for (double v : g) m += v;
        grand += m;
        means.push_back(m / static_cast<double>(g.size()));
    }
    grand /= static_cast<double>(total_n);

    double ssb = 0.0, ssw = 0.0;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        ssb += static_cast<double>(groups[i].size()) * (means[i] - grand) * (means[i] - grand);
        for (double v : groups[i]) ssw += (v - means[i]) * (v - means[i]);
    }

    AnovaResult r;
    r.df1 = k - 1.0;
    r.df2 = static_cast<double>(total_n) - k;
    if (ssw == 0.0) {
        if (ssb == 0.0) {
            r.f = 0.0;
            r.p = 1.0;
        } else {
            r.f = std::numeric_limits<double>::infinity();
            r.p = 0.0;
        }
        return r;
    }
    r.f = (ssb / r.df1) / (ssw / r.df2);
    r.p = f_pvalue(r.f, r.df1, r.df2);
    return r;
}

/// Upper 5% points of the studentized range q(k, df), k = 2..6, interpolated
/// linearly between tabulated df rows. df above the last finite row uses the
/// asymptotic row; df below the first row clamps to it.
inline double tukey_q_critical(std::size_t k, double df) {
    if (k < 2 || k > 6) throw std::invalid_argument("tukey_q_critical: k must be 2..6");
    static constexpr double kDfRows[6] = {10, 20, 30, 40, 60, 120};
    static constexpr double kTable[7][5] = {
        // k = 2     3     4     5     6
        {3.15, 3.88, 4.33, 4.65, 4.91},  // df 10
        {2.95, 3.58, 3.96, 4.23, 4.45},  // df 20
        {2.89, 3.49, 3.85, 4.10, 4.30},  // df 30
        {2.86, 3.44, 3.79, 4.04, 4.23},  // df 40
        {2.83, 3.40, 3.74, 3.98, 4.16},  // df 60
        {2.80, 3.36, 3.68, 3.92, 4.10},  // df 120
        {2.77, 3.31, 3.63, 3.86, 4.03},  // df inf
    };
    const std::size_t col = k - 2;
    if (df <= kDfRows[0]) return kTable[0][col];
    if (df > kDfRows[5]) return kTable[6][col];
    for (int row = 5; row >= 1; --row) {
        if (df >= kDfRows[row - 1]) {
            if (df > kDfRows[row]) continue;
            const double lo = kDfRows[row - 1], hi = kDfRows[row];
            const double w = (df - lo) / (hi - lo);
            return kTable[row - 1][col] * (1.0 - w) + kTable[row][col] * w;
        }
    }
    return kTable[6][col];
}

struct TukeyResult {
    double hsd = 0.0;  // least significant mean difference
    std::vector<std::pair<std::size_t, std::size_t>> significant;
};

/// Tukey's honestly-significant-difference test on balanced groups at
/// alpha = 0.05 (the embedded table's level).
inline TukeyResult tukey_hsd(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2 || groups.size() > 6)
        throw std::invalid_argument("tukey_hsd: 2..6 groups supported");
    const std::size_t n = groups[0].size();
    for (const auto& g : groups)
        if (g.size() != n) throw std::invalid_argument("tukey_hsd: groups must be balanced");
    if (n < 2) throw std::invalid_argument("tukey_hsd: need >= 2 samples per group");

    std::vector<double> means;
    double ssw = 0.0;
    for (const auto& g : groups) {
        double m = 0.0;
        for (double v : g) m += v;
        m /= static_cast<double>(n);
        means.push_back(m);
        for (double v : g) ssw += (v - m) * (v - m);
    }
    const double df_err = static_cast<double>(groups.size() * (n - 1));
    const double msw = ssw / df_err;
    const double q = tukey_q_critical(groups.size(), df_err);

    TukeyResult r;
    r.hsd = q * std::sqrt(msw / static_cast<double>(n));
    for (std::size_t i = 0; i < groups.size(); ++i)
        for (std::size_t j = i + 1; j < groups.size(); ++j)
            if (std::abs(means[i] - means[j]) > r.hsd) r.significant.emplace_back(i, j);
    return r;
}

}  // namespace echelon::stats
