#include "rba/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <map>

#include "rba/errors.hpp"

namespace rba {
namespace {

// Continued fraction for the incomplete beta function, modified Lentz.
double beta_continued_fraction(double a, double b, double x) {
    constexpr double kTiny = 1e-300;
    constexpr double kEps = 1e-16;
    constexpr int kMaxIter = 500;

    double qab = a + b;
    double qap = a + 1.0;
    double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw Error("incomplete beta: continued fraction did not converge");
}

double pairwise_sum_impl(const double* xs, size_t n) {
    if (n <= 16) {
        double s = 0.0;
        for (size_t i = 0; i < n; ++i) s += xs[i];
        return s;
    }
    size_t half = n / 2;
    return pairwise_sum_impl(xs, half) + pairwise_sum_impl(xs + half, n - half);
}

}  // namespace

double pairwise_sum(std::span<const double> xs) {
    return pairwise_sum_impl(xs.data(), xs.size());
}

double mean(std::span<const double> xs) {
    if (xs.empty()) throw Error("mean: empty input");
    return pairwise_sum(xs) / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
    size_t n = xs.size();
    if (n < 2) return 0.0;
    double mu = mean(xs);
    std::vector<double> sq(n);
    for (size_t i = 0; i < n; ++i) {
        double d = xs[i] - mu;
        sq[i] = d * d;
    }
    return std::sqrt(pairwise_sum(sq) / static_cast<double>(n - 1));
}

double regularized_incomplete_beta(double x, double a, double b) {
    if (!(x >= 0.0 && x <= 1.0) || !(a > 0.0) || !(b > 0.0))
        throw Error("regularized_incomplete_beta: bad arguments");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    double front = std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
    if (!(df > 0.0)) throw Error("student_t_cdf: df must be positive");
    if (t == 0.0) return 0.5;
    double x = df / (df + t * t);
    double tail = 0.5 * regularized_incomplete_beta(x, df / 2.0, 0.5);
    return t > 0.0 ? 1.0 - tail : tail;
}

TTestResult paired_ttest(std::span<const double> deltas) {
    size_t n = deltas.size();
    if (n < 2) throw Error("paired_ttest: need at least 2 deltas, got " +
                           std::to_string(n));
    bool all_equal = std::all_of(deltas.begin(), deltas.end(),
                                 [&](double d) { return d == deltas[0]; });
    if (all_equal)
        throw DegenerateVariance(
            "paired_ttest: zero variance in deltas (constant " +
            std::to_string(deltas[0]) + " over " + std::to_string(n) +
            " pairs)");

    TTestResult r;
    r.n = static_cast<int>(n);
    r.df = static_cast<int>(n) - 1;
    r.mean_delta = mean(deltas);
    double sd = sample_std(deltas);
    r.t_stat = r.mean_delta / (sd / std::sqrt(static_cast<double>(n)));
    r.abs_t = std::fabs(r.t_stat);
    // two-sided p: mass of both tails beyond |t|
    double x = static_cast<double>(r.df) / (r.df + r.t_stat * r.t_stat);
    r.p_value = r.t_stat == 0.0
                    ? 1.0
                    : regularized_incomplete_beta(x, r.df / 2.0, 0.5);
    return r;
}

std::vector<bool> bonferroni(std::span<const double> p_values, double alpha) {
    if (p_values.empty()) throw Error("bonferroni: empty p-value list");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw Error("bonferroni: alpha must lie in (0,1)");
    double threshold = alpha / static_cast<double>(p_values.size());
    std::vector<bool> sig(p_values.size());
    for (size_t i = 0; i < p_values.size(); ++i)
        sig[i] = p_values[i] < threshold;
    return sig;
}

namespace {

// Average ranks, ties share the mean of their positions (1-based).
std::vector<double> average_ranks(std::span<const double> xs) {
    size_t n = xs.size();
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](size_t a, size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && xs[idx[j + 1]] == xs[idx[i]]) ++j;
        double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

CorrelationResult spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw Error("spearman: length mismatch (" + std::to_string(x.size()) +
                    " vs " + std::to_string(y.size()) + ")");
    size_t n = x.size();
    if (n < 3) throw Error("spearman: need at least 3 observations");
    auto constant = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(),
                           [&](double a) { return a == v[0]; });
    };
    if (constant(x) || constant(y))
        throw Error("spearman: constant input sequence");

    std::vector<double> rx = average_ranks(x);
    std::vector<double> ry = average_ranks(y);
    double mx = mean(rx);
    double my = mean(ry);
    std::vector<double> cov(n), vx(n), vy(n);
    for (size_t i = 0; i < n; ++i) {
        double dx = rx[i] - mx;
        double dy = ry[i] - my;
        cov[i] = dx * dy;
        vx[i] = dx * dx;
        vy[i] = dy * dy;
    }
    CorrelationResult r;
    r.n = static_cast<int>(n);
    r.rho = pairwise_sum(cov) /
            std::sqrt(pairwise_sum(vx) * pairwise_sum(vy));
    return r;
}

DeltaRho delta_rho(double rho_original, double rho_rewritten) {
    if (std::fabs(rho_original) > 1.0 || std::fabs(rho_rewritten) > 1.0)
        throw Error("delta_rho: correlations must lie in [-1, 1]");
    if (rho_original == 0.0)
        throw Error("delta_rho: |rho_original| = 0, reduction percentage undefined");
    DeltaRho d;
    d.delta = std::fabs(rho_original) - std::fabs(rho_rewritten);
    d.pct = 100.0 * d.delta / std::fabs(rho_original);
    return d;
}

std::vector<StrategySummary> aggregate_grid(std::vector<GridCell>& cells,
                                            double alpha, int family_size,
                                            const std::string& baseline) {
    // group cells per strategy, keeping first-appearance order
    std::vector<std::string> order;
    std::map<std::string, std::vector<size_t>> groups;
    for (size_t i = 0; i < cells.size(); ++i) {
        auto [it, inserted] = groups.try_emplace(cells[i].strategy);
        if (inserted) order.push_back(cells[i].strategy);
        it->second.push_back(i);
    }
    if (!groups.count(baseline))
        throw Error("aggregate_grid: baseline strategy '" + baseline +
                    "' not present in the grid");

    std::vector<StrategySummary> out;
    double baseline_mean = 0.0;
    for (const auto& name : order) {
        const auto& idxs = groups[name];
        std::vector<double> abs_t, pvals;
        abs_t.reserve(idxs.size());
        for (size_t i : idxs) {
            abs_t.push_back(cells[i].ttest.abs_t);
            pvals.push_back(cells[i].ttest.p_value);
        }
        int m = family_size > 0 ? family_size : static_cast<int>(idxs.size());
        double threshold = alpha / static_cast<double>(m);
        StrategySummary s;
        s.strategy = name;
        s.total = static_cast<int>(idxs.size());
        s.mean_abs_t = mean(abs_t);
        s.std_abs_t = sample_std(abs_t);
        for (size_t i : idxs) {
            bool sig = cells[i].ttest.p_value < threshold;
            cells[i].ttest.significant = sig;
            if (sig) ++s.sig_count;
        }
        s.is_baseline = (name == baseline);
        if (s.is_baseline) baseline_mean = s.mean_abs_t;
        out.push_back(std::move(s));
    }
    for (auto& s : out) {
        if (!s.is_baseline && baseline_mean != 0.0)
            s.reduction_vs_baseline_pct =
                100.0 * (baseline_mean - s.mean_abs_t) / baseline_mean;
    }
    return out;
}

}  // namespace rba
