#pragma once

#include <span>
#include <string>
#include <vector>

namespace rba {

struct TTestResult {
    double t_stat = 0.0;
    double abs_t = 0.0;
    int df = 0;  // n - 1
    double p_value = 1.0;  // two-sided
    int n = 0;
    double mean_delta = 0.0;
    bool significant = false;  // set after multiple-test correction

    bool operator==(const TTestResult&) const = default;
};

struct CorrelationResult {
    double rho = 0.0;
    int n = 0;
    std::string feature;    // filled by callers
    std::string condition;  // strategy id, filled by callers
};

struct GridCell {
    std::string retriever_id;
    std::string bias_type;
    std::string strategy;
    TTestResult ttest;

    bool operator==(const GridCell&) const = default;
};

struct StrategySummary {
    std::string strategy;
    double mean_abs_t = 0.0;
    double std_abs_t = 0.0;  // sample std over the strategy's |t| cells
    int sig_count = 0;
    int total = 0;
    double reduction_vs_baseline_pct = 0.0;
    bool is_baseline = false;

    bool operator==(const StrategySummary&) const = default;
};

struct DeltaRho {
    double delta = 0.0;  // |rho_original| - |rho_rewritten|
    double pct = 0.0;    // 100 * delta / |rho_original|
};

// Pairwise (cascade) summation. Order-independent enough to keep aggregate
// results reproducible when inputs come from parallel stages.
double pairwise_sum(std::span<const double> xs);

double mean(std::span<const double> xs);

// Sample standard deviation (n-1 denominator). Returns 0 for n < 2.
double sample_std(std::span<const double> xs);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double regularized_incomplete_beta(double x, double a, double b);

// CDF of Student's t with df degrees of freedom.
double student_t_cdf(double t, double df);

// One-sample paired t-test of the deltas against zero. t = mean / (sd/sqrt{n})
// with sample sd; two-sided p from the Student-t CDF at df = n-1.
// Throws DegenerateVariance when every delta is identical.
TTestResult paired_ttest(std::span<const double> deltas);

// significant_i <=> p_i < alpha / m with m = p_values.size().
std::vector<bool> bonferroni(std::span<const double> p_values, double alpha);

// Spearman rank correlation with average ranks for ties.
// Requires equal lengths, n >= 3, and neither sequence constant.
CorrelationResult spearman(std::span<const double> x, std::span<const double> y);

// Eq-style reduction of absolute correlation. Throws when |rho_original| == 0
// (the percentage is undefined) or either input is outside [-1, 1].
DeltaRho delta_rho(double rho_original, double rho_rewritten);

// Per-strategy aggregation over the grid. Mean/std cover every |t| cell of
// the strategy, significant or not; sig_count applies Bonferroni within the
// strategy's own cells (family_size == 0 means "use that cell count").
// Marks each cell's `significant` flag as a side effect.
// Throws when no cell carries the baseline strategy name.
std::vector<StrategySummary> aggregate_grid(std::vector<GridCell>& cells,
                                            double alpha = 0.05,
                                            int family_size = 0,
                                            const std::string& baseline = "baseline");

}  // namespace rba
