#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "permuton/exponents.hpp"

namespace permuton {

enum class ExperimentKind : std::uint8_t { LisScaling, Survival, TwoPoint, CrossValidate };

std::string_view to_string(ExperimentKind kind) noexcept;
/// Accepts the canonical names and "crossval" for CrossValidate.
ExperimentKind parse_kind(std::string_view name);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::LisScaling;
    double p = 0.5;
    /// n for lis_scaling (strictly increasing); a single half-length N
    /// for the excursion experiments.
    std::vector<std::int64_t> sizes;
    /// Survival scales, strictly decreasing within (0, 1].
    std::vector<double> eps_grid;
    std::int64_t reps = 2000;
    std::uint64_t master_seed = 0;
    int threads = 1;
};

/// Desk-scale defaults for each kind (sizes, eps grid, reps).
ExperimentConfig default_config(ExperimentKind kind);

/// Throws std::invalid_argument on any violated config invariant.
void validate(const ExperimentConfig& config);

struct Regression {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
    double r2 = 0.0;
};

/// OLS of y on x. Needs two or more points and two distinct x values.
/// With zero residual variance the stderr is 0 and R^2 is 1.
Regression loglog_regression(std::span<const std::pair<double, double>> points);

struct SizeRecord {
    std::string series;  // "lis", "single", "joint"
    double n_or_eps = 0.0;
    double mean = 0.0;
    double sd = 0.0;      // sample standard deviation
    std::int64_t count = 0;
};

struct RegressionRecord {
    std::string series;
    std::optional<Regression> fit;  // empty when undefined; see note
    std::string note;
    /// Reference band for the slope; equal ends for a point reference.
    std::optional<double> reference_low;
    std::optional<double> reference_high;
    double tolerance = 0.0;
};

struct PatternCount {
    std::string pattern;  // one-line notation, e.g. "2413"
    double exact = 0.0;
    std::int64_t tree = 0;
    std::int64_t excursion = 0;
};

struct ChiSquare {
    std::string comparison;  // "tree_vs_exact", "excursion_vs_exact", "tree_vs_excursion"
    double statistic = 0.0;
    int dof = 0;
    double p_value = 0.0;
};

struct PatternSection {
    int n = 0;
    std::vector<PatternCount> counts;
    std::vector<ChiSquare> tests;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<SizeRecord> rows;
    std::vector<RegressionRecord> regressions;
    std::vector<PatternSection> patterns;
    /// Reference exponents at config.p; empty outside (0, 1).
    std::optional<ExponentTable> reference;
    /// Set when the run was cancelled; counts then cover completed trials only.
    bool partial = false;
    /// Not serialized: reports must be byte-identical across runs.
    double wall_seconds = 0.0;
};

/// Exponent row at p, computed once per process and cached.
std::optional<ExponentTable> reference_exponents(double p);

/// Exact law of the n-point pattern, n <= 8, by enumerating signed trees.
/// Returns (pattern, probability) for every permutation of size n, in
/// lexicographic order.
std::vector<std::pair<std::string, double>> exact_pattern_law(int n, double p);

/// Pearson statistic against expected probabilities. Categories with zero
/// expectation are skipped unless observed, which gives an infinite statistic.
ChiSquare chi_square_fit(std::span<const std::int64_t> observed, std::span<const double> expected);
/// Two-sample homogeneity test over categories with positive total count.
ChiSquare chi_square_homogeneity(std::span<const std::int64_t> a, std::span<const std::int64_t> b);

/// Trials poll `cancel` and stop early when it becomes true.
ExperimentReport run_lis_scaling(const ExperimentConfig& config, const std::atomic<bool>* cancel = nullptr);
ExperimentReport run_survival_scaling(const ExperimentConfig& config, const std::atomic<bool>* cancel = nullptr);
ExperimentReport run_two_point(const ExperimentConfig& config, const std::atomic<bool>* cancel = nullptr);
ExperimentReport run_cross_validate(const ExperimentConfig& config, const std::atomic<bool>* cancel = nullptr);
/// Dispatches on config.kind.
ExperimentReport run_experiment(const ExperimentConfig& config, const std::atomic<bool>* cancel = nullptr);

}  // namespace permuton
