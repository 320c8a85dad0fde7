#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace permuton {

/// A root bracket was lost or an iteration failed to converge.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Levy measure of the tagged-fragment subordinator:
//   Lambda(dx) = 2 e^x dx / sqrt(2 pi (e^x - 1)^3),  x > 0.
// With u = (e^x - 1)^(-1/2) it becomes 2 sqrt(2/pi) du, which gives the
// closed-form tail used throughout.

/// Lambda((a, b)) for 0 < a < b <= +inf.
double levy_tail(double a, double b);

/// Laplace exponent Phi(q) = 2 sqrt(2) Gamma(q + 1/2) / Gamma(q), q > -1/2,
/// evaluated as 2 sqrt(2) q Gamma(q + 1/2) / Gamma(q + 1) so that every Gamma
/// argument stays positive and Phi(0) = 0 exactly.
double phi(double q);

/// Integral of (1 - e^{-qx}) Lambda(dx) over (log 2, inf), by tanh-sinh
/// quadrature in u = (e^x - 1)^(-1/2). `error_estimate` receives the
/// quadrature's own error estimate when non-null.
double kill_tail_integral(double q, double* error_estimate = nullptr);

/// Laplace exponent of the subordinator thinned by the selection rule:
/// Phi(q) - (1 - p) * kill_tail_integral(q).
double phi_S(double p, double q, double* error_estimate = nullptr);

/// Killing rate lambda(p) = 2 (1 - p) sqrt(2 / pi).
double lambda_kill(double p);

struct RootResult {
    double root = 0.0;
    double residual = 0.0;
    int iterations = 0;
    double quadrature_error = 0.0;
};

/// Unique root in (0, 1/2) of Phi_S(-x) = -lambda(p); alpha_*(p) = 1 - root.
RootResult lambda_star_lower(double p);

/// Right-hand side -(1 - e^gamma) * (1 - p) * Lambda((-log r, -log(1 - r))).
double kappa_rhs(double p, double gamma, double r);

/// The same quantity written as 2 (1 - p)(1 - e^gamma) sqrt(2/pi)
/// (1/r - 2) / sqrt(1/r - 1); kept to cross-check kappa_rhs.
double kappa_rhs_closed(double p, double gamma, double r);

/// Unique positive root of Phi(-kappa) = kappa_rhs(p, gamma, r), for
/// gamma < 0 and 1/2 < r < 1.
RootResult kappa_star(double p, double gamma, double r);

struct InnerSup {
    double value = 0.0;  // sup over gamma < 0 of gamma * delta + kappa*
    double gamma = 0.0;  // maximizer
};

/// Inner supremum at fixed (beta, delta): scan `seeds` points of
/// gamma = -e^s, s in [-30, 5], then golden-section refine around the best.
InnerSup inner_sup(double p, double beta, double delta, int seeds = 64);

struct UpperOptions {
    int beta_points = 64;
    int delta_points = 64;
    int gamma_seeds = 64;
    /// Local refinement after the grid; without it the result is the grid
    /// optimum, which is a lower bound on the supremum.
    bool refine = true;
    /// Repeat with every grid doubled and report the relative change.
    bool check_grid_doubling = true;
};

struct UpperResult {
    double lambda_upper = 0.0;
    double beta_hat = 0.0;
    double delta_hat = 0.0;
    double gamma_hat = 0.0;
    double kappa_residual = 0.0;
    double grid_value = 0.0;            // best value on the coarse grid
    double doubling_rel_change = 0.0;   // |refined(2x grid) - refined| / refined
    int inner_evaluations = 0;
};

/// lambda^*(p) = sup over beta in (0, log 2), delta > 0 of
/// min{beta delta, sup_{gamma < 0} (gamma delta + kappa*_{gamma, e^-beta}(p))};
/// beta^*(p) = 1 - lambda^*(p).
UpperResult lambda_star_upper(double p, const UpperOptions& options = {});

struct ExponentTable {
    double p = 0.0;
    double lambda_kill = 0.0;
    double lambda_lower = 0.0;
    double alpha_star = 0.0;
    double lambda_upper = 0.0;
    double beta_star = 0.0;
    double beta_hat = 0.0;
    double delta_hat = 0.0;
    double gamma_hat = 0.0;
    double residual_lower = 0.0;
    double residual_kappa = 0.0;
    int lower_iterations = 0;
    int upper_inner_evaluations = 0;
    double quadrature_error = 0.0;
    double upper_grid_value = 0.0;
    double upper_doubling_rel_change = 0.0;
};

/// One row; throws NumericalError if the row violates
/// 0 < lambda_lower < 1/2, lambda_upper > 0, 1/2 < alpha_star <= beta_star < 1.
ExponentTable exponent_row(double p, const UpperOptions& options = {});

/// Rows for every p, computed on up to `threads` workers, in input order.
std::vector<ExponentTable> exponent_table(std::span<const double> ps, const UpperOptions& options = {},
                                          int threads = 1);

}  // namespace permuton
