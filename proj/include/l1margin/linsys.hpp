#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace l1margin {

// =============================================================================
// Core linear-system types
// =============================================================================

/// Single-input single-output state-space realization ydot = A x + b u, y = c'x + d u.
struct StateSpace {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
    double d = 0.0;

    [[nodiscard]] Eigen::Index order() const { return A.rows(); }
};

/// Rational transfer function num(s)/den(s), coefficients stored ascending in degree.
struct RationalTF {
    std::vector<double> num;
    std::vector<double> den;
};

/// Sorted positive frequency points in rad/s.
struct FrequencyGrid {
    std::vector<double> omegas;
};

/// Extremal eigenvalues of a Lyapunov pair (P, Q), both symmetric positive definite.
struct SpectralSummary {
    double lambda_min_p = 0.0;
    double lambda_max_p = 0.0;
    double lambda_min_q = 0.0;
};

// =============================================================================
// Polynomial helpers (ascending-degree coefficient lists)
// =============================================================================

[[nodiscard]] std::complex<double> poly_eval(const std::vector<double>& p, std::complex<double> s);
[[nodiscard]] std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b);
[[nodiscard]] std::vector<double> poly_add(const std::vector<double>& a, const std::vector<double>& b);
[[nodiscard]] std::vector<double> poly_scale(const std::vector<double>& p, double k);

/// Drop trailing coefficients below rel_tol of the largest magnitude one.
[[nodiscard]] std::vector<double> poly_trim(const std::vector<double>& p, double rel_tol = 1e-12);

/// Degree after trimming negligible leading terms; the zero polynomial reports 0.
[[nodiscard]] int poly_degree(const std::vector<double>& p);

/// Roots via the companion-matrix eigenvalues. Degree >= 1 required.
[[nodiscard]] Eigen::VectorXcd poly_roots(const std::vector<double>& p);

// =============================================================================
// Spectral operations
// =============================================================================

[[nodiscard]] Eigen::VectorXcd eigenvalues(const Eigen::MatrixXd& A);

/// True when every eigenvalue satisfies Re(lambda) < -1e-12.
[[nodiscard]] bool is_hurwitz(const Eigen::MatrixXd& A);

/// Solve A'P + PA = -Q for symmetric positive definite P (Bartels-Stewart on the
/// complex Schur form). A must be Hurwitz and Q symmetric positive definite.
[[nodiscard]] Eigen::MatrixXd lyapunov_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q);

/// Extremal eigenvalues of a symmetric positive definite pair.
[[nodiscard]] SpectralSummary spectral_summary(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q);

// =============================================================================
// Responses and gains
// =============================================================================

/// Value of c'(iw I - A)^{-1} b + d at a single frequency.
[[nodiscard]] std::complex<double> freq_response(const StateSpace& sys, double omega);

/// Value of num(iw)/den(iw). Throws when iw is within tolerance of a den root.
[[nodiscard]] std::complex<double> freq_response(const RationalTF& tf, double omega);

/// Impulse-response samples h(k*step) for k = 0..floor(t_end/step), by
/// matrix-exponential stepping. Strictly proper systems only.
[[nodiscard]] std::vector<double> impulse_response(const StateSpace& sys, double step, double t_end);

/// L1 gain: the integral of |h(t)| over [0, inf), adaptive in both step and
/// horizon until the relative error estimate falls below rel_tol. Strictly
/// proper and stable systems only.
[[nodiscard]] double l1_gain(const StateSpace& sys, double rel_tol = 1e-6);

/// L1 gain of a proper rational transfer function; a biproper direct term
/// contributes |d| exactly and the strictly proper remainder is integrated.
[[nodiscard]] double l1_gain(const RationalTF& tf, double rel_tol = 1e-6);

/// Multi-output/multi-input gain: max over output rows of the summed
/// single-entry gains (each entries[i][j] maps input j to output i).
[[nodiscard]] double l1_gain_mimo(const std::vector<std::vector<StateSpace>>& entries,
                                  double rel_tol = 1e-6);

// =============================================================================
// Conversions
// =============================================================================

/// Closed-loop plant matrix A_m + b theta'.
[[nodiscard]] Eigen::MatrixXd hbar_realization(const Eigen::MatrixXd& A_m, const Eigen::VectorXd& b,
                                               const Eigen::VectorXd& theta);

/// State space to transfer function by the Faddeev-LeVerrier recursion.
[[nodiscard]] RationalTF to_transfer_function(const StateSpace& sys);

/// Proper transfer function to controllable canonical state space.
[[nodiscard]] StateSpace to_state_space(const RationalTF& tf);

// =============================================================================
// Grids and phase
// =============================================================================

[[nodiscard]] FrequencyGrid log_grid(double omega_min, double omega_max, int points);

/// Remove 2*pi jumps from a phase sequence sampled along increasing frequency.
void unwrap_phase(std::vector<double>& phase);

}  // namespace l1margin
