#pragma once

#include <stdexcept>

#include <Eigen/Dense>

#include "l1margin/linsys.hpp"

namespace l1margin {

// =============================================================================
// Configuration types
// =============================================================================

/// Known bounds on the plant uncertainty, with the enlarged projection sets.
/// The true theta lives in the box [theta_lo, theta_hi], |sigma| <= delta0 with
/// |sigma_dot| <= d_sigma, and the input gain in [omega0_lo, omega0_hi]; the
/// adaptive laws project onto the strictly larger delta and [omega_lo, omega_hi].
struct UncertaintySets {
    Eigen::VectorXd theta_lo;
    Eigen::VectorXd theta_hi;
    double delta0 = 0.0;
    double delta = 0.0;
    double omega0_lo = 0.0;
    double omega0_hi = 0.0;
    double omega_lo = 0.0;
    double omega_hi = 0.0;
    double d_sigma = 0.0;

    void validate() const;

    /// max over the box of sum_i |theta_i|.
    [[nodiscard]] double theta_l1_bound() const;

    /// max over the box of sum_i 4 theta_i^2.
    [[nodiscard]] double theta_sq_bound() const;
};

/// Fixed controller data: nominal plant, feedback gain, adaptation gain, the
/// Lyapunov right-hand side Q, and the low-pass shaping filter D(s).
struct ControllerConfig {
    Eigen::MatrixXd A_m;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
    double k = 0.0;
    double gamma_c = 0.0;
    Eigen::MatrixXd Q;    // empty means identity
    RationalTF D{{1.0}, {0.0, 1.0}};
};

/// Integration state of the controller: companion state, parameter estimates,
/// and the D(s) filter state chi.
struct ControllerState {
    Eigen::VectorXd xhat;
    Eigen::VectorXd theta_hat;
    double sigma_hat = 0.0;
    double omega_hat = 0.0;
    Eigen::VectorXd chi;
};

/// Snapshot of the estimates, with error counterparts when truth is supplied.
struct AdaptiveEstimates {
    Eigen::VectorXd theta_hat;
    double sigma_hat = 0.0;
    double omega_hat = 0.0;
    bool has_truth = false;
    Eigen::VectorXd theta_tilde;
    double sigma_tilde = 0.0;
    double omega_tilde = 0.0;
};

struct AdaptiveRates {
    Eigen::VectorXd theta;
    double sigma = 0.0;
    double omega = 0.0;
};

/// Raised when estimate rates exceed the per-step budget; carries advice on
/// shrinking h or gamma_c.
struct StepGuardError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Everything derived from (config, sets) that the per-step math needs:
/// Lyapunov solution, prefilter gain, and the canonical D(s) realization.
struct ControllerRuntime {
    ControllerConfig cfg;
    UncertaintySets sets;
    Eigen::MatrixXd P;
    Eigen::VectorXd pb;   // P b
    double kg = 0.0;
    StateSpace d_real;    // strictly proper realization of D(s)
    double guard_fraction = 0.2;  // allowed per-step estimate travel, as box fraction

    [[nodiscard]] Eigen::Index n() const { return cfg.A_m.rows(); }
    [[nodiscard]] Eigen::Index nd() const { return d_real.order(); }
    [[nodiscard]] Eigen::Index state_dim() const { return 2 * n() + 2 + nd(); }
};

// =============================================================================
// Construction and validation
// =============================================================================

/// DC prefilter gain -1/(c'A_m^{-1}b).
[[nodiscard]] double k_g(const Eigen::MatrixXd& A_m, const Eigen::VectorXd& b,
                         const Eigen::VectorXd& c);

/// Validate (config, sets) and precompute the step machinery. Throws on a
/// non-Hurwitz A_m, a biproper D (which would close an algebraic loop through
/// u), or ordering violations in the sets.
[[nodiscard]] ControllerRuntime prepare_controller(const ControllerConfig& cfg,
                                                   const UncertaintySets& sets);

/// Controller state with the companion model started on the plant state and
/// the estimates clipped into their sets (theta 0, sigma 0, omega 1).
[[nodiscard]] ControllerState initial_state(const ControllerRuntime& rt, const Eigen::VectorXd& x0);

// =============================================================================
// Filter algebra
// =============================================================================

/// Closed low-pass filter C(s) = omega k D / (1 + omega k D) for a given true
/// input gain omega. Validates that C is strictly proper, stable, and has
/// unit DC gain (D must contain an integrator).
[[nodiscard]] RationalTF c_filter(const RationalTF& D, double k, double omega);

/// Strictly proper realization of C(s)/omega = k D / (1 + omega k D).
[[nodiscard]] StateSpace c_over_omega_ss(const RationalTF& D, double k, double omega);

// =============================================================================
// Adaptive laws
// =============================================================================

/// Projection gate: passes raw_rate through unless the estimate sits at a
/// bound and the rate points outward, in which case that rate is zeroed.
/// The estimate must already be inside [lo, hi].
[[nodiscard]] double proj(double estimate, double raw_rate, double lo, double hi);
[[nodiscard]] Eigen::VectorXd proj(const Eigen::VectorXd& estimate, const Eigen::VectorXd& raw_rate,
                                   const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);

/// Gated estimate derivatives for the measured state, prediction error
/// xtilde = xhat - x_meas, and current input u.
[[nodiscard]] AdaptiveRates adaptive_rates(const Eigen::VectorXd& x_meas, const Eigen::VectorXd& xtilde,
                                           double u, const ControllerState& st,
                                           const ControllerRuntime& rt);

// =============================================================================
// Stepping
// =============================================================================

/// Derivative of the packed controller state [xhat, theta_hat, sigma_hat,
/// omega_hat, chi] for one evaluation point; returns u at that point. Writes
/// into dy without allocating, so it is safe inside integration hot loops.
double controller_deriv(const Eigen::Ref<const Eigen::VectorXd>& y,
                        const Eigen::Ref<const Eigen::VectorXd>& x_meas, double r,
                        const ControllerRuntime& rt, Eigen::Ref<Eigen::VectorXd> dy);

[[nodiscard]] Eigen::VectorXd pack_state(const ControllerState& st);
[[nodiscard]] ControllerState unpack_state(const ControllerRuntime& rt,
                                           const Eigen::Ref<const Eigen::VectorXd>& y);

/// Advance the controller one joint RK4 step of size h with the measurement
/// and reference held; u is recomputed from chi inside every stage. Estimates
/// are clipped back into their sets after the step. Returns u at step start.
/// Throws StepGuardError when any estimate rate exceeds
/// guard_fraction * (box width) / h.
double controller_step(ControllerState& st, const Eigen::VectorXd& x_meas, double r, double h,
                       const ControllerRuntime& rt);

/// Shared step-guard check on the estimate segment of a controller derivative.
void check_step_guard(const ControllerRuntime& rt, const Eigen::Ref<const Eigen::VectorXd>& dy,
                      double h);

/// Clip the estimate entries of a packed controller state back into their sets.
void clamp_estimates(const ControllerRuntime& rt, Eigen::Ref<Eigen::VectorXd> y);

/// Estimate views, with errors when the realized (theta, omega) and the
/// matched-disturbance truth sigma + eta are supplied.
[[nodiscard]] AdaptiveEstimates estimates_view(const ControllerState& st);
[[nodiscard]] AdaptiveEstimates estimates_view(const ControllerState& st, const Eigen::VectorXd& theta,
                                               double omega, double sigma_plus_eta);

}  // namespace l1margin
