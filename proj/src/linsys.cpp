#include "l1margin/linsys.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

namespace l1margin {

namespace {

void require_siso_dims(const StateSpace& sys, const char* who) {
    if (sys.A.rows() != sys.A.cols()) {
        throw std::invalid_argument(std::string(who) + ": A must be square");
    }
    if (sys.b.size() != sys.A.rows() || sys.c.size() != sys.A.rows()) {
        throw std::invalid_argument(std::string(who) + ": b and c must match the order of A");
    }
}

void require_symmetric(const Eigen::MatrixXd& M, const char* who, const char* name) {
    if (M.rows() != M.cols()) {
        throw std::invalid_argument(std::string(who) + ": " + name + " must be square");
    }
    const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
        throw std::invalid_argument(std::string(who) + ": " + name + " must be symmetric");
    }
}

// Condition number of the eigenvector matrix, used to turn the slowest decay
// rate into a certified envelope for truncation-tail bounds.
double eigenvector_condition(const Eigen::MatrixXd& A) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, true);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(es.eigenvectors());
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (!(smin > 0.0) || !std::isfinite(smax / smin)) {
        return 1e12;
    }
    return std::min(smax / smin, 1e12);
}

}  // namespace

// =============================================================================
// Polynomial helpers
// =============================================================================

std::complex<double> poly_eval(const std::vector<double>& p, std::complex<double> s) {
    std::complex<double> acc(0.0, 0.0);
    for (auto it = p.rbegin(); it != p.rend(); ++it) {
        acc = acc * s + *it;
    }
    return acc;
}

std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) return {};
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            out[i + j] += a[i] * b[j];
        }
    }
    return out;
}

std::vector<double> poly_add(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(std::max(a.size(), b.size()), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) out[i] += a[i];
    for (std::size_t i = 0; i < b.size(); ++i) out[i] += b[i];
    return out;
}

std::vector<double> poly_scale(const std::vector<double>& p, double k) {
    std::vector<double> out(p);
    for (double& v : out) v *= k;
    return out;
}

std::vector<double> poly_trim(const std::vector<double>& p, double rel_tol) {
    if (p.empty()) return {0.0};
    double maxc = 0.0;
    for (double v : p) maxc = std::max(maxc, std::abs(v));
    if (maxc == 0.0) return {0.0};
    std::size_t last = p.size();
    while (last > 1 && std::abs(p[last - 1]) <= rel_tol * maxc) --last;
    return {p.begin(), p.begin() + static_cast<std::ptrdiff_t>(last)};
}

int poly_degree(const std::vector<double>& p) {
    return static_cast<int>(poly_trim(p).size()) - 1;
}

Eigen::VectorXcd poly_roots(const std::vector<double>& p) {
    const std::vector<double> q = poly_trim(p);
    const int n = static_cast<int>(q.size()) - 1;
    if (n < 1) {
        throw std::invalid_argument("poly_roots: polynomial must have degree >= 1");
    }
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) comp(i + 1, i) = 1.0;
    for (int i = 0; i < n; ++i) comp(i, n - 1) = -q[static_cast<std::size_t>(i)] / q[static_cast<std::size_t>(n)];
    return eigenvalues(comp);
}

// =============================================================================
// Spectral operations
// =============================================================================

Eigen::VectorXcd eigenvalues(const Eigen::MatrixXd& A) {
    if (A.rows() != A.cols()) {
        throw std::invalid_argument("eigenvalues: matrix must be square");
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("eigenvalues: QR iteration failed to converge");
    }
    return es.eigenvalues();
}

bool is_hurwitz(const Eigen::MatrixXd& A) {
    const Eigen::VectorXcd lam = eigenvalues(A);
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        if (lam(i).real() >= -1e-12) return false;
    }
    return true;
}

Eigen::MatrixXd lyapunov_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
    if (A.rows() != A.cols()) {
        throw std::invalid_argument("lyapunov_solve: A must be square");
    }
    require_symmetric(Q, "lyapunov_solve", "Q");
    if (Q.rows() != A.rows()) {
        throw std::invalid_argument("lyapunov_solve: A and Q sizes differ");
    }
    const Eigen::VectorXcd lam = eigenvalues(A);
    double max_re = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < lam.size(); ++i) max_re = std::max(max_re, lam(i).real());
    if (max_re >= -1e-12) {
        throw std::invalid_argument("lyapunov_solve: A is not Hurwitz (max eigenvalue real part " +
                                    std::to_string(max_re) + ")");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (Q + Q.transpose()));
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument("lyapunov_solve: Q must be positive definite");
    }

    // Bartels-Stewart: with A = U T U* the equation A*Y + YA = -Q becomes
    // T* Yt + Yt T = -Qt in Schur coordinates, solved column by column by
    // forward substitution (T* is lower triangular).
    const Eigen::Index n = A.rows();
    Eigen::ComplexSchur<Eigen::MatrixXd> schur(A);
    if (schur.info() != Eigen::Success) {
        throw std::runtime_error("lyapunov_solve: Schur decomposition failed");
    }
    const Eigen::MatrixXcd T = schur.matrixT();
    const Eigen::MatrixXcd U = schur.matrixU();
    const Eigen::MatrixXcd Qt = U.adjoint() * Q * U;
    Eigen::MatrixXcd Yt = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::VectorXcd rhs = -Qt.col(k);
        for (Eigen::Index j = 0; j < k; ++j) rhs -= T(j, k) * Yt.col(j);
        for (Eigen::Index i = 0; i < n; ++i) {
            std::complex<double> acc = rhs(i);
            for (Eigen::Index m = 0; m < i; ++m) acc -= std::conj(T(m, i)) * Yt(m, k);
            Yt(i, k) = acc / (std::conj(T(i, i)) + T(k, k));
        }
    }
    const Eigen::MatrixXd Y = (U * Yt * U.adjoint()).real();
    Eigen::MatrixXd P = 0.5 * (Y + Y.transpose());

    const double residual = (A.transpose() * P + P * A + Q).cwiseAbs().maxCoeff();
    if (residual > 1e-10 * Q.cwiseAbs().maxCoeff()) {
        throw std::runtime_error("lyapunov_solve: residual check failed (" + std::to_string(residual) + ")");
    }
    return P;
}

SpectralSummary spectral_summary(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q) {
    require_symmetric(P, "spectral_summary", "P");
    require_symmetric(Q, "spectral_summary", "Q");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ep(P);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eq(Q);
    SpectralSummary out;
    out.lambda_min_p = ep.eigenvalues().minCoeff();
    out.lambda_max_p = ep.eigenvalues().maxCoeff();
    out.lambda_min_q = eq.eigenvalues().minCoeff();
    if (out.lambda_min_p <= 0.0) {
        throw std::invalid_argument("spectral_summary: P must be positive definite");
    }
    if (out.lambda_min_q <= 0.0) {
        throw std::invalid_argument("spectral_summary: Q must be positive definite");
    }
    return out;
}

// =============================================================================
// Responses and gains
// =============================================================================

std::complex<double> freq_response(const StateSpace& sys, double omega) {
    require_siso_dims(sys, "freq_response");
    const Eigen::Index n = sys.order();
    if (n == 0) return {sys.d, 0.0};
    Eigen::MatrixXcd M = -sys.A.cast<std::complex<double>>();
    for (Eigen::Index i = 0; i < n; ++i) M(i, i) += std::complex<double>(0.0, omega);
    const Eigen::VectorXcd z = M.partialPivLu().solve(sys.b.cast<std::complex<double>>());
    const std::complex<double> val = sys.c.cast<std::complex<double>>().dot(z) + sys.d;
    if (!std::isfinite(val.real()) || !std::isfinite(val.imag())) {
        throw std::runtime_error("freq_response: evaluation frequency coincides with a pole");
    }
    return val;
}

std::complex<double> freq_response(const RationalTF& tf, double omega) {
    const std::complex<double> s(0.0, omega);
    const std::complex<double> den = poly_eval(tf.den, s);
    // Scale of the evaluation, to detect near-pole frequencies relatively.
    double env = 0.0;
    double pw = 1.0;
    for (double c : tf.den) {
        env += std::abs(c) * pw;
        pw *= std::abs(omega) > 1.0 ? std::abs(omega) : 1.0;
    }
    if (std::abs(den) <= 1e-12 * std::max(env, 1e-300)) {
        throw std::runtime_error("freq_response: evaluation frequency is within tolerance of a pole");
    }
    return poly_eval(tf.num, s) / den;
}

std::vector<double> impulse_response(const StateSpace& sys, double step, double t_end) {
    require_siso_dims(sys, "impulse_response");
    if (sys.d != 0.0) {
        throw std::invalid_argument("impulse_response: system must be strictly proper");
    }
    if (!(step > 0.0) || !(t_end >= 0.0)) {
        throw std::invalid_argument("impulse_response: step must be positive and t_end nonnegative");
    }
    const auto count = static_cast<std::size_t>(std::floor(t_end / step)) + 1;
    std::vector<double> h(count);
    const Eigen::MatrixXd E = (sys.A * step).exp();
    Eigen::VectorXd x = sys.b;
    for (std::size_t k = 0; k < count; ++k) {
        h[k] = sys.c.dot(x);
        x = E * x;
    }
    return h;
}

namespace {

// One pass of the L1-gain quadrature: trapezoid over |h| with the horizon
// extended until the eigen-envelope tail bound drops below the budget.
double l1_quadrature_pass(const StateSpace& sys, double step, double alpha, double kappa,
                          double tail_budget_rel) {
    const Eigen::MatrixXd E = (sys.A * step).exp();
    const double cnorm = sys.c.norm();
    Eigen::VectorXd x = sys.b;
    double prev = std::abs(sys.c.dot(x));
    double total = 0.0;
    double t = 0.0;
    double horizon = 10.0 / alpha;
    const double horizon_max = 5e4 / alpha;
    while (true) {
        x = E * x;
        const double cur = std::abs(sys.c.dot(x));
        total += 0.5 * (prev + cur) * step;
        prev = cur;
        t += step;
        if (t >= horizon) {
            const double tail = cnorm * kappa * x.norm() / alpha;
            if (tail <= tail_budget_rel * std::max(total, 1e-300)) break;
            horizon *= 1.5;
            if (horizon > horizon_max) {
                throw std::runtime_error("l1_gain: tail bound failed to converge within the horizon cap");
            }
        }
        if (!std::isfinite(total)) {
            throw std::runtime_error("l1_gain: quadrature overflowed");
        }
    }
    return total;
}

}  // namespace

double l1_gain(const StateSpace& sys, double rel_tol) {
    require_siso_dims(sys, "l1_gain");
    if (sys.d != 0.0) {
        throw std::invalid_argument("l1_gain: system must be strictly proper");
    }
    if (!(rel_tol > 0.0)) {
        throw std::invalid_argument("l1_gain: rel_tol must be positive");
    }
    if (sys.order() == 0) return 0.0;
    const Eigen::VectorXcd lam = eigenvalues(sys.A);
    double max_re = -std::numeric_limits<double>::infinity();
    double wmax = 0.0;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        max_re = std::max(max_re, lam(i).real());
        wmax = std::max(wmax, std::abs(lam(i)));
    }
    if (max_re >= -1e-12) {
        throw std::runtime_error(
            "l1_gain: system is unstable; the gain is finite if and only if the "
            "impulse-response integral converges, which requires a stable system");
    }
    const double alpha = -max_re;
    const double kappa = eigenvector_condition(sys.A);

    // Step refinement with Richardson acceptance; the tail budget stays a
    // fraction of rel_tol so truncation and quadrature errors share it.
    double step = 0.02 / std::max(wmax, alpha);
    double coarse = l1_quadrature_pass(sys, step, alpha, kappa, 0.25 * rel_tol);
    for (int level = 0; level < 24; ++level) {
        step *= 0.5;
        const double fine = l1_quadrature_pass(sys, step, alpha, kappa, 0.25 * rel_tol);
        if (std::abs(fine - coarse) <= 0.75 * rel_tol * std::max(std::abs(fine), 1e-300)) {
            return fine + (fine - coarse) / 3.0;
        }
        coarse = fine;
    }
    throw std::runtime_error("l1_gain: step refinement failed to reach the requested tolerance");
}

double l1_gain(const RationalTF& tf, double rel_tol) {
    std::vector<double> num = poly_trim(tf.num);
    std::vector<double> den = poly_trim(tf.den);
    const int dn = static_cast<int>(den.size()) - 1;
    const int nn = static_cast<int>(num.size()) - 1;
    if (den.size() == 1 && den[0] == 0.0) {
        throw std::invalid_argument("l1_gain: zero denominator");
    }
    if (nn > dn) {
        throw std::invalid_argument("l1_gain: transfer function must be proper");
    }
    double direct = 0.0;
    if (nn == dn) {
        direct = num[static_cast<std::size_t>(nn)] / den[static_cast<std::size_t>(dn)];
        // The leading coefficient cancels exactly; drop it rather than trusting
        // floating-point subtraction to produce a clean zero.
        std::vector<double> rem = poly_add(num, poly_scale(den, -direct));
        rem.resize(static_cast<std::size_t>(dn));
        num = poly_trim(rem);
        if (num.size() == 1 && num[0] == 0.0) return std::abs(direct);
    }
    return std::abs(direct) + l1_gain(to_state_space(RationalTF{num, den}), rel_tol);
}

double l1_gain_mimo(const std::vector<std::vector<StateSpace>>& entries, double rel_tol) {
    if (entries.empty()) {
        throw std::invalid_argument("l1_gain_mimo: at least one output row required");
    }
    double worst = 0.0;
    for (const auto& row : entries) {
        double row_sum = 0.0;
        for (const auto& entry : row) row_sum += l1_gain(entry, rel_tol);
        worst = std::max(worst, row_sum);
    }
    return worst;
}

// =============================================================================
// Conversions
// =============================================================================

Eigen::MatrixXd hbar_realization(const Eigen::MatrixXd& A_m, const Eigen::VectorXd& b,
                                 const Eigen::VectorXd& theta) {
    if (A_m.rows() != A_m.cols() || b.size() != A_m.rows() || theta.size() != A_m.rows()) {
        throw std::invalid_argument("hbar_realization: dimension mismatch");
    }
    return A_m + b * theta.transpose();
}

RationalTF to_transfer_function(const StateSpace& sys) {
    require_siso_dims(sys, "to_transfer_function");
    const Eigen::Index n = sys.order();
    if (n == 0) return {{sys.d}, {1.0}};

    // Faddeev-LeVerrier builds the characteristic polynomial and the adjugate
    // expansion adj(sI - A) = sum_k M_k s^{n-1-k} in one recursion.
    std::vector<double> den_desc(static_cast<std::size_t>(n) + 1);
    std::vector<double> num_desc(static_cast<std::size_t>(n));
    den_desc[0] = 1.0;
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        num_desc[static_cast<std::size_t>(k)] = sys.c.dot(M * sys.b);
        const Eigen::MatrixXd AM = sys.A * M;
        const double ak = -AM.trace() / static_cast<double>(k + 1);
        den_desc[static_cast<std::size_t>(k) + 1] = ak;
        M = AM + ak * Eigen::MatrixXd::Identity(n, n);
    }
    std::vector<double> den(den_desc.rbegin(), den_desc.rend());
    std::vector<double> num(num_desc.rbegin(), num_desc.rend());
    if (sys.d != 0.0) num = poly_add(num, poly_scale(den, sys.d));
    return {poly_trim(num), poly_trim(den)};
}

StateSpace to_state_space(const RationalTF& tf) {
    const std::vector<double> num = poly_trim(tf.num);
    const std::vector<double> den = poly_trim(tf.den);
    const int n = static_cast<int>(den.size()) - 1;
    const int m = static_cast<int>(num.size()) - 1;
    if (den.size() == 1 && den[0] == 0.0) {
        throw std::invalid_argument("to_state_space: zero denominator");
    }
    if (m > n) {
        throw std::invalid_argument("to_state_space: transfer function must be proper");
    }
    const double lead = den[static_cast<std::size_t>(n)];
    StateSpace sys;
    if (n == 0) {
        sys.A.resize(0, 0);
        sys.b.resize(0);
        sys.c.resize(0);
        sys.d = num[0] / lead;
        return sys;
    }
    std::vector<double> a(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i)] = den[static_cast<std::size_t>(i)] / lead;
    std::vector<double> bpoly(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i <= m && i < n; ++i) bpoly[static_cast<std::size_t>(i)] = num[static_cast<std::size_t>(i)] / lead;
    double d = 0.0;
    if (m == n) {
        d = num[static_cast<std::size_t>(n)] / lead;
        for (int i = 0; i < n; ++i) bpoly[static_cast<std::size_t>(i)] -= d * a[static_cast<std::size_t>(i)];
    }
    sys.A = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) sys.A(i, i + 1) = 1.0;
    for (int i = 0; i < n; ++i) sys.A(n - 1, i) = -a[static_cast<std::size_t>(i)];
    sys.b = Eigen::VectorXd::Zero(n);
    sys.b(n - 1) = 1.0;
    sys.c = Eigen::Map<const Eigen::VectorXd>(bpoly.data(), n);
    sys.d = d;
    return sys;
}

// =============================================================================
// Grids and phase
// =============================================================================

FrequencyGrid log_grid(double omega_min, double omega_max, int points) {
    if (!(omega_min > 0.0) || !(omega_max > omega_min) || points < 2) {
        throw std::invalid_argument("log_grid: need 0 < omega_min < omega_max and >= 2 points");
    }
    FrequencyGrid grid;
    grid.omegas.resize(static_cast<std::size_t>(points));
    const double l0 = std::log10(omega_min);
    const double l1 = std::log10(omega_max);
    for (int i = 0; i < points; ++i) {
        grid.omegas[static_cast<std::size_t>(i)] =
            std::pow(10.0, l0 + (l1 - l0) * static_cast<double>(i) / static_cast<double>(points - 1));
    }
    return grid;
}

void unwrap_phase(std::vector<double>& phase) {
    constexpr double pi = 3.14159265358979323846;
    for (std::size_t i = 1; i < phase.size(); ++i) {
        double d = phase[i] - phase[i - 1];
        while (d > pi) {
            phase[i] -= 2.0 * pi;
            d = phase[i] - phase[i - 1];
        }
        while (d < -pi) {
            phase[i] += 2.0 * pi;
            d = phase[i] - phase[i - 1];
        }
    }
}

}  // namespace l1margin
