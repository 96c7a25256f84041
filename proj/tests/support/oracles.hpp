#pragma once

// Independent reference computations for the test suites. Everything here is
// deliberately written along a different route than the library code it
// checks: the Lyapunov oracle vectorizes the equation into one dense solve,
// the eigenvalue oracle is the 2x2 quadratic formula, and the L1-gain oracle
// integrates a closed-form impulse response by brute force.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracles {

// Solve A'P + PA = -Q through the Kronecker-vectorized dense system
// (I (x) A' + A' (x) I) vec(P) = -vec(Q).
inline Eigen::MatrixXd lyap_kronecker(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
    const Eigen::Index n = A.rows();
    const Eigen::MatrixXd At = A.transpose();
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n * n, n * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index k = 0; k < n; ++k) {
                // d(A'P)_{ij}/dP_{kj} and d(PA)_{ij}/dP_{ik} terms, column-major vec.
                K(j * n + i, j * n + k) += At(i, k);
                K(j * n + i, k * n + i) += At(j, k);
            }
        }
    }
    Eigen::VectorXd vq(n * n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) vq(j * n + i) = Q(i, j);
    }
    const Eigen::VectorXd vp = K.fullPivLu().solve(-vq);
    Eigen::MatrixXd P(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) P(i, j) = vp(j * n + i);
    }
    return P;
}

// Eigenvalues of a 2x2 matrix by the quadratic formula.
inline std::pair<std::complex<double>, std::complex<double>> quadratic_eigs(const Eigen::Matrix2d& A) {
    const double tr = A.trace();
    const double det = A.determinant();
    const std::complex<double> disc = std::sqrt(std::complex<double>(tr * tr - 4.0 * det, 0.0));
    return {0.5 * (tr + disc), 0.5 * (tr - disc)};
}

// Impulse response of 1/(s^2 + 2 zeta w0 s + w0^2) for zeta < 1.
inline double second_order_impulse(double t, double zeta, double w0) {
    const double wd = w0 * std::sqrt(1.0 - zeta * zeta);
    return std::exp(-zeta * w0 * t) * std::sin(wd * t) / wd;
}

// Brute-force trapezoid of |f(t)| on [0, t_end] at a fixed fine step.
template <typename F>
double abs_integral(F&& f, double step, double t_end) {
    const auto count = static_cast<std::size_t>(std::llround(t_end / step));
    double total = 0.5 * (std::abs(f(0.0)) + std::abs(f(t_end)));
    for (std::size_t k = 1; k < count; ++k) total += std::abs(f(static_cast<double>(k) * step));
    return total * step;
}

// Random Hurwitz matrix: negative definite symmetric part plus a skew part,
// so the field of values (and hence the spectrum) stays in the left half plane.
inline Eigen::MatrixXd random_hurwitz(std::mt19937& rng, int n) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Eigen::MatrixXd M(n, n);
    Eigen::MatrixXd S(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            M(i, j) = dist(rng);
            S(i, j) = dist(rng);
        }
    }
    return -(M.transpose() * M + 0.3 * Eigen::MatrixXd::Identity(n, n)) + 0.5 * (S - S.transpose());
}

inline Eigen::VectorXd random_vector(std::mt19937& rng, int n) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = dist(rng);
    return v;
}

// Complex amplitude of the omega-component of y over [t0, t1] (an integer
// number of periods), by the trapezoid Fourier projection. y[k] samples t = k*h.
inline std::complex<double> sinusoid_component(const std::vector<double>& y, double h, double omega,
                                               double t0, double t1) {
    const auto k0 = static_cast<std::size_t>(std::llround(t0 / h));
    const auto k1 = static_cast<std::size_t>(std::llround(t1 / h));
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t k = k0; k <= k1; ++k) {
        const double t = static_cast<double>(k) * h;
        const double w = (k == k0 || k == k1) ? 0.5 : 1.0;
        acc += w * y[k] * std::exp(std::complex<double>(0.0, -omega * t));
    }
    return 2.0 * acc * h / (t1 - t0);
}

}  // namespace oracles
