#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <random>

#include "l1margin/linsys.hpp"
#include "support/oracles.hpp"

using namespace l1margin;

namespace {

StateSpace flagship_plant() {
    StateSpace sys;
    sys.A.resize(2, 2);
    sys.A << 0.0, 1.0, -1.0, -1.4;
    sys.b.resize(2);
    sys.b << 0.0, 1.0;
    sys.c.resize(2);
    sys.c << 1.0, 0.0;
    return sys;
}

// Series interconnection u -> sys1 -> sys2 -> y of strictly proper systems.
StateSpace series(const StateSpace& s1, const StateSpace& s2) {
    const Eigen::Index n1 = s1.order();
    const Eigen::Index n2 = s2.order();
    StateSpace out;
    out.A = Eigen::MatrixXd::Zero(n1 + n2, n1 + n2);
    out.A.topLeftCorner(n1, n1) = s1.A;
    out.A.bottomRightCorner(n2, n2) = s2.A;
    out.A.bottomLeftCorner(n2, n1) = s2.b * s1.c.transpose();
    out.b = Eigen::VectorXd::Zero(n1 + n2);
    out.b.head(n1) = s1.b;
    out.c = Eigen::VectorXd::Zero(n1 + n2);
    out.c.tail(n2) = s2.c;
    return out;
}

}  // namespace

TEST_CASE("lyapunov solve agrees with the Kronecker-vectorized dense solve") {
    const StateSpace plant = flagship_plant();
    const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(2, 2);
    const Eigen::MatrixXd P = lyapunov_solve(plant.A, Q);
    const Eigen::MatrixXd P_oracle = oracles::lyap_kronecker(plant.A, Q);
    CHECK((P - P_oracle).cwiseAbs().maxCoeff() < 1e-12);

    SUBCASE("matches the hand solution of the 2x2 equation") {
        CHECK(P(0, 0) == doctest::Approx(99.0 / 70.0).epsilon(1e-12));
        CHECK(P(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(P(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(P(1, 1) == doctest::Approx(5.0 / 7.0).epsilon(1e-12));
    }

    SUBCASE("residual and symmetry on random Hurwitz systems") {
        std::mt19937 rng(20260822);
        for (int n : {2, 3, 5, 8}) {
            const Eigen::MatrixXd A = oracles::random_hurwitz(rng, n);
            const Eigen::MatrixXd Qr = Eigen::MatrixXd::Identity(n, n);
            const Eigen::MatrixXd Pr = lyapunov_solve(A, Qr);
            CHECK((A.transpose() * Pr + Pr * A + Qr).cwiseAbs().maxCoeff() < 1e-10);
            CHECK((Pr - Pr.transpose()).cwiseAbs().maxCoeff() < 1e-12);
            CHECK((Pr - oracles::lyap_kronecker(A, Qr)).cwiseAbs().maxCoeff() < 1e-9);
        }
    }

    SUBCASE("rejects bad inputs") {
        Eigen::MatrixXd asym(2, 2);
        asym << 1.0, 0.2, 0.0, 1.0;
        CHECK_THROWS_AS((void)lyapunov_solve(plant.A, asym), std::invalid_argument);
        Eigen::MatrixXd unstable(2, 2);
        unstable << 0.0, 1.0, 1.0, 0.6;
        CHECK_THROWS_AS((void)lyapunov_solve(unstable, Q), std::invalid_argument);
        CHECK_THROWS_AS((void)lyapunov_solve(plant.A, -Q), std::invalid_argument);
    }
}

TEST_CASE("hurwitz classification") {
    const StateSpace plant = flagship_plant();
    CHECK(is_hurwitz(plant.A));
    CHECK_FALSE(is_hurwitz(Eigen::MatrixXd::Zero(2, 2)));
    Eigen::MatrixXd marginal(2, 2);
    marginal << 0.0, 1.0, -1.0, 0.0;
    CHECK_FALSE(is_hurwitz(marginal));
    Eigen::MatrixXd shifted(2, 2);
    shifted << 0.0, 1.0, 1.0, 0.6;
    CHECK_FALSE(is_hurwitz(shifted));
}

TEST_CASE("eigenvalues match the quadratic formula on 2x2 inputs") {
    const StateSpace plant = flagship_plant();
    const auto [l1, l2] = oracles::quadratic_eigs(plant.A.topLeftCorner<2, 2>());
    Eigen::VectorXcd lam = eigenvalues(plant.A);
    // Sort both by imaginary part for a stable comparison.
    if (lam(0).imag() > lam(1).imag()) std::swap(lam(0), lam(1));
    std::complex<double> lo = l1, hi = l2;
    if (lo.imag() > hi.imag()) std::swap(lo, hi);
    CHECK(std::abs(lam(0) - lo) < 1e-12);
    CHECK(std::abs(lam(1) - hi) < 1e-12);
    CHECK(std::abs(lam(0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(lam(0).real() == doctest::Approx(-0.7).epsilon(1e-12));
}

TEST_CASE("frequency response agrees between state-space and rational forms") {
    const StateSpace plant = flagship_plant();
    const RationalTF tf{{1.0}, {1.0, 1.4, 1.0}};
    for (double w : {0.01, 0.1, 1.0, 3.0, 60.0, 500.0}) {
        const auto a = freq_response(plant, w);
        const auto b = freq_response(tf, w);
        CHECK(std::abs(a - b) < 1e-10 * std::abs(b));
    }

    SUBCASE("second output channel picks up the s factor") {
        StateSpace vel = plant;
        vel.c << 0.0, 1.0;
        const RationalTF tfv{{0.0, 1.0}, {1.0, 1.4, 1.0}};
        for (double w : {0.5, 2.0, 30.0}) {
            CHECK(std::abs(freq_response(vel, w) - freq_response(tfv, w)) < 1e-10);
        }
    }

    SUBCASE("evaluation at an imaginary-axis pole is rejected") {
        const RationalTF osc{{1.0}, {1.0, 0.0, 1.0}};
        CHECK_THROWS_AS((void)freq_response(osc, 1.0), std::runtime_error);
        const RationalTF integ{{1.0}, {0.0, 1.0}};
        CHECK_THROWS_AS((void)freq_response(integ, 0.0), std::runtime_error);
    }
}

TEST_CASE("state-space to transfer function via Faddeev-LeVerrier") {
    const StateSpace plant = flagship_plant();
    const RationalTF tf = to_transfer_function(plant);
    REQUIRE(tf.den.size() == 3);
    CHECK(tf.den[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(tf.den[1] == doctest::Approx(1.4).epsilon(1e-12));
    CHECK(tf.den[2] == doctest::Approx(1.0).epsilon(1e-12));
    REQUIRE(tf.num.size() == 1);
    CHECK(tf.num[0] == doctest::Approx(1.0).epsilon(1e-12));

    SUBCASE("direct feedthrough lands in the numerator") {
        StateSpace lag;
        lag.A.resize(1, 1);
        lag.A << -2.0;
        lag.b.resize(1);
        lag.b << 1.0;
        lag.c.resize(1);
        lag.c << 1.0;
        lag.d = 3.0;
        const RationalTF t = to_transfer_function(lag);  // (3s + 7)/(s + 2)
        REQUIRE(t.num.size() == 2);
        CHECK(t.num[0] == doctest::Approx(7.0));
        CHECK(t.num[1] == doctest::Approx(3.0));
        CHECK(t.den[0] == doctest::Approx(2.0));
        CHECK(t.den[1] == doctest::Approx(1.0));
    }
}

TEST_CASE("transfer function round trip through controllable canonical form") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        RationalTF tf;
        tf.den = {1.0 + std::abs(coef(rng)), coef(rng), coef(rng), 1.0};
        tf.num = {coef(rng), coef(rng), coef(rng)};
        const StateSpace sys = to_state_space(tf);
        const RationalTF back = to_transfer_function(sys);
        for (double w : {0.3, 1.7, 9.0}) {
            const auto lhs = freq_response(tf, w);
            const auto rhs = freq_response(back, w);
            CHECK(std::abs(lhs - rhs) < 1e-9 * std::max(1.0, std::abs(lhs)));
        }
    }
    CHECK_THROWS_AS((void)to_state_space(RationalTF{{1.0, 2.0}, {1.0}}), std::invalid_argument);
}

TEST_CASE("l1 gain of a first-order lag is its DC gain") {
    for (double a : {1.0, 60.0}) {
        StateSpace sys;
        sys.A.resize(1, 1);
        sys.A << -a;
        sys.b.resize(1);
        sys.b << a;
        sys.c.resize(1);
        sys.c << 1.0;
        CHECK(l1_gain(sys, 1e-6) == doctest::Approx(1.0).epsilon(2e-6));
    }
}

TEST_CASE("l1 gain of the damped oscillator matches the brute-force oracle") {
    const double zeta = 0.7;
    const double w0 = 1.0;
    const double oracle = oracles::abs_integral(
        [&](double t) { return oracles::second_order_impulse(t, zeta, w0); }, 1e-5, 40.0);
    const StateSpace sys = to_state_space(RationalTF{{1.0}, {w0 * w0, 2.0 * zeta * w0, 1.0}});
    CHECK(l1_gain(sys, 1e-6) == doctest::Approx(oracle).epsilon(3e-6));
}

TEST_CASE("impulse response matches the closed-form damped oscillator") {
    const StateSpace sys = to_state_space(RationalTF{{1.0}, {1.0, 1.4, 1.0}});
    const double step = 1e-3;
    const std::vector<double> h = impulse_response(sys, step, 20.0);
    double worst = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) {
        const double t = static_cast<double>(k) * step;
        worst = std::max(worst, std::abs(h[k] - oracles::second_order_impulse(t, 0.7, 1.0)));
    }
    CHECK(worst < 1e-9);
    CHECK_THROWS_AS((void)impulse_response(StateSpace{Eigen::MatrixXd::Zero(0, 0), {}, {}, 1.0}, 1e-3, 1.0),
                    std::invalid_argument);
}

TEST_CASE("impulse response decays below its envelope after ten time constants") {
    std::mt19937 rng(42);
    for (int trial = 0; trial < 6; ++trial) {
        StateSpace sys;
        sys.A = oracles::random_hurwitz(rng, 3);
        sys.b = oracles::random_vector(rng, 3);
        sys.c = oracles::random_vector(rng, 3);
        double alpha = 1e300;
        const Eigen::VectorXcd lam = eigenvalues(sys.A);
        for (Eigen::Index i = 0; i < lam.size(); ++i) alpha = std::min(alpha, -lam(i).real());
        const double t_cut = 10.0 / alpha;
        const double step = 0.01 / alpha;
        const std::vector<double> h = impulse_response(sys, step, 2.0 * t_cut);
        double peak = 0.0;
        double late = 0.0;
        for (std::size_t k = 0; k < h.size(); ++k) {
            peak = std::max(peak, std::abs(h[k]));
            if (static_cast<double>(k) * step > t_cut) late = std::max(late, std::abs(h[k]));
        }
        CHECK(late <= 1e-2 * peak);
    }
}

TEST_CASE("l1 gain dominates DC and sampled frequency-response magnitudes") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 8; ++trial) {
        StateSpace sys;
        sys.A = oracles::random_hurwitz(rng, 3);
        sys.b = oracles::random_vector(rng, 3);
        sys.c = oracles::random_vector(rng, 3);
        const double gain = l1_gain(sys, 1e-6);
        const double dc = std::abs(sys.c.dot(sys.A.fullPivLu().solve(-sys.b)));
        CHECK(gain >= dc - 1e-6 * std::max(1.0, dc));
        for (double w : {0.1, 1.0, 10.0}) {
            CHECK(gain >= std::abs(freq_response(sys, w)) - 1e-6);
        }
    }
}

TEST_CASE("l1 gain is submultiplicative over series interconnection") {
    std::mt19937 rng(99);
    for (int trial = 0; trial < 6; ++trial) {
        StateSpace s1;
        s1.A = oracles::random_hurwitz(rng, 2);
        s1.b = oracles::random_vector(rng, 2);
        s1.c = oracles::random_vector(rng, 2);
        StateSpace s2;
        s2.A = oracles::random_hurwitz(rng, 2);
        s2.b = oracles::random_vector(rng, 2);
        s2.c = oracles::random_vector(rng, 2);
        const double lhs = l1_gain(series(s1, s2), 1e-6);
        const double rhs = l1_gain(s1, 1e-6) * l1_gain(s2, 1e-6);
        CHECK(lhs <= rhs * (1.0 + 1e-4) + 1e-9);
    }
}

TEST_CASE("l1 gain rejects unstable and improper inputs") {
    StateSpace unstable = flagship_plant();
    unstable.A = hbar_realization(unstable.A, unstable.b, (Eigen::VectorXd(2) << 2.0, 2.0).finished());
    CHECK_THROWS_WITH_AS((void)l1_gain(unstable, 1e-6),
                         doctest::Contains("if and only if"), std::runtime_error);
    CHECK_THROWS_AS((void)l1_gain(RationalTF{{0.0, 1.0, 2.0}, {1.0, 1.0}}, 1e-6), std::invalid_argument);
}

TEST_CASE("proper rational l1 gain splits the direct feedthrough") {
    // (s + 2a)/(s + a) = 1 + a/(s + a): unit delta mass plus a unit-area lag.
    for (double a : {1.0, 60.0}) {
        CHECK(l1_gain(RationalTF{{2.0 * a, 1.0}, {a, 1.0}}, 1e-6) == doctest::Approx(2.0).epsilon(2e-6));
    }
    // s/(s + 60) is the complement of a unit-DC lag: again mass 1 + 1.
    CHECK(l1_gain(RationalTF{{0.0, 1.0}, {60.0, 1.0}}, 1e-6) == doctest::Approx(2.0).epsilon(2e-6));
    // Pure gain: nothing to integrate.
    CHECK(l1_gain(RationalTF{{3.0}, {2.0}}, 1e-6) == doctest::Approx(1.5));
}

TEST_CASE("mimo l1 gain takes the worst output row of summed input gains") {
    StateSpace lag1;
    lag1.A.resize(1, 1);
    lag1.A << -1.0;
    lag1.b.resize(1);
    lag1.b << 1.0;
    lag1.c.resize(1);
    lag1.c << 1.0;
    StateSpace lag2 = lag1;
    lag2.A << -2.0;
    lag2.b << 2.0;
    // Row 0: two unit-gain entries (sum 2); row 1: one unit-gain entry.
    const double g = l1_gain_mimo({{lag1, lag2}, {lag2}}, 1e-6);
    CHECK(g == doctest::Approx(2.0).epsilon(1e-5));
}

TEST_CASE("hbar realization shifts the plant by the matched uncertainty") {
    const StateSpace plant = flagship_plant();
    Eigen::VectorXd theta(2);
    theta << 2.0, 2.0;
    const Eigen::MatrixXd Ab = hbar_realization(plant.A, plant.b, theta);
    CHECK(Ab(0, 0) == 0.0);
    CHECK(Ab(0, 1) == 1.0);
    CHECK(Ab(1, 0) == doctest::Approx(1.0));
    CHECK(Ab(1, 1) == doctest::Approx(0.6));
    CHECK_FALSE(is_hurwitz(Ab));
}

TEST_CASE("spectral summary reports extremal eigenvalues and rejects bad pairs") {
    Eigen::MatrixXd P(2, 2);
    P << 2.0, 0.0, 0.0, 0.5;
    const SpectralSummary s = spectral_summary(P, Eigen::MatrixXd::Identity(2, 2));
    CHECK(s.lambda_min_p == doctest::Approx(0.5));
    CHECK(s.lambda_max_p == doctest::Approx(2.0));
    CHECK(s.lambda_min_q == doctest::Approx(1.0));
    Eigen::MatrixXd asym(2, 2);
    asym << 1.0, 0.3, 0.0, 1.0;
    CHECK_THROWS_AS((void)spectral_summary(asym, Eigen::MatrixXd::Identity(2, 2)), std::invalid_argument);
    CHECK_THROWS_AS((void)spectral_summary(-P, Eigen::MatrixXd::Identity(2, 2)), std::invalid_argument);
}

TEST_CASE("polynomial helpers") {
    const std::vector<double> a{1.0, 1.0};        // 1 + s
    const std::vector<double> b{1.0, -1.0};       // 1 - s
    const std::vector<double> prod = poly_mul(a, b);
    REQUIRE(prod.size() == 3);
    CHECK(prod[0] == doctest::Approx(1.0));
    CHECK(prod[1] == doctest::Approx(0.0));
    CHECK(prod[2] == doctest::Approx(-1.0));
    CHECK(poly_degree(poly_add(a, poly_scale(a, -1.0))) == 0);
    CHECK(poly_degree({1.0, 2.0, 1e-15}) == 1);

    SUBCASE("roots agree with the quadratic formula") {
        const Eigen::VectorXcd r = poly_roots({1.0, 1.4, 1.0});
        Eigen::Matrix2d comp;
        comp << 0.0, -1.0, 1.0, -1.4;
        const auto [l1, l2] = oracles::quadratic_eigs(comp);
        const double d1 = std::min(std::abs(r(0) - l1), std::abs(r(0) - l2));
        const double d2 = std::min(std::abs(r(1) - l1), std::abs(r(1) - l2));
        CHECK(d1 < 1e-10);
        CHECK(d2 < 1e-10);
    }
}

TEST_CASE("log grid and phase unwrap") {
    const FrequencyGrid g = log_grid(1e-3, 1e4, 2000);
    REQUIRE(g.omegas.size() == 2000);
    CHECK(g.omegas.front() == doctest::Approx(1e-3));
    CHECK(g.omegas.back() == doctest::Approx(1e4));
    CHECK(std::is_sorted(g.omegas.begin(), g.omegas.end()));

    std::vector<double> phase{0.1, 3.0, -3.0, -2.8};  // wrapped through -pi
    unwrap_phase(phase);
    CHECK(phase[2] == doctest::Approx(2.0 * 3.14159265358979323846 - 3.0));
    for (std::size_t i = 1; i < phase.size(); ++i) {
        CHECK(std::abs(phase[i] - phase[i - 1]) < 3.14159265358979323846);
    }
}
