#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "l1margin/l1ctrl.hpp"
#include "support/oracles.hpp"

using namespace l1margin;

namespace {

ControllerConfig flagship_config(double gamma_c) {
    ControllerConfig cfg;
    cfg.A_m.resize(2, 2);
    cfg.A_m << 0.0, 1.0, -1.0, -1.4;
    cfg.b.resize(2);
    cfg.b << 0.0, 1.0;
    cfg.c.resize(2);
    cfg.c << 1.0, 0.0;
    cfg.k = 60.0;
    cfg.gamma_c = gamma_c;
    return cfg;
}

UncertaintySets flagship_sets() {
    UncertaintySets sets;
    sets.theta_lo = Eigen::VectorXd::Constant(2, -10.0);
    sets.theta_hi = Eigen::VectorXd::Constant(2, 10.0);
    sets.delta0 = 10.0;
    sets.delta = 1000.0;
    sets.omega0_lo = 0.2;
    sets.omega0_hi = 5.0;
    sets.omega_lo = 0.1;
    sets.omega_hi = 50.0;
    sets.d_sigma = 3.14159265358979323846;
    return sets;
}

}  // namespace

TEST_CASE("prefilter gain inverts the plant DC path") {
    const ControllerConfig cfg = flagship_config(1e4);
    CHECK(k_g(cfg.A_m, cfg.b, cfg.c) == doctest::Approx(1.0).epsilon(1e-12));

    // Velocity output has no DC path, so the prefilter is undefined.
    Eigen::VectorXd c2(2);
    c2 << 0.0, 1.0;
    CHECK_THROWS_AS((void)k_g(cfg.A_m, cfg.b, c2), std::invalid_argument);
}

TEST_CASE("uncertainty set validation and bounds") {
    UncertaintySets sets = flagship_sets();
    CHECK_NOTHROW(sets.validate());
    CHECK(sets.theta_l1_bound() == doctest::Approx(20.0));
    CHECK(sets.theta_sq_bound() == doctest::Approx(800.0));

    SUBCASE("projection sets must strictly contain the true sets") {
        UncertaintySets bad = sets;
        bad.delta = bad.delta0;
        CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
        bad = sets;
        bad.omega_lo = bad.omega0_lo;
        CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
        bad = sets;
        bad.omega_lo = -0.1;
        CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
        bad = sets;
        bad.theta_lo(0) = 11.0;
        CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    }
}

TEST_CASE("low-pass filter algebra") {
    const RationalTF D{{1.0}, {0.0, 1.0}};  // 1/s

    SUBCASE("flagship C(s) is the first-order lag 60/(s + 60)") {
        const RationalTF C = c_filter(D, 60.0, 1.0);
        REQUIRE(C.num.size() == 1);
        REQUIRE(C.den.size() == 2);
        CHECK(C.num[0] == doctest::Approx(60.0));
        CHECK(C.den[0] == doctest::Approx(60.0));
        CHECK(C.den[1] == doctest::Approx(1.0));
        CHECK(std::abs(freq_response(C, 1e-6) - std::complex<double>(1.0, 0.0)) < 1e-6);
    }

    SUBCASE("identity C/(1 - C) = omega k D on a grid") {
        for (double omega : {0.2, 1.0, 5.0}) {
            const RationalTF C = c_filter(D, 60.0, omega);
            for (double w : {0.01, 1.0, 30.0, 500.0}) {
                const auto c = freq_response(C, w);
                const auto lhs = c / (1.0 - c);
                const auto rhs = omega * 60.0 * freq_response(D, w);
                CHECK(std::abs(lhs - rhs) < 1e-9 * std::abs(rhs));
            }
        }
    }

    SUBCASE("C/omega realization matches k/(s + omega k)") {
        const StateSpace f = c_over_omega_ss(D, 60.0, 5.0);
        for (double w : {0.1, 10.0, 300.0}) {
            const std::complex<double> expected = 60.0 / std::complex<double>(300.0, w);
            CHECK(std::abs(freq_response(f, w) - expected) < 1e-10);
        }
    }

    SUBCASE("invalid shaping filters are rejected") {
        CHECK_THROWS_AS((void)c_filter(RationalTF{{1.0}, {1.0}}, 60.0, 1.0), std::invalid_argument);
        CHECK_THROWS_AS((void)c_filter(RationalTF{{1.0}, {1.0, 1.0}}, 60.0, 1.0),
                        std::invalid_argument);  // no integrator
        CHECK_THROWS_AS((void)c_filter(D, -1.0, 1.0), std::invalid_argument);
    }
}

TEST_CASE("projection gate") {
    CHECK(proj(0.5, -3.0, -1.0, 1.0) == -3.0);
    CHECK(proj(1.0, 5.0, -1.0, 1.0) == 0.0);    // at upper bound, outward
    CHECK(proj(1.0, -5.0, -1.0, 1.0) == -5.0);  // at upper bound, inward
    CHECK(proj(-1.0, -2.0, -1.0, 1.0) == 0.0);  // at lower bound, outward
    CHECK_THROWS_AS((void)proj(1.5, 0.0, -1.0, 1.0), std::invalid_argument);

    Eigen::VectorXd e(2), rate(2), lo(2), hi(2);
    e << 1.0, 0.0;
    rate << 2.0, 2.0;
    lo << -1.0, -1.0;
    hi << 1.0, 1.0;
    const Eigen::VectorXd out = proj(e, rate, lo, hi);
    CHECK(out(0) == 0.0);
    CHECK(out(1) == 2.0);
}

TEST_CASE("adaptive rates on the scalar plant") {
    // Scalar nominal plant with Q = 2 so that P = 1 exactly.
    ControllerConfig cfg;
    cfg.A_m.resize(1, 1);
    cfg.A_m << -1.0;
    cfg.b.resize(1);
    cfg.b << 1.0;
    cfg.c.resize(1);
    cfg.c << 1.0;
    cfg.k = 1.0;
    cfg.gamma_c = 10.0;
    cfg.Q.resize(1, 1);
    cfg.Q << 2.0;
    UncertaintySets sets;
    sets.theta_lo = Eigen::VectorXd::Constant(1, -10.0);
    sets.theta_hi = Eigen::VectorXd::Constant(1, 10.0);
    sets.delta0 = 1.0;
    sets.delta = 10.0;
    sets.omega0_lo = 0.2;
    sets.omega0_hi = 5.0;
    sets.omega_lo = 0.1;
    sets.omega_hi = 50.0;
    sets.d_sigma = 1.0;
    const ControllerRuntime rt = prepare_controller(cfg, sets);
    CHECK(rt.P(0, 0) == doctest::Approx(1.0).epsilon(1e-12));

    ControllerState st = initial_state(rt, Eigen::VectorXd::Zero(1));
    Eigen::VectorXd x(1), xt(1);
    x << 1.0;
    xt << 0.1;

    SUBCASE("interior estimates follow the raw law") {
        const AdaptiveRates rates = adaptive_rates(x, xt, 0.5, st, rt);
        CHECK(rates.theta(0) == doctest::Approx(-1.0).epsilon(1e-12));
        CHECK(rates.sigma == doctest::Approx(-1.0).epsilon(1e-12));
        CHECK(rates.omega == doctest::Approx(-0.5).epsilon(1e-12));
    }

    SUBCASE("outward drive at the boundary is zeroed") {
        st.theta_hat(0) = 10.0;
        Eigen::VectorXd xneg(1);
        xneg << 1.0;
        Eigen::VectorXd xt_neg(1);
        xt_neg << -0.1;  // p < 0 makes the theta drive +1, outward at the top
        const AdaptiveRates rates = adaptive_rates(xneg, xt_neg, 0.5, st, rt);
        CHECK(rates.theta(0) == 0.0);
        CHECK(rates.sigma == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("controller step from rest") {
    const ControllerRuntime rt = prepare_controller(flagship_config(1e4), flagship_sets());
    const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(2);
    const double r = 1.0;

    SUBCASE("u starts at zero and chi picks up -k_g r h to second order") {
        double h = 1e-4;
        double prev_err = 0.0;
        for (int level = 0; level < 3; ++level) {
            ControllerState st = initial_state(rt, x0);
            const double u0 = controller_step(st, x0, r, h, rt);
            CHECK(u0 == 0.0);
            const double err = std::abs(st.chi(0) + rt.kg * r * h);
            CHECK(err < 100.0 * h * h);
            if (level > 0) CHECK(err < prev_err / 3.0);  // clean second-order residual
            prev_err = err;
            h *= 0.5;
            if (level == 0) prev_err = err;
        }
    }

    SUBCASE("estimates stay inside their boxes under random measurements") {
        std::mt19937 rng(3);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        ControllerState st = initial_state(rt, x0);
        Eigen::VectorXd x(2);
        const double h = 1e-3;
        ControllerRuntime soft = rt;
        soft.cfg.gamma_c = 100.0;
        for (int step = 0; step < 2000; ++step) {
            x << dist(rng), dist(rng);
            (void)controller_step(st, x, dist(rng), h, soft);
            for (int i = 0; i < 2; ++i) {
                CHECK(st.theta_hat(i) >= soft.sets.theta_lo(i));
                CHECK(st.theta_hat(i) <= soft.sets.theta_hi(i));
            }
            CHECK(std::abs(st.sigma_hat) <= soft.sets.delta);
            CHECK(st.omega_hat >= soft.sets.omega_lo);
            CHECK(st.omega_hat <= soft.sets.omega_hi);
        }
    }

    SUBCASE("omega estimate pinned at the boundary stays put under outward drive") {
        ControllerState st = initial_state(rt, x0);
        st.omega_hat = rt.sets.omega_hi;
        st.chi(0) = -0.01;                  // u = -k chi > 0
        st.xhat << 0.0, -0.5;               // p = pb . (xhat - x) < 0 so the drive is outward
        const Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
        for (int step = 0; step < 5; ++step) {
            (void)controller_step(st, x, 0.0, 1e-5, rt);
            CHECK(st.omega_hat == rt.sets.omega_hi);
        }
    }

    SUBCASE("step guard aborts on runaway estimate rates") {
        ControllerRuntime hot = rt;
        hot.cfg.gamma_c = 1e12;
        ControllerState st = initial_state(hot, x0);
        st.xhat << 1.0, 1.0;  // large prediction error against x_meas = 0
        CHECK_THROWS_AS((void)controller_step(st, x0, r, 0.1, hot), StepGuardError);
    }
}

TEST_CASE("state packing round trip and estimate views") {
    const ControllerRuntime rt = prepare_controller(flagship_config(500.0), flagship_sets());
    ControllerState st = initial_state(rt, (Eigen::VectorXd(2) << 0.3, -0.2).finished());
    st.theta_hat << 1.5, -2.5;
    st.sigma_hat = 4.0;
    st.omega_hat = 2.0;
    st.chi(0) = -0.7;

    const Eigen::VectorXd y = pack_state(st);
    const ControllerState back = unpack_state(rt, y);
    CHECK((back.xhat - st.xhat).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.theta_hat - st.theta_hat).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.sigma_hat == st.sigma_hat);
    CHECK(back.omega_hat == st.omega_hat);
    CHECK(back.chi(0) == st.chi(0));

    Eigen::VectorXd theta(2);
    theta << 2.0, 2.0;
    const AdaptiveEstimates view = estimates_view(st, theta, 1.0, 0.25);
    CHECK(view.has_truth);
    CHECK(view.theta_tilde(0) == doctest::Approx(-0.5));
    CHECK(view.theta_tilde(1) == doctest::Approx(-4.5));
    CHECK(view.sigma_tilde == doctest::Approx(3.75));
    CHECK(view.omega_tilde == doctest::Approx(1.0));
}

TEST_CASE("controller preparation rejects invalid configurations") {
    ControllerConfig cfg = flagship_config(1e4);
    const UncertaintySets sets = flagship_sets();
    CHECK_NOTHROW((void)prepare_controller(cfg, sets));

    ControllerConfig bad = cfg;
    bad.A_m(1, 0) = 1.0;  // not Hurwitz
    CHECK_THROWS_AS((void)prepare_controller(bad, sets), std::invalid_argument);

    bad = cfg;
    bad.k = 0.0;
    CHECK_THROWS_AS((void)prepare_controller(bad, sets), std::invalid_argument);

    bad = cfg;
    bad.D = RationalTF{{1.0, 1.0}, {0.0, 1.0}};  // biproper
    CHECK_THROWS_AS((void)prepare_controller(bad, sets), std::invalid_argument);
}
