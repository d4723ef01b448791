#include <catch2/catch_amalgamated.hpp>

#include "perfdom/stochastic.hpp"

using namespace perfdom;

TEST_CASE("poisson tail examples and exact bound on a 100x20 grid") {
    auto t0 = poisson_tail_bound(1.0, 0);
    CHECK(t0.tail == 1.0);
    CHECK(t0.bound == 1.0);

    auto t2 = poisson_tail_bound(1.0, 2);
    CHECK(t2.tail == Catch::Approx(1.0 - 2.0 / std::exp(1.0)).epsilon(1e-12));
    CHECK(t2.bound == Catch::Approx(0.5));

    auto t3 = poisson_tail_bound(0.01, 3);
    CHECK(t3.bound == Catch::Approx(1e-6 / 6.0));
    CHECK(t3.tail <= t3.bound);

    for (int ix = 1; ix <= 100; ++ix) {
        double x = 0.1 * ix;
        for (std::uint64_t n = 0; n < 20; ++n) {
            auto tb = poisson_tail_bound(x, n);
            CHECK(tb.tail <= tb.bound * (1.0 + 1e-14));
        }
    }
}

TEST_CASE("tail equals direct series summation") {
    // independent oracle: long-double sum of e^-x x^k / k! with explicit
    // factorials via tgammal
    for (double x : {0.3, 1.7, 6.0, 25.0}) {
        for (std::uint64_t n : {1ull, 4ull, 11ull}) {
            long double sum = 0.0L;
            for (std::uint64_t k = n; k < n + 400; ++k)
                sum += std::pow((long double)x, (long double)k) / std::tgammal((long double)k + 1.0L);
            double want = static_cast<double>(std::exp((long double)-x) * sum);
            CHECK(poisson_tail_bound(x, n).tail == Catch::Approx(want).epsilon(1e-10));
        }
    }
}

TEST_CASE("occupancy estimator: infinite capacity never fires, bound holds") {
    StarDomain D = StarDomain::ball(2, 1.0);
    TrialConfig cfg;
    cfg.trials = 200;
    cfg.seed = 10;

    // delta huge: cubes of side eps^(1+delta) are far smaller than typical
    // point gaps while N1 = 3, so no cube can exceed the threshold
    auto big = estimate_max_occupancy(5.0, 0.25, 3.0, 2, cfg, D);
    CHECK(big.grid_n1.successes == 0);

    // moderate regime: p_hat below the union bound (within 3 sigma)
    auto est = estimate_max_occupancy(20.0, 1.0 / 16.0, 1.0, 2, cfg, D);
    double sigma = (est.grid_n1.ci_hi - est.grid_n1.ci_lo) / 2.0;
    CHECK(est.grid_n1.p_hat <= est.grid_n1.theory_bound + 3.0 * sigma);
    CHECK(est.n1 == 3);
    CHECK(est.n == 12);
}

TEST_CASE("grid estimator lower-bounds the all-cube estimator at equal threshold") {
    StarDomain D = StarDomain::ball(2, 1.0);
    TrialConfig cfg;
    cfg.trials = 150;
    cfg.seed = 77;
    // dense regime so events actually occur
    auto est = estimate_max_occupancy(60.0, 1.0 / 8.0, 0.4, 2, cfg, D, /*full_scan=*/true);
    CHECK(est.grid_n.successes <= est.any_n.successes);
    CHECK(est.any_n.theory_bound == est.grid_n1.theory_bound);
}

TEST_CASE("separation estimator: degenerate cases") {
    StarDomain D = StarDomain::ball(2, 1.0);
    TrialConfig cfg;
    cfg.trials = 100;
    cfg.seed = 3;

    // microscopic reach and near-empty realizations: no pair can fire
    auto est = estimate_separation_event(0.001, 0.5, 1.9, 1.0, 2, cfg, D);
    CHECK(est.successes == 0);

    // huge tau: reach exceeds the window diameter, every multi-point
    // realization fires (birthday saturation sanity check)
    auto sat = estimate_separation_event(30.0, 0.5, 1.5, 50.0, 2, cfg, D);
    CHECK(sat.p_hat > 0.9);
}

TEST_CASE("separation event is invariant under global translation") {
    StarDomain D = StarDomain::ball(2, 1.0);
    double eps = 1.0 / 16.0, kappa = 1.5, tau = 1.0;
    double reach = 2.0 * tau * std::pow(eps, kappa);
    ProcessParams pp(10.0, MarkDist::constant(0.0), 123);
    Box win = D.bounding_box();
    for (int i = 0; i < 2; ++i) {
        win.lo[i] /= eps;
        win.hi[i] /= eps;
    }
    auto s = sample_marked_ppp(pp, win);
    std::vector<Vec> pts;
    for (const auto& p : s.points)
        if (D.boundary_distance(scale(p.z, eps)) > eps) pts.push_back(p.z);

    auto has_pair = [&](const std::vector<Vec>& v) {
        for (std::size_t i = 0; i < v.size(); ++i)
            for (std::size_t j = i + 1; j < v.size(); ++j)
                if (dist2(v[i], v[j], 2) <= reach) return true;
        return false;
    };
    bool base = has_pair(pts);
    std::vector<Vec> shifted = pts;
    for (auto& p : shifted) p = add(p, vec2(17.25, -3.5));
    CHECK(has_pair(shifted) == base);
}

TEST_CASE("slln columns: m = 0 moment column counts admitted points") {
    StarDomain S = StarDomain::axis_box(2, vec2(1.0, 1.0));  // [-1,1]^2
    TrialConfig cfg;
    cfg.trials = 120;
    cfg.seed = 5;
    auto row = slln_estimate(5.0, MarkDist::constant(1.0), S, 0.0, 1.0 / 32.0, cfg);
    CHECK(row.moment_scaled_mean <= row.count_scaled_mean);
    CHECK(row.count_scaled_mean >= 0.0);
    CHECK(row.limit_count == Catch::Approx(20.0));
    CHECK(row.limit_moment == Catch::Approx(20.0));
}

TEST_CASE("slln approaches lambda |S| and lambda E(r^m) |S|") {
    StarDomain S = StarDomain::axis_box(2, vec2(1.0, 1.0));
    TrialConfig cfg;
    cfg.trials = 200;
    cfg.seed = 21;
    auto row = slln_estimate(5.0, MarkDist::uniform(0.0, 1.0), S, 3.0, 1.0 / 64.0, cfg);
    CHECK(row.limit_count == Catch::Approx(20.0));
    CHECK(row.limit_moment == Catch::Approx(5.0));  // E(r^3) = 1/4, |S| = 4
    CHECK(std::abs(row.count_scaled_mean - 20.0) / 20.0 < 0.05);
    CHECK(std::abs(row.moment_scaled_mean - 5.0) / 5.0 < 0.05);
}

TEST_CASE("covering cube count upper-bounds the area ratio tightly") {
    StarDomain D = StarDomain::ball(2, 1.0);
    double s = 0.01;
    double cubes = perfdom::detail::covering_cube_count(D, s);
    double area_ratio = M_PI / (s * s);
    CHECK(cubes >= area_ratio);
    CHECK(cubes <= area_ratio + 10.0 / s);  // perimeter-order correction
}
