#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "perfdom/sampler.hpp"
#include "perfdom/stats.hpp"

using namespace perfdom;

TEST_CASE("counter rng is reproducible and stream-separated") {
    CounterRng a(123, 1), b(123, 1), c(123, 2);
    for (int i = 0; i < 100; ++i) {
        auto va = a.next_u64();
        CHECK(va == b.next_u64());
        CHECK(va != c.next_u64());
    }
}

TEST_CASE("poisson sampler hits mean and variance for small and large means") {
    for (double mean : {3.0, 12.0, 80.0, 400.0}) {
        CounterRng rng(7, 11);
        const int n = 20000;
        double sum = 0.0, sum2 = 0.0;
        for (int i = 0; i < n; ++i) {
            double k = static_cast<double>(poisson(mean, rng));
            sum += k;
            sum2 += k * k;
        }
        double m = sum / n;
        double v = sum2 / n - m * m;
        // 5 sigma bands
        CHECK(std::abs(m - mean) < 5.0 * std::sqrt(mean / n));
        CHECK(std::abs(v - mean) < 5.0 * mean * std::sqrt(2.0 / n) + 0.05 * mean);
    }
}

TEST_CASE("sample_marked_ppp: reproducibility, count law, precondition errors") {
    Box window(vec3(0, 0, 0), vec3(1, 1, 1), 3);
    ProcessParams params(10.0, MarkDist::uniform(0.0, 1.0), 99);

    auto s1 = sample_marked_ppp(params, window);
    auto s2 = sample_marked_ppp(params, window);
    REQUIRE(s1.points.size() == s2.points.size());
    for (std::size_t i = 0; i < s1.points.size(); ++i) {
        CHECK(s1.points[i].z == s2.points[i].z);
        CHECK(s1.points[i].r == s2.points[i].r);
    }

    // degenerate window rejected
    CHECK_THROWS_AS(sample_marked_ppp(params, Box(vec3(0, 0, 0), vec3(1, 0, 1), 3)),
                    PreconditionError);
    // resource guard
    Box huge(vec3(0, 0, 0), vec3(300, 300, 300), 3);
    CHECK_THROWS_AS(sample_marked_ppp(ProcessParams(1e4, MarkDist::constant(1), 1), huge),
                    ResourceError);

    // empirical mean count within 3 sigma of lambda |window| over many seeds
    const int trials = 10000;
    double sum = 0.0;
    for (int t = 0; t < trials; ++t) {
        ProcessParams p(10.0, MarkDist::constant(1.0), 1000 + t);
        sum += static_cast<double>(sample_marked_ppp(p, window).points.size());
    }
    double mean = sum / trials;
    CHECK(std::abs(mean - 10.0) < 3.0 * std::sqrt(10.0 / trials));
}

TEST_CASE("counts in disjoint subwindows are uncorrelated") {
    Box window(vec2(0, 0), vec2(1, 1), 2);
    Box s1(vec2(0, 0), vec2(0.5, 1), 2);
    Box s2(vec2(0.5, 0), vec2(1, 1), 2);
    const int trials = 8000;
    std::vector<double> n1(trials), n2(trials);
    for (int t = 0; t < trials; ++t) {
        ProcessParams p(20.0, MarkDist::constant(1.0), 5000 + t);
        auto s = sample_marked_ppp(p, window);
        int c1 = 0, c2 = 0;
        for (const auto& pt : s.points) (s1.contains(pt.z) ? c1 : c2)++;
        n1[t] = c1;
        n2[t] = c2;
    }
    auto m1 = mean_var(n1), m2 = mean_var(n2);
    double cov = 0.0;
    for (int t = 0; t < trials; ++t) cov += (n1[t] - m1.mean) * (n2[t] - m2.mean);
    cov /= (trials - 1);
    double corr = cov / std::sqrt(m1.var * m2.var);
    CHECK(std::abs(corr) < 4.0 / std::sqrt(static_cast<double>(trials)));
}

TEST_CASE("mark moments match closed forms") {
    struct Case {
        MarkDist dist;
        double m;
    };
    for (const auto& c : {Case{MarkDist::constant(0.7), 3.0}, Case{MarkDist::uniform(0.0, 1.0), 3.0},
                          Case{MarkDist::uniform(0.2, 0.9), 2.0},
                          Case{MarkDist::pareto_truncated(3.5, 8.0), 3.0}}) {
        CounterRng rng(33, 5);
        const int n = 400000;
        double sum = 0.0;
        for (int i = 0; i < n; ++i) sum += std::pow(c.dist.sample(rng), c.m);
        double want = c.dist.moment(c.m);
        // r^3 under the truncated pareto is strongly skewed; give its sample
        // mean a wider band than the light-tailed laws
        double tol = c.dist.kind == MarkDist::Kind::ParetoTruncated ? 0.05 : 0.02;
        CHECK(sum / n == Catch::Approx(want).epsilon(tol));
    }
    CHECK(MarkDist::uniform(0, 1).moment(3.0) == Catch::Approx(0.25));
    CHECK_THROWS_AS(MarkDist::pareto_truncated(2.5, 10.0), PreconditionError);
}

TEST_CASE("select_interior implements the strict eps-interior rule") {
    StarDomain D = StarDomain::ball(3, 1.0);
    MarkedPointSample s;
    s.dim = 3;
    s.window = Box(vec3(-10, -10, -10), vec3(10, 10, 10), 3);
    double eps = 0.1;
    s.points.push_back({vec3(0, 0, 0), 1.0});                  // center: dist 1 > 0.1
    s.points.push_back({scale(vec3(1, 0, 0), 1.0 / eps), 1.0});   // on boundary: excluded
    s.points.push_back({scale(vec3(0.95, 0, 0), 1.0 / eps), 1.0});  // dist 0.05 < eps
    s.points.push_back({scale(vec3(0.85, 0, 0), 1.0 / eps), 1.0});  // dist 0.15 > eps
    auto idx = select_interior(s, D, eps);
    CHECK(idx == std::vector<std::size_t>{0, 3});

    // eps >= inradius: empty selection
    CHECK(select_interior(s, D, 1.0).empty());
}

TEST_CASE("build_perforation scales radii and flags pathological marks") {
    StarDomain D = StarDomain::ball(3, 1.0);
    MarkedPointSample s;
    s.dim = 3;
    s.window = Box(vec3(-10, -10, -10), vec3(10, 10, 10), 3);
    s.points.push_back({vec3(0, 0, 0), 1.0});
    s.points.push_back({vec3(2.0, 0, 0), 5000.0});  // pathological mark

    auto perf = build_perforation(s, D, 0.1, 4.0);
    REQUIRE(perf.holes.size() == 2);
    CHECK(perf.holes[0].radius == Catch::Approx(1e-4));
    CHECK(perf.flagged == std::vector<std::size_t>{1});
    CHECK(perf.delta() == Catch::Approx(1.0 / 3.0));

    // empty sample: D_eps = D
    MarkedPointSample empty;
    empty.dim = 3;
    empty.window = s.window;
    CHECK(build_perforation(empty, D, 0.1, 4.0).holes.empty());

    CHECK_THROWS_AS(build_perforation(s, D, 0.1, 2.5), PreconditionError);
}

TEST_CASE("total hole volume obeys the eps^(3(alpha-1)) bound per realization") {
    StarDomain D = StarDomain::ball(3, 1.0);
    double eps = 0.2, alpha = 4.0;
    Box window = D.bounding_box();
    for (int a = 0; a < 3; ++a) {
        window.lo[a] /= eps;
        window.hi[a] /= eps;
    }
    ProcessParams params(30.0, MarkDist::uniform(0.0, 1.0), 77);
    auto s = sample_marked_ppp(params, window);
    auto perf = build_perforation(s, D, eps, alpha);
    double sum_r3 = 0.0, hole_vol = 0.0;
    for (std::size_t j : perf.interior_indices) sum_r3 += std::pow(s.points[j].r, 3.0);
    for (const auto& h : perf.holes) hole_vol += 4.0 / 3.0 * M_PI * std::pow(h.radius, 3.0);
    double bound = 4.0 / 3.0 * M_PI * std::pow(eps, 3.0 * (alpha - 1.0)) * (std::pow(eps, 3.0) * sum_r3);
    CHECK(hole_vol <= bound * (1.0 + 1e-12));
}

TEST_CASE("admitted set grows monotonically along dyadic eps on one master sample") {
    StarDomain D = StarDomain::ball(2, 1.0);
    double eps_min = 1.0 / 64.0;
    Box window = D.bounding_box();
    for (int a = 0; a < 2; ++a) {
        window.lo[a] /= eps_min;
        window.hi[a] /= eps_min;
    }
    ProcessParams params(2.0, MarkDist::constant(1.0), 2024);
    auto master = sample_marked_ppp(params, window);

    std::vector<std::size_t> prev;
    for (double eps : {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64}) {
        auto idx = select_interior(master, D, eps);
        if (!prev.empty()) {
            for (std::size_t j : prev) CHECK(std::count(idx.begin(), idx.end(), j) == 1);
        }
        prev = idx;
    }
}

TEST_CASE("jsonl sample round-trip is lossless") {
    Box window(vec2(-1, -1), vec2(1, 1), 2);
    ProcessParams params(15.0, MarkDist::pareto_truncated(4.0, 6.0), 31337);
    auto s = sample_marked_ppp(params, window);

    std::stringstream ss;
    write_sample_jsonl(s, params, ss);
    auto back = read_sample_jsonl(ss);
    REQUIRE(back.sample.points.size() == s.points.size());
    for (std::size_t i = 0; i < s.points.size(); ++i) {
        CHECK(back.sample.points[i].z[0] == s.points[i].z[0]);
        CHECK(back.sample.points[i].z[1] == s.points[i].z[1]);
        CHECK(back.sample.points[i].r == s.points[i].r);
    }
    CHECK(back.params.intensity == params.intensity);
    CHECK(back.params.seed == params.seed);
}
