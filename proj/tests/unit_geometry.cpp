#include <catch2/catch_amalgamated.hpp>

#include "perfdom/geometry.hpp"
#include "perfdom/rng.hpp"

using namespace perfdom;

namespace {

Box random_box(CounterRng& rng, int dim) {
    Vec lo{}, hi{};
    for (int i = 0; i < dim; ++i) {
        double a = rng.uniform(-3.0, 3.0);
        double b = a + rng.uniform(0.05, 2.0);
        lo[i] = a;
        hi[i] = b;
    }
    return Box(lo, hi, dim);
}

// Brute-force inf over an axis lattice of both boxes, augmented with the
// other box's endpoints clamped in, so the minimizing pair (interval
// endpoints or a shared coordinate when intervals overlap) is always present.
double dist_inf_sampled(const Box& a, const Box& b, int samples = 7) {
    auto axis_set = [&](const Box& self, const Box& other, int axis) {
        std::vector<double> v;
        for (int k = 0; k < samples; ++k)
            v.push_back(self.lo[axis] + (self.hi[axis] - self.lo[axis]) * k / (samples - 1));
        v.push_back(std::clamp(other.lo[axis], self.lo[axis], self.hi[axis]));
        v.push_back(std::clamp(other.hi[axis], self.lo[axis], self.hi[axis]));
        return v;
    };
    std::array<std::vector<double>, 3> pa, pb;
    for (int i = 0; i < a.dim; ++i) {
        pa[i] = axis_set(a, b, i);
        pb[i] = axis_set(b, a, i);
    }
    if (a.dim == 2) {
        pa[2] = {0.0};
        pb[2] = {0.0};
    }
    double best = std::numeric_limits<double>::infinity();
    for (double x0 : pa[0])
        for (double x1 : pa[1])
            for (double x2 : pa[2])
                for (double y0 : pb[0])
                    for (double y1 : pb[1])
                        for (double y2 : pb[2])
                            best = std::min(best, norm_inf(sub(Vec{x0, x1, x2}, Vec{y0, y1, y2}), a.dim));
    return best;
}

}  // namespace

TEST_CASE("dist_inf on the worked examples") {
    Box unit(vec3(0, 0, 0), vec3(1, 1, 1), 3);
    CHECK(dist_inf(unit, unit) == 0.0);

    Box a(vec2(0, 0), vec2(1, 1), 2);
    Box b(vec2(3, 0), vec2(4, 1), 2);
    CHECK(dist_inf(a, b) == Catch::Approx(2.0));

    Box c(vec2(2, 5), vec2(3, 6), 2);
    CHECK(dist_inf(a, c) == Catch::Approx(4.0));
}

TEST_CASE("dist_inf is symmetric, zero iff closures intersect, matches sampling") {
    CounterRng rng(42, 7);
    for (int trial = 0; trial < 200; ++trial) {
        int dim = trial % 2 == 0 ? 2 : 3;
        Box a = random_box(rng, dim);
        Box b = random_box(rng, dim);
        double d1 = dist_inf(a, b);
        double d2 = dist_inf(b, a);
        CHECK(d1 == d2);

        bool overlap = true;
        for (int i = 0; i < dim; ++i)
            if (a.lo[i] > b.hi[i] || b.lo[i] > a.hi[i]) overlap = false;
        CHECK((d1 == 0.0) == overlap);

        CHECK(d1 == Catch::Approx(dist_inf_sampled(a, b)).margin(1e-12));
    }
}

TEST_CASE("inflate grows each side by exactly 2*margin and composes") {
    Box cube(vec3(0, 0, 0), vec3(1, 1, 1), 3);
    Box same = inflate(cube, 0.0);
    CHECK(same.lo == cube.lo);
    CHECK(same.hi == cube.hi);

    Box big = inflate(cube, 0.5);
    for (int i = 0; i < 3; ++i) {
        CHECK(big.lo[i] == Catch::Approx(-0.5));
        CHECK(big.hi[i] == Catch::Approx(1.5));
    }

    CounterRng rng(1, 2);
    for (int trial = 0; trial < 100; ++trial) {
        Box b = random_box(rng, 3);
        double m1 = rng.uniform(0.0, 1.0), m2 = rng.uniform(0.0, 1.0);
        Box o = inflate(b, m1);
        for (int i = 0; i < 3; ++i) {
            CHECK(o.side(i) == Catch::Approx(b.side(i) + 2.0 * m1));
            CHECK(o.lo[i] <= b.lo[i]);
            CHECK(o.hi[i] >= b.hi[i]);
        }
        Box twice = inflate(o, m2);
        Box once = inflate(b, m1 + m2);
        for (int i = 0; i < 3; ++i) {
            CHECK(twice.lo[i] == Catch::Approx(once.lo[i]));
            CHECK(twice.hi[i] == Catch::Approx(once.hi[i]));
        }
    }
}

TEST_CASE("ball_box_clearance sign convention and examples") {
    Box cube(vec3(0, 0, 0), vec3(1, 1, 1), 3);
    CHECK(ball_box_clearance(Ball(vec3(0.5, 0.5, 0.5), 0.1), cube) == Catch::Approx(0.4));
    CHECK(ball_box_clearance(Ball(vec3(0.3, 0.5, 0.5), 0.0), cube) == Catch::Approx(0.3));
    CHECK(ball_box_clearance(Ball(vec3(0.5, 0.5, 0.5), 0.7), cube) == Catch::Approx(-0.2));
    CHECK_THROWS_AS(ball_box_clearance(Ball(vec3(2, 0.5, 0.5), 0.1), cube), GeometryError);
}

TEST_CASE("star domains: membership/distance consistency and star-shapedness") {
    CounterRng rng(9, 1);
    std::vector<StarDomain> domains;
    domains.push_back(StarDomain::ball(3, 1.0));
    domains.push_back(StarDomain::axis_box(3, vec3(1.0, 0.7, 0.4)));
    domains.push_back(StarDomain::ellipsoid(3, vec3(1.2, 0.8, 0.5)));
    domains.push_back(StarDomain::ball(2, 0.8));
    {
        std::vector<double> radii;
        for (int k = 0; k < 64; ++k) radii.push_back(0.7 + 0.25 * std::sin(3.0 * k * 2.0 * M_PI / 64.0));
        domains.push_back(StarDomain::radial_table(2, radii));
    }

    for (const auto& D : domains) {
        Box bb = D.bounding_box();
        int inside_count = 0;
        for (int t = 0; t < 10000; ++t) {
            Vec x{};
            for (int i = 0; i < D.dim(); ++i) x[i] = rng.uniform(bb.lo[i], bb.hi[i]);
            double bd = D.boundary_distance(x);
            CHECK((bd > 0.0) == D.interior(x));
            if (bd > 0.0) {
                ++inside_count;
                double lam = rng.next_unit();
                CHECK(D.interior(scale(x, lam)));
            }
        }
        CHECK(inside_count > 100);
        CHECK(D.inradius() > 0.0);
    }
}

TEST_CASE("ball and box boundary distances are exact") {
    StarDomain ball = StarDomain::ball(3, 2.0);
    CHECK(ball.boundary_distance(vec3(0.5, 0, 0)) == Catch::Approx(1.5));
    CHECK(ball.boundary_distance(vec3(3.0, 0, 0)) == Catch::Approx(-1.0));

    StarDomain box = StarDomain::axis_box(2, vec2(1.0, 0.5));
    CHECK(box.boundary_distance(vec2(0.2, 0.1)) == Catch::Approx(0.4));
    CHECK(box.boundary_distance(vec2(0.0, 0.0)) == Catch::Approx(0.5));
}

TEST_CASE("ellipsoid boundary distance agrees with dense boundary sampling") {
    StarDomain ell = StarDomain::ellipsoid(2, vec2(1.5, 0.6));
    CounterRng rng(3, 3);
    for (int t = 0; t < 50; ++t) {
        Vec x{rng.uniform(-1.2, 1.2), rng.uniform(-0.5, 0.5), 0.0};
        double want = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 200000; ++k) {
            double th = 2.0 * M_PI * k / 200000.0;
            Vec p{1.5 * std::cos(th), 0.6 * std::sin(th), 0.0};
            want = std::min(want, dist2(x, p, 2));
        }
        double inside = x[0] * x[0] / (1.5 * 1.5) + x[1] * x[1] / (0.6 * 0.6);
        double got = ell.boundary_distance(x);
        CHECK(std::abs(got) == Catch::Approx(want).margin(1e-6));
        CHECK((got > 0) == (inside < 1.0));
    }
}

TEST_CASE("radial-function distance is the along-ray gap") {
    std::vector<double> radii(32, 1.0);  // circle of radius 1 as a table
    StarDomain D = StarDomain::radial_table(2, radii);
    CHECK(D.boundary_distance(vec2(0.25, 0.0)) == Catch::Approx(0.75).epsilon(1e-9));
    CHECK(D.boundary_distance(vec2(0.0, -0.5)) == Catch::Approx(0.5).epsilon(1e-9));
}
