#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "perfdom/geometry.hpp"
#include "perfdom/rng.hpp"

namespace perfdom {

// ---------------------------------------------------------------------------
// Constructive John machinery for U = box \ union of balls (d = 3):
// highway shell at depth shortest_side/(32N), escape cones through free
// discs on the half-sphere opposite the nearest ball.
// ---------------------------------------------------------------------------

/// Box minus balls, the carved domain of the box guarantees. Shortest-side
/// normalization is irrelevant to the witness (scale invariant), so boxes of
/// any size are accepted.
struct CarvedBox {
    Box box;
    std::vector<Ball> balls;
    int N = 1;

    double highway_depth() const { return box.min_side() / (32.0 * N); }

    /// min(dist to box boundary, dist to every ball surface); positive in U.
    double dist_boundary(const Vec& x) const {
        double d = box.interior_margin(x);
        for (const auto& b : balls) d = std::min(d, dist2(x, b.center, box.dim) - b.radius);
        return d;
    }
};

struct JohnPath {
    std::vector<Vec> vertices;
    double total_length = 0.0;
    double witness_constant = 0.0;
    Vec worst_point{};
    bool valid = true;  // false if a sampled path point left U
};

struct ConeNotFound : std::runtime_error {
    double max_projection_radius;
    double candidate_radius;
    bool tied_nearest;
    ConeNotFound(double proj, double cand, bool tie)
        : std::runtime_error("ConeNotFound: ball projections exceed the free-disc regime"),
          max_projection_radius(proj),
          candidate_radius(cand),
          tied_nearest(tie) {}
};

struct EscapeCone {
    Vec direction{};
    double half_angle = 0.0;
    bool tied_nearest = false;  // two balls equidistant: tie broken by index
};

namespace detail {

inline Vec normalize(const Vec& v, int dim) {
    double n = norm2(v, dim);
    return n > 0 ? scale(v, 1.0 / n) : v;
}

inline void orthobasis(const Vec& p, Vec& e1, Vec& e2) {
    Vec a = std::abs(p[0]) < 0.9 ? vec3(1, 0, 0) : vec3(0, 1, 0);
    // e1 = normalize(a - (a.p) p), e2 = p x e1
    Vec proj = scale(p, dot(a, p, 3));
    e1 = normalize(sub(a, proj), 3);
    e2 = vec3(p[1] * e1[2] - p[2] * e1[1], p[2] * e1[0] - p[0] * e1[2], p[0] * e1[1] - p[1] * e1[0]);
}

inline double angle_between(const Vec& u, const Vec& v) {
    return std::acos(std::clamp(dot(u, v, 3), -1.0, 1.0));
}

}  // namespace detail

/// Angular radius of the largest ball projection seen from x (the kappa-gap
/// smallness quantity scenes check before the cone search).
inline double max_projection_radius(const Vec& x, const std::vector<Ball>& balls) {
    double m = 0.0;
    for (const auto& b : balls) {
        double d = dist2(x, b.center, 3);
        if (d <= b.radius) return M_PI;  // x inside: projection covers everything
        m = std::max(m, std::asin(std::min(1.0, b.radius / d)));
    }
    return m;
}

/// Free-disc search: N candidate discs of angular radius pi/(4N+4) sit on the
/// half-sphere opposite the nearest ball, pulled in from its rim by twice
/// their radius; at most N-1 remaining projections can each touch one disc,
/// so one stays free whenever the projections are smaller than the discs.
inline EscapeCone find_escape_cone(const Vec& x, const std::vector<Ball>& balls, int N) {
    if (N < 1) throw std::invalid_argument("find_escape_cone: N must be >= 1");
    EscapeCone out;
    if (balls.empty()) {
        out.direction = vec3(0, 0, 1);
        out.half_angle = M_PI / 2.0;
        return out;
    }
    for (const auto& b : balls)
        if (dist2(x, b.center, 3) <= b.radius)
            throw std::invalid_argument("find_escape_cone: x inside a ball");

    std::size_t nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    bool tie = false;
    for (std::size_t j = 0; j < balls.size(); ++j) {
        double d = dist2(x, balls[j].center, 3);
        if (d < best - 1e-15) {
            best = d;
            nearest = j;
            tie = false;
        } else if (std::abs(d - best) <= 1e-15) {
            tie = true;
        }
    }

    Vec pole = detail::normalize(sub(x, balls[nearest].center), 3);  // away from B1
    Vec e1, e2;
    detail::orthobasis(pole, e1, e2);
    const double r = M_PI / (4.0 * N + 4.0);
    const double polar = M_PI / 2.0 - 2.0 * r;

    double max_proj = 0.0;
    for (int k = 0; k < N; ++k) {
        double phi = 2.0 * M_PI * k / N;
        Vec cand = add(scale(pole, std::cos(polar)),
                       add(scale(e1, std::sin(polar) * std::cos(phi)),
                           scale(e2, std::sin(polar) * std::sin(phi))));
        bool free = true;
        for (const auto& b : balls) {
            double d = dist2(x, b.center, 3);
            double proj = std::asin(std::min(1.0, b.radius / d));
            max_proj = std::max(max_proj, proj);
            Vec u = detail::normalize(sub(b.center, x), 3);
            if (detail::angle_between(cand, u) <= r + proj) {
                free = false;
                break;
            }
        }
        if (free) {
            out.direction = cand;
            out.half_angle = r;
            out.tied_nearest = tie;
            return out;
        }
    }
    throw ConeNotFound(max_proj, r, tie);
}

namespace detail {

/// Shell walk bookkeeping: the highway L is the boundary of the box shrunk
/// by the highway depth.
struct Shell {
    Box s;     // shrunk box
    int top;   // axis of the exit face (shortest box side)
    Vec x0;    // highway anchor on the top face

    explicit Shell(const CarvedBox& carved) {
        double w = carved.highway_depth();
        s = Box(add(carved.box.lo, vec3(w, w, w)), sub(carved.box.hi, vec3(w, w, w)), 3);
        top = 0;
        for (int a = 1; a < 3; ++a)
            if (carved.box.side(a) < carved.box.side(top)) top = a;
        x0 = s.center();
        x0[top] = s.hi[top];
    }

    bool on_face(const Vec& p, int axis, bool high) const {
        double v = high ? s.hi[axis] : s.lo[axis];
        return std::abs(p[axis] - v) <= 1e-12 * (1.0 + std::abs(v));
    }

    /// Axis-parallel staircase from a shell point to x0: side faces climb to
    /// the top rim, the bottom face first crosses to a side face, and the top
    /// face walks per-axis to the anchor. Ties in face attribution resolve in
    /// ascending axis order.
    std::vector<Vec> walk_to_anchor(Vec p) const {
        std::vector<Vec> verts;
        auto move_to = [&](Vec q) {
            if (dist2(q, verts.empty() ? q : verts.back(), 3) > 0) verts.push_back(q);
        };
        verts.push_back(p);

        if (on_face(p, top, false)) {  // bottom: cross to the first side face
            int side_axis = top == 0 ? 1 : 0;
            double lo = s.lo[side_axis], hi = s.hi[side_axis];
            double mid = p[side_axis];
            Vec q = p;
            q[side_axis] = (mid - lo <= hi - mid) ? lo : hi;
            move_to(q);
            p = q;
        }
        if (!on_face(p, top, true)) {  // side face: climb to the top rim
            Vec q = p;
            q[top] = s.hi[top];
            move_to(q);
            p = q;
        }
        // on the top face: settle the two in-face axes in ascending order
        for (int a = 0; a < 3; ++a) {
            if (a == top) continue;
            Vec q = p;
            q[a] = x0[a];
            move_to(q);
            p = q;
        }
        return verts;
    }
};

/// Nearest point of the shell (boundary of s) from anywhere.
inline Vec nearest_shell_point(const Box& s, const Vec& x) {
    bool inside = s.contains_strict(x);
    if (!inside) {
        Vec q = x;
        for (int a = 0; a < 3; ++a) q[a] = std::clamp(q[a], s.lo[a], s.hi[a]);
        return q;
    }
    int best_axis = 0;
    double best = std::numeric_limits<double>::infinity();
    bool best_high = false;
    for (int a = 0; a < 3; ++a) {
        if (x[a] - s.lo[a] < best) {
            best = x[a] - s.lo[a];
            best_axis = a;
            best_high = false;
        }
        if (s.hi[a] - x[a] < best) {
            best = s.hi[a] - x[a];
            best_axis = a;
            best_high = true;
        }
    }
    Vec q = x;
    q[best_axis] = best_high ? s.hi[best_axis] : s.lo[best_axis];
    return q;
}

}  // namespace detail

/// Path from x to the highway anchor: ring points take the shortest segment
/// to the shell, interior points leave along an escape-cone axis until the
/// first depth-w crossing, and the rest of the route runs on the shell.
/// The witness constant is the max over sampled path points of
/// |p - x| / dist(p, boundary of U), refined until stable within 1%.
inline JohnPath construct_john_path(const Vec& x, const CarvedBox& carved) {
    if (carved.box.dim != 3) throw std::invalid_argument("construct_john_path: d = 3 only");
    if (carved.dist_boundary(x) <= 0.0)
        throw std::invalid_argument("construct_john_path: x outside U");

    const double w = carved.highway_depth();
    detail::Shell shell(carved);

    JohnPath path;
    if (dist2(x, shell.x0, 3) == 0.0) {
        path.vertices = {x};
        return path;
    }

    double depth = carved.box.interior_margin(x);
    Vec entry;
    if (depth < 2.0 * w) {
        entry = detail::nearest_shell_point(shell.s, x);
    } else {
        auto cone = find_escape_cone(x, carved.balls, carved.N);
        // first crossing of depth w along the cone axis: Lipschitz march then
        // bisection
        auto f = [&](double t) { return carved.box.interior_margin(add(x, scale(cone.direction, t))) - w; };
        double t0 = 0.0, t1 = 0.0;
        double step = w / 4.0;
        while (f(t1) > 0.0) {
            t0 = t1;
            t1 += step;
        }
        for (int it = 0; it < 200 && t1 - t0 > 1e-16 * (1.0 + t1); ++it) {
            double mid = 0.5 * (t0 + t1);
            (f(mid) > 0.0 ? t0 : t1) = mid;
        }
        entry = add(x, scale(cone.direction, 0.5 * (t0 + t1)));
    }

    path.vertices.push_back(x);
    if (dist2(entry, x, 3) > 0) path.vertices.push_back(entry);
    auto shell_walk = detail::Shell(carved).walk_to_anchor(entry);
    for (std::size_t i = 1; i < shell_walk.size(); ++i) path.vertices.push_back(shell_walk[i]);

    for (std::size_t i = 1; i < path.vertices.size(); ++i)
        path.total_length += dist2(path.vertices[i - 1], path.vertices[i], 3);

    // witness sampling with refinement doubling
    double prev = -1.0;
    for (double step = w / 10.0; step > 1e-9 * w; step /= 2.0) {
        double worst = 0.0;
        Vec worst_pt = x;
        bool ok = true;
        for (std::size_t i = 1; i < path.vertices.size() && ok; ++i) {
            Vec a = path.vertices[i - 1], b = path.vertices[i];
            double len = dist2(a, b, 3);
            int nseg = std::max(1, static_cast<int>(std::ceil(len / step)));
            for (int k = 1; k <= nseg; ++k) {
                Vec p = add(a, scale(sub(b, a), static_cast<double>(k) / nseg));
                double d = carved.dist_boundary(p);
                if (d <= 0.0) {
                    ok = false;
                    worst_pt = p;
                    break;
                }
                double ratio = dist2(p, x, 3) / d;
                if (ratio > worst) {
                    worst = ratio;
                    worst_pt = p;
                }
            }
        }
        if (!ok) {
            path.valid = false;
            path.witness_constant = std::numeric_limits<double>::infinity();
            path.worst_point = worst_pt;
            return path;
        }
        path.witness_constant = worst;
        path.worst_point = worst_pt;
        if (prev > 0.0 && std::abs(worst - prev) <= 0.01 * worst) break;
        prev = worst;
    }
    return path;
}

/// Empirical cap c(N) used by the acceptance checks: sqrt(3)(2N * 32N + 1)
/// covers the on-highway witness diam/w for theorem-proportioned boxes.
inline double john_constant_cap(int N) { return std::sqrt(3.0) * (64.0 * N * N + 1.0); }

struct JohnEstimate {
    double c_hat = 0.0;
    Vec worst_point{};
    std::size_t cone_failures = 0;
    std::size_t paths = 0;
};

/// Max witness over uniform interior samples plus adversarial probes:
/// near-ball offsets, box corners, ring midpoints.
inline JohnEstimate estimate_john_constant(const CarvedBox& carved, std::size_t samples,
                                           std::uint64_t seed) {
    if (samples < 1) throw std::invalid_argument("estimate_john_constant: samples >= 1");
    JohnEstimate est;
    CounterRng rng(seed, 0xC0DE);
    auto probe = [&](const Vec& x) {
        if (carved.dist_boundary(x) <= 0.0 || !carved.box.contains_strict(x)) return;
        try {
            auto p = construct_john_path(x, carved);
            ++est.paths;
            if (p.witness_constant > est.c_hat) {
                est.c_hat = p.witness_constant;
                est.worst_point = x;
            }
        } catch (const ConeNotFound&) {
            ++est.cone_failures;
            est.c_hat = std::numeric_limits<double>::infinity();
            est.worst_point = x;
        }
    };

    for (std::size_t t = 0; t < samples; ++t) {
        Vec x{};
        for (int a = 0; a < 3; ++a) x[a] = rng.uniform(carved.box.lo[a], carved.box.hi[a]);
        probe(x);  // rejection against balls happens inside
    }
    // adversarial: points hugging each ball surface
    for (const auto& b : carved.balls) {
        for (int k = 0; k < 14; ++k) {
            Vec dir;
            if (k < 6) {
                dir = vec3(0, 0, 0);
                dir[k / 2] = (k % 2 == 0) ? 1.0 : -1.0;
            } else {
                dir = detail::normalize(vec3(rng.normal(), rng.normal(), rng.normal()), 3);
            }
            probe(add(b.center, scale(dir, b.radius * 1.001 + 1e-12)));
        }
    }
    // box corners pulled slightly inside, and ring midpoints on each face
    double w = carved.highway_depth();
    for (int mask = 0; mask < 8; ++mask) {
        Vec c{};
        for (int a = 0; a < 3; ++a)
            c[a] = (mask >> a & 1) ? carved.box.hi[a] - 0.25 * w : carved.box.lo[a] + 0.25 * w;
        probe(c);
    }
    for (int a = 0; a < 3; ++a)
        for (int s = 0; s < 2; ++s) {
            Vec c = carved.box.center();
            c[a] = s ? carved.box.hi[a] - w : carved.box.lo[a] + w;
            probe(c);
        }
    return est;
}

}  // namespace perfdom
