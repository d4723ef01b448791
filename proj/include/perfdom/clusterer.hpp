#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "perfdom/geometry.hpp"
#include "perfdom/rng.hpp"
#include "perfdom/sampler.hpp"

namespace perfdom {

/// Deterministic capacity 2^d * (2 + ceil(1/delta)); equals 8(2 + ceil(1/delta))
/// in d = 3. The ceil is evaluated with a 1e-9 slack so that e.g. delta = 1/3
/// stored in binary still yields ceil(3) = 3.
inline int n_of_delta(double delta, int dim) {
    if (delta <= 0.0) throw std::domain_error("n_of_delta: delta must be > 0");
    double inv = 1.0 / delta;
    int c = static_cast<int>(std::ceil(inv - 1e-9));
    return (1 << dim) * (2 + c);
}

/// Grid-cube side and inflation margin of the box construction. Defaults are
/// cube = eps^(1+delta)/(2N) and margin = eps^(1+delta)/(8N); synthetic scenes
/// may override both.
struct BoxScales {
    double cube = 0.0;
    double margin = 0.0;
};

struct ClusterParams {
    double eps = 0.1;
    double delta = 1.0 / 3.0;
    int N = 40;
    double kappa = 1.5;
    int dim = 3;

    static ClusterParams from_alpha(double eps, double alpha, int dim,
                                    double kappa = std::numeric_limits<double>::quiet_NaN()) {
        check_alpha(alpha, dim);
        ClusterParams p;
        p.eps = eps;
        p.dim = dim;
        p.delta = alpha / dim - 1.0;
        p.N = n_of_delta(p.delta, dim);
        double klo = std::max(1.0, p.delta), khi = alpha - 2.0;
        p.kappa = std::isnan(kappa) ? 0.5 * (klo + khi) : kappa;
        if (!(p.kappa > klo && p.kappa < khi))
            throw PreconditionError("ClusterParams: kappa outside (max(1,delta), alpha-2)");
        if (p.delta <= 0.0 || p.N < 1) throw PreconditionError("ClusterParams: invalid delta/N");
        return p;
    }

    double eps_pow() const { return std::pow(eps, 1.0 + delta); }
    BoxScales scales() const { return {eps_pow() / (2.0 * N), eps_pow() / (8.0 * N)}; }
    double cover_radius() const { return std::pow(eps, 1.0 + kappa); }
    /// Gate for claiming (a)/(c): eps^(1+kappa) <= eps^(1+delta)/(16N).
    bool cover_precondition() const { return cover_radius() <= eps_pow() / (16.0 * N); }
};

/// Box of the construction: grid-aligned inner box (union of cubes), inflated
/// outer box, and the indices of the points it holds.
struct ClusterBox {
    Box inner;
    Box outer;
    std::vector<std::size_t> members;
};

/// Occupancy violation: some merged box would hold more than N points, i.e.
/// this realization's eps exceeds eps_0(omega). Data, not a bug.
struct EpsilonTooLarge : std::runtime_error {
    std::vector<std::size_t> offending_members;
    explicit EpsilonTooLarge(std::vector<std::size_t> members)
        : std::runtime_error("EpsilonTooLarge: cluster with " + std::to_string(members.size()) +
                             " points exceeds capacity"),
          offending_members(std::move(members)) {}
};

namespace detail {

struct IntBox {
    std::array<std::int64_t, 3> a{};  // inclusive cube coords
    std::array<std::int64_t, 3> b{};  // exclusive
    std::vector<std::size_t> members;
    bool alive = true;

    bool touches(const IntBox& o, int dim) const {
        for (int i = 0; i < dim; ++i)
            if (a[i] > o.b[i] || o.a[i] > b[i]) return false;
        return true;
    }
};

inline std::uint64_t pack_cube(std::int64_t x, std::int64_t y, std::int64_t z) {
    constexpr std::int64_t bias = 1 << 20;
    if (std::abs(x) >= bias || std::abs(y) >= bias || std::abs(z) >= bias)
        throw GeometryError("cluster grid: cube coordinate out of packing range");
    return static_cast<std::uint64_t>(x + bias) | (static_cast<std::uint64_t>(y + bias) << 21) |
           (static_cast<std::uint64_t>(z + bias) << 42);
}

inline ClusterBox finish_box(const IntBox& ib, double cube, double margin, int dim) {
    Vec lo{}, hi{};
    for (int i = 0; i < dim; ++i) {
        lo[i] = static_cast<double>(ib.a[i]) * cube;
        hi[i] = static_cast<double>(ib.b[i]) * cube;
    }
    ClusterBox out;
    out.inner = Box(lo, hi, dim);
    out.outer = inflate(out.inner, margin);
    out.members = ib.members;
    std::sort(out.members.begin(), out.members.end());
    return out;
}

}  // namespace detail

/// Grid-cube seeding and touch-merge loop of the box construction.
///
/// Points land in half-open cubes [k*l, (k+1)*l) anchored at the origin; any
/// two boxes at dist_inf zero are replaced by their bounding box until all
/// boxes are separated, then each is inflated by the margin. A merge result
/// holding more than `capacity` points raises EpsilonTooLarge.
///
/// `shuffle` (tests only) randomizes the merge order to exercise
/// order-independence of the final point partition.
inline std::vector<ClusterBox> build_cluster_boxes(const std::vector<Vec>& points,
                                                   const BoxScales& scales, int capacity, int dim,
                                                   CounterRng* shuffle = nullptr) {
    using detail::IntBox;
    const double l = scales.cube;
    if (l <= 0.0) throw PreconditionError("build_cluster_boxes: cube side must be > 0");

    std::vector<IntBox> boxes;
    // A cube can be covered by several boxes (a merged hull's rectangle may
    // overlap another box's cubes), so the index keeps a list per cube and
    // skips dead entries on lookup.
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> cube_index;
    cube_index.reserve(points.size() * 2);

    auto cube_of = [&](const Vec& p) {
        std::array<std::int64_t, 3> c{};
        for (int i = 0; i < dim; ++i) c[i] = static_cast<std::int64_t>(std::floor(p[i] / l));
        return c;
    };

    {
        std::unordered_map<std::uint64_t, std::size_t> seed_box;
        for (std::size_t j = 0; j < points.size(); ++j) {
            auto c = cube_of(points[j]);
            auto key = detail::pack_cube(c[0], c[1], c[2]);
            auto it = seed_box.find(key);
            if (it == seed_box.end()) {
                IntBox ib;
                for (int i = 0; i < dim; ++i) {
                    ib.a[i] = c[i];
                    ib.b[i] = c[i] + 1;
                }
                for (int i = dim; i < 3; ++i) {
                    ib.a[i] = 0;
                    ib.b[i] = 1;
                }
                ib.members.push_back(j);
                boxes.push_back(std::move(ib));
                seed_box.emplace(key, boxes.size() - 1);
                cube_index[key].push_back(boxes.size() - 1);
            } else {
                boxes[it->second].members.push_back(j);
                if (boxes[it->second].members.size() > static_cast<std::size_t>(capacity))
                    throw EpsilonTooLarge(boxes[it->second].members);
            }
        }
    }

    auto register_cubes = [&](std::size_t id) {
        const IntBox& ib = boxes[id];
        for (std::int64_t x = ib.a[0]; x < ib.b[0]; ++x)
            for (std::int64_t y = (dim > 1 ? ib.a[1] : 0); y < (dim > 1 ? ib.b[1] : 1); ++y)
                for (std::int64_t z = (dim > 2 ? ib.a[2] : 0); z < (dim > 2 ? ib.b[2] : 1); ++z)
                    cube_index[detail::pack_cube(x, dim > 1 ? y : 0, dim > 2 ? z : 0)].push_back(id);
    };

    // Worklist scan: look for an alive neighbor box within Chebyshev distance
    // one of any covered cube; merging appends the hull and re-enqueues it.
    // Boxes never change after creation, so a box checked once after creation
    // with no touch stays touch-free unless a newly created hull (which is
    // enqueued) reaches it.
    std::deque<std::size_t> work;
    for (std::size_t i = 0; i < boxes.size(); ++i) work.push_back(i);

    auto find_touch = [&](std::size_t id) -> std::optional<std::size_t> {
        const IntBox& ib = boxes[id];
        std::int64_t y0 = dim > 1 ? ib.a[1] - 1 : 0, y1 = dim > 1 ? ib.b[1] + 1 : 1;
        std::int64_t z0 = dim > 2 ? ib.a[2] - 1 : 0, z1 = dim > 2 ? ib.b[2] + 1 : 1;
        for (std::int64_t x = ib.a[0] - 1; x < ib.b[0] + 1; ++x)
            for (std::int64_t y = y0; y < y1; ++y)
                for (std::int64_t z = z0; z < z1; ++z) {
                    auto it = cube_index.find(detail::pack_cube(x, y, z));
                    if (it == cube_index.end()) continue;
                    for (std::size_t other : it->second)
                        if (other != id && boxes[other].alive) return other;
                }
        return std::nullopt;
    };

    while (!work.empty()) {
        std::size_t id;
        if (shuffle) {
            std::size_t pick = static_cast<std::size_t>(shuffle->next_u64() % work.size());
            id = work[pick];
            work.erase(work.begin() + static_cast<std::ptrdiff_t>(pick));
        } else {
            id = work.front();
            work.pop_front();
        }
        if (!boxes[id].alive) continue;
        auto other = find_touch(id);
        if (!other) continue;

        IntBox hull;
        const IntBox &A = boxes[id], &B = boxes[*other];
        for (int i = 0; i < dim; ++i) {
            hull.a[i] = std::min(A.a[i], B.a[i]);
            hull.b[i] = std::max(A.b[i], B.b[i]);
        }
        for (int i = dim; i < 3; ++i) {
            hull.a[i] = 0;
            hull.b[i] = 1;
        }
        hull.members = A.members;
        hull.members.insert(hull.members.end(), B.members.begin(), B.members.end());
        if (hull.members.size() > static_cast<std::size_t>(capacity))
            throw EpsilonTooLarge(hull.members);
        boxes[id].alive = false;
        boxes[*other].alive = false;
        boxes.push_back(std::move(hull));
        std::size_t nid = boxes.size() - 1;
        // side bound: slices each hold a point and capacity is N, so at most
        // N cubes per axis once the merge is admissible
        for (int i = 0; i < dim; ++i)
            if (boxes[nid].b[i] - boxes[nid].a[i] > capacity)
                throw EpsilonTooLarge(boxes[nid].members);
        register_cubes(nid);
        work.push_back(nid);
    }

    std::vector<ClusterBox> out;
    for (const auto& ib : boxes)
        if (ib.alive) out.push_back(detail::finish_box(ib, scales.cube, scales.margin, dim));
    std::sort(out.begin(), out.end(),
              [](const ClusterBox& x, const ClusterBox& y) { return x.members < y.members; });
    return out;
}

inline std::vector<ClusterBox> build_cluster_boxes(const std::vector<Vec>& points,
                                                   const ClusterParams& params,
                                                   CounterRng* shuffle = nullptr) {
    return build_cluster_boxes(points, params.scales(), params.N, params.dim, shuffle);
}

// ---------------------------------------------------------------------------
// Verification of the five box guarantees
// ---------------------------------------------------------------------------

struct PropertyCheck {
    std::string property;
    double margin = 0.0;     // worst observed value
    double threshold = 0.0;  // required bound on the margin
    bool pass = false;
};

struct ClusterReport {
    std::vector<PropertyCheck> checks;
    bool cover_precondition_ok = true;
    double cover_radius_used = 0.0;
    bool vacuous = false;

    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

/// Per-property margins for guarantees (a)-(e):
///   (a) cover: min over points of dist_inf(center, outer boundary) - cover radius
///   (b) occupancy: max member count
///   (c) clearance: min dist(B_cover, outer boundary)
///   (d) separation: min pairwise dist_inf of outer boxes
///   (e) sides: min and max outer side lengths
/// Reports, never throws.
///
/// The cover radius defaults to the theorem's eps^(1+kappa). That value is
/// asserted against the clearance budget only below a realization-independent
/// eps threshold (cover_precondition); above it, callers pass the radius the
/// construction actually needs covered (2 * max hole radius, the annulus).
inline ClusterReport verify_cluster_properties(
    const std::vector<ClusterBox>& boxes, const std::vector<Vec>& centers,
    const ClusterParams& params,
    std::optional<double> cover_radius = std::nullopt) {
    constexpr double kTol = 1e-12;
    ClusterReport rep;
    rep.cover_precondition_ok = params.cover_precondition();
    const double ep = params.eps_pow();
    const double rc = cover_radius.value_or(params.cover_radius());
    rep.cover_radius_used = rc;
    const double inf = std::numeric_limits<double>::infinity();

    if (boxes.empty() && centers.empty()) {
        rep.vacuous = true;
        rep.checks = {{"cover", inf, 0.0, true},
                      {"occupancy", 0.0, static_cast<double>(params.N), true},
                      {"clearance", inf, ep / (16.0 * params.N), true},
                      {"separation", inf, ep / (4.0 * params.N), true},
                      {"side_min", inf, ep / (2.0 * params.N), true},
                      {"side_max", 0.0, ep, true}};
        return rep;
    }

    // point -> box assignment via membership lists
    double cover_margin = inf, clearance = inf;
    bool all_assigned = true;
    for (const auto& bx : boxes) {
        for (std::size_t j : bx.members) {
            if (j >= centers.size()) {
                all_assigned = false;
                continue;
            }
            const Vec& c = centers[j];
            if (!bx.outer.contains(c)) {
                all_assigned = false;
                continue;
            }
            double m = bx.outer.interior_margin(c);
            cover_margin = std::min(cover_margin, m - rc);
            clearance = std::min(clearance, m - rc);  // axis box: euclid = min face margin
        }
    }
    std::size_t assigned = 0;
    for (const auto& bx : boxes) assigned += bx.members.size();
    if (assigned != centers.size()) all_assigned = false;

    double occupancy = 0.0;
    for (const auto& bx : boxes) occupancy = std::max(occupancy, static_cast<double>(bx.members.size()));

    // pairwise separation via a coarse spatial hash on outer-box centers
    double separation = inf;
    {
        const double cell = std::max(ep * 1.25, 1e-300);
        std::unordered_map<std::uint64_t, std::vector<std::size_t>> grid;
        auto key_of = [&](const Vec& p) {
            std::array<std::int64_t, 3> c{};
            for (int i = 0; i < params.dim; ++i)
                c[i] = static_cast<std::int64_t>(std::floor(p[i] / cell));
            return detail::pack_cube(c[0], params.dim > 1 ? c[1] : 0, params.dim > 2 ? c[2] : 0);
        };
        for (std::size_t i = 0; i < boxes.size(); ++i) grid[key_of(boxes[i].outer.center())].push_back(i);
        for (std::size_t i = 0; i < boxes.size(); ++i) {
            Vec ctr = boxes[i].outer.center();
            std::array<std::int64_t, 3> base{};
            for (int a = 0; a < params.dim; ++a)
                base[a] = static_cast<std::int64_t>(std::floor(ctr[a] / cell));
            std::int64_t y0 = params.dim > 1 ? -1 : 0, y1 = params.dim > 1 ? 1 : 0;
            std::int64_t z0 = params.dim > 2 ? -1 : 0, z1 = params.dim > 2 ? 1 : 0;
            for (std::int64_t dx = -1; dx <= 1; ++dx)
                for (std::int64_t dy = y0; dy <= y1; ++dy)
                    for (std::int64_t dz = z0; dz <= z1; ++dz) {
                        auto it = grid.find(detail::pack_cube(base[0] + dx, params.dim > 1 ? base[1] + dy : 0,
                                                              params.dim > 2 ? base[2] + dz : 0));
                        if (it == grid.end()) continue;
                        for (std::size_t j : it->second)
                            if (j > i) separation = std::min(separation, dist_inf(boxes[i].outer, boxes[j].outer));
                    }
        }
        if (boxes.size() < 2) separation = inf;
    }

    double side_min = inf, side_max = 0.0;
    for (const auto& bx : boxes) {
        side_min = std::min(side_min, bx.outer.min_side());
        side_max = std::max(side_max, bx.outer.max_side());
    }

    rep.checks.push_back({"cover", cover_margin, 0.0,
                          all_assigned && cover_margin >= -kTol});
    rep.checks.push_back({"occupancy", occupancy, static_cast<double>(params.N),
                          occupancy <= params.N});
    rep.checks.push_back({"clearance", clearance, ep / (16.0 * params.N),
                          clearance >= ep / (16.0 * params.N) - kTol});
    rep.checks.push_back({"separation", separation, ep / (4.0 * params.N),
                          separation >= ep / (4.0 * params.N) - kTol});
    rep.checks.push_back({"side_min", side_min, ep / (2.0 * params.N),
                          side_min >= ep / (2.0 * params.N) - kTol});
    rep.checks.push_back({"side_max", side_max, ep, side_max <= ep + kTol});
    return rep;
}

inline ClusterReport verify_cluster_properties(const std::vector<ClusterBox>& boxes,
                                               const PerforatedDomain& perf,
                                               const ClusterParams& params) {
    std::vector<Vec> centers;
    centers.reserve(perf.holes.size());
    double rmax = 0.0;
    for (const auto& h : perf.holes) {
        centers.push_back(h.center);
        rmax = std::max(rmax, h.radius);
    }
    double rc = params.cover_radius();
    if (!params.cover_precondition()) rc = std::min(rc, 2.0 * rmax);
    return verify_cluster_properties(boxes, centers, params, rc);
}

/// Point partition induced by a box list (sorted member lists), used by the
/// merge-order-independence tests.
inline std::vector<std::vector<std::size_t>> point_partition(const std::vector<ClusterBox>& boxes) {
    std::vector<std::vector<std::size_t>> parts;
    for (const auto& b : boxes) parts.push_back(b.members);
    std::sort(parts.begin(), parts.end());
    return parts;
}

}  // namespace perfdom
