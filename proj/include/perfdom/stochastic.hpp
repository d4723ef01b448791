#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "perfdom/clusterer.hpp"
#include "perfdom/geometry.hpp"
#include "perfdom/sampler.hpp"
#include "perfdom/stats.hpp"
#include "perfdom/threadpool.hpp"

namespace perfdom {

// ---------------------------------------------------------------------------
// Poisson tail against the factorial bound
// ---------------------------------------------------------------------------

struct TailBound {
    double tail = 0.0;   // e^-x sum_{k>=n} x^k / k!
    double bound = 0.0;  // x^n / n!
};

/// Upper tail P(Poisson(x) >= n) by stable forward summation, together with
/// the bound x^n/n! it never exceeds. Factorials live in log space.
inline TailBound poisson_tail_bound(double x, std::uint64_t n) {
    if (x <= 0.0) throw std::domain_error("poisson_tail_bound: x must be > 0");
    TailBound out;
    double nd = static_cast<double>(n);
    out.bound = std::exp(nd * std::log(x) - std::lgamma(nd + 1.0));
    if (n == 0) {
        out.tail = 1.0;
        out.bound = 1.0;
        return out;
    }
    double term = std::exp(nd * std::log(x) - x - std::lgamma(nd + 1.0));
    double sum = term;
    for (std::uint64_t k = n + 1; term > 0.0 && k < n + 100000; ++k) {
        term *= x / static_cast<double>(k);
        sum += term;
        if (term < sum * 1e-18) break;
    }
    out.tail = sum;
    return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo estimates of the clustering/separation event probabilities
// ---------------------------------------------------------------------------

struct TrialConfig {
    std::size_t trials = 400;
    std::uint64_t seed = 1;
    double confidence_z = 1.959963984540054;  // 95% Wilson
    unsigned workers = 0;                     // 0 = hardware concurrency

    void validate() const {
        if (trials < 100) throw PreconditionError("TrialConfig: need at least 100 trials");
    }
};

struct EventEstimate {
    std::string label;
    double eps = 0.0;
    double p_hat = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 1.0;
    double theory_bound = 0.0;
    std::size_t n = 0;
    std::size_t successes = 0;
};

namespace detail {

/// Number of origin-anchored grid cubes of side s that intersect D, exact for
/// balls and axis boxes (the experiment defaults). Used as the covering count
/// in the union bounds, so it must never undercount.
inline double covering_cube_count(const StarDomain& D, double s) {
    int d = D.dim();
    if (D.kind() == StarKind::AxisBox) {
        double n = 1.0;
        Box bb = D.bounding_box();
        for (int i = 0; i < d; ++i)
            n *= std::floor(bb.hi[i] / s) - std::floor(bb.lo[i] / s) + 1.0;
        return n;
    }
    if (D.kind() == StarKind::UnitBall) {
        double R = D.bounding_box().hi[0];
        auto row_count = [&](double w) {
            if (w < 0.0) return 0.0;
            return std::floor(w / s) * 2.0 + 2.0;
        };
        std::int64_t jmax = static_cast<std::int64_t>(std::floor(R / s)) + 1;
        if (d == 2) {
            double total = 0.0;
            for (std::int64_t j = -jmax - 1; j <= jmax; ++j) {
                double lo = j * s, hi = (j + 1) * s;
                double dy = (lo <= 0.0 && hi >= 0.0) ? 0.0 : std::min(std::abs(lo), std::abs(hi));
                if (dy > R) continue;
                total += row_count(std::sqrt(R * R - dy * dy));
            }
            return total;
        }
        double total = 0.0;
        for (std::int64_t j = -jmax - 1; j <= jmax; ++j) {
            double ylo = j * s, yhi = (j + 1) * s;
            double dy = (ylo <= 0.0 && yhi >= 0.0) ? 0.0 : std::min(std::abs(ylo), std::abs(yhi));
            if (dy > R) continue;
            for (std::int64_t k = -jmax - 1; k <= jmax; ++k) {
                double zlo = k * s, zhi = (k + 1) * s;
                double dz = (zlo <= 0.0 && zhi >= 0.0) ? 0.0 : std::min(std::abs(zlo), std::abs(zhi));
                double rem = R * R - dy * dy - dz * dz;
                if (rem < 0.0) continue;
                total += row_count(std::sqrt(rem));
            }
        }
        return total;
    }
    // conservative fallback: full bounding-box grid
    Box bb = D.bounding_box();
    double n = 1.0;
    for (int i = 0; i < d; ++i) n *= std::floor(bb.hi[i] / s) - std::floor(bb.lo[i] / s) + 1.0;
    return n;
}

inline Box scaled_bbox(const StarDomain& D, double inv_scale) {
    Box bb = D.bounding_box();
    for (int i = 0; i < D.dim(); ++i) {
        bb.lo[i] *= inv_scale;
        bb.hi[i] *= inv_scale;
    }
    return bb;
}

}  // namespace detail

struct OccupancyEstimate {
    EventEstimate grid_n1;   // grid cubes, threshold N1 (the dyadic claim)
    EventEstimate grid_n;    // grid cubes, threshold N = 2^d N1
    EventEstimate any_n;     // grid + half-shifts + point-centered cubes, threshold N
    int n1 = 0;
    int n = 0;
    double cubes_scanned = 0.0;
};

/// Occupancy experiment for one eps: sample the process on eps^-1 D, count
/// points eps*z inside D per half-open grid cube of side eps^(1+delta), and
/// estimate the probability that some cube exceeds N1 (and N) points. The
/// full scan over shifted grids and point-centered cubes is optional; its
/// bound reuses the proof's reduction (any cube is covered by at most 2^d
/// grid cubes).
inline OccupancyEstimate estimate_max_occupancy(double lambda, double eps, double delta, int d,
                                                const TrialConfig& config,
                                                const StarDomain& domain, bool full_scan = false) {
    config.validate();
    if (lambda <= 0.0 || eps <= 0.0 || delta <= 0.0) throw PreconditionError("occupancy: bad params");
    const int n1 = 2 + static_cast<int>(std::ceil(1.0 / delta - 1e-9));
    const int n_cap = (1 << d) * n1;
    const double side = std::pow(eps, 1.0 + delta);
    const Box window = detail::scaled_bbox(domain, 1.0 / eps);

    std::vector<std::uint8_t> hit_n1(config.trials, 0), hit_n(config.trials, 0), hit_any(config.trials, 0);
    parallel_for(
        config.trials,
        [&](std::size_t t) {
            ProcessParams pp(lambda, MarkDist::constant(0.0), config.seed + t);
            auto sample = sample_marked_ppp(pp, window);
            std::vector<Vec> pts;
            pts.reserve(sample.points.size());
            for (const auto& p : sample.points) {
                Vec x = scale(p.z, eps);
                if (domain.interior(x)) pts.push_back(x);
            }
            auto key_of = [&](const Vec& x, double ox, double oy, double oz) {
                std::int64_t cx = static_cast<std::int64_t>(std::floor((x[0] - ox) / side));
                std::int64_t cy = d > 1 ? static_cast<std::int64_t>(std::floor((x[1] - oy) / side)) : 0;
                std::int64_t cz = d > 2 ? static_cast<std::int64_t>(std::floor((x[2] - oz) / side)) : 0;
                return detail::pack_cube(cx, cy, cz);
            };
            std::unordered_map<std::uint64_t, std::uint32_t> counts;
            counts.reserve(pts.size() * 2);
            std::uint32_t maxc = 0;
            for (const auto& x : pts) maxc = std::max(maxc, ++counts[key_of(x, 0, 0, 0)]);
            hit_n1[t] = maxc > static_cast<std::uint32_t>(n1);
            hit_n[t] = maxc > static_cast<std::uint32_t>(n_cap);
            if (!full_scan) return;

            std::uint32_t max_any = maxc;
            for (int mask = 1; mask < (1 << d); ++mask) {
                std::unordered_map<std::uint64_t, std::uint32_t> sc;
                sc.reserve(pts.size() * 2);
                double ox = (mask & 1) ? side / 2 : 0.0;
                double oy = (mask & 2) ? side / 2 : 0.0;
                double oz = (mask & 4) ? side / 2 : 0.0;
                for (const auto& x : pts) max_any = std::max(max_any, ++sc[key_of(x, ox, oy, oz)]);
            }
            // cubes centered at sample points: exact half-open window count
            for (const auto& x : pts) {
                std::uint32_t c = 0;
                for (const auto& y : pts) {
                    bool in = true;
                    for (int i = 0; i < d; ++i)
                        in = in && y[i] >= x[i] - side / 2 && y[i] < x[i] + side / 2;
                    c += in;
                }
                max_any = std::max(max_any, c);
            }
            hit_any[t] = max_any > static_cast<std::uint32_t>(n_cap);
        },
        config.workers);

    OccupancyEstimate out;
    out.n1 = n1;
    out.n = n_cap;
    out.cubes_scanned = detail::covering_cube_count(domain, side);
    double per_cube_mean = lambda * std::pow(side / eps, d);

    auto finish = [&](const char* label, const std::vector<std::uint8_t>& hits, int threshold) {
        EventEstimate e;
        e.label = label;
        e.eps = eps;
        e.n = config.trials;
        for (auto h : hits) e.successes += h;
        e.p_hat = static_cast<double>(e.successes) / static_cast<double>(e.n);
        auto ci = wilson_interval(e.successes, e.n, config.confidence_z);
        e.ci_lo = ci.lo;
        e.ci_hi = ci.hi;
        e.theory_bound = std::min(
            1.0, out.cubes_scanned *
                     poisson_tail_bound(per_cube_mean, static_cast<std::uint64_t>(threshold + 1)).bound);
        return e;
    };
    out.grid_n1 = finish("occupancy_grid_n1", hit_n1, n1);
    out.grid_n = finish("occupancy_grid_n", hit_n, n_cap);
    // proof reduction: a cube anywhere exceeding N forces a grid cube over N1
    out.any_n = finish("occupancy_any_n", hit_any, n_cap);
    out.any_n.theory_bound = out.grid_n1.theory_bound;
    return out;
}

/// Separation experiment for one eps: probability that two covering balls
/// B_{tau eps^(1+kappa)} around distinct admitted centers intersect, i.e.
/// some pair of admitted process points lies within 2 tau eps^kappa.
/// Pairs are found through a spatial hash with that cell size. The theory
/// column evaluates the proof's union bound over shifted eta-grids exactly.
inline EventEstimate estimate_separation_event(double lambda, double eps, double kappa, double tau,
                                               int d, const TrialConfig& config,
                                               const StarDomain& domain) {
    config.validate();
    if (kappa <= 1.0 || tau < 1.0) throw PreconditionError("separation: need kappa > 1, tau >= 1");
    const double reach = 2.0 * tau * std::pow(eps, kappa);  // process frame
    const Box window = detail::scaled_bbox(domain, 1.0 / eps);

    std::vector<std::uint8_t> hits(config.trials, 0);
    parallel_for(
        config.trials,
        [&](std::size_t t) {
            ProcessParams pp(lambda, MarkDist::constant(0.0), config.seed + t);
            auto sample = sample_marked_ppp(pp, window);
            std::vector<Vec> pts;
            for (const auto& p : sample.points)
                if (domain.boundary_distance(scale(p.z, eps)) > eps) pts.push_back(p.z);
            if (pts.size() < 2) return;

            std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> grid;
            grid.reserve(pts.size() * 2);
            auto cell_of = [&](const Vec& x, int axis) {
                return static_cast<std::int64_t>(std::floor(x[axis] / reach));
            };
            bool found = false;
            for (std::uint32_t i = 0; i < pts.size() && !found; ++i) {
                std::int64_t cx = cell_of(pts[i], 0);
                std::int64_t cy = d > 1 ? cell_of(pts[i], 1) : 0;
                std::int64_t cz = d > 2 ? cell_of(pts[i], 2) : 0;
                for (std::int64_t dx = -1; dx <= 1 && !found; ++dx)
                    for (std::int64_t dy = (d > 1 ? -1 : 0); dy <= (d > 1 ? 1 : 0) && !found; ++dy)
                        for (std::int64_t dz = (d > 2 ? -1 : 0); dz <= (d > 2 ? 1 : 0) && !found; ++dz) {
                            auto it = grid.find(detail::pack_cube(cx + dx, cy + dy, cz + dz));
                            if (it == grid.end()) continue;
                            for (auto j : it->second)
                                if (dist2(pts[i], pts[j], d) <= reach) {
                                    found = true;
                                    break;
                                }
                        }
                grid[detail::pack_cube(cx, cy, cz)].push_back(i);
            }
            hits[t] = found;
        },
        config.workers);

    EventEstimate e;
    e.label = "separation";
    e.eps = eps;
    e.n = config.trials;
    for (auto h : hits) e.successes += h;
    e.p_hat = static_cast<double>(e.successes) / static_cast<double>(e.n);
    auto ci = wilson_interval(e.successes, e.n, config.confidence_z);
    e.ci_lo = ci.lo;
    e.ci_hi = ci.hi;

    // union bound: eta-cubes over eps^-1 D (counted as side eta*eps cubes over
    // D), 2^d shifted grids, >= 2 points per cube
    double eta = 8.0 * tau * std::pow(eps, kappa);
    double cubes = detail::covering_cube_count(domain, eta * eps);
    double per_cube = poisson_tail_bound(lambda * std::pow(eta, d), 2).bound;
    e.theory_bound = std::min(1.0, std::pow(2.0, d) * cubes * per_cube);
    return e;
}

// ---------------------------------------------------------------------------
// Strong law of large numbers columns
// ---------------------------------------------------------------------------

struct SllnRow {
    double eps = 0.0;
    double count_scaled_mean = 0.0;  // eps^d N(eps^-1 S)
    double count_ci_half = 0.0;
    double moment_scaled_mean = 0.0;  // eps^d sum_{z in Phi^eps(S)} r^m
    double moment_ci_half = 0.0;
    double limit_count = 0.0;   // lambda |S|
    double limit_moment = 0.0;  // lambda E(r^m) |S|
    std::size_t seeds = 0;
};

inline SllnRow slln_estimate(double lambda, const MarkDist& mark, const StarDomain& S, double m,
                             double eps, const TrialConfig& config) {
    config.validate();
    double volume = S.measure_hint();
    if (std::isnan(volume)) throw PreconditionError("slln: domain needs an exact measure");
    const Box window = detail::scaled_bbox(S, 1.0 / eps);
    const int d = S.dim();

    std::vector<double> counts(config.trials), moments(config.trials);
    parallel_for(
        config.trials,
        [&](std::size_t t) {
            ProcessParams pp(lambda, mark, config.seed + t);
            auto sample = sample_marked_ppp(pp, window);
            double c = 0.0, q = 0.0;
            for (const auto& p : sample.points) {
                Vec x = scale(p.z, eps);
                if (S.interior(x)) c += 1.0;
                if (S.boundary_distance(x) > eps) q += std::pow(p.r, m);
            }
            double sc = std::pow(eps, d);
            counts[t] = sc * c;
            moments[t] = sc * q;
        },
        config.workers);

    auto mc = mean_var(counts);
    auto mm = mean_var(moments);
    SllnRow row;
    row.eps = eps;
    row.count_scaled_mean = mc.mean;
    row.count_ci_half = config.confidence_z * std::sqrt(mc.var / static_cast<double>(mc.n));
    row.moment_scaled_mean = mm.mean;
    row.moment_ci_half = config.confidence_z * std::sqrt(mm.var / static_cast<double>(mm.n));
    row.limit_count = lambda * volume;
    row.limit_moment = lambda * mark.moment(m) * volume;
    row.seeds = config.trials;
    return row;
}

}  // namespace perfdom
