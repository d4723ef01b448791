#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace perfdom {

/// Point in d <= 3 dimensions. Unused components stay zero so the same
/// storage serves d = 2 and d = 3 at runtime.
using Vec = std::array<double, 3>;

inline Vec vec2(double x, double y) { return {x, y, 0.0}; }
inline Vec vec3(double x, double y, double z) { return {x, y, z}; }

inline Vec add(const Vec& a, const Vec& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec sub(const Vec& a, const Vec& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec scale(const Vec& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }

inline double dot(const Vec& a, const Vec& b, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a, int dim) { return std::sqrt(dot(a, a, dim)); }

inline double norm_inf(const Vec& a, int dim) {
    double m = 0.0;
    for (int i = 0; i < dim; ++i) m = std::max(m, std::abs(a[i]));
    return m;
}

inline double dist2(const Vec& a, const Vec& b, int dim) { return norm2(sub(a, b), dim); }

struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Closed ball; radius >= 0 (radius 0 degenerates to a point).
struct Ball {
    Vec center{};
    double radius = 0.0;

    Ball() = default;
    Ball(const Vec& c, double r) : center(c), radius(r) {
        if (r < 0.0) throw GeometryError("Ball: negative radius");
    }

    bool contains(const Vec& x, int dim) const { return dist2(x, center, dim) <= radius; }
};

/// Axis-aligned box [lo, hi], lo <= hi component-wise.
struct Box {
    Vec lo{};
    Vec hi{};
    int dim = 3;

    Box() = default;
    Box(const Vec& lo_, const Vec& hi_, int dim_) : lo(lo_), hi(hi_), dim(dim_) {
        for (int i = 0; i < dim; ++i)
            if (lo[i] > hi[i]) throw GeometryError("Box: lo > hi");
    }

    double side(int axis) const { return hi[axis] - lo[axis]; }

    double min_side() const {
        double m = std::numeric_limits<double>::infinity();
        for (int i = 0; i < dim; ++i) m = std::min(m, side(i));
        return m;
    }

    double max_side() const {
        double m = 0.0;
        for (int i = 0; i < dim; ++i) m = std::max(m, side(i));
        return m;
    }

    bool degenerate() const { return min_side() <= 0.0; }

    double volume() const {
        double v = 1.0;
        for (int i = 0; i < dim; ++i) v *= side(i);
        return v;
    }

    Vec center() const {
        Vec c{};
        for (int i = 0; i < dim; ++i) c[i] = 0.5 * (lo[i] + hi[i]);
        return c;
    }

    bool contains(const Vec& x) const {
        for (int i = 0; i < dim; ++i)
            if (x[i] < lo[i] || x[i] > hi[i]) return false;
        return true;
    }

    bool contains_strict(const Vec& x) const {
        for (int i = 0; i < dim; ++i)
            if (x[i] <= lo[i] || x[i] >= hi[i]) return false;
        return true;
    }

    /// Euclidean distance from an interior point to the boundary
    /// (= min face margin). Negative if x is outside.
    double interior_margin(const Vec& x) const {
        double m = std::numeric_limits<double>::infinity();
        for (int i = 0; i < dim; ++i) m = std::min({m, x[i] - lo[i], hi[i] - x[i]});
        return m;
    }
};

/// inf over point pairs of the max-coordinate distance between two boxes.
/// Zero iff the closures intersect.
inline double dist_inf(const Box& a, const Box& b) {
    double m = 0.0;
    for (int i = 0; i < a.dim; ++i) {
        double gap = std::max({0.0, a.lo[i] - b.hi[i], b.lo[i] - a.hi[i]});
        m = std::max(m, gap);
    }
    return m;
}

/// {x : dist_inf(x, b) <= margin}; each side grows by exactly 2*margin.
inline Box inflate(const Box& b, double margin) {
    if (margin < 0.0) throw GeometryError("inflate: negative margin");
    Box out = b;
    for (int i = 0; i < b.dim; ++i) {
        out.lo[i] -= margin;
        out.hi[i] += margin;
    }
    return out;
}

/// Distance from the ball surface to the box boundary, for a ball whose
/// center lies inside the box. Negative if the ball pokes out.
inline double ball_box_clearance(const Ball& ball, const Box& b) {
    if (!b.contains(ball.center))
        throw GeometryError("ball_box_clearance: center outside box");
    return b.interior_margin(ball.center) - ball.radius;
}

// ---------------------------------------------------------------------------
// Star-shaped domains
// ---------------------------------------------------------------------------

enum class StarKind { UnitBall, AxisBox, Ellipsoid, RadialFunction };

/// Bounded domain star-shaped w.r.t. the origin. Membership and a signed
/// boundary distance (positive inside) are exposed; ball/box/ellipsoid use
/// exact distances, the radial-function kind falls back to bisection along
/// the ray through x (tolerance 1e-12 relative).
class StarDomain {
  public:
    static StarDomain ball(int dim, double radius) {
        StarDomain d;
        d.kind_ = StarKind::UnitBall;
        d.dim_ = dim;
        d.scale_ = {radius, radius, radius};
        if (radius <= 0.0) throw GeometryError("StarDomain: radius <= 0");
        return d;
    }

    /// Box centered at the origin with the given half-lengths.
    static StarDomain axis_box(int dim, const Vec& half_lengths) {
        StarDomain d;
        d.kind_ = StarKind::AxisBox;
        d.dim_ = dim;
        d.scale_ = half_lengths;
        for (int i = 0; i < dim; ++i)
            if (half_lengths[i] <= 0.0) throw GeometryError("StarDomain: half length <= 0");
        return d;
    }

    static StarDomain ellipsoid(int dim, const Vec& semi_axes) {
        StarDomain d;
        d.kind_ = StarKind::Ellipsoid;
        d.dim_ = dim;
        d.scale_ = semi_axes;
        for (int i = 0; i < dim; ++i)
            if (semi_axes[i] <= 0.0) throw GeometryError("StarDomain: semi axis <= 0");
        return d;
    }

    /// d = 2: radii at uniformly spaced angles (periodic, linear interp).
    /// d = 3: lat-long table, rows = polar samples in [0, pi], cols = azimuth.
    static StarDomain radial_table(int dim, std::vector<double> radii, int rows = 0) {
        StarDomain d;
        d.kind_ = StarKind::RadialFunction;
        d.dim_ = dim;
        d.table_ = std::move(radii);
        d.table_rows_ = rows;
        if (d.table_.empty()) throw GeometryError("StarDomain: empty radial table");
        for (double r : d.table_)
            if (r <= 0.0) throw GeometryError("StarDomain: radial table entry <= 0");
        if (dim == 3 && (rows < 2 || static_cast<int>(d.table_.size()) % rows != 0))
            throw GeometryError("StarDomain: bad lat-long table shape");
        return d;
    }

    int dim() const { return dim_; }
    StarKind kind() const { return kind_; }

    bool interior(const Vec& x) const { return boundary_distance(x) > 0.0; }

    /// Signed distance to the boundary: positive inside, negative outside.
    /// Exact for ball/box/ellipsoid; along-ray for radial tables.
    double boundary_distance(const Vec& x) const {
        switch (kind_) {
            case StarKind::UnitBall:
                return scale_[0] - norm2(x, dim_);
            case StarKind::AxisBox: {
                double m = std::numeric_limits<double>::infinity();
                for (int i = 0; i < dim_; ++i) m = std::min(m, scale_[i] - std::abs(x[i]));
                return m;
            }
            case StarKind::Ellipsoid:
                return ellipsoid_distance(x);
            case StarKind::RadialFunction:
                return radial_ray_distance(x);
        }
        return 0.0;
    }

    Box bounding_box() const {
        Vec lo{}, hi{};
        double rmax = 0.0;
        if (kind_ == StarKind::RadialFunction)
            for (double r : table_) rmax = std::max(rmax, r);
        for (int i = 0; i < dim_; ++i) {
            double s = (kind_ == StarKind::RadialFunction) ? rmax : scale_[i];
            lo[i] = -s;
            hi[i] = s;
        }
        return Box(lo, hi, dim_);
    }

    /// Distance from the origin to the boundary (inradius bound used by
    /// the eps-interior selection).
    double inradius() const { return boundary_distance(Vec{}); }

    double measure_hint() const {
        // exact for ball/box, NaN otherwise (callers that need |D| integrate)
        if (kind_ == StarKind::UnitBall) {
            double r = scale_[0];
            return dim_ == 2 ? M_PI * r * r : 4.0 / 3.0 * M_PI * r * r * r;
        }
        if (kind_ == StarKind::AxisBox) {
            double v = 1.0;
            for (int i = 0; i < dim_; ++i) v *= 2.0 * scale_[i];
            return v;
        }
        if (kind_ == StarKind::Ellipsoid) {
            double v = dim_ == 2 ? M_PI : 4.0 / 3.0 * M_PI;
            for (int i = 0; i < dim_; ++i) v *= scale_[i];
            return v;
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

  private:
    StarKind kind_ = StarKind::UnitBall;
    int dim_ = 3;
    Vec scale_{1.0, 1.0, 1.0};
    std::vector<double> table_;
    int table_rows_ = 0;

    // Nearest-point distance to the ellipsoid boundary via the Lagrange
    // parameterization y_i = a_i^2 x_i / (a_i^2 - mu); the constraint
    // G(mu) = sum (a_i x_i / (a_i^2 - mu))^2 = 1 has a unique root below
    // min a_i^2, bracketed and bisected to machine precision.
    double ellipsoid_distance(const Vec& x) const {
        double amin2 = std::numeric_limits<double>::infinity();
        for (int i = 0; i < dim_; ++i) amin2 = std::min(amin2, scale_[i] * scale_[i]);
        double g0 = 0.0;
        for (int i = 0; i < dim_; ++i) {
            double t = x[i] / scale_[i];
            g0 += t * t;
        }
        if (norm2(x, dim_) < 1e-300) return amin2 > 0 ? std::sqrt(amin2) : 0.0;

        auto G = [&](double mu) {
            double s = 0.0;
            for (int i = 0; i < dim_; ++i) {
                double t = scale_[i] * x[i] / (scale_[i] * scale_[i] - mu);
                s += t * t;
            }
            return s;
        };
        double lo, hi;
        if (g0 < 1.0) {  // inside: root in (0, amin2)
            lo = 0.0;
            hi = amin2 * (1.0 - 1e-15);
            while (G(hi) < 1.0) hi = 0.5 * (hi + amin2);
        } else {  // outside: root in (-inf, 0]
            hi = 0.0;
            lo = -amin2;
            while (G(lo) > 1.0) lo *= 2.0;
        }
        for (int it = 0; it < 200 && hi - lo > 1e-16 * (1.0 + std::abs(lo)); ++it) {
            double mid = 0.5 * (lo + hi);
            (G(mid) < 1.0 ? lo : hi) = mid;
        }
        double mu = 0.5 * (lo + hi);
        double d2 = 0.0;
        for (int i = 0; i < dim_; ++i) {
            double t = mu * x[i] / (scale_[i] * scale_[i] - mu);
            d2 += t * t;
        }
        double d = std::sqrt(d2);
        return g0 < 1.0 ? d : -d;
    }

    double radial_interp(const Vec& dir) const {
        if (dim_ == 2) {
            double th = std::atan2(dir[1], dir[0]);
            if (th < 0) th += 2.0 * M_PI;
            double n = static_cast<double>(table_.size());
            double u = th / (2.0 * M_PI) * n;
            std::size_t i0 = static_cast<std::size_t>(u) % table_.size();
            std::size_t i1 = (i0 + 1) % table_.size();
            double f = u - std::floor(u);
            return table_[i0] * (1.0 - f) + table_[i1] * f;
        }
        int cols = static_cast<int>(table_.size()) / table_rows_;
        double polar = std::acos(std::clamp(dir[2], -1.0, 1.0));
        double az = std::atan2(dir[1], dir[0]);
        if (az < 0) az += 2.0 * M_PI;
        double u = polar / M_PI * (table_rows_ - 1);
        double v = az / (2.0 * M_PI) * cols;
        int r0 = std::min(table_rows_ - 2, static_cast<int>(u));
        int c0 = static_cast<int>(v) % cols;
        int c1 = (c0 + 1) % cols;
        double fu = u - r0, fv = v - std::floor(v);
        auto at = [&](int r, int c) { return table_[static_cast<std::size_t>(r) * cols + c]; };
        return (at(r0, c0) * (1 - fv) + at(r0, c1) * fv) * (1 - fu) +
               (at(r0 + 1, c0) * (1 - fv) + at(r0 + 1, c1) * fv) * fu;
    }

    // Along-ray fallback: bisection on t -> membership(t * dir) locates the
    // boundary radius R(dir); returns R(dir) - |x| (signed).
    double radial_ray_distance(const Vec& x) const {
        double r = norm2(x, dim_);
        double rmax = 0.0, rmin = std::numeric_limits<double>::infinity();
        for (double t : table_) {
            rmax = std::max(rmax, t);
            rmin = std::min(rmin, t);
        }
        if (r < 1e-300) return rmin;
        Vec dir = scale(x, 1.0 / r);
        auto member = [&](double t) { return t < radial_interp(dir); };
        double lo = 0.0, hi = rmax * (1.0 + 1e-9);
        for (int it = 0; it < 100 && hi - lo > 1e-13 * rmax; ++it) {
            double mid = 0.5 * (lo + hi);
            (member(mid) ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi) - r;
    }
};

}  // namespace perfdom
