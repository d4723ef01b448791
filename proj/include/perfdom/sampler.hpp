#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "perfdom/geometry.hpp"
#include "perfdom/rng.hpp"

namespace perfdom {

struct PreconditionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Mark distributions. Every supported law has a finite third moment: the
// Pareto kind requires shape > 3 and a finite cap.
// ---------------------------------------------------------------------------

struct MarkDist {
    enum class Kind { Constant, Uniform, ParetoTruncated } kind = Kind::Constant;
    double a = 1.0;  // constant value / uniform lower / pareto shape
    double b = 0.0;  // uniform upper / pareto cap

    static MarkDist constant(double r0) {
        if (r0 < 0.0) throw PreconditionError("mark constant: r0 < 0");
        return {Kind::Constant, r0, 0.0};
    }
    static MarkDist uniform(double lo, double hi) {
        if (lo < 0.0 || hi < lo) throw PreconditionError("mark uniform: need 0 <= a <= b");
        return {Kind::Uniform, lo, hi};
    }
    /// Pareto with scale 1 conditioned on r <= cap; shape > 3 keeps E(r^3) finite.
    static MarkDist pareto_truncated(double shape, double cap) {
        if (shape <= 3.0) throw PreconditionError("mark pareto: shape must exceed 3");
        if (cap <= 1.0 || !std::isfinite(cap)) throw PreconditionError("mark pareto: cap must be finite and > 1");
        return {Kind::ParetoTruncated, shape, cap};
    }

    double sample(CounterRng& rng) const {
        switch (kind) {
            case Kind::Constant:
                return a;
            case Kind::Uniform:
                return rng.uniform(a, b);
            case Kind::ParetoTruncated: {
                double u = rng.next_unit();
                double s = a, c = b;
                return std::pow(1.0 - u * (1.0 - std::pow(c, -s)), -1.0 / s);
            }
        }
        return a;
    }

    /// Closed-form E(r^m).
    double moment(double m) const {
        switch (kind) {
            case Kind::Constant:
                return std::pow(a, m);
            case Kind::Uniform: {
                if (b == a) return std::pow(a, m);
                return (std::pow(b, m + 1.0) - std::pow(a, m + 1.0)) / ((m + 1.0) * (b - a));
            }
            case Kind::ParetoTruncated: {
                double s = a, c = b;
                double z = 1.0 - std::pow(c, -s);
                if (std::abs(m - s) < 1e-12) return s * std::log(c) / z;
                return s * (1.0 - std::pow(c, m - s)) / ((s - m) * z);
            }
        }
        return 0.0;
    }

    nlohmann::json to_json() const {
        switch (kind) {
            case Kind::Constant:
                return {{"kind", "constant"}, {"r0", a}};
            case Kind::Uniform:
                return {{"kind", "uniform"}, {"a", a}, {"b", b}};
            case Kind::ParetoTruncated:
                return {{"kind", "pareto"}, {"shape", a}, {"cap", b}};
        }
        return {};
    }

    static MarkDist from_json(const nlohmann::json& j) {
        std::string k = j.at("kind");
        if (k == "constant") return constant(j.at("r0"));
        if (k == "uniform") return uniform(j.at("a"), j.at("b"));
        if (k == "pareto") return pareto_truncated(j.at("shape"), j.at("cap"));
        throw PreconditionError("mark distribution: unknown kind " + k);
    }

    /// Parse "const:r0" | "uniform:a,b" | "pareto:shape,cap".
    static MarkDist parse(const std::string& s) {
        auto colon = s.find(':');
        std::string name = s.substr(0, colon);
        std::string args = colon == std::string::npos ? "" : s.substr(colon + 1);
        std::vector<double> v;
        std::stringstream ss(args);
        std::string tok;
        while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
        if (name == "const" && v.size() == 1) return constant(v[0]);
        if (name == "uniform" && v.size() == 2) return uniform(v[0], v[1]);
        if (name == "pareto" && v.size() == 2) return pareto_truncated(v[0], v[1]);
        throw PreconditionError("mark distribution: cannot parse '" + s + "'");
    }
};

// ---------------------------------------------------------------------------
// Marked Poisson point process
// ---------------------------------------------------------------------------

struct ProcessParams {
    double intensity = 1.0;
    MarkDist mark = MarkDist::constant(1.0);
    std::uint64_t seed = 0;

    ProcessParams() = default;
    ProcessParams(double lambda, MarkDist m, std::uint64_t s) : intensity(lambda), mark(m), seed(s) {
        if (lambda <= 0.0) throw PreconditionError("ProcessParams: intensity must be > 0");
    }
};

struct MarkedPoint {
    Vec z{};
    double r = 0.0;
};

struct MarkedPointSample {
    std::vector<MarkedPoint> points;
    Box window;
    int dim = 3;
};

namespace stream_id {
constexpr std::uint64_t kCount = 1;
constexpr std::uint64_t kPosition = 2;
constexpr std::uint64_t kMark = 3;
}  // namespace stream_id

/// Poisson(lambda * |window|) many points, positions i.i.d. uniform in the
/// window, marks i.i.d. from the mark law. Positions and marks come from
/// per-point substreams keyed by the point index.
inline MarkedPointSample sample_marked_ppp(const ProcessParams& params, const Box& window) {
    if (window.degenerate()) throw PreconditionError("sample_marked_ppp: degenerate window");
    double mean = params.intensity * window.volume();
    if (mean > 1e8) throw ResourceError("sample_marked_ppp: expected count exceeds 1e8");

    CounterRng count_rng(params.seed, stream_id::kCount);
    std::uint64_t n = poisson(mean, count_rng);

    MarkedPointSample out;
    out.window = window;
    out.dim = window.dim;
    out.points.resize(n);
    for (std::uint64_t j = 0; j < n; ++j) {
        CounterRng pos(params.seed, stream_id::kPosition, j);
        MarkedPoint p;
        for (int a = 0; a < window.dim; ++a) p.z[a] = pos.uniform(window.lo[a], window.hi[a]);
        CounterRng mark(params.seed, stream_id::kMark, j);
        p.r = params.mark.sample(mark);
        out.points[j] = p;
    }
    return out;
}

/// Indices j with eps*z_j in D and dist(eps*z_j, boundary) > eps (strict).
inline std::vector<std::size_t> select_interior(const MarkedPointSample& sample,
                                                const StarDomain& domain, double eps) {
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < sample.points.size(); ++j) {
        Vec x = scale(sample.points[j].z, eps);
        if (domain.boundary_distance(x) > eps) idx.push_back(j);
    }
    return idx;
}

// ---------------------------------------------------------------------------
// Perforated domain D_eps
// ---------------------------------------------------------------------------

struct PerforatedDomain {
    StarDomain domain = StarDomain::ball(3, 1.0);
    double eps = 0.1;
    double alpha = 4.0;
    std::vector<Ball> holes;                   // centers eps*z_j, radii eps^alpha * r_j
    std::vector<std::size_t> interior_indices; // indices into the source sample
    std::vector<std::size_t> flagged;          // holes with radius > eps (pathological marks)

    int dim() const { return domain.dim(); }
    /// delta with alpha = d(1+delta): (alpha-3)/3 in d=3, alpha/2-1 in the
    /// d=2 experiment mode.
    double delta() const { return alpha / dim() - 1.0; }
};

/// Admissible alpha: > 3 for d = 3, > 2 in the d = 2 experiment mode.
inline void check_alpha(double alpha, int dim) {
    double lo = dim == 3 ? 3.0 : 2.0;
    if (alpha <= lo)
        throw PreconditionError("alpha must exceed " + std::to_string(lo) +
                                " in d = " + std::to_string(dim));
}

inline PerforatedDomain build_perforation(const MarkedPointSample& sample,
                                          const StarDomain& domain, double eps, double alpha) {
    check_alpha(alpha, domain.dim());
    if (eps <= 0.0) throw PreconditionError("build_perforation: eps <= 0");
    PerforatedDomain out;
    out.domain = domain;
    out.eps = eps;
    out.alpha = alpha;
    out.interior_indices = select_interior(sample, domain, eps);
    double ra = std::pow(eps, alpha);
    for (std::size_t j : out.interior_indices) {
        Ball hole(scale(sample.points[j].z, eps), ra * sample.points[j].r);
        if (hole.radius > eps) out.flagged.push_back(j);
        out.holes.push_back(hole);
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON-lines export: a header record with the params, then one record per
// point {z: [...], r: ...}.
// ---------------------------------------------------------------------------

inline void write_sample_jsonl(const MarkedPointSample& sample, const ProcessParams& params,
                               std::ostream& os) {
    nlohmann::json header = {
        {"type", "header"},
        {"intensity", params.intensity},
        {"mark", params.mark.to_json()},
        {"seed", params.seed},
        {"dim", sample.dim},
        {"window_lo", std::vector<double>(sample.window.lo.begin(), sample.window.lo.begin() + sample.dim)},
        {"window_hi", std::vector<double>(sample.window.hi.begin(), sample.window.hi.begin() + sample.dim)},
    };
    os << header.dump() << "\n";
    for (const auto& p : sample.points) {
        nlohmann::json rec = {
            {"z", std::vector<double>(p.z.begin(), p.z.begin() + sample.dim)},
            {"r", p.r},
        };
        os << rec.dump() << "\n";
    }
}

struct SampleFile {
    MarkedPointSample sample;
    ProcessParams params;
};

inline SampleFile read_sample_jsonl(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw PreconditionError("sample jsonl: empty stream");
    nlohmann::json header = nlohmann::json::parse(line);
    if (header.value("type", "") != "header") throw PreconditionError("sample jsonl: missing header");

    SampleFile out;
    out.params = ProcessParams(header.at("intensity"), MarkDist::from_json(header.at("mark")),
                               header.at("seed"));
    int dim = header.at("dim");
    Vec lo{}, hi{};
    for (int a = 0; a < dim; ++a) {
        lo[a] = header.at("window_lo")[a];
        hi[a] = header.at("window_hi")[a];
    }
    out.sample.window = Box(lo, hi, dim);
    out.sample.dim = dim;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        nlohmann::json rec = nlohmann::json::parse(line);
        MarkedPoint p;
        for (int a = 0; a < dim; ++a) p.z[a] = rec.at("z")[a];
        p.r = rec.at("r");
        out.sample.points.push_back(p);
    }
    return out;
}

}  // namespace perfdom
