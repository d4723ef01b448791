#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "perfdom/clusterer.hpp"
#include "perfdom/geometry.hpp"
#include "perfdom/sampler.hpp"

namespace perfdom {

enum class CellClass : std::uint8_t { Fluid, Hole, Exterior };

struct UnresolvableHoles : std::runtime_error {
    double min_cells_across;
    explicit UnresolvableHoles(double cells)
        : std::runtime_error("UnresolvableHoles: smallest hole spans " + std::to_string(cells) +
                             " cells (< 3)"),
          min_cells_across(cells) {}
};

struct UnresolvableLayer : std::runtime_error {
    double cells_across;
    explicit UnresolvableLayer(const std::string& what, double cells)
        : std::runtime_error("UnresolvableLayer: " + what + " spans " + std::to_string(cells) +
                             " cells (< 3)"),
          cells_across(cells) {}
};

/// Uniform staggered grid over a bounding box: scalars at cell centers,
/// velocity components at faces. dims[2] = 1 covers d = 2.
struct MaskedGrid {
    Vec origin{};
    double h = 1.0;
    std::array<int, 3> dims{1, 1, 1};
    int dim = 2;

    std::vector<CellClass> cls;        // per cell
    std::vector<std::int32_t> box_id;  // outer cluster box per cell, -1 none
    std::vector<std::int32_t> hole_id; // ball index for Hole cells, -1 otherwise

    std::int64_t cell_count() const {
        return static_cast<std::int64_t>(dims[0]) * dims[1] * dims[2];
    }

    std::int64_t cell_index(int i, int j, int k) const {
        return (static_cast<std::int64_t>(k) * dims[1] + j) * dims[0] + i;
    }

    void cell_coords(std::int64_t idx, int& i, int& j, int& k) const {
        i = static_cast<int>(idx % dims[0]);
        j = static_cast<int>((idx / dims[0]) % dims[1]);
        k = static_cast<int>(idx / (static_cast<std::int64_t>(dims[0]) * dims[1]));
    }

    Vec cell_center(int i, int j, int k) const {
        return {origin[0] + (i + 0.5) * h, origin[1] + (j + 0.5) * h,
                dim > 2 ? origin[2] + (k + 0.5) * h : 0.0};
    }

    /// Faces of axis a: index i runs in [0, dims[a]] along a, other axes as cells.
    std::array<int, 3> face_dims(int axis) const {
        std::array<int, 3> f = dims;
        f[axis] += 1;
        return f;
    }

    std::int64_t face_count(int axis) const {
        auto f = face_dims(axis);
        return static_cast<std::int64_t>(f[0]) * f[1] * f[2];
    }

    std::int64_t face_index(int axis, int i, int j, int k) const {
        auto f = face_dims(axis);
        return (static_cast<std::int64_t>(k) * f[1] + j) * f[0] + i;
    }

    Vec face_center(int axis, int i, int j, int k) const {
        Vec c = {origin[0] + (i + 0.5) * h, origin[1] + (j + 0.5) * h,
                 dim > 2 ? origin[2] + (k + 0.5) * h : 0.0};
        c[axis] -= 0.5 * h;
        return c;
    }
};

struct DiscreteScalarField {
    std::vector<double> v;  // per cell
    explicit DiscreteScalarField(const MaskedGrid& g) : v(g.cell_count(), 0.0) {}
    DiscreteScalarField() = default;
};

struct DiscreteVelocityField {
    std::array<std::vector<double>, 3> comp;  // per axis face arrays
    DiscreteVelocityField() = default;
    explicit DiscreteVelocityField(const MaskedGrid& g) {
        for (int a = 0; a < g.dim; ++a) comp[a].assign(g.face_count(a), 0.0);
    }
};

/// Rasterize the perforated domain onto a uniform grid over bbox(D):
/// a cell is Hole iff its center lies in a hole ball, Exterior iff its
/// center leaves D; box indices are attached for the cut-off machinery.
/// Gate: every hole must span at least 3 cells across its diameter.
inline MaskedGrid rasterize(const PerforatedDomain& perf, const std::vector<ClusterBox>& boxes,
                            int resolution) {
    if (resolution < 4) throw PreconditionError("rasterize: resolution too small");
    MaskedGrid g;
    g.dim = perf.dim();
    Box bb = perf.domain.bounding_box();
    double longest = bb.max_side();
    g.h = longest / resolution;
    for (int a = 0; a < g.dim; ++a) {
        g.origin[a] = bb.lo[a];
        g.dims[a] = std::max(1, static_cast<int>(std::round(bb.side(a) / g.h)));
    }
    if (g.dim == 2) g.dims[2] = 1;

    double min_cells = std::numeric_limits<double>::infinity();
    for (const auto& hole : perf.holes) min_cells = std::min(min_cells, 2.0 * hole.radius / g.h);
    if (!perf.holes.empty() && min_cells < 3.0) throw UnresolvableHoles(min_cells);

    g.cls.assign(g.cell_count(), CellClass::Fluid);
    g.box_id.assign(g.cell_count(), -1);
    g.hole_id.assign(g.cell_count(), -1);

    for (int k = 0; k < g.dims[2]; ++k)
        for (int j = 0; j < g.dims[1]; ++j)
            for (int i = 0; i < g.dims[0]; ++i) {
                std::int64_t c = g.cell_index(i, j, k);
                Vec x = g.cell_center(i, j, k);
                if (!perf.domain.interior(x)) {
                    g.cls[c] = CellClass::Exterior;
                    continue;
                }
                for (std::size_t b = 0; b < boxes.size(); ++b)
                    if (boxes[b].outer.contains(x)) {
                        g.box_id[c] = static_cast<std::int32_t>(b);
                        break;
                    }
                for (std::size_t hidx = 0; hidx < perf.holes.size(); ++hidx)
                    if (perf.holes[hidx].contains(x, g.dim)) {
                        g.cls[c] = CellClass::Hole;
                        g.hole_id[c] = static_cast<std::int32_t>(hidx);
                        break;
                    }
            }
    return g;
}

// ---------------------------------------------------------------------------
// Regions: the cell subsets a divergence constraint lives on
// ---------------------------------------------------------------------------

struct Region {
    std::vector<std::uint8_t> in;       // per cell
    std::vector<std::int64_t> cells;    // sorted cell indices
    std::vector<std::int32_t> component;  // per cell, -1 outside region
    int n_components = 0;

    static Region from_mask(const MaskedGrid& g, const std::vector<std::uint8_t>& mask) {
        Region r;
        r.in = mask;
        r.component.assign(g.cell_count(), -1);
        for (std::int64_t c = 0; c < g.cell_count(); ++c)
            if (mask[c]) r.cells.push_back(c);
        // flood fill across shared faces
        std::vector<std::int64_t> stack;
        for (std::int64_t seed : r.cells) {
            if (r.component[seed] >= 0) continue;
            int comp = r.n_components++;
            stack.push_back(seed);
            r.component[seed] = comp;
            while (!stack.empty()) {
                std::int64_t c = stack.back();
                stack.pop_back();
                int i, j, k;
                g.cell_coords(c, i, j, k);
                const int di[6] = {1, -1, 0, 0, 0, 0};
                const int dj[6] = {0, 0, 1, -1, 0, 0};
                const int dk[6] = {0, 0, 0, 0, 1, -1};
                for (int n = 0; n < 2 * g.dim; ++n) {
                    int ni = i + di[n], nj = j + dj[n], nk = k + dk[n];
                    if (ni < 0 || nj < 0 || nk < 0 || ni >= g.dims[0] || nj >= g.dims[1] ||
                        nk >= g.dims[2])
                        continue;
                    std::int64_t nc = g.cell_index(ni, nj, nk);
                    if (r.in[nc] && r.component[nc] < 0) {
                        r.component[nc] = comp;
                        stack.push_back(nc);
                    }
                }
            }
        }
        return r;
    }
};

/// All cells inside D, holes included (the un-perforated global region).
inline Region global_region(const MaskedGrid& g) {
    std::vector<std::uint8_t> mask(g.cell_count(), 0);
    for (std::int64_t c = 0; c < g.cell_count(); ++c) mask[c] = g.cls[c] != CellClass::Exterior;
    return Region::from_mask(g, mask);
}

/// Fluid cells of D_eps (holes and exterior excluded).
inline Region fluid_region(const MaskedGrid& g) {
    std::vector<std::uint8_t> mask(g.cell_count(), 0);
    for (std::int64_t c = 0; c < g.cell_count(); ++c) mask[c] = g.cls[c] == CellClass::Fluid;
    return Region::from_mask(g, mask);
}

// ---------------------------------------------------------------------------
// Discrete operators and norms
// ---------------------------------------------------------------------------

/// div(u) at region cells: face-flux difference / h. Cells outside the
/// region get zero.
inline DiscreteScalarField divergence(const MaskedGrid& g, const Region& region,
                                      const DiscreteVelocityField& u) {
    DiscreteScalarField out(g);
    for (std::int64_t c : region.cells) {
        int i, j, k;
        g.cell_coords(c, i, j, k);
        double d = 0.0;
        for (int a = 0; a < g.dim; ++a) {
            int hi_i = i + (a == 0), hi_j = j + (a == 1), hi_k = k + (a == 2);
            d += u.comp[a][g.face_index(a, hi_i, hi_j, hi_k)] - u.comp[a][g.face_index(a, i, j, k)];
        }
        out.v[c] = d / g.h;
    }
    return out;
}

/// l^q norm over region cells with the h^d volume factor.
inline double lq_norm_cells(const MaskedGrid& g, const Region& region,
                            const std::vector<double>& v, double q = 2.0) {
    double s = 0.0;
    for (std::int64_t c : region.cells) s += std::pow(std::abs(v[c]), q);
    return std::pow(s * std::pow(g.h, g.dim), 1.0 / q);
}

/// Discrete gradient q-norm of a face field over a zero-pattern: for every
/// same-component neighbor pair (missing neighbors count as ghost zeros where
/// the pattern says the field vanishes there), |difference / h|^q h^d.
inline double grad_norm_q(const MaskedGrid& g, const DiscreteVelocityField& u, double q = 2.0) {
    double s = 0.0;
    for (int a = 0; a < g.dim; ++a) {
        auto fd = g.face_dims(a);
        for (int k = 0; k < fd[2]; ++k)
            for (int j = 0; j < fd[1]; ++j)
                for (int i = 0; i < fd[0]; ++i) {
                    double val = u.comp[a][g.face_index(a, i, j, k)];
                    for (int b = 0; b < g.dim; ++b) {
                        // forward difference in direction b, ghost zero past the end
                        int ni = i + (b == 0), nj = j + (b == 1), nk = k + (b == 2);
                        double nb = 0.0;
                        if (ni < fd[0] && nj < fd[1] && nk < fd[2])
                            nb = u.comp[a][g.face_index(a, ni, nj, nk)];
                        s += std::pow(std::abs(nb - val) / g.h, q);
                    }
                    // ghost zero before the start contributes the backward pair once
                    for (int b = 0; b < g.dim; ++b) {
                        bool at_lo = (b == 0 && i == 0) || (b == 1 && j == 0) || (b == 2 && k == 0);
                        if (at_lo) s += std::pow(std::abs(val) / g.h, q);
                    }
                }
    }
    return std::pow(s * std::pow(g.h, g.dim), 1.0 / q);
}

}  // namespace perfdom
