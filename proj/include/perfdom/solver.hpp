#pragma once

#include <cmath>
#include <cstring>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <fftw3.h>

#include "perfdom/grid.hpp"

namespace perfdom {

struct NonZeroMean : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonConvergence : std::runtime_error {
    int iterations;
    double residual;
    NonConvergence(const std::string& where, int iters, double resid)
        : std::runtime_error("NonConvergence in " + where + ": " + std::to_string(iters) +
                             " iterations, residual " + std::to_string(resid)),
          iterations(iters),
          residual(resid) {}
};

struct SolveOpts {
    double rtol = 1e-9;        // outer Schur-CG relative residual
    double inner_rtol = 1e-11; // component Laplacian solves
    double mean_tol = 1e-10;   // relative per-component mean drift allowed in f
    int max_outer = 2000;
    int max_inner = 200000;
};

struct SolveStats {
    int outer_iters = 0;
    double constraint_resid = 0.0;
    double optimality_resid = 0.0;
};

namespace detail {

/// Tensor Dirichlet Laplacian solve by DST-I in every direction (ghost zero
/// one spacing past each end). Plans and buffers are guarded by a mutex so a
/// shared solver stays usable from several probe threads.
class DstPoisson {
  public:
    DstPoisson() = default;
    ~DstPoisson() { reset(); }
    DstPoisson(const DstPoisson&) = delete;
    DstPoisson& operator=(const DstPoisson&) = delete;

    void init(const std::vector<int>& sizes, double h) {
        reset();
        sizes_ = sizes;
        h_ = h;
        std::int64_t n = 1;
        for (int s : sizes) n *= s;
        buf_ = fftw_alloc_real(static_cast<std::size_t>(n));
        std::vector<fftw_r2r_kind> kinds(sizes.size(), FFTW_RODFT00);
        // fftw wants row-major sizes slowest-first
        std::vector<int> rm(sizes.rbegin(), sizes.rend());
        plan_ = fftw_plan_r2r(static_cast<int>(rm.size()), rm.data(), buf_, buf_, kinds.data(),
                              FFTW_ESTIMATE);
        norm_ = 1.0;
        for (int s : sizes) norm_ *= 2.0 * (s + 1);
        eig_.clear();
        for (int s : sizes) {
            std::vector<double> e(s);
            for (int l = 0; l < s; ++l) e[l] = (2.0 - 2.0 * std::cos(M_PI * (l + 1) / (s + 1))) / (h * h);
            eig_.push_back(std::move(e));
        }
    }

    bool ready() const { return plan_ != nullptr; }

    /// In-place solve A x = b on the packed array (fastest index = sizes[0]).
    void solve(std::vector<double>& x) const {
        std::lock_guard<std::mutex> lock(mu_);
        std::memcpy(buf_, x.data(), x.size() * sizeof(double));
        fftw_execute(plan_);
        std::int64_t n0 = sizes_[0];
        std::int64_t n1 = sizes_.size() > 1 ? sizes_[1] : 1;
        std::int64_t n2 = sizes_.size() > 2 ? sizes_[2] : 1;
        for (std::int64_t k = 0; k < n2; ++k)
            for (std::int64_t j = 0; j < n1; ++j) {
                double ejk = (sizes_.size() > 1 ? eig_[1][j] : 0.0) +
                             (sizes_.size() > 2 ? eig_[2][k] : 0.0);
                double* row = buf_ + (k * n1 + j) * n0;
                for (std::int64_t i = 0; i < n0; ++i) row[i] /= (eig_[0][i] + ejk) * norm_;
            }
        fftw_execute(plan_);
        std::memcpy(x.data(), buf_, x.size() * sizeof(double));
    }

  private:
    void reset() {
        if (plan_) fftw_destroy_plan(plan_);
        if (buf_) fftw_free(buf_);
        plan_ = nullptr;
        buf_ = nullptr;
    }
    std::vector<int> sizes_;
    std::vector<std::vector<double>> eig_;
    double h_ = 1.0;
    double norm_ = 1.0;
    double* buf_ = nullptr;
    fftw_plan plan_ = nullptr;
    mutable std::mutex mu_;
};

}  // namespace detail

/// Minimal-gradient right inverse of the discrete divergence on a region:
///
///   minimize ||grad u||_2  subject to  div u = f on region cells,
///                                      u = 0 on region-boundary faces.
///
/// Realized as the saddle system A u + B^T p = 0, B u = f and solved by CG on
/// the pressure Schur complement S = B A^-1 B^T (flat-spectrum, so a scalar
/// preconditioner suffices); the component Laplacian solves use DST when the
/// region is the full rectangle and diagonal-preconditioned CG otherwise.
class DivMinSolver {
  public:
    DivMinSolver(const MaskedGrid& grid, Region region, SolveOpts opts = {})
        : g_(&grid), region_(std::move(region)), opts_(opts) {
        for (int a = 0; a < g_->dim; ++a) {
            active_[a].assign(g_->face_count(a), 0);
            auto fd = g_->face_dims(a);
            for (int k = 0; k < fd[2]; ++k)
                for (int j = 0; j < fd[1]; ++j)
                    for (int i = 0; i < fd[0]; ++i) {
                        int li = i - (a == 0), lj = j - (a == 1), lk = k - (a == 2);
                        if (li < 0 || lj < 0 || lk < 0) continue;
                        if (i >= g_->dims[0] + (a != 0 ? 0 : 1) - (a == 0 ? 1 : 0)) {
                        }
                        // high-side cell is (i,j,k) in cell coords only if in range
                        if (i >= (a == 0 ? g_->dims[0] : g_->dims[0]) ||
                            j >= (a == 1 ? g_->dims[1] : g_->dims[1]) ||
                            k >= (a == 2 ? g_->dims[2] : g_->dims[2]))
                            continue;
                        if (i >= g_->dims[0] && a != 0) continue;
                        std::int64_t chi = g_->cell_index(i, j, k);
                        std::int64_t clo = g_->cell_index(li, lj, lk);
                        if (region_.in[chi] && region_.in[clo])
                            active_[a][g_->face_index(a, i, j, k)] = 1;
                    }
        }
        full_rect_ = static_cast<std::int64_t>(region_.cells.size()) == g_->cell_count();
        if (full_rect_) {
            for (int a = 0; a < g_->dim; ++a) {
                std::vector<int> sizes;
                sizes.push_back(g_->dims[0] - (a == 0 ? 1 : 0));
                sizes.push_back(g_->dims[1] - (a == 1 ? 1 : 0));
                if (g_->dim > 2) sizes.push_back(g_->dims[2] - (a == 2 ? 1 : 0));
                dst_[a].init(sizes, g_->h);
            }
        }
        comp_cells_.assign(region_.n_components, 0);
        for (std::int64_t c : region_.cells) ++comp_cells_[region_.component[c]];
    }

    const Region& region() const { return region_; }
    const std::vector<std::uint8_t>& active_faces(int axis) const { return active_[axis]; }
    const SolveStats& stats() const { return stats_; }

    /// f lives on cells (values outside the region are ignored). Per-component
    /// mean drift up to mean_tol (relative) is removed; more is an error.
    DiscreteVelocityField solve(const std::vector<double>& f_cells) const {
        std::vector<double> f = project_mean(f_cells, /*enforce=*/true);
        double fn = norm_cells(f);
        DiscreteVelocityField u(*g_);
        if (fn == 0.0) return u;

        // CG on S p = -f
        std::vector<double> p(g_->cell_count(), 0.0), r(f), d, q;
        for (double& v : r) v = -v;
        mask_cells(r);
        d = r;
        double rho = dot_cells(r, r);
        double rtol2 = opts_.rtol * opts_.rtol * dot_cells(f, f);
        int it = 0;
        DiscreteVelocityField w(*g_);
        for (; it < opts_.max_outer && rho > rtol2; ++it) {
            apply_S(d, q, w);
            double alpha = rho / dot_cells(d, q);
            axpy_cells(p, d, alpha);
            axpy_cells(r, q, -alpha);
            double rho2 = dot_cells(r, r);
            d_update(d, r, rho2 / rho);
            rho = rho2;
        }
        if (rho > rtol2) throw NonConvergence("schur-cg", it, std::sqrt(rho / dot_cells(f, f)));

        // u = A^-1 B^T (-p)
        DiscreteVelocityField bt(*g_);
        apply_BT(p, bt);
        for (int a = 0; a < g_->dim; ++a)
            for (auto& v : bt.comp[a]) v = -v;
        DiscreteVelocityField out(*g_);
        inner_solve(bt, out);

        stats_.outer_iters = it;
        auto div = divergence(*g_, region_, out);
        double err = 0.0;
        for (std::int64_t c : region_.cells) err += (div.v[c] - f[c]) * (div.v[c] - f[c]);
        stats_.constraint_resid = std::sqrt(err) / fn;
        // optimality: ||A u + B^T p|| / ||B^T p||
        DiscreteVelocityField au(*g_);
        apply_A(out, au);
        double num = 0.0, den = 0.0;
        for (int a = 0; a < g_->dim; ++a)
            for (std::size_t i = 0; i < au.comp[a].size(); ++i) {
                double bv = -bt.comp[a][i];
                num += (au.comp[a][i] + bv) * (au.comp[a][i] + bv);
                den += bv * bv;
            }
        stats_.optimality_resid = den > 0 ? std::sqrt(num / den) : 0.0;
        return out;
    }

    /// Transpose of the solution map f -> u, i.e. S^-1 B A^-1 applied to a
    /// face field (used by the operator-norm power iteration).
    std::vector<double> solve_transpose(const DiscreteVelocityField& v_in) const {
        DiscreteVelocityField v(*g_);
        for (int a = 0; a < g_->dim; ++a)
            for (std::size_t i = 0; i < v.comp[a].size(); ++i)
                v.comp[a][i] = active_[a][i] ? v_in.comp[a][i] : 0.0;
        DiscreteVelocityField w(*g_);
        inner_solve(v, w);
        auto bw = divergence(*g_, region_, w);
        std::vector<double> gcell = project_mean(bw.v, /*enforce=*/false);

        std::vector<double> q(g_->cell_count(), 0.0), r(gcell), d, t;
        mask_cells(r);
        double gn2 = dot_cells(gcell, gcell);
        if (gn2 == 0.0) return q;
        d = r;
        double rho = dot_cells(r, r);
        double rtol2 = opts_.rtol * opts_.rtol * gn2;
        DiscreteVelocityField scratch(*g_);
        int it = 0;
        for (; it < opts_.max_outer && rho > rtol2; ++it) {
            apply_S(d, t, scratch);
            double alpha = rho / dot_cells(d, t);
            axpy_cells(q, d, alpha);
            axpy_cells(r, t, -alpha);
            double rho2 = dot_cells(r, r);
            d_update(d, r, rho2 / rho);
            rho = rho2;
        }
        if (rho > rtol2) throw NonConvergence("schur-cg-adjoint", it, std::sqrt(rho / gn2));
        return q;
    }

  private:
    const MaskedGrid* g_;
    Region region_;
    SolveOpts opts_;
    std::array<std::vector<std::uint8_t>, 3> active_;
    bool full_rect_ = false;
    mutable std::array<detail::DstPoisson, 3> dst_;
    std::vector<std::int64_t> comp_cells_;
    mutable SolveStats stats_;

    double norm_cells(const std::vector<double>& f) const {
        double s = 0.0;
        for (std::int64_t c : region_.cells) s += f[c] * f[c];
        return std::sqrt(s);
    }

    double dot_cells(const std::vector<double>& a, const std::vector<double>& b) const {
        double s = 0.0;
        for (std::int64_t c : region_.cells) s += a[c] * b[c];
        return s;
    }

    void axpy_cells(std::vector<double>& y, const std::vector<double>& x, double alpha) const {
        for (std::int64_t c : region_.cells) y[c] += alpha * x[c];
    }

    void d_update(std::vector<double>& d, const std::vector<double>& r, double beta) const {
        for (std::int64_t c : region_.cells) d[c] = r[c] + beta * d[c];
    }

    void mask_cells(std::vector<double>& v) const {
        for (std::int64_t c = 0; c < g_->cell_count(); ++c)
            if (!region_.in[c]) v[c] = 0.0;
    }

    /// Remove per-component means. enforce: error out when the drift exceeds
    /// the tolerance instead of silently fixing a wrong right-hand side.
    std::vector<double> project_mean(const std::vector<double>& f, bool enforce) const {
        std::vector<double> out(g_->cell_count(), 0.0);
        std::vector<double> sum(region_.n_components, 0.0), asum(region_.n_components, 0.0);
        for (std::int64_t c : region_.cells) {
            sum[region_.component[c]] += f[c];
            asum[region_.component[c]] += std::abs(f[c]);
        }
        for (int comp = 0; comp < region_.n_components; ++comp) {
            if (enforce && asum[comp] > 0.0 && std::abs(sum[comp]) > opts_.mean_tol * asum[comp])
                throw NonZeroMean("solve_div_minimal: right-hand side mean " +
                                  std::to_string(sum[comp] / asum[comp]) +
                                  " (relative) on component " + std::to_string(comp));
        }
        for (std::int64_t c : region_.cells) {
            int comp = region_.component[c];
            out[c] = f[c] - sum[comp] / static_cast<double>(comp_cells_[comp]);
        }
        return out;
    }

    void apply_BT(const std::vector<double>& p, DiscreteVelocityField& out) const {
        for (int a = 0; a < g_->dim; ++a) {
            auto fd = g_->face_dims(a);
            for (int k = 0; k < fd[2]; ++k)
                for (int j = 0; j < fd[1]; ++j)
                    for (int i = 0; i < fd[0]; ++i) {
                        std::int64_t f = g_->face_index(a, i, j, k);
                        if (!active_[a][f]) {
                            out.comp[a][f] = 0.0;
                            continue;
                        }
                        std::int64_t chi = g_->cell_index(i, j, k);
                        std::int64_t clo = g_->cell_index(i - (a == 0), j - (a == 1), k - (a == 2));
                        out.comp[a][f] = (p[clo] - p[chi]) / g_->h;
                    }
        }
    }

    void apply_A(const DiscreteVelocityField& u, DiscreteVelocityField& out) const {
        double inv_h2 = 1.0 / (g_->h * g_->h);
        for (int a = 0; a < g_->dim; ++a) {
            auto fd = g_->face_dims(a);
            for (int k = 0; k < fd[2]; ++k)
                for (int j = 0; j < fd[1]; ++j)
                    for (int i = 0; i < fd[0]; ++i) {
                        std::int64_t f = g_->face_index(a, i, j, k);
                        if (!active_[a][f]) {
                            out.comp[a][f] = 0.0;
                            continue;
                        }
                        double center = u.comp[a][f];
                        double acc = 2.0 * g_->dim * center;
                        for (int b = 0; b < g_->dim; ++b) {
                            for (int sgn = -1; sgn <= 1; sgn += 2) {
                                int ni = i + sgn * (b == 0), nj = j + sgn * (b == 1),
                                    nk = k + sgn * (b == 2);
                                if (ni < 0 || nj < 0 || nk < 0 || ni >= fd[0] || nj >= fd[1] ||
                                    nk >= fd[2])
                                    continue;  // ghost zero
                                std::int64_t nf = g_->face_index(a, ni, nj, nk);
                                if (active_[a][nf]) acc -= u.comp[a][nf];
                            }
                        }
                        out.comp[a][f] = acc * inv_h2;
                    }
        }
    }

    /// out = A^-1 rhs on active faces.
    void inner_solve(const DiscreteVelocityField& rhs, DiscreteVelocityField& out) const {
        if (full_rect_) {
            for (int a = 0; a < g_->dim; ++a) {
                // pack active faces (strip the two constrained boundary layers
                // along the normal axis)
                auto fd = g_->face_dims(a);
                int n0 = g_->dims[0] - (a == 0 ? 1 : 0);
                int n1 = g_->dims[1] - (a == 1 ? 1 : 0);
                int n2 = g_->dim > 2 ? g_->dims[2] - (a == 2 ? 1 : 0) : 1;
                std::vector<double> packed(static_cast<std::size_t>(n0) * n1 * n2);
                int oi = a == 0 ? 1 : 0, oj = a == 1 ? 1 : 0, ok = a == 2 ? 1 : 0;
                for (int k = 0; k < n2; ++k)
                    for (int j = 0; j < n1; ++j)
                        for (int i = 0; i < n0; ++i)
                            packed[(static_cast<std::size_t>(k) * n1 + j) * n0 + i] =
                                rhs.comp[a][g_->face_index(a, i + oi, j + oj, k + ok)];
                dst_[a].solve(packed);
                std::fill(out.comp[a].begin(), out.comp[a].end(), 0.0);
                for (int k = 0; k < n2; ++k)
                    for (int j = 0; j < n1; ++j)
                        for (int i = 0; i < n0; ++i)
                            out.comp[a][g_->face_index(a, i + oi, j + oj, k + ok)] =
                                packed[(static_cast<std::size_t>(k) * n1 + j) * n0 + i];
                (void)fd;
            }
            return;
        }
        // masked: CG per component (constant diagonal, so plain CG)
        for (int a = 0; a < g_->dim; ++a) {
            std::vector<double>& x = out.comp[a];
            std::fill(x.begin(), x.end(), 0.0);
            std::vector<double> r(rhs.comp[a]);
            for (std::size_t i = 0; i < r.size(); ++i)
                if (!active_[a][i]) r[i] = 0.0;
            double b2 = 0.0;
            for (double v : r) b2 += v * v;
            if (b2 == 0.0) continue;
            std::vector<double> d(r), q(r.size(), 0.0);
            double rho = b2;
            double tol2 = opts_.inner_rtol * opts_.inner_rtol * b2;
            DiscreteVelocityField tmp_in(*g_), tmp_out(*g_);
            int it = 0;
            for (; it < opts_.max_inner && rho > tol2; ++it) {
                apply_A_component(a, d, q);
                double dq = 0.0;
                for (std::size_t i = 0; i < d.size(); ++i) dq += d[i] * q[i];
                double alpha = rho / dq;
                for (std::size_t i = 0; i < x.size(); ++i) x[i] += alpha * d[i];
                for (std::size_t i = 0; i < r.size(); ++i) r[i] -= alpha * q[i];
                double rho2 = 0.0;
                for (double v : r) rho2 += v * v;
                double beta = rho2 / rho;
                for (std::size_t i = 0; i < d.size(); ++i) d[i] = r[i] + beta * d[i];
                rho = rho2;
            }
            if (rho > tol2) throw NonConvergence("laplace-cg", it, std::sqrt(rho / b2));
        }
    }

    void apply_A_component(int a, const std::vector<double>& u, std::vector<double>& out) const {
        double inv_h2 = 1.0 / (g_->h * g_->h);
        auto fd = g_->face_dims(a);
        for (int k = 0; k < fd[2]; ++k)
            for (int j = 0; j < fd[1]; ++j)
                for (int i = 0; i < fd[0]; ++i) {
                    std::int64_t f = g_->face_index(a, i, j, k);
                    if (!active_[a][f]) {
                        out[f] = 0.0;
                        continue;
                    }
                    double acc = 2.0 * g_->dim * u[f];
                    for (int b = 0; b < g_->dim; ++b)
                        for (int sgn = -1; sgn <= 1; sgn += 2) {
                            int ni = i + sgn * (b == 0), nj = j + sgn * (b == 1),
                                nk = k + sgn * (b == 2);
                            if (ni < 0 || nj < 0 || nk < 0 || ni >= fd[0] || nj >= fd[1] ||
                                nk >= fd[2])
                                continue;
                            std::int64_t nf = g_->face_index(a, ni, nj, nk);
                            if (active_[a][nf]) acc -= u[nf];
                        }
                    out[f] = acc * inv_h2;
                }
    }

    /// q = S d = B A^-1 B^T d.
    void apply_S(const std::vector<double>& d, std::vector<double>& q,
                 DiscreteVelocityField& scratch) const {
        DiscreteVelocityField bt(*g_);
        apply_BT(d, bt);
        inner_solve(bt, scratch);
        auto div = divergence(*g_, region_, scratch);
        q = div.v;
    }
};

/// Spec-facing wrapper: minimal-gradient field with div u = f on the region.
inline DiscreteVelocityField solve_div_minimal(const DiscreteScalarField& f, const MaskedGrid& grid,
                                               const Region& region, SolveOpts opts = {},
                                               SolveStats* stats = nullptr) {
    DivMinSolver solver(grid, region, opts);
    auto u = solver.solve(f.v);
    if (stats) *stats = solver.stats();
    return u;
}

}  // namespace perfdom
