#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>

#include "sparsedisc/sls.hpp"

namespace sparsedisc {

namespace {

constexpr double kStrictMargin   = 1e-9;
constexpr double kRankThreshold  = 1e-10;
constexpr double kStatusTol      = 1e-6;
constexpr int    kAdaptInterval  = 50;
constexpr int    kPolishInterval = 100;
constexpr int    kMaxPolish      = 20;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// One decision variable: entry (row, column j) of Phi_x[tap + 1] or Phi_u[tap + 1].
struct VarRef {
    bool is_u = false;
    Index tap = 0;
    Index row = 0;
};

// Everything about one column of (Phi_x, Phi_u). Variables v, reduced coordinates y
// with v = v0 + basis * y, cost rows q y + q0, capped rows k y + k0.
struct ColumnSystem {
    Index column = 0;
    std::vector<VarRef> vars;
    Matrix e;
    Vector e0;
    Vector v0;
    Matrix basis;
    double eq_residual = 0.0;
    Matrix q;
    Vector q0;
    Matrix k;
    Vector k0;
    std::vector<Index> w_rows;  // position of each capped row inside the column block (t * p + i)

    // x-update: W_active = w_fix + r * c, y = y_fix + hinv_kt * (c - k0)
    Matrix hinv_kt;
    Vector y_fix;
    Matrix r;
    Vector w_fix;
    Vector c;
    Vector y;
    double seconds = 0.0;
};

// Shapes shared by all columns.
struct Layout {
    Index n = 0;
    Index nu = 0;
    Index horizon = 0;
    Index p = 0;  // rows of the capped transfer
    Index cost_rows = 0;
    bool robust = false;
    double sx = 1.0;
    double su = 1.0;
    std::vector<Index> columns;

    [[nodiscard]] Index block() const { return horizon * p; }
    [[nodiscard]] Index w_size() const { return static_cast<Index>(columns.size()) * block(); }
};

// Residual map rows t * n + i for Delta[t + 1](i, j), constant included.
void residual_map(const DiscretePlant& plant, const Layout& lay, const ColumnSystem& cs, Matrix& map, Vector& offset) {
    const Index n = lay.n;
    map = Matrix::Zero(n * lay.horizon, static_cast<Index>(cs.vars.size()));
    offset = Vector::Zero(n * lay.horizon);
    offset.head(n) = -plant.a.col(cs.column);
    for (Index v = 0; v < static_cast<Index>(cs.vars.size()); ++v) {
        const VarRef& ref = cs.vars[static_cast<std::size_t>(v)];
        if (ref.is_u) {
            map.block(ref.tap * n, v, n, 1) = -plant.b2.col(ref.row);
        } else {
            map(ref.tap * n - n + ref.row, v) += 1.0;
            map.block(ref.tap * n, v, n, 1) -= plant.a.col(ref.row);
        }
    }
}

void cost_map(const DiscretePlant& plant, const Layout& lay, const ColumnSystem& cs, Matrix& map, Vector& offset) {
    const Index pc = lay.cost_rows;
    map = Matrix::Zero(pc * lay.horizon, static_cast<Index>(cs.vars.size()));
    offset = Vector::Zero(pc * lay.horizon);
    offset.head(pc) = plant.c1.col(cs.column);
    for (Index v = 0; v < static_cast<Index>(cs.vars.size()); ++v) {
        const VarRef& ref = cs.vars[static_cast<std::size_t>(v)];
        map.block(ref.tap * pc, v, pc, 1) = ref.is_u ? plant.d12.col(ref.row) : plant.c1.col(ref.row);
    }
}

// Scaled stack [sx Phi_x; su Phi_u], rows t * p + i.
void stacked_map(const Layout& lay, const ColumnSystem& cs, Matrix& map, Vector& offset) {
    const Index p = lay.p;
    map = Matrix::Zero(p * lay.horizon, static_cast<Index>(cs.vars.size()));
    offset = Vector::Zero(p * lay.horizon);
    offset(cs.column) = lay.sx;
    for (Index v = 0; v < static_cast<Index>(cs.vars.size()); ++v) {
        const VarRef& ref = cs.vars[static_cast<std::size_t>(v)];
        if (ref.is_u) {
            map(ref.tap * p + lay.n + ref.row, v) = lay.su;
        } else {
            map(ref.tap * p + ref.row, v) = lay.sx;
        }
    }
}

// Drops rows that are identically zero.
void keep_active_rows(const Matrix& map, const Vector& offset, ColumnSystem& cs, Matrix& out, Vector& out0) {
    cs.w_rows.clear();
    for (Index r = 0; r < map.rows(); ++r) {
        if (offset(r) != 0.0 || (map.cols() > 0 && map.row(r).cwiseAbs().maxCoeff() > 0.0)) {
            cs.w_rows.push_back(r);
        }
    }
    out.resize(static_cast<Index>(cs.w_rows.size()), map.cols());
    out0.resize(static_cast<Index>(cs.w_rows.size()));
    for (std::size_t r = 0; r < cs.w_rows.size(); ++r) {
        out.row(static_cast<Index>(r)) = map.row(cs.w_rows[r]);
        out0(static_cast<Index>(r)) = offset(cs.w_rows[r]);
    }
}

void append_rows(Matrix& e, Vector& e0, const Matrix& rows, const Vector& rhs) {
    Matrix e_new(e.rows() + rows.rows(), rows.cols());
    e_new << e, rows;
    Vector e0_new(e0.size() + rhs.size());
    e0_new << e0, rhs;
    e = std::move(e_new);
    e0 = std::move(e0_new);
}

// v0 = min-norm solution of e v = e0, basis = orthonormal nullspace of e.
void reduce(ColumnSystem& cs) {
    const Index nv = static_cast<Index>(cs.vars.size());
    if (cs.e.rows() == 0 || nv == 0) {
        cs.v0 = Vector::Zero(nv);
        cs.basis = Matrix::Identity(nv, nv);
        cs.eq_residual = inf_norm(cs.e0);
        return;
    }
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
    cod.setThreshold(kRankThreshold);
    cod.compute(cs.e);
    cs.v0 = cod.solve(cs.e0);
    cs.eq_residual = inf_norm(cs.e * cs.v0 - cs.e0);

    Eigen::ColPivHouseholderQR<Matrix> qr;
    qr.setThreshold(kRankThreshold);
    qr.compute(cs.e.transpose());
    const Index rank = qr.rank();
    const Matrix full_q = qr.householderQ() * Matrix::Identity(nv, nv);
    cs.basis = full_q.rightCols(nv - rank);
}

bool eq_feasible(const ColumnSystem& cs) { return cs.eq_residual <= 1e-8 * std::max(1.0, inf_norm(cs.e0)); }

// ============================================================================
// Constraint ball in the space of the capped transfer
// ============================================================================

class CapSet {
public:
    CapSet(DeltaNorm norm, const Layout& lay, int grid) : norm_(norm), lay_(lay), grid_(grid) {
        const Index nc = static_cast<Index>(lay.columns.size());
        if (norm == DeltaNorm::L1) {
            groups_.assign(static_cast<std::size_t>(lay.p), {});
            for (Index c = 0; c < nc; ++c) {
                for (Index t = 0; t < lay.horizon; ++t) {
                    for (Index i = 0; i < lay.p; ++i) {
                        groups_[static_cast<std::size_t>(i)].push_back(index(c, t, i));
                    }
                }
            }
        } else if (norm == DeltaNorm::E1) {
            groups_.assign(static_cast<std::size_t>(nc), {});
            for (Index c = 0; c < nc; ++c) {
                for (Index r = 0; r < lay.block(); ++r) {
                    groups_[static_cast<std::size_t>(c)].push_back(c * lay.block() + r);
                }
            }
        } else {
            cos_.resize(grid, lay.horizon);
            sin_.resize(grid, lay.horizon);
            for (int m = 0; m < grid; ++m) {
                const double theta = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(grid);
                for (Index t = 0; t < lay.horizon; ++t) {
                    cos_(m, t) = std::cos(static_cast<double>(t + 1) * theta);
                    sin_(m, t) = std::sin(static_cast<double>(t + 1) * theta);
                }
            }
        }
    }

    [[nodiscard]] Index dim() const {
        if (norm_ == DeltaNorm::HinfSampled) {
            return 2 * grid_ * lay_.p * static_cast<Index>(lay_.columns.size());
        }
        return lay_.w_size();
    }

    // forward(adjoint(.)) restricted to the time domain equals gram() * identity.
    [[nodiscard]] double gram() const { return norm_ == DeltaNorm::HinfSampled ? grid_ : 1.0; }

    void forward(const Vector& w, Vector& z) const {
        if (norm_ != DeltaNorm::HinfSampled) {
            z = w;
            return;
        }
        z.setZero(dim());
        const Index pn = lay_.p * static_cast<Index>(lay_.columns.size());
        for (int m = 0; m < grid_; ++m) {
            auto re = z.segment(2 * m * pn, pn);
            auto im = z.segment(2 * m * pn + pn, pn);
            for (Index c = 0; c < static_cast<Index>(lay_.columns.size()); ++c) {
                for (Index t = 0; t < lay_.horizon; ++t) {
                    const auto tap = w.segment(index(c, t, 0), lay_.p);
                    re.segment(c * lay_.p, lay_.p) += cos_(m, t) * tap;
                    im.segment(c * lay_.p, lay_.p) -= sin_(m, t) * tap;
                }
            }
        }
    }

    void adjoint(const Vector& z, Vector& w) const {
        if (norm_ != DeltaNorm::HinfSampled) {
            w = z;
            return;
        }
        w.setZero(lay_.w_size());
        const Index pn = lay_.p * static_cast<Index>(lay_.columns.size());
        for (int m = 0; m < grid_; ++m) {
            const auto re = z.segment(2 * m * pn, pn);
            const auto im = z.segment(2 * m * pn + pn, pn);
            for (Index c = 0; c < static_cast<Index>(lay_.columns.size()); ++c) {
                for (Index t = 0; t < lay_.horizon; ++t) {
                    w.segment(index(c, t, 0), lay_.p) +=
                        cos_(m, t) * re.segment(c * lay_.p, lay_.p) - sin_(m, t) * im.segment(c * lay_.p, lay_.p);
                }
            }
        }
    }

    void project(Vector& z, double radius) const {
        if (norm_ != DeltaNorm::HinfSampled) {
            Vector buf;
            for (const auto& g : groups_) {
                buf.resize(static_cast<Index>(g.size()));
                for (std::size_t a = 0; a < g.size(); ++a) {
                    buf(static_cast<Index>(a)) = z(g[a]);
                }
                project_l1_ball(buf, radius);
                for (std::size_t a = 0; a < g.size(); ++a) {
                    z(g[a]) = buf(static_cast<Index>(a));
                }
            }
            return;
        }
        for (int m = 0; m < grid_; ++m) {
            Eigen::MatrixXcd zm = frequency_block(z, m);
            Eigen::BDCSVD<Eigen::MatrixXcd> svd(zm, Eigen::ComputeThinU | Eigen::ComputeThinV);
            const Vector& sv = svd.singularValues();
            if (sv.size() == 0 || sv(0) <= radius) {
                continue;
            }
            const Vector clipped = sv.cwiseMin(radius);
            zm = svd.matrixU() * clipped.cast<std::complex<double>>().asDiagonal() * svd.matrixV().adjoint();
            store_frequency_block(zm, m, z);
        }
    }

    // Sampled Hinf only. Appends the cut Re(u^H Z_m v) <= radius for every singular pair (u, v) of
    // every frequency block Z_m whose singular value exceeds `threshold`; returns the largest.
    double cuts(const Vector& w, double threshold, std::vector<Vector>& out) const {
        double worst = 0.0;
        const Index nc = static_cast<Index>(lay_.columns.size());
        for (int m = 0; m <= grid_ / 2; ++m) {
            Eigen::MatrixXcd zm = Eigen::MatrixXcd::Zero(lay_.p, nc);
            for (Index c = 0; c < nc; ++c) {
                for (Index t = 0; t < lay_.horizon; ++t) {
                    zm.col(c) += std::complex<double>(cos_(m, t), -sin_(m, t)) *
                                 w.segment(index(c, t, 0), lay_.p).cast<std::complex<double>>();
                }
            }
            if (zm.size() == 0) {
                continue;
            }
            Eigen::JacobiSVD<Eigen::MatrixXcd> svd(zm, Eigen::ComputeThinU | Eigen::ComputeThinV);
            const Vector& sv = svd.singularValues();
            worst = std::max(worst, sv(0));
            for (Index k = 0; k < sv.size() && sv(k) > threshold; ++k) {
                Vector cut = Vector::Zero(w.size());
                for (Index c = 0; c < nc; ++c) {
                    for (Index t = 0; t < lay_.horizon; ++t) {
                        const std::complex<double> ph(cos_(m, t), -sin_(m, t));
                        for (Index i = 0; i < lay_.p; ++i) {
                            cut(index(c, t, i)) = (svd.matrixV()(c, k) * std::conj(svd.matrixU()(i, k)) * ph).real();
                        }
                    }
                }
                out.push_back(std::move(cut));
            }
        }
        return worst;
    }

    [[nodiscard]] bool sampled() const { return norm_ == DeltaNorm::HinfSampled; }

    [[nodiscard]] double norm(const Vector& z) const { return group_reduce(z, false); }
    [[nodiscard]] double dual_norm(const Vector& y) const { return group_reduce(y, true); }

private:
    [[nodiscard]] Index index(Index c, Index t, Index i) const { return c * lay_.block() + t * lay_.p + i; }

    [[nodiscard]] Eigen::MatrixXcd frequency_block(const Vector& z, int m) const {
        const Index nc = static_cast<Index>(lay_.columns.size());
        const Index pn = lay_.p * nc;
        Eigen::MatrixXcd out(lay_.p, nc);
        for (Index c = 0; c < nc; ++c) {
            for (Index i = 0; i < lay_.p; ++i) {
                out(i, c) = {z(2 * m * pn + c * lay_.p + i), z(2 * m * pn + pn + c * lay_.p + i)};
            }
        }
        return out;
    }

    void store_frequency_block(const Eigen::MatrixXcd& zm, int m, Vector& z) const {
        const Index nc = static_cast<Index>(lay_.columns.size());
        const Index pn = lay_.p * nc;
        for (Index c = 0; c < nc; ++c) {
            for (Index i = 0; i < lay_.p; ++i) {
                z(2 * m * pn + c * lay_.p + i) = zm(i, c).real();
                z(2 * m * pn + pn + c * lay_.p + i) = zm(i, c).imag();
            }
        }
    }

    // Group max of l1 norms (dual: sum of group max-abs); Hinf: max sigma (dual: sum of nuclear norms).
    [[nodiscard]] double group_reduce(const Vector& z, bool dual) const {
        double out = 0.0;
        if (norm_ != DeltaNorm::HinfSampled) {
            for (const auto& g : groups_) {
                double acc = 0.0;
                for (const Index idx : g) {
                    acc = dual ? std::max(acc, std::abs(z(idx))) : acc + std::abs(z(idx));
                }
                out = dual ? out + acc : std::max(out, acc);
            }
            return out;
        }
        for (int m = 0; m < grid_; ++m) {
            const Eigen::MatrixXcd zm = frequency_block(z, m);
            if (zm.size() == 0) {
                continue;
            }
            Eigen::BDCSVD<Eigen::MatrixXcd> svd(zm);
            out = dual ? out + svd.singularValues().sum() : std::max(out, svd.singularValues()(0));
        }
        return out;
    }

    // Euclidean projection onto the l1 ball of the given radius.
    static void project_l1_ball(Vector& v, double radius) {
        if (v.cwiseAbs().sum() <= radius) {
            return;
        }
        if (radius <= 0.0) {
            v.setZero();
            return;
        }
        std::vector<double> mags(v.size());
        for (Index i = 0; i < v.size(); ++i) {
            mags[static_cast<std::size_t>(i)] = std::abs(v(i));
        }
        std::sort(mags.begin(), mags.end(), std::greater<>());
        double cumulative = 0.0;
        double theta = 0.0;
        for (std::size_t k = 0; k < mags.size(); ++k) {
            cumulative += mags[k];
            const double candidate = (cumulative - radius) / static_cast<double>(k + 1);
            if (mags[k] - candidate > 0.0) {
                theta = candidate;
            } else {
                break;
            }
        }
        for (Index i = 0; i < v.size(); ++i) {
            const double mag = std::max(std::abs(v(i)) - theta, 0.0);
            v(i) = v(i) >= 0.0 ? mag : -mag;
        }
    }

    DeltaNorm norm_;
    const Layout& lay_;
    int grid_;
    std::vector<std::vector<Index>> groups_;
    Matrix cos_;
    Matrix sin_;
};

// ============================================================================
// Column setup and solvers
// ============================================================================

ColumnSystem build_column(const DiscretePlant& plant, const LocalityConstraint& loc, const Layout& lay, Index j,
                          bool exact) {
    const auto start = Clock::now();
    ColumnSystem cs;
    cs.column = j;
    for (Index t = 1; t < lay.horizon; ++t) {
        for (Index i = 0; i < lay.n; ++i) {
            if (loc.x_masks[static_cast<std::size_t>(t)](i, j)) {
                cs.vars.push_back({false, t, i});
            }
        }
    }
    for (Index t = 0; t < lay.horizon; ++t) {
        for (Index a = 0; a < lay.nu; ++a) {
            if (loc.u_masks[static_cast<std::size_t>(t)](a, j)) {
                cs.vars.push_back({true, t, a});
            }
        }
    }

    Matrix g;
    Vector g0;
    cost_map(plant, lay, cs, g, g0);

    Matrix delta;
    Vector delta0;
    residual_map(plant, lay, cs, delta, delta0);

    Matrix w_full;
    Vector w_full0;
    if (lay.robust) {
        cs.e = delta;
        cs.e0 = -delta0;
        stacked_map(lay, cs, w_full, w_full0);
    } else {
        cs.e.resize(0, static_cast<Index>(cs.vars.size()));
        cs.e0.resize(0);
        w_full = std::move(delta);
        w_full0 = std::move(delta0);
    }
    Matrix l;
    Vector l0;
    keep_active_rows(w_full, w_full0, cs, l, l0);
    if (exact) {
        append_rows(cs.e, cs.e0, l, -l0);
    }
    reduce(cs);

    cs.q = g * cs.basis;
    cs.q0 = g * cs.v0 + g0;
    cs.k = l * cs.basis;
    cs.k0 = l * cs.v0 + l0;
    cs.y = Vector::Zero(cs.basis.cols());
    cs.seconds = seconds_since(start);
    return cs;
}

void solve_exact(ColumnSystem& cs) {
    const auto start = Clock::now();
    if (cs.q.cols() == 0) {
        cs.y.resize(0);
    } else {
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
        cod.setThreshold(kRankThreshold);
        cod.compute(cs.q);
        cs.y = cod.solve(-cs.q0);
    }
    cs.seconds += seconds_since(start);
}

void factor_column(ColumnSystem& cs, double rho_scaled) {
    const auto start = Clock::now();
    const Index r = cs.q.cols();
    Matrix h = 2.0 * cs.q.transpose() * cs.q + rho_scaled * cs.k.transpose() * cs.k;
    const double ridge = 1e-12 * std::max(1.0, r > 0 ? h.diagonal().maxCoeff() : 1.0);
    h.diagonal().array() += ridge;
    Eigen::LLT<Matrix> llt(h);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("synthesize: x-update system is not positive definite");
    }
    cs.hinv_kt = rho_scaled * llt.solve(cs.k.transpose());
    cs.y_fix = llt.solve(-2.0 * cs.q.transpose() * cs.q0);
    cs.r = cs.k * cs.hinv_kt;
    cs.w_fix = cs.k0 + cs.k * cs.y_fix - cs.r * cs.k0;
    cs.seconds += seconds_since(start);
}

std::vector<VarRef>::size_type var_count(const ColumnSystem& cs) { return cs.vars.size(); }

// ============================================================================
// Cutting-plane polish for the sampled Hinf cap
// ============================================================================

// Lawson-Hanson nonnegative least squares min |E u - f| over u >= 0, posed on the Gram data
// G = E^T E and b = E^T f so the work scales with the number of columns of E.
Vector nnls_gram(const Matrix& g, const Vector& b) {
    const Index m = g.rows();
    Vector u = Vector::Zero(m);
    std::vector<bool> passive(static_cast<std::size_t>(m), false);
    const double tol = 1e-14 * std::max(1.0, g.diagonal().maxCoeff()) * static_cast<double>(std::max<Index>(m, 1));
    Vector w = b;
    const int cap = 3 * static_cast<int>(m) + 10;
    for (int outer = 0; outer < cap; ++outer) {
        Index best = -1;
        for (Index j = 0; j < m; ++j) {
            if (!passive[static_cast<std::size_t>(j)] && w(j) > tol && (best < 0 || w(j) > w(best))) {
                best = j;
            }
        }
        if (best < 0) {
            break;
        }
        passive[static_cast<std::size_t>(best)] = true;
        for (int inner = 0; inner < cap; ++inner) {
            std::vector<Index> idx;
            for (Index j = 0; j < m; ++j) {
                if (passive[static_cast<std::size_t>(j)]) {
                    idx.push_back(j);
                }
            }
            const auto np = static_cast<Index>(idx.size());
            Matrix gp(np, np);
            Vector bp(np);
            for (Index a = 0; a < np; ++a) {
                bp(a) = b(idx[static_cast<std::size_t>(a)]);
                for (Index c = 0; c < np; ++c) {
                    gp(a, c) = g(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(c)]);
                }
            }
            const Vector zp = gp.colPivHouseholderQr().solve(bp);
            bool all_positive = true;
            double step = 1.0;
            for (Index a = 0; a < np; ++a) {
                if (zp(a) <= 0.0) {
                    all_positive = false;
                    const double uj = u(idx[static_cast<std::size_t>(a)]);
                    step = std::min(step, uj / (uj - zp(a)));
                }
            }
            if (all_positive) {
                u.setZero();
                for (Index a = 0; a < np; ++a) {
                    u(idx[static_cast<std::size_t>(a)]) = zp(a);
                }
                break;
            }
            for (Index a = 0; a < np; ++a) {
                const Index j = idx[static_cast<std::size_t>(a)];
                u(j) += step * (zp(a) - u(j));
                if (u(j) <= 1e-15) {
                    u(j) = 0.0;
                    passive[static_cast<std::size_t>(j)] = false;
                }
            }
        }
        w = b - g * u;
    }
    return u;
}

// Cutting-plane finish for a nearly converged ADMM run. Every cut g . W(y) <= r is valid for the
// cap, so the QP over the accumulated cuts is a relaxation; once its minimizer meets the cap it
// solves the capped problem. In coordinates x = L^T (y - y_unc), H = L L^T, the QP is a
// least-distance program, solved exactly through NNLS on its dual.
struct PolishResult {
    bool ok = false;
    double kkt = 0.0;
    double sensitivity = 0.0;
};

PolishResult polish(std::vector<ColumnSystem>& cols, const Layout& lay, const CapSet& cap, double radius) {
    PolishResult res;
    const std::size_t nc = cols.size();
    const Index block = lay.block();

    std::vector<Index> offset(nc + 1, 0);
    for (std::size_t c = 0; c < nc; ++c) {
        offset[c + 1] = offset[c] + cols[c].q.cols();
    }
    const Index total = offset[nc];
    if (total == 0) {
        return res;
    }

    std::vector<Eigen::LLT<Matrix>> hess(nc);
    Vector y_unc(total);
    for (std::size_t c = 0; c < nc; ++c) {
        const ColumnSystem& cs = cols[c];
        Matrix h = 2.0 * cs.q.transpose() * cs.q;
        h.diagonal().array() += 1e-12 * std::max(1.0, h.cols() > 0 ? h.diagonal().maxCoeff() : 1.0);
        hess[c].compute(h);
        if (hess[c].info() != Eigen::Success) {
            return res;
        }
        y_unc.segment(offset[c], cs.q.cols()) = -hess[c].solve(2.0 * cs.q.transpose() * cs.q0);
    }
    const auto assemble = [&](const Vector& yy) {
        Vector w = Vector::Zero(lay.w_size());
        for (std::size_t c = 0; c < nc; ++c) {
            const ColumnSystem& cs = cols[c];
            const Vector active = cs.k * yy.segment(offset[c], cs.q.cols()) + cs.k0;
            for (std::size_t a = 0; a < cs.w_rows.size(); ++a) {
                w(static_cast<Index>(c) * block + cs.w_rows[a]) = active(static_cast<Index>(a));
            }
        }
        return w;
    };

    // Cut j in y: a_j . y + c_j <= radius; white.col(j) = L^{-1} a_j.
    std::vector<Vector> cut_a;
    std::vector<double> cut_c;
    Matrix white(total, 0);
    const auto absorb = [&](const std::vector<Vector>& fresh) {
        const Index old = white.cols();
        white.conservativeResize(total, old + static_cast<Index>(fresh.size()));
        for (std::size_t f = 0; f < fresh.size(); ++f) {
            Vector a(total);
            double c0 = 0.0;
            for (std::size_t c = 0; c < nc; ++c) {
                const ColumnSystem& cs = cols[c];
                Vector g(static_cast<Index>(cs.w_rows.size()));
                for (std::size_t r = 0; r < cs.w_rows.size(); ++r) {
                    g(static_cast<Index>(r)) = fresh[f](static_cast<Index>(c) * block + cs.w_rows[r]);
                }
                const Index q = cs.q.cols();
                a.segment(offset[c], q) = cs.k.transpose() * g;
                c0 += g.dot(cs.k0);
                if (q > 0) {
                    white.col(old + static_cast<Index>(f)).segment(offset[c], q) =
                        hess[c].matrixL().solve(a.segment(offset[c], q));
                }
            }
            cut_a.push_back(std::move(a));
            cut_c.push_back(c0);
        }
    };

    Vector y(total);
    for (std::size_t c = 0; c < nc; ++c) {
        y.segment(offset[c], cols[c].q.cols()) = cols[c].y;
    }
    const double feas_tol = 1e-9 * std::max(1.0, radius);
    std::vector<Vector> fresh;
    cap.cuts(assemble(y), 0.95 * radius, fresh);
    if (fresh.empty()) {
        return res;  // cap inactive
    }
    absorb(fresh);

    for (int round = 0; round < 100; ++round) {
        const Index nk = white.cols();
        if (nk > 4 * total + 400) {
            return res;
        }
        // min 0.5 |x|^2  s.t.  -W^T x >= d,  d_j = a_j . y_unc + c_j - radius
        Vector d(nk);
        for (Index j = 0; j < nk; ++j) {
            d(j) = cut_a[static_cast<std::size_t>(j)].dot(y_unc) + cut_c[static_cast<std::size_t>(j)] - radius;
        }
        Matrix g = white.transpose() * white;
        g.noalias() += d * d.transpose();
        const Vector u = nnls_gram(g, d);
        const double denom = 1.0 - d.dot(u);
        if (!(denom > 1e-14)) {
            return res;  // cuts inconsistent
        }
        const Vector lambda = u / denom;
        const Vector x = -(white * lambda);
        for (std::size_t c = 0; c < nc; ++c) {
            const Index q = cols[c].q.cols();
            if (q > 0) {
                y.segment(offset[c], q) =
                    y_unc.segment(offset[c], q) + hess[c].matrixL().transpose().solve(x.segment(offset[c], q));
            }
        }

        fresh.clear();
        cap.cuts(assemble(y), radius + feas_tol, fresh);
        if (!fresh.empty()) {
            absorb(fresh);
            continue;
        }

        Vector grad(total);
        for (std::size_t c = 0; c < nc; ++c) {
            const ColumnSystem& cs = cols[c];
            const Index q = cs.q.cols();
            grad.segment(offset[c], q) = 2.0 * cs.q.transpose() * (cs.q * y.segment(offset[c], q) + cs.q0);
        }
        Vector stat = grad;
        double complementarity = 0.0;
        for (Index j = 0; j < nk; ++j) {
            const auto sj = static_cast<std::size_t>(j);
            stat += lambda(j) * cut_a[sj];
            const double slack = radius - (cut_a[sj].dot(y) + cut_c[sj]);
            complementarity = std::max(complementarity, lambda(j) * std::abs(slack));
        }
        res.kkt = std::max(inf_norm(stat) / (1.0 + inf_norm(grad)), complementarity / (1.0 + lambda.sum()));
        res.sensitivity = lambda.sum();
        res.ok = res.kkt <= kStatusTol;
        if (res.ok) {
            for (std::size_t c = 0; c < nc; ++c) {
                cols[c].y = y.segment(offset[c], cols[c].q.cols());
            }
        }
        return res;
    }
    return res;
}

struct AdmmResult {
    SynthesisStatus status = SynthesisStatus::SolverLimit;
    int iterations = 0;
    double kkt = std::numeric_limits<double>::infinity();
    double sensitivity = std::numeric_limits<double>::quiet_NaN();
    std::string certificate;
};

AdmmResult run_admm(std::vector<ColumnSystem>& cols, const Layout& lay, const CapSet& cap, double radius,
                    const AdmmSettings& opt) {
    AdmmResult res;
    const double gram = cap.gram();
    double rho = opt.rho;
    for (auto& cs : cols) {
        factor_column(cs, rho * gram);
    }
    const Index block = lay.block();
    Vector w = Vector::Zero(lay.w_size());
    Vector k0_full = Vector::Zero(lay.w_size());
    for (std::size_t c = 0; c < cols.size(); ++c) {
        for (std::size_t a = 0; a < cols[c].w_rows.size(); ++a) {
            k0_full(static_cast<Index>(c) * block + cols[c].w_rows[a]) = cols[c].k0(static_cast<Index>(a));
        }
    }
    Vector z = Vector::Zero(cap.dim());
    Vector u = Vector::Zero(cap.dim());
    Vector z_prev, fw, relaxed, time_buf, du;
    int refactorizations = 0;
    int polish_attempts = 0;

    for (int it = 1; it <= opt.max_iterations; ++it) {
        cap.adjoint(z - u, time_buf);
        time_buf /= gram;
        for (std::size_t c = 0; c < cols.size(); ++c) {
            ColumnSystem& cs = cols[c];
            const auto start = Clock::now();
            cs.c.resize(static_cast<Index>(cs.w_rows.size()));
            for (std::size_t a = 0; a < cs.w_rows.size(); ++a) {
                cs.c(static_cast<Index>(a)) = time_buf(static_cast<Index>(c) * block + cs.w_rows[a]);
            }
            const Vector active = cs.w_fix + cs.r * cs.c;
            for (std::size_t a = 0; a < cs.w_rows.size(); ++a) {
                w(static_cast<Index>(c) * block + cs.w_rows[a]) = active(static_cast<Index>(a));
            }
            cs.seconds += seconds_since(start);
        }
        cap.forward(w, fw);
        z_prev = z;
        relaxed = opt.relaxation * fw + (1.0 - opt.relaxation) * z_prev;
        z = relaxed + u;
        cap.project(z, radius);
        u += relaxed - z;
        du = fw - z;
        res.iterations = it;

        if (it % opt.check_interval != 0 && it != opt.max_iterations) {
            continue;
        }

        // Residuals in the reduced coordinates of every column.
        cap.adjoint(z - z_prev, time_buf);
        Vector dual_time, udual_time;
        cap.adjoint(u, udual_time);
        double r_dual = 0.0, norm_dual = 0.0;
        for (std::size_t c = 0; c < cols.size(); ++c) {
            ColumnSystem& cs = cols[c];
            Vector dz(static_cast<Index>(cs.w_rows.size())), ud(static_cast<Index>(cs.w_rows.size()));
            for (std::size_t a = 0; a < cs.w_rows.size(); ++a) {
                dz(static_cast<Index>(a)) = time_buf(static_cast<Index>(c) * block + cs.w_rows[a]);
                ud(static_cast<Index>(a)) = udual_time(static_cast<Index>(c) * block + cs.w_rows[a]);
            }
            cs.y = cs.y_fix + cs.hinv_kt * (cs.c - cs.k0);
            const Vector grad = 2.0 * cs.q.transpose() * (cs.q * cs.y + cs.q0);
            r_dual = std::max(r_dual, rho * inf_norm(cs.k.transpose() * dz));
            norm_dual = std::max({norm_dual, inf_norm(grad), rho * inf_norm(cs.k.transpose() * ud)});
        }
        const double r_prim = inf_norm(du);
        const double norm_prim = std::max(inf_norm(fw), inf_norm(z));
        res.kkt = std::max(r_prim / (1.0 + norm_prim), r_dual / (1.0 + norm_dual));
        const double over = cap.norm(fw) - radius;

        if (cap.sampled() && it % kPolishInterval == 0 && res.kkt <= 1e-3 && polish_attempts < kMaxPolish) {
            ++polish_attempts;
            std::vector<Vector> saved;
            for (const auto& cs : cols) {
                saved.push_back(cs.y);
            }
            const PolishResult pol = polish(cols, lay, cap, radius);
            if (pol.ok) {
                res.status = SynthesisStatus::Optimal;
                res.kkt = pol.kkt;
                res.sensitivity = pol.sensitivity;
                return res;
            }
            for (std::size_t c = 0; c < cols.size(); ++c) {
                cols[c].y = saved[c];
            }
        }

        if (r_prim <= opt.eps_abs + opt.eps_rel * norm_prim && r_dual <= opt.eps_abs + opt.eps_rel * norm_dual &&
            res.kkt <= kStatusTol && over <= kStatusTol) {
            res.status = SynthesisStatus::Optimal;
            res.sensitivity = cap.dual_norm(rho * u);
            return res;
        }

        // Primal infeasibility: du is (asymptotically) a separating direction.
        const double ndu = inf_norm(du);
        if (ndu > 1e-10) {
            Vector adj;
            cap.adjoint(du, adj);
            double kt_du = 0.0;
            for (std::size_t c = 0; c < cols.size(); ++c) {
                const ColumnSystem& cs = cols[c];
                Vector part(static_cast<Index>(cs.w_rows.size()));
                for (std::size_t a = 0; a < cs.w_rows.size(); ++a) {
                    part(static_cast<Index>(a)) = adj(static_cast<Index>(c) * block + cs.w_rows[a]);
                }
                kt_du = std::max(kt_du, inf_norm(cs.k.transpose() * part));
            }
            const double scale = std::max(1.0, gram) * ndu;
            const double gap = adj.dot(k0_full) - radius * cap.dual_norm(du);
            if (kt_du <= opt.eps_infeasible * scale && gap > opt.eps_infeasible * scale) {
                std::ostringstream msg;
                msg << "separating direction d with |K^T F^T d|_inf = " << kt_du << " and <d, F k0> - r N*(d) = " << gap
                    << " > 0 (|d|_inf = " << ndu << ")";
                res.status = SynthesisStatus::Infeasible;
                res.certificate = msg.str();
                return res;
            }
        }

        if (opt.adaptive_rho && refactorizations < opt.max_refactorizations && it % kAdaptInterval == 0 &&
            r_prim > 0.0 && r_dual > 0.0) {
            const double ratio = std::sqrt((r_prim / std::max(norm_prim, 1e-12)) / (r_dual / std::max(norm_dual, 1e-12)));
            if (ratio > 5.0 || ratio < 0.2) {
                const double rho_new = std::clamp(rho * ratio, 1e-6, 1e6);
                u *= rho / rho_new;
                rho = rho_new;
                for (auto& cs : cols) {
                    factor_column(cs, rho * gram);
                }
                ++refactorizations;
            }
        }
    }
    std::ostringstream msg;
    msg << "iteration cap reached with kkt residual " << res.kkt;
    res.certificate = msg.str();
    return res;
}

}  // namespace

SynthesisOutcome synthesize(const DiscretePlant& plant, const LocalityConstraint& locality, double gamma,
                            const SynthesisSettings& settings) {
    plant.validate();
    const Index n = plant.states();
    const Index nu = plant.inputs();
    locality.validate(n, nu);
    if (!(gamma >= 0.0 && gamma < 1.0)) {
        throw InvalidInput("synthesize: gamma must lie in [0, 1)");
    }
    for (Index i = 0; i < n; ++i) {
        if (!locality.x_masks.front()(i, i)) {
            throw MaskIdentityConflict("synthesize: Phi_x[1] mask excludes diagonal entry " + std::to_string(i));
        }
    }
    const Index horizon = locality.horizon;
    if (settings.hinf_grid < 64 || settings.hinf_grid <= horizon) {
        throw InvalidInput("synthesize: hinf_grid must be at least 64 and exceed the horizon");
    }

    Layout lay;
    lay.n = n;
    lay.nu = nu;
    lay.horizon = horizon;
    lay.cost_rows = plant.c1.rows();
    DeltaNorm norm = settings.norm;
    if (settings.budget) {
        settings.budget->validate();
        const RobustnessBudget& b = *settings.budget;
        norm = b.norm;
        lay.robust = true;
        lay.p = n + nu;
        if (norm == DeltaNorm::L1) {
            lay.sx = b.model_a / b.alpha;
            lay.su = b.model_b / (1.0 - b.alpha);
        } else if (norm == DeltaNorm::E1) {
            lay.sx = b.model_a;
            lay.su = b.model_b;
        } else {
            lay.sx = b.model_a / std::sqrt(b.alpha);
            lay.su = b.model_b / std::sqrt(1.0 - b.alpha);
        }
    } else {
        lay.p = n;
    }
    if (settings.columns.empty()) {
        for (Index j = 0; j < n; ++j) {
            lay.columns.push_back(j);
        }
    } else {
        lay.columns = settings.columns;
        std::vector<Index> sorted = lay.columns;
        std::sort(sorted.begin(), sorted.end());
        if (sorted.front() < 0 || sorted.back() >= n || std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            throw InvalidInput("synthesize: columns must be distinct state indices");
        }
    }

    const double radius = gamma - kStrictMargin;
    const bool exact = radius <= 0.0;

    std::vector<ColumnSystem> cols;
    cols.reserve(lay.columns.size());
    for (const Index j : lay.columns) {
        cols.push_back(build_column(plant, locality, lay, j, exact));
    }

    SynthesisOutcome out;
    out.norm = norm;
    out.gamma = gamma;
    if (settings.budget) {
        out.alpha = settings.budget->alpha;
    }
    out.sensitivity = std::numeric_limits<double>::quiet_NaN();

    bool affine_ok = true;
    for (const auto& cs : cols) {
        if (!eq_feasible(cs)) {
            affine_ok = false;
            std::ostringstream msg;
            msg << "affine constraints inconsistent in column " << cs.column << ": least-squares residual "
                << cs.eq_residual;
            out.certificate = msg.str();
            break;
        }
    }

    if (!affine_ok) {
        out.status = SynthesisStatus::Infeasible;
    } else if (exact) {
        double kkt = 0.0;
        for (auto& cs : cols) {
            solve_exact(cs);
            if (cs.q.cols() > 0) {
                const Vector grad = cs.q.transpose() * (cs.q * cs.y + cs.q0);
                kkt = std::max(kkt, inf_norm(grad) / (1.0 + inf_norm(cs.q.transpose() * cs.q0)));
            }
        }
        out.kkt_residual = kkt;
        out.iterations = 0;
        out.status = SynthesisStatus::Optimal;
    } else {
        const CapSet cap(norm, lay, settings.hinf_grid);
        const AdmmResult res = run_admm(cols, lay, cap, radius, settings.admm);
        out.status = res.status;
        out.kkt_residual = res.kkt;
        out.iterations = res.iterations;
        out.sensitivity = res.sensitivity;
        out.certificate = res.certificate;
    }

    // Assemble Phi from the reduced coordinates.
    std::vector<Matrix> x_taps(static_cast<std::size_t>(horizon), Matrix::Zero(n, n));
    std::vector<Matrix> u_taps(static_cast<std::size_t>(horizon), Matrix::Zero(nu, n));
    x_taps.front().setIdentity();
    for (auto& cs : cols) {
        Vector v = cs.v0;
        if (cs.basis.cols() > 0 && cs.y.size() == cs.basis.cols()) {
            v += cs.basis * cs.y;
        }
        for (std::size_t a = 0; a < var_count(cs); ++a) {
            const VarRef& ref = cs.vars[a];
            auto& tap = ref.is_u ? u_taps[static_cast<std::size_t>(ref.tap)] : x_taps[static_cast<std::size_t>(ref.tap)];
            tap(ref.row, cs.column) = v(static_cast<Index>(a));
        }
    }
    out.phi_x = FirTransfer(std::move(x_taps));
    out.phi_u = FirTransfer(std::move(u_taps));
    out.delta = sls_residual(plant.a, plant.b2, out.phi_x, out.phi_u);

    // Column costs and the capped value on the solved columns.
    const FirTransfer z_map = stack(out.phi_x, out.phi_u);
    Matrix cd(plant.c1.rows(), n + nu);
    cd << plant.c1, plant.d12;
    out.cost = 0.0;
    for (const auto& cs : cols) {
        double col_cost = 0.0;
        for (Index k = 1; k <= horizon; ++k) {
            col_cost += (cd * z_map[k].col(cs.column)).squaredNorm();
        }
        out.column_cost.push_back(col_cost);
        out.column_seconds.push_back(cs.seconds);
        out.cost += col_cost;
    }

    const auto restrict_cols = [&](const FirTransfer& g) {
        std::vector<Matrix> taps;
        for (Index k = 1; k <= g.horizon(); ++k) {
            Matrix tap(g.rows(), static_cast<Index>(lay.columns.size()));
            for (std::size_t c = 0; c < lay.columns.size(); ++c) {
                tap.col(static_cast<Index>(c)) = g[k].col(lay.columns[c]);
            }
            taps.push_back(std::move(tap));
        }
        return FirTransfer(std::move(taps));
    };
    const FirTransfer delta_sub = restrict_cols(out.delta);
    double eq_violation = 0.0;
    if (settings.budget) {
        const FirTransfer px = restrict_cols(out.phi_x);
        const FirTransfer pu = restrict_cols(out.phi_u);
        std::vector<Matrix> ws;
        for (Index k = 1; k <= horizon; ++k) {
            Matrix tap(n + nu, px.cols());
            tap << lay.sx * px[k], lay.su * pu[k];
            ws.push_back(std::move(tap));
        }
        out.capped_value = delta_norm(FirTransfer(std::move(ws)), norm, settings.hinf_grid);
        eq_violation = l1_norm(delta_sub);
    } else {
        out.capped_value = delta_norm(delta_sub, norm, settings.hinf_grid);
    }
    out.constraint_violation = std::max(eq_violation, out.capped_value - std::max(gamma - kStrictMargin, 0.0));
    out.constraint_violation = std::max(out.constraint_violation, 0.0);

    if (out.status == SynthesisStatus::Optimal &&
        (out.constraint_violation > kStatusTol || out.kkt_residual > kStatusTol)) {
        out.status = SynthesisStatus::SolverLimit;
        std::ostringstream msg;
        msg << "tolerances not met: violation " << out.constraint_violation << ", kkt " << out.kkt_residual;
        out.certificate = msg.str();
    }
    return out;
}

// ============================================================================
// Bisection on gamma
// ============================================================================

namespace {

SynthesisOutcome evaluate(const DiscretePlant& plant, const LocalityConstraint& locality, double gamma,
                          const SynthesisSettings& settings) {
    if (!settings.budget) {
        return synthesize(plant, locality, gamma, settings);
    }
    std::optional<SynthesisOutcome> best;
    for (const double alpha : settings.alpha_grid) {
        SynthesisSettings s = settings;
        s.budget->alpha = alpha;
        SynthesisOutcome o = synthesize(plant, locality, gamma, s);
        if (!best || (o.optimal() && (!best->optimal() || o.cost < best->cost))) {
            best = std::move(o);
        }
    }
    if (!best) {
        throw InvalidInput("synthesize_bisect: alpha grid is empty");
    }
    return *best;
}

// Sign of d/dgamma [cost / (1 - gamma)] up to a positive factor.
double merit_slope(const SynthesisOutcome& o) {
    if (std::isnan(o.sensitivity)) {
        return -1.0;
    }
    return o.cost - o.sensitivity * (1.0 - o.gamma);
}

}  // namespace

SynthesisOutcome synthesize_bisect(const DiscretePlant& plant, const LocalityConstraint& locality,
                                   const SynthesisSettings& settings, double bisect_tol) {
    if (!(bisect_tol > 0.0 && bisect_tol < 1.0)) {
        throw InvalidInput("synthesize_bisect: bisect_tol must lie in (0, 1)");
    }
    std::optional<SynthesisOutcome> best;
    const auto consider = [&](SynthesisOutcome o) {
        if (o.optimal() && (!best || o.merit() < best->merit())) {
            best = std::move(o);
        }
    };
    try {
        const int max_solves = static_cast<int>(std::ceil(std::log2(1.0 / bisect_tol)));
        int solves = 0;

        double lo = 0.0;
        double hi = 1.0;
        SynthesisOutcome at_zero = evaluate(plant, locality, 0.0, settings);
        ++solves;
        if (at_zero.optimal()) {
            consider(at_zero);
            // Gamma = 0 is exact, so the slope there is read one tolerance step away.
            SynthesisOutcome probe = evaluate(plant, locality, bisect_tol, settings);
            ++solves;
            const bool rising = !probe.optimal() || merit_slope(probe) >= 0.0;
            consider(std::move(probe));
            if (rising) {
                return *best;
            }
            lo = bisect_tol;
        }
        while (hi - lo > bisect_tol && solves < max_solves) {
            const double mid = 0.5 * (lo + hi);
            SynthesisOutcome o = evaluate(plant, locality, mid, settings);
            ++solves;
            if (!o.optimal()) {
                lo = mid;
                continue;
            }
            if (merit_slope(o) >= 0.0) {
                hi = mid;
            } else {
                lo = mid;
            }
            consider(std::move(o));
        }
    } catch (const MaskIdentityConflict& e) {
        throw AllInfeasible(std::string("synthesize_bisect: ") + e.what());
    }
    if (!best) {
        throw AllInfeasible("synthesize_bisect: no gamma in [0, 1) gave a feasible problem");
    }
    return *best;
}

}  // namespace sparsedisc
