#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

#include "nnreach/errors.hpp"
#include "nnreach/geometry.hpp"
#include "nnreach/lp.hpp"
#include "nnreach/tolerances.hpp"

namespace nnreach {

struct ProjectionOptions {
    /// Upper bound on candidate supports examined by block elimination.
    std::size_t max_supports = 2'000'000;
    /// Upper bound on rows alive at any point of an elimination.
    std::size_t max_constraints = 200'000;
    /// Fourier-Motzkin is only attempted up to this many input dimensions.
    int fm_max_dim = 4;
};

/// Projection of {(y, t) | G y + H t <= g} onto y.
struct LiftedSystem {
    MatrixXd G;
    MatrixXd H;
    VectorXd g;
};

namespace detail {

inline double binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0.0;
    double r = 1.0;
    for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return r;
}

inline void append_row(MatrixXd& M, VectorXd& v, const VectorXd& row, double rhs) {
    M.conservativeResize(M.rows() + 1, row.size());
    v.conservativeResize(v.size() + 1);
    M.row(M.rows() - 1) = row.transpose();
    v[v.size() - 1] = rhs;
}

// Visits every k-subset of {0..n-1} in lexicographic order; stops when f returns false.
template <class F>
void for_each_subset(int n, int k, F&& f) {
    if (k > n || k <= 0) return;
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
    while (true) {
        if (!f(idx)) return;
        int i = k - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
        if (i < 0) return;
        ++idx[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
}

}  // namespace detail

/// Block elimination: the projection is cut out by u'G y <= u'g for the extreme
/// rays u of the cone {u >= 0 | H'u = 0}. An extreme ray's support S satisfies
/// rank(H_S) = |S| - 1 <= cols(H), so all of them are found by scanning supports
/// of size at most cols(H) + 1 and keeping strictly positive null vectors.
/// Returns rows (G', g') in y-space, unnormalized.
inline LiftedSystem block_eliminate(const LiftedSystem& sys, const ProjectionOptions& opt, double rel_tol = 1e-9) {
    const Eigen::Index k = sys.H.cols();
    const Eigen::Index ydim = sys.G.cols();
    LiftedSystem out{MatrixXd(0, ydim), MatrixXd(0, 0), VectorXd(0)};
    std::vector<int> active;
    const double hscale = sys.H.size() > 0 ? std::max(1.0, sys.H.cwiseAbs().maxCoeff()) : 1.0;
    for (Eigen::Index i = 0; i < sys.H.rows(); ++i) {
        if (sys.H.row(i).norm() <= rel_tol * hscale)
            detail::append_row(out.G, out.g, sys.G.row(i).transpose(), sys.g[i]);
        else
            active.push_back(static_cast<int>(i));
    }
    if (k == 0) return out;

    const auto m = static_cast<int>(active.size());
    double total = 0.0;
    for (Eigen::Index s = 2; s <= k + 1; ++s) total += detail::binomial(static_cast<std::size_t>(m), static_cast<std::size_t>(s));
    if (total > static_cast<double>(opt.max_supports))
        throw BudgetError("block elimination would examine " + std::to_string(static_cast<long long>(total)) +
                          " supports; reduce the number of steps or the size of the input set");

    for (Eigen::Index s = 2; s <= k + 1; ++s) {
        detail::for_each_subset(m, static_cast<int>(s), [&](const std::vector<int>& subset) {
            MatrixXd Ht(k, s);
            for (Eigen::Index c = 0; c < s; ++c) Ht.col(c) = sys.H.row(active[static_cast<std::size_t>(subset[static_cast<std::size_t>(c)])]).transpose();
            Eigen::JacobiSVD<MatrixXd> svd(Ht, Eigen::ComputeFullV);
            const auto& sv = svd.singularValues();
            const double smax = sv.size() > 0 ? sv[0] : 0.0;
            Eigen::Index rank = 0;
            for (Eigen::Index i = 0; i < sv.size(); ++i)
                if (sv[i] > rel_tol * std::max(smax, 1e-300)) ++rank;
            if (rank != s - 1) return true;  // null space must be exactly one-dimensional
            VectorXd u = svd.matrixV().col(s - 1);
            if (u.sum() < 0) u = -u;
            const double umax = u.cwiseAbs().maxCoeff();
            for (Eigen::Index c = 0; c < s; ++c)
                if (u[c] <= rel_tol * umax) return true;  // not strictly positive: some subset already covers it
            VectorXd row = VectorXd::Zero(ydim);
            double rhs = 0.0;
            for (Eigen::Index c = 0; c < s; ++c) {
                const int i = active[static_cast<std::size_t>(subset[static_cast<std::size_t>(c)])];
                row += u[c] * sys.G.row(i).transpose();
                rhs += u[c] * sys.g[i];
            }
            detail::append_row(out.G, out.g, row, rhs);
            if (static_cast<std::size_t>(out.G.rows()) > opt.max_constraints)
                throw BudgetError("block elimination produced more than " + std::to_string(opt.max_constraints) + " constraints");
            return true;
        });
    }
    return out;
}

/// Fourier-Motzkin elimination of the t-block, one variable at a time, with
/// LP redundancy pruning between steps. The system must be feasible.
inline LiftedSystem fourier_motzkin(const LiftedSystem& sys, LpSolver& lp, const ProjectionOptions& opt,
                                    const Tolerances& tol = {}) {
    const Eigen::Index ydim = sys.G.cols();
    MatrixXd M(sys.G.rows(), ydim + sys.H.cols());
    M << sys.G, sys.H;
    VectorXd rhs = sys.g;
    for (Eigen::Index var = M.cols() - 1; var >= ydim; --var) {
        std::vector<Eigen::Index> pos, neg;
        MatrixXd next(0, var);
        VectorXd next_rhs(0);
        for (Eigen::Index i = 0; i < M.rows(); ++i) {
            const double coef = M(i, var);
            if (std::abs(coef) <= tol.zero)
                detail::append_row(next, next_rhs, M.row(i).head(var).transpose(), rhs[i]);
            else
                (coef > 0 ? pos : neg).push_back(i);
        }
        if (static_cast<std::size_t>(next.rows()) + pos.size() * neg.size() > opt.max_constraints)
            throw BudgetError("Fourier-Motzkin step exceeds " + std::to_string(opt.max_constraints) + " constraints");
        for (auto p : pos)
            for (auto n : neg) {
                const double cp = M(p, var), cn = -M(n, var);
                VectorXd row = (cn * M.row(p).head(var) + cp * M.row(n).head(var)).transpose();
                detail::append_row(next, next_rhs, row, cn * rhs[p] + cp * rhs[n]);
            }
        HPolyhedron pruned = minimize(HPolyhedron::from_matrix(next, next_rhs, {}, tol), lp, tol);
        M = pruned.A();
        rhs = pruned.b();
    }
    return {M, MatrixXd(M.rows(), 0), rhs};
}

/// Image {C x + d | x in p}. Invertible square C uses the closed form
/// {y | A C^-1 y <= b + A C^-1 d} (not minimized). Otherwise x is split along the
/// SVD of C into a part fixed by y and a null-space part t; rank deficiency in
/// the range yields equality rows, t is projected out (block elimination, then
/// Fourier-Motzkin at low dimension) and the result is minimized.
inline HPolyhedron affine_image(const HPolyhedron& p, const AffineMap& m, LpSolver& lp, const Tolerances& tol = {},
                                const ProjectionOptions& opt = {}) {
    if (m.in_dim() != p.dim())
        throw DimensionError("image: map input dimension " + std::to_string(m.in_dim()) + " vs polyhedron dimension " +
                             std::to_string(p.dim()));
    if (m.d.size() != m.out_dim()) throw DimensionError("image: offset dimension mismatch");
    const Eigen::Index n = m.C.cols(), out = m.C.rows();

    Eigen::JacobiSVD<MatrixXd> svd(m.C, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const VectorXd& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv[0] : 0.0;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (smax > 0.0 && sv[i] > tol.rank * smax) ++rank;

    if (n == out && rank == n) {
        const MatrixXd Cinv = svd.solve(MatrixXd::Identity(n, n));
        HPolyhedron img(static_cast<int>(out));
        for (const auto& c : p.constraints()) {
            if (c.zero_normal()) {
                img.add(normalize_constraint(VectorXd::Zero(out), c.b, c.provenance, tol));
                continue;
            }
            VectorXd row = Cinv.transpose() * c.a;
            img.add(normalize_constraint(row, c.b + row.dot(m.d), c.provenance, tol));
        }
        return img;
    }

    const MatrixXd& U = svd.matrixU();
    const MatrixXd& V = svd.matrixV();
    const MatrixXd U1 = U.leftCols(rank), U2 = U.rightCols(out - rank);
    const MatrixXd V1 = V.leftCols(rank), V2 = V.rightCols(n - rank);
    VectorXd inv_s(rank);
    for (Eigen::Index i = 0; i < rank; ++i) inv_s[i] = 1.0 / sv[i];

    // x = V1 S1^-1 U1' (y - d) + V2 t
    const MatrixXd A = p.A();
    const VectorXd b = p.b();
    LiftedSystem sys;
    sys.G = A * V1 * inv_s.asDiagonal() * U1.transpose();
    sys.H = A * V2;
    sys.g = b + sys.G * m.d;

    LiftedSystem proj;
    try {
        proj = block_eliminate(sys, opt);
    } catch (const BudgetError&) {
        if (p.dim() > opt.fm_max_dim) throw;
        proj = fourier_motzkin(sys, lp, opt, tol);
    }

    HPolyhedron img(static_cast<int>(out));
    for (Eigen::Index i = 0; i < proj.G.rows(); ++i)
        img.add(normalize_constraint(proj.G.row(i).transpose(), proj.g[i], {Provenance::derived()}, tol));
    for (Eigen::Index j = 0; j < U2.cols(); ++j) {
        const VectorXd u = U2.col(j);
        const double off = u.dot(m.d);
        img.add(normalize_constraint(u, off, {Provenance::derived()}, tol));
        img.add(normalize_constraint(-u, -off, {Provenance::derived()}, tol));
    }
    return minimize(img, lp, tol);
}

}  // namespace nnreach
