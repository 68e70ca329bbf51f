#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nnreach/activation_pattern.hpp"
#include "nnreach/errors.hpp"
#include "nnreach/lp.hpp"
#include "nnreach/tolerances.hpp"

namespace nnreach {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Where a constraint came from. For neurons `a`/`b` are layer/index; for
/// domain and output-set constraints `a` is the row or set index.
struct Provenance {
    enum class Kind : std::uint8_t { neuron, domain, output_set, derived };
    Kind kind = Kind::derived;
    int a = 0;
    int b = 0;

    static Provenance neuron(NeuronId n) { return {Kind::neuron, n.layer, n.index}; }
    static Provenance domain(int row) { return {Kind::domain, row, 0}; }
    static Provenance output_set(int set) { return {Kind::output_set, set, 0}; }
    static Provenance derived() { return {}; }

    NeuronId neuron_id() const { return {a, b}; }

    friend bool operator==(const Provenance&, const Provenance&) = default;
    friend auto operator<=>(const Provenance&, const Provenance&) = default;
};

/// Halfspace a'x <= b. After normalization either |a| = 1, or a is exactly zero:
/// (0, 0) is the degenerate always-true constraint, (0, b != 0) is a constant
/// constraint that holds iff b >= 0.
struct Constraint {
    VectorXd a;
    double b = 0.0;
    std::vector<Provenance> provenance;

    bool zero_normal() const { return a.size() == 0 || a.isZero(0.0); }
    bool degenerate() const { return zero_normal() && b == 0.0; }
    bool constant() const { return zero_normal() && b != 0.0; }
    double slack(const VectorXd& x) const { return b - a.dot(x); }

    bool has_kind(Provenance::Kind k) const {
        return std::any_of(provenance.begin(), provenance.end(), [k](const Provenance& p) { return p.kind == k; });
    }
};

inline Constraint normalize_constraint(const VectorXd& raw_a, double raw_b, std::vector<Provenance> provenance = {},
                                       const Tolerances& tol = {}) {
    if (!raw_a.allFinite() || !std::isfinite(raw_b)) throw Error("constraint has NaN or infinite coefficients");
    Constraint c;
    c.provenance = std::move(provenance);
    const double norm = raw_a.norm();
    if (norm <= tol.zero) {
        c.a = VectorXd::Zero(raw_a.size());
        c.b = std::abs(raw_b) <= tol.zero ? 0.0 : raw_b;
        return c;
    }
    // rows that are already unit length are kept bit for bit, so re-reading is idempotent
    if (std::abs(norm - 1.0) <= 4 * std::numeric_limits<double>::epsilon()) {
        c.a = raw_a;
        c.b = raw_b;
        return c;
    }
    c.a = raw_a / norm;
    c.b = raw_b / norm;
    return c;
}

/// Closed convex polyhedron {x | A x <= b}.
class HPolyhedron {
public:
    HPolyhedron() = default;
    explicit HPolyhedron(int dim, std::vector<Constraint> constraints = {}) : dim_(dim), constraints_(std::move(constraints)) {
        for (const auto& c : constraints_)
            if (c.a.size() != dim_) throw DimensionError("constraint dimension does not match polyhedron dimension");
    }

    /// Normalizes the rows of (A, b).
    static HPolyhedron from_matrix(const MatrixXd& A, const VectorXd& b, std::vector<std::vector<Provenance>> prov = {},
                                   const Tolerances& tol = {}) {
        if (A.rows() != b.size()) throw DimensionError("A and b row counts differ");
        std::vector<Constraint> cs;
        cs.reserve(static_cast<std::size_t>(A.rows()));
        for (Eigen::Index i = 0; i < A.rows(); ++i) {
            auto p = static_cast<std::size_t>(i) < prov.size() ? prov[static_cast<std::size_t>(i)] : std::vector<Provenance>{};
            cs.push_back(normalize_constraint(A.row(i).transpose(), b[i], std::move(p), tol));
        }
        return HPolyhedron(static_cast<int>(A.cols()), std::move(cs));
    }

    /// Axis-aligned box lo <= x <= hi; rows are tagged as domain constraints.
    static HPolyhedron box(const VectorXd& lo, const VectorXd& hi) {
        if (lo.size() != hi.size()) throw DimensionError("box bounds differ in dimension");
        const int d = static_cast<int>(lo.size());
        std::vector<Constraint> cs;
        for (int k = 0; k < d; ++k) {
            if (!(lo[k] <= hi[k])) throw Error("box lower bound exceeds upper bound in dimension " + std::to_string(k));
            VectorXd e = VectorXd::Unit(d, k);
            cs.push_back({-e, -lo[k], {Provenance::domain(2 * k)}});
            cs.push_back({e, hi[k], {Provenance::domain(2 * k + 1)}});
        }
        return HPolyhedron(d, std::move(cs));
    }

    int dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return constraints_.size(); }
    bool empty_list() const noexcept { return constraints_.empty(); }
    const std::vector<Constraint>& constraints() const noexcept { return constraints_; }
    const Constraint& operator[](std::size_t i) const { return constraints_[i]; }

    void add(Constraint c) {
        if (c.a.size() != dim_) throw DimensionError("constraint dimension does not match polyhedron dimension");
        constraints_.push_back(std::move(c));
    }

    MatrixXd A() const {
        MatrixXd A(static_cast<Eigen::Index>(constraints_.size()), dim_);
        for (std::size_t i = 0; i < constraints_.size(); ++i) A.row(static_cast<Eigen::Index>(i)) = constraints_[i].a.transpose();
        return A;
    }

    VectorXd b() const {
        VectorXd b(static_cast<Eigen::Index>(constraints_.size()));
        for (std::size_t i = 0; i < constraints_.size(); ++i) b[static_cast<Eigen::Index>(i)] = constraints_[i].b;
        return b;
    }

    bool contains(const VectorXd& x, double tol = 0.0) const {
        if (x.size() != dim_) throw DimensionError("point dimension does not match polyhedron");
        for (const auto& c : constraints_)
            if (c.a.dot(x) > c.b + tol) return false;
        return true;
    }

    /// Set every provenance entry (used to tag output sets and domains).
    HPolyhedron retagged(Provenance p) const {
        HPolyhedron out = *this;
        for (auto& c : out.constraints_) c.provenance = {p};
        return out;
    }

private:
    int dim_ = 0;
    std::vector<Constraint> constraints_;
};

struct AffineMap {
    MatrixXd C;
    VectorXd d;

    int in_dim() const { return static_cast<int>(C.cols()); }
    int out_dim() const { return static_cast<int>(C.rows()); }
    VectorXd operator()(const VectorXd& x) const { return C * x + d; }
};

namespace detail {

inline bool same_within(const Constraint& x, const Constraint& y, double eps) {
    if (std::abs(x.b - y.b) > eps) return false;
    for (Eigen::Index k = 0; k < x.a.size(); ++k)
        if (std::abs(x.a[k] - y.a[k]) > eps) return false;
    return true;
}

inline void merge_provenance(std::vector<Provenance>& into, const std::vector<Provenance>& from) {
    for (const auto& p : from)
        if (std::find(into.begin(), into.end(), p) == into.end()) into.push_back(p);
}

}  // namespace detail

/// Keeps the first constraint of every class of componentwise-equal (within
/// tol.dup) normalized rows; later members only contribute provenance.
/// Candidates are found through a sorted 1-D projection window, then checked
/// pairwise, so the cost is O(m log m) for non-pathological inputs.
inline std::vector<Constraint> remove_duplicates(const std::vector<Constraint>& cs, const Tolerances& tol = {}) {
    std::vector<Constraint> kept;
    if (cs.empty()) return kept;
    const Eigen::Index d = cs.front().a.size();
    // fixed, irrational-ish weights; any vector with nonzero entries works
    VectorXd w(d + 1);
    for (Eigen::Index k = 0; k <= d; ++k) w[k] = 1.0 + 0.61803398875 * static_cast<double>(k + 1);
    const double window = w.cwiseAbs().sum() * tol.dup;
    auto project = [&](const Constraint& c) { return w.head(d).dot(c.a) + w[d] * c.b; };

    std::multimap<double, std::size_t> index;
    for (const auto& c : cs) {
        const double p = project(c);
        bool merged = false;
        for (auto it = index.lower_bound(p - window); it != index.end() && it->first <= p + window; ++it) {
            Constraint& k = kept[it->second];
            if (detail::same_within(k, c, tol.dup)) {
                detail::merge_provenance(k.provenance, c.provenance);
                merged = true;
                break;
            }
        }
        if (!merged) {
            index.emplace(p, kept.size());
            kept.push_back(c);
        }
    }
    return kept;
}

/// Axis-aligned bounds of the feasible set; infinite sides stay +/-inf.
struct Bounds {
    VectorXd lo, hi;
};

inline Bounds bounding_box(const HPolyhedron& p, LpSolver& lp) {
    const int d = p.dim();
    const MatrixXd A = p.A();
    const VectorXd b = p.b();
    Bounds box{VectorXd::Constant(d, -std::numeric_limits<double>::infinity()),
               VectorXd::Constant(d, std::numeric_limits<double>::infinity())};
    for (int k = 0; k < d; ++k) {
        for (int sign : {1, -1}) {
            VectorXd c = VectorXd::Unit(d, k) * sign;
            LpResult r = lp.maximize(A, b, c);
            if (r.status == LpStatus::infeasible) throw LpError("bounding-box LP infeasible: polyhedron is empty");
            if (r.status == LpStatus::optimal) {
                if (sign > 0)
                    box.hi[k] = r.objective;
                else
                    box.lo[k] = -r.objective;
            }
        }
    }
    return box;
}

inline double max_over_box(const VectorXd& a, const Bounds& box) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < a.size(); ++k) {
        if (a[k] > 0.0)
            s += a[k] * box.hi[k];
        else if (a[k] < 0.0)
            s += a[k] * box.lo[k];
    }
    return s;  // +inf if an unbounded side is hit with a nonzero coefficient
}

struct EssentialOptions {
    bool bounding_box_prefilter = true;
};

/// Index bookkeeping from essential_constraints, for callers (and tests) that
/// need to know which input rows survived and why the others were dropped.
struct EssentialReport {
    std::vector<std::size_t> kept;         ///< indices into the input, ascending
    std::vector<std::size_t> trivial;      ///< degenerate or always-true constant rows
    std::vector<std::size_t> box_removed;  ///< dropped by the bounding-box prefilter
    std::vector<std::size_t> lp_removed;   ///< dropped by a redundancy LP
};

/// Minimal H-representation of a nonempty polyhedron with the same feasible set.
/// Row i is redundant when max a_i'x over the remaining rows is <= b_i + tol.lp.
/// Rows are checked in order and a redundant row leaves the working set at once,
/// so near-identical pairs cannot both be discarded.
inline HPolyhedron essential_constraints(const HPolyhedron& p, LpSolver& lp, const Tolerances& tol = {},
                                         EssentialOptions opt = {}, EssentialReport* report = nullptr) {
    EssentialReport rep;
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto& c = p[i];
        if (c.zero_normal() && c.b >= 0.0)
            rep.trivial.push_back(i);
        else
            live.push_back(i);
    }

    auto build = [&](const std::vector<std::size_t>& rows, std::size_t skip, MatrixXd& A, VectorXd& b) {
        const auto m = static_cast<Eigen::Index>(rows.size() - (skip < p.size() ? 1 : 0));
        A.resize(m, p.dim());
        b.resize(m);
        Eigen::Index r = 0;
        for (std::size_t i : rows) {
            if (i == skip) continue;
            A.row(r) = p[i].a.transpose();
            b[r] = p[i].b;
            ++r;
        }
    };

    if (opt.bounding_box_prefilter && !live.empty()) {
        HPolyhedron sub(p.dim());
        for (std::size_t i : live) sub.add(p[i]);
        const Bounds box = bounding_box(sub, lp);
        std::vector<std::size_t> next;
        for (std::size_t i : live) {
            if (!p[i].zero_normal() && max_over_box(p[i].a, box) < p[i].b - tol.lp)
                rep.box_removed.push_back(i);
            else
                next.push_back(i);
        }
        live.swap(next);
    }

    std::vector<std::size_t> work = live;
    for (std::size_t i : live) {
        if (p[i].zero_normal()) continue;  // infeasible constant row: keep, it is the whole story
        MatrixXd A;
        VectorXd b;
        build(work, i, A, b);
        LpResult r = lp.maximize(A, b, p[i].a);
        if (r.status == LpStatus::infeasible) throw LpError("redundancy LP infeasible", static_cast<long>(i));
        if (r.status == LpStatus::optimal && r.objective <= p[i].b + tol.lp) {
            rep.lp_removed.push_back(i);
            work.erase(std::find(work.begin(), work.end(), i));
        }
    }

    HPolyhedron out(p.dim());
    for (std::size_t i : work) out.add(p[i]);
    rep.kept = work;
    if (report) *report = std::move(rep);
    return out;
}

struct Ball {
    VectorXd center;
    double radius = 0.0;  ///< +inf when unbounded, -inf when infeasible
};

/// Largest inscribed ball via one LP over (x, r) with r free, so a negative
/// radius measures how far the system is from feasible.
inline Ball chebyshev_center(const HPolyhedron& p, LpSolver& lp) {
    const int d = p.dim();
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i].zero_normal()) {
            if (p[i].b < 0.0) return {VectorXd::Zero(d), -std::numeric_limits<double>::infinity()};
            continue;
        }
        rows.push_back(i);
    }
    if (rows.empty()) return {VectorXd::Zero(d), std::numeric_limits<double>::infinity()};
    MatrixXd A(static_cast<Eigen::Index>(rows.size()), d + 1);
    VectorXd b(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& c = p[rows[r]];
        const auto ri = static_cast<Eigen::Index>(r);
        A.row(ri).head(d) = c.a.transpose();
        A(ri, d) = c.a.norm();
        b[ri] = c.b;
    }
    LpResult res = lp.maximize(A, b, VectorXd::Unit(d + 1, d));
    if (res.status == LpStatus::infeasible) throw LpError("Chebyshev LP infeasible");
    if (res.status == LpStatus::unbounded) return {res.x.head(d), std::numeric_limits<double>::infinity()};
    return {res.x.head(d), res.objective};
}

/// True iff A x <= b + tol.lp has no solution.
inline bool is_empty(const HPolyhedron& p, LpSolver& lp, const Tolerances& tol = {}) {
    return chebyshev_center(p, lp).radius < -tol.lp;
}

/// {x | A C x <= b - A d}. Not minimized.
inline HPolyhedron affine_preimage(const HPolyhedron& p, const AffineMap& m, const Tolerances& tol = {}) {
    if (m.out_dim() != p.dim())
        throw DimensionError("preimage: map output dimension " + std::to_string(m.out_dim()) + " vs polyhedron dimension " +
                             std::to_string(p.dim()));
    HPolyhedron out(m.in_dim());
    for (const auto& c : p.constraints()) {
        VectorXd a = m.C.transpose() * c.a;
        out.add(normalize_constraint(a, c.b - c.a.dot(m.d), c.provenance, tol));
    }
    return out;
}

/// Concatenation with duplicates merged; not LP-minimized.
inline HPolyhedron intersect(const HPolyhedron& p, const HPolyhedron& q, const Tolerances& tol = {}) {
    if (p.dim() != q.dim()) throw DimensionError("intersect: dimensions differ");
    std::vector<Constraint> all = p.constraints();
    all.insert(all.end(), q.constraints().begin(), q.constraints().end());
    return HPolyhedron(p.dim(), remove_duplicates(all, tol));
}

inline HPolyhedron minimize(const HPolyhedron& p, LpSolver& lp, const Tolerances& tol = {}) {
    return essential_constraints(HPolyhedron(p.dim(), remove_duplicates(p.constraints(), tol)), lp, tol);
}

}  // namespace nnreach
