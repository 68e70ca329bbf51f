#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cstddef>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "nnreach/activation_pattern.hpp"
#include "nnreach/errors.hpp"
#include "nnreach/geometry.hpp"
#include "nnreach/lp.hpp"
#include "nnreach/network.hpp"
#include "nnreach/tolerances.hpp"

namespace nnreach {

struct ForwardPayload {
    HPolyhedron image;
};

/// One entry per output set; nullopt where the intersection is empty.
struct BackwardPayload {
    std::vector<std::optional<HPolyhedron>> preimages;

    bool any() const {
        for (const auto& p : preimages)
            if (p) return true;
        return false;
    }
};

using Payload = std::variant<std::monostate, ForwardPayload, BackwardPayload>;

/// One region of the explicit piecewise-affine representation.
struct Cell {
    ActivationPattern ap;
    HPolyhedron hrep;                      ///< essential constraints, domain rows included
    AffineMap map;                         ///< network restricted to hrep
    std::vector<NeuronId> dead_neurons;    ///< neurons whose constraint is 0'x <= 0 here
    Ball interior;                         ///< Chebyshev ball of hrep
    Payload payload;
};

/// Preactivation of every hidden neuron as an affine function of the input,
/// valid wherever the network is in pattern `ap`: row [w c] means w'x + c.
/// Layers before layer i are masked by `ap` (rows of inactive neurons zeroed).
struct NeuronAffineForms {
    MatrixXd rows;  ///< hidden_count x (input_dim + 1)
    AffineMap map;  ///< output layer composed with the masked hidden layers
};

inline NeuronAffineForms neuron_affine_forms(const AugmentedNetwork& anet, const ActivationPattern& ap) {
    if (ap.size() != anet.hidden_count())
        throw DimensionError("activation pattern has " + std::to_string(ap.size()) + " bits, network has " +
                             std::to_string(anet.hidden_count()) + " hidden neurons");
    const auto& W = anet.weights();
    const int k0 = anet.input_dim();
    NeuronAffineForms out;
    out.rows.resize(static_cast<Eigen::Index>(anet.hidden_count()), k0 + 1);
    MatrixXd M = MatrixXd::Identity(k0 + 1, k0 + 1);
    Eigen::Index pos = 0;
    for (std::size_t i = 0; i + 1 < W.size(); ++i) {
        MatrixXd P = W[i] * M;
        const Eigen::Index width = P.rows() - 1;
        out.rows.middleRows(pos, width) = P.topRows(width);
        for (Eigen::Index j = 0; j < width; ++j)
            if (!ap[static_cast<std::size_t>(pos + j)]) P.row(j).setZero();
        pos += width;
        M = std::move(P);
    }
    MatrixXd Cd = W.back() * M;
    out.map.C = Cd.leftCols(k0);
    out.map.d = Cd.col(k0);
    return out;
}

/// [C d] = W_n * prod(diag(ap_i) W_i) over the augmented weights.
inline AffineMap affine_map_from_ap(const AugmentedNetwork& anet, const ActivationPattern& ap) {
    return neuron_affine_forms(anet, ap).map;
}

namespace detail {

// Cell-side halfspace for a neuron: active (bit 1) means w'x + c >= 0.
inline Constraint oriented_neuron_constraint(const VectorXd& row, bool active, NeuronId id, const Tolerances& tol) {
    const Eigen::Index k0 = row.size() - 1;
    VectorXd w = row.head(k0);
    const double c = row[k0];
    return active ? normalize_constraint(-w, c, {Provenance::neuron(id)}, tol)
                  : normalize_constraint(w, -c, {Provenance::neuron(id)}, tol);
}

}  // namespace detail

inline Constraint neuron_hyperplane(const AugmentedNetwork& anet, const ActivationPattern& ap, NeuronId id,
                                    const Tolerances& tol = {}) {
    const auto& net = anet.source();
    if (id.layer < 1 || id.layer > static_cast<int>(net.hidden_layer_count()) || id.index < 0 ||
        id.index >= net.width(id.layer))
        throw DimensionError("neuron (" + std::to_string(id.layer) + "," + std::to_string(id.index) + ") out of range");
    const auto forms = neuron_affine_forms(anet, ap);
    const std::size_t flat = net.flat_index(id);
    return detail::oriented_neuron_constraint(forms.rows.row(static_cast<Eigen::Index>(flat)).transpose(), ap[flat], id, tol);
}

enum class CellStatus { ok, empty, flat };

struct CellResult {
    CellStatus status = CellStatus::empty;
    std::optional<Cell> cell;
};

/// Radius below which a cell is treated as having empty interior.
inline constexpr double kFlatRadius = 1e-9;

/// Builds the cell of `ap` inside `domain`: every neuron constraint plus the
/// domain rows, normalized, duplicates merged, then reduced to essential rows.
inline CellResult cell_from_ap(const AugmentedNetwork& anet, const ActivationPattern& ap, const HPolyhedron& domain,
                               LpSolver& lp, const Tolerances& tol = {}) {
    if (domain.dim() != anet.input_dim()) throw DimensionError("domain dimension does not match network input");
    const auto forms = neuron_affine_forms(anet, ap);
    const auto& net = anet.source();

    std::vector<Constraint> raw;
    raw.reserve(ap.size() + domain.size());
    Cell cell;
    for (std::size_t k = 0; k < ap.size(); ++k) {
        const NeuronId id = net.neuron_at(k);
        Constraint c = detail::oriented_neuron_constraint(forms.rows.row(static_cast<Eigen::Index>(k)).transpose(), ap[k], id, tol);
        if (c.degenerate()) cell.dead_neurons.push_back(id);
        raw.push_back(std::move(c));
    }
    for (std::size_t r = 0; r < domain.size(); ++r) {
        Constraint c = domain[r];
        if (!c.has_kind(Provenance::Kind::domain)) c.provenance = {Provenance::domain(static_cast<int>(r))};
        raw.push_back(std::move(c));
    }

    HPolyhedron all(domain.dim(), remove_duplicates(raw, tol));
    const Ball ball = chebyshev_center(all, lp);
    if (ball.radius < -tol.lp) return {CellStatus::empty, std::nullopt};
    if (ball.radius <= kFlatRadius) return {CellStatus::flat, std::nullopt};

    cell.ap = ap;
    cell.hrep = essential_constraints(all, lp, tol);
    cell.map = forms.map;
    cell.interior = ball;
    return {CellStatus::ok, std::move(cell)};
}

enum class NeighborRule {
    /// New bit of a Type 1/2 neuron is read from the orientation of its
    /// recomputed hyperplane against the facet's outward normal.
    oriented,
    /// Literal flip rule: zero if the recomputed hyperplane is 0'x <= 0,
    /// otherwise negate the bit.
    flip,
};

/// Activation pattern across `facet` from `cell`. Neurons whose constraint is the
/// facet (Type 1, from the facet's merged provenance) or is degenerate in the
/// cell (Type 2) are revisited in layer-major order with their hyperplane
/// recomputed under the pattern updated so far; every other neuron keeps its bit.
inline ActivationPattern neighbor_ap(const AugmentedNetwork& anet, const Cell& cell, const Constraint& facet,
                                     const Tolerances& tol = {}, NeighborRule rule = NeighborRule::oriented) {
    if (facet.has_kind(Provenance::Kind::domain))
        throw ContractError("neighbor_ap called on a domain facet; the march never crosses the domain boundary");
    const auto& net = anet.source();
    std::vector<char> revisit(cell.ap.size(), 0);
    bool any = false;
    for (const auto& p : facet.provenance)
        if (p.kind == Provenance::Kind::neuron) {
            revisit[net.flat_index(p.neuron_id())] = 1;
            any = true;
        }
    if (!any) throw ContractError("facet carries no neuron provenance");
    for (const auto& id : cell.dead_neurons) revisit[net.flat_index(id)] = 1;

    ActivationPattern next = cell.ap;
    const auto& W = anet.weights();
    const int k0 = anet.input_dim();
    MatrixXd M = MatrixXd::Identity(k0 + 1, k0 + 1);
    std::size_t pos = 0;
    for (std::size_t i = 0; i + 1 < W.size(); ++i) {
        MatrixXd P = W[i] * M;
        const Eigen::Index width = P.rows() - 1;
        for (Eigen::Index j = 0; j < width; ++j) {
            const std::size_t k = pos + static_cast<std::size_t>(j);
            if (!revisit[k]) continue;
            const VectorXd w = P.row(j).head(k0).transpose();
            const double c = P(j, k0);
            const double wn = w.norm();
            if (wn <= tol.zero) {
                // constant preactivation across the facet
                if (rule == NeighborRule::oriented || std::abs(c) <= tol.zero)
                    next.set(k, c > tol.zero);
                else
                    next.flip(k);
            } else if (rule == NeighborRule::oriented) {
                next.set(k, w.dot(facet.a) > 0.0);
            } else {
                next.flip(k);
            }
        }
        for (Eigen::Index j = 0; j < width; ++j)
            if (!next[pos + static_cast<std::size_t>(j)]) P.row(j).setZero();
        pos += static_cast<std::size_t>(width);
        M = std::move(P);
    }
    return next;
}

struct MarchOptions {
    Tolerances tol{};
    NeighborRule rule = NeighborRule::oriented;
    std::size_t max_cells = 1'000'000;
    std::size_t max_lps = 100'000'000;
    double max_seconds = 0.0;  ///< 0 disables the wall-clock budget
    std::uint64_t rng_seed = 0;
};

struct MarchStats {
    std::size_t cells = 0;             ///< cells emitted to the visitor
    std::size_t discarded = 0;         ///< neighbors with empty or flat cells
    std::size_t lps = 0;
    double seconds = 0.0;
    bool complete = false;             ///< working set exhausted
    bool stopped_by_visitor = false;
    std::string budget_exceeded;       ///< which budget ran out, if any
};

/// Returns false to stop the march early.
using CellVisitor = std::function<bool(Cell&)>;

/// Interior seed: Chebyshev center of the domain.
inline VectorXd default_seed(const HPolyhedron& domain, LpSolver& lp) {
    Ball b = chebyshev_center(domain, lp);
    if (!(b.radius > kFlatRadius)) throw ContractError("domain has empty interior");
    return b.center;
}

/// Moves `seed` off neuron hyperplanes: while some preactivation is within 1e-9
/// of zero, retry from seed plus a random vector of norm 1e-6 * domain radius.
/// Neurons whose preactivation is locally constant never trigger a retry.
inline VectorXd generic_seed(const ReluNetwork& net, const HPolyhedron& domain, VectorXd seed, LpSolver& lp,
                             std::uint64_t rng_seed, const Tolerances& tol = {}) {
    if (!domain.contains(seed)) throw ContractError("seed lies outside the domain");
    const AugmentedNetwork anet(net);
    const int k0 = net.input_dim();
    auto generic = [&](const VectorXd& x) {
        const VectorXd pre = net.preactivations(x);
        std::optional<MatrixXd> rows;
        for (Eigen::Index k = 0; k < pre.size(); ++k) {
            if (std::abs(pre[k]) >= 1e-9) continue;
            if (!rows) rows = neuron_affine_forms(anet, net.activation_pattern(x)).rows;
            if (rows->row(k).head(k0).norm() > tol.zero) return false;
        }
        return true;
    };
    if (generic(seed)) return seed;
    const Ball dom = chebyshev_center(domain, lp);
    const double scale = 1e-6 * (std::isfinite(dom.radius) ? dom.radius : 1.0);
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> gauss;
    for (int attempt = 0; attempt < 100; ++attempt) {
        VectorXd dir(seed.size());
        for (Eigen::Index k = 0; k < dir.size(); ++k) dir[k] = gauss(rng);
        VectorXd x = seed + scale * dir.normalized();
        if (domain.contains(x) && generic(x)) return x;
    }
    throw ContractError("could not perturb the seed off every neuron hyperplane in 100 attempts");
}

/// Enumerates the cells of the network over `domain`, starting from the cell of
/// `seed` and crossing every essential neuron facet. Only pattern keys are kept;
/// cells go to the visitor as soon as they are built. Depth-first (LIFO).
inline MarchStats march(const AugmentedNetwork& anet, const HPolyhedron& domain, const VectorXd& seed,
                        const CellVisitor& visit, LpSolver& lp, const MarchOptions& opt = {}) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    const std::size_t lp0 = lp.solve_count();
    MarchStats stats;

    const VectorXd start = generic_seed(anet.source(), domain, seed, lp, opt.rng_seed, opt.tol);
    std::vector<ActivationPattern> work{anet.source().activation_pattern(start)};
    std::unordered_set<ApKey, ApKeyHash> seen{work.front().key()};

    auto finish = [&] {
        stats.lps = lp.solve_count() - lp0;
        stats.seconds = std::chrono::duration<double>(clock::now() - t0).count();
        return stats;
    };

    bool first = true;
    while (!work.empty()) {
        if (stats.cells >= opt.max_cells) {
            stats.budget_exceeded = "cells";
            return finish();
        }
        if (lp.solve_count() - lp0 >= opt.max_lps) {
            stats.budget_exceeded = "lps";
            return finish();
        }
        if (opt.max_seconds > 0.0 && std::chrono::duration<double>(clock::now() - t0).count() > opt.max_seconds) {
            stats.budget_exceeded = "time";
            return finish();
        }

        ActivationPattern ap = std::move(work.back());
        work.pop_back();
        CellResult built = cell_from_ap(anet, ap, domain, lp, opt.tol);
        if (built.status != CellStatus::ok) {
            if (first) throw Error("seed cell has empty interior");
            ++stats.discarded;
            continue;
        }
        first = false;
        Cell& cell = *built.cell;

        std::vector<ActivationPattern> neighbors;
        for (const auto& facet : cell.hrep.constraints()) {
            if (facet.has_kind(Provenance::Kind::domain) || !facet.has_kind(Provenance::Kind::neuron)) continue;
            neighbors.push_back(neighbor_ap(anet, cell, facet, opt.tol, opt.rule));
        }

        ++stats.cells;
        if (!visit(cell)) {
            stats.stopped_by_visitor = true;
            return finish();
        }
        for (auto& n : neighbors) {
            if (seen.insert(n.key()).second) work.push_back(std::move(n));
        }
    }
    stats.complete = true;
    return finish();
}

/// Explicit PWA representation held in memory.
struct PwaRepresentation {
    std::vector<Cell> cells;
    HPolyhedron domain;
    MarchStats stats;
};

inline PwaRepresentation explicit_pwa(const ReluNetwork& net, const HPolyhedron& domain, LpSolver& lp,
                                      const MarchOptions& opt = {}, std::optional<VectorXd> seed = std::nullopt) {
    const AugmentedNetwork anet(net);
    PwaRepresentation out;
    out.domain = domain;
    const VectorXd s = seed ? *seed : default_seed(domain, lp);
    out.stats = march(anet, domain, s, [&](Cell& c) {
        out.cells.push_back(c);
        return true;
    }, lp, opt);
    return out;
}

}  // namespace nnreach
