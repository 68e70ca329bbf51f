#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nnreach/errors.hpp"
#include "nnreach/geometry.hpp"
#include "nnreach/lp.hpp"
#include "nnreach/network.hpp"
#include "nnreach/projection.hpp"
#include "nnreach/rpm.hpp"

namespace nnreach {

enum class ReachMode { enumerate, forward, backward, verify };

inline std::string to_string(ReachMode m) {
    switch (m) {
        case ReachMode::enumerate: return "enumerate";
        case ReachMode::forward: return "forward";
        case ReachMode::backward: return "backward";
        case ReachMode::verify: return "verify";
    }
    return "?";
}

struct ReachSpec {
    ReachMode mode = ReachMode::enumerate;
    HPolyhedron domain;
    std::vector<HPolyhedron> output_sets;
    int steps = 1;
    bool anytime = true;

    void validate(const ReluNetwork& net) const {
        if (steps < 1) throw ContractError("steps must be at least 1");
        const bool needs_sets = mode == ReachMode::backward || mode == ReachMode::verify;
        if (needs_sets && output_sets.empty()) throw ContractError(to_string(mode) + " needs at least one output set");
        if (!needs_sets && !output_sets.empty()) throw ContractError(to_string(mode) + " takes no output sets");
        if (domain.dim() != net.input_dim())
            throw DimensionError("domain has dimension " + std::to_string(domain.dim()) + ", network input is " +
                                 std::to_string(net.input_dim()));
        if (steps > 1 && net.input_dim() != net.output_dim())
            throw StructureError("multi-step reachability needs equal input and output dimension");
        for (const auto& y : output_sets)
            if (y.dim() != net.output_dim())
                throw DimensionError("output set has dimension " + std::to_string(y.dim()) + ", network output is " +
                                     std::to_string(net.output_dim()));
    }
};

enum class VerdictStatus { safe, unsafe, incomplete };

inline std::string to_string(VerdictStatus s) {
    switch (s) {
        case VerdictStatus::safe: return "SAFE";
        case VerdictStatus::unsafe: return "UNSAFE";
        case VerdictStatus::incomplete: return "INCOMPLETE";
    }
    return "?";
}

struct Verdict {
    VerdictStatus status = VerdictStatus::incomplete;
    std::optional<Cell> witness;
    std::size_t cells_processed = 0;
    std::optional<std::size_t> total_known;
};

struct ReachOptions {
    MarchOptions march{};
    ProjectionOptions projection{};
    bool minimize = false;       ///< LP-minimize payloads
    std::optional<VectorXd> seed;
};

/// Consumer for reach results; returning false stops the march.
using CellSink = std::function<bool(const Cell&)>;

namespace detail {

inline MarchStats run_march(const ReluNetwork& net, const ReachSpec& spec, LpSolver& lp, const ReachOptions& opt,
                            const CellVisitor& visit) {
    spec.validate(net);
    const ReluNetwork stepped = compose(net, spec.steps);
    const AugmentedNetwork anet(stepped);
    const VectorXd seed = opt.seed ? *opt.seed : default_seed(spec.domain, lp);
    return march(anet, spec.domain, seed, visit, lp, opt.march);
}

}  // namespace detail

/// Cells without payload over spec.domain for the spec.steps-fold network.
inline MarchStats enumerate_cells(const ReluNetwork& net, const ReachSpec& spec, const CellSink& sink, LpSolver& lp,
                                  const ReachOptions& opt = {}) {
    return detail::run_march(net, spec, lp, opt, [&](Cell& c) { return sink(c); });
}

/// Each cell carries the image of its H-representation under its affine map;
/// their union is the forward reachable set of spec.domain.
inline MarchStats forward_reach(const ReluNetwork& net, const ReachSpec& spec, const CellSink& sink, LpSolver& lp,
                                const ReachOptions& opt = {}) {
    const Tolerances& tol = opt.march.tol;
    return detail::run_march(net, spec, lp, opt, [&](Cell& c) {
        HPolyhedron img = affine_image(c.hrep, c.map, lp, tol, opt.projection);
        if (opt.minimize) img = minimize(img, lp, tol);
        c.payload = ForwardPayload{std::move(img)};
        return sink(c);
    });
}

/// Per cell and output set k: hrep intersected with the preimage of set k
/// under the cell's map, or nullopt when that intersection is empty.
inline BackwardPayload backward_payload(const Cell& c, const std::vector<HPolyhedron>& output_sets, LpSolver& lp,
                                        const Tolerances& tol, bool minimized) {
    BackwardPayload pay;
    pay.preimages.reserve(output_sets.size());
    for (std::size_t k = 0; k < output_sets.size(); ++k) {
        HPolyhedron pre = affine_preimage(output_sets[k].retagged(Provenance::output_set(static_cast<int>(k))), c.map, tol);
        HPolyhedron both = intersect(c.hrep, pre, tol);
        if (is_empty(both, lp, tol)) {
            pay.preimages.emplace_back(std::nullopt);
            continue;
        }
        pay.preimages.emplace_back(minimized ? minimize(both, lp, tol) : std::move(both));
    }
    return pay;
}

inline MarchStats backward_reach(const ReluNetwork& net, const ReachSpec& spec, const CellSink& sink, LpSolver& lp,
                                 const ReachOptions& opt = {}) {
    return detail::run_march(net, spec, lp, opt, [&](Cell& c) {
        c.payload = backward_payload(c, spec.output_sets, lp, opt.march.tol, opt.minimize);
        return sink(c);
    });
}

/// Backward reachability against unsafe output sets. With spec.anytime the march
/// stops at the first cell whose preimage payload is nonempty.
inline Verdict verify(const ReluNetwork& net, const ReachSpec& spec, LpSolver& lp, const ReachOptions& opt = {},
                      const CellSink& sink = {}, MarchStats* stats_out = nullptr) {
    Verdict v;
    const MarchStats stats = detail::run_march(net, spec, lp, opt, [&](Cell& c) {
        BackwardPayload pay = backward_payload(c, spec.output_sets, lp, opt.march.tol, opt.minimize);
        const bool hit = pay.any();
        c.payload = std::move(pay);
        if (sink && !sink(c)) return false;
        if (hit && !v.witness) {
            v.witness = c;
            if (spec.anytime) return false;
        }
        return true;
    });
    v.cells_processed = stats.cells;
    if (stats_out) *stats_out = stats;
    if (v.witness) {
        v.status = VerdictStatus::unsafe;
        if (stats.complete) v.total_known = stats.cells;
    } else if (stats.complete) {
        v.status = VerdictStatus::safe;
        v.total_known = stats.cells;
    } else {
        v.status = VerdictStatus::incomplete;
    }
    return v;
}

enum class ArgSense { max, min };

/// Output region where y_index is maximal (or minimal): one row per other
/// output. Closed, so ties belong to the region.
inline HPolyhedron build_argmax_output_set(int index, int num_outputs, ArgSense sense) {
    if (num_outputs < 2) throw ContractError("argmax set needs at least two outputs");
    if (index < 0 || index >= num_outputs)
        throw DimensionError("output index " + std::to_string(index) + " out of range for " + std::to_string(num_outputs) + " outputs");
    HPolyhedron out(num_outputs);
    const double s = sense == ArgSense::max ? 1.0 : -1.0;
    for (int j = 0; j < num_outputs; ++j) {
        if (j == index) continue;
        VectorXd a = VectorXd::Zero(num_outputs);
        a[j] = s;
        a[index] = -s;
        out.add(normalize_constraint(a, 0.0, {Provenance::output_set(0)}));
    }
    return out;
}

}  // namespace nnreach
