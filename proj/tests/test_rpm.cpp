#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace nnreach;
using namespace nnreach::testing;

namespace {

HPolyhedron square(double r = 1.0) { return HPolyhedron::box(VectorXd::Constant(2, -r), VectorXd::Constant(2, r)); }

ReluNetwork dense(std::initializer_list<std::pair<MatrixXd, VectorXd>> layers) {
    std::vector<Layer> out;
    for (const auto& [W, b] : layers) out.push_back(Layer{W, b});
    return ReluNetwork(std::move(out));
}

MatrixXd mat(int r, int c, std::initializer_list<double> v) {
    MatrixXd m(r, c);
    auto it = v.begin();
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = *it++;
    return m;
}

VectorXd vec(std::initializer_list<double> v) {
    VectorXd x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double e : v) x[i++] = e;
    return x;
}

// h1 = relu(x1), h2 = relu(x2 + 2); g1 = relu(h1), g2 = relu(-h1), g3 = relu(h2 - 2).
// Left of x1 = 0 both g1 and g2 are dead with a zero row; across the facet g1
// revives and g2 stays off.
ReluNetwork revive_net() {
    return dense({{mat(2, 2, {1, 0, 0, 1}), vec({0, 2})},
                  {mat(3, 2, {1, 0, -1, 0, 0, 1}), vec({0, 0, -2})},
                  {mat(1, 3, {1, 1, 1}), vec({0})}});
}

std::size_t facet_index(const Cell& c, NeuronId id) {
    for (std::size_t i = 0; i < c.hrep.size(); ++i)
        for (const auto& p : c.hrep[i].provenance)
            if (p == Provenance::neuron(id)) return i;
    return c.hrep.size();
}

Cell build(const ReluNetwork& net, const VectorXd& x, const HPolyhedron& domain) {
    DenseSimplex lp;
    auto r = cell_from_ap(AugmentedNetwork(net), net.activation_pattern(x), domain, lp);
    EXPECT_EQ(r.status, CellStatus::ok);
    return *r.cell;
}

std::size_t count_cells(const ReluNetwork& net, const HPolyhedron& domain, MarchOptions opt = {}, std::optional<VectorXd> seed = {}) {
    DenseSimplex lp;
    return explicit_pwa(net, domain, lp, opt, seed).cells.size();
}

}  // namespace

TEST(AffineMapFromAp, SingleNeuron) {
    AugmentedNetwork a(relu_1d());
    AffineMap on = affine_map_from_ap(a, ActivationPattern::from_bits({1}));
    AffineMap off = affine_map_from_ap(a, ActivationPattern::from_bits({0}));
    EXPECT_DOUBLE_EQ(on.C(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(on.d[0], 0.0);
    EXPECT_DOUBLE_EQ(off.C(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(off.d[0], 0.0);
    EXPECT_THROW(affine_map_from_ap(a, ActivationPattern::from_bits({1, 1})), DimensionError);
}

TEST(AffineMapFromAp, AllOnesIsPlainProduct) {
    Rng rng(3);
    ReluNetwork net = random_network(rng, 3, {4, 5}, 2);
    AugmentedNetwork a(net);
    ActivationPattern ones(net.hidden_count());
    for (std::size_t i = 0; i < ones.size(); ++i) ones.set(i, true);
    AffineMap m = affine_map_from_ap(a, ones);
    MatrixXd prod = a.weights()[2] * a.weights()[1] * a.weights()[0];
    EXPECT_LT((m.C - prod.leftCols(3)).norm(), 1e-12);
    EXPECT_LT((m.d - prod.col(3)).norm(), 1e-12);
}

TEST(AffineMapFromAp, MatchesForwardPassInsideCells) {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        ReluNetwork net = random_network(rng, 3, {8, 8, 8}, 2);
        AugmentedNetwork a(net);
        for (int s = 0; s < 200; ++s) {
            VectorXd x = uniform_in_box(rng, VectorXd::Constant(3, -2), VectorXd::Constant(3, 2));
            AffineMap m = affine_map_from_ap(a, net.activation_pattern(x));
            EXPECT_LT((m(x) - net.evaluate(x)).cwiseAbs().maxCoeff(), 1e-9);
        }
    }
}

TEST(NeuronHyperplane, ActiveReluStoresNegatedRow) {
    AugmentedNetwork a(relu_1d());
    Constraint c = neuron_hyperplane(a, ActivationPattern::from_bits({1}), {1, 0});
    EXPECT_DOUBLE_EQ(c.a[0], -1.0);
    EXPECT_DOUBLE_EQ(c.b, 0.0);
    EXPECT_EQ(c.provenance.front(), Provenance::neuron({1, 0}));
    EXPECT_THROW(neuron_hyperplane(a, ActivationPattern::from_bits({1}), {2, 0}), DimensionError);
    EXPECT_THROW(neuron_hyperplane(a, ActivationPattern::from_bits({1}), {1, 1}), DimensionError);
}

TEST(NeuronHyperplane, DeadNeuronIsDegenerate) {
    AugmentedNetwork a(revive_net());
    Constraint c = neuron_hyperplane(a, ActivationPattern::from_bits({0, 1, 0, 0, 1}), {2, 0});
    EXPECT_TRUE(c.degenerate());
}

TEST(NeuronHyperplane, SignMatchesPreactivation) {
    Rng rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        ReluNetwork net = random_network(rng, 2, {6, 6, 6}, 1);
        AugmentedNetwork a(net);
        Cell cell = build(net, uniform_in_box(rng, VectorXd::Constant(2, -1), VectorXd::Constant(2, 1)), square());
        for (int s = 0; s < 100; ++s) {
            const VectorXd x = sample_in_ball(rng, cell.interior);
            const VectorXd pre = net.preactivations(x);
            for (std::size_t k = 0; k < net.hidden_count(); ++k) {
                Constraint c = neuron_hyperplane(a, cell.ap, net.neuron_at(k));
                if (c.zero_normal()) continue;
                // stored halfspace holds inside, and its slack tracks |preactivation|
                EXPECT_GE(c.slack(x), 0.0);
                EXPECT_EQ(cell.ap[k], pre[static_cast<Eigen::Index>(k)] > 0.0);
            }
        }
    }
}

TEST(CellFromAp, SingleNeuronHalfInterval) {
    DenseSimplex lp;
    auto r = cell_from_ap(AugmentedNetwork(relu_1d()), ActivationPattern::from_bits({1}),
                          HPolyhedron::box(VectorXd::Constant(1, -1), VectorXd::Ones(1)), lp);
    ASSERT_EQ(r.status, CellStatus::ok);
    const auto& h = r.cell->hrep;
    ASSERT_EQ(h.size(), 2u);
    EXPECT_DOUBLE_EQ(h[0].a[0], -1.0);
    EXPECT_DOUBLE_EQ(h[0].b, 0.0);
    EXPECT_TRUE(h[0].has_kind(Provenance::Kind::neuron));
    EXPECT_DOUBLE_EQ(h[1].a[0], 1.0);
    EXPECT_DOUBLE_EQ(h[1].b, 1.0);
    EXPECT_TRUE(h[1].has_kind(Provenance::Kind::domain));
}

TEST(CellFromAp, UnrealizablePatternIsEmptyOrFlat) {
    DenseSimplex lp;
    ReluNetwork net = dense({{mat(2, 1, {1, 1}), vec({0, -2})}, {mat(1, 2, {1, 1}), vec({0})}});
    auto r = cell_from_ap(AugmentedNetwork(net), ActivationPattern::from_bits({0, 1}),
                          HPolyhedron::box(VectorXd::Constant(1, -1), VectorXd::Ones(1)), lp);
    EXPECT_EQ(r.status, CellStatus::empty);
    EXPECT_FALSE(r.cell);
}

TEST(CellFromAp, ArrangementCellsUseOnlyTheThreeLines) {
    Rng rng(11);
    auto arr = arrangement_network(rng, 3);
    DenseSimplex lp;
    AugmentedNetwork a(arr.net);
    const HPolyhedron dom = HPolyhedron::box(arr.lo, arr.hi);
    std::set<std::vector<int>> seen;
    for (int s = 0; s < 2000; ++s) {
        VectorXd x = uniform_in_box(rng, arr.lo, arr.hi);
        auto ap = arr.net.activation_pattern(x);
        if (!seen.insert(ap.bits()).second) continue;
        auto r = cell_from_ap(a, ap, dom, lp);
        ASSERT_EQ(r.status, CellStatus::ok);
        std::size_t neuron_rows = 0;
        for (const auto& c : r.cell->hrep.constraints()) {
            if (!c.has_kind(Provenance::Kind::neuron)) continue;
            ++neuron_rows;
            const int i = c.provenance.front().b;
            const VectorXd w = arr.net.layers()[0].weights.row(i).transpose();
            EXPECT_NEAR(std::abs(c.a.dot(w)), 1.0, 1e-12);
        }
        EXPECT_LE(neuron_rows, 3u);
        EXPECT_TRUE(r.cell->hrep.contains(x, 1e-9));
    }
    EXPECT_EQ(seen.size(), 7u);
}

TEST(CellFromAp, ComposedReluAddsNoNewFacet) {
    ReluNetwork c = compose(relu_1d(), 2);
    DenseSimplex lp;
    AugmentedNetwork a(c);
    const HPolyhedron dom = HPolyhedron::box(VectorXd::Constant(1, -1), VectorXd::Ones(1));
    for (double x : {-0.5, 0.5}) {
        auto ap = c.activation_pattern(VectorXd::Constant(1, x));
        auto r = cell_from_ap(a, ap, dom, lp);
        ASSERT_EQ(r.status, CellStatus::ok);
        std::size_t neuron_facets = 0;
        for (const auto& f : r.cell->hrep.constraints())
            if (f.has_kind(Provenance::Kind::neuron)) ++neuron_facets;
        EXPECT_EQ(neuron_facets, 1u);
        if (x < 0) {
            ASSERT_EQ(r.cell->dead_neurons.size(), 1u);
            EXPECT_EQ(r.cell->dead_neurons.front(), (NeuronId{2, 0}));
        } else {
            // the second neuron's row x >= 0 merged into the first's
            const auto& f = r.cell->hrep[facet_index(*r.cell, {1, 0})];
            EXPECT_EQ(f.provenance.size(), 2u);
        }
    }
}

TEST(NeighborAp, SingleLayerFlipsExactlyOneBit) {
    Rng rng(13);
    ReluNetwork net = random_network(rng, 2, {10}, 1);
    DenseSimplex lp;
    AugmentedNetwork a(net);
    auto pwa = explicit_pwa(net, square(), lp);
    for (const auto& cell : pwa.cells)
        for (const auto& f : cell.hrep.constraints()) {
            if (f.has_kind(Provenance::Kind::domain)) continue;
            auto n = neighbor_ap(a, cell, f);
            std::size_t diff = 0;
            for (std::size_t k = 0; k < n.size(); ++k) diff += n[k] != cell.ap[k];
            EXPECT_EQ(diff, 1u);
        }
}

TEST(NeighborAp, DeadNeuronsFollowCrossFacetOracle) {
    ReluNetwork net = revive_net();
    AugmentedNetwork a(net);
    DenseSimplex lp;
    Cell left = build(net, vec({-0.5, 0.5}), square());
    ASSERT_EQ(left.dead_neurons.size(), 2u);
    const std::size_t f = facet_index(left, {1, 0});
    ASSERT_LT(f, left.hrep.size());
    auto probe = cross_facet(a, left, f, lp);
    ASSERT_TRUE(probe);
    EXPECT_TRUE(probe->agrees()) << probe->expected.to_string() << " vs " << probe->got.to_string();
    EXPECT_EQ(probe->got.bits(), (std::vector<int>{1, 1, 1, 0, 1}));
}

TEST(NeighborAp, LiteralFlipRuleMisreadsRevivedNeuron) {
    ReluNetwork net = revive_net();
    AugmentedNetwork a(net);
    DenseSimplex lp;
    Cell left = build(net, vec({-0.5, 0.5}), square());
    auto probe = cross_facet(a, left, facet_index(left, {1, 0}), lp, NeighborRule::flip);
    ASSERT_TRUE(probe);
    EXPECT_FALSE(probe->agrees());
    EXPECT_EQ(probe->got.bits(), (std::vector<int>{1, 1, 1, 1, 1}));

    // marching from the left with the literal rule never reaches the right half
    MarchOptions literal;
    literal.rule = NeighborRule::flip;
    EXPECT_EQ(count_cells(net, square(), literal, vec({-0.5, 0.5})), 2u);
    EXPECT_EQ(count_cells(net, square(), {}, vec({-0.5, 0.5})), 4u);
}

TEST(NeighborAp, DuplicateNeuronsBothFlip) {
    // neurons 0 and 1 share the line x1 = 0.3
    ReluNetwork net = dense({{mat(3, 2, {1, 0, 2, 0, 0, 1}), vec({-0.3, -0.6, 0})}, {mat(1, 3, {1, 1, 1}), vec({0})}});
    AugmentedNetwork a(net);
    DenseSimplex lp;
    Cell c = build(net, vec({0.8, 0.5}), square());
    const std::size_t f = facet_index(c, {1, 0});
    ASSERT_LT(f, c.hrep.size());
    EXPECT_EQ(f, facet_index(c, {1, 1}));
    auto probe = cross_facet(a, c, f, lp);
    ASSERT_TRUE(probe);
    EXPECT_TRUE(probe->agrees());
    EXPECT_EQ(probe->got.bits(), (std::vector<int>{0, 0, 1}));
}

TEST(NeighborAp, RejectsDomainFacet) {
    Cell c = build(relu_1d(), VectorXd::Constant(1, 0.5), HPolyhedron::box(VectorXd::Constant(1, -1), VectorXd::Ones(1)));
    AugmentedNetwork a(relu_1d());
    for (const auto& f : c.hrep.constraints())
        if (f.has_kind(Provenance::Kind::domain)) EXPECT_THROW(neighbor_ap(a, c, f), ContractError);
}

TEST(NeighborAp, RandomDeepNetsMatchOracle) {
    Rng rng(17);
    std::size_t probed = 0;
    for (int trial = 0; trial < 6; ++trial) {
        const std::vector<int> hidden = trial % 2 ? std::vector<int>{8, 8, 8} : std::vector<int>{12, 12};
        ReluNetwork net = random_network(rng, 2, hidden, 1);
        AugmentedNetwork a(net);
        DenseSimplex lp;
        auto pwa = explicit_pwa(net, square(), lp);
        ASSERT_TRUE(pwa.stats.complete);
        for (const auto& cell : pwa.cells)
            for (std::size_t f = 0; f < cell.hrep.size(); ++f) {
                if (cell.hrep[f].has_kind(Provenance::Kind::domain)) continue;
                auto probe = cross_facet(a, cell, f, lp);
                if (!probe) continue;
                ++probed;
                EXPECT_TRUE(probe->agrees()) << "trial " << trial;
            }
    }
    EXPECT_GT(probed, 100u);
}

TEST(March, SingleNeuronHasTwoCells) {
    EXPECT_EQ(count_cells(relu_1d(), HPolyhedron::box(VectorXd::Constant(1, -1), VectorXd::Ones(1))), 2u);
}

TEST(March, ArrangementCountsMatchFormula) {
    Rng rng(19);
    for (int k = 1; k <= 8; ++k) {
        auto arr = arrangement_network(rng, k);
        const std::size_t expected = 1 + k + k * (k - 1) / 2;
        EXPECT_EQ(count_cells(arr.net, HPolyhedron::box(arr.lo, arr.hi)), expected) << "k=" << k;
        std::set<std::vector<int>> grid;
        for (int i = 0; i < 300; ++i)
            for (int j = 0; j < 300; ++j) {
                VectorXd x(2);
                x << arr.lo[0] + (arr.hi[0] - arr.lo[0]) * (i + 0.5) / 300, arr.lo[1] + (arr.hi[1] - arr.lo[1]) * (j + 0.5) / 300;
                grid.insert(arr.net.activation_pattern(x).bits());
            }
        EXPECT_EQ(grid.size(), expected) << "k=" << k;
    }
}

TEST(March, CellsSatisfySamplingEquivalence) {
    Rng rng(23);
    for (int trial = 0; trial < 4; ++trial) {
        ReluNetwork net = random_network(rng, 2 + trial % 2, {8, 8}, 2);
        const int d = net.input_dim();
        DenseSimplex lp;
        auto pwa = explicit_pwa(net, HPolyhedron::box(VectorXd::Constant(d, -1), VectorXd::Constant(d, 1)), lp);
        ASSERT_TRUE(pwa.stats.complete);
        for (const auto& cell : pwa.cells)
            for (int s = 0; s < 100; ++s) {
                const VectorXd x = sample_in_ball(rng, cell.interior);
                ASSERT_TRUE(cell.hrep.contains(x));
                EXPECT_LT((net.evaluate(x) - cell.map(x)).cwiseAbs().maxCoeff(), 1e-7);
                EXPECT_TRUE(net.activation_pattern(x) == cell.ap);
            }
    }
}

TEST(March, CoverageAndDisjointness) {
    Rng rng(29);
    for (int trial = 0; trial < 4; ++trial) {
        ReluNetwork net = random_network(rng, 2, {10, 10}, 1);
        DenseSimplex lp;
        const VectorXd lo = VectorXd::Constant(2, -1), hi = VectorXd::Constant(2, 1);
        auto pwa = explicit_pwa(net, HPolyhedron::box(lo, hi), lp);
        CellIndex index(pwa.cells, lo, hi);
        for (int s = 0; s < 2000; ++s) {
            VectorXd x = uniform_in_box(rng, lo, hi);
            EXPECT_GE(index.containing(x, 1e-8).size(), 1u);
            EXPECT_LE(index.containing(x, -1e-6).size(), 1u);
        }
    }
}

TEST(March, VisitedKeysNeverRepeat) {
    Rng rng(31);
    ReluNetwork net = random_network(rng, 2, {10, 10}, 1);
    DenseSimplex lp;
    std::unordered_set<ApKey, ApKeyHash> keys;
    MarchStats st = march(AugmentedNetwork(net), square(), VectorXd::Zero(2), [&](Cell& c) {
        EXPECT_TRUE(keys.insert(c.ap.key()).second);
        return true;
    }, lp);
    EXPECT_TRUE(st.complete);
    EXPECT_EQ(st.cells, keys.size());
    EXPECT_EQ(st.lps, lp.solve_count());
}

TEST(March, VisitorStopsEarly) {
    Rng rng(37);
    ReluNetwork net = random_network(rng, 2, {10, 10}, 1);
    DenseSimplex lp;
    std::size_t seen = 0;
    MarchStats st = march(AugmentedNetwork(net), square(), VectorXd::Zero(2), [&](Cell&) { return ++seen < 3; }, lp);
    EXPECT_EQ(seen, 3u);
    EXPECT_EQ(st.cells, 3u);
    EXPECT_TRUE(st.stopped_by_visitor);
    EXPECT_FALSE(st.complete);
}

TEST(March, CellBudgetFlagsIncomplete) {
    Rng rng(41);
    ReluNetwork net = random_network(rng, 2, {10, 10}, 1);
    MarchOptions opt;
    opt.max_cells = 5;
    DenseSimplex lp;
    auto pwa = explicit_pwa(net, square(), lp, opt);
    EXPECT_EQ(pwa.cells.size(), 5u);
    EXPECT_EQ(pwa.stats.budget_exceeded, "cells");
    EXPECT_FALSE(pwa.stats.complete);
}

TEST(March, SeedOnHyperplaneIsPerturbed) {
    DenseSimplex lp;
    const HPolyhedron dom = HPolyhedron::box(VectorXd::Constant(1, -1), VectorXd::Ones(1));
    VectorXd s = generic_seed(relu_1d(), dom, VectorXd::Zero(1), lp, 0);
    EXPECT_GT(std::abs(s[0]), 0.0);
    EXPECT_LT(std::abs(s[0]), 1e-5);
    EXPECT_THROW(generic_seed(relu_1d(), dom, VectorXd::Constant(1, 2.0), lp, 0), ContractError);
}

TEST(March, SameResultFromEverySeed) {
    Rng rng(43);
    ReluNetwork net = random_network(rng, 2, {8, 8}, 1);
    const std::size_t ref = count_cells(net, square());
    for (int s = 0; s < 5; ++s)
        EXPECT_EQ(count_cells(net, square(), {}, uniform_in_box(rng, VectorXd::Constant(2, -1), VectorXd::Constant(2, 1))), ref);
}
