// Advisory-style property check: a five-input, five-output classifier whose
// output 0 must never be the minimum over a small input box. Weights are drawn
// from a fixed seed, so the run is reproducible.

#include <cstdio>
#include <random>

#include "nnreach/nnreach.hpp"

using namespace nnreach;

namespace {

ReluNetwork classifier(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<Layer> layers;
    int in = 5;
    for (int out : {8, 8, 5}) {
        Layer l{MatrixXd(out, in), VectorXd(out)};
        for (Eigen::Index i = 0; i < l.weights.size(); ++i) l.weights.data()[i] = g(rng) / std::sqrt(in);
        for (Eigen::Index i = 0; i < out; ++i) l.bias[i] = 0.3 * g(rng);
        layers.push_back(std::move(l));
        in = out;
    }
    return ReluNetwork(std::move(layers));
}

}  // namespace

int main() {
    const ReluNetwork net = classifier(7);
    DenseSimplex lp;
    for (double r : {0.05, 0.5, 2.0}) {
        ReachSpec spec;
        spec.mode = ReachMode::verify;
        spec.domain = HPolyhedron::box(VectorXd::Constant(5, -r), VectorXd::Constant(5, r));
        spec.output_sets = {build_argmax_output_set(0, 5, ArgSense::min)};
        MarchStats st;
        const Verdict v = verify(net, spec, lp, {}, {}, &st);
        std::printf("radius %.2f: %s after %zu cells (%zu LPs, %.2f s)\n", r, to_string(v.status).c_str(), v.cells_processed, st.lps,
                    st.seconds);
        if (v.witness) {
            const auto& pre = std::get<BackwardPayload>(v.witness->payload).preimages[0];
            const VectorXd x = chebyshev_center(*pre, lp).center;
            std::printf("  output at a witness input:");
            const VectorXd y = net.evaluate(x);
            for (Eigen::Index i = 0; i < y.size(); ++i) std::printf(" %.3f", y[i]);
            std::printf("\n");
        }
    }
}
