// Closed-loop damped pendulum: a ReLU controller and an Euler step folded into
// one network x_{t+1} = F(x_t) on state (angle, velocity). Prints forward
// images over several steps and the states that reach an upright target box.

#include <cstdio>

#include "nnreach/nnreach.hpp"

using namespace nnreach;

namespace {

// Linearized about upright: th' = th + h om, om' = om + h (th - c om + u),
// with torque u = -clip(k1 th + k2 om, -1, 1) = 1 - relu(z + 1) + relu(z - 1).
ReluNetwork pendulum(double h) {
    const double k1 = 2.0, k2 = 1.2, c = 0.1;
    MatrixXd W1(4, 2);
    VectorXd b1(4);
    // the first two neurons pass th + 10 and om + 10 through unchanged on the domain
    W1 << 1, 0, 0, 1, k1, k2, k1, k2;
    b1 << 10, 10, 1, -1;
    MatrixXd W2(2, 4);
    W2 << 1, h, 0, 0, h, 1 - h * c, -h, h;
    const VectorXd b2 = -W2.leftCols(2) * Eigen::Vector2d(10, 10) + Eigen::Vector2d(0, h);
    return ReluNetwork({Layer{W1, b1}, Layer{W2, b2}});
}

}  // namespace

int main() {
    const ReluNetwork net = pendulum(0.1);
    const HPolyhedron domain = HPolyhedron::box(Eigen::Vector2d(-1.0, -1.0), Eigen::Vector2d(1.0, 1.0));
    DenseSimplex lp;

    for (int steps : {1, 3, 6}) {
        ReachSpec spec;
        spec.mode = ReachMode::forward;
        spec.domain = domain;
        spec.steps = steps;
        VectorXd lo = VectorXd::Constant(2, 1e9), hi = VectorXd::Constant(2, -1e9);
        const MarchStats st = forward_reach(net, spec, [&](const Cell& c) {
            const Bounds b = bounding_box(std::get<ForwardPayload>(c.payload).image, lp);
            lo = lo.cwiseMin(b.lo);
            hi = hi.cwiseMax(b.hi);
            return true;
        }, lp);
        std::printf("T=%d: %zu cells, %zu LPs, reachable states within [%.3f, %.3f] x [%.3f, %.3f]\n", steps, st.cells, st.lps,
                    lo[0], hi[0], lo[1], hi[1]);
    }

    ReachSpec back;
    back.mode = ReachMode::backward;
    back.domain = domain;
    back.steps = 5;
    back.output_sets = {HPolyhedron::box(Eigen::Vector2d(-0.2, -0.2), Eigen::Vector2d(0.2, 0.2))};
    std::size_t hits = 0;
    const MarchStats st = backward_reach(net, back, [&](const Cell& c) {
        if (std::get<BackwardPayload>(c.payload).any()) ++hits;
        return true;
    }, lp);
    std::printf("backward T=5: %zu of %zu cells hold states that land in the target box\n", hits, st.cells);
}
