#pragma once

#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nnreach/encoding.hpp"
#include "nnreach/errors.hpp"
#include "nnreach/network_io.hpp"
#include "nnreach/reach.hpp"

namespace nnreach::cli {

enum ExitCode : int { ok = 0, error = 1, unsafe = 2, incomplete = 3 };

struct RunConfig {
    std::string subcommand;  ///< enumerate | forward | backward | verify | check
    std::string network_path;
    std::optional<NetworkFormat> format;
    bool nnet_normalize = false;
    std::string domain;  ///< "box:lo,hi x lo,hi ..." or an H-rep JSON path
    std::vector<std::string> output_sets;
    int steps = 1;
    bool anytime = false;
    std::size_t max_cells = 1'000'000;
    std::size_t max_lps = 100'000'000;
    double max_seconds = 0.0;
    std::string out_path = "cells.jsonl";
    std::string summary_path;  ///< defaults to <out stem>.summary.json
    std::optional<std::vector<double>> seed_point;
    std::uint64_t rng_seed = 0;
    bool minimize = false;
    bool nonempty_only = false;
    bool literal_flip = false;  ///< use the plain flip rule for neighbor patterns
    std::size_t check_samples = 100;
};

inline std::vector<double> parse_number_list(const std::string& text, const std::string& field) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const auto first = tok.find_first_not_of(" \t");
        const auto last = tok.find_last_not_of(" \t");
        if (first == std::string::npos) throw ParseError("empty number in '" + text + "'", 0, field);
        tok = tok.substr(first, last - first + 1);
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end != tok.c_str() + tok.size()) throw ParseError("not a number: '" + tok + "'", 0, field);
        out.push_back(v);
    }
    return out;
}

/// "box:-1,1x-2,2" (spaces allowed around 'x') is the box [-1,1] x [-2,2].
inline HPolyhedron parse_box(const std::string& spec, const std::string& field) {
    const std::string body = spec.substr(4);
    std::vector<double> lo, hi;
    std::size_t pos = 0;
    while (pos <= body.size()) {
        const auto next = body.find('x', pos);
        const std::string part = body.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
        const auto v = parse_number_list(part, field);
        if (v.size() != 2) throw ParseError("each box factor needs 'lo,hi', got '" + part + "'", 0, field);
        lo.push_back(v[0]);
        hi.push_back(v[1]);
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return HPolyhedron::box(Eigen::Map<VectorXd>(lo.data(), static_cast<Eigen::Index>(lo.size())),
                            Eigen::Map<VectorXd>(hi.data(), static_cast<Eigen::Index>(hi.size())));
}

/// Box shorthand, "argmax:i/n" / "argmin:i/n", or a path to an H-rep JSON file.
inline HPolyhedron parse_set(const std::string& spec, const std::string& field, const Tolerances& tol) {
    if (spec.rfind("box:", 0) == 0) return parse_box(spec, field);
    for (auto [prefix, sense] : {std::pair{"argmax:", ArgSense::max}, std::pair{"argmin:", ArgSense::min}}) {
        const std::string p = prefix;
        if (spec.rfind(p, 0) != 0) continue;
        const auto slash = spec.find('/');
        if (slash == std::string::npos) throw ParseError("expected " + p + "<index>/<outputs>", 0, field);
        const auto idx = parse_number_list(spec.substr(p.size(), slash - p.size()), field);
        const auto n = parse_number_list(spec.substr(slash + 1), field);
        return build_argmax_output_set(static_cast<int>(idx.at(0)), static_cast<int>(n.at(0)), sense);
    }
    json j;
    try {
        j = json::parse(read_text_file(spec));
    } catch (const json::parse_error& e) {
        throw ParseError(e.what(), 0, spec);
    }
    return hpolyhedron_from_json(j, tol);
}

inline std::string default_summary_path(const std::string& out) {
    if (out == "-") return "summary.json";
    const auto dot = out.rfind('.');
    const auto slash = out.rfind('/');
    const std::string stem = (dot != std::string::npos && (slash == std::string::npos || dot > slash)) ? out.substr(0, dot) : out;
    return stem + ".summary.json";
}

struct Prepared {
    ReluNetwork net;
    ReachSpec spec;
    ReachOptions options;
    Tolerances tol;
};

inline ReachMode mode_of(const std::string& sub) {
    if (sub == "enumerate") return ReachMode::enumerate;
    if (sub == "forward") return ReachMode::forward;
    if (sub == "backward") return ReachMode::backward;
    if (sub == "verify") return ReachMode::verify;
    throw ContractError("unknown subcommand '" + sub + "'");
}

/// Loads inputs and checks them against the reach preconditions; nothing is computed.
inline Prepared prepare(const RunConfig& cfg) {
    Prepared p;
    p.tol = Tolerances::from_env();
    auto loaded = load_network_file(cfg.network_path, cfg.format);
    p.net = loaded.network;
    if (cfg.nnet_normalize) {
        if (!loaded.nnet_header) throw ContractError("--nnet-normalize needs an NNet network file");
        p.net = fold_nnet_normalization(p.net, *loaded.nnet_header);
    }
    if (cfg.domain.empty()) throw ContractError("a --domain is required");
    p.spec.domain = parse_set(cfg.domain, "domain", p.tol);
    if (cfg.subcommand != "check") p.spec.mode = mode_of(cfg.subcommand);
    for (const auto& s : cfg.output_sets) p.spec.output_sets.push_back(parse_set(s, "output-set", p.tol));
    p.spec.steps = cfg.steps;
    p.spec.anytime = cfg.anytime;
    if (cfg.subcommand != "check") p.spec.validate(p.net);

    auto& m = p.options.march;
    m.tol = p.tol;
    m.max_cells = cfg.max_cells;
    m.max_lps = cfg.max_lps;
    m.max_seconds = cfg.max_seconds;
    m.rng_seed = cfg.rng_seed;
    m.rule = cfg.literal_flip ? NeighborRule::flip : NeighborRule::oriented;
    p.options.minimize = cfg.minimize;
    if (cfg.seed_point) {
        const auto& v = *cfg.seed_point;
        if (static_cast<int>(v.size()) != p.net.input_dim()) throw DimensionError("--seed-point has the wrong dimension");
        p.options.seed = Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    return p;
}

class OutputStream {
public:
    explicit OutputStream(const std::string& path) {
        if (path == "-") {
            out_ = &std::cout;
        } else {
            file_.open(path, std::ios::binary | std::ios::trunc);
            if (!file_) throw Error("cannot write '" + path + "'");
            out_ = &file_;
        }
    }
    std::ostream& get() { return *out_; }

private:
    std::ofstream file_;
    std::ostream* out_ = nullptr;
};

/// Executes one enumerate/forward/backward/verify run: writes the cell stream and
/// the summary, returns the process exit code.
inline int run(const RunConfig& cfg, std::ostream& log = std::cerr) {
    Prepared p = prepare(cfg);
    DenseSimplex lp;
    OutputStream cells(cfg.out_path);
    RunSummary summary;
    summary.mode = p.spec.mode;
    summary.steps = p.spec.steps;
    summary.tol = p.tol;
    summary.domain = p.spec.domain;

    auto sink = [&](const Cell& c) {
        const bool nonempty = std::holds_alternative<ForwardPayload>(c.payload) ||
                              (std::holds_alternative<BackwardPayload>(c.payload) && std::get<BackwardPayload>(c.payload).any());
        if (nonempty) ++summary.nonempty_payloads;
        if (cfg.nonempty_only && !nonempty) return true;
        cells.get() << cell_to_jsonl(c);
        return true;
    };

    switch (p.spec.mode) {
        case ReachMode::enumerate: summary.stats = enumerate_cells(p.net, p.spec, sink, lp, p.options); break;
        case ReachMode::forward: summary.stats = forward_reach(p.net, p.spec, sink, lp, p.options); break;
        case ReachMode::backward: summary.stats = backward_reach(p.net, p.spec, sink, lp, p.options); break;
        case ReachMode::verify:
            summary.verdict = verify(p.net, p.spec, lp, p.options, sink, &summary.stats);
            break;
    }
    cells.get().flush();

    const std::string summary_path = cfg.summary_path.empty() ? default_summary_path(cfg.out_path) : cfg.summary_path;
    OutputStream sum(summary_path);
    sum.get() << summary_to_json(summary).dump(2) << "\n";

    log << summary_status(summary) << ": " << summary.stats.cells << " cells, " << summary.stats.lps << " LPs, "
        << summary.stats.seconds << " s\n";
    if (summary.verdict) {
        switch (summary.verdict->status) {
            case VerdictStatus::safe: return ExitCode::ok;
            case VerdictStatus::unsafe: return ExitCode::unsafe;
            case VerdictStatus::incomplete: return ExitCode::incomplete;
        }
    }
    return summary.stats.complete ? ExitCode::ok : ExitCode::incomplete;
}

struct CheckReport {
    std::size_t cells = 0;
    std::size_t samples = 0;
    std::size_t map_failures = 0;
    std::size_t pattern_failures = 0;
    bool ok() const { return map_failures == 0 && pattern_failures == 0; }
};

/// Re-validates a cell stream: points drawn from each cell's Chebyshev ball must
/// evaluate to C x + d (within 1e-7) and have the cell's activation pattern.
inline CheckReport check_stream(const ReluNetwork& net, int steps, std::istream& in, std::size_t samples_per_cell,
                                std::uint64_t rng_seed, const Tolerances& tol = {}) {
    const ReluNetwork stepped = compose(net, steps);
    DenseSimplex lp;
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif;
    CheckReport rep;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const Cell c = cell_from_json(json::parse(line), stepped.hidden_count(), tol);
        ++rep.cells;
        const Ball ball = chebyshev_center(c.hrep, lp);
        const double r = std::isfinite(ball.radius) ? ball.radius : 1.0;
        const auto d = ball.center.size();
        for (std::size_t s = 0; s < samples_per_cell; ++s) {
            VectorXd dir(d);
            for (Eigen::Index k = 0; k < d; ++k) dir[k] = gauss(rng);
            const double rad = 0.999 * r * std::pow(unif(rng), 1.0 / static_cast<double>(d));
            const VectorXd x = ball.center + rad * dir.normalized();
            ++rep.samples;
            if ((stepped.evaluate(x) - c.map(x)).cwiseAbs().maxCoeff() >= 1e-7) ++rep.map_failures;
            if (!(stepped.activation_pattern(x) == c.ap)) ++rep.pattern_failures;
        }
    }
    return rep;
}

inline int run_check(const RunConfig& cfg, const std::string& stream_path, std::ostream& log = std::cerr) {
    auto loaded = load_network_file(cfg.network_path, cfg.format);
    ReluNetwork net = loaded.network;
    if (cfg.nnet_normalize && loaded.nnet_header) net = fold_nnet_normalization(net, *loaded.nnet_header);
    std::ifstream in(stream_path);
    if (!in) throw Error("cannot open '" + stream_path + "'");
    const CheckReport rep = check_stream(net, cfg.steps, in, cfg.check_samples, cfg.rng_seed, Tolerances::from_env());
    log << "checked " << rep.cells << " cells, " << rep.samples << " samples: " << rep.map_failures << " map mismatches, "
        << rep.pattern_failures << " pattern mismatches\n";
    return rep.ok() ? ExitCode::ok : ExitCode::error;
}

}  // namespace nnreach::cli
