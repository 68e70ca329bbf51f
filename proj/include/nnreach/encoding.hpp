#pragma once

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "nnreach/errors.hpp"
#include "nnreach/geometry.hpp"
#include "nnreach/reach.hpp"
#include "nnreach/rpm.hpp"
#include "nnreach/tolerances.hpp"

namespace nnreach {

using json = nlohmann::ordered_json;

// Provenance tags: "neuron:<layer>:<index>", "domain:<row>", "output:<set>", "derived".
inline std::string provenance_tag(const Provenance& p) {
    switch (p.kind) {
        case Provenance::Kind::neuron: return "neuron:" + std::to_string(p.a) + ":" + std::to_string(p.b);
        case Provenance::Kind::domain: return "domain:" + std::to_string(p.a);
        case Provenance::Kind::output_set: return "output:" + std::to_string(p.a);
        case Provenance::Kind::derived: return "derived";
    }
    return "derived";
}

inline Provenance parse_provenance_tag(const std::string& tag) {
    auto num = [&](std::size_t from, std::size_t to) {
        const std::string s = tag.substr(from, to == std::string::npos ? std::string::npos : to - from);
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size() || s.empty()) throw ParseError("bad provenance tag '" + tag + "'", 0, "provenance");
        return v;
    };
    if (tag == "derived") return Provenance::derived();
    if (tag.rfind("neuron:", 0) == 0) {
        const auto colon = tag.find(':', 7);
        if (colon == std::string::npos) throw ParseError("bad provenance tag '" + tag + "'", 0, "provenance");
        return Provenance::neuron({num(7, colon), num(colon + 1, std::string::npos)});
    }
    if (tag.rfind("domain:", 0) == 0) return Provenance::domain(num(7, std::string::npos));
    if (tag.rfind("output:", 0) == 0) return Provenance::output_set(num(7, std::string::npos));
    throw ParseError("unknown provenance tag '" + tag + "'", 0, "provenance");
}

inline json vector_to_json(const VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

inline json matrix_to_json(const MatrixXd& M) {
    json out = json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
        out.push_back(std::move(row));
    }
    return out;
}

/// {"A": [[...]], "b": [...], "provenance": [[tag, ...], ...]}; "dim" is
/// included so that a polyhedron with no rows still round-trips.
inline json hpolyhedron_to_json(const HPolyhedron& p) {
    json prov = json::array();
    for (const auto& c : p.constraints()) {
        json tags = json::array();
        for (const auto& t : c.provenance) tags.push_back(provenance_tag(t));
        prov.push_back(std::move(tags));
    }
    return json{{"A", matrix_to_json(p.A())}, {"b", vector_to_json(p.b())}, {"provenance", std::move(prov)}, {"dim", p.dim()}};
}

namespace detail {

inline VectorXd json_to_vector(const json& j, const std::string& field) {
    if (!j.is_array()) throw ParseError("expected an array", 0, field);
    VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ParseError("expected a number", 0, field);
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

inline MatrixXd json_to_matrix(const json& j, const std::string& field, Eigen::Index cols_if_empty = 0) {
    if (!j.is_array()) throw ParseError("expected a matrix", 0, field);
    if (j.empty()) return MatrixXd(0, cols_if_empty);
    const auto cols = static_cast<Eigen::Index>(j[0].is_array() ? j[0].size() : 0);
    MatrixXd M(static_cast<Eigen::Index>(j.size()), cols);
    for (std::size_t r = 0; r < j.size(); ++r) {
        VectorXd row = json_to_vector(j[r], field);
        if (row.size() != cols) throw ParseError("ragged matrix rows", 0, field);
        M.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    return M;
}

}  // namespace detail

/// Rows are stored as given (already normalized when written by this library);
/// hand-written files are normalized on read.
inline HPolyhedron hpolyhedron_from_json(const json& j, const Tolerances& tol = {}) {
    if (!j.is_object() || !j.contains("A") || !j.contains("b")) throw ParseError("polyhedron needs \"A\" and \"b\"", 0, "hrep");
    const Eigen::Index dim = j.contains("dim") ? j["dim"].get<Eigen::Index>() : 0;
    MatrixXd A = detail::json_to_matrix(j["A"], "A", dim);
    VectorXd b = detail::json_to_vector(j["b"], "b");
    if (A.rows() != b.size()) throw ParseError("A has " + std::to_string(A.rows()) + " rows, b has " + std::to_string(b.size()), 0, "b");
    if (dim > 0 && A.cols() != dim) throw ParseError("A has " + std::to_string(A.cols()) + " columns, dim is " + std::to_string(dim), 0, "A");
    std::vector<std::vector<Provenance>> prov;
    if (j.contains("provenance")) {
        const auto& jp = j["provenance"];
        if (!jp.is_array() || jp.size() != static_cast<std::size_t>(A.rows()))
            throw ParseError("provenance must have one entry per row", 0, "provenance");
        for (const auto& entry : jp) {
            std::vector<Provenance> tags;
            if (entry.is_string())
                tags.push_back(parse_provenance_tag(entry.get<std::string>()));
            else if (entry.is_array())
                for (const auto& t : entry) tags.push_back(parse_provenance_tag(t.get<std::string>()));
            else
                throw ParseError("provenance entries must be strings or arrays of strings", 0, "provenance");
            prov.push_back(std::move(tags));
        }
    }
    return HPolyhedron::from_matrix(A, b, std::move(prov), tol);
}

inline json payload_to_json(const Payload& p) {
    if (const auto* f = std::get_if<ForwardPayload>(&p)) return json{{"kind", "forward"}, {"image", hpolyhedron_to_json(f->image)}};
    if (const auto* b = std::get_if<BackwardPayload>(&p)) {
        if (!b->any()) return nullptr;
        json sets = json::array();
        for (const auto& s : b->preimages) sets.push_back(s ? hpolyhedron_to_json(*s) : json(nullptr));
        return json{{"kind", "backward"}, {"preimages", std::move(sets)}};
    }
    return nullptr;
}

/// {"ap": base64, "hrep": {...}, "C": [[...]], "d": [...], "payload": {...}|null}
inline json cell_to_json(const Cell& c) {
    return json{{"ap", c.ap.to_base64()},
                {"hrep", hpolyhedron_to_json(c.hrep)},
                {"C", matrix_to_json(c.map.C)},
                {"d", vector_to_json(c.map.d)},
                {"payload", payload_to_json(c.payload)}};
}

/// One JSONL line, newline included.
inline std::string cell_to_jsonl(const Cell& c) { return cell_to_json(c).dump() + "\n"; }

/// Decodes a cell record. `hidden_count` is needed to size the pattern.
inline Cell cell_from_json(const json& j, std::size_t hidden_count, const Tolerances& tol = {}) {
    for (const char* key : {"ap", "hrep", "C", "d"})
        if (!j.contains(key)) throw ParseError(std::string("cell record lacks \"") + key + "\"", 0, key);
    Cell c;
    c.ap = ActivationPattern::from_base64(j["ap"].get<std::string>(), hidden_count);
    c.hrep = hpolyhedron_from_json(j["hrep"], tol);
    c.map.d = detail::json_to_vector(j["d"], "d");
    c.map.C = detail::json_to_matrix(j["C"], "C", c.hrep.dim());
    if (c.map.C.rows() != c.map.d.size()) throw ParseError("C and d disagree in output dimension", 0, "C");
    if (j.contains("payload") && !j["payload"].is_null()) {
        const auto& p = j["payload"];
        const std::string kind = p.value("kind", "");
        if (kind == "forward") {
            c.payload = ForwardPayload{hpolyhedron_from_json(p["image"], tol)};
        } else if (kind == "backward") {
            BackwardPayload b;
            for (const auto& s : p["preimages"]) {
                if (s.is_null())
                    b.preimages.emplace_back(std::nullopt);
                else
                    b.preimages.emplace_back(hpolyhedron_from_json(s, tol));
            }
            c.payload = std::move(b);
        } else {
            throw ParseError("unknown payload kind '" + kind + "'", 0, "payload");
        }
    }
    return c;
}

/// {"status": ..., "witness": {...}|null, "cells_processed": n, "total_known": n|null}
inline json verdict_to_json(const Verdict& v) {
    return json{{"status", to_string(v.status)},
                {"witness", v.witness ? cell_to_json(*v.witness) : json(nullptr)},
                {"cells_processed", v.cells_processed},
                {"total_known", v.total_known ? json(*v.total_known) : json(nullptr)}};
}

inline json tolerances_to_json(const Tolerances& t) {
    return json{{"eps_zero", t.zero}, {"eps_dup", t.dup}, {"eps_lp", t.lp}, {"eps_rank", t.rank}};
}

struct RunSummary {
    ReachMode mode = ReachMode::enumerate;
    int steps = 1;
    MarchStats stats;
    std::optional<Verdict> verdict;
    Tolerances tol;
    HPolyhedron domain;
    std::size_t nonempty_payloads = 0;
};

inline std::string summary_status(const RunSummary& s) {
    if (s.verdict) return to_string(s.verdict->status);
    return s.stats.complete ? "COMPLETE" : "INCOMPLETE";
}

/// Fixed field order. Verify runs add "verdict"; every run records the
/// tolerances and domain it used.
inline json summary_to_json(const RunSummary& s) {
    json out;
    out["status"] = summary_status(s);
    out["mode"] = to_string(s.mode);
    out["steps"] = s.steps;
    out["cells"] = s.stats.cells;
    out["cells_processed"] = s.verdict ? s.verdict->cells_processed : s.stats.cells;
    out["total_known"] = s.stats.complete ? json(s.stats.cells) : json(nullptr);
    out["discarded"] = s.stats.discarded;
    out["lp_count"] = s.stats.lps;
    out["wall_time_s"] = s.stats.seconds;
    out["complete"] = s.stats.complete;
    out["budget_exceeded"] = s.stats.budget_exceeded.empty() ? json(nullptr) : json(s.stats.budget_exceeded);
    out["nonempty_payloads"] = s.nonempty_payloads;
    out["verdict"] = s.verdict ? verdict_to_json(*s.verdict) : json(nullptr);
    out["tolerances"] = tolerances_to_json(s.tol);
    out["domain"] = hpolyhedron_to_json(s.domain);
    return out;
}

}  // namespace nnreach
