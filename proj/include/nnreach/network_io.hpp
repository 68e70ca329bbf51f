#pragma once

#include <json.hpp>

#include <cctype>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nnreach/errors.hpp"
#include "nnreach/network.hpp"

namespace nnreach {

enum class NetworkFormat { nnet, json };

/// Header data carried by an NNet file besides the weights. Means and ranges
/// have input_dim + 1 entries; the last one describes the outputs.
struct NnetHeader {
    std::vector<double> input_mins;
    std::vector<double> input_maxes;
    std::vector<double> means;
    std::vector<double> ranges;
};

struct LoadedNetwork {
    ReluNetwork network;
    std::optional<NnetHeader> nnet_header;
};

namespace detail {

inline std::vector<double> parse_csv_numbers(std::string_view line, int line_no, const std::string& field) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < line.size()) {
        std::size_t comma = line.find(',', pos);
        std::string_view tok = line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        while (!tok.empty() && std::isspace(static_cast<unsigned char>(tok.front()))) tok.remove_prefix(1);
        while (!tok.empty() && std::isspace(static_cast<unsigned char>(tok.back()))) tok.remove_suffix(1);
        if (!tok.empty()) {
            std::string s(tok);
            char* end = nullptr;
            double v = std::strtod(s.c_str(), &end);
            if (end != s.c_str() + s.size())
                throw ParseError("not a number: '" + s + "'", line_no, field);
            out.push_back(v);
        } else if (comma != std::string_view::npos && out.empty() && pos == 0) {
            throw ParseError("empty field", line_no, field);
        }
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

class LineReader {
public:
    explicit LineReader(std::string_view text) : text_(text) {}

    /// Next non-empty line, or nullopt at end of input.
    std::optional<std::string_view> next() {
        while (pos_ < text_.size()) {
            std::size_t nl = text_.find('\n', pos_);
            std::string_view line = text_.substr(pos_, nl == std::string_view::npos ? std::string_view::npos : nl - pos_);
            pos_ = nl == std::string_view::npos ? text_.size() : nl + 1;
            ++line_;
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            if (line.find_first_not_of(" \t") != std::string_view::npos) return line;
        }
        return std::nullopt;
    }

    std::string_view require(const std::string& field) {
        auto l = next();
        if (!l) throw ParseError("unexpected end of file", line_ + 1, field);
        return *l;
    }

    int line() const noexcept { return line_; }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 0;
};

inline std::vector<double> expect_count(std::vector<double> v, std::size_t n, int line, const std::string& field) {
    if (v.size() != n)
        throw ParseError("expected " + std::to_string(n) + " values, found " + std::to_string(v.size()), line, field);
    return v;
}

}  // namespace detail

/// Parses the NNet text format. Weights are returned exactly as stored; the
/// header's normalization constants are kept aside (see fold_nnet_normalization).
inline LoadedNetwork parse_nnet(std::string_view text) {
    detail::LineReader in(text);
    std::string_view line = in.require("header");
    while (line.substr(0, 2) == "//") line = in.require("header");

    auto dims = detail::parse_csv_numbers(line, in.line(), "layer count");
    if (dims.size() < 3) throw ParseError("expected numLayers, inputSize, outputSize[, maxLayerSize]", in.line(), "layer count");
    const int num_layers = static_cast<int>(dims[0]);
    if (num_layers < 1 || dims[0] != num_layers) throw ParseError("invalid layer count", in.line(), "layer count");

    line = in.require("layer sizes");
    auto sizes_d = detail::expect_count(detail::parse_csv_numbers(line, in.line(), "layer sizes"),
                                        static_cast<std::size_t>(num_layers) + 1, in.line(), "layer sizes");
    std::vector<int> sizes;
    for (double s : sizes_d) {
        if (s < 1 || s != static_cast<int>(s)) throw ParseError("invalid layer size", in.line(), "layer sizes");
        sizes.push_back(static_cast<int>(s));
    }
    if (sizes.front() != static_cast<int>(dims[1]) || sizes.back() != static_cast<int>(dims[2]))
        throw StructureError("layer sizes disagree with declared input/output sizes");
    const auto k0 = static_cast<std::size_t>(sizes.front());

    in.require("symmetric flag");
    NnetHeader header;
    line = in.require("input mins");
    header.input_mins = detail::expect_count(detail::parse_csv_numbers(line, in.line(), "input mins"), k0, in.line(), "input mins");
    line = in.require("input maxes");
    header.input_maxes = detail::expect_count(detail::parse_csv_numbers(line, in.line(), "input maxes"), k0, in.line(), "input maxes");
    line = in.require("means");
    header.means = detail::expect_count(detail::parse_csv_numbers(line, in.line(), "means"), k0 + 1, in.line(), "means");
    line = in.require("ranges");
    header.ranges = detail::expect_count(detail::parse_csv_numbers(line, in.line(), "ranges"), k0 + 1, in.line(), "ranges");

    std::vector<Layer> layers;
    for (int l = 0; l < num_layers; ++l) {
        const int rows = sizes[static_cast<std::size_t>(l) + 1], cols = sizes[static_cast<std::size_t>(l)];
        const std::string wf = "layer " + std::to_string(l + 1) + " weights";
        const std::string bf = "layer " + std::to_string(l + 1) + " biases";
        Layer layer{MatrixXd(rows, cols), VectorXd(rows)};
        for (int r = 0; r < rows; ++r) {
            line = in.require(wf);
            auto v = detail::expect_count(detail::parse_csv_numbers(line, in.line(), wf), static_cast<std::size_t>(cols), in.line(), wf);
            for (int c = 0; c < cols; ++c) layer.weights(r, c) = v[static_cast<std::size_t>(c)];
        }
        for (int r = 0; r < rows; ++r) {
            line = in.require(bf);
            auto v = detail::expect_count(detail::parse_csv_numbers(line, in.line(), bf), 1, in.line(), bf);
            layer.bias[r] = v[0];
        }
        layers.push_back(std::move(layer));
    }
    if (in.next()) throw ParseError("trailing data after last layer", in.line(), "end of file");
    return {ReluNetwork(std::move(layers)), std::move(header)};
}

/// JSON weights: {"layers": [{"W": [[...], ...], "b": [...]}, ...]}, W row-major.
inline ReluNetwork parse_json_network(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(e.what(), 0, "json");
    }
    if (!doc.is_object() || !doc.contains("layers") || !doc["layers"].is_array())
        throw ParseError("missing \"layers\" array", 0, "layers");
    std::vector<Layer> layers;
    int li = 0;
    for (const auto& jl : doc["layers"]) {
        ++li;
        const std::string where = "layers[" + std::to_string(li - 1) + "]";
        if (!jl.is_object() || !jl.contains("W") || !jl.contains("b"))
            throw ParseError("layer needs \"W\" and \"b\"", 0, where);
        const auto& jw = jl["W"];
        const auto& jb = jl["b"];
        if (!jw.is_array() || jw.empty() || !jb.is_array()) throw ParseError("W must be a non-empty matrix, b an array", 0, where);
        const auto rows = static_cast<Eigen::Index>(jw.size());
        if (!jw[0].is_array()) throw ParseError("W rows must be arrays", 0, where + ".W");
        const auto cols = static_cast<Eigen::Index>(jw[0].size());
        Layer layer{MatrixXd(rows, cols), VectorXd(static_cast<Eigen::Index>(jb.size()))};
        for (Eigen::Index r = 0; r < rows; ++r) {
            const auto& row = jw[static_cast<std::size_t>(r)];
            if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
                throw StructureError(where + ": W row " + std::to_string(r) + " has the wrong length");
            for (Eigen::Index c = 0; c < cols; ++c) {
                const auto& v = row[static_cast<std::size_t>(c)];
                if (!v.is_number()) throw ParseError("non-numeric weight", 0, where + ".W");
                layer.weights(r, c) = v.get<double>();
            }
        }
        for (std::size_t r = 0; r < jb.size(); ++r) {
            if (!jb[r].is_number()) throw ParseError("non-numeric bias", 0, where + ".b");
            layer.bias[static_cast<Eigen::Index>(r)] = jb[r].get<double>();
        }
        layers.push_back(std::move(layer));
    }
    return ReluNetwork(std::move(layers));
}

inline LoadedNetwork load_network(std::string_view content, NetworkFormat format) {
    if (format == NetworkFormat::nnet) return parse_nnet(content);
    return {parse_json_network(content), std::nullopt};
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

/// Picks the format from the extension: ".nnet" is NNet, anything else JSON.
inline NetworkFormat format_for_path(const std::string& path) {
    return path.size() >= 5 && path.substr(path.size() - 5) == ".nnet" ? NetworkFormat::nnet : NetworkFormat::json;
}

inline LoadedNetwork load_network_file(const std::string& path, std::optional<NetworkFormat> format = std::nullopt) {
    return load_network(read_text_file(path), format.value_or(format_for_path(path)));
}

inline nlohmann::json network_to_json(const ReluNetwork& net) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : net.layers()) {
        nlohmann::json w = nlohmann::json::array();
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) row.push_back(l.weights(r, c));
            w.push_back(std::move(row));
        }
        nlohmann::json b = nlohmann::json::array();
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) b.push_back(l.bias[r]);
        layers.push_back({{"W", std::move(w)}, {"b", std::move(b)}});
    }
    return {{"layers", std::move(layers)}};
}

inline std::string save_json_network(const ReluNetwork& net) { return network_to_json(net).dump() + "\n"; }

/// Writes the NNet format with round-trip precision. Without a header, input
/// bounds are +/-1e300 and normalization is the identity.
inline std::string save_nnet(const ReluNetwork& net, const std::optional<NnetHeader>& header = std::nullopt) {
    std::ostringstream out;
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    auto row = [&](const std::vector<double>& v) {
        std::string s;
        for (double x : v) s += num(x) + ",";
        return s;
    };
    const auto k0 = static_cast<std::size_t>(net.input_dim());
    int max_size = net.input_dim();
    std::vector<int> sizes{net.input_dim()};
    for (const auto& l : net.layers()) {
        sizes.push_back(static_cast<int>(l.weights.rows()));
        max_size = std::max(max_size, sizes.back());
    }
    out << "// written by nnreach\n";
    out << net.layer_count() << "," << net.input_dim() << "," << net.output_dim() << "," << max_size << ",\n";
    for (int s : sizes) out << s << ",";
    out << "\n0,\n";
    NnetHeader h = header.value_or(NnetHeader{std::vector<double>(k0, -1e300), std::vector<double>(k0, 1e300),
                                              std::vector<double>(k0 + 1, 0.0), std::vector<double>(k0 + 1, 1.0)});
    out << row(h.input_mins) << "\n" << row(h.input_maxes) << "\n" << row(h.means) << "\n" << row(h.ranges) << "\n";
    for (const auto& l : net.layers()) {
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) out << num(l.weights(r, c)) << ",";
            out << "\n";
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) out << num(l.bias[r]) << ",\n";
    }
    return out.str();
}

/// Folds the NNet affine normalization into the first and last layers, giving a
/// network on raw (unnormalized) inputs and outputs:
///   x_n = (x - mean_in) / range_in,   y = y_n * range_out + mean_out.
/// Input clamping to [min, max] is not representable and is left to the
/// caller's choice of domain.
inline ReluNetwork fold_nnet_normalization(const ReluNetwork& net, const NnetHeader& h) {
    const auto k0 = static_cast<std::size_t>(net.input_dim());
    if (h.means.size() != k0 + 1 || h.ranges.size() != k0 + 1)
        throw StructureError("normalization constants do not match network input dimension");
    std::vector<Layer> layers = net.layers();
    Layer& first = layers.front();
    for (std::size_t c = 0; c < k0; ++c) {
        if (h.ranges[c] == 0.0) throw StructureError("zero input range in NNet header");
        const auto col = static_cast<Eigen::Index>(c);
        first.bias -= first.weights.col(col) * (h.means[c] / h.ranges[c]);
        first.weights.col(col) /= h.ranges[c];
    }
    Layer& last = layers.back();
    last.weights *= h.ranges[k0];
    last.bias = last.bias * h.ranges[k0] + VectorXd::Constant(last.bias.size(), h.means[k0]);
    return ReluNetwork(std::move(layers));
}

}  // namespace nnreach
