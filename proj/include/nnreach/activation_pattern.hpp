#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "nnreach/errors.hpp"

namespace nnreach {

/// Identity of a hidden neuron: 1-based layer, 0-based index within the layer.
struct NeuronId {
    int layer = 0;
    int index = 0;

    friend bool operator==(const NeuronId&, const NeuronId&) = default;
    friend auto operator<=>(const NeuronId&, const NeuronId&) = default;
};

/// Exact, hashable key for an activation pattern. Two keys compare equal iff
/// the patterns they came from have identical length and bits.
class ApKey {
public:
    ApKey() = default;
    ApKey(std::size_t size, std::vector<std::uint64_t> words) : size_(size), words_(std::move(words)) {}

    friend bool operator==(const ApKey&, const ApKey&) = default;

    std::size_t hash() const noexcept {
        // splitmix-style mixing over the packed words
        std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ size_;
        for (std::uint64_t w : words_) {
            std::uint64_t z = w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            h ^= z ^ (z >> 31);
        }
        return static_cast<std::size_t>(h);
    }

private:
    std::size_t size_ = 0;
    std::vector<std::uint64_t> words_;
};

struct ApKeyHash {
    std::size_t operator()(const ApKey& k) const noexcept { return k.hash(); }
};

/// Packed binary vector with one bit per hidden neuron, layer-major.
/// Bit = 1 iff the neuron's preactivation is strictly positive.
class ActivationPattern {
public:
    ActivationPattern() = default;
    explicit ActivationPattern(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

    static ActivationPattern from_bits(const std::vector<int>& bits) {
        ActivationPattern ap(bits.size());
        for (std::size_t i = 0; i < bits.size(); ++i) ap.set(i, bits[i] != 0);
        return ap;
    }

    std::size_t size() const noexcept { return size_; }

    bool operator[](std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1ULL; }

    void set(std::size_t i, bool value) {
        const std::uint64_t mask = 1ULL << (i % 64);
        if (value)
            words_[i / 64] |= mask;
        else
            words_[i / 64] &= ~mask;
    }

    void flip(std::size_t i) { words_[i / 64] ^= 1ULL << (i % 64); }

    std::size_t count() const noexcept {
        std::size_t n = 0;
        for (auto w : words_) n += static_cast<std::size_t>(__builtin_popcountll(w));
        return n;
    }

    ApKey key() const { return ApKey(size_, words_); }

    std::vector<int> bits() const {
        std::vector<int> out(size_);
        for (std::size_t i = 0; i < size_; ++i) out[i] = (*this)[i] ? 1 : 0;
        return out;
    }

    /// Bits packed LSB-first into bytes, then standard base64 with padding.
    std::string to_base64() const;
    static ActivationPattern from_base64(std::string_view text, std::size_t size);

    std::string to_string() const {
        std::string s(size_, '0');
        for (std::size_t i = 0; i < size_; ++i)
            if ((*this)[i]) s[i] = '1';
        return s;
    }

    friend bool operator==(const ActivationPattern&, const ActivationPattern&) = default;

private:
    std::size_t size_ = 0;
    std::vector<std::uint64_t> words_;
};

inline ApKey ap_key(const ActivationPattern& ap) { return ap.key(); }

namespace detail {

inline constexpr char kBase64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

inline std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out += kBase64Alphabet[(v >> 18) & 63];
        out += kBase64Alphabet[(v >> 12) & 63];
        out += kBase64Alphabet[(v >> 6) & 63];
        out += kBase64Alphabet[v & 63];
    }
    if (i + 1 == bytes.size()) {
        std::uint32_t v = bytes[i] << 16;
        out += kBase64Alphabet[(v >> 18) & 63];
        out += kBase64Alphabet[(v >> 12) & 63];
        out += "==";
    } else if (i + 2 == bytes.size()) {
        std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out += kBase64Alphabet[(v >> 18) & 63];
        out += kBase64Alphabet[(v >> 12) & 63];
        out += kBase64Alphabet[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

inline std::vector<std::uint8_t> base64_decode(std::string_view text) {
    auto value = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    if (text.size() % 4 != 0) throw ParseError("base64 length not a multiple of 4", 0, "ap");
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int v[4];
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            char c = text[i + k];
            if (c == '=' && i + 4 == text.size() && k >= 2) {
                v[k] = 0;
                ++pad;
                continue;
            }
            if (pad > 0 || (v[k] = value(c)) < 0)
                throw ParseError(std::string("invalid base64 character '") + c + "'", 0, "ap");
        }
        std::uint32_t n = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
        out.push_back(static_cast<std::uint8_t>((n >> 16) & 0xff));
        if (pad < 2) out.push_back(static_cast<std::uint8_t>((n >> 8) & 0xff));
        if (pad < 1) out.push_back(static_cast<std::uint8_t>(n & 0xff));
    }
    return out;
}

}  // namespace detail

inline std::string ActivationPattern::to_base64() const {
    std::vector<std::uint8_t> bytes((size_ + 7) / 8, 0);
    for (std::size_t i = 0; i < size_; ++i)
        if ((*this)[i]) bytes[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    return detail::base64_encode(bytes);
}

inline ActivationPattern ActivationPattern::from_base64(std::string_view text, std::size_t size) {
    auto bytes = detail::base64_decode(text);
    if (bytes.size() != (size + 7) / 8)
        throw ParseError("activation pattern has " + std::to_string(bytes.size()) +
                             " bytes, expected " + std::to_string((size + 7) / 8),
                         0, "ap");
    ActivationPattern ap(size);
    for (std::size_t i = 0; i < size; ++i) ap.set(i, (bytes[i / 8] >> (i % 8)) & 1u);
    for (std::size_t i = size; i < bytes.size() * 8; ++i)
        if ((bytes[i / 8] >> (i % 8)) & 1u) throw ParseError("nonzero padding bits", 0, "ap");
    return ap;
}

}  // namespace nnreach

template <>
struct std::hash<nnreach::ApKey> {
    std::size_t operator()(const nnreach::ApKey& k) const noexcept { return k.hash(); }
};
