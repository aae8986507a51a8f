#include "kgqa/embedder.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>

namespace kgqa {

namespace {

std::uint64_t fnv1a(const char* data, std::size_t len) {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace

std::vector<float> TrigramEmbedder::embed(const std::string& text) const {
    std::string norm;
    norm.reserve(text.size() + 2);
    norm.push_back('^');
    for (char c : text) norm.push_back((char)std::tolower(static_cast<unsigned char>(c)));
    norm.push_back('$');

    std::vector<float> v(dim_, 0.0f);
    if (norm.size() < 3) {
        v[fnv1a(norm.data(), norm.size()) % dim_] = 1.0f;
        return v;
    }
    for (std::size_t i = 0; i + 3 <= norm.size(); ++i)
        v[fnv1a(norm.data() + i, 3) % dim_] += 1.0f;

    double sq = 0.0;
    for (float x : v) sq += (double)x * x;
    if (sq > 0.0) {
        float inv = (float)(1.0 / std::sqrt(sq));
        for (float& x : v) x *= inv;
    }
    return v;
}

float cosine(const std::vector<float>& a, const std::vector<float>& b) {
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) dot += (double)a[i] * b[i];
    return (float)dot;
}

} // namespace kgqa
