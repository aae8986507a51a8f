#pragma once

#include <memory>
#include <string>
#include <vector>

namespace kgqa {

/// Text embedding interface: deterministic, unit-normalized vectors of a
/// fixed dimension per instance.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<float> embed(const std::string& text) const = 0;
    virtual std::size_t dimension() const = 0;
};

/// Dependency-free default: lowercased character trigrams hashed into a
/// 256-dimension histogram, L2-normalized. Good enough to rank a one-or-two
/// character typo next to its source label; swap in a model-backed
/// implementation behind the same interface for real deployments.
class TrigramEmbedder final : public Embedder {
public:
    explicit TrigramEmbedder(std::size_t dimension = 256) : dim_(dimension) {}

    std::vector<float> embed(const std::string& text) const override;
    std::size_t dimension() const override { return dim_; }

private:
    std::size_t dim_;
};

float cosine(const std::vector<float>& a, const std::vector<float>& b);

} // namespace kgqa
