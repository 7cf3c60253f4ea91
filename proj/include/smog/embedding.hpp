// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smog/error.hpp"
#include "smog/hash.hpp"
#include "smog/text.hpp"

namespace smog {

/// Maps text to a fixed-dimension vector. Same text, same vector.
class EmbeddingProvider {
  public:
    virtual ~EmbeddingProvider() = default;
    virtual std::size_t dimension() const = 0;
    virtual std::vector<double> embed(std::string_view text) const = 0;
};

/// Offline provider: counts of hashed character n-grams of each `#word#`.
class HashedNgramEmbedding final : public EmbeddingProvider {
  public:
    explicit HashedNgramEmbedding(std::size_t dimension = 256, std::size_t n = 3)
        : dimension_(dimension), n_(n)
    {
        if (dimension_ == 0 || n_ == 0) throw ContractError("embedding dimension and n must be >= 1");
    }

    std::size_t dimension() const override { return dimension_; }
    std::size_t ngram() const { return n_; }

    std::vector<double> embed(std::string_view text) const override
    {
        std::vector<double> v(dimension_, 0.0);
        for (const auto& word : split_words(text)) {
            const std::string padded = "#" + word + "#";
            if (padded.size() <= n_) {
                v[fnv1a64(padded) % dimension_] += 1.0;
                continue;
            }
            for (std::size_t i = 0; i + n_ <= padded.size(); ++i)
                v[fnv1a64(std::string_view(padded).substr(i, n_)) % dimension_] += 1.0;
        }
        return v;
    }

  private:
    std::size_t dimension_;
    std::size_t n_;
};

struct CosineResult {
    double value = 0.0;
    bool degenerate = false;  // a zero vector was involved; value forced to 0
};

inline CosineResult cosine(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size())
        throw ContractError("cosine: dimension mismatch " + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return {0.0, true};
    return {std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0), false};
}

/// [-1,1] -> [0,1]
constexpr double cosine_to_unit(double c) noexcept { return (c + 1.0) / 2.0; }

}  // namespace smog
