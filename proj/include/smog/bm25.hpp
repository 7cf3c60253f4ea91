// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>

#include "smog/text.hpp"

namespace smog {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// Document frequencies and average length over one candidate corpus.
class CorpusStats {
  public:
    CorpusStats() = default;

    explicit CorpusStats(std::span<const TokenSet> docs) : documents_(docs.size())
    {
        std::size_t total = 0;
        for (const auto& doc : docs) {
            total += doc.size();
            std::set<std::string_view> seen(doc.tokens.begin(), doc.tokens.end());
            for (auto term : seen) ++df_[std::string(term)];
        }
        average_length_ = documents_ == 0 ? 0.0 : static_cast<double>(total) / documents_;
    }

    std::size_t document_count() const { return documents_; }
    double average_length() const { return average_length_; }

    std::size_t document_frequency(std::string_view term) const
    {
        auto it = df_.find(term);
        return it == df_.end() ? 0 : it->second;
    }

    /// Okapi IDF with the +1 inside the log, so it never goes negative even
    /// for terms present in every document.
    double idf(std::string_view term) const
    {
        const auto n = static_cast<double>(documents_);
        const auto df = static_cast<double>(document_frequency(term));
        return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
    }

  private:
    std::size_t documents_ = 0;
    double average_length_ = 0.0;
    std::map<std::string, std::size_t, std::less<>> df_;
};

/// Okapi BM25 of `doc` for the distinct terms of `query`. Zero when no query
/// term occurs in the document.
inline double bm25(const TokenSet& query, const TokenSet& doc, const CorpusStats& stats,
                   const Bm25Params& params = {})
{
    if (doc.empty() || stats.average_length() <= 0.0) return 0.0;
    std::map<std::string_view, std::size_t> tf;
    for (const auto& t : doc.tokens) ++tf[t];

    const double norm = 1.0 - params.b + params.b * static_cast<double>(doc.size()) / stats.average_length();
    double score = 0.0;
    std::set<std::string_view> terms(query.tokens.begin(), query.tokens.end());
    for (auto term : terms) {
        auto it = tf.find(term);
        if (it == tf.end()) continue;
        const auto f = static_cast<double>(it->second);
        score += stats.idf(term) * f * (params.k1 + 1.0) / (f + params.k1 * norm);
    }
    return score;
}

}  // namespace smog
