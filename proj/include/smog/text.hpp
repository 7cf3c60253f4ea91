// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "smog/error.hpp"

namespace smog {

// Mirrors data/stopwords_en.txt (version 1); a test keeps the two in sync.
inline constexpr std::array kEnglishStopwords = {
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "your", "yours",
    "yourself", "yourselves", "he", "him", "his", "himself", "she", "her", "hers", "herself",
    "it", "its", "itself", "they", "them", "their", "theirs", "themselves", "what", "which",
    "who", "whom", "this", "that", "these", "those", "am", "is", "are", "was", "were", "be",
    "been", "being", "have", "has", "had", "having", "do", "does", "did", "doing", "a", "an",
    "the", "and", "but", "if", "or", "because", "as", "until", "while", "of", "at", "by",
    "for", "with", "about", "against", "between", "into", "through", "during", "before",
    "after", "above", "below", "to", "from", "up", "down", "in", "out", "on", "off", "over",
    "under", "again", "further", "then", "once", "here", "there", "when", "where", "why",
    "how", "all", "any", "both", "each", "few", "more", "most", "other", "some", "such", "no",
    "nor", "not", "only", "own", "same", "so", "than", "too", "very", "s", "t", "can", "will",
    "just", "don", "should", "now", "d", "ll", "m", "o", "re", "ve", "y", "ain", "aren",
    "couldn", "didn", "doesn", "hadn", "hasn", "haven", "isn", "ma", "mightn", "mustn",
    "needn", "shan", "shouldn", "wasn", "weren", "won", "wouldn",
};

class Stopwords {
  public:
    Stopwords() = default;

    template <typename Range>
    explicit Stopwords(const Range& words) : words_(std::begin(words), std::end(words))
    {}

    static const Stopwords& english()
    {
        static const Stopwords list(kEnglishStopwords);
        return list;
    }

    /// One token per line; blank lines and `#` comments are skipped.
    static Stopwords load(const std::filesystem::path& path)
    {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot read stopword file " + path.string());
        std::vector<std::string> words;
        std::string line;
        while (std::getline(in, line)) {
            while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
            if (line.empty() || line.front() == '#') continue;
            words.push_back(line);
        }
        return Stopwords(words);
    }

    bool contains(std::string_view token) const { return words_.find(token) != words_.end(); }
    std::size_t size() const { return words_.size(); }
    const std::set<std::string, std::less<>>& words() const { return words_; }

  private:
    std::set<std::string, std::less<>> words_;
};

/// Lowercased tokens with stopwords removed. `source` keeps the original text.
struct TokenSet {
    std::vector<std::string> tokens;
    std::string source;

    bool empty() const { return tokens.empty(); }
    std::size_t size() const { return tokens.size(); }
};

namespace detail {
// Bytes >= 0x80 count as word characters so UTF-8 words stay whole.
constexpr bool is_word_byte(unsigned char c) noexcept
{
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

constexpr char ascii_lower(char c) noexcept
{
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}
}  // namespace detail

/// Lowercased runs of word characters; everything else separates.
inline std::vector<std::string> split_words(std::string_view text)
{
    std::vector<std::string> out;
    std::string current;
    for (char c : text) {
        if (detail::is_word_byte(static_cast<unsigned char>(c))) {
            current.push_back(detail::ascii_lower(c));
        } else if (!current.empty()) {
            out.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

inline TokenSet tokenize_filter(std::string_view text,
                                const Stopwords& stopwords = Stopwords::english())
{
    TokenSet set{{}, std::string(text)};
    for (auto& word : split_words(text))
        if (!stopwords.contains(word)) set.tokens.push_back(std::move(word));
    return set;
}

inline std::string to_lower(std::string_view text)
{
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(), detail::ascii_lower);
    return out;
}

}  // namespace smog
