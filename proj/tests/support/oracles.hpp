#pragma once

// Reference implementations used by the tests. They work from plain token
// vectors and sets and share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace oracle {

using Tokens = std::vector<std::string>;

inline std::size_t count(const Tokens& doc, const std::string& term)
{
    return static_cast<std::size_t>(std::count(doc.begin(), doc.end(), term));
}

inline double bm25(const std::vector<Tokens>& corpus, const Tokens& query, std::size_t d, double k1, double b)
{
    double n = static_cast<double>(corpus.size());
    double total = 0.0;
    for (const auto& doc : corpus) {
        total += static_cast<double>(doc.size());
    }
    double avgdl = total / n;
    double len = static_cast<double>(corpus[d].size());
    double score = 0.0;
    for (const auto& t : query) {
        double df = 0.0;
        for (const auto& doc : corpus) {
            df += count(doc, t) > 0 ? 1.0 : 0.0;
        }
        double tf = static_cast<double>(count(corpus[d], t));
        if (tf == 0.0) {
            continue;
        }
        double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len / avgdl));
    }
    return score;
}

inline double qld(const std::vector<Tokens>& corpus, const Tokens& query, std::size_t d, double mu)
{
    double total = 0.0;
    for (const auto& doc : corpus) {
        total += static_cast<double>(doc.size());
    }
    double len = static_cast<double>(corpus[d].size());
    double score = 0.0;
    for (const auto& t : query) {
        double cf = 0.0;
        for (const auto& doc : corpus) {
            cf += static_cast<double>(count(doc, t));
        }
        if (cf == 0.0) {
            continue;
        }
        double tf = static_cast<double>(count(corpus[d], t));
        score += std::log((tf + mu * cf / total) / (len + mu));
    }
    return score;
}

inline Tokens ngrams(const Tokens& words, std::size_t lo, std::size_t hi)
{
    Tokens out;
    for (std::size_t n = lo; n <= hi; ++n) {
        for (std::size_t i = 0; i + n <= words.size(); ++i) {
            std::string g = words[i];
            for (std::size_t j = 1; j < n; ++j) {
                g += "_" + words[i + j];
            }
            out.push_back(g);
        }
    }
    return out;
}

inline double dcg(const std::vector<int>& labels, std::size_t k)
{
    double s = 0.0;
    for (std::size_t i = 0; i < std::min(k, labels.size()); ++i) {
        s += (std::pow(2.0, labels[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    }
    return s;
}

inline double ndcg(const std::vector<int>& labels, std::size_t k)
{
    auto ideal = labels;
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double best = dcg(ideal, k);
    return best == 0.0 ? 0.0 : dcg(labels, k) / best;
}

struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0;
};

inline Counts set_counts(const std::set<std::string>& retrieved, const std::set<std::string>& relevant)
{
    Counts c;
    for (const auto& r : retrieved) {
        (relevant.count(r) ? c.tp : c.fp)++;
    }
    c.fn = relevant.size() - c.tp;
    return c;
}

/// Small deterministic generator helpers.
struct Gen {
    std::mt19937_64 rng;
    explicit Gen(std::uint64_t seed) : rng(seed) {}

    std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }
    std::size_t range(std::size_t lo, std::size_t hi)
    {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    }
    double real(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
    bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

    std::string word(std::size_t vocab)
    {
        static const char* syl[] = {"ka", "lo", "mi", "ne", "pu", "ra", "si", "to", "vu", "ze"};
        std::size_t w = index(vocab);
        std::string s = syl[w % 10];
        s += syl[(w / 10) % 10];
        if (w >= 100) {
            s += syl[(w / 100) % 10];
        }
        return s;
    }

    Tokens words(std::size_t n, std::size_t vocab)
    {
        Tokens t;
        for (std::size_t i = 0; i < n; ++i) {
            t.push_back(word(vocab));
        }
        return t;
    }
};

inline std::string join(const Tokens& t, const std::string& sep = " ")
{
    std::string s;
    for (std::size_t i = 0; i < t.size(); ++i) {
        s += (i ? sep : "") + t[i];
    }
    return s;
}

}  // namespace oracle
