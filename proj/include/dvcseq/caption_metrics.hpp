#pragma once

// Sentence-level caption scorers used by the dense captioning evaluation:
// CIDEr-D (and plain CIDEr) over a document-frequency table, and METEOR-lite,
// a METEOR variant with exact + Porter-stem matching only (no synonym or
// paraphrase tables, so absolute values differ from the reference METEOR).

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dvcseq/error.hpp"
#include "dvcseq/porter_stemmer.hpp"

namespace dvcseq {

// Lowercase, drop ASCII punctuation, split on whitespace.
inline std::vector<std::string> caption_words(std::string_view text) {
    std::vector<std::string> words;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (c < 0x80 && std::isspace(c)) {
            if (!cur.empty()) words.push_back(std::move(cur));
            cur.clear();
        } else if (c < 0x80 && std::ispunct(c)) {
            continue;
        } else {
            cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    return words;
}

class CaptionMetric {
public:
    virtual ~CaptionMetric() = default;
    virtual double score(std::string_view candidate, std::span<const std::string> references) const = 0;
    virtual std::string name() const = 0;
};

// ---------------------------------------------------------------------------
// CIDEr
// ---------------------------------------------------------------------------

inline constexpr int kCiderMaxN = 4;

// n-gram -> count, one map per n (index 0 holds unigrams). n-grams are the
// words joined by single spaces.
using NGramCounts = std::array<std::map<std::string, double>, kCiderMaxN>;

inline NGramCounts count_ngrams(const std::vector<std::string>& words) {
    NGramCounts counts;
    for (int n = 1; n <= kCiderMaxN; ++n) {
        if (words.size() < static_cast<std::size_t>(n)) break;
        for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= words.size(); ++i) {
            std::string gram = words[i];
            for (int j = 1; j < n; ++j) gram += ' ' + words[i + static_cast<std::size_t>(j)];
            counts[static_cast<std::size_t>(n - 1)][gram] += 1.0;
        }
    }
    return counts;
}

// df[g] = number of documents (reference groups) containing n-gram g.
struct DocumentFrequency {
    std::unordered_map<std::string, double> counts;
    std::size_t corpus_size = 0;

    static DocumentFrequency build(std::span<const std::vector<std::string>> documents) {
        DocumentFrequency df;
        df.corpus_size = documents.size();
        for (const auto& refs : documents) {
            std::unordered_set<std::string> seen;
            for (const auto& ref : refs) {
                for (const auto& level : count_ngrams(caption_words(ref))) {
                    for (const auto& [gram, _] : level) seen.insert(gram);
                }
            }
            for (const auto& gram : seen) df.counts[gram] += 1.0;
        }
        return df;
    }

    double get(const std::string& gram) const {
        auto it = counts.find(gram);
        return it == counts.end() ? 0.0 : it->second;
    }
};

enum class CiderVariant { cider_d, plain };

namespace detail {

struct TfIdfVector {
    std::array<std::map<std::string, double>, kCiderMaxN> weights;
    std::array<double, kCiderMaxN> norms{};
    double length = 0.0;
};

inline TfIdfVector tf_idf(const std::vector<std::string>& words, const DocumentFrequency& df) {
    TfIdfVector v;
    const double log_n = std::log(static_cast<double>(df.corpus_size));
    const auto counts = count_ngrams(words);
    for (std::size_t n = 0; n < kCiderMaxN; ++n) {
        double sq = 0.0;
        for (const auto& [gram, tf] : counts[n]) {
            const double w = tf * (log_n - std::log(std::max(1.0, df.get(gram))));
            v.weights[n].emplace(gram, w);
            sq += w * w;
        }
        v.norms[n] = std::sqrt(sq);
    }
    v.length = static_cast<double>(words.size());
    return v;
}

inline std::array<double, kCiderMaxN> cider_similarity(const TfIdfVector& hyp, const TfIdfVector& ref,
                                                       CiderVariant variant, double sigma) {
    std::array<double, kCiderMaxN> val{};
    const double delta = hyp.length - ref.length;
    for (std::size_t n = 0; n < kCiderMaxN; ++n) {
        for (const auto& [gram, wh] : hyp.weights[n]) {
            auto it = ref.weights[n].find(gram);
            if (it == ref.weights[n].end()) continue;
            const double wr = it->second;
            val[n] += (variant == CiderVariant::cider_d ? std::min(wh, wr) : wh) * wr;
        }
        if (hyp.norms[n] != 0.0 && ref.norms[n] != 0.0) val[n] /= hyp.norms[n] * ref.norms[n];
        if (variant == CiderVariant::cider_d) val[n] *= std::exp(-(delta * delta) / (2.0 * sigma * sigma));
    }
    return val;
}

}  // namespace detail

// CIDEr-D: per n in 1..4, cosine of clipped TF-IDF vectors with
// IDF = log(corpus_size / max(1, df)), times a gaussian length penalty
// (sigma = 6), averaged over references and n, scaled by 10. The plain variant
// skips clipping and the length penalty.
inline double cider(std::string_view candidate, std::span<const std::string> references,
                    const DocumentFrequency& df, CiderVariant variant = CiderVariant::cider_d,
                    double sigma = 6.0) {
    if (df.corpus_size == 0) fail(ErrorKind::config, "CIDEr needs a non-empty document-frequency table");
    if (references.empty()) return 0.0;
    const auto hyp = detail::tf_idf(caption_words(candidate), df);
    double total = 0.0;
    for (const auto& ref : references) {
        const auto val = detail::cider_similarity(hyp, detail::tf_idf(caption_words(ref), df), variant, sigma);
        for (double x : val) total += x;
    }
    return total / kCiderMaxN / static_cast<double>(references.size()) * 10.0;
}

class CiderMetric final : public CaptionMetric {
public:
    CiderMetric(DocumentFrequency df, CiderVariant variant = CiderVariant::cider_d)
        : df_(std::move(df)), variant_(variant) {
        if (df_.corpus_size == 0) fail(ErrorKind::config, "CIDEr needs a non-empty document-frequency table");
    }

    double score(std::string_view candidate, std::span<const std::string> references) const override {
        return cider(candidate, references, df_, variant_);
    }

    std::string name() const override { return variant_ == CiderVariant::cider_d ? "cider_d" : "cider"; }

    const DocumentFrequency& document_frequency() const { return df_; }

private:
    DocumentFrequency df_;
    CiderVariant variant_;
};

// ---------------------------------------------------------------------------
// METEOR-lite
// ---------------------------------------------------------------------------

struct Alignment {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (candidate idx, reference idx), by candidate idx
    std::size_t chunks = 0;
};

inline std::size_t count_chunks(std::vector<std::pair<std::size_t, std::size_t>> pairs) {
    std::sort(pairs.begin(), pairs.end());
    std::size_t chunks = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const bool continues =
            i > 0 && pairs[i].first == pairs[i - 1].first + 1 && pairs[i].second == pairs[i - 1].second + 1;
        if (!continues) ++chunks;
    }
    return chunks;
}

namespace detail {

// Maximum matching between unmatched candidate and reference words under
// `match`, with the fewest chunks (counted together with `fixed`) among
// maximum matchings. Depth-first search over candidate positions under a node
// budget; continuing the previous pair is tried first, so the first leaf is
// the greedy left-to-right alignment.
template <class Match>
std::vector<std::pair<std::size_t, std::size_t>> align_stage(
    std::size_t n_cand, std::size_t n_ref, const std::vector<std::pair<std::size_t, std::size_t>>& fixed,
    Match match) {
    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    constexpr std::size_t kNodeBudget = 200000;

    std::vector<std::size_t> partner(n_cand, kNone);
    std::vector<bool> ref_used(n_ref, false);
    for (auto [c, r] : fixed) {
        partner[c] = r;
        ref_used[r] = true;
    }
    std::vector<std::vector<std::size_t>> options(n_cand);
    for (std::size_t c = 0; c < n_cand; ++c) {
        if (partner[c] != kNone) continue;
        for (std::size_t r = 0; r < n_ref; ++r) {
            if (!ref_used[r] && match(c, r)) options[c].push_back(r);
        }
    }
    std::vector<std::size_t> remaining(n_cand + 1, 0);
    for (std::size_t c = n_cand; c-- > 0;) remaining[c] = remaining[c + 1] + (options[c].empty() ? 0 : 1);

    std::vector<std::pair<std::size_t, std::size_t>> current, best;
    std::size_t best_matches = 0;
    std::size_t best_chunks = kNone;
    std::size_t nodes = 0;

    auto search = [&](auto&& self, std::size_t c) -> void {
        if (++nodes > kNodeBudget) return;
        if (current.size() + remaining[c] < best_matches) return;
        if (c == n_cand) {
            auto all = current;
            all.insert(all.end(), fixed.begin(), fixed.end());
            const std::size_t chunks = count_chunks(all);
            if (current.size() > best_matches || (current.size() == best_matches && chunks < best_chunks)) {
                best = current;
                best_matches = current.size();
                best_chunks = chunks;
            }
            return;
        }
        std::vector<std::size_t> order = options[c];
        const std::size_t prev = c > 0 ? partner[c - 1] : kNone;
        std::stable_partition(order.begin(), order.end(),
                              [&](std::size_t r) { return prev != kNone && r == prev + 1; });
        for (std::size_t r : order) {
            if (ref_used[r]) continue;
            ref_used[r] = true;
            partner[c] = r;
            current.emplace_back(c, r);
            self(self, c + 1);
            current.pop_back();
            partner[c] = kNone;
            ref_used[r] = false;
        }
        self(self, c + 1);
    };
    search(search, 0);

    best.insert(best.end(), fixed.begin(), fixed.end());
    std::sort(best.begin(), best.end());
    return best;
}

}  // namespace detail

// Exact matches first, then Porter-stem matches among the leftovers.
inline Alignment meteor_align(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
    auto exact = detail::align_stage(cand.size(), ref.size(), {},
                                     [&](std::size_t c, std::size_t r) { return cand[c] == ref[r]; });
    std::vector<std::string> cand_stems(cand.size()), ref_stems(ref.size());
    for (std::size_t i = 0; i < cand.size(); ++i) cand_stems[i] = porter_stem(cand[i]);
    for (std::size_t i = 0; i < ref.size(); ++i) ref_stems[i] = porter_stem(ref[i]);
    auto all = detail::align_stage(cand.size(), ref.size(), exact,
                                   [&](std::size_t c, std::size_t r) { return cand_stems[c] == ref_stems[r]; });
    Alignment a;
    a.chunks = count_chunks(all);
    a.pairs = std::move(all);
    return a;
}

struct MeteorParams {
    double alpha = 0.9;
    double beta = 3.0;
    double gamma = 0.5;
};

inline double meteor_lite_single(const std::vector<std::string>& cand, const std::vector<std::string>& ref,
                                 const MeteorParams& p = {}) {
    if (cand.empty() || ref.empty()) return 0.0;
    const Alignment a = meteor_align(cand, ref);
    const double m = static_cast<double>(a.pairs.size());
    if (m == 0.0) return 0.0;
    const double precision = m / static_cast<double>(cand.size());
    const double recall = m / static_cast<double>(ref.size());
    const double fmean = precision * recall / (p.alpha * precision + (1.0 - p.alpha) * recall);
    const double penalty = p.gamma * std::pow(static_cast<double>(a.chunks) / m, p.beta);
    return fmean * (1.0 - penalty);
}

// Best score over the references.
inline double meteor_lite(std::string_view candidate, std::span<const std::string> references) {
    const auto cand = caption_words(candidate);
    double best = 0.0;
    for (const auto& ref : references) best = std::max(best, meteor_lite_single(cand, caption_words(ref)));
    return best;
}

class MeteorLiteMetric final : public CaptionMetric {
public:
    double score(std::string_view candidate, std::span<const std::string> references) const override {
        return meteor_lite(candidate, references);
    }
    std::string name() const override { return "meteor_lite"; }
};

}  // namespace dvcseq
