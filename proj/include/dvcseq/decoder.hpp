#pragma once

// Autoregressive inference over a pluggable next-token scorer: greedy
// decoding and beam search with length normalization, plus an n-gram table
// scorer for desk-scale runs.
//
// Beam search keeps finished hypotheses in the beam, where they compete with
// live ones on the normalized score logprob / len^alpha (len counts generated
// tokens including EOS). Ties break towards the lexicographically smaller
// token sequence, so results are exact and reproducible.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dvcseq/domain.hpp"
#include "dvcseq/error.hpp"
#include "dvcseq/loss.hpp"
#include "dvcseq/seq_codec.hpp"

namespace dvcseq {

class Scorer {
public:
    virtual ~Scorer() = default;

    // Log-probabilities over the full vocabulary given everything generated
    // so far (including the configured prefix).
    virtual std::vector<double> next_logprobs(std::span<const TokenId> prefix) const = 0;
    virtual std::size_t vocab_size() const = 0;
};

struct BeamConfig {
    std::size_t beam_size = 4;
    double length_norm_alpha = 0.6;
    std::size_t max_length = 256;
    TokenId eos_id = 2;
    TokenSequence prefix;  // fed to the scorer, not part of the output

    void validate() const {
        if (beam_size < 1) fail(ErrorKind::config, "beam size must be at least 1");
        if (max_length < 1) fail(ErrorKind::config, "max length must be at least 1");
        if (!std::isfinite(length_norm_alpha)) fail(ErrorKind::config, "length normalization must be finite");
    }
};

struct Hypothesis {
    TokenSequence tokens;
    double logprob = 0.0;
    double score = 0.0;  // logprob / len^alpha
    bool finished = false;

    friend bool operator==(const Hypothesis&, const Hypothesis&) = default;
};

struct BeamResult {
    TokenSequence best;
    std::vector<Hypothesis> beam;  // ranked, best first
};

inline double normalized_score(double logprob, std::size_t length, double alpha) {
    return logprob / std::pow(static_cast<double>(length), alpha);
}

// Total order used everywhere: higher score first, then lexicographic tokens.
inline bool ranks_before(const Hypothesis& a, const Hypothesis& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.tokens < b.tokens;
}

namespace detail {

inline std::vector<double> checked_row(const Scorer& scorer, std::span<const TokenId> context) {
    auto row = scorer.next_logprobs(context);
    if (row.size() != scorer.vocab_size()) fail(ErrorKind::scorer_contract, "scorer returned a row of wrong size");
    for (double x : row) {
        if (std::isnan(x) || x > 0.0) fail(ErrorKind::scorer_contract, "scorer returned an invalid log-probability");
    }
    if (!(std::abs(std::expm1(logsumexp(row))) <= 1e-6)) {
        fail(ErrorKind::scorer_contract, "scorer row does not normalize to 1");
    }
    return row;
}

}  // namespace detail

inline TokenSequence greedy_decode(const Scorer& scorer, const BeamConfig& cfg) {
    cfg.validate();
    TokenSequence context = cfg.prefix;
    TokenSequence out;
    while (out.size() < cfg.max_length) {
        const auto row = detail::checked_row(scorer, context);
        // max_element returns the first maximum, i.e. the lowest id on ties.
        const auto best = static_cast<TokenId>(std::max_element(row.begin(), row.end()) - row.begin());
        out.push_back(best);
        context.push_back(best);
        if (best == cfg.eos_id) break;
    }
    return out;
}

inline BeamResult beam_decode(const Scorer& scorer, const BeamConfig& cfg) {
    cfg.validate();
    std::vector<Hypothesis> beam = {Hypothesis{}};
    for (std::size_t step = 1; step <= cfg.max_length; ++step) {
        std::vector<Hypothesis> pool;
        bool expanded = false;
        for (const Hypothesis& h : beam) {
            if (h.finished) {
                pool.push_back(h);
                continue;
            }
            expanded = true;
            TokenSequence context = cfg.prefix;
            context.insert(context.end(), h.tokens.begin(), h.tokens.end());
            const auto row = detail::checked_row(scorer, context);
            for (std::size_t v = 0; v < row.size(); ++v) {
                if (!std::isfinite(row[v])) continue;  // impossible continuation
                Hypothesis next;
                next.tokens = h.tokens;
                next.tokens.push_back(static_cast<TokenId>(v));
                next.logprob = h.logprob + row[v];
                next.score = normalized_score(next.logprob, next.tokens.size(), cfg.length_norm_alpha);
                next.finished = static_cast<TokenId>(v) == cfg.eos_id;
                pool.push_back(std::move(next));
            }
        }
        if (!expanded) break;
        const std::size_t keep = std::min(cfg.beam_size, pool.size());
        std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep), pool.end(), ranks_before);
        pool.resize(keep);
        beam = std::move(pool);
        if (std::all_of(beam.begin(), beam.end(), [](const Hypothesis& h) { return h.finished; })) break;
    }

    std::sort(beam.begin(), beam.end(), ranks_before);
    BeamResult result;
    auto finished = std::find_if(beam.begin(), beam.end(), [](const Hypothesis& h) { return h.finished; });
    result.best = finished != beam.end() ? finished->tokens : beam.front().tokens;
    result.beam = std::move(beam);
    return result;
}

struct DecodedEvents {
    TokenSequence tokens;
    EventSet events;
    DecodeDiagnostics diagnostics;
};

inline DecodedEvents decode_to_events(const Scorer& scorer, const BeamConfig& cfg, double duration,
                                      const SeqConfig& seq_cfg, const TimeGrid& grid, const Tokenizer& tok) {
    DecodedEvents out;
    out.tokens = beam_decode(scorer, cfg).best;
    out.events = decode_event_sequence(out.tokens, duration, seq_cfg, grid, tok, &out.diagnostics);
    return out;
}

// Conditional probability table keyed by up to order-1 preceding ids. Lookups
// back off to shorter contexts, down to the empty context.
class NGramScorer final : public Scorer {
public:
    using Table = std::map<TokenSequence, std::vector<double>>;

    NGramScorer(std::size_t order, const Table& probabilities) : order_(order) {
        if (order_ < 1) fail(ErrorKind::config, "n-gram order must be at least 1");
        if (probabilities.empty()) fail(ErrorKind::config, "n-gram table is empty");
        vocab_size_ = probabilities.begin()->second.size();
        if (vocab_size_ == 0) fail(ErrorKind::config, "n-gram rows must be non-empty");
        for (const auto& [ctx, row] : probabilities) {
            if (ctx.size() >= order_) fail(ErrorKind::config, "n-gram context longer than order-1");
            if (row.size() != vocab_size_) fail(ErrorKind::config, "n-gram rows differ in length");
            double sum = 0.0;
            std::vector<double> logs(row.size());
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (!(row[i] >= 0.0)) fail(ErrorKind::config, "n-gram probabilities must be nonnegative");
                sum += row[i];
                logs[i] = std::log(row[i]);
            }
            if (std::abs(sum - 1.0) > 1e-6) fail(ErrorKind::config, "n-gram row does not sum to 1");
            table_.emplace(ctx, std::move(logs));
        }
    }

    std::vector<double> next_logprobs(std::span<const TokenId> prefix) const override {
        for (std::size_t len = std::min(order_ - 1, prefix.size()) + 1; len-- > 0;) {
            TokenSequence ctx(prefix.end() - static_cast<std::ptrdiff_t>(len), prefix.end());
            if (auto it = table_.find(ctx); it != table_.end()) return it->second;
        }
        fail(ErrorKind::scorer_contract, "no n-gram context matches the prefix");
    }

    std::size_t vocab_size() const override { return vocab_size_; }
    std::size_t order() const { return order_; }

private:
    std::size_t order_ = 1;
    std::size_t vocab_size_ = 0;
    std::map<TokenSequence, std::vector<double>> table_;  // log-probabilities
};

}  // namespace dvcseq
