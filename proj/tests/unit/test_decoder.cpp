#include <cmath>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "dvcseq/decoder.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace dvcseq;
using dvcseq::testing::exhaustive_best;
using dvcseq::testing::hypothesis_count;
using dvcseq::testing::random_scorer;
using dvcseq::testing::id_of;
using dvcseq::testing::kitchen_tokenizer;

namespace {

constexpr TokenId kEos = 2;

Hypothesis chosen(const BeamResult& r) {
    return *std::find_if(r.beam.begin(), r.beam.end(), [&](const Hypothesis& h) { return h.tokens == r.best; });
}

class TableScorer final : public Scorer {
public:
    explicit TableScorer(std::function<std::vector<double>(std::span<const TokenId>)> f, std::size_t n)
        : f_(std::move(f)), n_(n) {}
    std::vector<double> next_logprobs(std::span<const TokenId> p) const override { return f_(p); }
    std::size_t vocab_size() const override { return n_; }

private:
    std::function<std::vector<double>(std::span<const TokenId>)> f_;
    std::size_t n_;
};

}  // namespace

TEST(GreedyDecode, AlwaysEos) {
    const NGramScorer s(1, {{{}, {0, 0, 1}}});
    BeamConfig cfg;
    cfg.eos_id = kEos;
    EXPECT_EQ(greedy_decode(s, cfg), (TokenSequence{kEos}));
}

TEST(GreedyDecode, FollowsChain) {
    // ids: a=0, b=1, EOS=2
    const NGramScorer s(2, {{{}, {1, 0, 0}}, {{0}, {0, 1, 0}}, {{1}, {0, 0, 1}}});
    EXPECT_EQ(greedy_decode(s, BeamConfig{}), (TokenSequence{0, 1, kEos}));
}

TEST(GreedyDecode, TiesPickLowestId) {
    std::vector<double> row(10, 0.0);
    row[3] = row[7] = 0.5;
    const NGramScorer s(1, {{{}, row}});
    BeamConfig cfg;
    cfg.max_length = 1;
    EXPECT_EQ(greedy_decode(s, cfg), (TokenSequence{3}));
}

TEST(GreedyDecode, StopsAtMaxLength) {
    const NGramScorer s(1, {{{}, {1, 0, 0}}});
    BeamConfig cfg;
    cfg.max_length = 5;
    EXPECT_EQ(greedy_decode(s, cfg), (TokenSequence(5, 0)));
}

TEST(BeamDecode, MatchesExhaustiveSearch) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const auto s = random_scorer(rng, 3, 1 + trial % 3);
        for (double alpha : {0.0, 0.6, 1.0}) {
            BeamConfig cfg;
            cfg.eos_id = kEos;
            cfg.max_length = 4;
            cfg.length_norm_alpha = alpha;
            cfg.beam_size = 8;
            const auto want = exhaustive_best(s, cfg);
            cfg.beam_size = hypothesis_count(3, 4);
            EXPECT_EQ(beam_decode(s, cfg).best, want.tokens) << trial << " alpha " << alpha;
        }
    }
}

TEST(BeamDecode, SmallBeamMatchesOracleOnThreeTokens) {
    // Beam 8 is not exhaustive in general, but on this peaked scorer it is.
    const NGramScorer s(2, {{{}, {0.6, 0.3, 0.1}}, {{0}, {0.2, 0.7, 0.1}}, {{1}, {0.1, 0.1, 0.8}}});
    BeamConfig cfg;
    cfg.beam_size = 8;
    cfg.max_length = 4;
    EXPECT_EQ(beam_decode(s, cfg).best, exhaustive_best(s, cfg).tokens);
    EXPECT_EQ(beam_decode(s, cfg).best, (TokenSequence{0, 1, kEos}));
}

TEST(BeamDecode, BeamOneIsGreedy) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        const auto s = random_scorer(rng, 2 + trial % 4, 1 + trial % 3);
        BeamConfig cfg;
        cfg.beam_size = 1;
        cfg.max_length = 1 + trial % 6;
        cfg.length_norm_alpha = (trial % 3) * 0.5;
        EXPECT_EQ(beam_decode(s, cfg).best, greedy_decode(s, cfg)) << trial;
    }
}

TEST(BeamDecode, WiderBeamCanScoreLower) {
    // a=0, b=1, EOS=2. Greedy commits to a and reaches aa EOS (p = 0.2); a
    // beam of two prefers ba and bb at step two and ends at baa EOS
    // (p = 0.075).
    const double third = 1.0 / 3.0;
    const NGramScorer s(3, {{{}, {0.5, 0.45, 0.05}},
                            {{0}, {0.4, 0.35, 0.25}},
                            {{1}, {0.5, 0.5, 0.0}},
                            {{0, 0}, {0, 0, 1}},
                            {{1, 0}, {third, third, third}},
                            {{1, 1}, {third, third, third}}});
    BeamConfig cfg;
    cfg.max_length = 4;
    cfg.length_norm_alpha = 0.0;
    cfg.beam_size = 1;
    const auto narrow = beam_decode(s, cfg);
    cfg.beam_size = 2;
    const auto wide = beam_decode(s, cfg);
    EXPECT_EQ(narrow.best, (TokenSequence{0, 0, kEos}));
    EXPECT_EQ(wide.best, (TokenSequence{1, 0, 0, kEos}));
    EXPECT_NEAR(narrow.beam.front().logprob, std::log(0.2), 1e-12);
    EXPECT_NEAR(wide.beam.front().logprob, std::log(0.075), 1e-12);

    // A beam wide enough to hold every hypothesis dominates every beam.
    cfg.beam_size = hypothesis_count(3, 4);
    EXPECT_EQ(beam_decode(s, cfg).best, (TokenSequence{0, 0, kEos}));
}

TEST(BeamDecode, ExhaustiveBeamDominatesNarrowBeams) {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 100; ++trial) {
        const auto s = random_scorer(rng, 4, 2);
        BeamConfig cfg;
        cfg.max_length = 3;
        cfg.beam_size = hypothesis_count(4, 3);
        const auto full = chosen(beam_decode(s, cfg));
        for (std::size_t b = 1; b <= 6; ++b) {
            cfg.beam_size = b;
            const auto narrow = chosen(beam_decode(s, cfg));
            if (narrow.finished) {
                EXPECT_TRUE(full.finished);
                EXPECT_GE(full.score, narrow.score);
            }
        }
    }
}

TEST(BeamDecode, PrefixConditionsButIsNotReturned) {
    const NGramScorer s(2, {{{}, {0.1, 0.1, 0.1, 0.7}}, {{3}, {0.0, 0.9, 0.1, 0.0}}, {{1}, {0, 0, 1, 0}}});
    BeamConfig cfg;
    cfg.prefix = {3};
    EXPECT_EQ(beam_decode(s, cfg).best, (TokenSequence{1, kEos}));
    EXPECT_EQ(greedy_decode(s, cfg), (TokenSequence{1, kEos}));
}

TEST(BeamDecode, ScorerContractViolations) {
    BeamConfig cfg;
    const TableScorer wrong_size([](auto) { return std::vector<double>{0.0}; }, 3);
    const TableScorer unnormalized([](auto) { return std::vector<double>{-0.1, -0.1, -0.1}; }, 3);
    const TableScorer nan_row([](auto) { return std::vector<double>{NAN, 0.0, -INFINITY}; }, 3);
    for (const Scorer* s : {static_cast<const Scorer*>(&wrong_size), static_cast<const Scorer*>(&unnormalized),
                            static_cast<const Scorer*>(&nan_row)}) {
        try {
            beam_decode(*s, cfg);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::scorer_contract);
        }
        EXPECT_THROW(greedy_decode(*s, cfg), Error);
    }
    cfg.beam_size = 0;
    const NGramScorer ok(1, {{{}, {0, 0, 1}}});
    EXPECT_THROW(beam_decode(ok, cfg), Error);
}

TEST(NGramScorer, BacksOffToShorterContexts) {
    const NGramScorer s(3, {{{}, {0.25, 0.25, 0.5}}, {{1}, {1, 0, 0}}, {{0, 1}, {0, 1, 0}}});
    EXPECT_EQ(s.vocab_size(), 3u);
    EXPECT_DOUBLE_EQ(s.next_logprobs(TokenSequence{0, 1})[1], 0.0);
    EXPECT_DOUBLE_EQ(s.next_logprobs(TokenSequence{2, 1})[0], 0.0);
    EXPECT_DOUBLE_EQ(s.next_logprobs(TokenSequence{2})[2], std::log(0.5));
    EXPECT_DOUBLE_EQ(s.next_logprobs(TokenSequence{})[0], std::log(0.25));
}

TEST(NGramScorer, RejectsBadTables) {
    EXPECT_THROW(NGramScorer(0, {{{}, {1.0}}}), Error);
    EXPECT_THROW(NGramScorer(2, {}), Error);
    EXPECT_THROW(NGramScorer(2, {{{}, {0.5, 0.6}}}), Error);
    EXPECT_THROW(NGramScorer(2, {{{}, {0.5, 0.5}}, {{0}, {1.0}}}), Error);
    EXPECT_THROW(NGramScorer(2, {{{}, {1.5, -0.5}}}), Error);
    EXPECT_THROW(NGramScorer(2, {{{0, 1}, {0.5, 0.5}}}), Error);
    const NGramScorer no_root(2, {{{1}, {0.5, 0.5}}});
    EXPECT_THROW(no_root.next_logprobs(TokenSequence{0}), Error);
}

TEST(DecodeToEvents, EmitsOneEvent) {
    const auto tok = kitchen_tokenizer();
    const auto& v = tok.vocab();
    const TokenSequence script = {v.time_id(0), v.time_id(50), id_of(tok, "add"), id_of(tok, "oil"), v.dot_id,
                                  v.eos_id};
    const auto n = static_cast<std::size_t>(v.total_size());
    const TableScorer s(
        [&, n](std::span<const TokenId> prefix) {
            std::vector<double> row(n, -INFINITY);
            row[static_cast<std::size_t>(script[std::min(prefix.size() - 1, script.size() - 1)])] = 0.0;
            return row;
        },
        n);
    BeamConfig cfg;
    cfg.prefix = {v.bos_id};
    cfg.eos_id = v.eos_id;
    const auto out = decode_to_events(s, cfg, 120, SeqConfig{}, TimeGrid{}, tok);
    EXPECT_EQ(out.tokens, script);
    ASSERT_EQ(out.events.events.size(), 1u);
    EXPECT_EQ(out.events.events[0].start, 0.0);
    EXPECT_NEAR(out.events.events[0].end, 60.606060606, 1e-8);
    EXPECT_EQ(out.events.events[0].caption, "add oil.");
}

TEST(DecodeToEvents, EosOnlyAndMalformed) {
    const auto tok = kitchen_tokenizer();
    const auto& v = tok.vocab();
    const auto n = static_cast<std::size_t>(v.total_size());
    auto only = [n](TokenId id) {
        return TableScorer(
            [n, id](auto) {
                std::vector<double> row(n, -INFINITY);
                row[static_cast<std::size_t>(id)] = 0.0;
                return row;
            },
            n);
    };
    BeamConfig cfg;
    cfg.eos_id = v.eos_id;
    cfg.max_length = 6;
    EXPECT_TRUE(decode_to_events(only(v.eos_id), cfg, 10, SeqConfig{}, TimeGrid{}, tok).events.events.empty());
    const auto junk = decode_to_events(only(v.time_id(3)), cfg, 10, SeqConfig{}, TimeGrid{}, tok);
    EXPECT_TRUE(junk.events.events.empty());
    EXPECT_EQ(junk.diagnostics.dropped_events, 3u);
}
