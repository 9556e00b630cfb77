#pragma once

// Event set <-> single token sequence with interleaved time tokens.
//
// before_text layout:  [BOS, ts_1, te_1, text_1..., ts_2, te_2, text_2..., EOS]
// after_text layout:   [BOS, text_1..., ts_1, te_1, text_2..., ts_2, te_2, EOS]
//
// Decoding accepts arbitrary model output. Malformed regions are skipped and
// counted; decoding never throws on token content.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dvcseq/domain.hpp"
#include "dvcseq/error.hpp"
#include "dvcseq/time_codec.hpp"
#include "dvcseq/tokenizer.hpp"

namespace dvcseq {

struct DecodeDiagnostics {
    std::size_t skipped_tokens = 0;   // tokens outside any well-formed group
    std::size_t dropped_events = 0;   // well-formed groups rejected (inverted or empty text)

    friend bool operator==(const DecodeDiagnostics&, const DecodeDiagnostics&) = default;
};

namespace detail {

inline void check_grid_matches(const TimeGrid& grid, const VocabSpec& vocab) {
    grid.validate();
    if (grid.n != vocab.num_time_tokens) {
        fail(ErrorKind::config, "time grid has " + std::to_string(grid.n) + " tokens but vocab has " +
                                    std::to_string(vocab.num_time_tokens));
    }
}

}  // namespace detail

inline TokenSequence encode_event_set(const EventSet& es, const SeqConfig& cfg, const TimeGrid& grid,
                                      const Tokenizer& tok) {
    const VocabSpec& vocab = tok.vocab();
    detail::check_grid_matches(grid, vocab);
    EventSet sorted = es;
    sort_events(sorted.events);
    auto violations = validate_event_set(sorted);
    if (!violations.empty()) fail(ErrorKind::invalid_input, violations.front().message);
    const std::vector<Event>& events = sorted.events;

    TokenSequence out;
    if (cfg.emit_bos) out.push_back(vocab.bos_id);
    for (const Event& e : events) {
        TokenSequence text = tok.tokenize(e.caption);
        if (cfg.use_dot_separator && (text.empty() || text.back() != vocab.dot_id)) {
            text.push_back(vocab.dot_id);
        }
        const TokenId ts = vocab.time_id(encode_time(e.start, es.duration, grid));
        const TokenId te = vocab.time_id(encode_time(e.end, es.duration, grid));
        if (cfg.time_position == TimePosition::before_text) {
            out.push_back(ts);
            out.push_back(te);
            out.insert(out.end(), text.begin(), text.end());
        } else {
            out.insert(out.end(), text.begin(), text.end());
            out.push_back(ts);
            out.push_back(te);
        }
    }
    if (cfg.emit_eos) out.push_back(vocab.eos_id);
    return out;
}

// Transcripts are event sets whose captions are ASR sentences.
inline TokenSequence transcript_to_sequence(const EventSet& transcript, const SeqConfig& cfg,
                                            const TimeGrid& grid, const Tokenizer& tok) {
    return encode_event_set(transcript, cfg, grid, tok);
}

inline EventSet decode_event_sequence(std::span<const TokenId> seq, double duration, const SeqConfig& cfg,
                                      const TimeGrid& grid, const Tokenizer& tok,
                                      DecodeDiagnostics* diagnostics = nullptr) {
    const VocabSpec& vocab = tok.vocab();
    detail::check_grid_matches(grid, vocab);
    if (!std::isfinite(duration) || duration <= 0.0) {
        fail(ErrorKind::invalid_input, "duration must be finite and positive");
    }

    DecodeDiagnostics diag;
    EventSet result{duration, {}};

    auto is_text = [&](TokenId id) {
        const TokenKind k = vocab.classify(id);
        return k == TokenKind::text || k == TokenKind::dot || k == TokenKind::unk;
    };
    auto seconds = [&](TokenId id) {
        return std::clamp(decode_time(id - vocab.text_vocab_size, duration, grid), 0.0, duration);
    };
    auto emit = [&](TokenId t0, TokenId t1, const TokenSequence& text) {
        const bool only_dots = std::all_of(text.begin(), text.end(), [&](TokenId id) { return id == vocab.dot_id; });
        const double start = seconds(t0);
        const double end = seconds(t1);
        if (only_dots || start > end) {
            ++diag.dropped_events;
            return;
        }
        result.events.push_back({start, end, tok.detokenize(text)});
    };

    std::size_t n = seq.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (seq[i] == vocab.eos_id) {
            n = i;
            break;
        }
    }
    std::size_t i = (n > 0 && seq[0] == vocab.bos_id) ? 1 : 0;

    if (cfg.time_position == TimePosition::before_text) {
        while (i < n) {
            if (vocab.is_time(seq[i]) && i + 1 < n && vocab.is_time(seq[i + 1])) {
                const TokenId t0 = seq[i];
                const TokenId t1 = seq[i + 1];
                i += 2;
                TokenSequence text;
                while (i < n && !vocab.is_time(seq[i])) {
                    if (is_text(seq[i])) {
                        text.push_back(seq[i]);
                    } else {
                        ++diag.skipped_tokens;
                    }
                    ++i;
                }
                emit(t0, t1, text);
            } else {
                ++diag.skipped_tokens;
                ++i;
            }
        }
    } else {
        TokenSequence text;
        while (i < n) {
            const TokenId id = seq[i];
            if (vocab.is_time(id)) {
                if (i + 1 < n && vocab.is_time(seq[i + 1])) {
                    if (text.empty()) {
                        // Two times with no preceding text: not a group.
                        diag.skipped_tokens += 2;
                    } else {
                        emit(id, seq[i + 1], text);
                        text.clear();
                    }
                    i += 2;
                    continue;
                }
                ++diag.skipped_tokens;
            } else if (is_text(id)) {
                text.push_back(id);
            } else {
                ++diag.skipped_tokens;
            }
            ++i;
        }
        diag.skipped_tokens += text.size();
    }

    sort_events(result.events);
    if (diagnostics) *diagnostics = diag;
    return result;
}

// Paragraph captioning view of an event sequence: drop every id >= V.
inline TokenSequence strip_time_tokens(std::span<const TokenId> seq, const VocabSpec& vocab) {
    TokenSequence out;
    out.reserve(seq.size());
    for (TokenId id : seq) {
        if (id < vocab.text_vocab_size) out.push_back(id);
    }
    return out;
}

// Fixed-length view. Truncation keeps a trailing EOS.
inline TokenSequence truncate_or_pad(std::span<const TokenId> seq, std::size_t length, const VocabSpec& vocab) {
    if (length < 1) fail(ErrorKind::invalid_input, "target length must be at least 1");
    TokenSequence out(seq.begin(), seq.end());
    if (out.size() > length) {
        const bool ends_with_eos = out.back() == vocab.eos_id;
        out.resize(length);
        if (ends_with_eos) out.back() = vocab.eos_id;
    } else {
        out.resize(length, vocab.pad_id);
    }
    return out;
}

}  // namespace dvcseq
