#pragma once

// Core value types shared by every module: the joint text+time id space,
// events, event sets, and sequence layout options.
//
// Id layout for a vocabulary with V text ids and N time tokens:
//
//   [0, V)            text ids (specials, dot and words live here)
//   V-1-i             sentinel i, taken from the top of the text region
//   [V, V+N)          time token for grid index k is V+k
//
// All types are plain values and safe to share between threads.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "dvcseq/error.hpp"

namespace dvcseq {

using TokenId = std::int32_t;
using TokenSequence = std::vector<TokenId>;

enum class TokenKind {
    text,
    dot,
    pad,
    bos,
    eos,
    unk,
    sentinel,
    time,
    out_of_range,
};

struct VocabSpec {
    std::int32_t text_vocab_size = 0;  // V
    std::int32_t num_time_tokens = 0;  // N
    TokenId pad_id = 0;
    TokenId bos_id = 1;
    TokenId eos_id = 2;
    TokenId unk_id = 3;
    std::int32_t num_sentinels = 0;
    TokenId dot_id = 4;

    std::int32_t total_size() const { return text_vocab_size + num_time_tokens; }

    TokenId sentinel_id(std::int32_t i) const {
        if (i < 0 || i >= num_sentinels) {
            fail(ErrorKind::invalid_input, "sentinel index " + std::to_string(i) + " out of range");
        }
        return text_vocab_size - 1 - i;
    }

    TokenId time_id(std::int32_t k) const {
        if (k < 0 || k >= num_time_tokens) {
            fail(ErrorKind::invalid_input, "time index " + std::to_string(k) + " out of range");
        }
        return text_vocab_size + k;
    }

    bool is_time(TokenId id) const { return id >= text_vocab_size && id < total_size(); }

    bool is_sentinel(TokenId id) const {
        return id < text_vocab_size && id >= text_vocab_size - num_sentinels;
    }

    // Index of the sentinel for `id`, or -1.
    std::int32_t sentinel_index(TokenId id) const {
        return is_sentinel(id) ? text_vocab_size - 1 - id : -1;
    }

    TokenKind classify(TokenId id) const {
        if (id < 0 || id >= total_size()) return TokenKind::out_of_range;
        if (id >= text_vocab_size) return TokenKind::time;
        if (id == pad_id) return TokenKind::pad;
        if (id == bos_id) return TokenKind::bos;
        if (id == eos_id) return TokenKind::eos;
        if (id == unk_id) return TokenKind::unk;
        if (id == dot_id) return TokenKind::dot;
        if (is_sentinel(id)) return TokenKind::sentinel;
        return TokenKind::text;
    }

    // Throws ErrorKind::config when the layout is inconsistent.
    void validate() const {
        auto bad = [](const std::string& what) { fail(ErrorKind::config, "vocab spec: " + what); };
        if (text_vocab_size <= 0) bad("V must be positive");
        if (num_time_tokens <= 0) bad("N must be positive");
        if (num_sentinels < 0) bad("num_sentinels must be nonnegative");
        const TokenId ids[] = {pad_id, bos_id, eos_id, unk_id, dot_id};
        for (std::size_t i = 0; i < std::size(ids); ++i) {
            if (ids[i] < 0 || ids[i] >= text_vocab_size) bad("special id out of [0, V)");
            for (std::size_t j = i + 1; j < std::size(ids); ++j) {
                if (ids[i] == ids[j]) bad("special ids must be distinct");
            }
            if (is_sentinel(ids[i])) bad("sentinel range collides with a special id");
        }
        if (num_sentinels > text_vocab_size - 5) bad("too many sentinels for V");
    }

    friend bool operator==(const VocabSpec&, const VocabSpec&) = default;
};

enum class TimeMode { relative, absolute };

struct TimeGrid {
    TimeMode mode = TimeMode::relative;
    std::int32_t n = 100;

    void validate() const {
        if (mode == TimeMode::relative && n < 2) {
            fail(ErrorKind::config, "relative time grid needs at least 2 tokens");
        }
        if (n < 1) fail(ErrorKind::config, "time grid needs at least 1 token");
    }

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

struct Event {
    double start = 0.0;
    double end = 0.0;
    std::string caption;

    friend bool operator==(const Event&, const Event&) = default;
};

struct EventSet {
    double duration = 0.0;
    std::vector<Event> events;

    friend bool operator==(const EventSet&, const EventSet&) = default;
};

// video id -> event set, iterated in id order.
using Corpus = std::map<std::string, EventSet>;

enum class TimePosition { before_text, after_text };

struct SeqConfig {
    TimePosition time_position = TimePosition::before_text;
    bool use_dot_separator = true;
    bool emit_bos = true;
    bool emit_eos = true;

    friend bool operator==(const SeqConfig&, const SeqConfig&) = default;
};

// Stable ordering by (start, end); equal keys keep input order.
inline void sort_events(std::vector<Event>& events) {
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
        if (a.start != b.start) return a.start < b.start;
        return a.end < b.end;
    });
}

struct Violation {
    std::size_t index = 0;  // offending event, or 0 for set-level rules
    std::string rule;
    std::string message;

    friend bool operator==(const Violation&, const Violation&) = default;
};

inline std::vector<Violation> validate_event_set(const EventSet& es) {
    std::vector<Violation> out;
    auto add = [&](std::size_t i, const char* rule) {
        out.push_back({i, rule, std::string(rule) + " at index " + std::to_string(i)});
    };
    if (!std::isfinite(es.duration) || es.duration <= 0.0) {
        out.push_back({0, "duration<=0", "duration must be finite and positive"});
    }
    for (std::size_t i = 0; i < es.events.size(); ++i) {
        const Event& e = es.events[i];
        if (!std::isfinite(e.start) || !std::isfinite(e.end)) {
            add(i, "non-finite");
            continue;
        }
        if (e.start < 0.0) add(i, "start<0");
        if (e.start > e.end) add(i, "start>end");
        if (std::isfinite(es.duration) && e.end > es.duration) add(i, "end>duration");
        if (i > 0) {
            const Event& p = es.events[i - 1];
            if (p.start > e.start || (p.start == e.start && p.end > e.end)) add(i, "unsorted");
        }
    }
    return out;
}

enum class IngestPolicy { clamp, strict };

// Normalizes raw input into a valid EventSet. Clamp mode pulls times into
// [0, duration] and swaps nothing; events that stay inverted or non-finite
// are still rejected.
inline EventSet ingest_event_set(EventSet raw, IngestPolicy policy = IngestPolicy::clamp) {
    if (!std::isfinite(raw.duration) || raw.duration <= 0.0) {
        fail(ErrorKind::invalid_input, "duration must be finite and positive");
    }
    if (policy == IngestPolicy::clamp) {
        for (Event& e : raw.events) {
            if (!std::isfinite(e.start) || !std::isfinite(e.end)) continue;
            e.start = std::clamp(e.start, 0.0, raw.duration);
            e.end = std::clamp(e.end, 0.0, raw.duration);
        }
    }
    sort_events(raw.events);
    auto violations = validate_event_set(raw);
    if (!violations.empty()) {
        std::string msg = "invalid event set:";
        for (const auto& v : violations) msg += " " + v.message + ";";
        fail(ErrorKind::invalid_input, msg);
    }
    return raw;
}

}  // namespace dvcseq
