#pragma once

// Builders for pretraining and finetuning examples: ASR sentences as pseudo
// events, the generative and denoising targets, random temporal cropping and
// seeded few-shot subsets. Everything random takes an explicit seed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dvcseq/domain.hpp"
#include "dvcseq/error.hpp"
#include "dvcseq/seq_codec.hpp"
#include "dvcseq/tokenizer.hpp"

namespace dvcseq {

// ---------------------------------------------------------------------------
// Pseudo-labeling and example construction
// ---------------------------------------------------------------------------

// Each non-blank ASR sentence becomes an event. Times are clamped into
// [0, duration]; non-finite or inverted sentences are dropped.
inline EventSet pseudo_label(std::span<const Event> transcript, double duration) {
    if (!std::isfinite(duration) || duration <= 0.0) {
        fail(ErrorKind::invalid_input, "duration must be finite and positive");
    }
    EventSet out{duration, {}};
    for (const Event& s : transcript) {
        const bool blank = std::all_of(s.caption.begin(), s.caption.end(),
                                       [](char c) { return detail::is_space(static_cast<unsigned char>(c)); });
        if (blank || !std::isfinite(s.start) || !std::isfinite(s.end) || s.start > s.end) continue;
        out.events.push_back({std::clamp(s.start, 0.0, duration), std::clamp(s.end, 0.0, duration), s.caption});
    }
    sort_events(out.events);
    return out;
}

enum class ExampleKind { generative, denoising, finetune };

struct TrainingExample {
    std::optional<TokenSequence> encoder_text;  // absent for generative examples
    TokenSequence decoder_target;
    ExampleKind kind = ExampleKind::generative;

    friend bool operator==(const TrainingExample&, const TrainingExample&) = default;
};

inline constexpr std::string_view to_string(ExampleKind kind) {
    switch (kind) {
        case ExampleKind::generative: return "generative";
        case ExampleKind::denoising: return "denoising";
        case ExampleKind::finetune: return "finetune";
    }
    return "unknown";
}

// The decoder predicts the speech sequence; the encoder sees no text.
inline TrainingExample make_generative_example(std::span<const Event> transcript, double duration,
                                               const SeqConfig& cfg, const TimeGrid& grid, const Tokenizer& tok) {
    return {std::nullopt, transcript_to_sequence(pseudo_label(transcript, duration), cfg, grid, tok),
            ExampleKind::generative};
}

// The encoder sees the speech sequence, the decoder predicts the annotated
// event sequence.
inline TrainingExample make_finetune_example(const EventSet& annotations, const EventSet& transcript,
                                             const SeqConfig& cfg, const TimeGrid& grid, const Tokenizer& tok) {
    return {transcript_to_sequence(transcript, cfg, grid, tok), encode_event_set(annotations, cfg, grid, tok),
            ExampleKind::finetune};
}

// ---------------------------------------------------------------------------
// Span corruption
// ---------------------------------------------------------------------------

struct CorruptionConfig {
    double mask_probability = 0.15;
    double mean_span_length = 3.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(mask_probability >= 0.0 && mask_probability <= 1.0)) {
            fail(ErrorKind::config, "mask probability must lie in [0, 1]");
        }
        if (!(mean_span_length >= 1.0) || !std::isfinite(mean_span_length)) {
            fail(ErrorKind::config, "mean span length must be at least 1");
        }
    }
};

struct CorruptionDiagnostics {
    std::size_t maskable_tokens = 0;
    std::size_t masked_tokens = 0;
    std::size_t spans_requested = 0;
    std::size_t spans = 0;
    bool sentinel_limited = false;  // span count was reduced to fit num_sentinels
};

struct CorruptionResult {
    TokenSequence corrupted;
    TokenSequence target;
    CorruptionDiagnostics diagnostics;
};

namespace detail {

// Uniformly random composition of `total` into `parts` positive integers.
inline std::vector<std::size_t> random_composition(std::size_t total, std::size_t parts, std::mt19937_64& rng) {
    std::vector<std::size_t> cuts;
    cuts.reserve(parts + 1);
    if (parts > 1) {
        std::vector<std::size_t> positions(total - 1);
        std::iota(positions.begin(), positions.end(), std::size_t{1});
        std::sample(positions.begin(), positions.end(), std::back_inserter(cuts), parts - 1, rng);
    }
    cuts.insert(cuts.begin(), 0);
    cuts.push_back(total);
    std::vector<std::size_t> sizes(parts);
    for (std::size_t i = 0; i < parts; ++i) sizes[i] = cuts[i + 1] - cuts[i];
    return sizes;
}

// Same, but parts may be zero.
inline std::vector<std::size_t> random_weak_composition(std::size_t total, std::size_t parts,
                                                        std::mt19937_64& rng) {
    auto sizes = random_composition(total + parts, parts, rng);
    for (auto& s : sizes) --s;
    return sizes;
}

}  // namespace detail

// Replaces random spans of the maskable region (everything except BOS, EOS
// and PAD; time tokens included) with sentinels and builds the target
// [sentinel_0, span_0..., sentinel_1, span_1..., EOS].
//
// The budget is round(P * maskable) tokens split into round(budget / M)
// spans. Span lengths are a uniform random composition of the budget, whose
// marginal is approximately geometric with mean M; the unmasked tokens are
// split the same way into the gaps, with every interior gap non-empty so that
// spans never touch.
inline CorruptionResult corrupt_spans(std::span<const TokenId> seq, const CorruptionConfig& cc,
                                      const VocabSpec& vocab) {
    cc.validate();
    std::vector<std::size_t> maskable;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        switch (vocab.classify(seq[i])) {
            case TokenKind::sentinel:
                fail(ErrorKind::invalid_input, "input already contains sentinel id " + std::to_string(seq[i]));
            case TokenKind::out_of_range:
                fail(ErrorKind::invalid_token, "token id " + std::to_string(seq[i]) + " outside vocabulary");
            case TokenKind::bos:
            case TokenKind::eos:
            case TokenKind::pad:
                break;
            default:
                maskable.push_back(i);
        }
    }

    CorruptionResult result;
    auto& diag = result.diagnostics;
    diag.maskable_tokens = maskable.size();
    const auto budget = static_cast<std::size_t>(std::llround(cc.mask_probability * maskable.size()));

    std::vector<int> span_of(seq.size(), -1);
    if (budget > 0) {
        std::mt19937_64 rng(cc.seed);
        const std::size_t unmasked = maskable.size() - budget;
        std::size_t spans = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(static_cast<double>(budget) / cc.mean_span_length)));
        spans = std::min({spans, budget, unmasked + 1});
        diag.spans_requested = spans;
        const auto limit = static_cast<std::size_t>(vocab.num_sentinels);
        if (spans > limit) {
            spans = limit;
            diag.sentinel_limited = true;
        }
        if (spans > 0) {
            const auto lengths = detail::random_composition(budget, spans, rng);
            auto gaps = detail::random_weak_composition(unmasked - (spans - 1), spans + 1, rng);
            for (std::size_t g = 1; g < spans; ++g) ++gaps[g];

            // Label maskable positions, then split spans wherever a
            // non-maskable token interrupts them in the original sequence.
            std::size_t pos = gaps[0];
            int next_label = 0;
            for (std::size_t s = 0; s < spans; ++s) {
                for (std::size_t j = 0; j < lengths[s]; ++j, ++pos) {
                    const std::size_t orig = maskable[pos];
                    const bool continues = j > 0 && maskable[pos - 1] + 1 == orig;
                    if (j > 0 && !continues) ++next_label;
                    span_of[orig] = next_label;
                }
                ++next_label;
                pos += gaps[s + 1];
            }
            // Splitting can push the span count past the sentinel budget;
            // trailing spans are then left unmasked.
            for (auto& label : span_of) {
                if (label >= vocab.num_sentinels) {
                    label = -1;
                    diag.sentinel_limited = true;
                }
            }
        }
    }

    int last_label = -1;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const int label = span_of[i];
        if (label < 0) {
            result.corrupted.push_back(seq[i]);
            continue;
        }
        if (label != last_label) {
            const TokenId sentinel = vocab.sentinel_id(label);
            result.corrupted.push_back(sentinel);
            result.target.push_back(sentinel);
            last_label = label;
            ++diag.spans;
        }
        result.target.push_back(seq[i]);
        ++diag.masked_tokens;
    }
    result.target.push_back(vocab.eos_id);
    return result;
}

// Encoder input is the corrupted speech sequence, the target the masked spans.
inline TrainingExample make_denoising_example(std::span<const Event> transcript, double duration,
                                              const SeqConfig& cfg, const TimeGrid& grid, const Tokenizer& tok,
                                              const CorruptionConfig& cc) {
    const auto speech = transcript_to_sequence(pseudo_label(transcript, duration), cfg, grid, tok);
    auto corrupted = corrupt_spans(speech, cc, tok.vocab());
    return {std::move(corrupted.corrupted), std::move(corrupted.target), ExampleKind::denoising};
}

// ---------------------------------------------------------------------------
// Temporal cropping
// ---------------------------------------------------------------------------

struct CropWindow {
    double start = 0.0;
    double end = 0.0;

    friend bool operator==(const CropWindow&, const CropWindow&) = default;
};

struct CropPolicy {
    double min_fraction = 0.1;          // shortest window, as a fraction of the duration
    std::optional<CropWindow> window;   // fixed window instead of a random one
};

namespace detail {

inline double overlap_length(const Event& e, double a, double b) {
    return std::min(e.end, b) - std::max(e.start, a);
}

inline std::size_t count_overlapping(const EventSet& es, double a, double b) {
    return static_cast<std::size_t>(std::count_if(es.events.begin(), es.events.end(),
                                                  [&](const Event& e) { return overlap_length(e, a, b) > 0.0; }));
}

// Shrinks [a, b] until at most k events overlap it. Candidate window starts
// are a and every event end inside (a, b); for each, the end is pulled back to
// the clipped start of the (k+1)-th overlapping event.
inline std::optional<CropWindow> limit_narrations(const EventSet& es, double a, double b, std::size_t k) {
    if (count_overlapping(es, a, b) <= k) return CropWindow{a, b};
    std::vector<double> anchors = {a};
    for (const Event& e : es.events) {
        if (e.end > a && e.end < b) anchors.push_back(e.end);
    }
    std::sort(anchors.begin(), anchors.end());
    anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());
    for (double anchor : anchors) {
        std::vector<double> starts;
        for (const Event& e : es.events) {
            if (e.end > anchor && e.end > e.start) starts.push_back(std::max(e.start, anchor));
        }
        std::sort(starts.begin(), starts.end());
        const double end = starts.size() <= k ? b : std::min(b, starts[k]);
        if (end > anchor && count_overlapping(es, anchor, end) <= k) return CropWindow{anchor, end};
    }
    return std::nullopt;
}

}  // namespace detail

// Keeps events with positive overlap, clipped to the window and shifted so the
// window starts at 0. Zero-length events never overlap and are dropped.
inline EventSet crop_to_window(const EventSet& es, CropWindow w) {
    w.start = std::clamp(w.start, 0.0, es.duration);
    w.end = std::clamp(w.end, 0.0, es.duration);
    if (!(w.end > w.start)) fail(ErrorKind::invalid_input, "crop window must have positive length");
    EventSet out{w.end - w.start, {}};
    for (const Event& e : es.events) {
        if (detail::overlap_length(e, w.start, w.end) <= 0.0) continue;
        out.events.push_back({std::max(e.start, w.start) - w.start, std::min(e.end, w.end) - w.start, e.caption});
    }
    sort_events(out.events);
    return out;
}

// Random window [a, b] with b - a >= min_fraction * T. With max_narrations the
// window is shrunk to overlap at most that many events; if no positive-length
// window satisfies the limit, the earliest events are kept.
inline EventSet temporal_crop(const EventSet& es, const CropPolicy& policy, std::uint64_t seed,
                              std::optional<std::size_t> max_narrations = std::nullopt,
                              CropWindow* window_out = nullptr) {
    auto violations = validate_event_set(es);
    if (!violations.empty()) fail(ErrorKind::invalid_input, violations.front().message);
    if (!(policy.min_fraction > 0.0 && policy.min_fraction <= 1.0)) {
        fail(ErrorKind::config, "min crop fraction must lie in (0, 1]");
    }

    CropWindow w;
    if (policy.window) {
        w = *policy.window;
    } else {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double shortest = policy.min_fraction * es.duration;
        const double length = shortest + unit(rng) * (es.duration - shortest);
        w.start = unit(rng) * (es.duration - length);
        w.end = std::min(es.duration, w.start + length);
    }

    bool truncate = false;
    if (max_narrations) {
        if (auto limited = detail::limit_narrations(es, w.start, w.end, *max_narrations)) {
            w = *limited;
        } else {
            truncate = true;
        }
    }
    EventSet out = crop_to_window(es, w);
    if (truncate && out.events.size() > *max_narrations) out.events.resize(*max_narrations);
    if (window_out) *window_out = w;
    return out;
}

// ---------------------------------------------------------------------------
// Few-shot subsets
// ---------------------------------------------------------------------------

// Seeded shuffle of the sorted video ids; keeps the first ceil(fraction * n).
inline Corpus few_shot_subset(const Corpus& corpus, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) fail(ErrorKind::invalid_input, "fraction must lie in (0, 1]");
    std::vector<std::string> ids;
    ids.reserve(corpus.size());
    for (const auto& [id, _] : corpus) ids.push_back(id);
    std::mt19937_64 rng(seed);
    std::shuffle(ids.begin(), ids.end(), rng);
    // Small slack so that e.g. 0.01 * 200 is not pushed to 3 by representation error.
    const auto keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(ids.size()) - 1e-9));
    Corpus out;
    for (std::size_t i = 0; i < std::min(keep, ids.size()); ++i) out.emplace(ids[i], corpus.at(ids[i]));
    return out;
}

}  // namespace dvcseq
