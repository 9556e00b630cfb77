#pragma once

// JSON-in / JSON-out entry point for every operation. The command-line tool
// and in-process language bindings both go through `call`, so their outputs
// are identical for identical arguments.
//
// Shared argument keys (all optional unless an operation needs a tokenizer):
//   vocab_file | vocab     path to a vocab file, or its lines inline
//   vocab_spec             VocabSpec object, for operations that need no text
//   n_time_tokens          default 100
//   time_mode              "relative" | "absolute"
//   time_position          "before" | "after"
//   dot, bos, eos          booleans, default true
//   strict                 reject out-of-range event times instead of clamping
//   seed                   unsigned integer, default 0

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dvcseq/decoder.hpp"
#include "dvcseq/domain.hpp"
#include "dvcseq/error.hpp"
#include "dvcseq/io.hpp"
#include "dvcseq/loss.hpp"
#include "dvcseq/metrics.hpp"
#include "dvcseq/seq_codec.hpp"
#include "dvcseq/tokenizer.hpp"
#include "dvcseq/transforms.hpp"

namespace dvcseq::api {

namespace detail {

template <class T>
T get_or(const json& args, const char* key, T fallback) {
    if (!args.contains(key) || args.at(key).is_null()) return fallback;
    return json_as<T>(args.at(key), key);
}

inline const json& require(const json& args, const char* key) {
    if (!args.contains(key)) fail(ErrorKind::invalid_input, std::string("missing argument '") + key + "'");
    return args.at(key);
}

inline std::int32_t n_time_tokens(const json& args) { return get_or<std::int32_t>(args, "n_time_tokens", 100); }

inline TimeGrid time_grid(const json& args) {
    TimeGrid g;
    const auto mode = get_or<std::string>(args, "time_mode", "relative");
    if (mode == "relative") {
        g.mode = TimeMode::relative;
    } else if (mode == "absolute") {
        g.mode = TimeMode::absolute;
    } else {
        fail(ErrorKind::config, "time_mode must be relative or absolute");
    }
    g.n = n_time_tokens(args);
    g.validate();
    return g;
}

inline SeqConfig seq_config(const json& args) {
    SeqConfig c;
    const auto pos = get_or<std::string>(args, "time_position", "before");
    if (pos == "before") {
        c.time_position = TimePosition::before_text;
    } else if (pos == "after") {
        c.time_position = TimePosition::after_text;
    } else {
        fail(ErrorKind::config, "time_position must be before or after");
    }
    c.use_dot_separator = get_or<bool>(args, "dot", true);
    c.emit_bos = get_or<bool>(args, "bos", true);
    c.emit_eos = get_or<bool>(args, "eos", true);
    return c;
}

inline IngestPolicy ingest_policy(const json& args) {
    return get_or<bool>(args, "strict", false) ? IngestPolicy::strict : IngestPolicy::clamp;
}

inline std::unique_ptr<ReferenceTokenizer> tokenizer(const json& args) {
    if (args.contains("vocab")) {
        return std::make_unique<ReferenceTokenizer>(
            VocabFile(json_as<std::vector<std::string>>(args.at("vocab"), "vocab")), n_time_tokens(args));
    }
    if (args.contains("vocab_file")) {
        return std::make_unique<ReferenceTokenizer>(VocabFile::load(json_as<std::string>(args.at("vocab_file"), "vocab_file")),
                                                    n_time_tokens(args));
    }
    fail(ErrorKind::invalid_input, "a vocabulary is required (vocab_file or vocab)");
}

inline VocabSpec vocab_spec(const json& args) {
    if (args.contains("vocab_spec")) {
        auto v = json_as<VocabSpec>(args.at("vocab_spec"), "vocab_spec");
        v.validate();
        return v;
    }
    return tokenizer(args)->vocab();
}

inline std::uint64_t seed(const json& args) { return get_or<std::uint64_t>(args, "seed", 0); }

inline CorruptionConfig corruption_config(const json& args) {
    CorruptionConfig cc;
    cc.mask_probability = get_or<double>(args, "mask_probability", cc.mask_probability);
    cc.mean_span_length = get_or<double>(args, "mean_span_length", cc.mean_span_length);
    cc.seed = seed(args);
    cc.validate();
    return cc;
}

// Applies `fn` to a single EventSet document or to every entry of a corpus.
template <class Fn>
json map_event_sets(const json& doc, IngestPolicy policy, Fn fn) {
    if (is_single_event_set(doc)) return fn(ingest_event_set(json_as<EventSet>(doc, "event set"), policy));
    json out = json::object();
    for (const auto& [id, es] : corpus_from_json(doc, policy)) out[id] = fn(es);
    return out;
}

inline json op_validate(const json& args) {
    return json(validate_event_set(json_as<EventSet>(require(args, "event_set"), "event_set")));
}

inline json op_encode(const json& args) {
    const auto tok = tokenizer(args);
    const auto grid = time_grid(args);
    const auto cfg = seq_config(args);
    return map_event_sets(require(args, "annotations"), ingest_policy(args),
                          [&](const EventSet& es) { return json(encode_event_set(es, cfg, grid, *tok)); });
}

inline json op_decode(const json& args) {
    const auto tok = tokenizer(args);
    const auto grid = time_grid(args);
    const auto cfg = seq_config(args);
    auto decode_one = [&](const TokenSequence& ids, double duration) {
        DecodeDiagnostics diag;
        EventSet es = decode_event_sequence(ids, duration, cfg, grid, *tok, &diag);
        return json{{"event_set", es}, {"diagnostics", diag}};
    };
    const json& tokens = require(args, "tokens");
    if (tokens.is_array()) {
        return decode_one(json_as<TokenSequence>(tokens, "tokens"), json_as<double>(require(args, "duration"), "duration"));
    }
    // Corpus form: {"<id>": {"duration": f, "tokens": [...]}}
    json events = json::object();
    json diagnostics = json::object();
    for (const auto& [id, entry] : tokens.items()) {
        auto r = decode_one(json_as<TokenSequence>(require(entry, "tokens"), id),
                            json_as<double>(require(entry, "duration"), id));
        events[id] = r["event_set"];
        diagnostics[id] = r["diagnostics"];
    }
    return json{{"event_set", events}, {"diagnostics", diagnostics}};
}

inline json op_pseudo_label(const json& args) {
    const auto example = get_or<std::string>(args, "example", "none");
    const json& doc = require(args, "transcript");
    auto one = [&](const EventSet& raw) -> json {
        if (example == "none") return pseudo_label(raw.events, raw.duration);
        const auto tok = tokenizer(args);
        const auto grid = time_grid(args);
        const auto cfg = seq_config(args);
        if (example == "generative") return make_generative_example(raw.events, raw.duration, cfg, grid, *tok);
        if (example == "denoising") {
            return make_denoising_example(raw.events, raw.duration, cfg, grid, *tok, corruption_config(args));
        }
        fail(ErrorKind::config, "example must be none, generative or denoising");
    };
    // Raw transcripts are not ingested: pseudo-labeling does its own cleaning.
    if (is_single_event_set(doc)) return one(json_as<EventSet>(doc, "transcript"));
    json out = json::object();
    for (const auto& [id, value] : doc.items()) out[id] = one(json_as<EventSet>(value, id));
    return out;
}

inline json op_corrupt(const json& args) {
    const auto vocab = vocab_spec(args);
    const auto ids = json_as<TokenSequence>(require(args, "tokens"), "tokens");
    const auto r = corrupt_spans(ids, corruption_config(args), vocab);
    return json{{"corrupted", r.corrupted}, {"target", r.target}, {"diagnostics", r.diagnostics}};
}

inline json op_crop(const json& args) {
    const auto es = ingest_event_set(json_as<EventSet>(require(args, "annotations"), "annotations"), ingest_policy(args));
    CropPolicy policy;
    policy.min_fraction = get_or<double>(args, "min_fraction", policy.min_fraction);
    if (args.contains("window") && !args.at("window").is_null()) {
        const auto w = json_as<std::vector<double>>(args.at("window"), "window");
        if (w.size() != 2) fail(ErrorKind::invalid_input, "window must be [start, end]");
        policy.window = CropWindow{w[0], w[1]};
    }
    std::optional<std::size_t> max_narrations;
    if (args.contains("max_narrations") && !args.at("max_narrations").is_null()) {
        max_narrations = json_as<std::size_t>(args.at("max_narrations"), "max_narrations");
    }
    CropWindow used;
    EventSet out = temporal_crop(es, policy, seed(args), max_narrations, &used);
    return json{{"event_set", out}, {"window", {used.start, used.end}}};
}

inline json op_subset(const json& args) {
    const Corpus corpus = corpus_from_json(require(args, "corpus"), ingest_policy(args));
    return json(few_shot_subset(corpus, json_as<double>(require(args, "fraction"), "fraction"), seed(args)));
}

inline json op_loss(const json& args) {
    const auto target = json_as<TokenSequence>(require(args, "target"), "target");
    LogProbMatrix m;
    if (args.contains("logprobs_file")) {
        m = load_logprob_matrix(json_as<std::string>(args.at("logprobs_file"), "logprobs_file"));
    } else {
        const auto rows = json_as<std::vector<std::vector<double>>>(require(args, "logprobs"), "logprobs");
        const std::size_t cols = rows.empty() ? 0 : rows.front().size();
        std::vector<double> data;
        for (const auto& r : rows) {
            if (r.size() != cols) fail(ErrorKind::invalid_input, "logprob rows differ in length");
            data.insert(data.end(), r.begin(), r.end());
        }
        m = LogProbMatrix(rows.size(), cols, std::move(data));
    }
    const auto steps = target.empty() ? 0 : target.size() - 1;
    const auto weights = get_or<std::vector<double>>(args, "weights", unit_weights(steps));
    LossOptions opts;
    opts.check_rows = get_or<bool>(args, "check_rows", opts.check_rows);
    return json{{"loss", sequence_nll(target, m, weights, opts)}};
}

inline json op_decode_run(const json& args) {
    const NGramScorer scorer = ngram_scorer_from_json(require(args, "scorer"));
    BeamConfig cfg;
    cfg.beam_size = get_or<std::size_t>(args, "beam_size", cfg.beam_size);
    cfg.length_norm_alpha = get_or<double>(args, "alpha", cfg.length_norm_alpha);
    cfg.max_length = get_or<std::size_t>(args, "max_length", cfg.max_length);
    cfg.prefix = get_or<TokenSequence>(args, "prefix", {});
    std::unique_ptr<ReferenceTokenizer> tok;
    if (args.contains("vocab") || args.contains("vocab_file")) {
        tok = tokenizer(args);
        cfg.eos_id = tok->vocab().eos_id;
    }
    cfg.eos_id = get_or<TokenId>(args, "eos", cfg.eos_id);

    json out;
    if (get_or<bool>(args, "greedy", false)) {
        out["tokens"] = greedy_decode(scorer, cfg);
    } else {
        const auto r = beam_decode(scorer, cfg);
        out["tokens"] = r.best;
        out["beam"] = r.beam;
    }
    if (tok && args.contains("duration")) {
        DecodeDiagnostics diag;
        const auto ids = out["tokens"].get<TokenSequence>();
        out["event_set"] = decode_event_sequence(ids, json_as<double>(args.at("duration"), "duration"),
                                                 seq_config(args), time_grid(args), *tok, &diag);
        out["diagnostics"] = diag;
    }
    return out;
}

inline CaptionMetricKind caption_metric_kind(const std::string& name) {
    if (name == "cider_d" || name == "cider-d") return CaptionMetricKind::cider_d;
    if (name == "cider") return CaptionMetricKind::cider;
    if (name == "meteor_lite" || name == "meteor-lite" || name == "meteor") return CaptionMetricKind::meteor_lite;
    fail(ErrorKind::config, "unknown caption metric '" + name + "'");
}

inline json op_eval(const json& args) {
    const Corpus preds = corpus_from_json(require(args, "preds"), ingest_policy(args));
    std::vector<Corpus> refs;
    const json& r = require(args, "refs");
    if (!r.is_array() || r.empty()) fail(ErrorKind::invalid_input, "refs must be a non-empty list of corpora");
    for (const auto& c : r) refs.push_back(corpus_from_json(c, ingest_policy(args)));
    EvalConfig cfg;
    cfg.iou_thresholds = get_or<std::vector<double>>(args, "thresholds", cfg.iou_thresholds);
    cfg.caption_metric = caption_metric_kind(get_or<std::string>(args, "caption_metric", "cider_d"));
    const auto jobs = get_or<std::size_t>(args, "jobs", 1);
    return json(evaluate(preds, refs, cfg, jobs));
}

}  // namespace detail

inline const std::vector<std::string>& operation_names() {
    static const std::vector<std::string> names = {"validate", "encode", "decode",     "pseudo_label", "corrupt",
                                                   "crop",     "subset", "loss",       "decode_run",   "eval"};
    return names;
}

// Runs operation `op` on JSON arguments. Library failures surface as
// dvcseq::Error; malformed argument shapes as ErrorKind::invalid_input.
inline json call(std::string_view op, const json& args) {
    if (!args.is_object()) fail(ErrorKind::invalid_input, "arguments must be a JSON object");
    if (op == "validate") return detail::op_validate(args);
    if (op == "encode") return detail::op_encode(args);
    if (op == "decode") return detail::op_decode(args);
    if (op == "pseudo_label") return detail::op_pseudo_label(args);
    if (op == "corrupt") return detail::op_corrupt(args);
    if (op == "crop") return detail::op_crop(args);
    if (op == "subset") return detail::op_subset(args);
    if (op == "loss") return detail::op_loss(args);
    if (op == "decode_run") return detail::op_decode_run(args);
    if (op == "eval") return detail::op_eval(args);
    fail(ErrorKind::invalid_input, "unknown operation '" + std::string(op) + "'");
}

// Stable serialization used for parity comparisons: sorted keys, no
// whitespace.
inline std::string canonical(const json& j) { return j.dump(); }

}  // namespace dvcseq::api
