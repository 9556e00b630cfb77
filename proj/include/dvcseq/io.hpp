#pragma once

// File formats.
//
//   EventSet    {"duration": f, "events": [{"start": f, "end": f, "caption": s}, ...]}
//   Corpus      {"<video id>": EventSet, ...}
//   VocabSpec   {"V": i, "N": i, "pad": i, "bos": i, "eos": i, "unk": i, "num_sentinels": i, "dot": i}
//   NGramScorer {"order": k, "table": {"<ctx ids joined by ,>": [p_0, ..., p_{V+N-1}]}}
//   LogProbMatrix (binary, little-endian): u64 rows, u64 cols, rows*cols f64 row-major

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dvcseq/decoder.hpp"
#include "dvcseq/domain.hpp"
#include "dvcseq/error.hpp"
#include "dvcseq/loss.hpp"
#include "dvcseq/metrics.hpp"
#include "dvcseq/seq_codec.hpp"
#include "dvcseq/transforms.hpp"

namespace dvcseq {

using json = nlohmann::json;

inline void to_json(json& j, const Event& e) { j = json{{"start", e.start}, {"end", e.end}, {"caption", e.caption}}; }

inline void from_json(const json& j, Event& e) {
    j.at("start").get_to(e.start);
    j.at("end").get_to(e.end);
    j.at("caption").get_to(e.caption);
}

inline void to_json(json& j, const EventSet& es) { j = json{{"duration", es.duration}, {"events", es.events}}; }

inline void from_json(const json& j, EventSet& es) {
    j.at("duration").get_to(es.duration);
    es.events = j.value("events", std::vector<Event>{});
}

inline void to_json(json& j, const VocabSpec& v) {
    j = json{{"V", v.text_vocab_size}, {"N", v.num_time_tokens}, {"pad", v.pad_id},       {"bos", v.bos_id},
             {"eos", v.eos_id},        {"unk", v.unk_id},         {"num_sentinels", v.num_sentinels}, {"dot", v.dot_id}};
}

inline void from_json(const json& j, VocabSpec& v) {
    j.at("V").get_to(v.text_vocab_size);
    j.at("N").get_to(v.num_time_tokens);
    j.at("pad").get_to(v.pad_id);
    j.at("bos").get_to(v.bos_id);
    j.at("eos").get_to(v.eos_id);
    j.at("unk").get_to(v.unk_id);
    j.at("num_sentinels").get_to(v.num_sentinels);
    j.at("dot").get_to(v.dot_id);
}

inline void to_json(json& j, const Violation& v) {
    j = json{{"index", v.index}, {"rule", v.rule}, {"message", v.message}};
}

inline void to_json(json& j, const DecodeDiagnostics& d) {
    j = json{{"skipped_tokens", d.skipped_tokens}, {"dropped_events", d.dropped_events}};
}

inline void to_json(json& j, const CorruptionDiagnostics& d) {
    j = json{{"maskable_tokens", d.maskable_tokens}, {"masked_tokens", d.masked_tokens},
             {"spans_requested", d.spans_requested}, {"spans", d.spans},
             {"sentinel_limited", d.sentinel_limited}};
}

inline void to_json(json& j, const TrainingExample& ex) {
    j = json{{"kind", to_string(ex.kind)}, {"decoder_target", ex.decoder_target}};
    j["encoder_text"] = ex.encoder_text ? json(*ex.encoder_text) : json(nullptr);
}

inline void to_json(json& j, const Hypothesis& h) {
    j = json{{"tokens", h.tokens}, {"logprob", h.logprob}, {"score", h.score}, {"finished", h.finished}};
}

inline void to_json(json& j, const SodaScores& s) {
    j = json{{"precision", s.precision}, {"recall", s.recall}, {"f", s.f}};
}

inline void to_json(json& j, const ThresholdScores& t) {
    j = json{{"iou", t.iou},
             {"precision", t.precision},
             {"recall", t.recall},
             {"f1", t.f1},
             {"caption_score", t.caption_score}};
}

inline void to_json(json& j, const VideoReport& r) {
    j = json{{"per_threshold", r.per_threshold}, {"precision", r.precision}, {"recall", r.recall},
             {"f1", r.f1},                       {"caption_score", r.caption_score}, {"soda", r.soda}};
}

inline void to_json(json& j, const EvalReport& r) {
    j = json{{"caption_metric", r.caption_metric},
             {"iou_thresholds", r.iou_thresholds},
             {"num_videos", r.num_videos},
             {"num_reference_sets", r.num_reference_sets},
             {"corpus", r.corpus},
             {"per_video", r.per_video},
             {"unknown_videos", r.unknown_videos}};
}

// ---------------------------------------------------------------------------
// Parsing helpers with library error kinds
// ---------------------------------------------------------------------------

inline json parse_json(const std::string& text, const std::string& what = "input") {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::invalid_input, what + ": " + e.what());
    }
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::invalid_input, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_json(ss.str(), path);
}

template <class T>
T json_as(const json& j, const std::string& what) {
    try {
        return j.get<T>();
    } catch (const json::exception& e) {
        fail(ErrorKind::invalid_input, what + ": " + e.what());
    }
}

inline bool is_single_event_set(const json& j) { return j.is_object() && j.contains("duration"); }

// A single EventSet document or a corpus map.
inline Corpus corpus_from_json(const json& j, IngestPolicy policy = IngestPolicy::clamp) {
    Corpus out;
    if (!j.is_object()) fail(ErrorKind::invalid_input, "corpus must be a JSON object");
    for (const auto& [id, value] : j.items()) {
        out.emplace(id, ingest_event_set(json_as<EventSet>(value, "video " + id), policy));
    }
    return out;
}

// ---------------------------------------------------------------------------
// N-gram scorer
// ---------------------------------------------------------------------------

inline std::string context_key(const TokenSequence& ctx) {
    std::string key;
    for (std::size_t i = 0; i < ctx.size(); ++i) {
        if (i > 0) key += ',';
        key += std::to_string(ctx[i]);
    }
    return key;
}

inline TokenSequence parse_context_key(const std::string& key) {
    TokenSequence ctx;
    if (key.empty()) return ctx;
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(part, &used);
            if (used != part.size()) throw std::invalid_argument(part);
            ctx.push_back(v);
        } catch (const std::exception&) {
            fail(ErrorKind::invalid_input, "bad n-gram context key '" + key + "'");
        }
    }
    return ctx;
}

inline NGramScorer ngram_scorer_from_json(const json& j) {
    const auto order = json_as<std::size_t>(j.at("order"), "order");
    NGramScorer::Table table;
    for (const auto& [key, row] : j.at("table").items()) {
        table.emplace(parse_context_key(key), json_as<std::vector<double>>(row, "row " + key));
    }
    return NGramScorer(order, table);
}

inline json ngram_table_to_json(std::size_t order, const NGramScorer::Table& table) {
    json t = json::object();
    for (const auto& [ctx, row] : table) t[context_key(ctx)] = row;
    return json{{"order", order}, {"table", t}};
}

// ---------------------------------------------------------------------------
// Binary log-prob matrix
// ---------------------------------------------------------------------------

namespace detail {

template <class T>
T to_little_endian(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
    return v;
}

template <class T>
void write_le(std::ostream& out, T v) {
    v = to_little_endian(v);
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_le(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) fail(ErrorKind::invalid_input, "log-prob file is truncated");
    return to_little_endian(v);
}

}  // namespace detail

inline void write_logprob_matrix(std::ostream& out, const LogProbMatrix& m) {
    detail::write_le<std::uint64_t>(out, m.rows());
    detail::write_le<std::uint64_t>(out, m.cols());
    for (double x : m.data()) detail::write_le<double>(out, x);
}

inline LogProbMatrix read_logprob_matrix(std::istream& in) {
    const auto rows = detail::read_le<std::uint64_t>(in);
    const auto cols = detail::read_le<std::uint64_t>(in);
    if (cols != 0 && rows > (std::uint64_t{1} << 32) / cols) fail(ErrorKind::invalid_input, "log-prob matrix too large");
    std::vector<double> data(static_cast<std::size_t>(rows * cols));
    for (double& x : data) x = detail::read_le<double>(in);
    if (in.peek() != std::char_traits<char>::eof()) fail(ErrorKind::invalid_input, "trailing bytes in log-prob file");
    return LogProbMatrix(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), std::move(data));
}

inline LogProbMatrix load_logprob_matrix(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::invalid_input, "cannot open " + path);
    return read_logprob_matrix(in);
}

}  // namespace dvcseq
