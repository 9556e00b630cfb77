// dvcseq command-line tool. Every subcommand builds a JSON argument object
// and hands it to dvcseq::api::call.
//
// Exit codes: 0 success, 1 usage error, 2 data error. Failures are written to
// stderr as one JSON object per line.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dvcseq/dvcseq.hpp"

namespace {

using dvcseq::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

void report_error(const std::string& kind, const std::string& message) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

void write_output(const json& j, const std::string& path) {
    const std::string text = j.dump(2) + "\n";
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) dvcseq::fail(dvcseq::ErrorKind::invalid_input, "cannot write " + path);
    out << text;
}

// Options shared by subcommands that touch the token layout.
struct LayoutFlags {
    std::string vocab;
    std::string vocab_spec;
    std::int32_t n_time_tokens = 100;
    std::string time_mode = "relative";
    std::string time_position = "before";
    std::string dot = "on";
    bool strict = false;

    void add_to(CLI::App* cmd, bool with_vocab_spec = false) {
        cmd->add_option("--vocab", vocab, "Vocabulary file, one token per line");
        if (with_vocab_spec) cmd->add_option("--vocab-spec", vocab_spec, "VocabSpec JSON, instead of --vocab");
        cmd->add_option("--n-time-tokens", n_time_tokens, "Number of time tokens")->capture_default_str();
        cmd->add_option("--time-mode", time_mode)->check(CLI::IsMember({"relative", "absolute"}))->capture_default_str();
        cmd->add_option("--time-position", time_position)
            ->check(CLI::IsMember({"before", "after"}))
            ->capture_default_str();
        cmd->add_option("--dot", dot)->check(CLI::IsMember({"on", "off"}))->capture_default_str();
        cmd->add_flag("--strict", strict, "Reject out-of-range event times instead of clamping");
    }

    void apply(json& args) const {
        if (!vocab.empty()) args["vocab_file"] = vocab;
        if (!vocab_spec.empty()) args["vocab_spec"] = dvcseq::read_json_file(vocab_spec);
        args["n_time_tokens"] = n_time_tokens;
        args["time_mode"] = time_mode;
        args["time_position"] = time_position;
        args["dot"] = dot == "on";
        args["strict"] = strict;
    }
};

struct CorruptionFlags {
    double mask_prob = 0.15;
    double mean_span = 3.0;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--mask-prob", mask_prob, "Fraction of maskable tokens to mask")->capture_default_str();
        cmd->add_option("--mean-span", mean_span, "Mean masked span length")->capture_default_str();
    }

    void apply(json& args) const {
        args["mask_probability"] = mask_prob;
        args["mean_span_length"] = mean_span;
    }
};

// decode and crop write the EventSet to the output; the rest of their result
// goes to stderr as one JSON line.
void emit(const std::string& op, const json& result, const std::string& out) {
    if (op == "decode" || op == "crop") {
        write_output(result.at("event_set"), out);
        json rest = result;
        rest.erase("event_set");
        std::cerr << rest.dump() << '\n';
        return;
    }
    write_output(result, out);
}

// ---------------------------------------------------------------------------
// selftest
// ---------------------------------------------------------------------------

struct Check {
    std::string name;
    std::function<bool()> run;
};

bool near(double a, double b, double tol = 1e-9) { return std::abs(a - b) <= tol; }

std::vector<Check> golden_checks() {
    using namespace dvcseq;
    auto tok = std::make_shared<ReferenceTokenizer>(make_vocab_file({"add", "oil", "stir"}, 10), 100);
    const VocabSpec v = tok->vocab();
    const TokenId V = v.text_vocab_size;
    const TokenId add = *tok->file().find("add");
    const TokenId oil = *tok->file().find("oil");
    const TokenId stir = *tok->file().find("stir");
    const EventSet two{120.0, {{0, 60, "add oil"}, {60, 120, "stir"}}};

    return {
        {"time_codec", [] {
             const TimeGrid g{TimeMode::relative, 100};
             return encode_time(37.2, 120, g) == 31 && encode_time(120, 120, g) == 99 &&
                    encode_time(37.2, 120, TimeGrid{TimeMode::absolute, 500}) == 37 &&
                    near(decode_time(31, 120, g), 31.0 * 120.0 / 99.0);
         }},
        {"encode_before_text", [=] {
             const TokenSequence want = {v.bos_id, V + 0, V + 50, add, oil, v.dot_id, V + 50, V + 99, stir, v.dot_id, v.eos_id};
             return encode_event_set(two, SeqConfig{}, TimeGrid{}, *tok) == want;
         }},
        {"encode_after_text", [=] {
             SeqConfig cfg;
             cfg.time_position = TimePosition::after_text;
             const TokenSequence want = {v.bos_id, add, oil, v.dot_id, V + 0, V + 50, stir, v.dot_id, V + 50, V + 99, v.eos_id};
             return encode_event_set(two, cfg, TimeGrid{}, *tok) == want;
         }},
        {"decode_round_trip", [=] {
             const auto es = decode_event_sequence(encode_event_set(two, SeqConfig{}, TimeGrid{}, *tok), 120, SeqConfig{},
                                                   TimeGrid{}, *tok);
             return es.events.size() == 2 && near(es.events[0].end, 50.0 * 120.0 / 99.0) &&
                    es.events[0].caption == "add oil." && es.events[1].caption == "stir." && near(es.events[1].end, 120);
         }},
        {"loss_uniform", [] {
             const LogProbMatrix m(4, 10, std::log(0.1));
             const TokenSequence target = {1, 2, 3, 4, 5};
             return near(sequence_nll(target, m, unit_weights(4)), std::log(10.0), 1e-12);
         }},
        {"temporal_iou", [] { return near(temporal_iou(Segment{0, 10}, Segment{5, 15}), 1.0 / 3.0); }},
        {"localization", [] {
             const EventSet preds{60, {{0, 10, "a"}, {50, 60, "b"}}};
             const EventSet refs{60, {{0, 6, "a"}}};
             const std::vector<double> thresholds = {0.3, 0.5, 0.7, 0.9};
             const auto s = localization_pr(preds, refs, thresholds);
             return near(s.precision, 0.25) && near(s.recall, 0.5);
         }},
        {"meteor_identical", [] {
             const std::vector<std::string> refs = {"a b c d"};
             return near(meteor_lite("a b c d", refs), 0.9921875);
         }},
        {"cider_d_self", [] {
             const std::vector<std::vector<std::string>> docs = {{"the man slices an onion"}, {"a woman stirs the soup"}};
             const auto df = DocumentFrequency::build(docs);
             const std::vector<std::string> refs = {"a woman stirs the soup"};
             return near(cider("a woman stirs the soup", refs, df), 10.0);
         }},
    };
}

int run_selftest(const std::string& out) {
    json failed = json::array();
    std::size_t passed = 0;
    for (const auto& c : golden_checks()) {
        bool ok = false;
        try {
            ok = c.run();
        } catch (const std::exception&) {
            ok = false;
        }
        if (ok) {
            ++passed;
        } else {
            failed.push_back(c.name);
        }
    }
    write_output(json{{"passed", passed}, {"failed", failed}}, out);
    return failed.empty() ? kExitOk : kExitData;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sequence tools for dense video captioning: codecs, transforms, loss, decoding, evaluation"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "TOML/INI file with option defaults; flags override it");

    std::uint64_t seed = 0;
    std::string out;
    app.add_option("--seed", seed, "Random seed")->capture_default_str();
    app.add_option("--out", out, "Output file (default: stdout)");

    json args = json::object();
    std::string op;
    std::function<void()> prepare;
    bool selftest = false;

    LayoutFlags layout;
    CorruptionFlags corruption;
    std::string annotations, tokens_path, corpus_path, example = "none";
    std::optional<double> duration;

    auto* encode = app.add_subcommand("encode", "EventSet JSON to token ids");
    layout.add_to(encode);
    encode->add_option("--annotations", annotations, "EventSet or corpus JSON")->required();
    encode->callback([&] {
        op = "encode";
        prepare = [&] {
            layout.apply(args);
            args["annotations"] = dvcseq::read_json_file(annotations);
        };
    });

    auto* decode = app.add_subcommand("decode", "Token ids to EventSet JSON");
    layout.add_to(decode);
    decode->add_option("--tokens", tokens_path, "Token id array, or {id: {duration, tokens}} corpus")->required();
    decode->add_option("--duration", duration, "Video duration for a single token array");
    decode->callback([&] {
        op = "decode";
        prepare = [&] {
            layout.apply(args);
            args["tokens"] = dvcseq::read_json_file(tokens_path);
            if (duration) args["duration"] = *duration;
        };
    });

    auto* pseudo = app.add_subcommand("pseudo-label", "ASR transcript to pseudo events or training examples");
    layout.add_to(pseudo);
    corruption.add_to(pseudo);
    pseudo->add_option("--transcript", annotations, "Transcript JSON (EventSet schema) or corpus")->required();
    pseudo->add_option("--example", example, "Emit training examples of this kind")
        ->check(CLI::IsMember({"none", "generative", "denoising"}))
        ->capture_default_str();
    pseudo->callback([&] {
        op = "pseudo_label";
        prepare = [&] {
            if (example != "none") layout.apply(args);
            corruption.apply(args);
            args["transcript"] = dvcseq::read_json_file(annotations);
            args["example"] = example;
        };
    });

    auto* corrupt = app.add_subcommand("corrupt", "Span corruption of a token sequence");
    layout.add_to(corrupt, true);
    corruption.add_to(corrupt);
    corrupt->add_option("--tokens", tokens_path, "Token id array JSON")->required();
    corrupt->callback([&] {
        op = "corrupt";
        prepare = [&] {
            layout.apply(args);
            corruption.apply(args);
            args["tokens"] = dvcseq::read_json_file(tokens_path);
        };
    });

    std::vector<double> window;
    std::optional<std::size_t> max_narrations;
    double min_fraction = 0.1;
    auto* crop = app.add_subcommand("crop", "Random or fixed temporal crop of an EventSet");
    crop->add_option("--annotations", annotations, "EventSet JSON")->required();
    crop->add_option("--window", window, "Fixed window: START END")->expected(2);
    crop->add_option("--max-narrations", max_narrations, "Upper bound on sentences overlapping the window");
    crop->add_option("--min-fraction", min_fraction, "Minimum window length as a fraction of the duration")
        ->capture_default_str();
    crop->add_flag("--strict", layout.strict, "Reject out-of-range event times instead of clamping");
    crop->callback([&] {
        op = "crop";
        prepare = [&] {
            args["annotations"] = dvcseq::read_json_file(annotations);
            args["min_fraction"] = min_fraction;
            args["strict"] = layout.strict;
            if (!window.empty()) args["window"] = window;
            if (max_narrations) args["max_narrations"] = *max_narrations;
        };
    });

    double fraction = 1.0;
    auto* subset = app.add_subcommand("subset", "Seeded few-shot subset of a corpus");
    subset->add_option("--corpus", corpus_path, "Corpus JSON")->required();
    subset->add_option("--fraction", fraction, "Fraction of videos to keep, in (0, 1]")->required();
    subset->callback([&] {
        op = "subset";
        prepare = [&] {
            args["corpus"] = dvcseq::read_json_file(corpus_path);
            args["fraction"] = fraction;
        };
    });

    std::string target_path, logprobs_path, weights_path, check_rows;
    auto* loss = app.add_subcommand("loss", "Weighted sequence negative log-likelihood");
    loss->add_option("--target", target_path, "Target token id array JSON")->required();
    loss->add_option("--logprobs", logprobs_path, "Binary log-prob matrix")->required();
    loss->add_option("--weights", weights_path, "Per-step weight array JSON (default all ones)");
    loss->add_option("--check-rows", check_rows, "Verify that rows normalize")->check(CLI::IsMember({"on", "off"}));
    loss->callback([&] {
        op = "loss";
        prepare = [&] {
            args["target"] = dvcseq::read_json_file(target_path);
            args["logprobs_file"] = logprobs_path;
            if (!weights_path.empty()) args["weights"] = dvcseq::read_json_file(weights_path);
            if (!check_rows.empty()) args["check_rows"] = check_rows == "on";
        };
    });

    std::string scorer_path;
    std::size_t beam = 4, max_length = 256;
    double alpha = 0.6;
    std::optional<std::int32_t> eos;
    std::vector<std::int32_t> prefix;
    bool greedy = false;
    auto* run = app.add_subcommand("decode-run", "Greedy or beam decoding over an n-gram scorer");
    layout.add_to(run);
    run->add_option("--scorer", scorer_path, "N-gram scorer JSON")->required();
    run->add_option("--beam", beam, "Beam size")->capture_default_str();
    run->add_option("--alpha", alpha, "Length normalization exponent")->capture_default_str();
    run->add_option("--max-length", max_length, "Maximum generated tokens")->capture_default_str();
    run->add_option("--eos", eos, "EOS id (default: from --vocab, else 2)");
    run->add_option("--prefix", prefix, "Comma-separated prefix ids fed to the scorer")->delimiter(',');
    run->add_option("--duration", duration, "Decode the result into an EventSet (needs --vocab)");
    run->add_flag("--greedy", greedy, "Greedy decoding instead of beam search");
    run->callback([&] {
        op = "decode_run";
        prepare = [&] {
            if (!layout.vocab.empty()) layout.apply(args);
            args["scorer"] = dvcseq::read_json_file(scorer_path);
            args["beam_size"] = beam;
            args["alpha"] = alpha;
            args["max_length"] = max_length;
            args["prefix"] = prefix;
            args["greedy"] = greedy;
            if (eos) args["eos"] = *eos;
            if (duration) args["duration"] = *duration;
        };
    });

    std::string preds_path, report_path, caption_metric = "cider_d";
    std::vector<std::string> refs_paths;
    std::vector<double> thresholds = {0.3, 0.5, 0.7, 0.9};
    std::size_t jobs = 1;
    auto* eval = app.add_subcommand("eval", "Dense captioning evaluation report");
    eval->add_option("--preds", preds_path, "Predicted corpus JSON")->required();
    eval->add_option("--refs", refs_paths, "Reference corpus JSON files, comma-separated")->required()->delimiter(',');
    eval->add_option("--report", report_path, "Report output file (default: --out or stdout)");
    eval->add_option("--thresholds", thresholds, "Comma-separated IoU thresholds")->delimiter(',');
    eval->add_option("--caption-metric", caption_metric)
        ->check(CLI::IsMember({"cider_d", "cider", "meteor_lite"}))
        ->capture_default_str();
    eval->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    eval->add_flag("--strict", layout.strict, "Reject out-of-range event times instead of clamping");
    eval->callback([&] {
        op = "eval";
        prepare = [&] {
            args["preds"] = dvcseq::read_json_file(preds_path);
            args["refs"] = json::array();
            for (const auto& p : refs_paths) args["refs"].push_back(dvcseq::read_json_file(p));
            args["thresholds"] = thresholds;
            args["caption_metric"] = caption_metric;
            args["jobs"] = jobs;
            args["strict"] = layout.strict;
            if (!report_path.empty()) out = report_path;
        };
    });

    auto* self = app.add_subcommand("selftest", "Run the embedded golden fixtures");
    self->callback([&] { selftest = true; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report_error("usage", e.what());
        return kExitUsage;
    }

    try {
        if (selftest) return run_selftest(out);
        prepare();
        args["seed"] = seed;
        emit(op, dvcseq::api::call(op, args), out);
        return kExitOk;
    } catch (const dvcseq::Error& e) {
        report_error(std::string(dvcseq::to_string(e.kind())), e.what());
    } catch (const json::exception& e) {
        report_error("invalid_input", e.what());
    } catch (const std::exception& e) {
        report_error("internal", e.what());
    }
    return kExitData;
}
