#pragma once

// Dense video captioning evaluation: temporal IoU, localization
// precision/recall/F1 averaged over IoU thresholds, matched-pair caption
// scores, and SODA (order-preserving optimal matching by dynamic programming).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "dvcseq/caption_metrics.hpp"
#include "dvcseq/domain.hpp"
#include "dvcseq/error.hpp"

namespace dvcseq {

struct Segment {
    double start = 0.0;
    double end = 0.0;
};

inline double temporal_iou(Segment a, Segment b) {
    auto check = [](Segment s) {
        if (!std::isfinite(s.start) || !std::isfinite(s.end) || s.start > s.end) {
            fail(ErrorKind::invalid_input, "segment must be finite with start <= end");
        }
    };
    check(a);
    check(b);
    const double inter = std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
    const double uni = std::max(a.end, b.end) - std::min(a.start, b.start);
    if (inter <= 0.0 || uni <= 0.0) return 0.0;
    return inter / uni;
}

inline double temporal_iou(const Event& a, const Event& b) {
    return temporal_iou(Segment{a.start, a.end}, Segment{b.start, b.end});
}

inline double harmonic_mean(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

inline double mean(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    double sum = 0.0;
    for (double x : xs) sum += x;
    return sum / static_cast<double>(xs.size());
}

enum class CaptionMetricKind { cider_d, cider, meteor_lite };

inline std::string to_string(CaptionMetricKind k) {
    switch (k) {
        case CaptionMetricKind::cider_d: return "cider_d";
        case CaptionMetricKind::cider: return "cider";
        case CaptionMetricKind::meteor_lite: return "meteor_lite";
    }
    return "unknown";
}

struct EvalConfig {
    std::vector<double> iou_thresholds = {0.3, 0.5, 0.7, 0.9};
    CaptionMetricKind caption_metric = CaptionMetricKind::cider_d;

    void validate() const {
        if (iou_thresholds.empty()) fail(ErrorKind::config, "at least one IoU threshold is required");
        for (std::size_t i = 0; i < iou_thresholds.size(); ++i) {
            const double t = iou_thresholds[i];
            if (!(t > 0.0 && t <= 1.0)) fail(ErrorKind::config, "IoU thresholds must lie in (0, 1]");
            if (i > 0 && !(t > iou_thresholds[i - 1])) {
                fail(ErrorKind::config, "IoU thresholds must be strictly increasing");
            }
        }
    }
};

// ---------------------------------------------------------------------------
// Localization
// ---------------------------------------------------------------------------

struct LocalizationScores {
    std::vector<double> precision_at;
    std::vector<double> recall_at;
    double precision = 0.0;  // mean over thresholds
    double recall = 0.0;
    double f1 = 0.0;         // harmonic mean of the averaged precision and recall
};

namespace detail {

inline std::vector<std::vector<double>> iou_matrix(const std::vector<Event>& preds, const std::vector<Event>& refs) {
    std::vector<std::vector<double>> m(preds.size(), std::vector<double>(refs.size(), 0.0));
    for (std::size_t i = 0; i < preds.size(); ++i) {
        for (std::size_t j = 0; j < refs.size(); ++j) m[i][j] = temporal_iou(preds[i], refs[j]);
    }
    return m;
}

}  // namespace detail

// Both sets empty counts as perfect (1, 1, 1). Predictions without references
// score precision 0 and recall 1; references without predictions score 0, 0.
inline LocalizationScores localization_pr(const EventSet& preds, const EventSet& refs,
                                          std::span<const double> thresholds) {
    LocalizationScores out;
    const auto iou = detail::iou_matrix(preds.events, refs.events);
    const std::size_t n = preds.events.size();
    const std::size_t m = refs.events.size();
    std::vector<double> best_for_pred(n, 0.0), best_for_ref(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            best_for_pred[i] = std::max(best_for_pred[i], iou[i][j]);
            best_for_ref[j] = std::max(best_for_ref[j], iou[i][j]);
        }
    }
    for (double tau : thresholds) {
        double p = 0.0;
        double r = 0.0;
        if (n == 0 && m == 0) {
            p = r = 1.0;
        } else {
            if (n > 0) {
                p = static_cast<double>(std::count_if(best_for_pred.begin(), best_for_pred.end(),
                                                      [&](double v) { return v >= tau; })) /
                    static_cast<double>(n);
            }
            if (m > 0) {
                r = static_cast<double>(std::count_if(best_for_ref.begin(), best_for_ref.end(),
                                                      [&](double v) { return v >= tau; })) /
                    static_cast<double>(m);
            } else {
                r = 1.0;
            }
        }
        out.precision_at.push_back(p);
        out.recall_at.push_back(r);
    }
    out.precision = mean(out.precision_at);
    out.recall = mean(out.recall_at);
    out.f1 = harmonic_mean(out.precision, out.recall);
    return out;
}

// ---------------------------------------------------------------------------
// Matched-pair caption score
// ---------------------------------------------------------------------------

struct MatchedPairScores {
    std::vector<double> score_at;  // per threshold
    double score = 0.0;            // mean over thresholds
};

// Each prediction is paired with its highest-IoU reference (first on ties).
// At threshold tau the pair contributes metric(pred, ref) when IoU >= tau and
// 0 otherwise; the per-threshold score is the mean over predictions.
inline MatchedPairScores matched_pair_caption_score(const EventSet& preds, const EventSet& refs,
                                                    std::span<const double> thresholds,
                                                    const CaptionMetric& metric) {
    MatchedPairScores out;
    out.score_at.assign(thresholds.size(), 0.0);
    const std::size_t n = preds.events.size();
    if (n > 0 && !refs.events.empty()) {
        for (const Event& p : preds.events) {
            std::size_t best = 0;
            double best_iou = -1.0;
            for (std::size_t j = 0; j < refs.events.size(); ++j) {
                const double v = temporal_iou(p, refs.events[j]);
                if (v > best_iou) {
                    best_iou = v;
                    best = j;
                }
            }
            std::optional<double> caption_score;
            for (std::size_t t = 0; t < thresholds.size(); ++t) {
                if (best_iou < thresholds[t] || best_iou <= 0.0) continue;
                if (!caption_score) {
                    const std::string ref_caption = refs.events[best].caption;
                    caption_score = metric.score(p.caption, std::span<const std::string>(&ref_caption, 1));
                }
                out.score_at[t] += *caption_score;
            }
        }
        for (double& s : out.score_at) s /= static_cast<double>(n);
    }
    out.score = mean(out.score_at);
    return out;
}

// ---------------------------------------------------------------------------
// SODA
// ---------------------------------------------------------------------------

struct SodaScores {
    double precision = 0.0;
    double recall = 0.0;
    double f = 0.0;
};

// Maximum total score of an order-preserving partial matching between rows
// and columns of a nonnegative score matrix:
//   C[i][j] = max(C[i-1][j], C[i][j-1], C[i-1][j-1] + S[i][j]).
inline double order_preserving_max(const std::vector<std::vector<double>>& scores) {
    const std::size_t n = scores.size();
    if (n == 0) return 0.0;
    const std::size_t m = scores.front().size();
    std::vector<std::vector<double>> c(n + 1, std::vector<double>(m + 1, 0.0));
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            c[i][j] = std::max({c[i - 1][j], c[i][j - 1], c[i - 1][j - 1] + scores[i - 1][j - 1]});
        }
    }
    return c[n][m];
}

// S[i][j] = IoU(p_i, g_j) * caption(p_i, g_j) over start-sorted events.
// Both sets empty yields zeros, as does either one empty.
inline SodaScores soda(const EventSet& preds, const EventSet& refs, const CaptionMetric& metric) {
    SodaScores out;
    std::vector<Event> p = preds.events;
    std::vector<Event> g = refs.events;
    if (p.empty() || g.empty()) return out;
    sort_events(p);
    sort_events(g);
    std::vector<std::vector<double>> s(p.size(), std::vector<double>(g.size(), 0.0));
    for (std::size_t i = 0; i < p.size(); ++i) {
        for (std::size_t j = 0; j < g.size(); ++j) {
            const double iou = temporal_iou(p[i], g[j]);
            if (iou <= 0.0) continue;
            s[i][j] = iou * metric.score(p[i].caption, std::span<const std::string>(&g[j].caption, 1));
        }
    }
    const double total = order_preserving_max(s);
    out.precision = total / static_cast<double>(p.size());
    out.recall = total / static_cast<double>(g.size());
    out.f = harmonic_mean(out.precision, out.recall);
    return out;
}

// ---------------------------------------------------------------------------
// Full evaluation
// ---------------------------------------------------------------------------

struct ThresholdScores {
    double iou = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double caption_score = 0.0;
};

struct VideoReport {
    std::vector<ThresholdScores> per_threshold;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double caption_score = 0.0;
    SodaScores soda;
};

struct EvalReport {
    std::string caption_metric;
    std::vector<double> iou_thresholds;
    std::size_t num_videos = 0;
    std::size_t num_reference_sets = 0;
    VideoReport corpus;
    std::map<std::string, VideoReport> per_video;
    std::vector<std::string> unknown_videos;  // predicted ids absent from every reference set
};

// One caption metric per reference set; CIDEr document frequencies treat each
// reference event caption of the set as a document.
inline std::unique_ptr<CaptionMetric> make_caption_metric(CaptionMetricKind kind, const Corpus& refs) {
    if (kind == CaptionMetricKind::meteor_lite) return std::make_unique<MeteorLiteMetric>();
    std::vector<std::vector<std::string>> docs;
    for (const auto& [_, es] : refs) {
        for (const Event& e : es.events) docs.push_back({e.caption});
    }
    if (docs.empty()) docs.push_back({});  // keeps the table valid for reference sets without events
    return std::make_unique<CiderMetric>(DocumentFrequency::build(docs),
                                         kind == CaptionMetricKind::cider_d ? CiderVariant::cider_d
                                                                            : CiderVariant::plain);
}

namespace detail {

// Mean of reports; F1 values are recomputed from the averaged precision and
// recall, SODA f is averaged directly.
inline VideoReport average_reports(std::span<const VideoReport> reports, std::span<const double> thresholds) {
    VideoReport out;
    out.per_threshold.resize(thresholds.size());
    for (std::size_t t = 0; t < thresholds.size(); ++t) out.per_threshold[t].iou = thresholds[t];
    if (reports.empty()) return out;
    for (const VideoReport& r : reports) {
        for (std::size_t t = 0; t < thresholds.size(); ++t) {
            out.per_threshold[t].precision += r.per_threshold[t].precision;
            out.per_threshold[t].recall += r.per_threshold[t].recall;
            out.per_threshold[t].caption_score += r.per_threshold[t].caption_score;
        }
        out.precision += r.precision;
        out.recall += r.recall;
        out.caption_score += r.caption_score;
        out.soda.precision += r.soda.precision;
        out.soda.recall += r.soda.recall;
        out.soda.f += r.soda.f;
    }
    const double k = static_cast<double>(reports.size());
    for (auto& ts : out.per_threshold) {
        ts.precision /= k;
        ts.recall /= k;
        ts.caption_score /= k;
    }
    out.precision /= k;
    out.recall /= k;
    out.caption_score /= k;
    out.soda.precision /= k;
    out.soda.recall /= k;
    out.soda.f /= k;
    for (auto& ts : out.per_threshold) ts.f1 = harmonic_mean(ts.precision, ts.recall);
    out.f1 = harmonic_mean(out.precision, out.recall);
    return out;
}

}  // namespace detail

inline VideoReport evaluate_video(const EventSet& preds, const EventSet& refs, std::span<const double> thresholds,
                                  const CaptionMetric& metric) {
    VideoReport out;
    const auto loc = localization_pr(preds, refs, thresholds);
    const auto cap = matched_pair_caption_score(preds, refs, thresholds, metric);
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
        out.per_threshold.push_back({thresholds[t], loc.precision_at[t], loc.recall_at[t],
                                     harmonic_mean(loc.precision_at[t], loc.recall_at[t]), cap.score_at[t]});
    }
    out.precision = loc.precision;
    out.recall = loc.recall;
    out.f1 = loc.f1;
    out.caption_score = cap.score;
    out.soda = soda(preds, refs, metric);
    return out;
}

// Every video present in at least one reference set is scored; a missing
// prediction counts as an empty event set. With several reference sets each
// video's scores are averaged over the sets that contain it. Corpus scores
// are means over videos. `jobs` > 1 spreads videos over threads; the result
// does not depend on it.
inline EvalReport evaluate(const Corpus& preds, std::span<const Corpus> reference_sets, const EvalConfig& cfg,
                           std::size_t jobs = 1) {
    cfg.validate();
    if (reference_sets.empty()) fail(ErrorKind::invalid_input, "at least one reference set is required");

    EvalReport report;
    report.caption_metric = to_string(cfg.caption_metric);
    report.iou_thresholds = cfg.iou_thresholds;
    report.num_reference_sets = reference_sets.size();

    std::vector<std::unique_ptr<CaptionMetric>> metrics;
    for (const Corpus& refs : reference_sets) metrics.push_back(make_caption_metric(cfg.caption_metric, refs));

    std::vector<std::string> videos;
    for (const Corpus& refs : reference_sets) {
        for (const auto& [id, _] : refs) videos.push_back(id);
    }
    std::sort(videos.begin(), videos.end());
    videos.erase(std::unique(videos.begin(), videos.end()), videos.end());
    for (const auto& [id, _] : preds) {
        if (!std::binary_search(videos.begin(), videos.end(), id)) report.unknown_videos.push_back(id);
    }

    std::vector<VideoReport> results(videos.size());
    const std::span<const double> thresholds(cfg.iou_thresholds);
    auto work = [&](std::size_t v) {
        const std::string& id = videos[v];
        auto pit = preds.find(id);
        std::vector<VideoReport> per_set;
        for (std::size_t s = 0; s < reference_sets.size(); ++s) {
            auto rit = reference_sets[s].find(id);
            if (rit == reference_sets[s].end()) continue;
            const EventSet empty{rit->second.duration, {}};
            per_set.push_back(evaluate_video(pit != preds.end() ? pit->second : empty, rit->second, thresholds,
                                             *metrics[s]));
        }
        results[v] = detail::average_reports(per_set, thresholds);
    };

    jobs = std::max<std::size_t>(1, std::min(jobs, videos.size()));
    if (jobs == 1) {
        for (std::size_t v = 0; v < videos.size(); ++v) work(v);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(jobs);
        {
            std::vector<std::jthread> pool;
            for (std::size_t w = 0; w < jobs; ++w) {
                pool.emplace_back([&, w] {
                    try {
                        for (std::size_t v = next++; v < videos.size(); v = next++) work(v);
                    } catch (...) {
                        errors[w] = std::current_exception();
                        next = videos.size();
                    }
                });
            }
        }
        for (const auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    for (std::size_t v = 0; v < videos.size(); ++v) report.per_video.emplace(videos[v], results[v]);
    report.num_videos = videos.size();
    report.corpus = detail::average_reports(results, thresholds);
    return report;
}

}  // namespace dvcseq
