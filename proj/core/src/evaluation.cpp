#include "crosswatch/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "crosswatch/errors.hpp"

namespace crosswatch::evaluation {

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
}

Prf prf(const ConfusionCounts& c) {
    Prf out;
    if (c.tp + c.fp > 0) out.precision = double(c.tp) / double(c.tp + c.fp);
    if (c.tp + c.fn > 0) out.recall = double(c.tp) / double(c.tp + c.fn);
    if (2 * c.tp + c.fp + c.fn > 0)
        out.f_measure = 2.0 * double(c.tp) / double(2 * c.tp + c.fp + c.fn);
    return out;
}

std::string format_metric(const std::optional<double>& m) {
    if (!m) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *m);
    return buf;
}

namespace {

struct FrameOutcome {
    const nearmiss::NearAccidentEvent* truth = nullptr;
    bool any_prediction = false;
    double best_iou = 0.0;
};

void validate_events(const std::vector<nearmiss::NearAccidentEvent>& events,
                     int total_frames, const char* which) {
    for (const auto& e : events) {
        if (e.frame_start > e.frame_end)
            throw ValidationError(std::string(which) + " event has an inverted frame span");
        if (e.frame_start < 0 || e.frame_end >= total_frames)
            throw ValidationError(std::string(which) + " event lies outside [0, total_frames)");
        if (!e.region.valid())
            throw ValidationError(std::string(which) + " event region is degenerate");
    }
}

} // namespace

ConfusionCounts score_frames(const std::vector<nearmiss::NearAccidentEvent>& predicted,
                             const std::vector<nearmiss::NearAccidentEvent>& truth,
                             int total_frames,
                             double iou_threshold) {
    if (total_frames <= 0) throw ValidationError("total_frames must be positive");
    validate_events(predicted, total_frames, "predicted");
    validate_events(truth, total_frames, "truth");

    std::vector<FrameOutcome> frames(total_frames);
    for (const auto& t : truth) {
        for (int f = t.frame_start; f <= t.frame_end; ++f) {
            if (frames[f].truth)
                throw ValidationError("two truth events cover frame " + std::to_string(f) +
                                      "; the frame protocol cannot score that");
            frames[f].truth = &t;
        }
    }
    for (const auto& p : predicted) {
        for (int f = p.frame_start; f <= p.frame_end; ++f) {
            frames[f].any_prediction = true;
            if (frames[f].truth) {
                frames[f].best_iou = std::max(
                    frames[f].best_iou, geometry::iou(p.region, frames[f].truth->region));
            }
        }
    }

    ConfusionCounts c;
    for (const auto& fr : frames) {
        if (fr.truth) {
            if (fr.best_iou >= iou_threshold) ++c.tp;
            else ++c.fn;
        } else {
            if (fr.any_prediction) ++c.fp;
            else ++c.tn;
        }
    }
    return c;
}

int id_switches(const TrackArchive& predicted, const TrackArchive& truth,
                double iou_match) {
    // frame -> (id, box) of every predicted observation
    std::map<int, std::vector<std::pair<std::int64_t, geometry::BBox>>> by_frame;
    for (const auto& t : predicted.tracks) {
        for (const auto& [f, box] : t.boxes) by_frame[f].emplace_back(t.id, box);
    }

    int switches = 0;
    for (const auto& gt : truth.tracks) {
        std::int64_t last_id = 0;
        bool has_last = false;
        for (const auto& [f, gt_box] : gt.boxes) {
            const auto it = by_frame.find(f);
            if (it == by_frame.end()) continue;
            // entries are in ascending id order, so ties keep the lowest id
            std::int64_t best_id = 0;
            double best = -1.0;
            bool found = false;
            for (const auto& [id, box] : it->second) {
                const double v = geometry::iou(gt_box, box);
                if (v >= iou_match && v > best) {
                    best = v;
                    best_id = id;
                    found = true;
                }
            }
            if (!found) continue;
            if (has_last && best_id != last_id) ++switches;
            last_id = best_id;
            has_last = true;
        }
    }
    return switches;
}

ReportRow make_report_row(const std::string& name,
                          const std::vector<nearmiss::NearAccidentEvent>& predicted,
                          const std::vector<nearmiss::NearAccidentEvent>& truth,
                          int total_frames,
                          double iou_threshold) {
    ReportRow row;
    row.name = name;
    row.positive = !truth.empty();
    row.total_frames = total_frames;
    row.counts = score_frames(predicted, truth, total_frames, iou_threshold);

    std::vector<char> is_truth(total_frames, 0);
    for (const auto& t : truth)
        for (int f = t.frame_start; f <= t.frame_end; ++f) is_truth[f] = 1;
    row.truth_frames = static_cast<int>(std::count(is_truth.begin(), is_truth.end(), 1));

    // frames carrying at least one prediction
    std::vector<char> has_pred(total_frames, 0);
    for (const auto& p : predicted)
        for (int f = p.frame_start; f <= p.frame_end; ++f) has_pred[f] = 1;
    const long pred_frames = std::count(has_pred.begin(), has_pred.end(), 1);

    row.correct_localization = row.counts.tp;
    row.incorrect_localization = pred_frames - row.counts.tp;
    return row;
}

std::string format_report(const std::vector<ReportRow>& rows) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "%-24s %4s %7s %7s %9s %11s %7s %7s %7s\n",
                  "video", "kind", "frames", "truth", "correct", "incorrect", "tp", "fp", "fn");
    out += line;
    ConfusionCounts total;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-24s %4s %7d %7d %9ld %11ld %7ld %7ld %7ld\n",
                      r.name.c_str(), r.positive ? "pos" : "neg", r.total_frames,
                      r.truth_frames, r.correct_localization, r.incorrect_localization,
                      r.counts.tp, r.counts.fp, r.counts.fn);
        out += line;
        total += r.counts;
    }
    const Prf p = prf(total);
    std::snprintf(line, sizeof line,
                  "overall: tp=%ld fp=%ld fn=%ld tn=%ld precision=%s recall=%s f=%s\n",
                  total.tp, total.fp, total.fn, total.tn,
                  format_metric(p.precision).c_str(), format_metric(p.recall).c_str(),
                  format_metric(p.f_measure).c_str());
    out += line;
    return out;
}

} // namespace crosswatch::evaluation
