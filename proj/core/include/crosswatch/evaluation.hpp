#pragma once

#include <optional>
#include <string>
#include <vector>

#include "crosswatch/archive.hpp"
#include "crosswatch/nearmiss.hpp"

namespace crosswatch::evaluation {

struct ConfusionCounts {
    long tp = 0;
    long fp = 0;
    long fn = 0;
    long tn = 0;

    long total() const { return tp + fp + fn + tn; }
    ConfusionCounts& operator+=(const ConfusionCounts& o);
};

// Precision, recall and F-measure. A zero denominator leaves the metric
// undefined (empty optional) instead of faking a 0 or NaN; reports print
// those as "n/a".
struct Prf {
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f_measure;
};

Prf prf(const ConfusionCounts& c);
std::string format_metric(const std::optional<double>& m);

// Frame-level protocol over [0, total_frames). A frame is ground-truth
// positive when a truth event covers it; two truth events on one frame are
// rejected as ambiguous. On a positive frame the best-overlapping predicted
// region decides TP vs FN (extra predictions on that frame are not charged);
// on a negative frame any prediction is an FP.
ConfusionCounts score_frames(const std::vector<nearmiss::NearAccidentEvent>& predicted,
                             const std::vector<nearmiss::NearAccidentEvent>& truth,
                             int total_frames,
                             double iou_threshold);

// Identity stability: per truth track, follow which predicted track id wins
// the per-frame best-IoU match (at iou_match or better) and count the times
// that id changes. A clean swap between two truth tracks therefore counts
// twice, once per victim.
int id_switches(const TrackArchive& predicted, const TrackArchive& truth,
                double iou_match = 0.5);

// Per-video summary mirroring the two granularities people actually quote:
// frames whose region was correctly localized, and frames carrying a
// prediction that localized nothing (mislocalized positives plus false
// alarms). The two views are reported side by side, not reconciled.
struct ReportRow {
    std::string name;
    bool positive = false; // video contains at least one truth event
    int total_frames = 0;
    int truth_frames = 0;
    long correct_localization = 0;
    long incorrect_localization = 0;
    ConfusionCounts counts;
};

ReportRow make_report_row(const std::string& name,
                          const std::vector<nearmiss::NearAccidentEvent>& predicted,
                          const std::vector<nearmiss::NearAccidentEvent>& truth,
                          int total_frames,
                          double iou_threshold);

std::string format_report(const std::vector<ReportRow>& rows);

} // namespace crosswatch::evaluation
