#pragma once

#include <string>
#include <vector>

#include "crosswatch/nearmiss.hpp"
#include "crosswatch/tracker.hpp"

namespace crosswatch::config {

// Flat key=value lines grouped by [section] headers. '#' and ';' start
// comments, blank lines are ignored. Sections may repeat (the scenario
// format lists one [vehicle] section per vehicle), so each entry carries
// the running section index alongside the name.
struct IniEntry {
    std::string section;
    int section_index = -1; // increments at every header line
    std::string key;
    std::string value;
    size_t line = 0;
};

// Throws ValidationError citing origin:line on anything that is neither a
// header, a comment, nor key = value.
std::vector<IniEntry> parse_ini(const std::string& text, const std::string& origin);

struct EvaluationConfig {
    double iou_threshold = 0.6; // localization IoU for frame-level scoring
    double id_switch_iou = 0.5; // match IoU when attributing ids to truth tracks
    void validate() const;
};

// Optional file bindings; command-line flags take precedence over these.
struct IoPaths {
    std::string detections;
    std::string tracks;
    std::string events;
    std::string report;
};

struct RunConfig {
    tracker::TrackerConfig tracker;
    nearmiss::NearMissConfig nearmiss;
    EvaluationConfig evaluation;
    IoPaths io;

    void validate() const;
};

// Parsing accepts exactly the keys print_run_config emits; an unknown
// section or key is a hard error with its line number. A config printed,
// parsed, and printed again is byte-identical.
RunConfig parse_run_config(const std::string& text, const std::string& origin);
RunConfig load_run_config(const std::string& path);
std::string print_run_config(const RunConfig& cfg);

// Shortest decimal form that parses back to exactly the same double.
std::string format_double(double v);

} // namespace crosswatch::config
