#include "crosswatch/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "crosswatch/errors.hpp"
#include "crosswatch/io.hpp"

namespace crosswatch::config {

namespace {

[[noreturn]] void fail(const std::string& origin, size_t line, const std::string& why) {
    throw ValidationError(origin + ":" + std::to_string(line) + ": " + why);
}

std::string trim(std::string s) {
    const auto issp = [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r'; };
    size_t b = 0, e = s.size();
    while (b < e && issp(s[b])) ++b;
    while (e > b && issp(s[e - 1])) --e;
    return s.substr(b, e - b);
}

} // namespace

std::vector<IniEntry> parse_ini(const std::string& text, const std::string& origin) {
    std::vector<IniEntry> entries;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int section_index = -1;
    size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3)
                fail(origin, lineno, "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) fail(origin, lineno, "empty section name");
            ++section_index;
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            fail(origin, lineno, "expected key = value or [section]");
        IniEntry e;
        e.section = section;
        e.section_index = section_index;
        e.key = trim(line.substr(0, eq));
        e.value = trim(line.substr(eq + 1));
        e.line = lineno;
        if (e.key.empty()) fail(origin, lineno, "empty key");
        if (e.section_index < 0) fail(origin, lineno, "key before any [section] header");
        entries.push_back(std::move(e));
    }
    return entries;
}

std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return {buf, p};
}

void EvaluationConfig::validate() const {
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0))
        throw ValidationError("evaluation.iou_threshold must lie in (0, 1]");
    if (!(id_switch_iou > 0.0 && id_switch_iou <= 1.0))
        throw ValidationError("evaluation.id_switch_iou must lie in (0, 1]");
}

void RunConfig::validate() const {
    tracker.validate();
    nearmiss.validate();
    evaluation.validate();
}

namespace {

double parse_double(const IniEntry& e, const std::string& origin) {
    double v = 0.0;
    const char* b = e.value.data();
    const char* end = b + e.value.size();
    auto [p, ec] = std::from_chars(b, end, v);
    if (ec != std::errc() || p != end)
        fail(origin, e.line, "value of " + e.key + " is not a number");
    return v;
}

int parse_int(const IniEntry& e, const std::string& origin) {
    int v = 0;
    const char* b = e.value.data();
    const char* end = b + e.value.size();
    auto [p, ec] = std::from_chars(b, end, v);
    if (ec != std::errc() || p != end)
        fail(origin, e.line, "value of " + e.key + " is not an integer");
    return v;
}

bool parse_bool(const IniEntry& e, const std::string& origin) {
    if (e.value == "true") return true;
    if (e.value == "false") return false;
    fail(origin, e.line, "value of " + e.key + " must be true or false");
}

using Setter = std::function<void(RunConfig&, const IniEntry&, const std::string&)>;

const std::map<std::string, std::map<std::string, Setter>>& setters() {
    static const std::map<std::string, std::map<std::string, Setter>> table = {
        {"tracker",
         {
             {"mode",
              [](RunConfig& c, const IniEntry& e, const std::string& o) {
                  if (e.value == "sort") c.tracker.mode = kalman::Mode::Sort;
                  else if (e.value == "deepsort") c.tracker.mode = kalman::Mode::DeepSort;
                  else fail(o, e.line, "mode must be sort or deepsort");
              }},
             {"t_lost",
              [](RunConfig& c, const IniEntry& e, const std::string& o) {
                  if (e.value == "auto") c.tracker.t_lost.reset();
                  else c.tracker.t_lost = parse_int(e, o);
              }},
             {"n_init", [](RunConfig& c, const IniEntry& e, const std::string& o) { c.tracker.n_init = parse_int(e, o); }},
             {"n_budget", [](RunConfig& c, const IniEntry& e, const std::string& o) { c.tracker.n_budget = parse_int(e, o); }},
             {"min_confidence", [](RunConfig& c, const IniEntry& e, const std::string& o) { c.tracker.min_confidence = parse_double(e, o); }},
             {"iou_min", [](RunConfig& c, const IniEntry& e, const std::string& o) { c.tracker.iou_min = parse_double(e, o); }},
             {"lambda", [](RunConfig& c, const IniEntry& e, const std::string& o) { c.tracker.lambda = parse_double(e, o); }},
             {"mahalanobis_gate", [](RunConfig& c, const IniEntry& e, const std::string& o) { c.tracker.mahalanobis_gate = parse_double(e, o); }},
             {"cosine_gate", [](RunConfig& c, const IniEntry& e, const std::string& o) { c.tracker.cosine_gate = parse_double(e, o); }},
             {"gap_fill", [](RunConfig& c, const IniEntry& e, const std::string& o) { c.tracker.gap_fill = parse_bool(e, o); }},
         }},
        {"noise",
         {
             {"position_weight", [](RunConfig& c, const IniEntry& e, const std::string& o) { c.tracker.noise.position_weight = parse_double(e, o); }},
             {"velocity_weight", [](RunConfig& c, const IniEntry& e, const std::string& o) { c.tracker.noise.velocity_weight = parse_double(e, o); }},
             {"measurement_weight", [](RunConfig& c, const IniEntry& e, const std::string& o) { c.tracker.noise.measurement_weight = parse_double(e, o); }},
             {"init_position_factor", [](RunConfig& c, const IniEntry& e, const std::string& o) { c.tracker.noise.init_position_factor = parse_double(e, o); }},
             {"init_velocity_factor", [](RunConfig& c, const IniEntry& e, const std::string& o) { c.tracker.noise.init_velocity_factor = parse_double(e, o); }},
             {"shape_std", [](RunConfig& c, const IniEntry& e, const std::string& o) { c.tracker.noise.shape_std = parse_double(e, o); }},
             {"shape_velocity_std", [](RunConfig& c, const IniEntry& e, const std::string& o) { c.tracker.noise.shape_velocity_std = parse_double(e, o); }},
             {"shape_measurement_std", [](RunConfig& c, const IniEntry& e, const std::string& o) { c.tracker.noise.shape_measurement_std = parse_double(e, o); }},
         }},
        {"nearmiss",
         {
             {"window_frames", [](RunConfig& c, const IniEntry& e, const std::string& o) { c.nearmiss.window_frames = parse_int(e, o); }},
             {"tau_relative", [](RunConfig& c, const IniEntry& e, const std::string& o) { c.nearmiss.tau_relative = parse_double(e, o); }},
             {"tau_pixels_override", [](RunConfig& c, const IniEntry& e, const std::string& o) { c.nearmiss.tau_pixels_override = parse_double(e, o); }},
             {"fusion_mode",
              [](RunConfig& c, const IniEntry& e, const std::string& o) {
                  if (e.value == "passthrough") c.nearmiss.fusion_mode = nearmiss::FusionMode::Passthrough;
                  else if (e.value == "strict_average") c.nearmiss.fusion_mode = nearmiss::FusionMode::StrictAverage;
                  else fail(o, e.line, "fusion_mode must be passthrough or strict_average");
              }},
             {"fusion_match_iou", [](RunConfig& c, const IniEntry& e, const std::string& o) { c.nearmiss.fusion_match_iou = parse_double(e, o); }},
             {"span_mode",
              [](RunConfig& c, const IniEntry& e, const std::string& o) {
                  if (e.value == "active") c.nearmiss.span_mode = nearmiss::SpanMode::Active;
                  else if (e.value == "window_end") c.nearmiss.span_mode = nearmiss::SpanMode::WindowEnd;
                  else fail(o, e.line, "span_mode must be active or window_end");
              }},
             {"region_mode",
              [](RunConfig& c, const IniEntry& e, const std::string& o) {
                  if (e.value == "envelope") c.nearmiss.region_mode = nearmiss::RegionMode::Envelope;
                  else if (e.value == "contact") c.nearmiss.region_mode = nearmiss::RegionMode::Contact;
                  else fail(o, e.line, "region_mode must be envelope or contact");
              }},
         }},
        {"evaluation",
         {
             {"iou_threshold", [](RunConfig& c, const IniEntry& e, const std::string& o) { c.evaluation.iou_threshold = parse_double(e, o); }},
             {"id_switch_iou", [](RunConfig& c, const IniEntry& e, const std::string& o) { c.evaluation.id_switch_iou = parse_double(e, o); }},
         }},
        {"io",
         {
             {"detections", [](RunConfig& c, const IniEntry& e, const std::string&) { c.io.detections = e.value; }},
             {"tracks", [](RunConfig& c, const IniEntry& e, const std::string&) { c.io.tracks = e.value; }},
             {"events", [](RunConfig& c, const IniEntry& e, const std::string&) { c.io.events = e.value; }},
             {"report", [](RunConfig& c, const IniEntry& e, const std::string&) { c.io.report = e.value; }},
         }},
    };
    return table;
}

} // namespace

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    for (const IniEntry& e : parse_ini(text, origin)) {
        const auto sec = setters().find(e.section);
        if (sec == setters().end()) fail(origin, e.line, "unknown section [" + e.section + "]");
        const auto key = sec->second.find(e.key);
        if (key == sec->second.end())
            fail(origin, e.line, "unknown key " + e.key + " in [" + e.section + "]");
        key->second(cfg, e, origin);
    }
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    return parse_run_config(io::read_file(path), path);
}

std::string print_run_config(const RunConfig& cfg) {
    std::string out;
    const auto kv = [&out](const char* k, const std::string& v) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    };
    const auto kd = [&](const char* k, double v) { kv(k, format_double(v)); };
    const auto ki = [&](const char* k, int v) { kv(k, std::to_string(v)); };
    const auto kb = [&](const char* k, bool v) { kv(k, v ? "true" : "false"); };

    out += "[tracker]\n";
    kv("mode", cfg.tracker.mode == kalman::Mode::Sort ? "sort" : "deepsort");
    kv("t_lost", cfg.tracker.t_lost ? std::to_string(*cfg.tracker.t_lost) : "auto");
    ki("n_init", cfg.tracker.n_init);
    ki("n_budget", cfg.tracker.n_budget);
    kd("min_confidence", cfg.tracker.min_confidence);
    kd("iou_min", cfg.tracker.iou_min);
    kd("lambda", cfg.tracker.lambda);
    kd("mahalanobis_gate", cfg.tracker.mahalanobis_gate);
    kd("cosine_gate", cfg.tracker.cosine_gate);
    kb("gap_fill", cfg.tracker.gap_fill);

    out += "\n[noise]\n";
    kd("position_weight", cfg.tracker.noise.position_weight);
    kd("velocity_weight", cfg.tracker.noise.velocity_weight);
    kd("measurement_weight", cfg.tracker.noise.measurement_weight);
    kd("init_position_factor", cfg.tracker.noise.init_position_factor);
    kd("init_velocity_factor", cfg.tracker.noise.init_velocity_factor);
    kd("shape_std", cfg.tracker.noise.shape_std);
    kd("shape_velocity_std", cfg.tracker.noise.shape_velocity_std);
    kd("shape_measurement_std", cfg.tracker.noise.shape_measurement_std);

    out += "\n[nearmiss]\n";
    ki("window_frames", cfg.nearmiss.window_frames);
    kd("tau_relative", cfg.nearmiss.tau_relative);
    kd("tau_pixels_override", cfg.nearmiss.tau_pixels_override);
    kv("fusion_mode", cfg.nearmiss.fusion_mode == nearmiss::FusionMode::Passthrough
                          ? "passthrough"
                          : "strict_average");
    kd("fusion_match_iou", cfg.nearmiss.fusion_match_iou);
    kv("span_mode",
       cfg.nearmiss.span_mode == nearmiss::SpanMode::Active ? "active" : "window_end");
    kv("region_mode",
       cfg.nearmiss.region_mode == nearmiss::RegionMode::Envelope ? "envelope" : "contact");

    out += "\n[evaluation]\n";
    kd("iou_threshold", cfg.evaluation.iou_threshold);
    kd("id_switch_iou", cfg.evaluation.id_switch_iou);

    out += "\n[io]\n";
    kv("detections", cfg.io.detections);
    kv("tracks", cfg.io.tracks);
    kv("events", cfg.io.events);
    kv("report", cfg.io.report);

    return out;
}

} // namespace crosswatch::config
