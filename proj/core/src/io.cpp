#include "crosswatch/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <tuple>

#include "crosswatch/errors.hpp"

namespace crosswatch::io {

using nlohmann::json;

namespace {

std::string at_line(const std::string& origin, size_t line) {
    return origin + ":" + std::to_string(line);
}

[[noreturn]] void fail(const std::string& origin, size_t line, const std::string& why) {
    throw ValidationError(at_line(origin, line) + ": " + why);
}

void validate_record(Detection& d, const std::string& origin, size_t line) {
    if (d.frame < 0) fail(origin, line, "frame must be non-negative");
    if (!d.bbox.valid()) fail(origin, line, "bbox needs finite values and positive width/height");
    if (!std::isfinite(d.confidence) || d.confidence < 0.0 || d.confidence > 1.0)
        fail(origin, line, "conf must lie in [0, 1]");
}

void normalize_embedding(Eigen::VectorXd& e, const std::string& origin, size_t line) {
    const double n = e.norm();
    if (n == 0.0) fail(origin, line, "embedding is all zeros and cannot be normalized");
    if (std::abs(n - 1.0) > 1e-3)
        fail(origin, line, "embedding norm deviates from 1 by more than 1e-3");
    e /= n;
}

json parse_json_line(const std::string& text, const std::string& origin, size_t line) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) fail(origin, line, "not valid JSON");
    if (!j.is_object()) fail(origin, line, "expected a JSON object");
    return j;
}

double number_field(const json& j, const char* key, const std::string& origin, size_t line) {
    if (!j.contains(key) || !j[key].is_number())
        fail(origin, line, std::string("missing or non-numeric field \"") + key + "\"");
    return j[key].get<double>();
}

} // namespace

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path + " for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("error while reading " + path);
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("error while writing " + path);
}

FrameDetections parse_detections_jsonl(const std::string& text, const std::string& origin) {
    FrameDetections frames;
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    long emb_dim = -1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const json j = parse_json_line(line, origin, lineno);

        Detection d;
        d.frame = static_cast<int>(number_field(j, "frame", origin, lineno));
        if (!j.contains("class") || !j["class"].is_string())
            fail(origin, lineno, "missing or non-string field \"class\"");
        const auto cls = object_class_from_string(j["class"].get<std::string>());
        if (!cls) fail(origin, lineno, "unknown class \"" + j["class"].get<std::string>() + "\"");
        d.object_class = *cls;

        if (!j.contains("bbox") || !j["bbox"].is_array() || j["bbox"].size() != 4)
            fail(origin, lineno, "bbox must be an array [x, y, w, h]");
        for (const auto& v : j["bbox"])
            if (!v.is_number()) fail(origin, lineno, "bbox entries must be numbers");
        d.bbox = {j["bbox"][0].get<double>(), j["bbox"][1].get<double>(),
                  j["bbox"][2].get<double>(), j["bbox"][3].get<double>()};
        d.confidence = number_field(j, "conf", origin, lineno);

        if (j.contains("emb")) {
            if (!j["emb"].is_array() || j["emb"].empty())
                fail(origin, lineno, "emb must be a non-empty array");
            Eigen::VectorXd e(j["emb"].size());
            for (size_t i = 0; i < j["emb"].size(); ++i) {
                if (!j["emb"][i].is_number()) fail(origin, lineno, "emb entries must be numbers");
                e[static_cast<long>(i)] = j["emb"][i].get<double>();
            }
            if (emb_dim >= 0 && e.size() != emb_dim)
                fail(origin, lineno, "embedding dimension differs from earlier records");
            emb_dim = e.size();
            normalize_embedding(e, origin, lineno);
            d.embedding = std::move(e);
        }

        validate_record(d, origin, lineno);
        frames[d.frame].push_back(std::move(d));
    }
    return frames;
}

FrameDetections parse_detections_csv(const std::string& text, const std::string& origin) {
    FrameDetections frames;
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (lineno == 1 && !cells.empty() && cells[0] == "frame") continue; // header

        if (cells.size() != 7)
            fail(origin, lineno, "expected 7 columns frame,class,x,y,w,h,conf");

        auto num = [&](size_t i) {
            double v = 0.0;
            const char* b = cells[i].data();
            const char* e = b + cells[i].size();
            auto [p, ec] = std::from_chars(b, e, v);
            if (ec != std::errc() || p != e)
                fail(origin, lineno, "column " + std::to_string(i + 1) + " is not a number");
            return v;
        };

        Detection d;
        d.frame = static_cast<int>(num(0));
        const auto cls = object_class_from_string(cells[1]);
        if (!cls) fail(origin, lineno, "unknown class \"" + cells[1] + "\"");
        d.object_class = *cls;
        d.bbox = {num(2), num(3), num(4), num(5)};
        d.confidence = num(6);
        validate_record(d, origin, lineno);
        frames[d.frame].push_back(std::move(d));
    }
    return frames;
}

FrameDetections load_detections(const std::string& path) {
    const std::string text = read_file(path);
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0)
        return parse_detections_csv(text, path);
    return parse_detections_jsonl(text, path);
}

void write_detections(const std::string& path, const FrameDetections& frames) {
    std::string out;
    for (const auto& [frame, dets] : frames) {
        for (const Detection& d : dets) {
            json j;
            j["frame"] = frame;
            j["class"] = to_string(d.object_class);
            j["bbox"] = {d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h};
            j["conf"] = d.confidence;
            if (d.embedding) {
                json arr = json::array();
                for (long i = 0; i < d.embedding->size(); ++i) arr.push_back((*d.embedding)[i]);
                j["emb"] = std::move(arr);
            }
            out += j.dump();
            out += '\n';
        }
    }
    write_file(path, out);
}

namespace {
constexpr int kSchemaVersion = 1;

void check_version(const json& j, const std::string& origin, size_t line) {
    if (!j.contains("v") || !j["v"].is_number_integer())
        fail(origin, line, "missing schema version field \"v\"");
    if (j["v"].get<int>() != kSchemaVersion)
        fail(origin, line, "unsupported schema version " + j["v"].dump());
}
} // namespace

void write_events(const std::string& path, const std::vector<nearmiss::NearAccidentEvent>& events) {
    std::vector<nearmiss::NearAccidentEvent> sorted = events;
    std::sort(sorted.begin(), sorted.end(),
              [](const nearmiss::NearAccidentEvent& a, const nearmiss::NearAccidentEvent& b) {
                  return std::tie(a.frame_start, a.frame_end, a.track_a, a.track_b) <
                         std::tie(b.frame_start, b.frame_end, b.track_a, b.track_b);
              });
    std::string out;
    for (const auto& e : sorted) {
        json j;
        j["v"] = kSchemaVersion;
        j["frame_start"] = e.frame_start;
        j["frame_end"] = e.frame_end;
        j["region"] = {e.region.x, e.region.y, e.region.w, e.region.h};
        j["prob"] = e.probability;
        j["tracks"] = {e.track_a, e.track_b};
        out += j.dump();
        out += '\n';
    }
    write_file(path, out);
}

std::vector<nearmiss::NearAccidentEvent> read_events(const std::string& path) {
    const std::string text = read_file(path);
    std::vector<nearmiss::NearAccidentEvent> events;
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const json j = parse_json_line(line, path, lineno);
        check_version(j, path, lineno);
        nearmiss::NearAccidentEvent e;
        e.frame_start = static_cast<int>(number_field(j, "frame_start", path, lineno));
        e.frame_end = static_cast<int>(number_field(j, "frame_end", path, lineno));
        if (!j.contains("region") || !j["region"].is_array() || j["region"].size() != 4)
            fail(path, lineno, "region must be an array [x, y, w, h]");
        e.region = {j["region"][0].get<double>(), j["region"][1].get<double>(),
                    j["region"][2].get<double>(), j["region"][3].get<double>()};
        e.probability = number_field(j, "prob", path, lineno);
        if (!j.contains("tracks") || !j["tracks"].is_array() || j["tracks"].size() != 2)
            fail(path, lineno, "tracks must be an array of two ids");
        e.track_a = j["tracks"][0].get<std::int64_t>();
        e.track_b = j["tracks"][1].get<std::int64_t>();
        if (e.frame_start > e.frame_end) fail(path, lineno, "frame_start exceeds frame_end");
        if (!(e.probability >= 0.0 && e.probability <= 1.0))
            fail(path, lineno, "prob must lie in [0, 1]");
        events.push_back(e);
    }
    return events;
}

void write_tracks(const std::string& path, const TrackArchive& archive) {
    std::string out;
    for (const auto& t : archive.tracks) {
        json j;
        j["v"] = kSchemaVersion;
        j["id"] = t.id;
        j["class"] = to_string(t.object_class);
        j["status"] = to_string(t.final_status);
        json pts = json::array();
        for (const auto& [f, p] : t.points) pts.push_back({f, p.x, p.y});
        j["points"] = std::move(pts);
        json boxes = json::array();
        for (const auto& [f, b] : t.boxes) boxes.push_back({f, b.x, b.y, b.w, b.h});
        j["boxes"] = std::move(boxes);
        out += j.dump();
        out += '\n';
    }
    write_file(path, out);
}

TrackArchive read_tracks(const std::string& path) {
    const std::string text = read_file(path);
    TrackArchive archive;
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const json j = parse_json_line(line, path, lineno);
        check_version(j, path, lineno);
        ArchiveTrack t;
        t.id = static_cast<std::int64_t>(number_field(j, "id", path, lineno));
        if (!j.contains("class") || !j["class"].is_string())
            fail(path, lineno, "missing class");
        const auto cls = object_class_from_string(j["class"].get<std::string>());
        if (!cls) fail(path, lineno, "unknown class \"" + j["class"].get<std::string>() + "\"");
        t.object_class = *cls;
        const std::string status = j.value("status", std::string());
        if (status == "tentative") t.final_status = TrackStatus::Tentative;
        else if (status == "confirmed") t.final_status = TrackStatus::Confirmed;
        else if (status == "deleted") t.final_status = TrackStatus::Deleted;
        else fail(path, lineno, "unknown status \"" + status + "\"");
        if (!j.contains("points") || !j["points"].is_array())
            fail(path, lineno, "missing points array");
        for (const auto& p : j["points"]) {
            if (!p.is_array() || p.size() != 3) fail(path, lineno, "points entries are [frame, x, y]");
            t.points.emplace_back(p[0].get<int>(),
                                  geometry::Point2{p[1].get<double>(), p[2].get<double>()});
        }
        if (!j.contains("boxes") || !j["boxes"].is_array())
            fail(path, lineno, "missing boxes array");
        for (const auto& b : j["boxes"]) {
            if (!b.is_array() || b.size() != 5)
                fail(path, lineno, "boxes entries are [frame, x, y, w, h]");
            t.boxes.emplace_back(b[0].get<int>(),
                                 geometry::BBox{b[1].get<double>(), b[2].get<double>(),
                                                b[3].get<double>(), b[4].get<double>()});
        }
        archive.tracks.push_back(std::move(t));
    }
    return archive;
}

std::vector<nearmiss::SpatialRegion> spatial_regions(const FrameDetections& frames) {
    std::vector<nearmiss::SpatialRegion> out;
    for (const auto& [frame, dets] : frames) {
        for (const Detection& d : dets) {
            if (d.object_class != ObjectClass::NearAccident) continue;
            out.push_back({frame, d.bbox, d.confidence});
        }
    }
    return out;
}

} // namespace crosswatch::io
