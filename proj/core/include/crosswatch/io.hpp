#pragma once

#include <map>
#include <string>
#include <vector>

#include "crosswatch/archive.hpp"
#include "crosswatch/detection.hpp"
#include "crosswatch/nearmiss.hpp"

namespace crosswatch::io {

using FrameDetections = std::map<int, std::vector<Detection>>;

// Detections come either as JSON Lines
//   {"frame": 0, "class": "car", "bbox": [x, y, w, h], "conf": 0.9, "emb": [...]}
// (emb optional) or as CSV with columns frame,class,x,y,w,h,conf and an
// optional header row. The extension picks the parser: .csv is CSV,
// everything else is JSONL. Records are validated eagerly and errors cite
// the line number. Embeddings must be unit length within 1e-3 and are
// renormalized exactly on load; dimensions must agree across the file.
FrameDetections load_detections(const std::string& path);
FrameDetections parse_detections_jsonl(const std::string& text, const std::string& origin);
FrameDetections parse_detections_csv(const std::string& text, const std::string& origin);

void write_detections(const std::string& path, const FrameDetections& frames);

// Events and track archives round-trip exactly through JSON Lines; every
// record carries a schema version field "v". Events are ordered by
// (frame_start, frame_end, ids), tracks by id.
void write_events(const std::string& path, const std::vector<nearmiss::NearAccidentEvent>& events);
std::vector<nearmiss::NearAccidentEvent> read_events(const std::string& path);

void write_tracks(const std::string& path, const TrackArchive& archive);
TrackArchive read_tracks(const std::string& path);

// Spatial-stream extraction: near_accident records become candidate regions
// (confidence doubles as probability); everything else is left for tracking.
std::vector<nearmiss::SpatialRegion> spatial_regions(const FrameDetections& frames);

std::string read_file(const std::string& path);           // throws IoError
void write_file(const std::string& path, const std::string& text);

} // namespace crosswatch::io
