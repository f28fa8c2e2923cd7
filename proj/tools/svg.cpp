#include "svg.hpp"

#include <algorithm>
#include <cstdio>

namespace crosswatch::svg {

namespace {

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
}

} // namespace

std::string render(const TrackArchive& archive,
                   const std::vector<nearmiss::NearAccidentEvent>& events) {
    double min_x = 0.0, min_y = 0.0, max_x = 1.0, max_y = 1.0;
    bool seen = false;
    const auto grow = [&](double x, double y) {
        if (!seen) {
            min_x = max_x = x;
            min_y = max_y = y;
            seen = true;
            return;
        }
        min_x = std::min(min_x, x);
        max_x = std::max(max_x, x);
        min_y = std::min(min_y, y);
        max_y = std::max(max_y, y);
    };
    for (const auto& t : archive.tracks)
        for (const auto& [f, p] : t.points) grow(p.x, p.y);
    for (const auto& e : events) {
        grow(e.region.x, e.region.y);
        grow(e.region.x + e.region.w, e.region.y + e.region.h);
    }

    const double pad = 20.0;
    min_x -= pad;
    min_y -= pad;
    max_x += pad;
    max_y += pad;

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" + num(min_x) + " " +
           num(min_y) + " " + num(max_x - min_x) + " " + num(max_y - min_y) + "\">\n";
    out += "<rect x=\"" + num(min_x) + "\" y=\"" + num(min_y) + "\" width=\"" +
           num(max_x - min_x) + "\" height=\"" + num(max_y - min_y) + "\" fill=\"white\"/>\n";

    for (const auto& t : archive.tracks) {
        if (t.points.empty()) continue;
        const char* color = kPalette[static_cast<size_t>(t.id) % std::size(kPalette)];
        out += "<polyline fill=\"none\" stroke=\"";
        out += color;
        out += "\" stroke-width=\"2\" points=\"";
        for (const auto& [f, p] : t.points) out += num(p.x) + "," + num(p.y) + " ";
        out += "\"/>\n";
        const auto& [f0, p0] = t.points.front();
        out += "<text x=\"" + num(p0.x + 4) + "\" y=\"" + num(p0.y - 4) +
               "\" font-size=\"12\" fill=\"" + color + "\">" + std::to_string(t.id) + " " +
               to_string(t.object_class) + "</text>\n";
    }

    for (const auto& e : events) {
        out += "<rect x=\"" + num(e.region.x) + "\" y=\"" + num(e.region.y) + "\" width=\"" +
               num(e.region.w) + "\" height=\"" + num(e.region.h) +
               "\" fill=\"#d62728\" fill-opacity=\"0.15\" stroke=\"#d62728\" "
               "stroke-width=\"1.5\"/>\n";
        out += "<text x=\"" + num(e.region.x + 2) + "\" y=\"" + num(e.region.y - 4) +
               "\" font-size=\"11\" fill=\"#d62728\">" + std::to_string(e.track_a) + "&#215;" +
               std::to_string(e.track_b) + " [" + std::to_string(e.frame_start) + ".." +
               std::to_string(e.frame_end) + "]</text>\n";
    }

    out += "</svg>\n";
    return out;
}

} // namespace crosswatch::svg
