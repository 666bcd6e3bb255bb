#include "cobbkit/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "cobbkit/tilt.hpp"

namespace cobbkit {

namespace {

std::string num(double v, int decimals = 2) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    std::string s(buf);
    if (s == "-0" || s == "-0.0" || s == "-0.00") s.erase(s.begin());
    return s;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Box {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
    void add(const Point& p) {
        x0 = std::min(x0, p.x);
        y0 = std::min(y0, p.y);
        x1 = std::max(x1, p.x);
        y1 = std::max(y1, p.y);
    }
};

}  // namespace

std::string render_svg(const CobbReport& report, const SpineLandmarks& sl) {
    const auto corners = flatten(sl);
    Box bb{corners[0].x, corners[0].y, corners[0].x, corners[0].y};
    for (const auto& p : corners) bb.add(p);
    const double pad = 40.0;
    const double x0 = bb.x0 - pad, y0 = bb.y0 - pad;
    const double w = (bb.x1 - bb.x0) + 2 * pad, h = (bb.y1 - bb.y0) + 2 * pad;
    const double reach = std::hypot(w, h);

    const TiltProfile tp = tilt_profile(sl);

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" + num(x0) + " " + num(y0) +
           " " + num(w) + " " + num(h) + "\">\n";
    svg += "<title>" + escape(sl.image_id) + " (" + to_string(report.method) + ")</title>\n";
    svg += "<rect x=\"" + num(x0) + "\" y=\"" + num(y0) + "\" width=\"" + num(w) +
           "\" height=\"" + num(h) + "\" fill=\"#ffffff\"/>\n";

    for (const auto& vb : sl.vertebrae) {
        svg += "<polygon points=\"";
        svg += num(vb.top_left.x) + "," + num(vb.top_left.y) + " ";
        svg += num(vb.top_right.x) + "," + num(vb.top_right.y) + " ";
        svg += num(vb.bottom_right.x) + "," + num(vb.bottom_right.y) + " ";
        svg += num(vb.bottom_left.x) + "," + num(vb.bottom_left.y);
        svg += "\" fill=\"#dbe6f3\" stroke=\"#33415c\" stroke-width=\"1\"/>\n";
    }

    // One line per window extreme: the upper endplate of the max-tilt vertebra
    // and the lower endplate of the min-tilt vertebra, extended past the spine.
    auto endplate_line = [&](int v, bool upper) {
        const Vertebra& vb = sl.vertebrae[static_cast<std::size_t>(v)];
        const Point a = upper ? vb.top_left : vb.bottom_left;
        const Point b = upper ? vb.top_right : vb.bottom_right;
        const double mx = 0.5 * (a.x + b.x), my = 0.5 * (a.y + b.y);
        double dx = b.x - a.x, dy = b.y - a.y;
        const double len = std::hypot(dx, dy);
        if (len == 0.0) return;  // degenerate endplate, nothing to draw
        dx /= len;
        dy /= len;
        svg += "<line x1=\"" + num(mx - reach * dx) + "\" y1=\"" + num(my - reach * dy) +
               "\" x2=\"" + num(mx + reach * dx) + "\" y2=\"" + num(my + reach * dy) +
               "\" stroke=\"#2a9d8f\" stroke-width=\"1\" stroke-dasharray=\"6 3\"/>\n";
    };
    for (const auto& wa : report.windows) {
        int vmax = wa.window.first, vmin = wa.window.first;
        for (int v = wa.window.first; v <= wa.window.last; ++v) {
            if (tp.vertebral_rad[v] > tp.vertebral_rad[vmax]) vmax = v;
            if (tp.vertebral_rad[v] < tp.vertebral_rad[vmin]) vmin = v;
        }
        endplate_line(std::min(vmax, vmin), true);
        endplate_line(std::max(vmax, vmin), false);
    }

    for (int v : report.inflections) {
        const Vertebra& vb = sl.vertebrae[static_cast<std::size_t>(v)];
        Box b{vb.top_left.x, vb.top_left.y, vb.top_left.x, vb.top_left.y};
        b.add(vb.top_right);
        b.add(vb.bottom_left);
        b.add(vb.bottom_right);
        const double m = 4.0;
        svg += "<rect x=\"" + num(b.x0 - m) + "\" y=\"" + num(b.y0 - m) + "\" width=\"" +
               num(b.x1 - b.x0 + 2 * m) + "\" height=\"" + num(b.y1 - b.y0 + 2 * m) +
               "\" fill=\"none\" stroke=\"#c1121f\" stroke-width=\"1.5\"/>\n";
        svg += "<text x=\"" + num(b.x1 + m + 4) + "\" y=\"" + num(0.5 * (b.y0 + b.y1)) +
               "\" font-size=\"12\" fill=\"#c1121f\">" + std::to_string(v + 1) + "</text>\n";
    }

    for (int i = 0; i < 3; ++i) {
        svg += "<text x=\"" + num(x0 + 8) + "\" y=\"" + num(y0 + 16 + 16 * i) +
               "\" font-size=\"13\" fill=\"#33415c\">angle " + std::to_string(i + 1) + ": " +
               num(report.angles_deg[static_cast<std::size_t>(i)], 1) + " deg</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace cobbkit
