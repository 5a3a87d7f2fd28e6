#include "qsync/table.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

namespace qsync {

namespace {

std::string num(double v, const char* fmt) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

void check_rectangular(const ResultTable& t) {
    if (t.columns.empty()) throw std::invalid_argument("table: no columns");
    if (!t.units.empty() && t.units.size() != t.columns.size())
        throw std::invalid_argument("table: units do not match the columns");
    for (const auto& r : t.rows)
        if (r.size() != t.columns.size())
            throw std::invalid_argument("table: ragged row");
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << text;
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::string header_cell(const ResultTable& t, std::size_t i) {
    if (t.units.empty() || t.units[i].empty()) return t.columns[i];
    return t.columns[i] + " [" + t.units[i] + "]";
}

// ---------------------------------------------------------------------------
// plot scaffolding
// ---------------------------------------------------------------------------

const char* kPalette[7] = {"#5b5bc8", "#e08030", "#2e8b57", "#c23b3b",
                           "#8563a8", "#278ea5", "#94862e"};

// Fixed 9 stop blue to yellow map, interpolated linearly in RGB.
const double kStops[9][3] = {
    {0.05, 0.03, 0.35}, {0.22, 0.10, 0.55}, {0.30, 0.24, 0.64},
    {0.26, 0.40, 0.65}, {0.21, 0.52, 0.63}, {0.17, 0.64, 0.57},
    {0.30, 0.75, 0.42}, {0.62, 0.83, 0.23}, {0.96, 0.90, 0.13}};

std::string colormap(double t) {
    t = std::clamp(t, 0.0, 1.0) * 8.0;
    const int k = std::min(7, static_cast<int>(t));
    const double f = t - k;
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                  static_cast<int>(std::lround(255 * (kStops[k][0] + f * (kStops[k + 1][0] - kStops[k][0])))),
                  static_cast<int>(std::lround(255 * (kStops[k][1] + f * (kStops[k + 1][1] - kStops[k][1])))),
                  static_cast<int>(std::lround(255 * (kStops[k][2] + f * (kStops[k + 1][2] - kStops[k][2])))));
    return buf;
}

struct Ticks {
    std::vector<double> at;
};

Ticks nice_ticks(double lo, double hi) {
    if (!(hi > lo)) hi = lo + 1.0;
    const double span = hi - lo;
    double step = std::pow(10.0, std::floor(std::log10(span / 4.0)));
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (span / (step * m) <= 6.0) {
            step *= m;
            break;
        }
    }
    Ticks t;
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step)
        t.at.push_back(std::abs(v) < 1e-12 * span ? 0.0 : v);
    return t;
}

std::string coord(double v) { return num(v, "%.2f"); }

void svg_text(std::string& s, double x, double y, const std::string& text,
              const char* anchor = "middle", int size = 12, const char* extra = "") {
    s += "<text x=\"" + coord(x) + "\" y=\"" + coord(y) + "\" font-family=\"sans-serif\" font-size=\"" +
         std::to_string(size) + "\" text-anchor=\"" + anchor + "\"" + extra + ">" + xml_escape(text) +
         "</text>\n";
}

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> pts;  // NaN y splits segments
};

// ---------------------------------------------------------------------------
// line plot
// ---------------------------------------------------------------------------

std::string svg_line(const ResultTable& t) {
    const bool grouped = t.columns[0] == "variant";
    const std::size_t xcol = grouped ? 1 : 0;
    if (t.columns.size() < xcol + 2)
        throw std::invalid_argument("emit_plot: line needs an x column and at least one series");

    std::vector<Series> series;
    std::vector<double> variants;
    if (grouped) {
        for (const auto& r : t.rows)
            if (std::find(variants.begin(), variants.end(), r[0]) == variants.end())
                variants.push_back(r[0]);
    } else {
        variants.push_back(0.0);
    }
    for (double v : variants) {
        for (std::size_t c = xcol + 1; c < t.columns.size(); ++c) {
            Series s;
            s.label = t.columns[c];
            if (grouped) {
                const std::size_t vi = static_cast<std::size_t>(std::lround(v));
                const std::string vl = vi < t.variant_labels.size() ? t.variant_labels[vi]
                                                                    : "variant " + num(v, "%g");
                s.label = vl + ": " + s.label;
            }
            for (const auto& r : t.rows)
                if (!grouped || r[0] == v) s.pts.emplace_back(r[xcol], r[c]);
            series.push_back(std::move(s));
        }
    }

    double xlo = HUGE_VAL, xhi = -HUGE_VAL, ylo = HUGE_VAL, yhi = -HUGE_VAL;
    for (const auto& s : series)
        for (const auto& [x, y] : s.pts) {
            if (std::isfinite(x)) xlo = std::min(xlo, x), xhi = std::max(xhi, x);
            if (std::isfinite(y)) ylo = std::min(ylo, y), yhi = std::max(yhi, y);
        }
    if (!(xlo <= xhi) || !(ylo <= yhi))
        throw std::invalid_argument("emit_plot: no finite data to draw");
    if (xlo == xhi) xlo -= 1.0, xhi += 1.0;
    if (ylo == yhi) ylo -= 1.0, yhi += 1.0;
    const double ypad = 0.04 * (yhi - ylo);
    ylo -= ypad, yhi += ypad;

    const double W = 720, H = 480, L = 72, R = W - 24, T = 28, B = H - 52;
    const auto px = [&](double x) { return L + (x - xlo) / (xhi - xlo) * (R - L); };
    const auto py = [&](double y) { return B - (y - ylo) / (yhi - ylo) * (B - T); };

    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + coord(W) + "\" height=\"" +
                    coord(H) + "\" viewBox=\"0 0 " + coord(W) + " " + coord(H) + "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    for (double v : nice_ticks(xlo, xhi).at) {
        s += "<line x1=\"" + coord(px(v)) + "\" y1=\"" + coord(T) + "\" x2=\"" + coord(px(v)) +
             "\" y2=\"" + coord(B) + "\" stroke=\"#e3e3e3\" stroke-width=\"1\"/>\n";
        svg_text(s, px(v), B + 16, num(v, "%.6g"));
    }
    for (double v : nice_ticks(ylo, yhi).at) {
        s += "<line x1=\"" + coord(L) + "\" y1=\"" + coord(py(v)) + "\" x2=\"" + coord(R) +
             "\" y2=\"" + coord(py(v)) + "\" stroke=\"#e3e3e3\" stroke-width=\"1\"/>\n";
        svg_text(s, L - 6, py(v) + 4, num(v, "%.6g"), "end");
    }
    s += "<rect x=\"" + coord(L) + "\" y=\"" + coord(T) + "\" width=\"" + coord(R - L) +
         "\" height=\"" + coord(B - T) + "\" fill=\"none\" stroke=\"#333333\"/>\n";
    svg_text(s, (L + R) / 2, H - 14, header_cell(t, xcol));

    for (std::size_t k = 0; k < series.size(); ++k) {
        const char* color = kPalette[k % 7];
        const char* dash = k >= 7 ? " stroke-dasharray=\"5,4\"" : "";
        std::string path;
        bool open = false;
        for (const auto& [x, y] : series[k].pts) {
            if (!std::isfinite(x) || !std::isfinite(y)) {
                if (open) path += "\" fill=\"none\"/>\n", open = false;
                continue;
            }
            if (!open) {
                path += std::string("<polyline stroke=\"") + color + "\" stroke-width=\"1.8\"" +
                        dash + " points=\"";
                open = true;
            }
            path += coord(px(x)) + "," + coord(py(y)) + " ";
        }
        if (open) path += "\" fill=\"none\"/>\n";
        s += path;
        if (series[k].pts.size() <= 40)
            for (const auto& [x, y] : series[k].pts)
                if (std::isfinite(x) && std::isfinite(y))
                    s += "<circle cx=\"" + coord(px(x)) + "\" cy=\"" + coord(py(y)) +
                         "\" r=\"3\" fill=\"" + color + "\"/>\n";
    }

    const double lx = L + 10, ly0 = T + 10;
    for (std::size_t k = 0; k < series.size(); ++k) {
        const double ly = ly0 + 16.0 * k;
        s += "<line x1=\"" + coord(lx) + "\" y1=\"" + coord(ly) + "\" x2=\"" + coord(lx + 22) +
             "\" y2=\"" + coord(ly) + "\" stroke=\"" + kPalette[k % 7] + "\" stroke-width=\"2\"" +
             (k >= 7 ? " stroke-dasharray=\"5,4\"" : "") + "/>\n";
        svg_text(s, lx + 28, ly + 4, series[k].label, "start", 11);
    }
    s += "</svg>\n";
    return s;
}

// ---------------------------------------------------------------------------
// heatmap
// ---------------------------------------------------------------------------

std::string svg_heatmap(const ResultTable& t) {
    if (t.columns.size() < 3)
        throw std::invalid_argument("emit_plot: heatmap needs two axes and a value column");

    std::map<double, int> xi, yi;
    for (const auto& r : t.rows) {
        xi.emplace(r[0], 0);
        yi.emplace(r[1], 0);
    }
    if (xi.size() < 2 || yi.size() < 2)
        throw std::invalid_argument("emit_plot: heatmap needs a two dimensional grid");
    int k = 0;
    for (auto& [v, i] : xi) i = k++;
    k = 0;
    for (auto& [v, i] : yi) i = k++;
    const int nx = static_cast<int>(xi.size()), ny = static_cast<int>(yi.size());

    const int panels = static_cast<int>(t.columns.size()) - 2;
    const double PW = 360, PH = 360, L = 72, T = 40, GAP = 96, CB = 18;
    const double W = L + panels * (PW + GAP), H = T + PH + 56;

    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + coord(W) + "\" height=\"" +
                    coord(H) + "\" viewBox=\"0 0 " + coord(W) + " " + coord(H) + "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    for (int p = 0; p < panels; ++p) {
        const std::size_t vc = 2 + p;
        const double x0 = L + p * (PW + GAP);
        double vlo = HUGE_VAL, vhi = -HUGE_VAL;
        for (const auto& r : t.rows)
            if (std::isfinite(r[vc])) vlo = std::min(vlo, r[vc]), vhi = std::max(vhi, r[vc]);
        if (!(vlo <= vhi)) vlo = 0.0, vhi = 1.0;
        if (vlo == vhi) vhi = vlo + 1.0;

        const double cw = PW / nx, ch = PH / ny;
        for (const auto& r : t.rows) {
            if (!std::isfinite(r[vc])) continue;  // absent cells stay blank
            const double cx = x0 + xi.at(r[0]) * cw;
            const double cy = T + PH - (yi.at(r[1]) + 1) * ch;
            s += "<rect x=\"" + coord(cx) + "\" y=\"" + coord(cy) + "\" width=\"" + coord(cw + 0.5) +
                 "\" height=\"" + coord(ch + 0.5) + "\" fill=\"" +
                 colormap((r[vc] - vlo) / (vhi - vlo)) + "\"/>\n";
        }
        s += "<rect x=\"" + coord(x0) + "\" y=\"" + coord(T) + "\" width=\"" + coord(PW) +
             "\" height=\"" + coord(PH) + "\" fill=\"none\" stroke=\"#333333\"/>\n";
        svg_text(s, x0 + PW / 2, T - 10, header_cell(t, vc), "middle", 13);
        svg_text(s, x0 + PW / 2, T + PH + 34, header_cell(t, 0));
        if (p == 0)
            svg_text(s, 16, T + PH / 2, header_cell(t, 1), "middle", 12,
                     (" transform=\"rotate(-90 16 " + coord(T + PH / 2) + ")\"").c_str());

        svg_text(s, x0 + cw / 2, T + PH + 16, num(xi.begin()->first, "%.4g"));
        svg_text(s, x0 + PW - cw / 2, T + PH + 16, num(xi.rbegin()->first, "%.4g"));
        svg_text(s, x0 - 6, T + PH - ch / 2 + 4, num(yi.begin()->first, "%.4g"), "end");
        svg_text(s, x0 - 6, T + ch / 2 + 4, num(yi.rbegin()->first, "%.4g"), "end");

        const double bx = x0 + PW + 14;
        for (int i = 0; i < 32; ++i) {
            const double by = T + PH - (i + 1) * PH / 32;
            s += "<rect x=\"" + coord(bx) + "\" y=\"" + coord(by) + "\" width=\"" + coord(CB) +
                 "\" height=\"" + coord(PH / 32 + 0.5) + "\" fill=\"" +
                 colormap((i + 0.5) / 32.0) + "\"/>\n";
        }
        s += "<rect x=\"" + coord(bx) + "\" y=\"" + coord(T) + "\" width=\"" + coord(CB) +
             "\" height=\"" + coord(PH) + "\" fill=\"none\" stroke=\"#333333\"/>\n";
        svg_text(s, bx + CB + 4, T + PH + 2, num(vlo, "%.4g"), "start", 11);
        svg_text(s, bx + CB + 4, T + 8, num(vhi, "%.4g"), "start", 11);
    }
    s += "</svg>\n";
    return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// persistence
// ---------------------------------------------------------------------------

std::string csv_string(const ResultTable& t) {
    check_rectangular(t);
    std::string out;
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
        if (i) out += ',';
        out += csv_field(header_cell(t, i));
    }
    out += '\n';
    for (const auto& r : t.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (i) out += ',';
            if (std::isfinite(r[i])) out += num(r[i], "%.17g");
        }
        out += '\n';
    }
    if (t.failed) {
        out += "FAILED," + csv_field(t.failure);
        for (std::size_t i = 2; i < t.columns.size(); ++i) out += ',';
        out += '\n';
    }
    return out;
}

void write_csv(const ResultTable& t, const std::string& path) { write_file(path, csv_string(t)); }

std::string metadata_string(const ResultTable& t) {
    nlohmann::json meta = t.metadata;
    nlohmann::json cols = nlohmann::json::array();
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
        nlohmann::json c;
        c["name"] = t.columns[i];
        c["unit"] = t.units.empty() ? "" : t.units[i];
        cols.push_back(c);
    }
    meta["columns"] = cols;
    if (!t.variant_labels.empty()) meta["variants"] = t.variant_labels;
    meta["rows"] = t.rows.size();
    if (t.failed) meta["failed"] = t.failure;
    return meta.dump(2) + "\n";
}

void write_metadata(const ResultTable& t, const std::string& path) {
    write_file(path, metadata_string(t));
}

std::string svg_string(const ResultTable& t, PlotKind kind) {
    check_rectangular(t);
    if (t.rows.empty()) throw std::invalid_argument("emit_plot: empty table");
    return kind == PlotKind::line ? svg_line(t) : svg_heatmap(t);
}

void emit_plot(const ResultTable& t, PlotKind kind, const std::string& path) {
    write_file(path, svg_string(t, kind));
}

}  // namespace qsync
