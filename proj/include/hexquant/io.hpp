#pragma once

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "hexquant/discrete_energy.hpp"
#include "hexquant/errors.hpp"
#include "hexquant/flows.hpp"
#include "hexquant/geometry.hpp"
#include "hexquant/voronoi.hpp"

namespace hexquant {

/// Shortest round-trip decimal representation; deterministic across runs.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// RFC-4180 CSV writer: comma separated, CRLF line endings, quotes only when
/// a field needs them.
class CsvWriter {
  public:
    explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw geometry_error("CsvWriter: cannot open " + path);
    }

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << escape(fields[i]);
        }
        out_ << "\r\n";
    }

    void numeric_row(const std::vector<double>& values) {
        std::vector<std::string> fields;
        fields.reserve(values.size());
        for (double v : values) fields.push_back(format_double(v));
        row(fields);
    }

  private:
    static std::string escape(const std::string& f) {
        if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
        std::string out = "\"";
        for (char c : f) {
            if (c == '"') out += '"';
            out += c;
        }
        out += '"';
        return out;
    }

    std::ofstream out_;
};

// ---------------------------------------------------------------------------
// SVG output
// ---------------------------------------------------------------------------

/// Five-stop blue-to-yellow color ramp for the energy scale.
inline std::string color_ramp(double t) {
    static const double stops[5][3] = {{68, 1, 84},     {59, 82, 139},  {33, 145, 140},
                                       {94, 201, 98},   {253, 231, 37}};
    t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
    const double x = t * 4.0;
    const int k = x >= 4.0 ? 3 : int(x);
    const double f = x - k;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                  int(stops[k][0] + f * (stops[k + 1][0] - stops[k][0])),
                  int(stops[k][1] + f * (stops[k + 1][1] - stops[k][1])),
                  int(stops[k][2] + f * (stops[k + 1][2] - stops[k][2])));
    return buf;
}

/// Minimal deterministic SVG 1.1 canvas. World coordinates are mapped into a
/// fixed-size viewport with y pointing up.
class SvgCanvas {
  public:
    SvgCanvas(double min_x, double min_y, double max_x, double max_y, int pixels = 800)
        : min_x_(min_x), min_y_(min_y), pixels_(pixels),
          scale_(pixels / std::max(max_x - min_x, max_y - min_y)),
          height_(int((max_y - min_y) * scale_)) {}

    void polygon(const ConvexPolygon& poly, const std::string& fill,
                 const std::string& stroke = "#333333", double stroke_width = 0.5) {
        body_ << "<polygon points=\"";
        for (std::size_t i = 0; i < poly.vertices.size(); ++i) {
            if (i) body_ << ' ';
            body_ << fmt(px(poly.vertices[i])) << ',' << fmt(py(poly.vertices[i]));
        }
        body_ << "\" fill=\"" << fill << "\" stroke=\"" << stroke << "\" stroke-width=\""
              << fmt(stroke_width) << "\"/>\n";
    }

    void circle(Vec2 center, double r_world, const std::string& fill) {
        body_ << "<circle cx=\"" << fmt(px(center)) << "\" cy=\"" << fmt(py(center)) << "\" r=\""
              << fmt(r_world * scale_) << "\" fill=\"" << fill << "\"/>\n";
    }

    void text(Vec2 pos, const std::string& s, int size = 14) {
        body_ << "<text x=\"" << fmt(px(pos)) << "\" y=\"" << fmt(py(pos)) << "\" font-size=\""
              << size << "\" font-family=\"sans-serif\">" << s << "</text>\n";
    }

    void write(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw geometry_error("SvgCanvas: cannot open " + path);
        out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
            << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << pixels_
            << "\" height=\"" << height_ << "\">\n"
            << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
            << body_.str() << "</svg>\n";
    }

  private:
    static std::string fmt(double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6f", v);
        return buf;
    }
    double px(Vec2 p) const { return (p.x1 - min_x_) * scale_; }
    double py(Vec2 p) const { return height_ - (p.x2 - min_y_) * scale_; }

    double min_x_, min_y_;
    int pixels_;
    double scale_;
    int height_;
    std::ostringstream body_;
};

// ---------------------------------------------------------------------------
// Canned exports
// ---------------------------------------------------------------------------

/// Per-cell records of a tessellation. All coordinates are in lattice units;
/// cell energies carry lattice-units^4.
inline void write_cells_csv(const std::string& path, const VoronoiDiagram& diagram) {
    CsvWriter csv(path);
    csv.row({"site_index", "site_x1_lattice_units", "site_x2_lattice_units",
             "area_lattice_units2", "centroid_x1_lattice_units", "centroid_x2_lattice_units",
             "energy_lattice_units4"});
    for (std::size_t i = 0; i < diagram.cells.size(); ++i) {
        const Vec2 c = diagram.cells[i].centroid();
        csv.numeric_row({double(i), diagram.sites[i].x1, diagram.sites[i].x2,
                         diagram.cells[i].area(), c.x1, c.x2, cell_energy(diagram, i)});
    }
}

/// Tessellation rendering with cells colored by their quantization energy.
inline void render_diagram_svg(const std::string& path, const VoronoiDiagram& diagram) {
    double lo = 1e300, hi = -1e300;
    std::vector<double> energy(diagram.cells.size());
    for (std::size_t i = 0; i < diagram.cells.size(); ++i) {
        energy[i] = cell_energy(diagram, i);
        lo = std::min(lo, energy[i]);
        hi = std::max(hi, energy[i]);
    }
    const double span = hi - lo > 0.0 ? hi - lo : 1.0;
    SvgCanvas svg(-1.0, -1.0, 1.2, 1.2);
    for (std::size_t i = 0; i < diagram.cells.size(); ++i) {
        svg.polygon(diagram.cells[i], color_ramp((energy[i] - lo) / span), "#222222", 0.4);
    }
    for (const Vec2& s : diagram.sites) svg.circle(s, 0.004, "#000000");
    svg.write(path);
}

/// Flow trace rows. Times are flow units, energies lattice-units^4 per
/// period, distances lattice units.
inline void write_trace_csv(const std::string& path, const FlowTrace& trace) {
    CsvWriter csv(path);
    csv.row({"time_flow_units", "energy_lattice_units4", "l2_distance_lattice_units",
             "linf_distance_lattice_units", "dt_flow_units", "accepted"});
    for (const FlowRecord& r : trace.records) {
        csv.numeric_row({r.time, r.energy, r.l2, r.linf, r.dt, r.accepted ? 1.0 : 0.0});
    }
}

} // namespace hexquant
