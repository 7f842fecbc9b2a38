#pragma once

#include "skewgraph/measures.hpp"
#include "skewgraph/rational.hpp"
#include "skewgraph/symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace skewgraph {

/// Shortest exact round-trip decimal for a double.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path);
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row) {
        if (row.size() != header.size())
            throw std::invalid_argument("csv row width does not match the header");
        rows.push_back(std::move(row));
    }

    std::string to_string() const {
        std::string out = join(header);
        for (const auto& r : rows) out += join(r);
        return out;
    }

  private:
    static std::string join(const std::vector<std::string>& cells) {
        std::string line;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) line += ',';
            line += cells[i];
        }
        line += '\n';
        return line;
    }
};

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

namespace detail {

inline std::string svg_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string svg_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

}  // namespace detail

/// Self-contained SVG line plot: no external fonts, scripts, or renderers.
/// With log_y the y axis is log10, falling back to linear when any value
/// is nonpositive. Nonfinite points are dropped.
inline std::string line_plot_svg(const std::string& title, const std::string& x_label,
                                 const std::string& y_label,
                                 const std::vector<double>& xs,
                                 const std::vector<double>& ys, bool log_y = false) {
    if (xs.size() != ys.size())
        throw std::invalid_argument("line_plot_svg needs matching xs/ys");
    std::vector<double> px, py;
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (std::isfinite(xs[i]) && std::isfinite(ys[i])) {
            px.push_back(xs[i]);
            py.push_back(ys[i]);
        }
    bool use_log = log_y;
    for (double v : py)
        if (!(v > 0.0)) use_log = false;
    std::vector<double> ty = py;
    if (use_log)
        for (double& v : ty) v = std::log10(v);

    const double w = 640, h = 400, left = 70, right = 610, top = 40, bottom = 350;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (!px.empty()) {
        xmin = *std::min_element(px.begin(), px.end());
        xmax = *std::max_element(px.begin(), px.end());
        ymin = *std::min_element(ty.begin(), ty.end());
        ymax = *std::max_element(ty.begin(), ty.end());
    }
    if (xmax - xmin < 1e-12) {
        xmin -= 1;
        xmax += 1;
    }
    if (ymax - ymin < 1e-12) {
        ymin -= 1;
        ymax += 1;
    }
    auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (right - left); };
    auto sy = [&](double y) { return bottom - (y - ymin) / (ymax - ymin) * (bottom - top); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\""
        << h << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
    svg << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
    svg << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"15\">" << detail::svg_escape(title)
        << "</text>\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right
        << "\" y2=\"" << bottom << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
        << bottom << "\" stroke=\"black\"/>\n";

    for (int i = 0; i <= 3; ++i) {
        double fx = xmin + (xmax - xmin) * i / 3.0;
        double gx = sx(fx);
        svg << "<line x1=\"" << detail::svg_num(gx) << "\" y1=\"" << bottom << "\" x2=\""
            << detail::svg_num(gx) << "\" y2=\"" << bottom + 5 << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << detail::svg_num(gx) << "\" y=\"" << bottom + 20
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << detail::tick_label(fx) << "</text>\n";
        double fy = ymin + (ymax - ymin) * i / 3.0;
        double gy = sy(fy);
        double shown = use_log ? std::pow(10.0, fy) : fy;
        svg << "<line x1=\"" << left - 5 << "\" y1=\"" << detail::svg_num(gy) << "\" x2=\""
            << left << "\" y2=\"" << detail::svg_num(gy) << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << left - 8 << "\" y=\"" << detail::svg_num(gy + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
            << detail::tick_label(shown) << "</text>\n";
    }
    svg << "<text x=\"" << (left + right) / 2 << "\" y=\"" << h - 10
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << detail::svg_escape(x_label) << "</text>\n";
    svg << "<text x=\"" << left << "\" y=\"" << top - 8
        << "\" text-anchor=\"start\" font-family=\"sans-serif\" font-size=\"12\">"
        << detail::svg_escape(use_log ? y_label + " (log scale)" : y_label)
        << "</text>\n";

    if (!px.empty()) {
        svg << "<polyline fill=\"none\" stroke=\"#1f6feb\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < px.size(); ++i) {
            if (i) svg << ' ';
            svg << detail::svg_num(sx(px[i])) << ',' << detail::svg_num(sy(ty[i]));
        }
        svg << "\"/>\n";
        for (std::size_t i = 0; i < px.size(); ++i)
            svg << "<circle cx=\"" << detail::svg_num(sx(px[i])) << "\" cy=\""
                << detail::svg_num(sy(ty[i])) << "\" r=\"2.5\" fill=\"#1f6feb\"/>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

namespace detail {

inline std::string word_csv(const Word& w) {
    std::string out;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(w[i]);
    }
    return out;
}

inline Word parse_word_csv(const std::string& s) {
    Word out;
    std::string cur;
    auto flush = [&] {
        if (cur.empty()) throw std::runtime_error("empty symbol in word list");
        out.push_back(std::stoi(cur));
        cur.clear();
    };
    for (char c : s) {
        if (c == ',')
            flush();
        else
            cur += c;
    }
    if (!cur.empty()) flush();
    return out;
}

inline std::string field_value(const std::string& line, const std::string& name) {
    std::string needle = name + "=";
    std::string::size_type at = line.find(" " + needle);
    if (at == std::string::npos) {
        if (line.compare(0, needle.size(), needle) == 0)
            at = 0;
        else
            throw std::runtime_error("measure line missing field `" + name + "`");
    } else {
        at += 1;
    }
    std::string::size_type start = at + needle.size();
    std::string::size_type end = line.find(' ', start);
    return line.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

}  // namespace detail

/// Line-oriented measure serialization: a header row with the alphabet and
/// fiber dimension, then one atom per line carrying the window (tails, core,
/// core offset), exact rational coordinates, and the decimal weight.
inline std::string serialize_measure(const EmpiricalMeasure& mu) {
    if (mu.atoms.empty()) throw std::invalid_argument("cannot serialize an empty measure");
    std::ostringstream out;
    out << "measure k=" << mu.atoms[0].window.alphabet()
        << " dim=" << mu.atoms[0].x.size() << "\n";
    for (const Atom& a : mu.atoms) {
        Word core;
        for (std::int64_t i = a.window.core_begin(); i < a.window.core_end(); ++i)
            core.push_back(a.window.symbol_at(i));
        out << "atom left=" << detail::word_csv(a.window.left_tail())
            << " core=" << detail::word_csv(core) << " offset=" << a.window.core_begin()
            << " right=" << detail::word_csv(a.window.right_tail()) << " x=";
        for (std::size_t s = 0; s < a.x.size(); ++s) {
            if (s) out << ',';
            out << rational_to_string(a.x[s]);
        }
        out << " w=" << format_double(a.weight) << "\n";
    }
    return out.str();
}

inline EmpiricalMeasure parse_measure(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.compare(0, 8, "measure ") != 0)
        throw std::runtime_error("measure text must start with a `measure` header");
    int k = std::stoi(detail::field_value(line, "k"));
    std::size_t dim = static_cast<std::size_t>(std::stoi(detail::field_value(line, "dim")));
    EmpiricalMeasure mu;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.compare(0, 5, "atom ") != 0)
            throw std::runtime_error("expected an `atom` line, got: " + line);
        std::string core_s = detail::field_value(line, "core");
        Word core = core_s.empty() ? Word{} : detail::parse_word_csv(core_s);
        SymbolWindow w(k, std::move(core),
                       std::stoll(detail::field_value(line, "offset")),
                       detail::parse_word_csv(detail::field_value(line, "left")),
                       detail::parse_word_csv(detail::field_value(line, "right")));
        std::vector<Rational> x;
        std::string xs = detail::field_value(line, "x");
        std::string cur;
        for (char c : xs) {
            if (c == ',') {
                x.push_back(parse_rational(cur));
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (!cur.empty()) x.push_back(parse_rational(cur));
        if (x.size() != dim)
            throw std::runtime_error("atom coordinate count disagrees with the header");
        double weight = std::strtod(detail::field_value(line, "w").c_str(), nullptr);
        mu.atoms.push_back(Atom{std::move(w), std::move(x), weight});
    }
    return mu;
}

}  // namespace skewgraph
