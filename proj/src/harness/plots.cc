// Copyright 2026 The QKLab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "qklab/errors.h"
#include "qklab/harness.h"
#include "qklab/text_util.h"

namespace qklab {
namespace {

namespace fs = std::filesystem;

constexpr double kWidth = 640, kHeight = 480, kLeft = 80, kRight = 20, kTop = 40, kBottom = 110;

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo, hi;
    double map(double v, double a, double b) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

Range padded(double lo, double hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi)) return {0.0, 1.0};
    if (hi - lo < 1e-300) {
        const double w = std::max(std::abs(lo) * 0.05, 1e-12);
        return {lo - w, hi + w};
    }
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

// Frame, title and tick labels shared by both chart types.
void frame(std::ostringstream &o, const std::string &title, const std::string &ylabel, const Range &y,
           const std::string &xlabel, const Range *x) {
    o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(title)
      << "</text>\n";
    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    o << "<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << x1 - x0 << "\" height=\"" << y0 - y1
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double v = y.lo + (y.hi - y.lo) * t / 4.0;
        const double yy = y.map(v, y0, y1);
        o << "<line x1=\"" << x0 - 4 << "\" y1=\"" << px(yy) << "\" x2=\"" << x0 << "\" y2=\"" << px(yy)
          << "\" stroke=\"black\"/>\n";
        o << "<text x=\"" << x0 - 6 << "\" y=\"" << px(yy + 4) << "\" text-anchor=\"end\">" << tick(v) << "</text>\n";
        if (x) {
            const double xv = x->lo + (x->hi - x->lo) * t / 4.0;
            const double xx = x->map(xv, x0, x1);
            o << "<line x1=\"" << px(xx) << "\" y1=\"" << y0 << "\" x2=\"" << px(xx) << "\" y2=\"" << y0 + 4
              << "\" stroke=\"black\"/>\n";
            o << "<text x=\"" << px(xx) << "\" y=\"" << y0 + 18 << "\" text-anchor=\"middle\">" << tick(xv)
              << "</text>\n";
        }
    }
    o << "<text x=\"18\" y=\"" << (y0 + y1) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << (y0 + y1) / 2 << ")\">" << xml_escape(ylabel) << "</text>\n";
    if (!xlabel.empty()) {
        o << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << y0 + 40 << "\" text-anchor=\"middle\">"
          << xml_escape(xlabel) << "</text>\n";
    }
}

std::string scatter_svg(const ModelResult &m) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < m.truth.size(); ++i) {
        lo = std::min({lo, m.truth[i], m.prediction[i]});
        hi = std::max({hi, m.truth[i], m.prediction[i]});
    }
    const Range r = padded(lo, hi);
    std::ostringstream o;
    frame(o, m.label + " (test MSE " + tick(m.test_mse) + ")", "prediction", r, "ground truth", &r);
    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    o << "<line class=\"identity\" x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y1
      << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
    for (std::size_t i = 0; i < m.truth.size(); ++i) {
        o << "<circle cx=\"" << px(r.map(m.truth[i], x0, x1)) << "\" cy=\"" << px(r.map(m.prediction[i], y0, y1))
          << "\" r=\"3\" fill=\"steelblue\" fill-opacity=\"0.7\" data-x=\"" << format_double(m.truth[i])
          << "\" data-y=\"" << format_double(m.prediction[i]) << "\"/>\n";
    }
    o << "</svg>\n";
    return o.str();
}

std::string bar_svg(const std::string &title, const std::string &ylabel, const std::vector<std::string> &labels,
                    const std::vector<double> &values, const std::vector<bool> &highlight) {
    double hi = 0.0;
    for (double v : values) {
        if (std::isfinite(v)) hi = std::max(hi, v);
    }
    const Range r{0.0, hi > 0.0 ? hi * 1.1 : 1.0};
    std::ostringstream o;
    frame(o, title, ylabel, r, "", nullptr);
    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    const double slot = (x1 - x0) / static_cast<double>(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = std::isfinite(values[i]) ? std::max(values[i], 0.0) : 0.0;
        const double top = r.map(v, y0, y1);
        const double bx = x0 + slot * i + 0.15 * slot;
        o << "<rect x=\"" << px(bx) << "\" y=\"" << px(top) << "\" width=\"" << px(0.7 * slot) << "\" height=\""
          << px(y0 - top) << "\" fill=\"" << (highlight[i] ? "indianred" : "steelblue") << "\" data-label=\""
          << xml_escape(labels[i]) << "\" data-value=\"" << format_double(values[i]) << "\"/>\n";
        const double cx = bx + 0.35 * slot;
        o << "<text x=\"" << px(cx) << "\" y=\"" << y0 + 12 << "\" text-anchor=\"end\" font-size=\"10\" "
          << "transform=\"rotate(-40 " << px(cx) << " " << y0 + 12 << ")\">" << xml_escape(labels[i]) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

void write_file(const fs::path &path, const std::string &text, std::vector<fs::path> &written) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ValidationError("cannot write " + path.string());
    f << text;
    if (!f) throw ValidationError("short write to " + path.string());
    written.push_back(path);
}

}  // namespace

PlotOutput emit_plots(const RunReport &r, const fs::path &dir) {
    PlotOutput out;
    if (r.models.empty()) {
        out.notice = "no models in report; no plots written";
        return out;
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ValidationError("cannot create plot directory " + dir.string());

    for (const auto &m : r.models) {
        std::ostringstream csv;
        csv << "sample_id,truth,prediction\n";
        for (std::size_t i = 0; i < m.truth.size(); ++i) {
            csv << (i < m.test_ids.size() ? m.test_ids[i] : i) << "," << format_double(m.truth[i]) << ","
                << format_double(m.prediction[i]) << "\n";
        }
        write_file(dir / ("scatter_" + m.label + ".csv"), csv.str(), out.files);
        write_file(dir / ("scatter_" + m.label + ".svg"), scatter_svg(m), out.files);
    }

    std::vector<std::string> labels;
    std::vector<double> mses;
    std::vector<bool> noisy;
    std::ostringstream csv;
    csv << "model,kind,variant,a_over_rb,seed,test_mse\n";
    for (const auto &m : r.models) {
        labels.push_back(m.label);
        mses.push_back(m.test_mse);
        noisy.push_back(m.noisy);
        csv << m.label << "," << kernel_kind_name(m.kind) << "," << (m.noisy ? "noisy" : "ideal") << ","
            << format_double(m.a_over_rb) << "," << m.seed << "," << format_double(m.test_mse) << "\n";
    }
    write_file(dir / "mse.csv", csv.str(), out.files);
    write_file(dir / "mse.svg", bar_svg("test MSE", "MSE", labels, mses, noisy), out.files);

    if (std::any_of(r.models.begin(), r.models.end(), [](const auto &m) { return m.noisy; })) {
        std::vector<std::string> wl;
        std::vector<double> wv;
        std::vector<bool> wn;
        std::ostringstream w;
        w << "model,kind,variant,a_over_rb,seed,weight_norm,paired_weight_norm\n";
        for (const auto &m : r.models) {
            if (!is_quantum(m.kind)) continue;
            wl.push_back(m.label);
            wv.push_back(m.weight_norm);
            wn.push_back(m.noisy);
            w << m.label << "," << kernel_kind_name(m.kind) << "," << (m.noisy ? "noisy" : "ideal") << ","
              << format_double(m.a_over_rb) << "," << m.seed << "," << format_double(m.weight_norm) << ","
              << (m.noisy ? format_double(m.paired_weight_norm) : std::string()) << "\n";
        }
        write_file(dir / "weight_norm.csv", w.str(), out.files);
        write_file(dir / "weight_norm.svg", bar_svg("weight norm |w|^2", "|w|^2", wl, wv, wn), out.files);
    }
    return out;
}

}  // namespace qklab
