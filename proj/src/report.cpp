#include "mda/eval.hpp"

#include "mda/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace mda {

namespace {

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

struct CellStats {
    std::vector<double> values;
    double mean() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s / static_cast<double>(values.size());
    }
    double stddev() const {
        if (values.size() < 2) return 0.0;
        const double m = mean();
        double s = 0.0;
        for (double v : values) s += (v - m) * (v - m);
        return std::sqrt(s / static_cast<double>(values.size() - 1));
    }
};

struct TargetView {
    std::vector<std::string> sources;
    std::vector<MethodVariant> variants;
    std::map<std::pair<std::string, MethodVariant>, CellStats> cells;
    std::size_t max_seeds = 0;
};

TargetView view_for(const ExperimentReport& report, const std::string& target) {
    TargetView v;
    std::set<std::string> sources;
    std::set<MethodVariant> variants;
    for (const auto& r : report.rows) {
        if (r.target != target) continue;
        sources.insert(r.source);
        variants.insert(r.variant);
        v.cells[{r.source, r.variant}].values.push_back(r.g_mean);
    }
    v.sources.assign(sources.begin(), sources.end());
    v.variants.assign(variants.begin(), variants.end());
    for (const auto& [k, c] : v.cells) v.max_seeds = std::max(v.max_seeds, c.values.size());
    return v;
}

std::string xml_escape(const std::string& s) {
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

constexpr const char* kPalette[8] = {"#9e9e9e", "#616161", "#90caf9", "#1565c0",
                                     "#a5d6a7", "#2e7d32", "#ffcc80", "#e65100"};

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

} // namespace

std::string format_gmean(double v) { return fmt("%.4f", v); }

std::string render_csv(const ExperimentReport& report) {
    std::ostringstream out;
    out << kReportCsvHeader << '\n';
    for (const auto& r : report.rows)
        out << r.source << ',' << r.target << ',' << variant_name(r.variant) << ',' << r.seed
            << ',' << fmt("%.17g", r.g_mean) << ',' << r.cm.tp << ',' << r.cm.fn << ','
            << r.cm.fp << ',' << r.cm.tn << ',' << r.wall_ms << '\n';
    return out.str();
}

ExperimentReport parse_report_csv(const std::string& text, const std::string& report_id) {
    ExperimentReport rep;
    rep.report_id = report_id;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kReportCsvHeader)
        throw SchemaError("report CSV must start with header '" + std::string(kReportCsvHeader) + "'");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (f.size() != 10) throw SchemaError("report CSV row has " + std::to_string(f.size()) + " fields");
        try {
            ExperimentRow r;
            r.source = f[0];
            r.target = f[1];
            r.variant = parse_variant(f[2]);
            r.seed = std::stoull(f[3]);
            r.g_mean = std::stod(f[4]);
            r.cm = {std::stoull(f[5]), std::stoull(f[6]), std::stoull(f[7]), std::stoull(f[8])};
            r.wall_ms = std::stoll(f[9]);
            rep.rows.push_back(std::move(r));
        } catch (const std::logic_error& e) {
            throw SchemaError("bad report CSV row '" + line + "': " + e.what());
        }
    }
    return rep;
}

std::string render_markdown(const ExperimentReport& report, const std::string& target,
                            const std::string& manifest_ref) {
    const TargetView v = view_for(report, target);
    std::ostringstream out;
    if (!manifest_ref.empty()) out << "<!-- manifest: " << manifest_ref << " -->\n";
    out << "# G-mean, target " << target << "\n\n";
    out << "| Source domain |";
    for (const auto& s : v.sources) out << ' ' << s << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < v.sources.size(); ++i) out << "---|";
    out << "\n| Target domain |";
    for (std::size_t i = 0; i < v.sources.size(); ++i) out << ' ' << target << " |";
    out << '\n';
    for (auto var : v.variants) {
        out << "| " << variant_label(var) << " |";
        for (const auto& s : v.sources) {
            auto it = v.cells.find({s, var});
            if (it == v.cells.end()) out << " n/a |";
            else if (it->second.values.size() == 1) out << ' ' << format_gmean(it->second.mean()) << " |";
            else
                out << ' ' << format_gmean(it->second.mean()) << " ± "
                    << format_gmean(it->second.stddev()) << " |";
        }
        out << '\n';
    }
    if (v.max_seeds > 1) {
        out << "\nCells show mean ± sample standard deviation over seeds.\n\n";
        out << "## Per-seed G-mean\n\n| Variant | Source | Seeds |\n|---|---|---|\n";
        for (auto var : v.variants)
            for (const auto& s : v.sources) {
                std::vector<const ExperimentRow*> rows;
                for (const auto& r : report.rows)
                    if (r.target == target && r.source == s && r.variant == var) rows.push_back(&r);
                if (rows.empty()) continue;
                out << "| " << variant_label(var) << " | " << s << " |";
                for (std::size_t i = 0; i < rows.size(); ++i)
                    out << (i ? ", " : " ") << rows[i]->seed << ": " << format_gmean(rows[i]->g_mean);
                out << " |\n";
            }
    }
    return out.str();
}

std::string render_svg(const ExperimentReport& report, const std::string& target,
                       const std::string& manifest_ref) {
    const TargetView v = view_for(report, target);
    const double bar_w = 18.0, group_gap = 28.0, left = 56.0, top = 40.0, plot_h = 240.0;
    const double group_w = bar_w * static_cast<double>(v.variants.size()) + group_gap;
    const double plot_w = group_w * static_cast<double>(v.sources.size());
    const double legend_h = 18.0 * static_cast<double>(v.variants.size());
    const double width = left + plot_w + 24.0;
    const double height = top + plot_h + 60.0 + legend_h;

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt("%.0f", width)
        << "\" height=\"" << fmt("%.0f", height) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    if (!manifest_ref.empty()) out << "<desc>manifest: " << xml_escape(manifest_ref) << "</desc>\n";
    out << "<text x=\"" << fmt("%.1f", left) << "\" y=\"20\" font-size=\"13\">G-mean, target "
        << xml_escape(target) << "</text>\n";
    // axis and gridlines at 0, 0.25, ..., 1
    for (int k = 0; k <= 4; ++k) {
        const double y = top + plot_h - plot_h * k / 4.0;
        out << "<line x1=\"" << fmt("%.1f", left) << "\" y1=\"" << fmt("%.1f", y) << "\" x2=\""
            << fmt("%.1f", left + plot_w) << "\" y2=\"" << fmt("%.1f", y)
            << "\" stroke=\"#dddddd\"/>\n";
        out << "<text x=\"" << fmt("%.1f", left - 6) << "\" y=\"" << fmt("%.1f", y + 4)
            << "\" text-anchor=\"end\">" << fmt("%.2f", k / 4.0) << "</text>\n";
    }
    out << "<line x1=\"" << fmt("%.1f", left) << "\" y1=\"" << fmt("%.1f", top) << "\" x2=\""
        << fmt("%.1f", left) << "\" y2=\"" << fmt("%.1f", top + plot_h) << "\" stroke=\"#000000\"/>\n";

    for (std::size_t g = 0; g < v.sources.size(); ++g) {
        const double gx = left + group_gap / 2.0 + group_w * static_cast<double>(g);
        for (std::size_t b = 0; b < v.variants.size(); ++b) {
            auto it = v.cells.find({v.sources[g], v.variants[b]});
            if (it == v.cells.end()) continue;
            const double val = std::clamp(it->second.mean(), 0.0, 1.0);
            const double h = plot_h * val;
            const double x = gx + bar_w * static_cast<double>(b);
            out << "<rect class=\"bar\" x=\"" << fmt("%.1f", x) << "\" y=\""
                << fmt("%.1f", top + plot_h - h) << "\" width=\"" << fmt("%.1f", bar_w - 2)
                << "\" height=\"" << fmt("%.1f", h) << "\" fill=\""
                << kPalette[static_cast<std::size_t>(v.variants[b])] << "\"><title>"
                << xml_escape(v.sources[g]) << " / " << variant_label(v.variants[b]) << ": "
                << format_gmean(it->second.mean()) << "</title></rect>\n";
        }
        out << "<text x=\"" << fmt("%.1f", gx + (group_w - group_gap) / 2.0) << "\" y=\""
            << fmt("%.1f", top + plot_h + 16) << "\" text-anchor=\"middle\">"
            << xml_escape(v.sources[g]) << "</text>\n";
    }
    for (std::size_t b = 0; b < v.variants.size(); ++b) {
        const double y = top + plot_h + 36 + 18.0 * static_cast<double>(b);
        out << "<rect x=\"" << fmt("%.1f", left) << "\" y=\"" << fmt("%.1f", y - 10)
            << "\" width=\"12\" height=\"12\" fill=\""
            << kPalette[static_cast<std::size_t>(v.variants[b])] << "\"/>\n";
        out << "<text x=\"" << fmt("%.1f", left + 18) << "\" y=\"" << fmt("%.1f", y) << "\">"
            << variant_label(v.variants[b]) << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

std::vector<std::filesystem::path> emit_report(const ExperimentReport& report,
                                               const std::filesystem::path& out_dir,
                                               const ReportFormats& formats,
                                               const std::string& manifest_ref) {
    if (report.rows.empty()) throw DataError("emit_report: report has no rows");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

    std::vector<std::filesystem::path> written;
    if (formats.csv) {
        written.push_back(out_dir / (report.report_id + ".csv"));
        write_file(written.back(), render_csv(report));
    }
    std::set<std::string> targets;
    for (const auto& r : report.rows) targets.insert(r.target);
    for (const auto& t : targets) {
        if (formats.markdown) {
            written.push_back(out_dir / (t + "_" + report.report_id + ".md"));
            write_file(written.back(), render_markdown(report, t, manifest_ref));
        }
        if (formats.svg) {
            written.push_back(out_dir / (t + "_" + report.report_id + ".svg"));
            write_file(written.back(), render_svg(report, t, manifest_ref));
        }
    }
    return written;
}

} // namespace mda
