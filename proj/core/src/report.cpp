#include "onionnet/report.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "onionnet/errors.hpp"

namespace onionnet::scenario {

namespace {

std::string fmt_time(const std::optional<SimTime>& t) {
    return t ? "tick " + std::to_string(*t) : std::string("never");
}

std::string fmt_pct(const std::optional<double>& v) {
    if (!v) return "n/a";
    std::ostringstream out;
    out.precision(1);
    out << std::fixed << (*v * 100.0) << "%";
    return out.str();
}

struct Series {
    std::string label;
    std::string color;
    std::vector<double> values;
};

std::string render_svg(const std::string& title, const std::vector<Series>& series) {
    constexpr int width = 860;
    constexpr int height = 420;
    constexpr int margin_left = 60;
    constexpr int margin_bottom = 40;
    constexpr int margin_top = 40;
    constexpr int margin_right = 160;

    double max_value = 1.0;
    std::size_t max_len = 1;
    for (const Series& s : series) {
        max_len = std::max(max_len, s.values.size());
        for (double v : s.values) max_value = std::max(max_value, v);
    }

    const double plot_w = width - margin_left - margin_right;
    const double plot_h = height - margin_top - margin_bottom;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << margin_left << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">"
        << title << "</text>\n";
    // axes
    svg << "<line x1=\"" << margin_left << "\" y1=\"" << margin_top << "\" x2=\"" << margin_left
        << "\" y2=\"" << (height - margin_bottom) << "\" stroke=\"#444\"/>\n";
    svg << "<line x1=\"" << margin_left << "\" y1=\"" << (height - margin_bottom) << "\" x2=\""
        << (width - margin_right) << "\" y2=\"" << (height - margin_bottom)
        << "\" stroke=\"#444\"/>\n";
    svg << "<text x=\"8\" y=\"" << margin_top + 12
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << static_cast<long>(max_value)
        << "</text>\n";
    svg << "<text x=\"" << (width - margin_right) << "\" y=\"" << (height - margin_bottom + 24)
        << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">tick "
        << (max_len > 0 ? max_len - 1 : 0) << "</text>\n";

    int legend_y = margin_top + 10;
    for (const Series& s : series) {
        if (s.values.empty()) continue;
        std::ostringstream points;
        const double dx = s.values.size() > 1 ? plot_w / static_cast<double>(s.values.size() - 1)
                                              : plot_w;
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            const double x = margin_left + dx * static_cast<double>(i);
            const double y =
                (height - margin_bottom) - (s.values[i] / max_value) * plot_h;
            if (i) points << " ";
            points << x << "," << y;
        }
        svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\""
            << points.str() << "\"/>\n";
        svg << "<rect x=\"" << (width - margin_right + 12) << "\" y=\"" << (legend_y - 9)
            << "\" width=\"12\" height=\"12\" fill=\"" << s.color << "\"/>\n";
        svg << "<text x=\"" << (width - margin_right + 30) << "\" y=\"" << (legend_y + 2)
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
        legend_y += 20;
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace

std::string render_report(const RunMetrics& metrics) {
    const Summary& s = metrics.summary;
    std::ostringstream out;
    out << "run: " << s.name << "  seed=" << s.seed << "  horizon=" << s.horizon
        << "  population=" << s.population << "\n";
    out << "\n";
    out << "final state counts\n";
    out << "  susceptible : " << s.final_row.susceptible << "\n";
    out << "  rally       : " << s.final_row.rally << "\n";
    out << "  waiting     : " << s.final_row.waiting << "\n";
    out << "  executing   : " << s.final_row.executing << "\n";
    out << "  neutralized : " << s.final_row.neutralized << "\n";
    out << "\n";
    out << "milestones\n";
    out << "  50% infected        : " << fmt_time(s.time_to_half_infected) << "\n";
    out << "  90% infected        : " << fmt_time(s.time_to_ninety_infected) << "\n";
    out << "  50% neutralized     : " << fmt_time(s.time_to_half_neutralized) << "\n";
    out << "  100% neutralized    : " << fmt_time(s.time_to_full_neutralized) << "\n";
    if (s.time_to_full_neutralized) {
        out << "  neutralized 100% at tick " << *s.time_to_full_neutralized << "\n";
    }
    out << "\n";
    out << "activity\n";
    out << "  commands issued     : " << s.final_row.commands_issued << "\n";
    out << "  command deliveries  : " << s.final_row.command_deliveries << "\n";
    out << "  attack events       : " << s.final_row.attack_events << "\n";
    out << "  discovered          : " << s.final_row.discovered << "\n";
    out << "  sybils active       : " << s.final_row.sybils_active << "\n";
    out << "  neutralized fraction: ";
    {
        std::ostringstream frac;
        frac.precision(3);
        frac << std::fixed << s.neutralized_fraction;
        out << frac.str() << "\n";
    }
    out << "\n";
    out << "detector\n";
    if (!s.final_row.detector_precision && !s.final_row.detector_recall) {
        out << "  no detections\n";
    } else {
        out << "  precision : " << fmt_pct(s.final_row.detector_precision) << "\n";
        out << "  recall    : " << fmt_pct(s.final_row.detector_recall) << "\n";
    }
    return out.str();
}

std::vector<std::string> write_plots(const RunMetrics& metrics, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::vector<std::string> written;

    Series susceptible{"susceptible", "#4363d8", {}};
    Series rally{"rally", "#f58231", {}};
    Series waiting{"waiting", "#3cb44b", {}};
    Series executing{"executing", "#e6194b", {}};
    Series neutralized{"neutralized", "#911eb4", {}};
    Series deliveries{"deliveries", "#3cb44b", {}};
    Series attacks{"attack events", "#e6194b", {}};
    for (const TickRow& row : metrics.rows) {
        susceptible.values.push_back(row.susceptible);
        rally.values.push_back(row.rally);
        waiting.values.push_back(row.waiting);
        executing.values.push_back(row.executing);
        neutralized.values.push_back(row.neutralized);
        deliveries.values.push_back(static_cast<double>(row.command_deliveries));
        attacks.values.push_back(static_cast<double>(row.attack_events));
    }

    {
        const fs::path path = fs::path(dir) / "state_counts.svg";
        std::ofstream out(path, std::ios::binary);
        if (!out) throw SimError("cannot write plot file: " + path.string());
        out << render_svg("bot states over time (" + metrics.summary.name + ")",
                          {susceptible, rally, waiting, executing, neutralized});
        written.push_back(path.string());
    }
    {
        const fs::path path = fs::path(dir) / "activity.svg";
        std::ofstream out(path, std::ios::binary);
        if (!out) throw SimError("cannot write plot file: " + path.string());
        out << render_svg("cumulative command deliveries and attack events",
                          {deliveries, attacks});
        written.push_back(path.string());
    }

    bool any_detector = false;
    for (const TickRow& row : metrics.rows) {
        if (row.detector_precision || row.detector_recall) { any_detector = true; break; }
    }
    if (any_detector) {
        Series precision{"precision", "#4363d8", {}};
        Series recall{"recall", "#f58231", {}};
        for (const TickRow& row : metrics.rows) {
            precision.values.push_back(row.detector_precision.value_or(0.0));
            recall.values.push_back(row.detector_recall.value_or(0.0));
        }
        const fs::path path = fs::path(dir) / "detector.svg";
        std::ofstream out(path, std::ios::binary);
        if (!out) throw SimError("cannot write plot file: " + path.string());
        out << render_svg("detector precision / recall", {precision, recall});
        written.push_back(path.string());
    }
    return written;
}

}  // namespace onionnet::scenario
