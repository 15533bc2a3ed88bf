#include "gridfc/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "gridfc/errors.hpp"

namespace gridfc {

namespace {

using ordered_json = nlohmann::ordered_json;

double parse_strict_double(const std::string& token, const char* where) {
    const char* begin = token.data();
    const char* end = begin + token.size();
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end)
        throw ReportError(std::string(where) + ": bad number '" + token + "'");
    return value;
}

int parse_strict_int(const std::string& token, const char* where) {
    const char* begin = token.data();
    const char* end = begin + token.size();
    int value = 0;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end)
        throw ReportError(std::string(where) + ": bad integer '" + token + "'");
    return value;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    for (const char c : line) {
        if (c == ',') {
            fields.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(current);
    return fields;
}

RunReport report_from(const ordered_json& j) {
    RunReport report;
    report.algorithm = j.at("algorithm").get<std::string>();
    report.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& [key, value] : j.at("config").items())
        report.config_echo.emplace_back(key, value.get<std::string>());
    report.episodes_run = j.at("episodes_run").get<int>();
    report.online_episodes = j.at("online_episodes").get<int>();
    report.discovered_chains = j.at("discovered_chains").get<int>();
    report.accumulated_tll_mw = j.at("accumulated_tll_mw").get<double>();
    report.regret_final_mw = j.at("regret_final_mw").get<double>();
    report.regret_series_mw = j.at("regret_series_mw").get<std::vector<double>>();
    report.exhausted = j.at("exhausted").get<bool>();
    report.wall_seconds = j.at("wall_seconds").get<double>();
    return report;
}

/// Fixed plot geometry; every coordinate below derives from these.
constexpr double kWidth = 860.0;
constexpr double kHeight = 520.0;
constexpr double kLeft = 72.0;
constexpr double kRight = kWidth - 180.0;  // room for the legend
constexpr double kTop = 24.0;
constexpr double kBottom = kHeight - 56.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};
constexpr int kPaletteSize = 8;

std::string pixel(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.2f", value);
    return buffer;
}

std::string escape_xml(const std::string& text) {
    std::string out;
    for (const char c : text) {
        if (c == '&')
            out += "&amp;";
        else if (c == '<')
            out += "&lt;";
        else if (c == '>')
            out += "&gt;";
        else
            out.push_back(c);
    }
    return out;
}

}  // namespace

MeanSd mean_sd(const std::vector<double>& values) {
    MeanSd out;
    if (values.empty()) return out;
    double sum = 0.0;
    for (const double v : values) sum += v;
    out.mean = sum / static_cast<double>(values.size());
    if (values.size() < 2) return out;
    double squares = 0.0;
    for (const double v : values) squares += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(squares / static_cast<double>(values.size() - 1));
    return out;
}

std::string format_double(double value) {
    char buffer[64];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
    if (ec != std::errc{}) throw ReportError("double formatting failed");
    return std::string(buffer, ptr);
}

std::vector<RegretRow> build_regret_rows(const std::vector<double>& found_tll_mw,
                                         const std::vector<double>& regret_mw) {
    if (found_tll_mw.size() != regret_mw.size())
        throw ShapeError("regret rows: " + std::to_string(found_tll_mw.size()) + " TLLs vs " +
                         std::to_string(regret_mw.size()) + " regret values");
    std::vector<RegretRow> rows;
    rows.reserve(found_tll_mw.size());
    double accum = 0.0;
    for (std::size_t s = 0; s < found_tll_mw.size(); ++s) {
        accum += found_tll_mw[s];
        rows.push_back({static_cast<int>(s) + 1, found_tll_mw[s], accum, regret_mw[s]});
    }
    return rows;
}

std::string regret_csv(const std::vector<RegretRow>& rows) {
    std::string out = "iteration,chain_tll_mw,accum_tll_mw,regret_mw\n";
    for (const auto& row : rows) {
        out += std::to_string(row.iteration);
        out += ',';
        out += format_double(row.chain_tll_mw);
        out += ',';
        out += format_double(row.accum_tll_mw);
        out += ',';
        out += format_double(row.regret_mw);
        out += '\n';
    }
    return out;
}

std::vector<RegretRow> parse_regret_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "iteration,chain_tll_mw,accum_tll_mw,regret_mw")
        throw ReportError("regret CSV: missing or wrong header");
    std::vector<RegretRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != 4)
            throw ReportError("regret CSV: expected 4 fields, got " +
                              std::to_string(fields.size()));
        RegretRow row;
        row.iteration = parse_strict_int(fields[0], "regret CSV");
        row.chain_tll_mw = parse_strict_double(fields[1], "regret CSV");
        row.accum_tll_mw = parse_strict_double(fields[2], "regret CSV");
        row.regret_mw = parse_strict_double(fields[3], "regret CSV");
        rows.push_back(row);
    }
    return rows;
}

std::string episode_jsonl_line(const EpisodeLog& log) {
    ordered_json j;
    j["episode"] = log.episode;
    j["online"] = log.online;
    j["actions"] = log.actions;
    j["losses_mw"] = log.losses_mw;
    j["tll_mw"] = log.tll_mw;
    j["epsilons"] = log.epsilons;
    j["train_losses"] = log.train_losses;
    return j.dump();
}

std::string RunReport::to_json() const {
    ordered_json j;
    j["algorithm"] = algorithm;
    j["seed"] = seed;
    ordered_json config = ordered_json::object();
    for (const auto& [key, value] : config_echo) config[key] = value;
    j["config"] = config;
    j["episodes_run"] = episodes_run;
    j["online_episodes"] = online_episodes;
    j["discovered_chains"] = discovered_chains;
    j["accumulated_tll_mw"] = accumulated_tll_mw;
    j["regret_final_mw"] = regret_final_mw;
    j["regret_series_mw"] = regret_series_mw;
    j["exhausted"] = exhausted;
    j["wall_seconds"] = wall_seconds;
    return j.dump(2);
}

RunReport RunReport::from_json(const std::string& text) {
    try {
        return report_from(ordered_json::parse(text));
    } catch (const nlohmann::json::exception& e) {
        throw ReportError(std::string("run report: ") + e.what());
    }
}

std::string comparison_csv(const std::vector<RunReport>& reports) {
    std::vector<std::string> order;
    for (const auto& report : reports)
        if (std::find(order.begin(), order.end(), report.algorithm) == order.end())
            order.push_back(report.algorithm);

    std::string out =
        "algorithm,runs,tll_mean_mw,tll_sd_mw,regret_mean_mw,regret_sd_mw,"
        "discovered_mean\n";
    for (const auto& algorithm : order) {
        std::vector<double> tll, regret, discovered;
        for (const auto& report : reports) {
            if (report.algorithm != algorithm) continue;
            tll.push_back(report.accumulated_tll_mw);
            regret.push_back(report.regret_final_mw);
            discovered.push_back(static_cast<double>(report.discovered_chains));
        }
        const auto tll_stats = mean_sd(tll);
        const auto regret_stats = mean_sd(regret);
        out += algorithm;
        out += ',';
        out += std::to_string(tll.size());
        out += ',';
        out += format_double(tll_stats.mean);
        out += ',';
        out += format_double(tll_stats.sd);
        out += ',';
        out += format_double(regret_stats.mean);
        out += ',';
        out += format_double(regret_stats.sd);
        out += ',';
        out += format_double(mean_sd(discovered).mean);
        out += '\n';
    }
    return out;
}

std::string merged_regret_csv(
    const std::vector<std::pair<std::string, std::vector<double>>>& series) {
    std::string out = "iteration";
    std::size_t longest = 0;
    for (const auto& [label, values] : series) {
        out += ',';
        out += label;
        longest = std::max(longest, values.size());
    }
    out += '\n';
    for (std::size_t s = 0; s < longest; ++s) {
        out += std::to_string(s + 1);
        for (const auto& [label, values] : series) {
            out += ',';
            if (s < values.size()) out += format_double(values[s]);
        }
        out += '\n';
    }
    return out;
}

std::string regret_svg(
    const std::vector<std::pair<std::string, std::vector<double>>>& series) {
    std::size_t longest = 1;
    double peak = 0.0;
    for (const auto& [label, values] : series) {
        longest = std::max(longest, values.size());
        for (const double v : values) peak = std::max(peak, v);
    }
    const double x_span = static_cast<double>(std::max<std::size_t>(longest, 2) - 1);
    const double y_span = peak > 0.0 ? peak : 1.0;
    const auto x_at = [&](std::size_t s) {
        return kLeft + (kRight - kLeft) * static_cast<double>(s) / x_span;
    };
    const auto y_at = [&](double v) { return kBottom - (kBottom - kTop) * v / y_span; };

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + pixel(kWidth) +
           "\" height=\"" + pixel(kHeight) + "\" viewBox=\"0 0 " + pixel(kWidth) + " " +
           pixel(kHeight) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // Axes with five evenly spaced labelled ticks each.
    out += "<line x1=\"" + pixel(kLeft) + "\" y1=\"" + pixel(kBottom) + "\" x2=\"" +
           pixel(kRight) + "\" y2=\"" + pixel(kBottom) + "\" stroke=\"black\"/>\n";
    out += "<line x1=\"" + pixel(kLeft) + "\" y1=\"" + pixel(kTop) + "\" x2=\"" + pixel(kLeft) +
           "\" y2=\"" + pixel(kBottom) + "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double frac = static_cast<double>(t) / 4.0;
        const double x = kLeft + (kRight - kLeft) * frac;
        const double iteration = 1.0 + x_span * frac;
        out += "<line x1=\"" + pixel(x) + "\" y1=\"" + pixel(kBottom) + "\" x2=\"" + pixel(x) +
               "\" y2=\"" + pixel(kBottom + 5.0) + "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + pixel(x) + "\" y=\"" + pixel(kBottom + 20.0) +
               "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" +
               format_double(std::round(iteration)) + "</text>\n";
        const double y = kBottom - (kBottom - kTop) * frac;
        out += "<line x1=\"" + pixel(kLeft - 5.0) + "\" y1=\"" + pixel(y) + "\" x2=\"" +
               pixel(kLeft) + "\" y2=\"" + pixel(y) + "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + pixel(kLeft - 8.0) + "\" y=\"" + pixel(y + 4.0) +
               "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">" +
               format_double(y_span * frac) + "</text>\n";
    }
    out += "<text x=\"" + pixel((kLeft + kRight) / 2.0) + "\" y=\"" + pixel(kHeight - 12.0) +
           "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">iteration"
           "</text>\n";
    out += "<text x=\"18\" y=\"" + pixel((kTop + kBottom) / 2.0) +
           "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\" "
           "transform=\"rotate(-90 18 " +
           pixel((kTop + kBottom) / 2.0) + ")\">regret (MW)</text>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& values = series[i].second;
        const char* color = kPalette[i % kPaletteSize];
        std::string points;
        for (std::size_t s = 0; s < values.size(); ++s) {
            if (!points.empty()) points += ' ';
            points += pixel(x_at(s)) + "," + pixel(y_at(values[s]));
        }
        out += "<polyline fill=\"none\" stroke=\"";
        out += color;
        out += "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";

        const double legend_y = kTop + 18.0 * static_cast<double>(i);
        out += "<line x1=\"" + pixel(kRight + 12.0) + "\" y1=\"" + pixel(legend_y) + "\" x2=\"" +
               pixel(kRight + 36.0) + "\" y2=\"" + pixel(legend_y) + "\" stroke=\"";
        out += color;
        out += "\" stroke-width=\"1.5\"/>\n";
        out += "<text x=\"" + pixel(kRight + 42.0) + "\" y=\"" + pixel(legend_y + 4.0) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" +
               escape_xml(series[i].first) + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

}  // namespace gridfc
