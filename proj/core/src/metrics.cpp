#include "onionnet/metrics.hpp"

#include <charconv>

#include <json.hpp>

#include "onionnet/errors.hpp"

namespace onionnet::scenario {

namespace {

void append_double(std::string& out, double value) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    out.append(buf, res.ptr);
}

void append_opt(std::string& out, const std::optional<double>& value) {
    if (value) {
        append_double(out, *value);
    } else {
        out += "null";
    }
}

void append_opt_time(std::string& out, const std::optional<SimTime>& value) {
    if (value) {
        out += std::to_string(*value);
    } else {
        out += "null";
    }
}

const char* const kRowKeys[] = {"tick",
                                "susceptible",
                                "rally",
                                "waiting",
                                "executing",
                                "neutralized",
                                "commands_issued",
                                "command_deliveries",
                                "attack_events",
                                "discovered",
                                "sybils_active",
                                "detector_precision",
                                "detector_recall"};

std::optional<double> opt_double(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<double>();
}

std::optional<SimTime> opt_time(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<SimTime>();
}

}  // namespace

std::string RunMetrics::to_jsonl() const {
    std::string out;
    out.reserve(rows.size() * 160 + 512);
    for (const TickRow& row : rows) {
        out += "{\"tick\":" + std::to_string(row.tick);
        out += ",\"susceptible\":" + std::to_string(row.susceptible);
        out += ",\"rally\":" + std::to_string(row.rally);
        out += ",\"waiting\":" + std::to_string(row.waiting);
        out += ",\"executing\":" + std::to_string(row.executing);
        out += ",\"neutralized\":" + std::to_string(row.neutralized);
        out += ",\"commands_issued\":" + std::to_string(row.commands_issued);
        out += ",\"command_deliveries\":" + std::to_string(row.command_deliveries);
        out += ",\"attack_events\":" + std::to_string(row.attack_events);
        out += ",\"discovered\":" + std::to_string(row.discovered);
        out += ",\"sybils_active\":" + std::to_string(row.sybils_active);
        out += ",\"detector_precision\":";
        append_opt(out, row.detector_precision);
        out += ",\"detector_recall\":";
        append_opt(out, row.detector_recall);
        out += "}\n";
    }

    out += "{\"summary\":{\"name\":" + nlohmann::json(summary.name).dump();
    out += ",\"seed\":" + std::to_string(summary.seed);
    out += ",\"horizon\":" + std::to_string(summary.horizon);
    out += ",\"population\":" + std::to_string(summary.population);
    out += ",\"final_susceptible\":" + std::to_string(summary.final_row.susceptible);
    out += ",\"final_rally\":" + std::to_string(summary.final_row.rally);
    out += ",\"final_waiting\":" + std::to_string(summary.final_row.waiting);
    out += ",\"final_executing\":" + std::to_string(summary.final_row.executing);
    out += ",\"final_neutralized\":" + std::to_string(summary.final_row.neutralized);
    out += ",\"commands_issued\":" + std::to_string(summary.final_row.commands_issued);
    out += ",\"command_deliveries\":" + std::to_string(summary.final_row.command_deliveries);
    out += ",\"attack_events\":" + std::to_string(summary.final_row.attack_events);
    out += ",\"discovered\":" + std::to_string(summary.final_row.discovered);
    out += ",\"sybils_active\":" + std::to_string(summary.final_row.sybils_active);
    out += ",\"detector_precision\":";
    append_opt(out, summary.final_row.detector_precision);
    out += ",\"detector_recall\":";
    append_opt(out, summary.final_row.detector_recall);
    out += ",\"time_to_half_infected\":";
    append_opt_time(out, summary.time_to_half_infected);
    out += ",\"time_to_ninety_infected\":";
    append_opt_time(out, summary.time_to_ninety_infected);
    out += ",\"time_to_half_neutralized\":";
    append_opt_time(out, summary.time_to_half_neutralized);
    out += ",\"time_to_full_neutralized\":";
    append_opt_time(out, summary.time_to_full_neutralized);
    out += ",\"neutralized_fraction\":";
    append_double(out, summary.neutralized_fraction);
    out += "}}\n";
    return out;
}

void RunMetrics::finalize_summary() {
    if (!rows.empty()) summary.final_row = rows.back();
    summary.time_to_half_infected.reset();
    summary.time_to_ninety_infected.reset();
    summary.time_to_half_neutralized.reset();
    summary.time_to_full_neutralized.reset();

    const double pop = static_cast<double>(summary.population);
    std::uint32_t ever_infected_final = 0;
    if (!rows.empty()) {
        ever_infected_final = summary.population - rows.back().susceptible;
    }

    for (const TickRow& row : rows) {
        const std::uint32_t ever_infected = summary.population - row.susceptible;
        if (!summary.time_to_half_infected && pop > 0 && ever_infected * 2 >= summary.population) {
            summary.time_to_half_infected = row.tick;
        }
        if (!summary.time_to_ninety_infected && pop > 0 &&
            ever_infected * 10 >= summary.population * 9) {
            summary.time_to_ninety_infected = row.tick;
        }
        if (!summary.time_to_half_neutralized && ever_infected > 0 &&
            row.neutralized * 2 >= ever_infected) {
            summary.time_to_half_neutralized = row.tick;
        }
        if (!summary.time_to_full_neutralized && ever_infected > 0 &&
            row.neutralized == ever_infected) {
            summary.time_to_full_neutralized = row.tick;
        }
    }

    summary.neutralized_fraction =
        ever_infected_final == 0
            ? 0.0
            : static_cast<double>(rows.back().neutralized) / ever_infected_final;
}

RunMetrics RunMetrics::from_jsonl(const std::string& text) {
    RunMetrics metrics;
    std::size_t offset = 0;
    bool summary_seen = false;

    while (offset < text.size()) {
        std::size_t end = text.find('\n', offset);
        if (end == std::string::npos) {
            throw MalformedMetricsError(offset, "line is not newline-terminated");
        }
        const std::string line = text.substr(offset, end - offset);
        if (line.empty()) {
            offset = end + 1;
            continue;
        }
        if (summary_seen) {
            throw MalformedMetricsError(offset, "content after summary object");
        }

        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw MalformedMetricsError(offset, "invalid JSON object");
        }

        if (j.contains("summary")) {
            const auto& s = j["summary"];
            if (!s.is_object()) throw MalformedMetricsError(offset, "summary is not an object");
            metrics.summary.name = s.value("name", std::string{});
            metrics.summary.seed = s.value("seed", 0ULL);
            metrics.summary.horizon = s.value("horizon", 0ULL);
            metrics.summary.population = s.value("population", 0U);
            metrics.summary.final_row.susceptible = s.value("final_susceptible", 0U);
            metrics.summary.final_row.rally = s.value("final_rally", 0U);
            metrics.summary.final_row.waiting = s.value("final_waiting", 0U);
            metrics.summary.final_row.executing = s.value("final_executing", 0U);
            metrics.summary.final_row.neutralized = s.value("final_neutralized", 0U);
            metrics.summary.final_row.commands_issued = s.value("commands_issued", 0ULL);
            metrics.summary.final_row.command_deliveries = s.value("command_deliveries", 0ULL);
            metrics.summary.final_row.attack_events = s.value("attack_events", 0ULL);
            metrics.summary.final_row.discovered = s.value("discovered", 0U);
            metrics.summary.final_row.sybils_active = s.value("sybils_active", 0U);
            metrics.summary.final_row.detector_precision = opt_double(s, "detector_precision");
            metrics.summary.final_row.detector_recall = opt_double(s, "detector_recall");
            metrics.summary.time_to_half_infected = opt_time(s, "time_to_half_infected");
            metrics.summary.time_to_ninety_infected = opt_time(s, "time_to_ninety_infected");
            metrics.summary.time_to_half_neutralized = opt_time(s, "time_to_half_neutralized");
            metrics.summary.time_to_full_neutralized = opt_time(s, "time_to_full_neutralized");
            metrics.summary.neutralized_fraction = s.value("neutralized_fraction", 0.0);
            summary_seen = true;
            offset = end + 1;
            continue;
        }

        // Tick row: exactly the documented fields.
        for (const char* key : kRowKeys) {
            if (!j.contains(key)) {
                throw MalformedMetricsError(offset, std::string("missing field ") + key);
            }
        }
        if (j.size() != std::size(kRowKeys)) {
            throw MalformedMetricsError(offset, "unexpected extra fields in tick row");
        }
        TickRow row;
        row.tick = j["tick"].get<SimTime>();
        row.susceptible = j["susceptible"].get<std::uint32_t>();
        row.rally = j["rally"].get<std::uint32_t>();
        row.waiting = j["waiting"].get<std::uint32_t>();
        row.executing = j["executing"].get<std::uint32_t>();
        row.neutralized = j["neutralized"].get<std::uint32_t>();
        row.commands_issued = j["commands_issued"].get<std::uint64_t>();
        row.command_deliveries = j["command_deliveries"].get<std::uint64_t>();
        row.attack_events = j["attack_events"].get<std::uint64_t>();
        row.discovered = j["discovered"].get<std::uint32_t>();
        row.sybils_active = j["sybils_active"].get<std::uint32_t>();
        row.detector_precision = opt_double(j, "detector_precision");
        row.detector_recall = opt_double(j, "detector_recall");
        metrics.rows.push_back(row);
        offset = end + 1;
    }

    if (!summary_seen) {
        throw MalformedMetricsError(text.size(), "missing summary object");
    }
    return metrics;
}

}  // namespace onionnet::scenario
