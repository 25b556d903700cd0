#include "onionnet/scenario.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "onionnet/errors.hpp"

namespace onionnet::scenario {

namespace {

std::string trim(const std::string& s) {
    std::size_t begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return {};
    std::size_t end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

struct Parser {
    ScenarioConfig& cfg;
    int line = 0;

    std::uint64_t parse_u64(const std::string& value) const {
        std::uint64_t out = 0;
        const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
        if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
            throw ParseError(line, "expected a non-negative integer, got '" + value + "'");
        }
        return out;
    }

    std::uint32_t parse_u32(const std::string& value) const {
        const std::uint64_t v = parse_u64(value);
        if (v > 0xFFFFFFFFULL) throw ParseError(line, "value out of range: " + value);
        return static_cast<std::uint32_t>(v);
    }

    double parse_double(const std::string& value) const {
        try {
            std::size_t used = 0;
            const double v = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
            return v;
        } catch (const std::exception&) {
            throw ParseError(line, "expected a number, got '" + value + "'");
        }
    }

    bool parse_bool(const std::string& value) const {
        if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
        if (value == "false" || value == "0" || value == "no" || value == "off") return false;
        throw ParseError(line, "expected true/false, got '" + value + "'");
    }

    void apply(const std::string& key, const std::string& value) {
        auto& c = cfg;

        if (key == "name") { c.name = value; return; }
        if (key == "seed") { c.seed = parse_u64(value); return; }
        if (key == "horizon") { c.horizon = parse_u64(value); return; }
        if (key == "population") { c.population = parse_u32(value); return; }
        if (key == "initial_infected") { c.initial_infected = parse_u32(value); return; }
        if (key == "transport") {
            if (value == "onion") { c.transport = Transport::Onion; return; }
            if (value == "dns-flux") { c.transport = Transport::DnsFlux; return; }
            throw ParseError(line, "transport must be 'onion' or 'dns-flux'");
        }
        if (key == "beta") { c.beta = parse_double(value); return; }
        if (key == "contact_rate") { c.contact_rate = parse_u32(value); return; }
        if (key == "infection.stop_tick") { c.infection_stop_tick = parse_u64(value); return; }
        if (key == "k") { c.peer_capacity = parse_u32(value); return; }
        if (key == "peer_update_period") { c.update_period = parse_u64(value); return; }
        if (key == "circuit_length") { c.circuit_length = parse_u32(value); return; }
        if (key == "relays") { c.relays = parse_u32(value); return; }
        if (key == "latency.min") { c.latency_min = parse_u64(value); return; }
        if (key == "latency.max") { c.latency_max = parse_u64(value); return; }
        if (key == "bootstrap.retry_budget") { c.bootstrap_retry_budget = parse_u32(value); return; }
        if (key == "bootstrap.list_size") { c.bootstrap_list_size = parse_u32(value); return; }
        if (key == "bootstrap.refresh_interval") { c.bootstrap_refresh_interval = parse_u64(value); return; }
        if (key == "soap.enabled") { c.soap.enabled = parse_bool(value); return; }
        if (key == "soap.honeypots") { c.soap.honeypots = parse_u32(value); return; }
        if (key == "soap.p_detect") { c.soap.p_detect = parse_double(value); return; }
        if (key == "soap.sybils_per_target") { c.soap.sybils_per_target = parse_u32(value); return; }
        if (key == "soap.ping_interval") { c.soap.ping_interval = parse_u64(value); return; }
        if (key == "soap.check_interval") { c.soap.check_interval = parse_u64(value); return; }
        if (key == "soap.start_tick") { c.soap.start_tick = parse_u64(value); return; }
        if (key == "soap.stop_infections") { c.soap.stop_infections = parse_bool(value); return; }
        if (key == "soap.sybil_gossip") { c.soap.sybil_gossip = parse_bool(value); return; }
        if (key == "command.count") { c.command.count = parse_u32(value); return; }
        if (key == "command.first_tick") { c.command.first_tick = parse_u64(value); return; }
        if (key == "command.interval") { c.command.interval = parse_u64(value); return; }
        if (key == "command.kind") { c.command.kind = value; return; }
        if (key == "command.target") { c.command.target = value; return; }
        if (key == "command.rate") { c.command.rate = parse_u32(value); return; }
        if (key == "command.duration") { c.command.duration = parse_u64(value); return; }
        if (key == "command.spam_volume") { c.command.spam_volume = parse_u32(value); return; }
        if (key == "command.spam_window") { c.command.spam_window = parse_u64(value); return; }
        if (key == "command.seeds") { c.command.seeds = parse_u32(value); return; }
        if (key == "dga.seed") { c.dga.seed = parse_u64(value); return; }
        if (key == "dga.domains_per_period") { c.dga.domains_per_period = parse_u32(value); return; }
        if (key == "dga.label_length") { c.dga.label_length = parse_u32(value); return; }
        if (key == "dga.tlds") { c.dga.tlds = value; return; }
        if (key == "dga.period_length") { c.dga.period_length = parse_u64(value); return; }
        if (key == "dga.registered_per_period") { c.dga.registered_per_period = parse_u32(value); return; }
        if (key == "flux.ip_pool_size") { c.flux.ip_pool_size = parse_u32(value); return; }
        if (key == "flux.ips_per_record") { c.flux.ips_per_record = parse_u32(value); return; }
        if (key == "flux.rotation_period") { c.flux.rotation_period = parse_u64(value); return; }
        if (key == "flux.ttl") { c.flux.ttl = parse_u64(value); return; }
        if (key == "beacon.period") { c.beacon.period = parse_u64(value); return; }
        if (key == "beacon.bytes") { c.beacon.bytes = parse_u64(value); return; }
        if (key == "beacon.jitter_ticks") { c.beacon.jitter_ticks = parse_u64(value); return; }
        if (key == "beacon.jitter_bytes") { c.beacon.jitter_bytes = parse_u64(value); return; }
        if (key == "benign.flow_rate") { c.benign.flow_rate = parse_double(value); return; }
        if (key == "benign.bytes_min") { c.benign.bytes_min = parse_u64(value); return; }
        if (key == "benign.bytes_max") { c.benign.bytes_max = parse_u64(value); return; }
        if (key == "benign.destinations") { c.benign.destinations = parse_u32(value); return; }
        if (key == "detector.window") { c.detector.window = parse_u64(value); return; }
        if (key == "detector.theta_cv") { c.detector.theta_cv = parse_double(value); return; }
        if (key == "detector.theta_var") { c.detector.theta_var = parse_double(value); return; }
        if (key == "detector.min_windows") { c.detector.min_windows = parse_u32(value); return; }
        if (key == "blocklist.enabled") { c.blocklist.enabled = parse_bool(value); return; }
        if (key == "blocklist.recovered_seed") { c.blocklist.recovered_seed = parse_u64(value); return; }
        if (key == "blocklist.activation_delay") { c.blocklist.activation_delay = parse_u64(value); return; }
        if (key == "blocklist.file") { c.blocklist.file = value; return; }
        if (key == "flows.export") { c.flows_export = value; return; }
        if (key == "output") { c.output = value; return; }

        throw ParseError(line, "unknown key '" + key + "'");
    }
};

}  // namespace

std::vector<std::string> ScenarioConfig::tld_list() const {
    std::vector<std::string> out;
    std::istringstream in(dga.tlds);
    std::string item;
    while (std::getline(in, item, ',')) {
        const std::string t = trim(item);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

void ScenarioConfig::validate() const {
    if (horizon == 0) throw ValidationError("horizon", "> 0");
    if (initial_infected > population) throw ValidationError("initial_infected", "≤ population");
    if (beta < 0.0 || beta > 1.0) throw ValidationError("beta", "∈[0,1]");
    if (soap.p_detect < 0.0 || soap.p_detect > 1.0) throw ValidationError("soap.p_detect", "∈[0,1]");
    if (benign.flow_rate < 0.0 || benign.flow_rate > 1.0) {
        throw ValidationError("benign.flow_rate", "∈[0,1]");
    }
    if (circuit_length < 1 || circuit_length > 5) throw ValidationError("circuit_length", "∈[1,5]");
    if (peer_capacity == 0) throw ValidationError("k", "≥ 1");
    if (update_period == 0) throw ValidationError("peer_update_period", "≥ 1");
    if (latency_min > latency_max) throw ValidationError("latency.min", "≤ latency.max");
    if (transport == Transport::Onion && relays < circuit_length + 1) {
        throw ValidationError("relays", "≥ circuit_length + 1");
    }
    if (bootstrap_list_size == 0) throw ValidationError("bootstrap.list_size", "≥ 1");
    if (soap.enabled) {
        if (soap.sybils_per_target == 0) throw ValidationError("soap.sybils_per_target", "≥ 1");
        if (soap.ping_interval == 0) throw ValidationError("soap.ping_interval", "≥ 1");
        if (soap.check_interval == 0) throw ValidationError("soap.check_interval", "≥ 1");
    }
    if (command.kind != "ddos" && command.kind != "spam") {
        throw ValidationError("command.kind", "'ddos' or 'spam'");
    }
    if (transport == Transport::DnsFlux) {
        if (flux.ip_pool_size == 0) throw ValidationError("flux.ip_pool_size", "≥ 1");
        if (flux.ips_per_record == 0 || flux.ips_per_record > flux.ip_pool_size) {
            throw ValidationError("flux.ips_per_record", "∈[1, flux.ip_pool_size]");
        }
        if (flux.rotation_period == 0) throw ValidationError("flux.rotation_period", "≥ 1");
        if (dga.period_length == 0) throw ValidationError("dga.period_length", "≥ 1");
        if (dga.label_length == 0) throw ValidationError("dga.label_length", "≥ 1");
        if (beacon.period == 0) throw ValidationError("beacon.period", "≥ 1");
        if (benign.bytes_min > benign.bytes_max) {
            throw ValidationError("benign.bytes_min", "≤ benign.bytes_max");
        }
        if (detector.window == 0) throw ValidationError("detector.window", "≥ 1");
    }
}

ScenarioConfig parse_scenario(const std::string& text) {
    ScenarioConfig cfg;
    Parser parser{cfg};
    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
        ++parser.line;
        const std::size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string stripped = trim(raw);
        if (stripped.empty()) continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ParseError(parser.line, "expected 'key = value'");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) throw ParseError(parser.line, "empty key");
        parser.apply(key, value);
    }
    cfg.validate();
    return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SimError("cannot open scenario file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str());
}

}  // namespace onionnet::scenario
