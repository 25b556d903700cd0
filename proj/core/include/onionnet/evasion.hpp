#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "onionnet/engine.hpp"
#include "onionnet/rng.hpp"

namespace onionnet::evasion {

// ---------------------------------------------------------------------------
// Domain generation

struct DgaConfig {
    std::uint64_t seed = 0;
    std::uint32_t domains_per_period = 16;
    std::uint32_t label_length = 12;
    std::vector<std::string> tlds = {".com", ".net", ".biz"};
    SimTime period_length = 500;
};

// Pure function of (seed, period_index): lowercase pseudorandom labels with
// cycling TLDs. Stable within an implementation, disjoint across periods
// with overwhelming probability.
std::vector<std::string> dga_domains(const DgaConfig& cfg, std::uint64_t period_index);

// The defender side of the same coin: with the recovered seed this equals
// the attacker's list exactly.
std::set<std::string> predict_blocklist(std::uint64_t recovered_seed, const DgaConfig& cfg,
                                        std::uint64_t period_index);

// ---------------------------------------------------------------------------
// Fast-flux DNS

struct FluxConfig {
    std::vector<std::string> ip_pool;
    std::uint32_t ips_per_record = 3;
    SimTime rotation_period = 50;
    SimTime ttl = 120;
};

// Generates a pool of simulated addresses (198.18.x.y benchmarking space).
std::vector<std::string> make_ip_pool(std::size_t size);

class DnsZone {
public:
    struct Record {
        std::vector<std::string> ips;
        SimTime ttl = 0;
        SimTime registered_at = 0;
    };

    void register_domain(const std::string& domain, std::vector<std::string> ips, SimTime ttl,
                         SimTime now);
    void deregister(const std::string& domain);
    bool registered(const std::string& domain) const;

    // Consistent within a record's lifetime; deregistered domains resolve to
    // nothing.
    std::optional<std::vector<std::string>> resolve(const std::string& domain, SimTime now) const;

    // Replaces the record's A entries with fresh uniform draws from the
    // pool. Throws UnknownDomain for unregistered names.
    void flux_rotate(const std::string& domain, const FluxConfig& cfg, Rng& rng, SimTime now);

    std::vector<std::string> registered_domains() const;
    void clear();

private:
    std::map<std::string, Record> records_;
};

// ---------------------------------------------------------------------------
// Flows and detection

struct FlowRecord {
    enum class Label { C2, Benign };

    SimTime time = 0;
    std::string source;
    std::string destination;
    std::uint64_t bytes = 0;
    Label label = Label::Benign;  // ground truth, used for scoring only
};

// CSV with a one-line header: time,source,destination,bytes,label
std::string flows_to_csv(std::span<const FlowRecord> flows);
std::vector<FlowRecord> flows_from_csv(const std::string& csv);  // throws ParseError

struct C2LookupResult {
    std::optional<std::string> ip;  // empty = no rendezvous this period
    std::uint32_t probes = 0;
};

// Probes the current period's domains in order; the first registered,
// non-blocklisted domain wins. Every probe is logged as a flow from the
// caller. Returns no ip when everything is unregistered or blocklisted.
C2LookupResult c2_lookup(const std::string& source, const DgaConfig& cfg, const DnsZone& zone,
                         const std::set<std::string>& blocklist, SimTime now,
                         std::uint64_t probe_bytes, std::vector<FlowRecord>* flow_log);

struct WindowFeatures {
    std::uint64_t window_index = 0;
    std::uint32_t flow_count = 0;
    double mean_bytes = 0.0;
    double var_bytes = 0.0;        // population variance
    double gap_cv = 0.0;           // coefficient of variation of inter-arrival gaps
    bool gap_defined = false;      // needs >= 3 flows in the window
    std::uint32_t distinct_destinations = 0;
};

// Per-source, per-window statistics. Flows must be time-sorted.
std::map<std::string, std::vector<WindowFeatures>> extract_flow_features(
    std::span<const FlowRecord> flows, SimTime window);

struct DetectorThresholds {
    double theta_cv = 0.35;
    double theta_var = 5000.0;
    std::uint32_t min_windows = 3;
};

struct DetectionReport {
    std::set<std::string> flagged;
    std::uint32_t true_positives = 0;
    std::uint32_t false_positives = 0;
    std::uint32_t false_negatives = 0;
    std::optional<double> precision;  // unset when nothing was flagged
    std::optional<double> recall;     // unset when ground truth is empty
};

// A source is flagged iff it has at least min_windows windows whose gap
// regularity and byte variance both fall under the thresholds. Ground truth
// enters only the precision/recall arithmetic.
DetectionReport classify(const std::map<std::string, std::vector<WindowFeatures>>& features,
                         const DetectorThresholds& thresholds,
                         const std::set<std::string>& ground_truth_c2);

}  // namespace onionnet::evasion
