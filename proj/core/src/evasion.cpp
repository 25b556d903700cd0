#include "onionnet/evasion.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "onionnet/errors.hpp"
#include "onionnet/sealing.hpp"

namespace onionnet::evasion {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

std::vector<std::string> dga_domains(const DgaConfig& cfg, std::uint64_t period_index) {
    std::vector<std::string> domains;
    domains.reserve(cfg.domains_per_period);
    // Stream position depends only on (seed, period); no shared state.
    std::uint64_t state = cfg.seed ^ (period_index * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL);
    for (std::uint32_t i = 0; i < cfg.domains_per_period; ++i) {
        std::string label;
        label.reserve(cfg.label_length);
        std::uint64_t word = 0;
        for (std::uint32_t j = 0; j < cfg.label_length; ++j) {
            if (j % 8 == 0) word = splitmix64(state);
            label.push_back(static_cast<char>('a' + (word & 0xFF) % 26));
            word >>= 8;
        }
        const std::string& tld = cfg.tlds.empty() ? std::string(".com")
                                                  : cfg.tlds[i % cfg.tlds.size()];
        domains.push_back(label + tld);
    }
    return domains;
}

std::set<std::string> predict_blocklist(std::uint64_t recovered_seed, const DgaConfig& cfg,
                                        std::uint64_t period_index) {
    DgaConfig predicted = cfg;
    predicted.seed = recovered_seed;
    const auto domains = dga_domains(predicted, period_index);
    return {domains.begin(), domains.end()};
}

std::vector<std::string> make_ip_pool(std::size_t size) {
    std::vector<std::string> pool;
    pool.reserve(size);
    for (std::size_t i = 0; i < size; ++i) {
        pool.push_back("198.18." + std::to_string(i / 250) + "." + std::to_string(i % 250 + 1));
    }
    return pool;
}

void DnsZone::register_domain(const std::string& domain, std::vector<std::string> ips, SimTime ttl,
                              SimTime now) {
    records_[domain] = Record{std::move(ips), ttl, now};
}

void DnsZone::deregister(const std::string& domain) { records_.erase(domain); }

bool DnsZone::registered(const std::string& domain) const { return records_.count(domain) != 0; }

std::optional<std::vector<std::string>> DnsZone::resolve(const std::string& domain,
                                                         SimTime /*now*/) const {
    const auto it = records_.find(domain);
    if (it == records_.end()) return std::nullopt;
    return it->second.ips;
}

void DnsZone::flux_rotate(const std::string& domain, const FluxConfig& cfg, Rng& rng, SimTime now) {
    const auto it = records_.find(domain);
    if (it == records_.end()) throw UnknownDomainError(domain);
    const std::uint32_t n = std::min<std::uint32_t>(cfg.ips_per_record,
                                                    static_cast<std::uint32_t>(cfg.ip_pool.size()));
    const auto picks = rng.sample_indices(static_cast<std::uint32_t>(cfg.ip_pool.size()), n);
    std::vector<std::string> fresh;
    fresh.reserve(n);
    for (auto idx : picks) fresh.push_back(cfg.ip_pool[idx]);
    it->second.ips = std::move(fresh);
    it->second.registered_at = now;
}

std::vector<std::string> DnsZone::registered_domains() const {
    std::vector<std::string> out;
    out.reserve(records_.size());
    for (const auto& [domain, record] : records_) out.push_back(domain);
    return out;
}

void DnsZone::clear() { records_.clear(); }

std::string flows_to_csv(std::span<const FlowRecord> flows) {
    std::string out = "time,source,destination,bytes,label\n";
    for (const FlowRecord& flow : flows) {
        out += std::to_string(flow.time);
        out.push_back(',');
        out += flow.source;
        out.push_back(',');
        out += flow.destination;
        out.push_back(',');
        out += std::to_string(flow.bytes);
        out.push_back(',');
        out += flow.label == FlowRecord::Label::C2 ? "c2" : "benign";
        out.push_back('\n');
    }
    return out;
}

std::vector<FlowRecord> flows_from_csv(const std::string& csv) {
    std::vector<FlowRecord> flows;
    std::istringstream in(csv);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1) {
            if (line != "time,source,destination,bytes,label") {
                throw ParseError(1, "bad flow csv header");
            }
            continue;
        }
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string time_s, source, dest, bytes_s, label_s;
        if (!std::getline(fields, time_s, ',') || !std::getline(fields, source, ',') ||
            !std::getline(fields, dest, ',') || !std::getline(fields, bytes_s, ',') ||
            !std::getline(fields, label_s)) {
            throw ParseError(line_no, "expected 5 comma-separated fields");
        }
        FlowRecord flow;
        try {
            flow.time = std::stoull(time_s);
            flow.bytes = std::stoull(bytes_s);
        } catch (const std::exception&) {
            throw ParseError(line_no, "bad numeric field");
        }
        flow.source = std::move(source);
        flow.destination = std::move(dest);
        if (label_s == "c2") {
            flow.label = FlowRecord::Label::C2;
        } else if (label_s == "benign") {
            flow.label = FlowRecord::Label::Benign;
        } else {
            throw ParseError(line_no, "label must be c2 or benign");
        }
        flows.push_back(std::move(flow));
    }
    return flows;
}

C2LookupResult c2_lookup(const std::string& source, const DgaConfig& cfg, const DnsZone& zone,
                         const std::set<std::string>& blocklist, SimTime now,
                         std::uint64_t probe_bytes, std::vector<FlowRecord>* flow_log) {
    C2LookupResult result;
    const std::uint64_t period = cfg.period_length == 0 ? 0 : now / cfg.period_length;
    for (const std::string& domain : dga_domains(cfg, period)) {
        ++result.probes;
        if (flow_log) {
            flow_log->push_back(FlowRecord{now, source, domain, probe_bytes, FlowRecord::Label::C2});
        }
        if (blocklist.count(domain)) continue;
        const auto ips = zone.resolve(domain, now);
        if (ips && !ips->empty()) {
            result.ip = ips->front();
            return result;
        }
    }
    return result;
}

std::map<std::string, std::vector<WindowFeatures>> extract_flow_features(
    std::span<const FlowRecord> flows, SimTime window) {
    std::map<std::string, std::vector<WindowFeatures>> features;
    if (window == 0) return features;

    // Group per (source, window index); flows are time-sorted, so windows of
    // one source arrive in order.
    struct Bucket {
        std::vector<SimTime> times;
        std::vector<std::uint64_t> sizes;
        std::set<std::string> destinations;
    };
    std::map<std::string, std::map<std::uint64_t, Bucket>> grouped;
    for (const FlowRecord& flow : flows) {
        Bucket& bucket = grouped[flow.source][flow.time / window];
        bucket.times.push_back(flow.time);
        bucket.sizes.push_back(flow.bytes);
        bucket.destinations.insert(flow.destination);
    }

    for (const auto& [source, windows] : grouped) {
        auto& out = features[source];
        for (const auto& [index, bucket] : windows) {
            WindowFeatures wf;
            wf.window_index = index;
            wf.flow_count = static_cast<std::uint32_t>(bucket.sizes.size());
            wf.distinct_destinations = static_cast<std::uint32_t>(bucket.destinations.size());

            double mean = 0.0;
            for (auto b : bucket.sizes) mean += static_cast<double>(b);
            mean /= static_cast<double>(bucket.sizes.size());
            double var = 0.0;
            for (auto b : bucket.sizes) {
                const double d = static_cast<double>(b) - mean;
                var += d * d;
            }
            var /= static_cast<double>(bucket.sizes.size());
            wf.mean_bytes = mean;
            wf.var_bytes = var;

            if (bucket.times.size() >= 3) {
                std::vector<double> gaps;
                gaps.reserve(bucket.times.size() - 1);
                for (std::size_t i = 1; i < bucket.times.size(); ++i) {
                    gaps.push_back(static_cast<double>(bucket.times[i] - bucket.times[i - 1]));
                }
                double gap_mean = 0.0;
                for (double g : gaps) gap_mean += g;
                gap_mean /= static_cast<double>(gaps.size());
                double gap_var = 0.0;
                for (double g : gaps) {
                    const double d = g - gap_mean;
                    gap_var += d * d;
                }
                gap_var /= static_cast<double>(gaps.size());
                wf.gap_defined = true;
                // All-zero gaps are perfectly regular, not undefined.
                wf.gap_cv = gap_mean == 0.0 ? 0.0 : std::sqrt(gap_var) / gap_mean;
            }
            out.push_back(wf);
        }
    }
    return features;
}

DetectionReport classify(const std::map<std::string, std::vector<WindowFeatures>>& features,
                         const DetectorThresholds& thresholds,
                         const std::set<std::string>& ground_truth_c2) {
    DetectionReport report;
    for (const auto& [source, windows] : features) {
        std::uint32_t qualifying = 0;
        for (const WindowFeatures& wf : windows) {
            if (wf.gap_defined && wf.gap_cv <= thresholds.theta_cv &&
                wf.var_bytes <= thresholds.theta_var) {
                ++qualifying;
            }
        }
        if (qualifying >= thresholds.min_windows) report.flagged.insert(source);
    }

    for (const std::string& source : report.flagged) {
        if (ground_truth_c2.count(source)) {
            ++report.true_positives;
        } else {
            ++report.false_positives;
        }
    }
    for (const std::string& source : ground_truth_c2) {
        if (!report.flagged.count(source)) ++report.false_negatives;
    }

    if (!report.flagged.empty()) {
        report.precision = static_cast<double>(report.true_positives) /
                           static_cast<double>(report.flagged.size());
    }
    if (!ground_truth_c2.empty()) {
        report.recall = static_cast<double>(report.true_positives) /
                        static_cast<double>(ground_truth_c2.size());
    }
    return report;
}

}  // namespace onionnet::evasion
