#pragma once

#include <memory>
#include <set>
#include <vector>

#include "onionnet/botnet.hpp"
#include "onionnet/evasion.hpp"
#include "onionnet/metrics.hpp"
#include "onionnet/scenario.hpp"
#include "onionnet/soap.hpp"

namespace onionnet::scenario {

// Wires a validated config into an engine, network, swarm, defender and
// evasion state, runs to the horizon, and assembles the metrics series.
// One Simulation per run; independent runs share nothing.
class Simulation {
public:
    explicit Simulation(ScenarioConfig cfg, Transcript* external_transcript = nullptr);

    RunMetrics run();

    // Introspection for tests and tooling.
    botnet::Swarm& swarm() { return *swarm_; }
    overlay::Network& network() { return *network_; }
    botnet::Botmaster& master() { return master_; }
    soap::Defender* defender() { return defender_.get(); }
    const std::vector<evasion::FlowRecord>& flows() const { return flows_; }
    Transcript& transcript() { return *transcript_; }

private:
    void init();
    void dispatch(const Event& event);  // adds tick/event context to aborts
    void dispatch_inner(const Event& event);
    void on_sweep(SimTime now);
    void on_peer_update(std::uint32_t bot, SimTime now);
    void on_beacon(std::uint32_t bot, SimTime now);
    void on_command_push(std::uint64_t command_seq, SimTime now);
    void on_attack(std::uint32_t bot, const AttackBurst& burst, SimTime now);
    void on_flux_rotate(SimTime now);
    void on_detector_sample(SimTime now);
    void record_tick(SimTime tick);
    bool infections_enabled(SimTime now) const;
    std::set<std::string> current_blocklist(SimTime now) const;
    void ensure_period_registered(SimTime now);
    void schedule_bursts(std::uint32_t bot, const std::vector<botnet::AttackBurstPlan>& plan,
                         std::uint64_t command_id);
    void push_dnsflux_command(const botnet::Command& cmd, SimTime now);

    ScenarioConfig cfg_;
    std::unique_ptr<Transcript> owned_transcript_;
    Transcript* transcript_;
    Engine engine_;
    std::unique_ptr<overlay::Network> network_;
    std::unique_ptr<botnet::Swarm> swarm_;
    std::unique_ptr<soap::Defender> defender_;
    botnet::Botmaster master_;

    // evasion state (dns-flux transport)
    evasion::DgaConfig dga_;
    evasion::FluxConfig flux_;
    evasion::DnsZone zone_;
    std::vector<evasion::FlowRecord> flows_;
    std::vector<std::string> benign_destinations_;
    std::set<std::string> file_blocklist_;
    std::uint64_t registered_period_ = ~0ULL;
    struct C2Cache {
        std::string ip;
        SimTime expires_at = 0;
        bool valid = false;
    };
    std::vector<C2Cache> c2_cache_;

    // cumulative counters for metrics
    std::uint64_t commands_issued_ = 0;
    std::uint64_t command_deliveries_ = 0;
    std::uint64_t attack_events_ = 0;
    std::optional<double> detector_precision_;
    std::optional<double> detector_recall_;

    RunMetrics metrics_;
};

// Runs the scenario and returns the metrics series. Identical (config,
// seed) pairs produce byte-identical to_jsonl() output.
RunMetrics run_scenario(const ScenarioConfig& cfg, Transcript* transcript = nullptr);

}  // namespace onionnet::scenario
