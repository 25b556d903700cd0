#include "onionnet/runner.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "onionnet/errors.hpp"

namespace onionnet::scenario {

using botnet::ActorKind;
using botnet::Phase;

namespace {
// PeerUpdateDue subject that refreshes the hardcoded bootstrap list instead
// of updating a bot.
constexpr std::uint32_t kListRefresh = 0xFFFFFFFF;
}  // namespace

Simulation::Simulation(ScenarioConfig cfg, Transcript* external_transcript)
    : cfg_(std::move(cfg)), engine_(cfg_.seed) {
    if (external_transcript) {
        transcript_ = external_transcript;
    } else {
        owned_transcript_ = std::make_unique<Transcript>();
        transcript_ = owned_transcript_.get();
    }
    init();
}

void Simulation::init() {
    cfg_.validate();
    network_ = std::make_unique<overlay::Network>();

    botnet::SwarmParams params;
    params.peer_capacity = cfg_.peer_capacity;
    params.update_period = cfg_.update_period;
    params.circuit_length = cfg_.circuit_length;
    params.latency = overlay::LatencyRange{cfg_.latency_min, cfg_.latency_max};
    params.bootstrap_retry_budget = cfg_.bootstrap_retry_budget;
    params.command_seed_count = cfg_.command.seeds;
    params.sybil_gossip = cfg_.soap.sybil_gossip;
    swarm_ = std::make_unique<botnet::Swarm>(*network_, engine_.rng(), params, *transcript_);

    if (cfg_.transport == Transport::Onion) {
        for (std::uint32_t i = 0; i < cfg_.relays; ++i) network_->add_relay();
    }

    for (std::uint32_t i = 0; i < cfg_.population; ++i) swarm_->add_host();

    // The master is an overlay participant with its own hidden identity.
    master_.node = network_->add_node();
    auto [keys, onion] = network_->issue_identity(engine_.rng());
    master_.keys = std::move(keys);
    master_.onion = std::move(onion);
    network_->bind_onion(master_.onion, master_.node);

    // Initial infections at tick 0. Their onion addresses become both the
    // hardcoded bootstrap list and the master's seed set.
    std::vector<overlay::OnionAddress> hardcoded;
    const std::uint32_t initial = std::min(cfg_.initial_infected, cfg_.population);
    for (std::uint32_t i = 0; i < initial; ++i) {
        swarm_->seed_infection(i, 0);
        const auto& onion_addr = swarm_->actor(i).onion;
        master_.known_bots.insert(onion_addr);
        if (hardcoded.size() < cfg_.bootstrap_list_size) hardcoded.push_back(onion_addr);
    }
    swarm_->set_hardcoded_peers(std::move(hardcoded));

    engine_.set_handler([this](const Event& ev) { dispatch(ev); });
    engine_.set_tick_hook([this](SimTime tick) { record_tick(tick); });

    // Event seeds.
    const bool needs_sweep =
        (cfg_.beta > 0.0 && cfg_.contact_rate > 0) || cfg_.transport == Transport::DnsFlux;
    if (needs_sweep && cfg_.horizon >= 1) {
        engine_.schedule(1, EventKind::ContactAttempt, 0, InfectionSweep{});
    }

    if (cfg_.transport == Transport::Onion) {
        for (std::uint32_t i = 0; i < initial; ++i) {
            engine_.schedule(1, EventKind::PeerUpdateDue, i);
        }
        if (cfg_.bootstrap_refresh_interval > 0 &&
            cfg_.bootstrap_refresh_interval <= cfg_.horizon) {
            engine_.schedule(cfg_.bootstrap_refresh_interval, EventKind::PeerUpdateDue,
                             kListRefresh);
        }
    } else {
        dga_.seed = cfg_.dga.seed;
        dga_.domains_per_period = cfg_.dga.domains_per_period;
        dga_.label_length = cfg_.dga.label_length;
        dga_.tlds = cfg_.tld_list();
        dga_.period_length = cfg_.dga.period_length;
        flux_.ip_pool = evasion::make_ip_pool(cfg_.flux.ip_pool_size);
        flux_.ips_per_record = cfg_.flux.ips_per_record;
        flux_.rotation_period = cfg_.flux.rotation_period;
        flux_.ttl = cfg_.flux.ttl;
        c2_cache_.resize(cfg_.population);
        benign_destinations_.reserve(cfg_.benign.destinations);
        for (std::uint32_t i = 0; i < cfg_.benign.destinations; ++i) {
            benign_destinations_.push_back("svc-" + std::to_string(i) + ".example");
        }

        if (!cfg_.blocklist.file.empty()) {
            std::ifstream in(cfg_.blocklist.file);
            if (!in) throw SimError("cannot open blocklist file: " + cfg_.blocklist.file);
            std::string line;
            while (std::getline(in, line)) {
                while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
                if (!line.empty() && line[0] != '#') file_blocklist_.insert(line);
            }
        }

        engine_.schedule(0, EventKind::FluxRotateDue);
        if (cfg_.detector.window > 0 && cfg_.detector.window <= cfg_.horizon) {
            engine_.schedule(cfg_.detector.window, EventKind::DetectorSampleDue);
        }
        for (std::uint32_t i = 0; i < initial; ++i) {
            engine_.schedule(1, EventKind::ContactAttempt, i, C2Beacon{});
        }
    }

    for (std::uint32_t i = 0; i < cfg_.command.count; ++i) {
        const SimTime due = cfg_.command.first_tick + static_cast<SimTime>(i) * cfg_.command.interval;
        if (due > cfg_.horizon) break;
        engine_.schedule(due, EventKind::CommandPush, 0, CommandDue{i});
    }

    if (cfg_.soap.enabled && cfg_.transport == Transport::Onion) {
        soap::Policy policy;
        policy.sybils_per_target = cfg_.soap.sybils_per_target;
        policy.ping_interval = cfg_.soap.ping_interval;
        policy.check_interval = cfg_.soap.check_interval;
        policy.honeypot_count = cfg_.soap.honeypots;
        policy.p_detect = cfg_.soap.p_detect;
        policy.start_tick = cfg_.soap.start_tick;
        defender_ = std::make_unique<soap::Defender>(*swarm_, engine_.rng(), policy);
        engine_.schedule(cfg_.soap.start_tick, EventKind::SoapProbe);
    }
}

bool Simulation::infections_enabled(SimTime now) const {
    if (cfg_.beta <= 0.0 || cfg_.contact_rate == 0) return false;
    if (cfg_.infection_stop_tick != 0 && now >= cfg_.infection_stop_tick) return false;
    if (cfg_.soap.enabled && cfg_.soap.stop_infections && now >= cfg_.soap.start_tick) return false;
    return true;
}

void Simulation::dispatch(const Event& event) {
    try {
        dispatch_inner(event);
    } catch (const std::exception& e) {
        throw SimError("aborted at tick " + std::to_string(event.time) + " during " +
                       to_string(event.kind) + ": " + e.what());
    }
}

void Simulation::dispatch_inner(const Event& event) {
    switch (event.kind) {
        case EventKind::ContactAttempt:
            if (std::holds_alternative<C2Beacon>(event.payload)) {
                on_beacon(event.subject, event.time);
            } else {
                on_sweep(event.time);
            }
            break;
        case EventKind::PeerUpdateDue:
            on_peer_update(event.subject, event.time);
            break;
        case EventKind::CommandPush:
            on_command_push(std::get<CommandDue>(event.payload).command_seq, event.time);
            break;
        case EventKind::AttackTick:
            on_attack(event.subject, std::get<AttackBurst>(event.payload), event.time);
            break;
        case EventKind::FluxRotateDue:
            on_flux_rotate(event.time);
            break;
        case EventKind::SoapProbe:
            if (defender_) {
                defender_->step(event.time);
                if (event.time + cfg_.soap.ping_interval <= cfg_.horizon) {
                    engine_.schedule(event.time + cfg_.soap.ping_interval, EventKind::SoapProbe);
                }
            }
            break;
        case EventKind::DetectorSampleDue:
            on_detector_sample(event.time);
            break;
    }
}

void Simulation::on_sweep(SimTime now) {
    // Homogeneous mixing: every infected bot draws `contact_rate` targets.
    if (infections_enabled(now)) {
        for (std::uint32_t i = 0; i < cfg_.population; ++i) {
            const auto& actor = swarm_->actor(i);
            if (actor.kind != ActorKind::Bot || !actor.infected()) continue;
            for (std::uint32_t c = 0; c < cfg_.contact_rate; ++c) {
                const auto target =
                    static_cast<std::uint32_t>(engine_.rng().uniform(0, cfg_.population - 1));
                if (target == i) continue;
                if (swarm_->try_infect(i, target, cfg_.beta, now)) {
                    if (cfg_.transport == Transport::Onion) {
                        if (now + 1 <= cfg_.horizon) {
                            engine_.schedule(now + 1, EventKind::PeerUpdateDue, target);
                        }
                    } else if (now + 1 <= cfg_.horizon) {
                        engine_.schedule(now + 1, EventKind::ContactAttempt, target, C2Beacon{});
                    }
                }
            }
        }
    }

    // Benign background traffic from hosts that carry no bot.
    if (cfg_.transport == Transport::DnsFlux && cfg_.benign.flow_rate > 0.0) {
        for (std::uint32_t i = 0; i < cfg_.population; ++i) {
            const auto& actor = swarm_->actor(i);
            if (actor.phase != Phase::Susceptible) continue;
            if (!engine_.rng().chance(cfg_.benign.flow_rate)) continue;
            evasion::FlowRecord flow;
            flow.time = now;
            flow.source = network_->ip_of(actor.node);
            flow.destination = benign_destinations_.empty()
                                   ? "svc-0.example"
                                   : engine_.rng().pick(benign_destinations_);
            flow.bytes = engine_.rng().uniform(cfg_.benign.bytes_min, cfg_.benign.bytes_max);
            flow.label = evasion::FlowRecord::Label::Benign;
            flows_.push_back(std::move(flow));
        }
    }

    const bool still_needed =
        infections_enabled(now + 1) || cfg_.transport == Transport::DnsFlux;
    if (still_needed && now + 1 <= cfg_.horizon) {
        engine_.schedule(now + 1, EventKind::ContactAttempt, 0, InfectionSweep{});
    }
}

void Simulation::on_peer_update(std::uint32_t bot, SimTime now) {
    if (bot == kListRefresh) {
        // The shipped bootstrap list is periodically swapped for the
        // addresses of currently connected bots.
        std::vector<overlay::OnionAddress> fresh;
        for (std::uint32_t i = 0; i < cfg_.population && fresh.size() < cfg_.bootstrap_list_size;
             ++i) {
            const auto& actor = swarm_->actor(i);
            if (actor.phase == Phase::Waiting || actor.phase == Phase::Executing) {
                fresh.push_back(actor.onion);
            }
        }
        if (!fresh.empty()) swarm_->set_hardcoded_peers(std::move(fresh));
        if (now + cfg_.bootstrap_refresh_interval <= cfg_.horizon) {
            engine_.schedule(now + cfg_.bootstrap_refresh_interval, EventKind::PeerUpdateDue,
                             kListRefresh);
        }
        return;
    }

    const auto& actor = swarm_->actor(bot);
    if (actor.kind != ActorKind::Bot) return;
    switch (actor.phase) {
        case Phase::Rally:
            swarm_->bootstrap(bot, now);
            break;
        case Phase::Waiting:
        case Phase::Executing:
            swarm_->update_peers(bot, now);
            break;
        case Phase::Susceptible:
        case Phase::Neutralized:
            return;  // no reschedule
    }
    if (swarm_->actor(bot).phase != Phase::Neutralized && now + cfg_.update_period <= cfg_.horizon) {
        engine_.schedule(now + cfg_.update_period, EventKind::PeerUpdateDue, bot);
    }
}

void Simulation::on_beacon(std::uint32_t bot, SimTime now) {
    auto& actor = swarm_->actor(bot);
    if (actor.kind != ActorKind::Bot || !actor.infected()) return;

    C2Cache& cache = c2_cache_.at(bot);
    const std::string source_ip = network_->ip_of(actor.node);

    if (!cache.valid || now >= cache.expires_at) {
        cache.valid = false;
        const auto result = evasion::c2_lookup(source_ip, dga_, zone_, current_blocklist(now), now,
                                               cfg_.beacon.bytes, &flows_);
        if (result.ip) {
            cache.ip = *result.ip;
            cache.expires_at = now + flux_.ttl;
            cache.valid = true;
            if (actor.phase == Phase::Rally) {
                swarm_->set_phase(bot, Phase::Waiting, now);
            }
        } else if (actor.phase == Phase::Waiting) {
            // Master unreachable: drop back to rallying until a lookup lands.
            swarm_->set_phase(bot, Phase::Rally, now);
        }
    }

    if (cache.valid) {
        evasion::FlowRecord flow;
        flow.time = now;
        flow.source = source_ip;
        flow.destination = cache.ip;
        flow.bytes = cfg_.beacon.bytes;
        if (cfg_.beacon.jitter_bytes > 0) {
            // symmetric: bytes +/- jitter
            flow.bytes = flow.bytes + engine_.rng().uniform(0, cfg_.beacon.jitter_bytes * 2) -
                         std::min(flow.bytes, cfg_.beacon.jitter_bytes);
        }
        flow.label = evasion::FlowRecord::Label::C2;
        flows_.push_back(std::move(flow));
    }

    SimTime gap = cfg_.beacon.period;
    if (cfg_.beacon.jitter_ticks > 0) {
        const SimTime offset = engine_.rng().uniform(0, cfg_.beacon.jitter_ticks * 2);
        gap = gap + offset > cfg_.beacon.jitter_ticks ? gap + offset - cfg_.beacon.jitter_ticks : 1;
        if (gap == 0) gap = 1;
    }
    const SimTime next = now + gap;
    if (next <= cfg_.horizon) {
        engine_.schedule(next, EventKind::ContactAttempt, bot, C2Beacon{});
    }
}

void Simulation::schedule_bursts(std::uint32_t bot, const std::vector<botnet::AttackBurstPlan>& plan,
                                 std::uint64_t command_id) {
    // Bursts past the horizon are dropped; such a bot simply ends the run
    // still Executing.
    for (const auto& burst : plan) {
        if (burst.time > cfg_.horizon) continue;
        engine_.schedule(burst.time, EventKind::AttackTick, bot,
                         AttackBurst{command_id, burst.events, burst.final_tick});
    }
}

void Simulation::push_dnsflux_command(const botnet::Command& cmd, SimTime now) {
    // Centralized push: the master answers every currently registered bot.
    for (std::uint32_t i = 0; i < cfg_.population; ++i) {
        auto& actor = swarm_->actor(i);
        if (actor.kind != ActorKind::Bot) continue;
        if (actor.phase != Phase::Waiting && actor.phase != Phase::Executing) continue;
        if (!c2_cache_.at(i).valid) continue;
        if (!cmd.verify(master_.keys.public_key)) continue;
        if (actor.seen_commands.count(cmd.id)) continue;
        actor.seen_commands.insert(cmd.id);
        transcript_->command_delivery(now, cmd.id, actor.onion.value);
        ++command_deliveries_;
        if (actor.phase == Phase::Waiting) {
            schedule_bursts(i, swarm_->execute(i, cmd, now), cmd.id);
        }
    }
}

void Simulation::on_command_push(std::uint64_t /*command_seq*/, SimTime now) {
    std::variant<botnet::DdosTask, botnet::SpamTask> task;
    if (cfg_.command.kind == "spam") {
        task = botnet::SpamTask{cfg_.command.spam_volume, cfg_.command.spam_window};
    } else {
        task = botnet::DdosTask{cfg_.command.target, cfg_.command.rate, cfg_.command.duration};
    }
    const botnet::Command cmd = master_.issue(task, now);
    ++commands_issued_;

    if (cfg_.transport == Transport::Onion) {
        const auto result = swarm_->push_command(master_, cmd, now);
        command_deliveries_ += result.accepted;
        for (const auto& started : result.started) {
            schedule_bursts(started.bot, started.plan, cmd.id);
        }
    } else {
        // Keep the command in the swarm log so attack ticks can find it.
        swarm_->log_command(cmd);
        push_dnsflux_command(cmd, now);
    }
}

void Simulation::on_attack(std::uint32_t bot, const AttackBurst& burst, SimTime now) {
    const botnet::Command* cmd = swarm_->command_by_id(burst.command_id);
    if (!cmd) return;
    std::vector<botnet::AttackEvent> events;
    swarm_->attack_tick(bot, burst, *cmd, now, events);
    attack_events_ += events.size();
}

std::set<std::string> Simulation::current_blocklist(SimTime now) const {
    std::set<std::string> list = file_blocklist_;
    if (!cfg_.blocklist.enabled) return list;
    const std::uint64_t period = dga_.period_length == 0 ? 0 : now / dga_.period_length;
    const SimTime period_start = period * dga_.period_length;
    if (now < period_start + cfg_.blocklist.activation_delay) {
        // Preemptive list not yet live this period; the previous one is.
        if (period == 0) return list;
        auto prev = evasion::predict_blocklist(cfg_.effective_recovered_seed(), dga_, period - 1);
        list.insert(prev.begin(), prev.end());
        return list;
    }
    auto cur = evasion::predict_blocklist(cfg_.effective_recovered_seed(), dga_, period);
    list.insert(cur.begin(), cur.end());
    return list;
}

void Simulation::ensure_period_registered(SimTime now) {
    const std::uint64_t period = dga_.period_length == 0 ? 0 : now / dga_.period_length;
    if (period == registered_period_) return;
    registered_period_ = period;

    // Rapid re-registration: the previous period's names go away and the
    // first few of the new period come up, each behind a flux record.
    zone_.clear();
    const auto domains = evasion::dga_domains(dga_, period);
    const std::uint32_t count =
        std::min<std::uint32_t>(cfg_.dga.registered_per_period,
                                static_cast<std::uint32_t>(domains.size()));
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto picks = engine_.rng().sample_indices(
            static_cast<std::uint32_t>(flux_.ip_pool.size()), flux_.ips_per_record);
        std::vector<std::string> ips;
        ips.reserve(picks.size());
        for (auto idx : picks) ips.push_back(flux_.ip_pool[idx]);
        zone_.register_domain(domains[i], std::move(ips), flux_.ttl, now);
    }
}

void Simulation::on_flux_rotate(SimTime now) {
    ensure_period_registered(now);
    for (const std::string& domain : zone_.registered_domains()) {
        zone_.flux_rotate(domain, flux_, engine_.rng(), now);
    }
    // Rotation cadence, plus a wake-up at the next period boundary so
    // re-registration never lags.
    const SimTime next_rotation = now + flux_.rotation_period;
    SimTime next = next_rotation;
    if (dga_.period_length > 0) {
        const SimTime next_boundary = ((now / dga_.period_length) + 1) * dga_.period_length;
        next = std::min(next_rotation, next_boundary);
    }
    if (next <= cfg_.horizon && next > now) {
        engine_.schedule(next, EventKind::FluxRotateDue);
    }
}

void Simulation::on_detector_sample(SimTime now) {
    const auto features = evasion::extract_flow_features(flows_, cfg_.detector.window);
    std::set<std::string> truth;
    for (const auto& flow : flows_) {
        if (flow.label == evasion::FlowRecord::Label::C2) truth.insert(flow.source);
    }
    evasion::DetectorThresholds thresholds{cfg_.detector.theta_cv, cfg_.detector.theta_var,
                                           cfg_.detector.min_windows};
    const auto report = evasion::classify(features, thresholds, truth);
    detector_precision_ = report.precision;
    detector_recall_ = report.recall;

    if (now + cfg_.detector.window <= cfg_.horizon) {
        engine_.schedule(now + cfg_.detector.window, EventKind::DetectorSampleDue);
    }
}

void Simulation::record_tick(SimTime tick) {
    const auto census = swarm_->census();
    TickRow row;
    row.tick = tick;
    row.susceptible = census.susceptible;
    row.rally = census.rally;
    row.waiting = census.waiting;
    row.executing = census.executing;
    row.neutralized = census.neutralized;
    row.commands_issued = commands_issued_;
    row.command_deliveries = command_deliveries_;
    row.attack_events = attack_events_;
    if (defender_) {
        row.discovered = static_cast<std::uint32_t>(defender_->discovered().size());
        row.sybils_active = defender_->sybils_active();
    }
    row.detector_precision = detector_precision_;
    row.detector_recall = detector_recall_;
    metrics_.rows.push_back(row);
}

RunMetrics Simulation::run() {
    metrics_.rows.clear();
    metrics_.summary.name = cfg_.name;
    metrics_.summary.seed = cfg_.seed;
    metrics_.summary.horizon = cfg_.horizon;
    metrics_.summary.population = cfg_.population;
    engine_.run_until(cfg_.horizon);
    metrics_.finalize_summary();
    if (!cfg_.flows_export.empty()) {
        std::ofstream out(cfg_.flows_export, std::ios::binary);
        if (!out) throw SimError("cannot write flow corpus: " + cfg_.flows_export);
        out << evasion::flows_to_csv(flows_);
    }
    return metrics_;
}

RunMetrics run_scenario(const ScenarioConfig& cfg, Transcript* transcript) {
    Simulation sim(cfg, transcript);
    return sim.run();
}

}  // namespace onionnet::scenario
