// onionnet command line: run scenarios, report on metrics, sweep seeds.

#include <atomic>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "onionnet/errors.hpp"
#include "onionnet/report.hpp"
#include "onionnet/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;   // parse/validation problems
constexpr int kExitRuntime = 2;  // aborted runs, I/O failures

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw onionnet::SimError("cannot open file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw onionnet::SimError("cannot write file: " + path);
    out << content;
}

// ONIONNET_SIM_SEED beats --seed beats the scenario file.
void apply_seed(onionnet::scenario::ScenarioConfig& cfg, const std::optional<std::uint64_t>& flag) {
    if (flag) cfg.seed = *flag;
    if (const char* env = std::getenv("ONIONNET_SIM_SEED")) {
        std::uint64_t value = 0;
        const std::string text(env);
        const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
        if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
            throw onionnet::ValidationError("ONIONNET_SIM_SEED", "a non-negative integer");
        }
        cfg.seed = value;
    }
}

struct SeedRange {
    std::uint64_t first = 0;
    std::uint64_t last = 0;
};

SeedRange parse_seed_range(const std::string& text) {
    const auto sep = text.find("..");
    if (sep == std::string::npos) {
        throw onionnet::ValidationError("--seeds", "a range like 1..20");
    }
    SeedRange range;
    const std::string a = text.substr(0, sep);
    const std::string b = text.substr(sep + 2);
    auto parse = [&](const std::string& part) {
        std::uint64_t value = 0;
        const auto res = std::from_chars(part.data(), part.data() + part.size(), value);
        if (res.ec != std::errc{} || res.ptr != part.data() + part.size()) {
            throw onionnet::ValidationError("--seeds", "a range like 1..20");
        }
        return value;
    };
    range.first = parse(a);
    range.last = parse(b);
    if (range.last < range.first) throw onionnet::ValidationError("--seeds", "first ≤ last");
    return range;
}

int cmd_run(const std::string& scenario_path, const std::optional<std::uint64_t>& seed,
            const std::string& out_path) {
    auto cfg = onionnet::scenario::load_scenario(scenario_path);
    apply_seed(cfg, seed);
    const auto metrics = onionnet::scenario::run_scenario(cfg);
    const std::string jsonl = metrics.to_jsonl();

    std::string target = out_path.empty() ? cfg.output : out_path;
    if (target.empty()) {
        std::cout << jsonl;
    } else {
        write_file(target, jsonl);
        std::cerr << "wrote " << target << " (" << metrics.rows.size() << " ticks)\n";
    }
    return kExitOk;
}

int cmd_report(const std::string& metrics_path, const std::string& plots_dir) {
    const auto metrics = onionnet::scenario::RunMetrics::from_jsonl(slurp(metrics_path));
    std::cout << onionnet::scenario::render_report(metrics);
    if (!plots_dir.empty()) {
        const auto files = onionnet::scenario::write_plots(metrics, plots_dir);
        for (const auto& file : files) std::cerr << "wrote " << file << "\n";
    }
    return kExitOk;
}

int cmd_sweep(const std::string& scenario_path, const std::string& seeds_text,
              const std::string& out_dir) {
    const auto base = onionnet::scenario::load_scenario(scenario_path);
    const SeedRange range = parse_seed_range(seeds_text);
    std::filesystem::create_directories(out_dir);

    const std::uint64_t total = range.last - range.first + 1;
    const unsigned workers =
        std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                        static_cast<unsigned>(std::min<std::uint64_t>(total, 16))));

    std::atomic<std::uint64_t> next{range.first};
    std::mutex io_mutex;
    std::atomic<bool> failed{false};
    std::string failure;

    auto worker = [&]() {
        for (;;) {
            const std::uint64_t seed = next.fetch_add(1);
            if (seed > range.last || failed.load()) return;
            try {
                auto cfg = base;
                cfg.seed = seed;
                const auto metrics = onionnet::scenario::run_scenario(cfg);
                const std::filesystem::path path =
                    std::filesystem::path(out_dir) /
                    (cfg.name + "-seed" + std::to_string(seed) + ".jsonl");
                write_file(path.string(), metrics.to_jsonl());
                std::lock_guard<std::mutex> lock(io_mutex);
                std::cout << "seed " << seed << ": infected="
                          << (metrics.summary.population - metrics.summary.final_row.susceptible)
                          << " neutralized=" << metrics.summary.final_row.neutralized
                          << " deliveries=" << metrics.summary.final_row.command_deliveries
                          << " -> " << path.string() << "\n";
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(io_mutex);
                failed = true;
                failure = e.what();
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    if (failed) throw onionnet::SimError("sweep aborted: " + failure);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"onionnet: deterministic onion-overlay botnet simulator"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_path;
    std::string metrics_path;
    std::string plots_dir;
    std::string seeds_text;
    std::optional<std::uint64_t> seed_flag;

    auto* run = app.add_subcommand("run", "run one scenario and write JSONL metrics");
    run->add_option("--scenario", scenario_path, "scenario file")->required();
    run->add_option("--seed", seed_flag, "seed override (env ONIONNET_SIM_SEED wins)");
    run->add_option("--out", out_path, "metrics output path (stdout when omitted)");

    auto* report = app.add_subcommand("report", "summarize a metrics file");
    report->add_option("--metrics", metrics_path, "metrics JSONL file")->required();
    report->add_option("--plots", plots_dir, "directory for SVG charts");

    auto* sweep = app.add_subcommand("sweep", "run a seed range in parallel");
    sweep->add_option("--scenario", scenario_path, "scenario file")->required();
    sweep->add_option("--seeds", seeds_text, "inclusive range, e.g. 1..20")->required();
    sweep->add_option("--out", out_path, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(scenario_path, seed_flag, out_path);
        if (report->parsed()) return cmd_report(metrics_path, plots_dir);
        if (sweep->parsed()) return cmd_sweep(scenario_path, seeds_text, out_path);
    } catch (const onionnet::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const onionnet::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
