// Command-line front end: point estimation with uncertainty from count or
// record files, and the Monte Carlo study runner.
//
// Exit codes: 0 success, 2 input error, 3 identifiability error,
// 4 internal fault.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "anchorcrc/config.hpp"
#include "anchorcrc/csv.hpp"
#include "anchorcrc/report.hpp"
#include "anchorcrc/simulation.hpp"
#include "anchorcrc/version.hpp"

namespace {

constexpr int kExitInput = 2;
constexpr int kExitIdentifiability = 3;
constexpr int kExitInternal = 4;

using anchorcrc::InputError;

anchorcrc::rng::Seed resolve_seed(anchorcrc::rng::Seed seed) {
    if (seed != 0) return seed;
    std::random_device dev;
    const auto entropy = (static_cast<std::uint64_t>(dev()) << 32) ^ dev();
    std::cerr << "seed 0 requested entropy seeding; using " << entropy << "\n";
    return entropy;
}

std::pair<std::int64_t, std::int64_t> parse_draws(const std::string& spec) {
    const auto x = spec.find('x');
    if (x == std::string::npos)
        throw InputError("--draws must look like SxT, e.g. 100x100");
    try {
        return {std::stoll(spec.substr(0, x)), std::stoll(spec.substr(x + 1))};
    } catch (const std::exception&) {
        throw InputError("--draws must look like SxT, e.g. 100x100");
    }
}

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InputError("cannot parse " + path + ": " + e.what());
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write file: " + path);
    out << text;
}

struct EstimateArgs {
    std::string records_path;
    std::string counts_path;
    std::int64_t n_tot = 0;
    std::vector<std::string> methods = {"mle", "rs", "chapman"};
    double ppv = -1.0;
    double psi = -1.0;
    std::int64_t imputations = 200;
    std::string draws = "100x100";
    anchorcrc::rng::Seed seed = anchorcrc::rng::kDefaultSeed;
    std::string format = "json";
    std::string out_path;
};

int run_estimate(const EstimateArgs& args) {
    const auto started = std::chrono::steady_clock::now();

    if (args.records_path.empty() == args.counts_path.empty())
        throw InputError("exactly one of --records or --counts is required");

    anchorcrc::CellCounts counts;
    if (!args.counts_path.empty()) {
        counts = anchorcrc::parse_cell_counts(load_json_file(args.counts_path));
    } else {
        std::ifstream in(args.records_path);
        if (!in) throw InputError("cannot open file: " + args.records_path);
        const auto records = anchorcrc::read_record_csv(in);
        const std::int64_t n_tot =
            args.n_tot > 0 ? args.n_tot : static_cast<std::int64_t>(records.size());
        counts = anchorcrc::tabulate_records(records, n_tot);
    }

    anchorcrc::EstimateOptions opts;
    opts.methods.clear();
    for (const auto& name : args.methods)
        opts.methods.push_back(anchorcrc::estimator_from_string(name));
    if (args.ppv >= 0.0) opts.ppv = args.ppv;
    if (args.psi >= 0.0) opts.psi = args.psi;
    opts.imputations = args.imputations;
    std::tie(opts.s_outer, opts.t_inner) = parse_draws(args.draws);
    if (opts.s_outer * opts.t_inner < 1000)
        std::cerr << "warning: fewer than 1000 posterior draws; interval limits will be noisy\n";
    opts.seed = resolve_seed(args.seed);

    const nlohmann::json report = anchorcrc::build_estimate_report(counts, opts);
    const std::string text = args.format == "csv" ? anchorcrc::estimate_report_csv(report)
                                                  : report.dump(2) + "\n";
    if (args.out_path.empty())
        std::cout << text;
    else
        write_text(args.out_path, text);

    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);
    std::cerr << "estimate completed in " << elapsed.count() << " ms\n";
    return 0;
}

struct SimulateArgs {
    std::string config_path;
    std::string out_dir;
    std::int64_t replicates_override = 0;
    anchorcrc::rng::Seed seed_override = 0;
    bool seed_set = false;
    unsigned threads = 1;
};

int run_simulate(const SimulateArgs& args) {
    const auto started = std::chrono::steady_clock::now();
    const nlohmann::json config_json = load_json_file(args.config_path);
    auto settings = anchorcrc::parse_sim_config(config_json);

    for (auto& cfg : settings) {
        if (args.replicates_override > 0) cfg.replicates = args.replicates_override;
        if (args.seed_set) cfg.seed = resolve_seed(args.seed_override);
        cfg.validate();
    }

    std::filesystem::create_directories(args.out_dir);
    std::string csv = anchorcrc::summary_csv_header();
    nlohmann::json out_settings = nlohmann::json::array();
    for (const auto& cfg : settings) {
        std::cerr << "running setting '" << cfg.name << "' (" << cfg.replicates
                  << " replicates)\n";
        const auto summary = anchorcrc::run_simulation(cfg, args.threads);
        csv += anchorcrc::summary_csv_rows(cfg.name, summary);
        out_settings.push_back(anchorcrc::summary_to_json(cfg.name, summary));
    }

    const nlohmann::json summary_json{{"tool", "anchorcrc"},
                                      {"version", anchorcrc::kVersion},
                                      {"settings", out_settings}};
    nlohmann::json manifest{{"tool", "anchorcrc"},
                            {"version", anchorcrc::kVersion},
                            {"config_path", args.config_path},
                            {"config_hash", anchorcrc::config_hash(config_json)},
                            {"seeds", nlohmann::json::array()}};
    for (const auto& cfg : settings)
        manifest["seeds"].push_back({{"setting", cfg.name}, {"seed", cfg.seed},
                                     {"replicates", cfg.replicates}});

    const auto out = std::filesystem::path(args.out_dir);
    write_text((out / "summary.csv").string(), csv);
    write_text((out / "summary.json").string(), summary_json.dump(2) + "\n");
    write_text((out / "manifest.json").string(), manifest.dump(2) + "\n");

    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);
    std::cerr << "simulation completed in " << elapsed.count() << " ms; outputs in "
              << args.out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Registry case-count estimation from an error-prone surveillance stream "
                 "plus a gold-standard anchor sample"};
    app.set_version_flag("--version", anchorcrc::kVersion);
    app.require_subcommand(1);

    EstimateArgs est;
    auto* cmd_est = app.add_subcommand("estimate", "Estimate the case count from data");
    auto* opt_records =
        cmd_est->add_option("--records", est.records_path, "Subject record CSV file");
    auto* opt_counts =
        cmd_est->add_option("--counts", est.counts_path, "Cell count JSON file (n1..n6, n_tot)");
    opt_records->excludes(opt_counts);
    cmd_est->add_option("--n-tot", est.n_tot,
                        "Registry size when records omit unsampled subjects");
    cmd_est->add_option("--methods", est.methods, "Estimators to run")->delimiter(',');
    cmd_est->add_option("--ppv", est.ppv, "Known stream-1 PPV (required for plugin)");
    cmd_est->add_option("--psi", est.psi, "Anchor sampling probability for plugin/anchor");
    cmd_est->add_option("--imputations", est.imputations, "MI imputation count")
        ->default_val(200);
    cmd_est->add_option("--draws", est.draws, "Posterior draws as SxT")->default_val("100x100");
    cmd_est->add_option("--seed", est.seed, "RNG seed; 0 draws entropy")
        ->default_val(anchorcrc::rng::kDefaultSeed);
    cmd_est->add_option("--format", est.format, "Report format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->default_val("json");
    cmd_est->add_option("--out", est.out_path, "Write report to file instead of stdout");

    SimulateArgs sim;
    auto* cmd_sim = app.add_subcommand("simulate", "Run Monte Carlo study from a config file");
    cmd_sim->add_option("--config", sim.config_path, "Study config JSON")->required();
    cmd_sim->add_option("--out", sim.out_dir, "Output directory")->required();
    cmd_sim->add_option("--replicates", sim.replicates_override, "Override replicate count");
    auto* opt_seed = cmd_sim->add_option("--seed", sim.seed_override, "Override seed; 0 draws entropy");
    cmd_sim->add_option("--threads", sim.threads, "Worker threads (never changes results)")
        ->default_val(1);

    try {
        app.parse(argc, argv);
        sim.seed_set = opt_seed->count() > 0;
        if (*cmd_est) return run_estimate(est);
        return run_simulate(sim);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help / --version
        app.exit(e);
        return kExitInput;
    } catch (const anchorcrc::IdentifiabilityError& e) {
        std::cerr << "identifiability error: " << e.what() << "\n";
        return kExitIdentifiability;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "internal fault: " << e.what() << "\n";
        return kExitInternal;
    }
}
