// radnet: multistatic range-only localization and tracking simulator.
//
// Subcommands:
//   run       Monte Carlo tracking experiment from a scenario config
//   localize  one-shot constrained localization from a measurement CSV
//   validate  schema + sanity check of a scenario config

#include <CLI11.hpp>

#include <radnet/cli.hpp>

int main(int argc, char** argv) {
    CLI::App app{"Multistatic range-only localization and tracking simulator"};
    app.set_version_flag("--version", std::string("radnet ") + radnet::cli::version);
    app.require_subcommand(0, 1);

    // --- run ---------------------------------------------------------------
    radnet::cli::RunRequest run_req;
    CLI::App* run = app.add_subcommand("run", "Run a Monte Carlo tracking experiment");
    run->add_option("scenario", run_req.scenario,
                    "Scenario name (resolved via $RADNET_SCENARIO_DIR, ./scenarios) or path");
    run->add_option("--manifest", run_req.manifest_path,
                    "Re-run the experiment recorded in a manifest.json");
    run->add_option("-o,--out", run_req.out_dir,
                    "Output directory (default $RADNET_OUT_DIR, else ./out)");
    run->add_option("--variant", run_req.overrides.variant, "Tracker variant: spa, nad, ad, arce")
        ->check(CLI::IsMember({"spa", "nad", "ad", "arce"}));
    run->add_option("--runs", run_req.overrides.runs, "Monte Carlo runs (0 allowed: no output rows)");
    run->add_option("--seed", run_req.overrides.seed, "Base seed for all random streams");
    run->add_option("--particles", run_req.overrides.n_particles, "Particles per track");
    run->add_option("--c-tilde", run_req.overrides.c_tilde,
                    "Virtual-beam width factor for the ad variant");
    run->add_option("--snr-db", run_req.overrides.snr_db, "Reference SNR override in dB");
    run->add_option("--jobs", run_req.jobs, "Worker threads for Monte Carlo runs")
        ->check(CLI::PositiveNumber);
    run->add_flag("--emit-tracks", run_req.emit_tracks, "Also write tracks.csv");
    run->add_flag("--dump-scans", run_req.dump_scans, "Also write simulated scans.csv");
    run->add_flag("--fusion-diag", run_req.emit_fusion_diag, "Also write fusion_diag.csv");

    // --- localize ----------------------------------------------------------
    radnet::cli::LocalizeRequest loc_req;
    std::vector<double> tx_flat{0.0, 0.0, 0.0};
    std::vector<double> rx_flat;
    double nsigma = 3.0;
    CLI::App* loc = app.add_subcommand(
        "localize", "One-shot constrained localization from receiver,range_m[,sigma_m] CSV");
    loc->add_option("input", loc_req.input_path, "Measurement CSV path, or - for stdin")
        ->required();
    loc->add_option("--tx", tx_flat, "Transmitter position x y z in m")->expected(3);
    loc->add_option("--rx", rx_flat,
                    "Receiver position x y z in m; repeat per receiver, in receiver order")
        ->type_size(3);
    loc->add_option("--az-center-deg", loc_req.azimuth_center_deg, "Beam azimuth center");
    loc->add_option("--az-halfwidth-deg", loc_req.azimuth_halfwidth_deg, "Beam azimuth halfwidth");
    loc->add_option("--el-center-deg", loc_req.elevation_center_deg, "Beam elevation center");
    loc->add_option("--el-halfwidth-deg", loc_req.elevation_halfwidth_deg,
                    "Beam elevation halfwidth");
    loc->add_option("--range-min-m", loc_req.range_min_m, "Monostatic range lower bound");
    loc->add_option("--range-max-m", loc_req.range_max_m, "Monostatic range upper bound");
    loc->add_option("--nsigma", nsigma,
                    "Half width of the monostatic range gate in sigmas (<= 0 disables)");
    loc->add_option("--sigma-m", loc_req.sigma_m,
                    "Range noise level used when a CSV row has no sigma_m");
    loc->add_flag("--weighted", loc_req.weighted, "Weight residuals by 1/sigma^2");

    // --- validate ------------------------------------------------------------
    std::string validate_scenario;
    CLI::App* val = app.add_subcommand("validate", "Check a scenario config and exit");
    val->add_option("scenario", validate_scenario, "Scenario name or path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? radnet::cli::exit_ok : radnet::cli::exit_bad_config;
    }

    try {
        if (run->parsed()) {
            if (run_req.scenario.empty() && run_req.manifest_path.empty()) {
                std::cerr << "error: give a scenario name or --manifest\n";
                return radnet::cli::exit_bad_config;
            }
            return radnet::cli::cmd_run(run_req, std::cout, std::cerr);
        }
        if (loc->parsed()) {
            loc_req.tx = {tx_flat[0], tx_flat[1], tx_flat[2]};
            for (std::size_t i = 0; i + 2 < rx_flat.size(); i += 3)
                loc_req.rx.push_back({rx_flat[i], rx_flat[i + 1], rx_flat[i + 2]});
            loc_req.n_sigma_range =
                nsigma > 0 ? nsigma : std::numeric_limits<double>::infinity();
            return radnet::cli::cmd_localize(loc_req, std::cout, std::cerr);
        }
        if (val->parsed())
            return radnet::cli::cmd_validate(validate_scenario, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return radnet::cli::exit_runtime;
    }

    std::cout << app.help();
    return radnet::cli::exit_bad_config;
}
