#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedia/artifacts.hpp"
#include "fedia/config.hpp"
#include "fedia/errors.hpp"
#include "fedia/run.hpp"

namespace {

int run_simulate(const std::string& config_path, const std::string& method,
                 const std::string& seed, const std::string& out,
                 const std::vector<std::string>& overrides, bool force) {
    fedia::RunConfig cfg = fedia::load_config(config_path);
    if (!method.empty()) cfg.method = fedia::method_from_name(method);
    if (!seed.empty()) fedia::apply_key_value(cfg, "run.seed", seed);
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw fedia::ConfigError("--set expects key=value, got '" + kv + "'");
        fedia::apply_key_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
    cfg.out_dir = out.empty() ? (std::filesystem::path("runs") / fedia::run_id(cfg)).string() : out;

    std::cout << "run " << fedia::run_id(cfg) << " -> " << cfg.out_dir << std::endl;
    const fedia::RunResult result = fedia::run_federation(cfg);
    const fedia::RunPaths paths = fedia::write_run_artifacts(result, cfg.out_dir, force);
    std::cout << "rounds: " << result.records.size()
              << "  last-" << cfg.last_window << " dice: "
              << fedia::format_fixed(result.last_window_dice * 100.0) << "%\n";
    std::cout << "artifacts: " << paths.rounds_csv << ", " << paths.summary_json << std::endl;
    return 0;
}

int run_compare(const std::vector<std::string>& dirs, int window, const std::string& csv_path) {
    const auto table = fedia::compare_runs(dirs, window);
    std::cout << fedia::comparison_text(table);
    if (!csv_path.empty()) {
        std::ofstream out(csv_path);
        if (!out) throw fedia::FormatError("cannot write " + csv_path);
        out << fedia::comparison_csv(table);
        std::cout << "csv: " << csv_path << std::endl;
    }
    return 0;
}

int run_gen_data(const std::string& config_path, const std::string& out, bool force, bool text) {
    const fedia::RunConfig cfg = fedia::load_config(config_path);
    const auto ds = fedia::build_federation(cfg.federation_spec(), cfg.seed);
    const std::string out_dir =
        out.empty() ? (std::filesystem::path("data") / fedia::run_id(cfg)).string() : out;
    fedia::write_dataset(ds, cfg, out_dir, force, text);
    std::cout << "dataset written to " << out_dir << std::endl;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated segmentation simulator with incomplete-annotation handling"};
    app.require_subcommand(1);

    std::string config_path, method, seed, out, compare_csv;
    std::vector<std::string> overrides, run_dirs;
    bool force = false, text_masks = false;
    int window = 10;

    auto* simulate = app.add_subcommand("simulate", "Run one seeded experiment");
    simulate->add_option("--config", config_path, "Config file")->required();
    simulate->add_option("--method", method, "Override run.method");
    simulate->add_option("--seed", seed, "Override run.seed");
    simulate->add_option("--out", out, "Output directory");
    simulate->add_option("--set", overrides, "Extra key=value overrides")->take_all();
    simulate->add_flag("--force", force, "Overwrite a non-empty output directory");

    auto* compare = app.add_subcommand("compare", "Tabulate last-window dice across runs");
    compare->add_option("--runs", run_dirs, "Run directories")->required()->expected(-2);
    compare->add_option("--window", window, "Rounds in the averaging window");
    compare->add_option("--csv", compare_csv, "Also write the table as CSV");

    auto* gen = app.add_subcommand("gen-data", "Generate the dataset only");
    gen->add_option("--config", config_path, "Config file")->required();
    gen->add_option("--out", out, "Output directory");
    gen->add_flag("--force", force, "Overwrite a non-empty output directory");
    gen->add_flag("--text", text_masks, "Also dump masks as text");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed())
            return run_simulate(config_path, method, seed, out, overrides, force);
        if (compare->parsed()) return run_compare(run_dirs, window, compare_csv);
        if (gen->parsed()) return run_gen_data(config_path, out, force, text_masks);
    } catch (const fedia::ConfigError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
    return 0;
}
