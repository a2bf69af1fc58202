#include "fedia/artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <json.hpp>

#include "fedia/errors.hpp"
#include "fedia/serialize.hpp"

namespace fs = std::filesystem;

namespace fedia {

namespace {

void ensure_fresh_dir(const std::string& out_dir, bool force) {
    if (fs::exists(out_dir) && !fs::is_empty(out_dir) && !force)
        throw ConfigError("output directory exists and is not empty: " + out_dir +
                          " (use --force to overwrite)");
    fs::create_directories(out_dir);
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path.string());
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

struct LoadedRun {
    std::string method;
    std::string kind;
    int m = 0;
    std::uint64_t seed = 0;
    int total_rounds = 0;
    std::map<int, double> dice_by_round;  // percent, evaluated rounds only
};

LoadedRun load_run_dir(const std::string& dir) {
    LoadedRun run;
    std::ifstream jin(fs::path(dir) / "summary.json");
    if (!jin) throw FormatError("missing summary.json in " + dir);
    nlohmann::json j;
    jin >> j;
    run.method = j.at("method").get<std::string>();
    run.kind = j.at("kind").get<std::string>();
    run.m = j.at("m").get<int>();
    run.seed = j.at("seed").get<std::uint64_t>();
    run.total_rounds = j.at("total_rounds").get<int>();

    std::ifstream cin(fs::path(dir) / "rounds.csv");
    if (!cin) throw FormatError("missing rounds.csv in " + dir);
    std::string line;
    std::getline(cin, line);  // header
    while (std::getline(cin, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() < 9) throw FormatError("malformed rounds.csv row in " + dir);
        if (f[8].empty()) continue;
        const int t = std::stoi(f[1]);
        run.dice_by_round.emplace(t, std::stod(f[8]));
    }
    return run;
}

}  // namespace

std::string format_fixed(double v, int decimals) {
    if (std::isnan(v)) return "";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

RunPaths write_run_artifacts(const RunResult& result, const std::string& out_dir, bool force) {
    ensure_fresh_dir(out_dir, force);

    RunPaths paths;
    paths.dir = out_dir;
    paths.config = (fs::path(out_dir) / "config.txt").string();
    paths.rounds_csv = (fs::path(out_dir) / "rounds.csv").string();
    paths.estimation_csv = (fs::path(out_dir) / "estimation.csv").string();
    paths.corrections_csv = (fs::path(out_dir) / "corrections.csv").string();
    paths.summary_json = (fs::path(out_dir) / "summary.json").string();

    open_out(paths.config) << serialize_config(result.config);

    {
        auto out = open_out(paths.rounds_csv);
        out << "run_id,t,stage,client_id,weight,loss,iou,corrected_flag,test_dice\n";
        for (const auto& rec : result.records) {
            for (std::size_t k = 0; k < rec.weights.size(); ++k) {
                const bool corrected =
                    std::find(rec.corrected.begin(), rec.corrected.end(), static_cast<int>(k)) !=
                    rec.corrected.end();
                out << result.id << ',' << rec.round << ',' << stage_name(rec.stage) << ',' << k
                    << ',' << format_fixed(rec.weights[k]) << ',' << format_fixed(rec.losses[k])
                    << ',' << format_fixed(rec.ious[k]) << ',' << (corrected ? 1 : 0) << ','
                    << format_fixed(rec.test_dice * 100.0) << '\n';
            }
        }
    }

    {
        auto out = open_out(paths.estimation_csv);
        out << "client_id,true_a,a_hat_raw,a_hat_clamped,label_components,predicted_components\n";
        for (const auto& rep : result.estimation) {
            if (rep.a_hat < 0.0) continue;  // estimation never ran (plain fedavg)
            out << rep.id << ',' << format_fixed(rep.a_true) << ',' << format_fixed(rep.a_hat_raw)
                << ',' << format_fixed(rep.a_hat) << ',' << rep.label_components << ','
                << rep.predicted_components << '\n';
        }
    }

    {
        auto out = open_out(paths.corrections_csv);
        out << "round,client_id,flipped_voxels,flips_inside_gt\n";
        for (const auto& ev : result.corrections)
            out << ev.round << ',' << ev.client << ',' << ev.flipped << ',' << ev.flipped_in_gt
                << '\n';
    }

    {
        nlohmann::json j;
        j["run_id"] = result.id;
        j["method"] = method_name(result.config.method);
        j["kind"] = kind_name(result.config.kind);
        j["m"] = result.config.m;
        j["seed"] = result.config.seed;
        j["total_rounds"] = result.config.total_rounds;
        j["last_window"] = result.config.last_window;
        j["last_window_dice_percent"] = result.last_window_dice * 100.0;
        j["final_eval"] = {{"dice", result.final_eval.mean_dice},
                           {"iou", result.final_eval.mean_iou},
                           {"lesion_recall", result.final_eval.mean_lesion_recall}};
        j["first_modification_round"] = result.first_modification_round;
        j["first_final_round"] = result.first_final_round;
        auto& jc = j["clients"] = nlohmann::json::array();
        for (const auto& rep : result.estimation) {
            nlohmann::json c;
            c["id"] = rep.id;
            c["true_a"] = rep.a_true;
            if (rep.a_hat >= 0.0) {
                c["a_hat_raw"] = rep.a_hat_raw;
                c["a_hat"] = rep.a_hat;
                c["label_components"] = rep.label_components;
                c["predicted_components"] = rep.predicted_components;
                c["estimation_warned"] = rep.warned;
            }
            jc.push_back(std::move(c));
        }
        j["correction_events"] = result.corrections.size();
        std::size_t flipped = 0, in_gt = 0;
        for (const auto& ev : result.corrections) {
            flipped += ev.flipped;
            in_gt += ev.flipped_in_gt;
        }
        j["flipped_voxels"] = flipped;
        j["flipped_in_gt"] = in_gt;
        open_out(paths.summary_json) << j.dump(2) << '\n';
    }

    return paths;
}

ComparisonTable compare_runs(const std::vector<std::string>& run_dirs, int window) {
    if (run_dirs.size() < 2) throw ConfigError("compare needs at least two run directories");
    if (window < 1) throw ConfigError("compare window must be >= 1");

    std::vector<LoadedRun> runs;
    for (const auto& dir : run_dirs) runs.push_back(load_run_dir(dir));

    ComparisonTable table;
    table.window = window;
    table.common_rounds = runs.front().total_rounds;
    for (const auto& r : runs) table.common_rounds = std::min(table.common_rounds, r.total_rounds);
    for (const auto& r : runs)
        if (r.total_rounds != table.common_rounds) {
            table.warnings.push_back("run lengths differ; comparing the common suffix ending at round " +
                                     std::to_string(table.common_rounds));
            break;
        }

    std::map<std::tuple<std::string, int, std::string>, ComparisonRow> groups;
    for (const auto& r : runs) {
        double sum = 0.0;
        int n = 0;
        for (const auto& [t, dice] : r.dice_by_round) {
            if (t > table.common_rounds || t <= table.common_rounds - window) continue;
            sum += dice;
            ++n;
        }
        if (n == 0)
            throw ConfigError("no evaluated rounds in the comparison window for a " + r.method +
                              " run");
        auto& row = groups[{r.kind, r.m, r.method}];
        row.method = r.method;
        row.kind = r.kind;
        row.m = r.m;
        row.per_seed.emplace_back(r.seed, sum / n);
    }
    for (auto& [key, row] : groups) {
        double sum = 0.0;
        for (const auto& [seed, dice] : row.per_seed) sum += dice;
        row.mean_dice = sum / static_cast<double>(row.per_seed.size());
        std::sort(row.per_seed.begin(), row.per_seed.end());
        table.rows.push_back(row);
    }
    return table;
}

std::string comparison_text(const ComparisonTable& table) {
    std::ostringstream out;
    for (const auto& w : table.warnings) out << "warning: " << w << '\n';
    out << std::left << std::setw(15) << "method" << std::setw(6) << "kind" << std::setw(4) << "m"
        << std::setw(12) << "mean_dice%" << "per_seed\n";
    for (const auto& row : table.rows) {
        out << std::left << std::setw(15) << row.method << std::setw(6) << row.kind << std::setw(4)
            << row.m << std::setw(12) << format_fixed(row.mean_dice);
        for (std::size_t i = 0; i < row.per_seed.size(); ++i)
            out << (i ? " " : "") << 's' << row.per_seed[i].first << '='
                << format_fixed(row.per_seed[i].second);
        out << '\n';
    }
    return out.str();
}

std::string comparison_csv(const ComparisonTable& table) {
    std::ostringstream out;
    out << "kind,m,method,window,mean_dice_percent,seeds\n";
    for (const auto& row : table.rows) {
        out << row.kind << ',' << row.m << ',' << row.method << ',' << table.window << ','
            << format_fixed(row.mean_dice) << ',';
        for (std::size_t i = 0; i < row.per_seed.size(); ++i)
            out << (i ? ";" : "") << row.per_seed[i].first << ':'
                << format_fixed(row.per_seed[i].second);
        out << '\n';
    }
    return out.str();
}

void write_dataset(const FederatedDataset& ds, const RunConfig& cfg, const std::string& out_dir,
                   bool force, bool text_masks) {
    ensure_fresh_dir(out_dir, force);

    auto dump_volume = [&](const LabeledVolume& vol, const std::string& stem) {
        write_image_fiav((fs::path(out_dir) / (stem + ".image.fiav")).string(), vol.image);
        write_mask_fiav((fs::path(out_dir) / (stem + ".gt.fiav")).string(), vol.gt_mask);
        write_mask_fiav((fs::path(out_dir) / (stem + ".noisy.fiav")).string(), vol.noisy_mask);
        if (text_masks) {
            open_out(fs::path(out_dir) / (stem + ".gt.txt")) << mask_to_text(vol.gt_mask);
            open_out(fs::path(out_dir) / (stem + ".noisy.txt")) << mask_to_text(vol.noisy_mask);
        }
    };

    nlohmann::json manifest;
    manifest["kind"] = kind_name(cfg.kind);
    manifest["m"] = cfg.m;
    manifest["seed"] = cfg.seed;
    auto& jclients = manifest["clients"] = nlohmann::json::array();
    for (std::size_t k = 0; k < ds.clients.size(); ++k) {
        nlohmann::json jc;
        jc["id"] = k;
        jc["completeness"] = ds.completeness[k];
        auto& jv = jc["volumes"] = nlohmann::json::array();
        for (std::size_t v = 0; v < ds.clients[k].size(); ++v) {
            const auto stem = "client" + std::to_string(k) + "_vol" + std::to_string(v);
            dump_volume(ds.clients[k][v], stem);
            nlohmann::json jvol;
            jvol["stem"] = stem;
            jvol["gt_components"] = ds.clients[k][v].gt_component_count;
            jvol["kept_components"] = ds.clients[k][v].kept_component_count;
            jv.push_back(std::move(jvol));
        }
        jclients.push_back(std::move(jc));
    }
    auto& jtest = manifest["test"] = nlohmann::json::array();
    for (std::size_t v = 0; v < ds.test_set.size(); ++v) {
        const auto stem = "test_vol" + std::to_string(v);
        dump_volume(ds.test_set[v], stem);
        jtest.push_back(stem);
    }
    open_out(fs::path(out_dir) / "manifest.json") << manifest.dump(2) << '\n';
}

}  // namespace fedia
