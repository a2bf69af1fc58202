#pragma once

#include <string>
#include <vector>

#include "fedia/run.hpp"

namespace fedia {

// CSV numbers use '.' decimals, fixed 4 digits (round-half-even); NaN
// becomes an empty field. Dice columns are reported in percent.
std::string format_fixed(double v, int decimals = 4);

struct RunPaths {
    std::string dir;
    std::string config;       // resolved config text
    std::string rounds_csv;   // run_id,t,stage,client_id,weight,loss,iou,corrected_flag,test_dice
    std::string estimation_csv;
    std::string corrections_csv;
    std::string summary_json;
};

// Writes the full artifact set for one run. Refuses to reuse a non-empty
// directory unless force is set.
RunPaths write_run_artifacts(const RunResult& result, const std::string& out_dir, bool force);

struct ComparisonRow {
    std::string method;
    std::string kind;
    int m = 0;
    std::vector<std::pair<std::uint64_t, double>> per_seed;  // seed -> mean dice %
    double mean_dice = 0.0;                                  // percent
};

struct ComparisonTable {
    std::vector<ComparisonRow> rows;
    int window = 10;
    int common_rounds = 0;
    std::vector<std::string> warnings;
};

// Groups run directories by (kind, m, method) and averages each group's
// last-window test dice. Runs of different lengths are aligned on the
// common round suffix with a warning.
ComparisonTable compare_runs(const std::vector<std::string>& run_dirs, int window);

std::string comparison_text(const ComparisonTable& table);
std::string comparison_csv(const ComparisonTable& table);

// Dataset export for gen-data: per-volume FIAV files plus manifest.json,
// optionally with plain-text mask dumps.
void write_dataset(const FederatedDataset& ds, const RunConfig& cfg, const std::string& out_dir,
                   bool force, bool text_masks);

}  // namespace fedia
