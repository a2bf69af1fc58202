#pragma once

#include <cstdint>
#include <string>

#include "fedia/fedia.hpp"
#include "fedia/model.hpp"
#include "fedia/synth.hpp"

namespace fedia {

enum class Method { FedAvg, FedIA, FedIANoAcag, FedIANoCac };

const char* method_name(Method method);
Method method_from_name(const std::string& name);

const char* kind_name(DatasetKind kind);
DatasetKind kind_from_name(const std::string& name);

// Full experiment description. Text form is flat `section.key = value`
// lines; `#` starts a comment. The optional `profile` key (desk|paper)
// swaps in a default bundle before explicit keys are applied. `out_dir`
// is a run-location detail and stays out of the canonical text and id.
struct RunConfig {
    DatasetKind kind = DatasetKind::MsLike;
    int m = 0;
    int clients = 4;
    int volumes_per_client = 4;
    double test_fraction = 0.2;
    VolumeSpec volume;
    ModelConfig model;   // grid dimensions follow the volume
    FedIAConfig fedia;   // total_rounds mirrors run.total_rounds
    Method method = Method::FedIA;
    int total_rounds = 300;
    int local_epochs = 1;
    int batch_size = 4;
    double lr = 1e-3;
    int eval_every = 1;
    int last_window = 10;
    std::uint64_t seed = 1;
    std::string out_dir;

    void validate() const;  // throws ConfigError
    FederationSpec federation_spec() const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// Parses and fully resolves a config from key=value text. Unknown keys
// are an error that lists them all.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Applies one `key=value` override to an already-resolved config.
void apply_key_value(RunConfig& cfg, const std::string& key, const std::string& value);

// Canonical text: every key explicit, fixed order; parse(serialize(c)) == c.
std::string serialize_config(const RunConfig& cfg);

// Deterministic id derived from the canonical text.
std::string run_id(const RunConfig& cfg);

}  // namespace fedia
