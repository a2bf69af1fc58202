#include "fedia/config.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "fedia/errors.hpp"

namespace fedia {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

long parse_long(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const long v = std::strtol(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0')
        throw ConfigError(key + ": not an integer: '" + value + "'");
    return v;
}

double parse_real(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0')
        throw ConfigError(key + ": not a number: '" + value + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError(key + ": expected true/false, got '" + value + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError(key + ": empty list element");
        out.push_back(static_cast<int>(parse_long(key, item)));
    }
    return out;
}

// Shortest decimal representation that round-trips to the same double.
std::string format_real(double v) {
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

std::string acag_mode_text(const FedIAConfig& f) {
    switch (f.acag_mode) {
        case FedIAConfig::AcagMode::UntilAllCorrected: return "until_all_corrected";
        case FedIAConfig::AcagMode::Always: return "always";
        case FedIAConfig::AcagMode::Rounds: return "rounds:" + std::to_string(f.acag_rounds);
    }
    return "?";
}

void parse_acag_mode(FedIAConfig& f, const std::string& key, const std::string& value) {
    if (value == "until_all_corrected") {
        f.acag_mode = FedIAConfig::AcagMode::UntilAllCorrected;
    } else if (value == "always") {
        f.acag_mode = FedIAConfig::AcagMode::Always;
    } else if (value.rfind("rounds:", 0) == 0) {
        f.acag_mode = FedIAConfig::AcagMode::Rounds;
        f.acag_rounds = static_cast<int>(parse_long(key, value.substr(7)));
    } else {
        throw ConfigError(key + ": expected until_all_corrected|always|rounds:<n>, got '" +
                          value + "'");
    }
}

int default_warmup(DatasetKind kind, bool desk) {
    if (kind == DatasetKind::MsLike) return 10;
    return desk ? 25 : 40;
}

struct KeyValue {
    std::string key;
    std::string value;
};

std::vector<KeyValue> tokenize(const std::string& text) {
    std::vector<KeyValue> pairs;
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        pairs.push_back({trim(line.substr(0, eq)), trim(line.substr(eq + 1))});
    }
    return pairs;
}

}  // namespace

const char* method_name(Method method) {
    switch (method) {
        case Method::FedAvg: return "fedavg";
        case Method::FedIA: return "fedia";
        case Method::FedIANoAcag: return "fedia_no_acag";
        case Method::FedIANoCac: return "fedia_no_cac";
    }
    return "?";
}

Method method_from_name(const std::string& name) {
    if (name == "fedavg") return Method::FedAvg;
    if (name == "fedia") return Method::FedIA;
    if (name == "fedia_no_acag") return Method::FedIANoAcag;
    if (name == "fedia_no_cac") return Method::FedIANoCac;
    throw ConfigError("unknown method '" + name +
                      "' (expected fedavg|fedia|fedia_no_acag|fedia_no_cac)");
}

const char* kind_name(DatasetKind kind) {
    return kind == DatasetKind::MsLike ? "ms" : "lung";
}

DatasetKind kind_from_name(const std::string& name) {
    if (name == "ms" || name == "ms-like") return DatasetKind::MsLike;
    if (name == "lung" || name == "lung-like") return DatasetKind::LungLike;
    throw ConfigError("unknown dataset kind '" + name + "' (expected ms|lung)");
}

void apply_key_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "run.method") {
        cfg.method = method_from_name(value);
    } else if (key == "run.seed") {
        cfg.seed = static_cast<std::uint64_t>(parse_long(key, value));
    } else if (key == "run.total_rounds") {
        cfg.total_rounds = static_cast<int>(parse_long(key, value));
    } else if (key == "run.eval_every") {
        cfg.eval_every = static_cast<int>(parse_long(key, value));
    } else if (key == "run.last_window") {
        cfg.last_window = static_cast<int>(parse_long(key, value));
    } else if (key == "data.kind") {
        cfg.kind = kind_from_name(value);
    } else if (key == "data.m") {
        cfg.m = static_cast<int>(parse_long(key, value));
    } else if (key == "data.clients") {
        cfg.clients = static_cast<int>(parse_long(key, value));
    } else if (key == "data.volumes_per_client") {
        cfg.volumes_per_client = static_cast<int>(parse_long(key, value));
    } else if (key == "data.test_fraction") {
        cfg.test_fraction = parse_real(key, value);
    } else if (key == "volume.depth") {
        cfg.volume.depth = static_cast<int>(parse_long(key, value));
    } else if (key == "volume.height") {
        cfg.volume.height = static_cast<int>(parse_long(key, value));
    } else if (key == "volume.width") {
        cfg.volume.width = static_cast<int>(parse_long(key, value));
    } else if (key == "volume.lesion_count_min") {
        cfg.volume.lesion_count_min = static_cast<int>(parse_long(key, value));
    } else if (key == "volume.lesion_count_max") {
        cfg.volume.lesion_count_max = static_cast<int>(parse_long(key, value));
    } else if (key == "volume.lesion_radius_min") {
        cfg.volume.lesion_radius_min = parse_real(key, value);
    } else if (key == "volume.lesion_radius_max") {
        cfg.volume.lesion_radius_max = parse_real(key, value);
    } else if (key == "volume.noise_sigma") {
        cfg.volume.noise_sigma = parse_real(key, value);
    } else if (key == "volume.background_level") {
        cfg.volume.background_level = parse_real(key, value);
    } else if (key == "model.hidden") {
        cfg.model.hidden_channels = parse_int_list(key, value);
    } else if (key == "model.kernel") {
        cfg.model.kernel_size = static_cast<int>(parse_long(key, value));
    } else if (key == "model.leaky_slope") {
        cfg.model.leaky_slope = parse_real(key, value);
    } else if (key == "train.lr") {
        cfg.lr = parse_real(key, value);
    } else if (key == "train.batch_size") {
        cfg.batch_size = static_cast<int>(parse_long(key, value));
    } else if (key == "train.local_epochs") {
        cfg.local_epochs = static_cast<int>(parse_long(key, value));
    } else if (key == "fedia.warmup_rounds") {
        cfg.fedia.warmup_rounds = static_cast<int>(parse_long(key, value));
    } else if (key == "fedia.lambda") {
        cfg.fedia.lambda = parse_real(key, value);
    } else if (key == "fedia.confidence") {
        cfg.fedia.confidence = parse_real(key, value);
    } else if (key == "fedia.min_component_size") {
        const long v = parse_long(key, value);
        if (v < 1) throw ConfigError(key + ": must be >= 1");
        cfg.fedia.min_component_size = static_cast<std::size_t>(v);
    } else if (key == "fedia.acag_mode") {
        parse_acag_mode(cfg.fedia, key, value);
    } else if (key == "fedia.per_volume_components") {
        cfg.fedia.per_volume_components = parse_bool(key, value);
    } else if (key == "fedia.acag_in_final") {
        cfg.fedia.acag_in_final = parse_bool(key, value);
    } else {
        throw ConfigError("unknown key '" + key + "'");
    }
}

RunConfig parse_config(const std::string& text) {
    const auto pairs = tokenize(text);

    std::vector<std::string> unknown;
    static const std::vector<std::string> known = {
        "profile",
        "run.method", "run.seed", "run.total_rounds", "run.eval_every", "run.last_window",
        "data.kind", "data.m", "data.clients", "data.volumes_per_client", "data.test_fraction",
        "volume.depth", "volume.height", "volume.width", "volume.lesion_count_min",
        "volume.lesion_count_max", "volume.lesion_radius_min", "volume.lesion_radius_max",
        "volume.noise_sigma", "volume.background_level",
        "model.hidden", "model.kernel", "model.leaky_slope",
        "train.lr", "train.batch_size", "train.local_epochs",
        "fedia.warmup_rounds", "fedia.lambda", "fedia.confidence", "fedia.min_component_size",
        "fedia.acag_mode", "fedia.per_volume_components", "fedia.acag_in_final",
    };
    for (const auto& kv : pairs)
        if (std::find(known.begin(), known.end(), kv.key) == known.end())
            unknown.push_back(kv.key);
    if (!unknown.empty()) {
        std::string msg = "unknown keys:";
        for (const auto& k : unknown) msg += " '" + k + "'";
        throw ConfigError(msg);
    }

    RunConfig cfg;

    // Dataset kind and profile shape the defaults; apply them first.
    bool desk = false;
    for (const auto& kv : pairs) {
        if (kv.key == "data.kind") cfg.kind = kind_from_name(kv.value);
        if (kv.key == "profile") {
            if (kv.value == "desk")
                desk = true;
            else if (kv.value != "paper")
                throw ConfigError("profile: expected desk|paper, got '" + kv.value + "'");
        }
    }
    cfg.fedia.warmup_rounds = default_warmup(cfg.kind, desk);
    if (desk) cfg.total_rounds = 120;

    for (const auto& kv : pairs) {
        if (kv.key == "profile" || kv.key == "data.kind") continue;
        apply_key_value(cfg, kv.key, kv.value);
    }

    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void RunConfig::validate() const {
    if (clients < 1) throw ConfigError("data.clients: must be >= 1");
    if (volumes_per_client < 1) throw ConfigError("data.volumes_per_client: must be >= 1");
    if (test_fraction < 0.0 || test_fraction >= 1.0)
        throw ConfigError("data.test_fraction: must be in [0, 1)");
    completeness_schedule(kind, m, clients);
    volume.validate();

    ModelConfig mc = model;
    mc.grid_height = volume.height;
    mc.grid_width = volume.width;
    mc.validate();

    FedIAConfig fc = fedia;
    fc.total_rounds = total_rounds;
    fc.validate();

    if (total_rounds < 1) throw ConfigError("run.total_rounds: must be >= 1");
    if (eval_every < 1) throw ConfigError("run.eval_every: must be >= 1");
    if (last_window < 1) throw ConfigError("run.last_window: must be >= 1");
    if (local_epochs < 1) throw ConfigError("train.local_epochs: must be >= 1");
    if (batch_size < 1) throw ConfigError("train.batch_size: must be >= 1");
    if (!(lr > 0.0)) throw ConfigError("train.lr: must be > 0");
}

FederationSpec RunConfig::federation_spec() const {
    FederationSpec fs;
    fs.volume = volume;
    fs.kind = kind;
    fs.m = m;
    fs.clients = clients;
    fs.volumes_per_client = volumes_per_client;
    fs.test_fraction = test_fraction;
    return fs;
}

std::string serialize_config(const RunConfig& cfg) {
    std::ostringstream out;
    out << "run.method = " << method_name(cfg.method) << '\n';
    out << "run.seed = " << cfg.seed << '\n';
    out << "run.total_rounds = " << cfg.total_rounds << '\n';
    out << "run.eval_every = " << cfg.eval_every << '\n';
    out << "run.last_window = " << cfg.last_window << '\n';
    out << "data.kind = " << kind_name(cfg.kind) << '\n';
    out << "data.m = " << cfg.m << '\n';
    out << "data.clients = " << cfg.clients << '\n';
    out << "data.volumes_per_client = " << cfg.volumes_per_client << '\n';
    out << "data.test_fraction = " << format_real(cfg.test_fraction) << '\n';
    out << "volume.depth = " << cfg.volume.depth << '\n';
    out << "volume.height = " << cfg.volume.height << '\n';
    out << "volume.width = " << cfg.volume.width << '\n';
    out << "volume.lesion_count_min = " << cfg.volume.lesion_count_min << '\n';
    out << "volume.lesion_count_max = " << cfg.volume.lesion_count_max << '\n';
    out << "volume.lesion_radius_min = " << format_real(cfg.volume.lesion_radius_min) << '\n';
    out << "volume.lesion_radius_max = " << format_real(cfg.volume.lesion_radius_max) << '\n';
    out << "volume.noise_sigma = " << format_real(cfg.volume.noise_sigma) << '\n';
    out << "volume.background_level = " << format_real(cfg.volume.background_level) << '\n';
    out << "model.hidden = ";
    for (std::size_t i = 0; i < cfg.model.hidden_channels.size(); ++i)
        out << (i ? "," : "") << cfg.model.hidden_channels[i];
    out << '\n';
    out << "model.kernel = " << cfg.model.kernel_size << '\n';
    out << "model.leaky_slope = " << format_real(cfg.model.leaky_slope) << '\n';
    out << "train.lr = " << format_real(cfg.lr) << '\n';
    out << "train.batch_size = " << cfg.batch_size << '\n';
    out << "train.local_epochs = " << cfg.local_epochs << '\n';
    out << "fedia.warmup_rounds = " << cfg.fedia.warmup_rounds << '\n';
    out << "fedia.lambda = " << format_real(cfg.fedia.lambda) << '\n';
    out << "fedia.confidence = " << format_real(cfg.fedia.confidence) << '\n';
    out << "fedia.min_component_size = " << cfg.fedia.min_component_size << '\n';
    out << "fedia.acag_mode = " << acag_mode_text(cfg.fedia) << '\n';
    out << "fedia.per_volume_components = " << (cfg.fedia.per_volume_components ? "true" : "false")
        << '\n';
    out << "fedia.acag_in_final = " << (cfg.fedia.acag_in_final ? "true" : "false") << '\n';
    return out.str();
}

std::string run_id(const RunConfig& cfg) {
    const std::string text = serialize_config(cfg);
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%08llx", static_cast<unsigned long long>(h & 0xffffffffULL));
    std::ostringstream id;
    id << kind_name(cfg.kind) << "-m" << cfg.m << "-" << method_name(cfg.method) << "-s"
       << cfg.seed << "-" << hex;
    return id.str();
}

}  // namespace fedia
