#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "polymer/engine.hpp"
#include "polymer/environment.hpp"

namespace polymer {

using json = nlohmann::json;

// Declarative experiment description. A config is a single JSON document;
// unknown keys are rejected, every field is validated before any computation,
// and the effective document (defaults materialized, flag overrides applied)
// is what gets hashed and recorded in the manifest. The output directory and
// thread count are execution details and stay out of the canonical form.
struct ExperimentConfig {
    std::string experiment;
    WeightSpec model{DistributionSpec::exponential(1.0), DistributionSpec::exponential(0.25)};
    Mode mode = Mode::PositiveTemperature;
    Geometry geometry = Geometry::HalfSpace;
    uint64_t seed = 1;
    int replicates = 0; // 0 = per-experiment default
    int threads = 0;    // 0 = machine parallelism
    std::string out_dir = "out";
    bool dump_env = false;
    json params; // experiment-specific keys, validated against a whitelist

    static ExperimentConfig from_json(const json& doc);
    static ExperimentConfig from_file(const std::string& path);

    // Canonical serialization: sorted keys, no insignificant whitespace,
    // defaults materialized; excludes `out` and `threads`.
    std::string canonical_string() const;
    std::string config_hash() const; // fnv1a64 of the canonical string, hex

    json to_json() const; // effective document including out/threads
};

uint64_t fnv1a64(const void* data, size_t size);
std::string fnv1a64_hex(const std::string& s);

// Typed parameter access with path-qualified errors.
int param_int(const json& params, const std::string& key);
double param_double(const json& params, const std::string& key);
std::vector<int> param_int_list(const json& params, const std::string& key);
std::vector<double> param_double_list(const json& params, const std::string& key);
bool param_present(const json& params, const std::string& key);

const std::vector<std::string>& known_experiments();

// Run manifest: canonical config, hash, seed, timestamps and per-output-file
// checksums. Written next to the outputs as manifest.json.
struct Manifest {
    json config;
    std::string config_hash;
    uint64_t master_seed = 0;
    std::string artifact_version;
    std::string started_utc;
    std::string finished_utc;
    struct Output {
        std::string file;
        uint64_t bytes = 0;
        std::string fnv1a64;
    };
    std::vector<Output> outputs;

    json to_json() const;
    static Manifest from_json(const json& doc);
};

// Verifies that every file listed in the manifest matches its recorded
// checksum; returns the mismatching file names.
std::vector<std::string> verify_manifest(const std::string& manifest_path);

} // namespace polymer
