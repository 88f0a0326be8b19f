#pragma once

#include <string>
#include <vector>

#include "polymer/config.hpp"
#include "polymer/estimators.hpp"

namespace polymer {

inline constexpr const char* kArtifactVersion = "0.1.0";

std::string format_double(double v); // %.17g, round-trip exact
std::string csv_escape(const std::string& cell);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// Small-instance equivalence battery: engine and sampling against the
// enumeration oracle. Fault injection exists for the negative-control test.
enum class FaultInjection { None, FlipFreeEnergySign };

struct ValidationCheck {
    std::string name;
    int instances = 0;
    int failures = 0;
    double worst_error = 0.0;
    bool pass() const { return failures == 0; }
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass())
                return false;
        return true;
    }
};

ValidationReport validate_against_oracle(uint64_t seed, int instance_count,
                                         FaultInjection fault = FaultInjection::None);

// Dispatches the config to the matching estimator, writes summary.csv,
// replicates.csv and manifest.json (plus optional environment snapshots),
// and prints a one-line summary per parameter point. Returns the process
// exit status (nonzero only for a failing validate run).
int run_experiment(const ExperimentConfig& config, bool quiet = false);

} // namespace polymer
