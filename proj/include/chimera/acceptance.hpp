#pragma once

#include "chimera/driver.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace chimera {

enum class Verdict { Pass, Fail, Skip };

struct CriterionResult {
    std::string name;
    Verdict verdict = Verdict::Fail;
    std::string detail;

    /// `PASS name: detail`
    std::string line() const;
};

// Each check runs its benchmark cases with their step logs written under `work`.

/// Property checks of the discrete operators on generated meshes.
CriterionResult check_operator_suite(std::uint64_t seed, int trials = 20);
CriterionResult check_free_stream(const std::filesystem::path& work);
CriterionResult check_poiseuille(const std::filesystem::path& work);
CriterionResult check_taylor_green(const std::filesystem::path& work);
CriterionResult check_temporal_order(const std::filesystem::path& work);
CriterionResult check_lid_cavity(const std::filesystem::path& work);
CriterionResult check_cylinder(const std::filesystem::path& work);

/// Reads every steps*.csv below `work` and bounds the scaled projection divergence.
CriterionResult check_divergence(const std::filesystem::path& work, double limit = 1e-7);

struct SuiteOptions {
    std::filesystem::path work = "acceptance_work";
    std::uint64_t seed = 20240611;
    bool slow = true;       ///< lid-driven cavity (minutes)
    bool cylinder = false;  ///< long steady-cylinder run
    bool fast_only = false; ///< skips every run longer than a few seconds
};

/// Runs the selected criteria, printing one line per criterion as it completes.
std::vector<CriterionResult> run_acceptance(const SuiteOptions& opt, std::ostream& out);

} // namespace chimera
