#pragma once

#include "pmcal/csv_io.hpp"

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <vector>

namespace pmcal::cli {

struct CommandResult {
    std::vector<io::Diagnostic> diagnostics;

    bool has_errors() const;
    /// Nonzero iff an error diagnostic was produced.
    int exit_code() const { return has_errors() ? 1 : 0; }
};

/// Validates each CSV and prints a per-file summary to `log`. With a non-empty `out_dir` the
/// validated series and `ingest_report.csv` are written there.
CommandResult cmd_ingest(const std::vector<std::filesystem::path>& paths,
                         const std::filesystem::path& out_dir, std::ostream& log);

/// Emits reference.csv, met.csv, one CSV per sensor and `<sensor>_fog_labels.csv`.
CommandResult cmd_synth(const std::filesystem::path& scenario, std::uint64_t seed,
                        const std::filesystem::path& out_dir, std::ostream& log);

/// Full pipeline; `out_override` replaces `output.dir` when non-empty.
CommandResult cmd_run(const std::filesystem::path& config, const std::filesystem::path& out_override,
                      std::ostream& log);

}  // namespace pmcal::cli
