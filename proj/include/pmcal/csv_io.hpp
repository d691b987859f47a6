#pragma once

#include "pmcal/cleanse.hpp"
#include "pmcal/timeseries.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pmcal::io {

enum class Severity { Warning, Error };

struct Diagnostic {
    Severity severity = Severity::Warning;
    std::string source;
    std::size_t line = 0;  // 0 when not tied to a line
    std::string message;

    std::string str() const;
};

/// `YYYY-MM-DDTHH:MM:SSZ`; anything else throws ConfigError.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp t);

struct ParsedSeries {
    Series series;
    std::vector<Diagnostic> diagnostics;
    std::size_t data_rows = 0;     // non-empty lines after the header
    std::size_t invalid_rows = 0;  // kept but marked invalid
    std::size_t skipped_rows = 0;  // unparseable, out of order or off-grid
};

/// Header must be `timestamp,pm1,pm25,pm10,temp,rh` with optional trailing `adc`; a bad header
/// throws ConfigError. Row problems become warnings. The sampling interval is the smallest gap
/// between consecutive rows (60 s when fewer than two rows parse).
ParsedSeries parse_series_csv(std::string_view text, std::string device_id, std::string_view source = "");

/// Writes every sample, invalid ones included; the adc column appears when any sample has adc.
std::string write_series_csv(const Series& series);

ParsedSeries read_series_file(const std::filesystem::path& path);

/// Header `start,end`, one half-open window per row.
IntervalMask parse_mask_csv(std::string_view text, std::string_view source = "");

/// Header `timestamp,fog_flag`; only labelled rows are listed.
std::string write_fog_labels(const std::vector<Timestamp>& fog_rows);
std::vector<Timestamp> parse_fog_labels(std::string_view text, std::string_view source = "");

/// Header `timestamp,ratio,window_mean,window_sd,verdict,note`.
std::string write_audit_csv(const std::vector<cleanse::AuditRow>& audit);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace pmcal::io
