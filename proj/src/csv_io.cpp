#include "pmcal/csv_io.hpp"

#include "pmcal/config.hpp"
#include "pmcal/error.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pmcal::io {

namespace {

constexpr std::array<Channel, 6> kColumns{Channel::Pm1, Channel::Pm25, Channel::Pm10,
                                          Channel::Temp, Channel::Rh, Channel::Adc};
constexpr std::string_view kHeader = "timestamp,pm1,pm25,pm10,temp,rh";

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    while (true) {
        const auto comma = line.find(',');
        out.push_back(line.substr(0, comma));
        if (comma == std::string_view::npos) break;
        line.remove_prefix(comma + 1);
    }
    return out;
}

// Iterates LF-separated lines, tolerating a trailing CR.
class LineReader {
public:
    explicit LineReader(std::string_view text) : text_(text) {}

    bool next(std::string_view& line) {
        if (pos_ >= text_.size()) return false;
        const auto nl = text_.find('\n', pos_);
        const auto end = nl == std::string_view::npos ? text_.size() : nl;
        line = text_.substr(pos_, end - pos_);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos_ = end + 1;
        ++number_;
        return true;
    }
    std::size_t number() const { return number_; }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t number_ = 0;
};

std::int64_t two_digits(std::string_view s, std::size_t at) {
    return (s[at] - '0') * 10 + (s[at + 1] - '0');
}

std::int64_t floor_mod(std::int64_t a, std::int64_t m) {
    const std::int64_t r = a % m;
    return r < 0 ? r + m : r;
}

struct RawRow {
    std::size_t line = 0;
    Sample sample;
};

}  // namespace

std::string Diagnostic::str() const {
    std::string out = source.empty() ? std::string("<input>") : source;
    if (line > 0) out += ":" + std::to_string(line);
    out += severity == Severity::Error ? ": error: " : ": warning: ";
    out += message;
    return out;
}

Timestamp parse_timestamp(std::string_view s) {
    using namespace std::chrono;
    const auto bad = [&] { return ConfigError("malformed timestamp '" + std::string(s) + "'"); };
    if (s.size() != 20 || s[4] != '-' || s[7] != '-' || s[10] != 'T' || s[13] != ':' || s[16] != ':' ||
        s[19] != 'Z') {
        throw bad();
    }
    for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9, 11, 12, 14, 15, 17, 18}) {
        if (s[i] < '0' || s[i] > '9') throw bad();
    }
    const int y = static_cast<int>(two_digits(s, 0) * 100 + two_digits(s, 2));
    const auto ymd = year{y} / month{static_cast<unsigned>(two_digits(s, 5))} /
                     day{static_cast<unsigned>(two_digits(s, 8))};
    const auto hh = two_digits(s, 11);
    const auto mm = two_digits(s, 14);
    const auto ss = two_digits(s, 17);
    if (!ymd.ok() || hh > 23 || mm > 59 || ss > 59) throw bad();
    return sys_days{ymd}.time_since_epoch().count() * 86400 + hh * 3600 + mm * 60 + ss;
}

std::string format_timestamp(Timestamp t) {
    using namespace std::chrono;
    const auto days_since = (t - floor_mod(t, 86400)) / 86400;
    const auto secs = floor_mod(t, 86400);
    const year_month_day ymd{sys_days{days{days_since}}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(secs / 3600), static_cast<int>(secs / 60 % 60), static_cast<int>(secs % 60));
    return buf;
}

ParsedSeries parse_series_csv(std::string_view text, std::string device_id, std::string_view source) {
    ParsedSeries out;
    out.series.device_id = std::move(device_id);
    const std::string src(source);
    auto warn = [&](std::size_t line, std::string msg) {
        out.diagnostics.push_back({Severity::Warning, src, line, std::move(msg)});
    };

    LineReader reader(text);
    std::string_view line;
    if (!reader.next(line)) throw ConfigError(src + ": empty file (missing header)");
    bool has_adc = false;
    if (line == std::string(kHeader) + ",adc") {
        has_adc = true;
    } else if (line != kHeader) {
        throw ConfigError(src + ":1: invalid header '" + std::string(line) + "', expected '" +
                          std::string(kHeader) + "[,adc]'");
    }
    const std::size_t width = has_adc ? 7 : 6;

    std::vector<RawRow> rows;
    while (reader.next(line)) {
        if (line.empty()) continue;
        ++out.data_rows;
        const auto fields = split_fields(line);
        if (fields.size() != width) {
            warn(reader.number(), "expected " + std::to_string(width) + " fields, got " +
                                      std::to_string(fields.size()) + "; row skipped");
            ++out.skipped_rows;
            continue;
        }
        RawRow row{reader.number(), {}};
        try {
            row.sample.timestamp = parse_timestamp(fields[0]);
            for (std::size_t c = 0; c + 1 < width; ++c) {
                if (!fields[c + 1].empty()) {
                    row.sample[kColumns[c]] = parse_double(fields[c + 1], channel_name(kColumns[c]));
                }
            }
        } catch (const ConfigError& e) {
            warn(reader.number(), std::string(e.what()) + "; row skipped");
            ++out.skipped_rows;
            continue;
        }
        const auto violations = sample_violations(row.sample);
        if (!violations.empty()) {
            std::string msg = "row marked invalid:";
            for (const auto& v : violations) msg += " " + v + ";";
            msg.pop_back();
            warn(row.line, msg);
            row.sample.valid = false;
            ++out.invalid_rows;
        }
        rows.push_back(std::move(row));
    }

    // Drop rows that break strict ordering before inferring the grid.
    std::vector<RawRow> ordered;
    for (auto& r : rows) {
        if (!ordered.empty() && r.sample.timestamp <= ordered.back().sample.timestamp) {
            warn(r.line, "timestamp not after the previous row; row skipped");
            ++out.skipped_rows;
            if (!r.sample.valid) --out.invalid_rows;
            continue;
        }
        ordered.push_back(std::move(r));
    }

    std::int64_t interval = 0;
    for (std::size_t i = 1; i < ordered.size(); ++i) {
        const auto gap = ordered[i].sample.timestamp - ordered[i - 1].sample.timestamp;
        if (interval == 0 || gap < interval) interval = gap;
    }
    out.series.interval = interval > 0 ? interval : 60;

    if (!ordered.empty()) {
        const auto phase = floor_mod(ordered.front().sample.timestamp, out.series.interval);
        for (auto& r : ordered) {
            if (floor_mod(r.sample.timestamp, out.series.interval) != phase) {
                warn(r.line, "timestamp off the " + std::to_string(out.series.interval) + " s grid; row skipped");
                ++out.skipped_rows;
                if (!r.sample.valid) --out.invalid_rows;
                continue;
            }
            out.series.samples.push_back(r.sample);
        }
    }
    return out;
}

std::string write_series_csv(const Series& series) {
    const bool has_adc = std::any_of(series.samples.begin(), series.samples.end(),
                                     [](const Sample& s) { return s.adc.has_value(); });
    std::string out(kHeader);
    if (has_adc) out += ",adc";
    out += '\n';
    const std::size_t width = has_adc ? 6 : 5;
    for (const auto& s : series.samples) {
        out += format_timestamp(s.timestamp);
        for (std::size_t c = 0; c < width; ++c) {
            out += ',';
            if (const auto& v = s[kColumns[c]]) out += format_double(*v);
        }
        out += '\n';
    }
    return out;
}

ParsedSeries read_series_file(const std::filesystem::path& path) {
    return parse_series_csv(read_text_file(path), path.stem().string(), path.string());
}

IntervalMask parse_mask_csv(std::string_view text, std::string_view source) {
    const std::string src(source);
    LineReader reader(text);
    std::string_view line;
    if (!reader.next(line) || line != "start,end") {
        throw ConfigError(src + ":1: mask file header must be 'start,end'");
    }
    std::vector<TimeWindow> windows;
    while (reader.next(line)) {
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        const auto where = src + ":" + std::to_string(reader.number()) + ": ";
        if (fields.size() != 2) throw ConfigError(where + "expected 2 fields");
        try {
            const TimeWindow w{parse_timestamp(fields[0]), parse_timestamp(fields[1])};
            if (w.start >= w.end) throw ConfigError("window start must precede its end");
            windows.push_back(w);
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
    return IntervalMask(std::move(windows));
}

std::string write_fog_labels(const std::vector<Timestamp>& fog_rows) {
    std::string out = "timestamp,fog_flag\n";
    for (const auto t : fog_rows) out += format_timestamp(t) + ",1\n";
    return out;
}

std::vector<Timestamp> parse_fog_labels(std::string_view text, std::string_view source) {
    const std::string src(source);
    LineReader reader(text);
    std::string_view line;
    if (!reader.next(line) || line != "timestamp,fog_flag") {
        throw ConfigError(src + ":1: label file header must be 'timestamp,fog_flag'");
    }
    std::vector<Timestamp> out;
    while (reader.next(line)) {
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        const auto where = src + ":" + std::to_string(reader.number()) + ": ";
        if (fields.size() != 2) throw ConfigError(where + "expected 2 fields");
        try {
            const auto t = parse_timestamp(fields[0]);
            if (parse_bool(fields[1], "fog_flag")) out.push_back(t);
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
    return out;
}

std::string write_audit_csv(const std::vector<cleanse::AuditRow>& audit) {
    std::string out = "timestamp,ratio,window_mean,window_sd,verdict,note\n";
    for (const auto& row : audit) {
        const auto& d = row.decision;
        out += format_timestamp(row.timestamp);
        out += ',';
        if (d.ratio) out += format_double(*d.ratio);
        out += ',' + format_double(d.window_mean) + ',' + format_double(d.window_sd) + ',';
        out += cleanse::verdict_name(d.verdict);
        out += ',';
        out += cleanse::note_name(d.note);
        out += '\n';
    }
    return out;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace pmcal::io
