#include "pmcal/commands.hpp"

#include "pmcal/calibrate.hpp"
#include "pmcal/cleanse.hpp"
#include "pmcal/config.hpp"
#include "pmcal/error.hpp"
#include "pmcal/evaluate.hpp"
#include "pmcal/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

namespace fs = std::filesystem;

namespace pmcal::cli {

namespace {

// Builds artifacts in `<out>.partial` and renames on success; the staging dir is removed otherwise.
class StagedOutput {
public:
    explicit StagedOutput(fs::path final_dir) : final_(std::move(final_dir)) {
        if (final_.empty()) throw ConfigError("no output directory given (use --out)");
        if (fs::exists(final_) && !(fs::is_directory(final_) && fs::is_empty(final_))) {
            throw ConfigError("output directory '" + final_.string() + "' exists and is not empty");
        }
        partial_ = final_;
        partial_ += ".partial";
        fs::remove_all(partial_);
        fs::create_directories(partial_);
    }
    StagedOutput(const StagedOutput&) = delete;
    StagedOutput& operator=(const StagedOutput&) = delete;

    ~StagedOutput() {
        if (!committed_) {
            std::error_code ec;
            fs::remove_all(partial_, ec);
        }
    }

    const fs::path& dir() const { return partial_; }

    void commit() {
        if (fs::exists(final_)) fs::remove(final_);  // known to be an empty directory
        fs::rename(partial_, final_);
        committed_ = true;
    }

private:
    fs::path final_;
    fs::path partial_;
    bool committed_ = false;
};

class StageError : public Error {
public:
    using Error::Error;
};

template <class F>
auto stage(const std::string& name, F&& body) {
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError("stage '" + name + "': " + e.what());
    }
}

void report_diagnostics(const std::vector<io::Diagnostic>& diags, CommandResult& result, std::ostream& log) {
    for (const auto& d : diags) {
        log << d.str() << '\n';
        result.diagnostics.push_back(d);
    }
}

void fail(CommandResult& result, std::ostream& log, std::string message) {
    io::Diagnostic d{io::Severity::Error, "", 0, std::move(message)};
    log << d.str() << '\n';
    result.diagnostics.push_back(std::move(d));
}

std::string pct(double v) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(1);
    os << v;
    return os.str();
}

std::optional<double> series_completeness(const Series& s) {
    if (s.empty()) return std::nullopt;
    const auto schedule = grid_schedule(s.samples.front().timestamp, s.samples.back().timestamp + s.interval, s.interval);
    return completeness(s, schedule);
}

// Histogram over contiguous bins of `width`; empty bins between the extremes are kept.
std::string histogram_csv(const std::vector<double>& values, double width) {
    std::string out = "bin_lower,bin_upper,count\n";
    if (values.empty()) return out;
    std::map<std::int64_t, std::size_t> counts;
    for (double v : values) ++counts[static_cast<std::int64_t>(std::floor(v / width))];
    for (auto k = counts.begin()->first; k <= counts.rbegin()->first; ++k) {
        const auto it = counts.find(k);
        out += format_double(static_cast<double>(k) * width) + ',' + format_double(static_cast<double>(k + 1) * width) +
               ',' + std::to_string(it == counts.end() ? 0 : it->second) + '\n';
    }
    return out;
}

std::string opt_cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

struct CandidateState {
    std::string name;
    Series raw;
    Series prepared;  // masked, repaired, averaged, cleansed
    std::optional<cleanse::CleanseResult> cleansing;
    bool physical = true;  // false for the fleet average
};

struct ModelOutcome {
    calib::FittedModel model;
    CollocatedPairs pairs;
    std::vector<double> calibrated;
    double eta = 0.0;
};

}  // namespace

bool CommandResult::has_errors() const {
    return std::any_of(diagnostics.begin(), diagnostics.end(),
                       [](const io::Diagnostic& d) { return d.severity == io::Severity::Error; });
}

CommandResult cmd_ingest(const std::vector<fs::path>& paths, const fs::path& out_dir, std::ostream& log) {
    CommandResult result;
    if (paths.empty()) {
        fail(result, log, "ingest: no input files");
        return result;
    }
    std::string report = "file,rows,valid,invalid,skipped,completeness,status\n";
    std::vector<std::pair<std::string, std::string>> validated;
    for (const auto& path : paths) {
        const std::string name = path.filename().string();
        try {
            auto parsed = io::read_series_file(path);
            report_diagnostics(parsed.diagnostics, result, log);
            const auto eta = series_completeness(parsed.series);
            const auto valid = parsed.series.valid_count();
            log << name << ": " << parsed.data_rows << " rows, " << valid << " valid, " << parsed.invalid_rows
                << " invalid, " << parsed.skipped_rows << " skipped, completeness "
                << (eta ? pct(*eta) + "%" : std::string("n/a")) << '\n';
            report += name + ',' + std::to_string(parsed.data_rows) + ',' + std::to_string(valid) + ',' +
                      std::to_string(parsed.invalid_rows) + ',' + std::to_string(parsed.skipped_rows) + ',' +
                      opt_cell(eta) + ",ok\n";
            validated.emplace_back(name, io::write_series_csv(parsed.series));
        } catch (const std::exception& e) {
            fail(result, log, name + ": " + e.what());
            report += name + ",,,,,,rejected\n";
        }
    }
    if (!out_dir.empty()) {
        try {
            StagedOutput out(out_dir);
            for (const auto& [name, text] : validated) io::write_text_file(out.dir() / name, text);
            io::write_text_file(out.dir() / "ingest_report.csv", report);
            out.commit();
        } catch (const std::exception& e) {
            fail(result, log, std::string("ingest: ") + e.what());
        }
    }
    return result;
}

CommandResult cmd_synth(const fs::path& scenario_path, std::uint64_t seed, const fs::path& out_dir,
                        std::ostream& log) {
    CommandResult result;
    try {
        const auto cfg = stage("scenario", [&] {
            return scenario_path.empty() ? parse_synth_config("") : parse_synth_config(io::read_text_file(scenario_path));
        });
        StagedOutput out(out_dir);

        // One master stream hands out the per-component seeds.
        std::mt19937_64 master(seed);
        const std::uint64_t truth_seed = master();
        const auto truth = stage("truth", [&] { return synth::generate_truth(cfg.scenario, truth_seed); });

        Series reference = truth.reference;
        reference.device_id = "reference";
        Series met = truth.met;
        met.device_id = "met";
        io::write_text_file(out.dir() / "reference.csv", io::write_series_csv(reference));
        io::write_text_file(out.dir() / "met.csv", io::write_series_csv(met));

        for (const auto& sensor : cfg.sensors) {
            const std::uint64_t sensor_seed = master();
            auto rendering = stage("sensor " + sensor.name, [&] {
                return synth::simulate_sensor(truth.reference, truth.met, sensor.profile, cfg.scenario.fog_events,
                                              sensor_seed);
            });
            rendering.sensor.device_id = sensor.name;
            io::write_text_file(out.dir() / (sensor.name + ".csv"), io::write_series_csv(rendering.sensor));
            io::write_text_file(out.dir() / (sensor.name + "_fog_labels.csv"), io::write_fog_labels(rendering.fog_rows));
            log << sensor.name << ": " << rendering.sensor.size() << " rows, " << rendering.fog_rows.size()
                << " fog-affected\n";
        }
        out.commit();
    } catch (const std::exception& e) {
        fail(result, log, std::string("synth: ") + e.what());
    }
    return result;
}

CommandResult cmd_run(const fs::path& config_path, const fs::path& out_override, std::ostream& log) {
    CommandResult result;
    try {
        const auto cfg = stage("config", [&] {
            return parse_pipeline_config(io::read_text_file(config_path), config_path.parent_path());
        });
        StagedOutput out(out_override.empty() ? cfg.output_dir : out_override);

        auto load = [&](const fs::path& path) {
            return stage("ingest " + path.filename().string(), [&] {
                auto parsed = io::read_series_file(path);
                report_diagnostics(parsed.diagnostics, result, log);
                return parsed.series;
            });
        };

        Series reference = load(cfg.reference);
        std::optional<Series> met;
        if (!cfg.met.empty()) met = load(cfg.met);
        std::vector<CandidateState> candidates;
        for (const auto& path : cfg.candidates) {
            CandidateState c;
            c.raw = load(path);
            c.name = c.raw.device_id;
            if (std::any_of(candidates.begin(), candidates.end(), [&](const auto& o) { return o.name == c.name; })) {
                throw StageError("stage 'config': duplicate candidate name '" + c.name + "'");
            }
            candidates.push_back(std::move(c));
        }

        IntervalMask mask;
        if (!cfg.masks.empty()) {
            mask = stage("masks", [&] { return io::parse_mask_csv(io::read_text_file(cfg.masks), cfg.masks.string()); });
        }

        auto preprocess = [&](const Series& s, bool repair) {
            return stage("preprocess " + s.device_id, [&] {
                Series out_series = apply_mask(s, mask).series;
                if (repair) out_series = repair_last_valid(out_series).series;
                if (cfg.average_interval > 0 && cfg.average_interval != out_series.interval) {
                    out_series = average_interval(out_series, cfg.average_interval);
                }
                return out_series;
            });
        };

        reference = preprocess(reference, false);
        if (met) met = preprocess(*met, false);
        for (auto& c : candidates) {
            c.prepared = preprocess(c.raw, cfg.repair);
            if (!cfg.cleanse) continue;
            stage("cleanse " + c.name, [&] {
                const Series& rh_source = met ? *met : c.prepared;
                std::vector<cleanse::WarmupRow> warmup;
                for (std::size_t i = 0; i < std::min(cfg.warmup_rows, c.prepared.size()); ++i) {
                    const Sample& s = c.prepared.samples[i];
                    const Sample* m = rh_source.find(s.timestamp);
                    if (s.valid && s.pm1 && s.pm25 && s.pm10 && m && m->rh) {
                        warmup.push_back({*s.pm1, *s.pm25, *s.pm10, *m->rh});
                    }
                }
                auto init = cleanse::init_window(warmup, cfg.cleanse_config, cfg.fallback_ratio);
                c.cleansing = cleanse::cleanse_series(c.prepared, rh_source, cfg.cleanse_config, std::move(init));
                c.prepared = c.cleansing->cleansed;
                log << c.name << ": cleansing rejected " << c.cleansing->rejected.size() << " of "
                    << c.cleansing->audit.size() << " rows\n";
            });
        }

        const auto& opts = cfg.evaluation.options;
        std::size_t physical_count = candidates.size();
        if (cfg.evaluation.unitwise && physical_count >= opts.min_units) {
            stage("unitwise", [&] {
                std::vector<Series> fleet;
                for (const auto& c : candidates) fleet.push_back(c.prepared);
                CandidateState u;
                u.name = "unitwise";
                u.physical = false;
                u.prepared = unitwise_average(fleet, opts.min_units);
                u.raw = u.prepared;
                candidates.push_back(std::move(u));
            });
        }

        const auto& candidate_cov = [&](const CandidateState& c) -> const Series& { return met ? *met : c.prepared; };

        // outcomes[model][candidate]
        std::vector<std::vector<ModelOutcome>> outcomes(cfg.models.size());
        for (std::size_t m = 0; m < cfg.models.size(); ++m) {
            const auto kind = cfg.models[m];
            const std::string mname(calib::model_name(kind));
            for (const auto& c : candidates) {
                outcomes[m].push_back(stage("fit " + mname + " " + c.name, [&] {
                    const Series& cov = candidate_cov(c);
                    auto has_column = [&](Channel ch) {
                        return std::any_of(cov.samples.begin(), cov.samples.end(),
                                           [&](const Sample& s) { return s[ch].has_value(); });
                    };
                    if (calib::needs_rh(kind) && !has_column(Channel::Rh)) {
                        throw ConfigError(mname + " requires the 'rh' column, which '" + cov.device_id + "' lacks");
                    }
                    if (calib::needs_temp(kind) && !has_column(Channel::Temp)) {
                        throw ConfigError(mname + " requires the 'temp' column, which '" + cov.device_id + "' lacks");
                    }
                    AlignOptions align;
                    align.require_rh = calib::needs_rh(kind);
                    align.require_temp = calib::needs_temp(kind);
                    ModelOutcome o;
                    o.pairs = align_collocated(c.prepared, reference, cov, align);
                    o.model = calib::fit(kind, o.pairs);
                    o.calibrated = calib::predict(o.model, o.pairs);
                    if (!reference.empty()) {
                        const auto schedule = grid_schedule(reference.samples.front().timestamp,
                                                            reference.samples.back().timestamp + reference.interval,
                                                            c.raw.interval);
                        o.eta = completeness(c.raw, schedule);
                    }
                    return o;
                }));
            }
        }

        std::string report_csv = eval::report_csv_header() + '\n';
        for (const auto& c : candidates) fs::create_directories(out.dir() / c.name);
        for (std::size_t m = 0; m < cfg.models.size(); ++m) {
            const std::string mname(calib::model_name(cfg.models[m]));

            std::optional<eval::FleetInputs> fleet;
            if (physical_count >= opts.min_units) {
                std::vector<Series> calibrated_fleet;
                for (std::size_t i = 0; i < physical_count; ++i) {
                    Series s;
                    s.device_id = candidates[i].name;
                    s.interval = candidates[i].prepared.interval;
                    const auto& o = outcomes[m][i];
                    for (std::size_t r = 0; r < o.pairs.size(); ++r) {
                        Sample smp;
                        smp.timestamp = o.pairs.timestamps[r];
                        smp.pm25 = o.calibrated[r];
                        s.samples.push_back(smp);
                    }
                    calibrated_fleet.push_back(std::move(s));
                }
                fleet = eval::FleetInputs{fleet_sets(calibrated_fleet, Channel::Pm25), reference};
            }

            for (std::size_t i = 0; i < candidates.size(); ++i) {
                const auto& c = candidates[i];
                const auto& o = outcomes[m][i];
                const fs::path dir = out.dir() / c.name;
                stage("evaluate " + mname + " " + c.name, [&] {
                    CollocatedPairs calibrated = o.pairs;
                    calibrated.x = o.calibrated;
                    const auto report = eval::evaluate(calibrated, o.eta, opts, fleet ? &*fleet : nullptr);
                    report_csv += eval::report_csv_row(c.name, mname, report) + '\n';
                    io::write_text_file(dir / ("model_" + mname + ".txt"), calib::serialize(o.model));
                    io::write_text_file(dir / ("report_" + mname + ".txt"), eval::to_key_values(report));

                    std::string scatter = "timestamp,x,y,rh,calibrated\n";
                    std::string resid_rh = "timestamp,rh,residual,relative_residual\n";
                    std::vector<double> residuals;
                    std::vector<double> relative;
                    for (std::size_t r = 0; r < o.pairs.size(); ++r) {
                        const auto ts = io::format_timestamp(o.pairs.timestamps[r]);
                        const double x = o.pairs.x[r];
                        const double y = o.pairs.y[r];
                        const double cal = o.calibrated[r];
                        scatter += ts + ',' + format_double(x) + ',' + format_double(y) + ',' +
                                   opt_cell(o.pairs.rh[r]) + ',' + format_double(cal) + '\n';
                        residuals.push_back(cal - y);
                        std::optional<double> rel;
                        if (cal >= opts.floor && y >= opts.floor) {
                            rel = 100.0 * (cal - y) / y;
                            relative.push_back(*rel);
                        }
                        resid_rh += ts + ',' + opt_cell(o.pairs.rh[r]) + ',' + format_double(cal - y) + ',' +
                                    opt_cell(rel) + '\n';
                    }
                    io::write_text_file(dir / ("scatter_" + mname + ".csv"), scatter);
                    io::write_text_file(dir / ("residual_rh_" + mname + ".csv"), resid_rh);
                    io::write_text_file(dir / ("hist_residual_" + mname + ".csv"), histogram_csv(residuals, 1.0));
                    io::write_text_file(dir / ("hist_relative_" + mname + ".csv"), histogram_csv(relative, 1.0));
                    return 0;
                });
            }
        }

        for (const auto& c : candidates) {
            io::write_text_file(out.dir() / c.name / "cleansed.csv", io::write_series_csv(c.prepared));
            if (c.cleansing) io::write_text_file(out.dir() / c.name / "audit.csv", io::write_audit_csv(c.cleansing->audit));
        }
        io::write_text_file(out.dir() / "report.csv", report_csv);
        out.commit();
        log << "wrote " << candidates.size() << " candidate(s) x " << cfg.models.size() << " model(s)\n";
    } catch (const std::exception& e) {
        fail(result, log, e.what());
    }
    return result;
}

}  // namespace pmcal::cli
