#include "pmcal/config.hpp"

#include "pmcal/csv_io.hpp"
#include "pmcal/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace pmcal {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    while (true) {
        const auto comma = s.find(',');
        const auto item = trim(s.substr(0, comma));
        if (!item.empty()) out.emplace_back(item);
        if (comma == std::string_view::npos) break;
        s.remove_prefix(comma + 1);
    }
    return out;
}

// Scenario instants accept either ISO-8601 UTC or integer epoch seconds.
Timestamp parse_instant(std::string_view text, std::string_view field) {
    if (text.find('T') != std::string_view::npos) {
        try {
            return io::parse_timestamp(text);
        } catch (const ConfigError& e) {
            throw ConfigError(std::string(field) + ": " + e.what());
        }
    }
    return parse_integer(text, field);
}

std::size_t parse_count(std::string_view text, std::string_view field) {
    const auto v = parse_integer(text, field);
    if (v < 0) throw ConfigError(std::string(field) + " must be >= 0");
    return static_cast<std::size_t>(v);
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, std::string_view field) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw ConfigError(std::string(field) + ": '" + std::string(text) + "' is not a number");
    }
    return v;
}

std::int64_t parse_integer(std::string_view text, std::string_view field) {
    text = trim(text);
    std::int64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw ConfigError(std::string(field) + ": '" + std::string(text) + "' is not an integer");
    }
    return v;
}

bool parse_bool(std::string_view text, std::string_view field) {
    text = trim(text);
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError(std::string(field) + ": '" + std::string(text) + "' is not a boolean");
}

std::vector<KeyValue> parse_key_values(std::string_view text) {
    std::vector<KeyValue> out;
    std::set<std::string, std::less<>> seen;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const auto raw = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        ++line_no;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        if (!seen.insert(std::string(key)).second) {
            throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + std::string(key) + "'");
        }
        out.push_back({std::string(key), std::string(trim(line.substr(eq + 1))), line_no});
    }
    return out;
}

KeyValueMap::KeyValueMap(const std::vector<KeyValue>& entries) {
    for (const auto& e : entries) values_.emplace(e.key, e.value);
}

const std::string* KeyValueMap::find(std::string_view key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return nullptr;
    used_.insert(it->first);
    return &it->second;
}

const std::string& KeyValueMap::require(std::string_view key) const {
    const auto* v = find(key);
    if (v == nullptr) throw ConfigError("missing required key '" + std::string(key) + "'");
    return *v;
}

std::vector<std::string> KeyValueMap::unused() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_) {
        if (!used_.contains(k)) out.push_back(k);
    }
    return out;
}

void KeyValueMap::reject_unused(std::string_view what) const {
    const auto extra = unused();
    if (extra.empty()) return;
    std::string msg = std::string(what) + ": unknown key";
    msg += extra.size() > 1 ? "s " : " ";
    for (std::size_t i = 0; i < extra.size(); ++i) msg += (i ? ", '" : "'") + extra[i] + "'";
    throw ConfigError(msg);
}

std::vector<std::string> KeyValueMap::sections(std::string_view prefix) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_) {
        if (!k.starts_with(prefix)) continue;
        const auto rest = std::string_view(k).substr(prefix.size());
        const auto dot = rest.find('.');
        if (dot == std::string_view::npos || dot == 0) continue;
        std::string name(rest.substr(0, dot));
        if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(std::move(name));
    }
    return out;
}

PipelineConfig parse_pipeline_config(std::string_view text, const std::filesystem::path& base_dir) {
    const KeyValueMap kv(parse_key_values(text));
    PipelineConfig cfg;
    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_absolute() ? path : base_dir / path;
    };

    for (const auto& p : split_list(kv.require("input.candidates"))) cfg.candidates.push_back(resolve(p));
    if (cfg.candidates.empty()) throw ConfigError("input.candidates: no candidate files listed");
    cfg.reference = resolve(kv.require("input.reference"));
    if (const auto* v = kv.find("input.met")) cfg.met = resolve(*v);
    if (const auto* v = kv.find("input.masks")) cfg.masks = resolve(*v);

    if (const auto* v = kv.find("preprocess.average_interval")) {
        cfg.average_interval = parse_integer(*v, "preprocess.average_interval");
        if (cfg.average_interval < 0) throw ConfigError("preprocess.average_interval must be >= 0");
    }
    if (const auto* v = kv.find("preprocess.repair")) cfg.repair = parse_bool(*v, "preprocess.repair");

    if (const auto* v = kv.find("cleanse.enabled")) cfg.cleanse = parse_bool(*v, "cleanse.enabled");
    if (const auto* v = kv.find("cleanse.beta")) cfg.cleanse_config.beta = parse_double(*v, "cleanse.beta");
    if (const auto* v = kv.find("cleanse.c_low")) cfg.cleanse_config.c_low = parse_double(*v, "cleanse.c_low");
    if (const auto* v = kv.find("cleanse.h_low")) cfg.cleanse_config.h_low = parse_double(*v, "cleanse.h_low");
    if (const auto* v = kv.find("cleanse.window_size")) {
        cfg.cleanse_config.window_size = parse_count(*v, "cleanse.window_size");
    }
    if (const auto* v = kv.find("cleanse.fallback_ratio")) {
        cfg.fallback_ratio = parse_double(*v, "cleanse.fallback_ratio");
        if (!(cfg.fallback_ratio > 0.0) || !std::isfinite(cfg.fallback_ratio)) {
            throw ConfigError("cleanse.fallback_ratio must be positive");
        }
    }
    if (const auto* v = kv.find("cleanse.warmup_rows")) cfg.warmup_rows = parse_count(*v, "cleanse.warmup_rows");
    cfg.cleanse_config.validate();

    if (const auto* v = kv.find("models")) {
        cfg.models.clear();
        for (const auto& m : split_list(*v)) {
            const auto kind = calib::parse_model_kind(m);
            if (std::find(cfg.models.begin(), cfg.models.end(), kind) == cfg.models.end()) cfg.models.push_back(kind);
        }
        if (cfg.models.empty()) throw ConfigError("models: no model kinds listed");
    }

    auto& opt = cfg.evaluation.options;
    if (const auto* v = kv.find("eval.floor")) opt.floor = parse_double(*v, "eval.floor");
    if (const auto* v = kv.find("eval.r_threshold")) opt.r_threshold = parse_double(*v, "eval.r_threshold");
    if (const auto* v = kv.find("eval.min_units")) opt.min_units = parse_count(*v, "eval.min_units");
    if (const auto* v = kv.find("eval.lod.rh_max")) opt.lod.rh_max = parse_double(*v, "eval.lod.rh_max");
    if (const auto* v = kv.find("eval.lod.rh_max_fallback")) {
        opt.lod.rh_max_fallback = parse_double(*v, "eval.lod.rh_max_fallback");
    }
    if (const auto* v = kv.find("eval.lod.ref_max")) opt.lod.ref_max = parse_double(*v, "eval.lod.ref_max");
    if (const auto* v = kv.find("eval.lod.k")) opt.lod.k = parse_double(*v, "eval.lod.k");
    if (const auto* v = kv.find("eval.unitwise")) cfg.evaluation.unitwise = parse_bool(*v, "eval.unitwise");
    if (!(opt.floor >= 0.0)) throw ConfigError("eval.floor must be >= 0");
    if (!(opt.r_threshold >= 0.93 && opt.r_threshold <= 0.95)) {
        throw ConfigError("eval.r_threshold must lie in [0.93, 0.95]");
    }
    if (opt.min_units < 2) throw ConfigError("eval.min_units must be at least 2");
    if (!(opt.lod.k > 0.0)) throw ConfigError("eval.lod.k must be positive");

    if (const auto* v = kv.find("output.dir")) cfg.output_dir = resolve(*v);

    kv.reject_unused("pipeline config");
    return cfg;
}

SynthConfig parse_synth_config(std::string_view text) {
    const KeyValueMap kv(parse_key_values(text));
    SynthConfig cfg;
    auto& s = cfg.scenario;

    auto dbl = [&](const std::string& key, double& target) {
        if (const auto* v = kv.find(key)) target = parse_double(*v, key);
    };
    if (const auto* v = kv.find("scenario.start")) s.start = parse_instant(*v, "scenario.start");
    if (const auto* v = kv.find("scenario.duration_s")) s.duration_s = parse_integer(*v, "scenario.duration_s");
    if (const auto* v = kv.find("scenario.duration_days")) {
        s.duration_s = parse_integer(*v, "scenario.duration_days") * 86400;
    }
    if (const auto* v = kv.find("scenario.interval_s")) s.interval_s = parse_integer(*v, "scenario.interval_s");
    dbl("scenario.level", s.level);
    dbl("scenario.reversion_rate", s.reversion_rate);
    dbl("scenario.volatility", s.volatility);
    dbl("scenario.pm1_fraction", s.pm1_fraction);
    dbl("scenario.pm10_ratio", s.pm10_ratio);
    dbl("scenario.rh.mean", s.rh.mean);
    dbl("scenario.rh.amplitude", s.rh.amplitude);
    dbl("scenario.rh.phase_s", s.rh.phase_s);
    dbl("scenario.temp.mean", s.temp.mean);
    dbl("scenario.temp.amplitude", s.temp.amplitude);
    dbl("scenario.temp.phase_s", s.temp.phase_s);
    dbl("scenario.fog_rh", s.fog_rh);

    auto fog_names = kv.sections("fog.");
    std::sort(fog_names.begin(), fog_names.end());
    for (const auto& name : fog_names) {
        const std::string p = "fog." + name + ".";
        synth::FogEvent ev;
        ev.window.start = parse_instant(kv.require(p + "start"), p + "start");
        ev.window.end = parse_instant(kv.require(p + "end"), p + "end");
        ev.droplet_loading = parse_double(kv.require(p + "loading"), p + "loading");
        s.fog_events.push_back(ev);
    }
    std::sort(s.fog_events.begin(), s.fog_events.end(),
              [](const auto& a, const auto& b) { return a.window.start < b.window.start; });

    auto sensor_names = kv.sections("sensor.");
    std::sort(sensor_names.begin(), sensor_names.end());
    for (const auto& name : sensor_names) {
        const std::string p = "sensor." + name + ".";
        SensorSpec spec{name, {}};
        dbl(p + "gain", spec.profile.gain);
        dbl(p + "offset", spec.profile.offset);
        dbl(p + "noise_sd", spec.profile.noise_sd);
        dbl(p + "deliquescence_rh", spec.profile.deliquescence_rh);
        dbl(p + "hygro_coeff", spec.profile.hygro_coeff);
        dbl(p + "condensation_susceptibility", spec.profile.condensation_susceptibility);
        try {
            spec.profile.validate();
        } catch (const ConfigError& e) {
            throw ConfigError("sensor." + name + ": " + e.what());
        }
        cfg.sensors.push_back(std::move(spec));
    }
    if (cfg.sensors.empty()) cfg.sensors.push_back({"candidate", {}});

    kv.reject_unused("scenario");
    s.validate();
    return cfg;
}

}  // namespace pmcal
