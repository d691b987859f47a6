#include "pmcal/csv_io.hpp"

#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("pmcal_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

struct Run {
    int status;
    std::string log;
};

Run run(const std::string& args, const fs::path& log_file) {
    const std::string cmd = std::string(PMCAL_CLI_PATH) + " " + args + " > " + log_file.string() + " 2>&1";
    const int raw = std::system(cmd.c_str());
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, pmcal::io::read_text_file(log_file)};
}

void write(const fs::path& p, const std::string& text) { pmcal::io::write_text_file(p, text); }

std::string read(const fs::path& p) { return pmcal::io::read_text_file(p); }

std::size_t line_count(const fs::path& p) {
    const std::string t = read(p);
    return static_cast<std::size_t>(std::count(t.begin(), t.end(), '\n'));
}

const char* kScenario =
    "scenario.start = 2021-03-01T00:00:00Z\n"
    "scenario.duration_days = 2\n"
    "scenario.interval_s = 60\n"
    "scenario.temp.phase_s = 21600\n"
    "fog.a.start = 2021-03-01T04:00:00Z\n"
    "fog.a.end = 2021-03-01T05:00:00Z\n"
    "fog.a.loading = 60\n"
    "sensor.s1.gain = 1.3\n"
    "sensor.s1.offset = 2\n"
    "sensor.s1.noise_sd = 1\n"
    "sensor.s1.condensation_susceptibility = 1\n"
    "sensor.s2.gain = 0.9\n"
    "sensor.s2.noise_sd = 1\n";

// Shared dir tree compared across two invocations.
std::string tree_digest(const fs::path& root) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::string out;
    for (const auto& f : files) out += fs::relative(f, root).string() + "\n" + read(f) + "\n";
    return out;
}

}  // namespace

TEST_CASE("synth is deterministic per seed and emits every series") {
    TempDir tmp;
    write(tmp.path / "scenario.txt", kScenario);
    const auto a = run("synth --config " + (tmp.path / "scenario.txt").string() + " --seed 7 --out " +
                           (tmp.path / "a").string(),
                       tmp.path / "log");
    REQUIRE(a.status == 0);
    const auto b = run("synth --config " + (tmp.path / "scenario.txt").string() + " --seed 7 --out " +
                           (tmp.path / "b").string(),
                       tmp.path / "log");
    REQUIRE(b.status == 0);
    CHECK(tree_digest(tmp.path / "a") == tree_digest(tmp.path / "b"));
    for (const char* f : {"reference.csv", "met.csv", "s1.csv", "s2.csv", "s1_fog_labels.csv", "s2_fog_labels.csv"}) {
        INFO(f);
        CHECK(fs::exists(tmp.path / "a" / f));
    }
    CHECK(line_count(tmp.path / "a" / "s1.csv") == 2 * 1440 + 1);
    CHECK(line_count(tmp.path / "a" / "s1_fog_labels.csv") == 61);

    run("synth --config " + (tmp.path / "scenario.txt").string() + " --seed 8 --out " + (tmp.path / "c").string(),
        tmp.path / "log");
    CHECK(read(tmp.path / "a" / "s1.csv") != read(tmp.path / "c" / "s1.csv"));
}

TEST_CASE("21-day minute scenario has 30,240 rows and no fog means an empty label file") {
    TempDir tmp;
    write(tmp.path / "scenario.txt", "scenario.duration_days = 21\nscenario.interval_s = 60\n");
    const auto r = run("synth --config " + (tmp.path / "scenario.txt").string() + " --seed 1 --out " +
                           (tmp.path / "o").string(),
                       tmp.path / "log");
    REQUIRE(r.status == 0);
    CHECK(line_count(tmp.path / "o" / "reference.csv") == 30240 + 1);
    CHECK(line_count(tmp.path / "o" / "candidate.csv") == 30240 + 1);
    CHECK(read(tmp.path / "o" / "candidate_fog_labels.csv") == "timestamp,fog_flag\n");
}

TEST_CASE("invalid scenario fields are named") {
    TempDir tmp;
    write(tmp.path / "scenario.txt", "scenario.level = -3\n");
    const auto r = run("synth --config " + (tmp.path / "scenario.txt").string() + " --seed 1 --out " +
                           (tmp.path / "o").string(),
                       tmp.path / "log");
    CHECK(r.status != 0);
    CHECK_THAT(r.log, ContainsSubstring("level"));
    CHECK_FALSE(fs::exists(tmp.path / "o"));
}

TEST_CASE("run is deterministic and writes the artifact set") {
    TempDir tmp;
    write(tmp.path / "scenario.txt", kScenario);
    REQUIRE(run("synth --config " + (tmp.path / "scenario.txt").string() + " --seed 3 --out " +
                    (tmp.path / "data").string(),
                tmp.path / "log")
                .status == 0);
    write(tmp.path / "run.txt",
          "input.candidates = data/s1.csv, data/s2.csv\ninput.reference = data/reference.csv\n"
          "input.met = data/met.csv\nmodels = OLS, MLH\n");
    const auto a = run("run --config " + (tmp.path / "run.txt").string() + " --out " + (tmp.path / "r1").string(),
                       tmp.path / "log");
    INFO(a.log);
    REQUIRE(a.status == 0);
    const auto b = run("run --config " + (tmp.path / "run.txt").string() + " --out " + (tmp.path / "r2").string(),
                       tmp.path / "log");
    REQUIRE(b.status == 0);
    CHECK(tree_digest(tmp.path / "r1") == tree_digest(tmp.path / "r2"));
    for (const char* f : {"report.csv", "s1/cleansed.csv", "s1/audit.csv", "s1/model_MLH.txt", "s1/report_OLS.txt",
                          "s1/scatter_MLH.csv", "s1/residual_rh_OLS.csv", "s1/hist_residual_OLS.csv",
                          "s1/hist_relative_MLH.csv", "s2/model_OLS.txt"}) {
        INFO(f);
        CHECK(fs::exists(tmp.path / "r1" / f));
    }
    CHECK(line_count(tmp.path / "r1" / "report.csv") == 1 + 2 * 2);
    CHECK_FALSE(fs::exists(tmp.path / "r1.partial"));

    // A second run into a populated directory is refused.
    const auto c = run("run --config " + (tmp.path / "run.txt").string() + " --out " + (tmp.path / "r1").string(),
                       tmp.path / "log");
    CHECK(c.status != 0);
}

TEST_CASE("MLH without an rh column names the missing column and leaves no artifacts") {
    TempDir tmp;
    const std::string header = "timestamp,pm1,pm25,pm10,temp,rh\n";
    std::string cand = header, ref = header;
    for (int i = 0; i < 100; ++i) {
        const std::string ts = pmcal::io::format_timestamp(1'600'000'000 + i * 60);
        const double v = 5 + i % 17;
        cand += ts + "," + std::to_string(v * 0.6) + "," + std::to_string(v * 1.2) + "," + std::to_string(v * 1.5) + ",,\n";
        ref += ts + ",," + std::to_string(v) + ",,,\n";
    }
    write(tmp.path / "cand.csv", cand);
    write(tmp.path / "ref.csv", ref);
    write(tmp.path / "run.txt", "input.candidates = cand.csv\ninput.reference = ref.csv\nmodels = MLH\n");
    const auto r = run("run --config " + (tmp.path / "run.txt").string() + " --out " + (tmp.path / "o").string(),
                       tmp.path / "log");
    CHECK(r.status != 0);
    CHECK_THAT(r.log, ContainsSubstring("'rh'"));
    CHECK_FALSE(fs::exists(tmp.path / "o"));
    CHECK_FALSE(fs::exists(tmp.path / "o.partial"));

    write(tmp.path / "ols.txt", "input.candidates = cand.csv\ninput.reference = ref.csv\nmodels = OLS\n");
    const auto ok = run("run --config " + (tmp.path / "ols.txt").string() + " --out " + (tmp.path / "p").string(),
                        tmp.path / "log");
    INFO(ok.log);
    CHECK(ok.status == 0);
}

TEST_CASE("ingest reports completeness and exit status follows error diagnostics") {
    TempDir tmp;
    std::string text = "timestamp,pm1,pm25,pm10,temp,rh\n";
    for (int i = 0; i < 1000; ++i) {
        const std::string ts = pmcal::io::format_timestamp(1'600'000'000 + i * 60);
        text += (i == 100 || i == 500 || i == 900) ? ts + ",x,y,z,,\n" : ts + ",4,8,12,20,50\n";
    }
    write(tmp.path / "dev.csv", text);
    auto r = run("ingest " + (tmp.path / "dev.csv").string() + " --out " + (tmp.path / "o").string(), tmp.path / "log");
    CHECK(r.status == 0);
    CHECK_THAT(r.log, ContainsSubstring("completeness 99.7%"));
    CHECK_THAT(read(tmp.path / "o" / "ingest_report.csv"), ContainsSubstring("dev.csv,1000,997,0,3,99.7,ok"));

    write(tmp.path / "bad.csv", "when,pm\n");
    r = run("ingest " + (tmp.path / "dev.csv").string() + " " + (tmp.path / "bad.csv").string(), tmp.path / "log");
    CHECK(r.status != 0);
    CHECK_THAT(r.log, ContainsSubstring("bad.csv"));

    r = run("ingest " + (tmp.path / "missing.csv").string(), tmp.path / "log");
    CHECK(r.status != 0);
    r = run("frobnicate", tmp.path / "log");
    CHECK(r.status != 0);
}
