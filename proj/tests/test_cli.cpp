#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>
#include <sys/wait.h>
#include <unistd.h>

// PULSAR_BIN is injected by the build as the absolute path of the CLI binary.

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("pulsar_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(bool(in), path << " should exist");
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

// Runs the CLI with stdout/stderr captured into files under dir.
struct RunResult {
    int code = -1;
    std::string out, err;
};

RunResult run(const TempDir& dir, const std::string& args,
              const std::string& env = "") {
    static int counter = 0;
    std::string out = dir.file("stdout." + std::to_string(counter));
    std::string err = dir.file("stderr." + std::to_string(counter));
    ++counter;
    std::string cmd = env + (env.empty() ? "" : " ") + PULSAR_BIN + " " + args +
                      " >" + out + " 2>" + err;
    int rc = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

// One frontal box on a small grid; hit distances sit far from the 100-bin
// spoofing-pulse lattice so masking defenses keep the echoes intact.
const char* kSceneJson = R"({
    "seed": 5,
    "boxes": [
        {"center": [6.3, 0.0, -0.2], "size": [1.5, 1.5, 1.5], "intensity": 0.9}
    ]
})";

std::string synth_benign(const TempDir& dir) {
    write_text(dir.file("scene.json"), kSceneJson);
    std::string benign = dir.file("benign.pwfm");
    RunResult r = run(dir, "synth --scene " + dir.file("scene.json") + " --out " +
                               benign +
                               " --phi 5 --channels 2 --azimuth-bins 90 "
                               "--time-bins 840");
    REQUIRE_MESSAGE(r.code == 0, r.err);
    return benign;
}

}  // namespace

TEST_CASE("cli full pipeline: synth, attack, defend, eval") {
    TempDir dir;
    std::string benign = synth_benign(dir);
    CHECK(fs::exists(benign));

    json manifest = json::parse(slurp(benign + ".manifest.json"));
    CHECK(manifest["command"] == "synth");
    CHECK(manifest["options"]["phi"] == 5);
    CHECK(manifest["options"]["channels"] == 2);
    CHECK(manifest["outputs"]["waveform"] == benign);

    // The +-40 deg sector covers columns 35..54, exactly four phi=5 groups
    // per row; a group straddling the sector edge would keep its attack
    // pulses past the coherence defense (not every member fires).
    std::string attacked = dir.file("attacked.pwfm");
    std::string gt = dir.file("gt.pmsk");
    RunResult ra = run(dir, "attack --in " + benign + " --out " + attacked +
                                " --seed 9 --noise-std 0.02 --sector-deg 40 "
                                "--gt-mask " + gt);
    REQUIRE_MESSAGE(ra.code == 0, ra.err);
    CHECK(ra.err.find("success rate 100") != std::string::npos);
    CHECK(ra.err.find("8 pulses per window") != std::string::npos);
    CHECK(fs::exists(gt));
    CHECK(json::parse(slurp(attacked + ".manifest.json"))["options"]["seed"] == 9);

    std::string points = dir.file("recovered.bin");
    std::string pred = dir.file("pred.pmsk");
    std::string defended = dir.file("defended.pwfm");
    RunResult rd = run(dir, "defend --in " + attacked +
                                " --method coherence --out-points " + points +
                                " --out-mask " + pred + " --out-waveform " +
                                defended);
    REQUIRE_MESSAGE(rd.code == 0, rd.err);
    CHECK(rd.err.find("defend(coherence_mask)") != std::string::npos);
    CHECK(fs::exists(points));
    CHECK(fs::exists(pred));

    std::string report = dir.file("report.json");
    RunResult re = run(dir, "eval --benign " + benign + " --points " + points +
                                " --gt-mask " + gt + " --pred-mask " + pred +
                                " --out " + report + " --label coherence");
    REQUIRE_MESSAGE(re.code == 0, re.err);

    json doc = json::parse(slurp(report));
    REQUIRE(doc["entries"].size() == 1);
    CHECK(doc["entries"][0]["method"] == "coherence");
    CHECK(doc["entries"][0]["point_recovery_accuracy"] == 100.0);
    CHECK(doc["entries"][0]["error"].is_null());
    CHECK(doc["entries"][0]["object_iou"] == 0.0);
    CHECK(doc["entries"][0]["attack_iou"] > 0.5);
    std::string csv = slurp(report + ".csv");
    CHECK(csv.find("coherence,100.000") != std::string::npos);

    SUBCASE("defended waveform path also reports the post-defense attack rate") {
        std::string rep2 = dir.file("report2.json");
        RunResult r2 = run(dir, "eval --benign " + benign + " --defended " +
                                    defended + " --gt-mask " + gt + " --out " +
                                    rep2);
        REQUIRE_MESSAGE(r2.code == 0, r2.err);
        json d2 = json::parse(slurp(rep2));
        CHECK(d2["entries"][0]["point_recovery_accuracy"] == 100.0);
        CHECK(d2["entries"][0]["attack_success_rate"] == 0.0);
    }
}

TEST_CASE("cli usage errors exit with code 2") {
    TempDir dir;

    CHECK(run(dir, "bogus").code == 2);
    CHECK(run(dir, "synth --scene x.json").code == 2);  // missing --out
    CHECK(run(dir, "synth --out " + dir.file("w.pwfm")).code == 2);  // no source
    CHECK(run(dir, "synth --scene a.json --suite standard --out " +
                       dir.file("w.pwfm"))
              .code == 2);

    RunResult both = run(dir, "attack --in a.pwfm --out b.pwfm --freq-mhz 1 "
                              "--interval-ns 50");
    CHECK(both.code == 2);

    // Exactly one recovery source is accepted.
    CHECK(run(dir, "eval --benign a.pwfm --out r.json").code == 2);
    CHECK(run(dir, "eval --benign a.pwfm --points p.bin --defended d.pwfm "
                   "--out r.json")
              .code == 2);

    SUBCASE("unknown defense name") {
        std::string benign = synth_benign(dir);
        RunResult r = run(dir, "defend --in " + benign +
                                   " --method fancy --out-points " +
                                   dir.file("p.bin"));
        CHECK(r.code == 2);
        CHECK(r.err.find("fancy") != std::string::npos);
    }
}

TEST_CASE("cli file errors exit with code 3") {
    TempDir dir;
    CHECK(run(dir, "synth --scene " + dir.file("missing.json") + " --out " +
                       dir.file("w.pwfm"))
              .code == 3);
    CHECK(run(dir, "attack --in " + dir.file("missing.pwfm") + " --out " +
                       dir.file("a.pwfm"))
              .code == 3);
    CHECK(run(dir, "bench --suite " + dir.file("missing.json") + " --out " +
                       dir.file("b.csv"))
              .code == 3);

    std::string junk = dir.file("junk.pwfm");
    write_text(junk, "this is not a waveform");
    RunResult r = run(dir, "eval --benign " + junk + " --points p.bin --out " +
                              dir.file("r.json"));
    CHECK(r.code == 3);
    CHECK(r.err.find("bad magic") != std::string::npos);
}

TEST_CASE("cli undefined metrics exit with code 4") {
    TempDir dir;
    // An empty scene synthesizes an all-zero cube: no benign return exists,
    // so recovery accuracy has an empty denominator.
    write_text(dir.file("empty.json"), R"({"seed": 1})");
    std::string benign = dir.file("empty.pwfm");
    REQUIRE(run(dir, "synth --scene " + dir.file("empty.json") + " --out " +
                         benign +
                         " --channels 2 --azimuth-bins 90 --time-bins 800")
                .code == 0);

    std::string points = dir.file("none.bin");
    REQUIRE(run(dir, "defend --in " + benign + " --method none --out-points " +
                         points)
                .code == 0);

    RunResult r = run(dir, "eval --benign " + benign + " --points " + points +
                              " --out " + dir.file("r.json"));
    CHECK(r.code == 4);
    CHECK(r.err.find("no in-sector benign return") != std::string::npos);
}

TEST_CASE("cli attack runs are reproducible and warn on an empty train") {
    TempDir dir;
    std::string benign = synth_benign(dir);

    std::string a1 = dir.file("a1.pwfm");
    std::string a2 = dir.file("a2.pwfm");
    REQUIRE(run(dir, "attack --in " + benign + " --out " + a1 + " --seed 4",
                "PULSAR_THREADS=1")
                .code == 0);
    REQUIRE(run(dir, "attack --in " + benign + " --out " + a2 + " --seed 4",
                "PULSAR_THREADS=3")
                .code == 0);
    CHECK(slurp(a1) == slurp(a2));

    std::string a3 = dir.file("a3.pwfm");
    REQUIRE(run(dir, "attack --in " + benign + " --out " + a3 + " --seed 5")
                .code == 0);
    CHECK(slurp(a1) != slurp(a3));

    SUBCASE("sub-window frequency injects nothing and says so") {
        RunResult r = run(dir, "attack --in " + benign + " --out " +
                                   dir.file("empty.pwfm") + " --freq-mhz 0.5");
        CHECK(r.code == 0);
        CHECK(r.err.find("exceeds the acquisition window") != std::string::npos);
        CHECK(r.err.find("0 pulses per window") != std::string::npos);
    }
}

TEST_CASE("cli bench renders the sweep tables") {
    TempDir dir;
    write_text(dir.file("suite.json"), R"({
        "name": "tiny",
        "sensor": {"channels": 2, "azimuth_bins": 90, "time_bins": 840},
        "noise_std": 0.02,
        "scenes": [
            {"seed": 11, "boxes": [{"center": [6.3, 0.0, -0.2],
                                    "size": [1.5, 1.5, 1.5], "intensity": 0.9}]},
            {"seed": 12, "boxes": [{"center": [8.7, -0.9, -0.25],
                                    "size": [1.2, 1.2, 1.2], "intensity": 1.2}]}
        ]
    })");

    std::string csv = dir.file("bench.csv");
    std::string js = dir.file("bench.json");
    RunResult r = run(dir, "bench --suite " + dir.file("suite.json") +
                              " --phis 1,5 --methods oracle,avg_subtract,none "
                              "--seed 3 --out " + csv + " --json " + js);
    REQUIRE_MESSAGE(r.code == 0, r.err);

    CHECK(slurp(csv) ==
          "phi,oracle_mask,avg_subtract,none,attack_success_rate\n"
          "1,100.00,-,0.00,100.00\n"
          "5,100.00,100.00,0.00,100.00\n");

    json doc = json::parse(slurp(js));
    CHECK(doc["suite"] == "tiny");
    CHECK(doc["phis"] == std::vector<int>{1, 5});
    CHECK(doc["mean"][0]["accuracy"]["avg_subtract"].is_null());
    CHECK(doc["scenes"].size() == 2);

    json manifest = json::parse(slurp(csv + ".manifest.json"));
    CHECK(manifest["command"] == "bench");
    CHECK(manifest["options"]["scenes"] == 2);
}

TEST_CASE("cli version flag") {
    TempDir dir;
    RunResult r = run(dir, "--version");
    CHECK(r.code == 0);
    CHECK(r.out.find("pulsar 1.0.0") != std::string::npos);
}
