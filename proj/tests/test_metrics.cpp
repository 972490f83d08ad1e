#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>
#include <unistd.h>

#include "pulsar/attack.hpp"
#include "pulsar/defense.hpp"
#include "pulsar/io.hpp"
#include "pulsar/metrics.hpp"
#include "pulsar/waveform.hpp"

using namespace pulsar;

namespace {

SensorConfig grid_sensor(int h, int w, int d) {
    SensorConfig sc;
    sc.channels = h;
    sc.azimuth_bins = w;
    sc.time_bins = d;
    return sc;
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("pulsar_metrics_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

// W = 8 puts azimuth centers at -157.5 + 45 j; only j = 3 (-22.5 deg) and
// j = 4 (+22.5 deg) fall inside the default +-45 degree sector.

TEST_CASE("point_recovery_accuracy tallies every outcome class") {
    SensorConfig sc = grid_sensor(2, 8, 800);
    RangeImage benign(2, 8), recovered(2, 8);

    benign.set(0, 3, 10.0f, 0.5f);     // recovered within threshold
    benign.set(1, 3, 20.0f, 0.5f);     // missing
    benign.set(0, 4, 30.0f, 0.5f);     // displaced
    benign.set(0, 0, 50.0f, 0.5f);     // out of sector, ignored

    recovered.set(0, 3, 10.4f, 0.9f);
    recovered.set(0, 4, 31.0f, 0.9f);
    recovered.set(1, 4, 5.0f, 0.9f);   // false alarm (benign absent)
    recovered.set(1, 0, 70.0f, 0.9f);  // out of sector, ignored

    RecoveryCounts c;
    double acc = point_recovery_accuracy(benign, recovered, sc, SectorDeg{}, 0.5, &c);
    CHECK(acc == doctest::Approx(100.0 / 3.0));
    CHECK(c.evaluated == 3);
    CHECK(c.recovered == 1);
    CHECK(c.missing == 1);
    CHECK(c.displaced == 1);
    CHECK(c.false_alarms == 1);

    SUBCASE("counts pointer is optional") {
        CHECK(point_recovery_accuracy(benign, recovered, sc, SectorDeg{}) ==
              doctest::Approx(100.0 / 3.0));
    }
}

TEST_CASE("point_recovery_accuracy threshold boundary is inclusive") {
    SensorConfig sc = grid_sensor(1, 8, 800);
    RangeImage benign(1, 8), recovered(1, 8);
    benign.set(0, 3, 10.0f, 0.5f);

    recovered.set(0, 3, 10.5f, 0.5f);  // error exactly at the threshold
    CHECK(point_recovery_accuracy(benign, recovered, sc, SectorDeg{}, 0.5) == 100.0);

    recovered.set(0, 3, 10.53125f, 0.5f);  // just past it (exact in float)
    RecoveryCounts c;
    CHECK(point_recovery_accuracy(benign, recovered, sc, SectorDeg{}, 0.5, &c) == 0.0);
    CHECK(c.displaced == 1);
}

TEST_CASE("point_recovery_accuracy validates inputs") {
    SensorConfig sc = grid_sensor(2, 8, 800);
    RangeImage benign(2, 8), recovered(2, 8);
    benign.set(0, 3, 10.0f, 0.5f);

    SUBCASE("shape mismatch between images") {
        RangeImage other(2, 7);
        CHECK_THROWS_AS(point_recovery_accuracy(benign, other, sc, SectorDeg{}),
                        std::invalid_argument);
    }
    SUBCASE("image does not match the sensor grid") {
        SensorConfig wrong = grid_sensor(2, 9, 800);
        CHECK_THROWS_AS(point_recovery_accuracy(benign, recovered, wrong, SectorDeg{}),
                        std::invalid_argument);
    }
    SUBCASE("nonpositive threshold") {
        CHECK_THROWS_AS(point_recovery_accuracy(benign, recovered, sc, SectorDeg{}, 0.0),
                        std::invalid_argument);
    }
    SUBCASE("empty denominator raises metric_error but still reports counts") {
        RangeImage sparse(2, 8);
        sparse.set(0, 0, 50.0f, 0.5f);  // only out-of-sector returns
        RangeImage rec(2, 8);
        rec.set(1, 4, 5.0f, 0.9f);
        RecoveryCounts c;
        CHECK_THROWS_AS(
            point_recovery_accuracy(sparse, rec, sc, SectorDeg{}, 0.5, &c),
            metric_error);
        CHECK(c.evaluated == 0);
        CHECK(c.false_alarms == 1);
    }
}

TEST_CASE("attack_success_rate scores the per-direction amplitude argmax") {
    SensorConfig sc = grid_sensor(2, 8, 800);
    WaveformTensor w(sc);
    SegMask gt(2, 8, 800);

    w.at(0, 3, 100) = 5.0f;
    gt.at(0, 3, 100) = SegMask::kAttack;   // hit
    w.at(1, 3, 200) = 4.0f;
    gt.at(1, 3, 200) = SegMask::kObject;   // miss: object, not attack
    w.at(0, 4, 50) = 3.0f;
    gt.at(0, 4, 50) = SegMask::kAttack;    // hit
    // (1, 4) stays all-zero: argmax falls on bin 0, labeled background.

    CHECK(attack_success_rate(w, gt, SectorDeg{}) == 50.0);

    SUBCASE("empty sector") {
        CHECK_THROWS_AS(attack_success_rate(w, gt, SectorDeg{0.0, 10.0}), metric_error);
    }
    SUBCASE("mask shape mismatch") {
        SegMask other(2, 8, 799);
        CHECK_THROWS_AS(attack_success_rate(w, other, SectorDeg{}), std::invalid_argument);
    }
}

TEST_CASE("mask_iou per-class hand cases") {
    SegMask pred(1, 1, 8), gt(1, 1, 8);
    pred.at(0, 0, 0) = SegMask::kAttack;
    pred.at(0, 0, 1) = SegMask::kAttack;
    gt.at(0, 0, 1) = SegMask::kAttack;
    gt.at(0, 0, 4) = SegMask::kAttack;

    CHECK(mask_iou(pred, gt, SegMask::kAttack) == doctest::Approx(1.0 / 3.0));
    // Neither mask carries any kObject voxel: empty vs empty rates as 1.
    CHECK(mask_iou(pred, gt, SegMask::kObject) == 1.0);

    gt.at(0, 0, 7) = SegMask::kObject;
    CHECK(mask_iou(pred, gt, SegMask::kObject) == 0.0);

    SegMask other(1, 2, 8);
    CHECK_THROWS_AS(mask_iou(pred, other, SegMask::kAttack), std::invalid_argument);
}

namespace {

// A 2 x 90 grid under a 10 MHz spoofing train. Echo bins 134 + 8 (j mod 5)
// keep every legitimate return's +-6-bin label window clear of the attack
// windows (pulse centers k*100 +- 20 widen to [k*100 - 26, k*100 + 26]), and
// with unit amplitude scale the 0.5-amplitude echoes always lose the argmax
// to the 3..8-amplitude spoofed pulses. Group members (5 consecutive azimuth
// columns) carry distinct echo bins, so the cross-member mean preserves them.
// The +-40 deg sector covers columns 35..54, exactly four size-5 groups per
// row: a group straddling the sector edge would defeat both the cross-member
// mean and the every-member coherence vote by construction. 840 time bins
// keep the jittered 8th pulse fully inside the window, so the masking
// defenses see every pulse core and the outcomes below are exact.
struct BenchFixture {
    SensorConfig sc = grid_sensor(2, 90, 840);
    RangeImage benign{2, 90};
    ScanTimingMatrix tm;
    WaveformTensor attacked;
    SegMask gt;
    PulseModel pulse;

    BenchFixture() {
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 90; ++j) {
                int bin = 134 + 8 * (j % 5);
                benign.set(i, j, float(bin) * 0.15f, 0.5f);
            }
        tm = build_timing_matrix(sc, 5);
        WaveformTensor clean = synthesize_benign(benign, pulse, sc);
        AttackConfig ac;
        ac.seed = 2026;
        ac.sector_lo_deg = -40.0;
        ac.sector_hi_deg = 40.0;
        AttackTrain train = generate_attack_train(tm, ac, pulse, sc);
        attacked = inject(clean, train.waveform, NoiseConfig{0.02, 7});
        gt = label_ground_truth(benign, train, tm, pulse, sc);
    }

    ReportInputs inputs() const {
        ReportInputs in;
        in.attacked = &attacked;
        in.timing = &tm;
        in.benign = &benign;
        in.ground_truth = &gt;
        in.pulse = pulse;
        in.sector = SectorDeg{-40.0, 40.0};
        return in;
    }
};

}  // namespace

TEST_CASE("build_report scores every requested defense in order") {
    BenchFixture fx;
    std::vector<DefenseMethod> methods = {
        DefenseMethod::parse("none"), DefenseMethod::parse("oracle"),
        DefenseMethod::parse("avg_subtract"), DefenseMethod::parse("coherence")};

    RecoveryReport rep = build_report(fx.inputs(), methods);
    REQUIRE(rep.entries.size() == 4);
    CHECK(rep.entries[0].method == "none");
    CHECK(rep.entries[1].method == "oracle_mask");
    CHECK(rep.entries[2].method == "avg_subtract");
    CHECK(rep.entries[3].method == "coherence_mask");
    for (const DefenseEntry& e : rep.entries) {
        CHECK(e.error.empty());
        CHECK(e.has_accuracy);
        CHECK(e.has_attack_success);
    }

    // 20 in-sector azimuth columns x 2 channels = 40 evaluated directions.
    const DefenseEntry& none = rep.entries[0];
    CHECK(none.accuracy == 0.0);
    CHECK(none.attack_success == 100.0);
    CHECK(none.counts.evaluated == 40);
    CHECK(none.counts.displaced == 40);
    CHECK(none.counts.false_alarms == 0);
    CHECK_FALSE(none.has_iou);

    const DefenseEntry& oracle = rep.entries[1];
    CHECK(oracle.accuracy == 100.0);
    CHECK(oracle.attack_success == 0.0);
    CHECK(oracle.counts.recovered == 40);
    REQUIRE(oracle.has_iou);
    CHECK(oracle.object_iou == 1.0);
    CHECK(oracle.attack_iou == 1.0);

    const DefenseEntry& avg = rep.entries[2];
    CHECK(avg.accuracy == 100.0);
    CHECK(avg.attack_success == 0.0);
    CHECK_FALSE(avg.has_iou);

    const DefenseEntry& coh = rep.entries[3];
    CHECK(coh.accuracy == 100.0);
    CHECK(coh.attack_success == 0.0);
    REQUIRE(coh.has_iou);
    // Coherence flags pulse cores plus a guard band; it never labels objects.
    CHECK(coh.object_iou == 0.0);
    CHECK(coh.attack_iou > 0.5);
    CHECK(coh.attack_iou < 1.0);

    std::string csv = report_csv(rep);
    CHECK(csv.find("oracle_mask,100.000,0.000,1.000,1.000,40,40,0,0,0,\n") !=
          std::string::npos);
    nlohmann::json doc = nlohmann::json::parse(report_json(rep));
    CHECK(doc["entries"].size() == 4);
    CHECK(doc["entries"][1]["method"] == "oracle_mask");
    CHECK(doc["entries"][1]["counts"]["evaluated"] == 40);
}

TEST_CASE("build_report records per-method failures without aborting the rest") {
    BenchFixture fx;
    DefenseMethod broken = DefenseMethod::parse("mask:/nonexistent/labels.pmsk");
    std::vector<DefenseMethod> methods = {DefenseMethod::parse("none"), broken,
                                          DefenseMethod::parse("oracle")};

    RecoveryReport rep = build_report(fx.inputs(), methods);
    REQUIRE(rep.entries.size() == 3);
    CHECK(rep.entries[0].error.empty());
    CHECK(rep.entries[1].method == "external_mask");
    CHECK_FALSE(rep.entries[1].has_accuracy);
    CHECK(rep.entries[1].error.find("cannot open") != std::string::npos);
    CHECK(rep.entries[2].error.empty());
    CHECK(rep.entries[2].accuracy == 100.0);

    SUBCASE("oracle without ground truth fails in its entry only") {
        ReportInputs in = fx.inputs();
        in.ground_truth = nullptr;
        RecoveryReport r2 = build_report(in, {DefenseMethod::parse("oracle"),
                                              DefenseMethod::parse("none")});
        CHECK(r2.entries[0].error.find("ground-truth") != std::string::npos);
        CHECK_FALSE(r2.entries[0].has_accuracy);
        CHECK(r2.entries[1].error.empty());
        CHECK(r2.entries[1].has_accuracy);
        CHECK_FALSE(r2.entries[1].has_attack_success);
    }
    SUBCASE("missing required inputs throw instead") {
        ReportInputs in = fx.inputs();
        in.benign = nullptr;
        CHECK_THROWS_AS(build_report(in, methods), std::invalid_argument);
    }
}

TEST_CASE("external mask files feed build_report, resized when needed") {
    BenchFixture fx;
    TempDir tmp;

    std::string exact = tmp.file("gt.pmsk");
    write_mask(exact, fx.gt, &fx.tm);
    RecoveryReport rep =
        build_report(fx.inputs(), {DefenseMethod::parse("mask:" + exact)});
    REQUIRE(rep.entries.size() == 1);
    CHECK(rep.entries[0].error.empty());
    CHECK(rep.entries[0].accuracy == 100.0);
    CHECK(rep.entries[0].attack_success == 0.0);
    CHECK(rep.entries[0].object_iou == 1.0);
    CHECK(rep.entries[0].attack_iou == 1.0);

    SUBCASE("coarser mask grid is upsampled to the sensor grid") {
        // Only the time axis is halved: pulse centers are drawn per timing
        // group, so labels copied across rows or columns would not line up.
        // Halving time costs at most one bin per window edge, and the pulse
        // residue 6 bins from a core stays below the peak threshold.
        std::string coarse = tmp.file("half.pmsk");
        write_mask(coarse, resize_mask(fx.gt, 2, 90, 420));
        RecoveryReport r2 =
            build_report(fx.inputs(), {DefenseMethod::parse("mask:" + coarse)});
        CHECK(r2.entries[0].error.empty());
        CHECK(r2.entries[0].accuracy == 100.0);
        CHECK(r2.entries[0].attack_iou > 0.5);
    }
}

TEST_CASE("report_csv and report_json render undefined fields") {
    RecoveryReport r;
    r.tool = "toolname 1.2.3";

    DefenseEntry full;
    full.method = "none";
    full.accuracy = 12.375;
    full.has_accuracy = true;
    full.attack_success = 98.5;
    full.has_attack_success = true;
    full.object_iou = 0.5;
    full.attack_iou = 0.25;
    full.has_iou = true;
    full.counts = {10, 4, 3, 3, 2};

    DefenseEntry failed;
    failed.method = "sor_filter";
    failed.error = "bad, thing\nhappened";

    r.entries = {full, failed};

    std::string csv = report_csv(r);
    CHECK(csv ==
          "method,point_recovery_accuracy,attack_success_rate,object_iou,"
          "attack_iou,evaluated,recovered,missing,displaced,false_alarms,error\n"
          "none,12.375,98.500,0.500,0.250,10,4,3,3,2,\n"
          "sor_filter,-,-,-,-,0,0,0,0,0,bad; thing;happened\n");

    std::string js = report_json(r);
    REQUIRE(!js.empty());
    CHECK(js.back() == '\n');
    CHECK(js.find("\"tool\"") < js.find("\"config\""));
    CHECK(js.find("\"config\"") < js.find("\"entries\""));

    nlohmann::json doc = nlohmann::json::parse(js);
    CHECK(doc["tool"] == "toolname 1.2.3");
    CHECK(doc["config"].is_object());
    CHECK(doc["entries"][0]["point_recovery_accuracy"] == 12.375);
    CHECK(doc["entries"][0]["error"].is_null());
    CHECK(doc["entries"][0]["counts"]["false_alarms"] == 2);
    CHECK(doc["entries"][1]["point_recovery_accuracy"].is_null());
    CHECK(doc["entries"][1]["object_iou"].is_null());
    // JSON keeps the error verbatim; only the CSV sanitizes separators.
    CHECK(doc["entries"][1]["error"] == "bad, thing\nhappened");
}
