#include <doctest.h>

#include <pulsar/rng.hpp>
#include <pulsar/waveform.hpp>

#include <cmath>
#include <vector>

using namespace pulsar;

namespace {

SensorConfig small_sensor(int channels = 1, int azimuth = 4, int bins = 800) {
    SensorConfig sc;
    sc.channels = channels;
    sc.azimuth_bins = azimuth;
    sc.time_bins = bins;
    return sc;
}

}  // namespace

TEST_CASE("gaussian pulse matches hand-computed samples") {
    // exp(-0.5) and exp(-2), worked out once and frozen.
    CHECK(gaussian_pulse(0.0, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(gaussian_pulse(2.0, 2.0) == doctest::Approx(0.60653065971263342).epsilon(1e-12));
    CHECK(gaussian_pulse(4.0, 2.0) == doctest::Approx(0.13533528323661270).epsilon(1e-12));
    CHECK(gaussian_pulse(-3.7, 2.0) == doctest::Approx(gaussian_pulse(3.7, 2.0)).epsilon(1e-15));
    CHECK_THROWS_AS(gaussian_pulse(0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(gaussian_pulse(0.0, -1.0), std::invalid_argument);
}

TEST_CASE("add_pulse clips its support to the row") {
    std::vector<float> row(16, 0.0f);
    add_pulse(row.data(), int(row.size()), 1.0, 0.0, 2.0, 1.0);
    CHECK(row[0] == doctest::Approx(2.0));
    CHECK(row[8] == doctest::Approx(0.0).epsilon(1e-12));  // 8 sigma support edge
    for (int t = 9; t < 16; ++t) CHECK(row[t] == 0.0f);

    std::vector<float> tail(16, 0.0f);
    add_pulse(tail.data(), int(tail.size()), 1.0, 20.0, 2.0, 1.0);
    // center past the window still leaks its left shoulder into the row
    CHECK(tail[15] == doctest::Approx(2.0 * std::exp(-12.5)).epsilon(1e-6));
    CHECK(tail[11] == 0.0f);  // beyond 8 sigma from the center
}

TEST_CASE("add_pulse accumulates instead of overwriting") {
    std::vector<float> row(32, 0.0f);
    add_pulse(row.data(), 32, 1.0, 10.0, 1.0, 2.0);
    add_pulse(row.data(), 32, 1.0, 10.0, 1.0, 2.0);
    CHECK(row[10] == doctest::Approx(2.0));
}

TEST_CASE("timing matrix fills scan-order groups with a short trailing group") {
    SensorConfig sc = small_sensor(1, 7, 8);
    ScanTimingMatrix tm = build_timing_matrix(sc, 3);
    std::vector<std::uint32_t> expect = {0, 0, 0, 1, 1, 1, 2};
    REQUIRE(tm.stamps.size() == expect.size());
    for (int j = 0; j < 7; ++j) CHECK(tm.at(0, j) == expect[std::size_t(j)]);
    CHECK(tm.timestamp_count == 3);
    CHECK(tm.group_size == 3);
}

TEST_CASE("column-major scan order groups down the channel axis") {
    SensorConfig sc = small_sensor(2, 3, 8);
    ScanTimingMatrix tm = build_timing_matrix(sc, 2, ScanOrder::kColumnMajor);
    CHECK(tm.at(0, 0) == 0);
    CHECK(tm.at(1, 0) == 0);
    CHECK(tm.at(0, 1) == 1);
    CHECK(tm.at(1, 1) == 1);
    CHECK(tm.at(0, 2) == 2);
    CHECK(tm.at(1, 2) == 2);
    CHECK(tm.timestamp_count == 3);
}

TEST_CASE("group size one gives every direction its own timestamp") {
    SensorConfig sc = small_sensor(2, 5, 8);
    ScanTimingMatrix tm = build_timing_matrix(sc, 1);
    CHECK(tm.timestamp_count == 10);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 5; ++j)
            CHECK(tm.at(i, j) == std::uint32_t(i * 5 + j));
}

TEST_CASE("timing matrix rejects nonpositive group sizes") {
    SensorConfig sc = small_sensor();
    CHECK_THROWS_AS(build_timing_matrix(sc, 0), std::invalid_argument);
    CHECK_THROWS_AS(build_timing_matrix(sc, -2), std::invalid_argument);
}

TEST_CASE("synthesis places a 15 m echo at bin 100 with exact amplitude") {
    SensorConfig sc = small_sensor();
    PulseModel pm{2.0, 12.0};
    RangeImage ri(1, 4);
    ri.set(0, 1, 15.0f, 0.5f);

    WaveformTensor w = synthesize_benign(ri, pm, sc);
    // 15 m -> 100 ns round trip -> bin 100 dead center: amplitude 12 * 0.5.
    CHECK(w.at(0, 1, 100) == doctest::Approx(6.0).epsilon(1e-7));
    CHECK(w.at(0, 1, 99) == doctest::Approx(6.0 * std::exp(-1.0 / 8.0)).epsilon(1e-6));
    CHECK(w.at(0, 1, 101) == doctest::Approx(6.0 * std::exp(-1.0 / 8.0)).epsilon(1e-6));
    CHECK(w.at(0, 1, 0) == 0.0f);
    // other directions untouched
    for (int t = 0; t < sc.time_bins; ++t) {
        CHECK(w.at(0, 0, t) == 0.0f);
        CHECK(w.at(0, 2, t) == 0.0f);
    }

    RangeImage back = peak_detect(w, pm);
    REQUIRE(back.has(0, 1));
    CHECK(back.distance(0, 1) == doctest::Approx(15.0).epsilon(1e-9));
    CHECK(back.intensity(0, 1) == doctest::Approx(0.5).epsilon(1e-7));
    CHECK_FALSE(back.has(0, 0));
}

TEST_CASE("a weak 60 m echo sits below the default detection threshold") {
    SensorConfig sc = small_sensor();
    PulseModel pm{2.0, 0.156};
    RangeImage ri(1, 4);
    ri.set(0, 0, 60.0f, 1.0f);

    WaveformTensor w = synthesize_benign(ri, pm, sc);
    CHECK(w.at(0, 0, 400) == doctest::Approx(0.156).epsilon(1e-6));

    RangeImage strict = peak_detect(w, pm);  // default threshold 0.25
    CHECK_FALSE(strict.has(0, 0));

    RangeImage lax = peak_detect(w, pm, 0.1f);
    REQUIRE(lax.has(0, 0));
    CHECK(lax.distance(0, 0) == doctest::Approx(60.0).epsilon(1e-9));
    CHECK(lax.intensity(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("synthesis is additive across cells") {
    SensorConfig sc = small_sensor(2, 3, 256);
    PulseModel pm;
    RangeImage a(2, 3), b(2, 3), both(2, 3);
    a.set(0, 0, 9.0f, 1.5f);
    both.set(0, 0, 9.0f, 1.5f);
    b.set(1, 2, 21.3f, 0.7f);
    both.set(1, 2, 21.3f, 0.7f);

    WaveformTensor wa = synthesize_benign(a, pm, sc);
    WaveformTensor wb = synthesize_benign(b, pm, sc);
    WaveformTensor wboth = synthesize_benign(both, pm, sc);
    for (std::size_t v = 0; v < wboth.size(); ++v)
        CHECK(wboth.data()[v] == wa.data()[v] + wb.data()[v]);
}

TEST_CASE("synthesis rejects ranges beyond the acquisition window") {
    SensorConfig sc = small_sensor();  // 800 bins * 0.15 m = 120 m
    PulseModel pm;
    RangeImage ri(1, 4);
    ri.set(0, 3, 121.0f, 1.0f);
    CHECK_THROWS_WITH_AS(synthesize_benign(ri, pm, sc),
                         doctest::Contains("(0, 3)"), std::invalid_argument);

    RangeImage ok(1, 4);
    ok.set(0, 3, 120.0f, 1.0f);  // exactly at the limit is legal
    CHECK_NOTHROW(synthesize_benign(ok, pm, sc));
}

TEST_CASE("peak detection takes the earliest bin on exact ties") {
    SensorConfig sc = small_sensor(1, 1, 16);
    WaveformTensor w(sc);
    w.at(0, 0, 5) = 1.0f;
    w.at(0, 0, 9) = 1.0f;
    PulseModel pm;
    RangeImage ri = peak_detect(w, pm, 0.5f);
    REQUIRE(ri.has(0, 0));
    CHECK(ri.distance(0, 0) == doctest::Approx(5 * 0.15).epsilon(1e-9));
}

TEST_CASE("peaks exactly at the threshold are kept") {
    SensorConfig sc = small_sensor(1, 1, 16);
    WaveformTensor w(sc);
    w.at(0, 0, 3) = 0.25f;
    RangeImage ri = peak_detect(w, PulseModel{}, 0.25f);
    CHECK(ri.has(0, 0));
    w.at(0, 0, 3) = 0.2499f;
    CHECK_FALSE(peak_detect(w, PulseModel{}, 0.25f).has(0, 0));
}

TEST_CASE("synthesize then detect recovers range within half a bin") {
    SensorConfig sc = small_sensor(1, 8);
    PulseModel pm;
    double half_bin_m = sc.meters_per_bin() / 2.0;  // 0.075 m
    for (int trial = 0; trial < 200; ++trial) {
        double d = rng::uniform(rng::key(424242, std::uint64_t(trial)), 0.8, 119.0);
        RangeImage ri(1, 8);
        ri.set(0, trial % 8, float(d), 1.0f);
        RangeImage back = peak_detect(synthesize_benign(ri, pm, sc), pm);
        REQUIRE(back.has(0, trial % 8));
        CHECK(std::abs(back.distance(0, trial % 8) - d) <= half_bin_m + 1e-6);
    }
}
