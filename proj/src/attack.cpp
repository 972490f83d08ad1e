#include "pulsar/attack.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "pulsar/parallel.hpp"
#include "pulsar/rng.hpp"
#include "pulsar/waveform.hpp"

namespace pulsar {

bool azimuth_in_sector(const SensorConfig& sc, int j, double lo_deg,
                       double hi_deg) {
  double az = sc.azimuth_center_deg(j);
  return az >= lo_deg && az <= hi_deg;
}

AttackTrain generate_attack_train(const ScanTimingMatrix& tm,
                                  const AttackConfig& ac, const PulseModel& pm,
                                  const SensorConfig& sc) {
  tm.validate();
  ac.validate();
  pm.validate();
  sc.validate();
  if (tm.channels != sc.channels || tm.azimuth_bins != sc.azimuth_bins)
    throw std::invalid_argument("generate_attack_train: timing matrix does not match sensor grid");

  AttackTrain train;
  train.waveform = WaveformTensor(sc);
  train.in_sector.assign(std::size_t(sc.direction_count()), 0);

  int K = ac.pulse_count(sc);
  if (K == 0)
    warn("attack interval " + std::to_string(ac.pulse_interval_ns) +
         " ns exceeds the acquisition window; no pulses injected");

  std::uint32_t taus = tm.timestamp_count;
  train.pulse_centers_ns.assign(taus, {});
  train.amplitudes.assign(taus, {});
  for (std::uint32_t tau = 0; tau < taus; ++tau) {
    auto& centers = train.pulse_centers_ns[tau];
    auto& amps = train.amplitudes[tau];
    centers.resize(K);
    amps.resize(K);
    for (int k = 1; k <= K; ++k) {
      double eps = rng::uniform(rng::key(ac.seed, rng::kStreamJitter, tau, k),
                                -ac.jitter_bound_ns, ac.jitter_bound_ns);
      double amp = rng::uniform(rng::key(ac.seed, rng::kStreamAmplitude, tau, k),
                                ac.amplitude_min, ac.amplitude_max);
      centers[k - 1] = float(k * ac.pulse_interval_ns + eps);
      amps[k - 1] = float(amp);
    }
  }

  for (int j = 0; j < sc.azimuth_bins; ++j) {
    if (!azimuth_in_sector(sc, j, ac.sector_lo_deg, ac.sector_hi_deg)) continue;
    for (int i = 0; i < sc.channels; ++i)
      train.in_sector[std::size_t(i) * sc.azimuth_bins + j] = 1;
  }
  if (K == 0) return train;

  // Render one row per timestamp, then copy it to every in-sector member so
  // group rows are bitwise identical.
  std::vector<float> base(std::size_t(taus) * sc.time_bins, 0.0f);
  parallel_for(std::int64_t(taus), [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t tau = b; tau < e; ++tau) {
      float* row = base.data() + std::size_t(tau) * sc.time_bins;
      for (int k = 0; k < K; ++k)
        add_pulse(row, sc.time_bins, sc.bin_duration_ns,
                  train.pulse_centers_ns[tau][k], train.amplitudes[tau][k],
                  pm.sigma_ns);
    }
  });
  parallel_for(std::int64_t(sc.direction_count()),
               [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t f = b; f < e; ++f) {
      if (!train.in_sector[f]) continue;
      int i = int(f / sc.azimuth_bins);
      int j = int(f % sc.azimuth_bins);
      std::uint32_t tau = tm.at(i, j);
      std::memcpy(train.waveform.row(i, j),
                  base.data() + std::size_t(tau) * sc.time_bins,
                  sizeof(float) * sc.time_bins);
    }
  });
  return train;
}

WaveformTensor inject(const WaveformTensor& benign,
                      const WaveformTensor& attack, const NoiseConfig& nc) {
  nc.validate();
  if (!benign.same_shape(attack))
    throw std::invalid_argument("inject: benign and attack tensors have different shapes");

  WaveformTensor out(benign.sensor());
  const float* l = benign.data().data();
  const float* f = attack.data().data();
  float* o = out.data().data();
  std::int64_t n = std::int64_t(out.size());

  if (nc.std == 0) {
    parallel_for(n, [&](std::int64_t b, std::int64_t e) {
      for (std::int64_t v = b; v < e; ++v)
        o[v] = std::max(0.0f, l[v] + f[v]);
    });
    return out;
  }

  parallel_for(n, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t v = b; v < e; ++v) {
      double noise = nc.std * rng::gaussian(
          rng::key(nc.seed, rng::kStreamNoise, std::uint64_t(v), 0),
          rng::key(nc.seed, rng::kStreamNoise, std::uint64_t(v), 1));
      o[v] = std::max(0.0f, l[v] + f[v] + float(noise));
    }
  });
  return out;
}

int label_window_bins(const PulseModel& pm, const SensorConfig& sc) {
  return int(std::ceil(kLabelWindowSigmas * pm.sigma_ns / sc.bin_duration_ns));
}

namespace {

void mark_window(std::uint8_t* row, int bins, double bin_duration_ns,
                 double center_ns, int half_width_bins, std::uint8_t label) {
  double cb = center_ns / bin_duration_ns;
  int lo = std::max(0, int(std::ceil(cb - half_width_bins)));
  int hi = std::min(bins - 1, int(std::floor(cb + half_width_bins)));
  for (int t = lo; t <= hi; ++t) row[t] = label;
}

}  // namespace

SegMask label_ground_truth(const RangeImage& benign, const AttackTrain& attack,
                           const ScanTimingMatrix& tm, const PulseModel& pm,
                           const SensorConfig& sc) {
  pm.validate();
  sc.validate();
  tm.validate();
  if (benign.channels() != sc.channels || benign.azimuth_bins() != sc.azimuth_bins)
    throw std::invalid_argument("label_ground_truth: range image does not match sensor grid");
  if (attack.in_sector.size() != std::size_t(sc.direction_count()))
    throw std::invalid_argument("label_ground_truth: attack train does not match sensor grid");

  SegMask mask(sc.channels, sc.azimuth_bins, sc.time_bins);
  int w = label_window_bins(pm, sc);
  double tof_per_meter = 2.0 / sc.light_speed * 1e9;

  parallel_for(std::int64_t(sc.direction_count()),
               [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t f = b; f < e; ++f) {
      int i = int(f / sc.azimuth_bins);
      int j = int(f % sc.azimuth_bins);
      std::uint8_t* row = mask.row(i, j);
      if (benign.has(i, j))
        mark_window(row, sc.time_bins, sc.bin_duration_ns,
                    benign.distance(i, j) * tof_per_meter, w, SegMask::kObject);
      if (attack.in_sector[f]) {
        std::uint32_t tau = tm.at(i, j);
        for (float c : attack.pulse_centers_ns[tau])
          mark_window(row, sc.time_bins, sc.bin_duration_ns, c, w,
                      SegMask::kAttack);
      }
    }
  });
  return mask;
}

}  // namespace pulsar
