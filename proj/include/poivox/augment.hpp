// Copyright (c) 2026 The poivox Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef POIVOX_AUGMENT_HPP_
#define POIVOX_AUGMENT_HPP_

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "poivox/error.hpp"
#include "poivox/frontend.hpp"
#include "poivox/rng.hpp"
#include "poivox/waveform.hpp"

namespace poivox {

enum class NoiseKind { white, pink, file };

inline std::string to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::white: return "white";
    case NoiseKind::pink: return "pink";
    default: return "file";
  }
}

inline NoiseKind noise_kind_from_string(const std::string& s) {
  if (s == "white") return NoiseKind::white;
  if (s == "pink") return NoiseKind::pink;
  if (s == "file") return NoiseKind::file;
  throw ConfigError("unknown noise kind '" + s + "' (white | pink | file)");
}

/// Reproducible description of one noise-mixing condition.
struct NoiseMixSpec {
  double snr_db = 10.0;
  NoiseKind kind = NoiseKind::white;
  std::string path;  // noise WAV for kind = file
  std::uint64_t seed = 0;
};

/// 10 log10 of the signal-to-noise power ratio of two aligned components.
inline double measure_snr_db(const Waveform& signal, const Waveform& noise) {
  const double ps = mean_power(signal);
  const double pn = mean_power(noise);
  if (ps <= 0.0 || pn <= 0.0) throw DataError("measure_snr_db: zero-power component");
  return 10.0 * std::log10(ps / pn);
}

/// Uniform SNR draw in [lo_db, hi_db], deterministic under the seed.
inline double sample_snr(double lo_db, double hi_db, std::uint64_t seed) {
  if (lo_db > hi_db) throw ConfigError("sample_snr: lo_db must be <= hi_db");
  if (lo_db == hi_db) return lo_db;
  Rng rng(seed);
  return rng.uniform(lo_db, hi_db);
}

/// Seed-deterministic noise synthesis. White noise is i.i.d. Gaussian
/// (sigma chosen for RMS 0.1). Pink noise shapes a white spectrum by
/// 1/sqrt(f) in the DFT domain, giving power that falls 3 dB per octave,
/// then is rescaled to RMS 0.1. Samples are clamped to [-1, 1].
inline Waveform gen_noise(NoiseKind kind, std::size_t length, int sample_rate_hz,
                          std::uint64_t seed) {
  if (kind == NoiseKind::file) {
    throw ConfigError("gen_noise: file noise comes from load_wav, not synthesis");
  }
  if (length < 1) throw ConfigError("gen_noise: length must be >= 1");

  Rng rng(seed);
  Waveform w;
  w.sample_rate_hz = sample_rate_hz;
  w.samples.resize(length);

  constexpr double kTargetRms = 0.1;
  if (kind == NoiseKind::white) {
    for (double& s : w.samples) s = kTargetRms * rng.gaussian();
  } else {
    std::size_t n = 2;
    while (n < std::max<std::size_t>(length, 2)) n <<= 1;
    std::vector<std::complex<double>> buf(n);
    for (auto& c : buf) c = rng.gaussian();
    detail::fft_radix2(buf);
    buf[0] = 0.0;  // no DC
    for (std::size_t k = 1; k <= n / 2; ++k) {
      const double gain = 1.0 / std::sqrt(static_cast<double>(k));
      buf[k] *= gain;
      if (k != n / 2) buf[n - k] *= gain;  // keep conjugate symmetry
    }
    detail::fft_radix2(buf, /*inverse=*/true);
    double power = 0.0;
    for (std::size_t i = 0; i < length; ++i) {
      w.samples[i] = buf[i].real();
      power += w.samples[i] * w.samples[i];
    }
    const double rms = std::sqrt(power / static_cast<double>(length));
    if (rms > 0.0) {
      for (double& s : w.samples) s *= kTargetRms / rms;
    }
  }
  for (double& s : w.samples) s = std::clamp(s, -1.0, 1.0);
  return w;
}

/// Length-matched noise excerpt: tiles noise shorter than the target;
/// for longer noise picks a seed-deterministic random start offset.
inline Waveform prepare_noise_excerpt(const Waveform& noise, std::size_t length,
                                      std::uint64_t seed) {
  if (noise.samples.empty()) throw DataError("prepare_noise_excerpt: empty noise");
  Waveform out;
  out.sample_rate_hz = noise.sample_rate_hz;
  out.samples.resize(length);
  std::size_t offset = 0;
  if (noise.samples.size() > length) {
    Rng rng(seed);
    offset = rng.integer(noise.samples.size() - length + 1);
  }
  for (std::size_t i = 0; i < length; ++i) {
    out.samples[i] = noise.samples[(offset + i) % noise.samples.size()];
  }
  return out;
}

/// Noise mixing result. noise_scale is the gain applied to the noise to
/// hit the target SNR; rescale is 1 unless the mixture exceeded [-1, 1],
/// in which case the whole mixture was scaled down by this factor
/// (joint rescaling preserves the SNR exactly).
struct MixResult {
  Waveform mixed;
  Waveform scaled_noise;  // the additive component actually mixed in
  double noise_scale = 0.0;
  double rescale = 1.0;
};

/// Add noise to a clean signal at a target SNR in dB. The noise gain is
/// alpha = sqrt(P_clean / (P_noise * 10^(snr_db/10))) with P the mean
/// squared sample over the mixed region; noise shorter than the clean
/// signal is tiled, longer noise is truncated at offset 0 (use
/// prepare_noise_excerpt for randomized offsets).
inline MixResult mix_at_snr(const Waveform& clean, const Waveform& noise, double snr_db) {
  if (clean.samples.empty()) throw DataError("mix_at_snr: empty clean signal");
  if (noise.samples.empty()) throw DataError("mix_at_snr: empty noise signal");
  if (clean.sample_rate_hz != noise.sample_rate_hz) {
    throw DataError("mix_at_snr: sample rates differ (resample the noise first)");
  }

  const Waveform excerpt = prepare_noise_excerpt(noise, clean.samples.size(), /*seed=*/0);
  const double p_clean = mean_power(clean);
  const double p_noise = mean_power(excerpt);
  if (p_clean <= 0.0) throw DataError("mix_at_snr: clean signal has zero power");
  if (p_noise <= 0.0) throw DataError("mix_at_snr: noise has zero power");

  const double alpha = std::sqrt(p_clean / (p_noise * std::pow(10.0, snr_db / 10.0)));

  MixResult result;
  result.noise_scale = alpha;
  result.mixed.sample_rate_hz = clean.sample_rate_hz;
  result.mixed.samples.resize(clean.samples.size());
  result.scaled_noise.sample_rate_hz = clean.sample_rate_hz;
  result.scaled_noise.samples.resize(clean.samples.size());

  double peak = 0.0;
  for (std::size_t i = 0; i < clean.samples.size(); ++i) {
    result.scaled_noise.samples[i] = alpha * excerpt.samples[i];
    result.mixed.samples[i] = clean.samples[i] + result.scaled_noise.samples[i];
    peak = std::max(peak, std::abs(result.mixed.samples[i]));
  }
  if (peak > 1.0) {
    result.rescale = 1.0 / peak;
    for (double& s : result.mixed.samples) s *= result.rescale;
    for (double& s : result.scaled_noise.samples) s *= result.rescale;
  }
  return result;
}

}  // namespace poivox

#endif  // POIVOX_AUGMENT_HPP_
