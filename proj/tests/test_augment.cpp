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

#include "poivox/augment.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "poivox/rng.hpp"

namespace {

poivox::Waveform sine(double freq_hz, int rate, double duration_s, double amp = 0.5) {
  poivox::Waveform w;
  w.sample_rate_hz = rate;
  const auto n = static_cast<std::size_t>(duration_s * rate);
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    w.samples[i] = amp * std::sin(2.0 * std::numbers::pi * freq_hz * i / rate);
  }
  return w;
}

TEST(MixAtSnr, EqualPowerZeroDbHasUnitGain) {
  const auto clean = sine(440.0, 16000, 1.0, 0.3);
  poivox::Waveform noise = clean;  // identical power by construction
  const auto mix = poivox::mix_at_snr(clean, noise, 0.0);
  EXPECT_NEAR(mix.noise_scale, 1.0, 1e-12);
}

TEST(MixAtSnr, TenDbGain) {
  const auto clean = sine(440.0, 16000, 1.0, 0.3);
  const auto mix = poivox::mix_at_snr(clean, clean, 10.0);
  EXPECT_NEAR(mix.noise_scale, std::pow(10.0, -0.5), 1e-12);
  EXPECT_NEAR(mix.noise_scale, 0.31623, 1e-5);
}

TEST(MixAtSnr, HugeSnrReturnsClean) {
  const auto clean = sine(300.0, 16000, 1.0, 0.4);
  const auto noise = poivox::gen_noise(poivox::NoiseKind::white, clean.samples.size(), 16000, 7);
  const auto mix = poivox::mix_at_snr(clean, noise, 300.0);
  ASSERT_EQ(mix.mixed.samples.size(), clean.samples.size());
  for (std::size_t i = 0; i < clean.samples.size(); ++i) {
    ASSERT_NEAR(mix.mixed.samples[i], clean.samples[i], 1e-6);
  }
}

TEST(MixAtSnr, MeasuredSnrHitsTargetAcrossGridAndSources) {
  const auto clean = sine(220.0, 16000, 2.0, 0.4);
  const auto file_like = sine(50.0, 16000, 0.7, 0.2);  // shorter: gets tiled
  for (double target : {-10.0, -5.0, 0.0, 5.0, 10.0, 20.0, 30.0, 40.0}) {
    int source = 0;
    for (const auto& noise :
         {poivox::gen_noise(poivox::NoiseKind::white, 32000, 16000, 1),
          poivox::gen_noise(poivox::NoiseKind::pink, 32000, 16000, 2), file_like}) {
      const auto mix = poivox::mix_at_snr(clean, noise, target);
      // Clean component recovered from the mixture and the reported
      // additive part; rescaling cancels in the ratio.
      poivox::Waveform clean_part;
      clean_part.sample_rate_hz = 16000;
      for (std::size_t i = 0; i < mix.mixed.samples.size(); ++i) {
        clean_part.samples.push_back(mix.mixed.samples[i] - mix.scaled_noise.samples[i]);
      }
      EXPECT_NEAR(poivox::measure_snr_db(clean_part, mix.scaled_noise), target, 0.1)
          << "target " << target << " source " << source;
      ++source;
    }
  }
}

TEST(MixAtSnr, JointRescalePreservesSnrAndRange) {
  const auto clean = sine(220.0, 16000, 1.0, 0.95);
  const auto noise = sine(700.0, 16000, 1.0, 0.9);
  const auto mix = poivox::mix_at_snr(clean, noise, 0.0);
  EXPECT_LT(mix.rescale, 1.0);
  double peak = 0.0;
  for (double s : mix.mixed.samples) peak = std::max(peak, std::abs(s));
  EXPECT_LE(peak, 1.0 + 1e-12);

  poivox::Waveform clean_part;
  clean_part.sample_rate_hz = 16000;
  for (std::size_t i = 0; i < mix.mixed.samples.size(); ++i) {
    clean_part.samples.push_back(mix.mixed.samples[i] - mix.scaled_noise.samples[i]);
  }
  EXPECT_NEAR(poivox::measure_snr_db(clean_part, mix.scaled_noise), 0.0, 0.1);
}

TEST(MixAtSnr, GainScalesWithCleanAmplitude) {
  const auto clean = sine(220.0, 16000, 1.0, 0.2);
  auto louder = clean;
  for (double& s : louder.samples) s *= 3.0;
  const auto noise = poivox::gen_noise(poivox::NoiseKind::white, 16000, 16000, 3);
  const auto a = poivox::mix_at_snr(clean, noise, 12.0);
  const auto b = poivox::mix_at_snr(louder, noise, 12.0);
  EXPECT_NEAR(b.noise_scale, 3.0 * a.noise_scale, 1e-9);
}

TEST(MixAtSnr, ZeroPowerRejected) {
  poivox::Waveform silent;
  silent.sample_rate_hz = 16000;
  silent.samples.assign(1000, 0.0);
  const auto tone = sine(220.0, 16000, 0.1);
  EXPECT_THROW(poivox::mix_at_snr(silent, tone, 10.0), poivox::DataError);
  EXPECT_THROW(poivox::mix_at_snr(tone, silent, 10.0), poivox::DataError);
}

TEST(MixAtSnr, SampleRateMismatchRejected) {
  EXPECT_THROW(poivox::mix_at_snr(sine(220.0, 16000, 0.1), sine(220.0, 8000, 0.1), 10.0),
               poivox::DataError);
}

TEST(SampleSnr, PaperRangesAndDeterminism) {
  for (const auto& [lo, hi] : {std::pair{3.0, 25.0}, std::pair{5.0, 20.0}}) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const double v = poivox::sample_snr(lo, hi, seed);
      ASSERT_GE(v, lo);
      ASSERT_LE(v, hi);
      ASSERT_EQ(v, poivox::sample_snr(lo, hi, seed));
    }
  }
  EXPECT_EQ(poivox::sample_snr(10.0, 10.0, 99), 10.0);
  EXPECT_THROW(poivox::sample_snr(5.0, 3.0, 0), poivox::ConfigError);
}

TEST(GenNoise, DeterministicUnderSeed) {
  const auto a = poivox::gen_noise(poivox::NoiseKind::white, 8000, 16000, 42);
  const auto b = poivox::gen_noise(poivox::NoiseKind::white, 8000, 16000, 42);
  EXPECT_EQ(a.samples, b.samples);
  const auto p1 = poivox::gen_noise(poivox::NoiseKind::pink, 8000, 16000, 43);
  const auto p2 = poivox::gen_noise(poivox::NoiseKind::pink, 8000, 16000, 43);
  EXPECT_EQ(p1.samples, p2.samples);
  EXPECT_NE(a.samples, poivox::gen_noise(poivox::NoiseKind::white, 8000, 16000, 44).samples);
}

const std::vector<std::pair<double, double>> kOctaves = {
    {250, 500}, {500, 1000}, {1000, 2000}, {2000, 4000}};

// Averaged band power over octaves from the quadratic-time DFT oracle,
// Bartlett-style over two disjoint segments.
std::vector<double> octave_powers(const poivox::Waveform& w) {
  constexpr std::size_t kSeg = 8000;
  std::vector<double> power(kOctaves.size(), 0.0);
  for (std::size_t seg : {std::size_t{0}, std::size_t{32000}}) {
    const std::vector<double> chunk(w.samples.begin() + static_cast<std::ptrdiff_t>(seg),
                                    w.samples.begin() + static_cast<std::ptrdiff_t>(seg + kSeg));
    const auto p = oracles::band_powers(chunk, 16000.0, kOctaves);
    for (std::size_t b = 0; b < power.size(); ++b) power[b] += p[b];
  }
  return power;
}

TEST(GenNoise, WhiteIsSpectrallyFlat) {
  const auto power =
      octave_powers(poivox::gen_noise(poivox::NoiseKind::white, 64000, 16000, 5));
  for (std::size_t b = 1; b < power.size(); ++b) {
    const double ratio_db = 10.0 * std::log10(power[b] / power[0]);
    EXPECT_NEAR(ratio_db, 0.0, 3.0) << "octave " << b;
  }
}

TEST(GenNoise, PinkFallsThreeDbPerOctave) {
  const auto power =
      octave_powers(poivox::gen_noise(poivox::NoiseKind::pink, 64000, 16000, 6));
  for (std::size_t b = 1; b < power.size(); ++b) {
    const double step_db = 10.0 * std::log10(power[b] / power[b - 1]);
    EXPECT_NEAR(step_db, -3.0, 1.5) << "octave step " << b;
  }
}

TEST(GenNoise, SamplesStayInRange) {
  for (auto kind : {poivox::NoiseKind::white, poivox::NoiseKind::pink}) {
    const auto w = poivox::gen_noise(kind, 32000, 16000, 9);
    for (double s : w.samples) {
      ASSERT_GE(s, -1.0);
      ASSERT_LE(s, 1.0);
    }
  }
}

TEST(PrepareNoiseExcerpt, TilesShorterNoise) {
  const auto noise = sine(100.0, 16000, 0.25);
  const auto out = poivox::prepare_noise_excerpt(noise, 16000, 1);
  ASSERT_EQ(out.samples.size(), 16000u);
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    ASSERT_EQ(out.samples[i], noise.samples[i % noise.samples.size()]);
  }
}

TEST(PrepareNoiseExcerpt, LongerNoiseUsesSeededOffset) {
  const auto noise = poivox::gen_noise(poivox::NoiseKind::white, 32000, 16000, 10);
  const auto a = poivox::prepare_noise_excerpt(noise, 4000, 77);
  const auto b = poivox::prepare_noise_excerpt(noise, 4000, 77);
  EXPECT_EQ(a.samples, b.samples);
  // Some other seed should pick a different window (overwhelmingly likely).
  const auto c = poivox::prepare_noise_excerpt(noise, 4000, 78);
  EXPECT_NE(a.samples, c.samples);
}

TEST(GenNoise, ArgumentChecks) {
  EXPECT_THROW(poivox::gen_noise(poivox::NoiseKind::file, 100, 16000, 0), poivox::ConfigError);
  EXPECT_THROW(poivox::gen_noise(poivox::NoiseKind::white, 0, 16000, 0), poivox::ConfigError);
}

}  // namespace
