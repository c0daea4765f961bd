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

#ifndef POIVOX_SYNTHETIC_HPP_
#define POIVOX_SYNTHETIC_HPP_

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "poivox/error.hpp"
#include "poivox/manifest.hpp"
#include "poivox/rng.hpp"
#include "poivox/waveform.hpp"

namespace poivox {

/// Desk-scale corpus of harmonic pseudo-voices. Each synthetic speaker
/// is a fundamental frequency plus a harmonic amplitude profile drawn
/// from the seed; real utterances of a speaker vary phase, duration and
/// low-level noise around that signature, while a fake claiming speaker
/// p carries the harmonic signature of a different (donor) speaker.
struct SyntheticCorpusSpec {
  int n_speakers = 10;
  int utts_per_speaker = 20;   // real utterances per speaker
  int fakes_per_speaker = 10;  // fake utterances claiming each speaker
  int sample_rate_hz = 16000;
  std::uint64_t seed = 0;
};

namespace detail {

struct SpeakerSignature {
  double f0_hz = 0.0;
  std::vector<double> harmonic_amps;
};

inline SpeakerSignature make_signature(int index, int n_speakers, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "speaker/" + std::to_string(index)));
  SpeakerSignature sig;
  // Fundamentals are spread over [110, 290] Hz with per-speaker jitter,
  // so no two signatures collide.
  const double step = 180.0 / n_speakers;
  sig.f0_hz = 110.0 + step * (index + 0.6 * rng.uniform());

  constexpr int kHarmonics = 12;
  const double rolloff = rng.uniform(0.6, 1.5);
  sig.harmonic_amps.resize(kHarmonics);
  double norm = 0.0;
  for (int h = 0; h < kHarmonics; ++h) {
    const double a = (0.3 + 0.7 * rng.uniform()) * std::pow(h + 1.0, -rolloff);
    sig.harmonic_amps[static_cast<std::size_t>(h)] = a;
    norm += a * a;
  }
  norm = std::sqrt(norm);
  for (double& a : sig.harmonic_amps) a /= norm;
  return sig;
}

inline Waveform synth_utterance(const SpeakerSignature& sig, int sample_rate_hz,
                                std::uint64_t utt_seed) {
  Rng rng(utt_seed);
  const double duration_s = 3.0 + rng.uniform(-0.5, 1.0);
  const double f0 = sig.f0_hz * (1.0 + 0.01 * rng.uniform(-1.0, 1.0));
  const double env_hz = rng.uniform(0.3, 1.2);
  const double env_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
  std::vector<double> phases(sig.harmonic_amps.size());
  for (double& p : phases) p = rng.uniform(0.0, 2.0 * std::numbers::pi);

  Waveform w;
  w.sample_rate_hz = sample_rate_hz;
  w.samples.resize(n);
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate_hz;
    double s = 0.0;
    for (std::size_t h = 0; h < sig.harmonic_amps.size(); ++h) {
      s += sig.harmonic_amps[h] *
           std::sin(2.0 * std::numbers::pi * f0 * static_cast<double>(h + 1) * t + phases[h]);
    }
    s *= 0.85 + 0.15 * std::sin(2.0 * std::numbers::pi * env_hz * t + env_phase);
    w.samples[i] = s;
    peak = std::max(peak, std::abs(s));
  }

  // Peak 0.5, then low-level recording noise at 30 dB SNR.
  double power = 0.0;
  for (double& s : w.samples) {
    s *= 0.5 / peak;
    power += s * s;
  }
  const double noise_rms = std::sqrt(power / static_cast<double>(n)) * std::pow(10.0, -30.0 / 20.0);
  for (double& s : w.samples) {
    s = std::clamp(s + noise_rms * rng.gaussian(), -1.0, 1.0);
  }
  return w;
}

inline std::string zero_pad(int v, int width) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%0*d", width, v);
  return buf;
}

}  // namespace detail

struct SyntheticCorpus {
  std::vector<ManifestEntry> manifest;
  std::string manifest_path;
};

/// Write the corpus (PCM16 WAVs under <out_dir>/wav plus manifest.csv
/// with paths relative to the manifest) and return its manifest.
/// Byte-identical output for identical (spec, out_dir layout).
inline SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusSpec& spec,
                                                 const std::string& out_dir) {
  if (spec.n_speakers < 2) {
    throw ConfigError("synthetic corpus: need at least 2 speakers (fakes need a donor identity)");
  }
  if (spec.utts_per_speaker < 1) {
    throw ConfigError("synthetic corpus: utts_per_speaker must be >= 1");
  }
  if (spec.fakes_per_speaker < 0) {
    throw ConfigError("synthetic corpus: fakes_per_speaker must be >= 0");
  }
  if (spec.sample_rate_hz < 1000) {
    throw ConfigError("synthetic corpus: sample rate too low");
  }

  std::filesystem::create_directories(std::filesystem::path(out_dir) / "wav");

  std::vector<detail::SpeakerSignature> signatures;
  signatures.reserve(static_cast<std::size_t>(spec.n_speakers));
  for (int i = 0; i < spec.n_speakers; ++i) {
    signatures.push_back(detail::make_signature(i, spec.n_speakers, spec.seed));
  }

  SyntheticCorpus corpus;
  for (int i = 0; i < spec.n_speakers; ++i) {
    const std::string speaker = "spk" + detail::zero_pad(i, 3);
    for (int u = 0; u < spec.utts_per_speaker; ++u) {
      const std::string id = speaker + "_real_" + detail::zero_pad(u, 4);
      const Waveform w = detail::synth_utterance(signatures[static_cast<std::size_t>(i)],
                                                 spec.sample_rate_hz, derive_seed(spec.seed, id));
      const std::string rel = "wav/" + id + ".wav";
      save_wav(w, (std::filesystem::path(out_dir) / rel).string());
      corpus.manifest.push_back({id, speaker, Label::real, rel});
    }
    for (int u = 0; u < spec.fakes_per_speaker; ++u) {
      const std::string id = speaker + "_fake_" + detail::zero_pad(u, 4);
      Rng pick(derive_seed(spec.seed, id + "/donor"));
      const int donor =
          (i + 1 + static_cast<int>(pick.integer(static_cast<std::uint64_t>(spec.n_speakers - 1)))) %
          spec.n_speakers;
      const Waveform w = detail::synth_utterance(signatures[static_cast<std::size_t>(donor)],
                                                 spec.sample_rate_hz, derive_seed(spec.seed, id));
      const std::string rel = "wav/" + id + ".wav";
      save_wav(w, (std::filesystem::path(out_dir) / rel).string());
      corpus.manifest.push_back({id, speaker, Label::fake, rel});
    }
  }

  corpus.manifest_path = (std::filesystem::path(out_dir) / "manifest.csv").string();
  save_manifest(corpus.manifest, corpus.manifest_path);
  // The on-disk manifest stays relative (corpora are byte-identical
  // wherever they are generated); the returned entries resolve to the
  // actual files.
  for (ManifestEntry& e : corpus.manifest) {
    e.path = (std::filesystem::path(out_dir) / e.path).string();
  }
  return corpus;
}

}  // namespace poivox

#endif  // POIVOX_SYNTHETIC_HPP_
