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

#ifndef POIVOX_FRONTEND_HPP_
#define POIVOX_FRONTEND_HPP_

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "poivox/error.hpp"
#include "poivox/waveform.hpp"

namespace poivox {

/// Short-time analysis settings. n_mels = 0 selects the linear power
/// spectrogram (fft_size/2 + 1 bins); any n_mels >= 1 selects a log-mel
/// spectrogram with that many bands.
struct FrontendConfig {
  double window_ms = 25.0;
  double hop_ms = 10.0;
  int fft_size = 512;
  int n_mels = 0;
  double fmin_hz = 0.0;
  double fmax_hz = 0.0;  // 0 = sample_rate / 2
  double log_floor = 1e-10;

  int window_samples(int sample_rate_hz) const {
    return static_cast<int>(std::llround(window_ms * sample_rate_hz / 1000.0));
  }
  int hop_samples(int sample_rate_hz) const {
    return static_cast<int>(std::llround(hop_ms * sample_rate_hz / 1000.0));
  }
  double effective_fmax(int sample_rate_hz) const {
    return fmax_hz > 0.0 ? fmax_hz : sample_rate_hz / 2.0;
  }

  void validate(int sample_rate_hz) const {
    if (window_ms <= 0.0 || hop_ms <= 0.0) {
      throw ConfigError("frontend: window_ms and hop_ms must be positive");
    }
    if (fft_size < 2 || (fft_size & (fft_size - 1)) != 0) {
      throw ConfigError("frontend: fft_size must be a power of two");
    }
    if (fft_size < window_samples(sample_rate_hz)) {
      throw ConfigError("frontend: fft_size smaller than the analysis window");
    }
    if (n_mels < 0) throw ConfigError("frontend: n_mels must be >= 0");
    if (log_floor <= 0.0) throw ConfigError("frontend: log_floor must be positive");
    const double fmax = effective_fmax(sample_rate_hz);
    if (fmin_hz < 0.0 || fmin_hz >= fmax || fmax > sample_rate_hz / 2.0 + 1e-9) {
      throw ConfigError("frontend: need 0 <= fmin_hz < fmax_hz <= sample_rate/2");
    }
  }
};

enum class FeatureKind : std::uint8_t { power_spectrogram = 0, log_mel = 1 };

/// frames x bins matrix, row major.
struct FeatureMatrix {
  int frames = 0;
  int bins = 0;
  FeatureKind kind = FeatureKind::power_spectrogram;
  std::vector<double> values;

  double& at(int frame, int bin) { return values[static_cast<std::size_t>(frame) * bins + bin]; }
  double at(int frame, int bin) const {
    return values[static_cast<std::size_t>(frame) * bins + bin];
  }
};

namespace detail {

/// In-place iterative radix-2 FFT. data.size() must be a power of two.
inline void fft_radix2(std::vector<std::complex<double>>& data, bool inverse = false) {
  const std::size_t n = data.size();
  if (n < 2) return;

  for (std::size_t i = 1, j = 0; i < n; ++i) {  // bit reversal permutation
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = data[i + k];
        const std::complex<double> v = data[i + k + len / 2] * w;
        data[i + k] = u + v;
        data[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    for (auto& c : data) c /= static_cast<double>(n);
  }
}

/// Periodic Hann window of length n.
inline std::vector<double> hann_window(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    w[static_cast<std::size_t>(i)] =
        0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / n));
  }
  return w;
}

}  // namespace detail

/// HTK mel scale.
inline double mel_from_hz(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double hz_from_mel(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Hann-windowed power spectrogram: frames of window_ms every hop_ms,
/// zero padded to fft_size, |DFT|^2 over the fft_size/2 + 1 nonnegative
/// frequency bins (no scaling).
inline FeatureMatrix stft_power(const Waveform& w, const FrontendConfig& cfg) {
  cfg.validate(w.sample_rate_hz);
  const int win = cfg.window_samples(w.sample_rate_hz);
  const int hop = cfg.hop_samples(w.sample_rate_hz);
  const auto n = static_cast<std::int64_t>(w.samples.size());
  if (n < win) {
    throw DataError("stft_power: input shorter than one analysis window");
  }

  const int frames = 1 + static_cast<int>((n - win) / hop);
  const int bins = cfg.fft_size / 2 + 1;
  const std::vector<double> window = detail::hann_window(win);

  FeatureMatrix out;
  out.frames = frames;
  out.bins = bins;
  out.kind = FeatureKind::power_spectrogram;
  out.values.resize(static_cast<std::size_t>(frames) * bins);

  std::vector<std::complex<double>> buf(static_cast<std::size_t>(cfg.fft_size));
  for (int f = 0; f < frames; ++f) {
    const std::size_t start = static_cast<std::size_t>(f) * hop;
    for (int i = 0; i < cfg.fft_size; ++i) {
      buf[static_cast<std::size_t>(i)] =
          (i < win) ? w.samples[start + static_cast<std::size_t>(i)] *
                          window[static_cast<std::size_t>(i)]
                    : 0.0;
    }
    detail::fft_radix2(buf);
    for (int b = 0; b < bins; ++b) {
      out.at(f, b) = std::norm(buf[static_cast<std::size_t>(b)]);
    }
  }
  return out;
}

/// Triangular mel filterbank, n_mels x (fft_size/2 + 1). Centers are
/// uniformly spaced on the HTK mel scale between fmin_hz and fmax_hz;
/// weights are evaluated at the FFT bin center frequencies.
inline std::vector<std::vector<double>> mel_filterbank(int n_mels, int fft_size,
                                                       int sample_rate_hz,
                                                       double fmin_hz, double fmax_hz) {
  if (n_mels < 1) throw ConfigError("mel_filterbank: n_mels must be >= 1");
  if (fmin_hz < 0.0 || fmin_hz >= fmax_hz || fmax_hz > sample_rate_hz / 2.0 + 1e-9) {
    throw ConfigError("mel_filterbank: need 0 <= fmin_hz < fmax_hz <= sample_rate/2");
  }

  const int bins = fft_size / 2 + 1;
  const double mel_lo = mel_from_hz(fmin_hz);
  const double mel_hi = mel_from_hz(fmax_hz);

  std::vector<double> edges_hz(static_cast<std::size_t>(n_mels) + 2);
  for (int m = 0; m < n_mels + 2; ++m) {
    edges_hz[static_cast<std::size_t>(m)] =
        hz_from_mel(mel_lo + (mel_hi - mel_lo) * m / (n_mels + 1));
  }

  std::vector<std::vector<double>> fb(static_cast<std::size_t>(n_mels),
                                      std::vector<double>(static_cast<std::size_t>(bins), 0.0));
  for (int m = 0; m < n_mels; ++m) {
    const double left = edges_hz[static_cast<std::size_t>(m)];
    const double center = edges_hz[static_cast<std::size_t>(m) + 1];
    const double right = edges_hz[static_cast<std::size_t>(m) + 2];
    bool any = false;
    for (int b = 0; b < bins; ++b) {
      const double f = static_cast<double>(b) * sample_rate_hz / fft_size;
      double weight = 0.0;
      if (f > left && f < right) {
        weight = (f <= center) ? (f - left) / (center - left)
                               : (right - f) / (right - center);
      }
      if (weight > 0.0) {
        fb[static_cast<std::size_t>(m)][static_cast<std::size_t>(b)] = weight;
        any = true;
      }
    }
    if (!any) {
      throw ConfigError("mel_filterbank: filter " + std::to_string(m) +
                        " covers no FFT bin (n_mels too large for the grid)");
    }
  }
  return fb;
}

/// log(max(filterbank . power_frame, log_floor)) per frame, natural log.
inline FeatureMatrix log_mel(const Waveform& w, const FrontendConfig& cfg) {
  if (cfg.n_mels < 1) throw ConfigError("log_mel: n_mels must be >= 1");
  const FeatureMatrix power = stft_power(w, cfg);
  const auto fb = mel_filterbank(cfg.n_mels, cfg.fft_size, w.sample_rate_hz,
                                 cfg.fmin_hz, cfg.effective_fmax(w.sample_rate_hz));

  FeatureMatrix out;
  out.frames = power.frames;
  out.bins = cfg.n_mels;
  out.kind = FeatureKind::log_mel;
  out.values.resize(static_cast<std::size_t>(out.frames) * out.bins);
  for (int f = 0; f < power.frames; ++f) {
    for (int m = 0; m < cfg.n_mels; ++m) {
      const auto& row = fb[static_cast<std::size_t>(m)];
      double acc = 0.0;
      for (int b = 0; b < power.bins; ++b) {
        acc += row[static_cast<std::size_t>(b)] * power.at(f, b);
      }
      out.at(f, m) = std::log(std::max(acc, cfg.log_floor));
    }
  }
  return out;
}

// Feature dump format: "PVFT" magic, u32 frames, u32 bins, u8 kind,
// then frames*bins row-major 32-bit floats. All little-endian.

inline void write_feature_file(const FeatureMatrix& fm, const std::string& path) {
  std::string out;
  out.reserve(13 + fm.values.size() * 4);
  out.append("PVFT");
  detail::append_u32le(out, static_cast<std::uint32_t>(fm.frames));
  detail::append_u32le(out, static_cast<std::uint32_t>(fm.bins));
  out.push_back(static_cast<char>(fm.kind));
  for (double v : fm.values) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof(bits));
    detail::append_u32le(out, bits);
  }
  detail::write_file_bytes(path, out);
}

inline FeatureMatrix read_feature_file(const std::string& path) {
  const std::string bytes = detail::read_file_bytes(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 13 || std::memcmp(p, "PVFT", 4) != 0) {
    throw FormatError("malformed feature file: " + path);
  }
  FeatureMatrix fm;
  fm.frames = static_cast<int>(detail::read_u32le(p + 4));
  fm.bins = static_cast<int>(detail::read_u32le(p + 8));
  const std::uint8_t kind = p[12];
  if (kind > 1) throw FormatError("malformed feature file (bad kind): " + path);
  fm.kind = static_cast<FeatureKind>(kind);
  const std::size_t count = static_cast<std::size_t>(fm.frames) * static_cast<std::size_t>(fm.bins);
  if (bytes.size() != 13 + count * 4) {
    throw FormatError("malformed feature file (size mismatch): " + path);
  }
  fm.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const float f = detail::read_f32le(p + 13 + i * 4);
    fm.values[i] = static_cast<double>(f);
  }
  return fm;
}

}  // namespace poivox

#endif  // POIVOX_FRONTEND_HPP_
