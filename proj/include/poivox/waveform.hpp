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

#ifndef POIVOX_WAVEFORM_HPP_
#define POIVOX_WAVEFORM_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "poivox/error.hpp"

namespace poivox {

/// Mono audio signal with samples in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = 16000;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

/// Handling of inputs shorter than a requested segment.
enum class PadMode {
  tile,   // repeat the signal until the target length is reached
  zeros,  // append silence
};

/// Mean squared sample value.
inline double mean_power(const Waveform& w) {
  if (w.samples.empty()) return 0.0;
  double acc = 0.0;
  for (double s : w.samples) acc += s * s;
  return acc / static_cast<double>(w.samples.size());
}

namespace detail {

inline std::uint16_t read_u16le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline float read_f32le(const unsigned char* p) {
  std::uint32_t bits = read_u32le(p);
  float f;
  std::memcpy(&f, &bits, sizeof(f));
  return f;
}

inline void append_u16le(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void append_u32le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::string read_file_bytes(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw IoError("no such file: " + path);
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return bytes;
}

inline void write_file_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write: " + path);
}

}  // namespace detail

/// Decode a RIFF/WAVE file into a mono waveform.
///
/// Accepted encodings: PCM 16-bit and IEEE float 32-bit, plain or wrapped
/// in WAVE_FORMAT_EXTENSIBLE. Multi-channel input is downmixed by
/// arithmetic mean. PCM samples are scaled by 1/32768; float samples are
/// clamped to [-1, 1].
inline Waveform load_wav(const std::string& path) {
  const std::string bytes = detail::read_file_bytes(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();

  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0) {
    throw FormatError("malformed container (not RIFF/WAVE): " + path);
  }

  bool have_fmt = false;
  std::uint16_t format_code = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= n) {
    const char* id = reinterpret_cast<const char*>(p + pos);
    const std::uint32_t chunk_len = detail::read_u32le(p + pos + 4);
    pos += 8;
    if (pos + chunk_len > n) {
      throw FormatError("malformed container (truncated chunk): " + path);
    }
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw FormatError("malformed container (short fmt chunk): " + path);
      format_code = detail::read_u16le(p + pos);
      channels = detail::read_u16le(p + pos + 2);
      sample_rate = detail::read_u32le(p + pos + 4);
      bits = detail::read_u16le(p + pos + 14);
      if (format_code == 0xfffe) {  // WAVE_FORMAT_EXTENSIBLE
        if (chunk_len < 40) {
          throw FormatError("malformed container (short extensible fmt chunk): " + path);
        }
        format_code = detail::read_u16le(p + pos + 24);  // first bytes of SubFormat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = p + pos;
      data_len = chunk_len;
    }
    pos += chunk_len + (chunk_len & 1);  // chunks are word aligned
  }

  if (!have_fmt || data == nullptr) {
    throw FormatError("malformed container (missing fmt or data chunk): " + path);
  }
  if (channels == 0 || sample_rate == 0) {
    throw FormatError("malformed container (bad fmt fields): " + path);
  }

  const bool pcm16 = (format_code == 1 && bits == 16);
  const bool float32 = (format_code == 3 && bits == 32);
  if (!pcm16 && !float32) {
    throw UnsupportedError("unsupported codec (format " + std::to_string(format_code) +
                           ", " + std::to_string(bits) + " bit): " + path);
  }

  const std::size_t bytes_per_sample = pcm16 ? 2 : 4;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t frames = data_len / frame_bytes;
  if (frames == 0) throw FormatError("empty audio payload: " + path);

  Waveform w;
  w.sample_rate_hz = static_cast<int>(sample_rate);
  w.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    const unsigned char* frame = data + f * frame_bytes;
    for (std::uint16_t c = 0; c < channels; ++c) {
      if (pcm16) {
        const auto v = static_cast<std::int16_t>(detail::read_u16le(frame + 2 * c));
        acc += static_cast<double>(v) / 32768.0;
      } else {
        acc += std::clamp(static_cast<double>(detail::read_f32le(frame + 4 * c)), -1.0, 1.0);
      }
    }
    w.samples[f] = acc / channels;
  }
  return w;
}

enum class WavEncoding { pcm16, float32 };

/// Write a mono WAV file.
inline void save_wav(const Waveform& w, const std::string& path,
                     WavEncoding enc = WavEncoding::pcm16) {
  const std::size_t n = w.samples.size();
  const std::uint16_t bytes_per_sample = (enc == WavEncoding::pcm16) ? 2 : 4;
  const std::uint32_t data_len = static_cast<std::uint32_t>(n * bytes_per_sample);

  std::string out;
  out.reserve(data_len + 64);
  out.append("RIFF");
  const bool is_float = (enc == WavEncoding::float32);
  const std::uint32_t fmt_len = is_float ? 18 : 16;
  const std::uint32_t fact_len = is_float ? 12 : 0;  // float WAVs carry a fact chunk
  detail::append_u32le(out, 4 + (8 + fmt_len) + fact_len + 8 + data_len);
  out.append("WAVE");
  out.append("fmt ");
  detail::append_u32le(out, fmt_len);
  detail::append_u16le(out, is_float ? 3 : 1);
  detail::append_u16le(out, 1);  // mono
  detail::append_u32le(out, static_cast<std::uint32_t>(w.sample_rate_hz));
  detail::append_u32le(out, static_cast<std::uint32_t>(w.sample_rate_hz) * bytes_per_sample);
  detail::append_u16le(out, bytes_per_sample);
  detail::append_u16le(out, static_cast<std::uint16_t>(8 * bytes_per_sample));
  if (is_float) {
    detail::append_u16le(out, 0);  // cbSize
    out.append("fact");
    detail::append_u32le(out, 4);
    detail::append_u32le(out, static_cast<std::uint32_t>(n));
  }
  out.append("data");
  detail::append_u32le(out, data_len);
  for (double s : w.samples) {
    const double x = std::clamp(s, -1.0, 1.0);
    if (enc == WavEncoding::pcm16) {
      const auto q = static_cast<std::int32_t>(std::llround(x * 32768.0));
      detail::append_u16le(out, static_cast<std::uint16_t>(
                                    std::clamp(q, -32768, 32767)));
    } else {
      const float f = static_cast<float>(x);
      std::uint32_t bits;
      std::memcpy(&bits, &f, sizeof(bits));
      detail::append_u32le(out, bits);
    }
  }
  if (data_len & 1) out.push_back('\0');
  detail::write_file_bytes(path, out);
}

/// Band-limited sample-rate conversion with a Hann-windowed sinc kernel
/// (16 zero crossings; cutoff at the smaller of the two Nyquist rates).
/// Duration is preserved within one output sample.
inline Waveform resample(const Waveform& w, int target_hz) {
  if (target_hz <= 0) throw ConfigError("resample: target rate must be positive");
  if (w.sample_rate_hz == target_hz) return w;
  if (w.samples.empty()) {
    Waveform out;
    out.sample_rate_hz = target_hz;
    return out;
  }

  const double ratio = static_cast<double>(target_hz) / w.sample_rate_hz;
  const auto out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(w.samples.size()) * ratio));

  constexpr int kZeroCrossings = 16;
  const double cutoff = std::min(1.0, ratio);  // relative to input Nyquist
  const double half_width = kZeroCrossings / cutoff;

  const auto& x = w.samples;
  const auto in_len = static_cast<std::ptrdiff_t>(x.size());

  Waveform out;
  out.sample_rate_hz = target_hz;
  out.samples.resize(out_len);
  for (std::size_t j = 0; j < out_len; ++j) {
    const double t = static_cast<double>(j) / ratio;  // position in input samples
    const auto i0 = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::ceil(t - half_width)));
    const auto i1 = std::min<std::ptrdiff_t>(in_len - 1, static_cast<std::ptrdiff_t>(std::floor(t + half_width)));
    double acc = 0.0;
    for (std::ptrdiff_t i = i0; i <= i1; ++i) {
      const double d = t - static_cast<double>(i);
      double k;
      if (d == 0.0) {
        k = cutoff;
      } else {
        const double a = std::numbers::pi * cutoff * d;
        k = cutoff * std::sin(a) / a;
      }
      const double window = 0.5 + 0.5 * std::cos(std::numbers::pi * d / half_width);
      acc += x[static_cast<std::size_t>(i)] * k * window;
    }
    out.samples[j] = acc;
  }
  return out;
}

/// Leading duration_s seconds of the waveform. Shorter inputs are
/// tile-repeated (default) or zero-padded to the requested length.
inline Waveform take_segment(const Waveform& w, double duration_s,
                             PadMode pad = PadMode::tile) {
  if (duration_s <= 0.0) throw ConfigError("take_segment: duration must be positive");
  if (w.samples.empty()) throw DataError("take_segment: empty waveform");

  const auto n = static_cast<std::size_t>(
      std::max<std::int64_t>(1, std::llround(duration_s * w.sample_rate_hz)));

  Waveform out;
  out.sample_rate_hz = w.sample_rate_hz;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i < w.samples.size()) {
      out.samples[i] = w.samples[i];
    } else {
      out.samples[i] = (pad == PadMode::tile) ? w.samples[i % w.samples.size()] : 0.0;
    }
  }
  return out;
}

}  // namespace poivox

#endif  // POIVOX_WAVEFORM_HPP_
