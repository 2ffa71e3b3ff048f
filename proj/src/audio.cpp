// Copyright 2026 The discogan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "discogan/audio.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

namespace discogan {
namespace {

static_assert(std::endian::native == std::endian::little,
              "WAV I/O assumes a little-endian host");

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T read_le(const std::vector<char>& buf, std::size_t pos) {
  if (pos + sizeof(T) > buf.size()) throw std::runtime_error("wav: truncated header");
  T value;
  std::memcpy(&value, buf.data() + pos, sizeof(T));
  return value;
}

template <typename T>
void put_le(std::ofstream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

}  // namespace

AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("wav: cannot open " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw std::runtime_error("wav: not a RIFF/WAVE file: " + path.string());
  }

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    std::string id(buf.data() + pos, 4);
    uint32_t len = read_le<uint32_t>(buf, pos + 4);
    std::size_t body = pos + 8;
    if (body + len > buf.size()) throw std::runtime_error("wav: truncated chunk " + id);
    if (id == "fmt ") {
      format = read_le<uint16_t>(buf, body);
      channels = read_le<uint16_t>(buf, body + 2);
      rate = read_le<uint32_t>(buf, body + 4);
      bits = read_le<uint16_t>(buf, body + 14);
      if (format == kFormatExtensible) format = read_le<uint16_t>(buf, body + 24);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw std::runtime_error("wav: data chunk before fmt chunk");
      if (channels != 1) throw std::runtime_error("wav: only mono files are supported");
      AudioClip clip;
      clip.sample_rate = static_cast<int>(rate);
      if (format == kFormatPcm && bits == 16) {
        clip.samples.resize(len / 2);
        for (std::size_t i = 0; i < clip.samples.size(); ++i)
          clip.samples[i] = read_le<int16_t>(buf, body + 2 * i) / 32768.0;
      } else if (format == kFormatFloat && bits == 32) {
        clip.samples.resize(len / 4);
        for (std::size_t i = 0; i < clip.samples.size(); ++i)
          clip.samples[i] = read_le<float>(buf, body + 4 * i);
      } else {
        throw std::runtime_error("wav: unsupported sample format in " + path.string());
      }
      return clip;
    }
    pos = body + len + (len & 1);
  }
  throw std::runtime_error("wav: no data chunk in " + path.string());
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip, WavFormat format) {
  for (double v : clip.samples) {
    if (!std::isfinite(v)) throw std::runtime_error("wav: non-finite sample in " + path.string());
    if (format == WavFormat::kPcm16 && std::abs(v) > 1.0)
      throw std::runtime_error("wav: sample outside [-1, 1] would clip in " + path.string());
  }
  const uint16_t bits = format == WavFormat::kPcm16 ? 16 : 32;
  const uint16_t tag = format == WavFormat::kPcm16 ? kFormatPcm : kFormatFloat;
  const uint32_t data_len = static_cast<uint32_t>(clip.samples.size() * (bits / 8));
  const uint32_t rate = static_cast<uint32_t>(clip.sample_rate);

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("wav: cannot write " + path.string());
  os.write("RIFF", 4);
  put_le<uint32_t>(os, 36 + data_len);
  os.write("WAVEfmt ", 8);
  put_le<uint32_t>(os, 16);
  put_le<uint16_t>(os, tag);
  put_le<uint16_t>(os, 1);
  put_le<uint32_t>(os, rate);
  put_le<uint32_t>(os, rate * (bits / 8));
  put_le<uint16_t>(os, bits / 8);
  put_le<uint16_t>(os, bits);
  os.write("data", 4);
  put_le<uint32_t>(os, data_len);
  for (double v : clip.samples) {
    if (format == WavFormat::kPcm16) {
      put_le<int16_t>(os, static_cast<int16_t>(std::lround(std::min(v * 32768.0, 32767.0))));
    } else {
      put_le<float>(os, static_cast<float>(v));
    }
  }
  if (!os) throw std::runtime_error("wav: write failed for " + path.string());
}

double mean_power(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

}  // namespace discogan
