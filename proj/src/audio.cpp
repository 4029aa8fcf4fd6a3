#include "sernet/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "sernet/error.hpp"

namespace sernet {

namespace {

uint32_t rd_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
uint16_t rd_u16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Error::Kind::format, "cannot open file: " + path);
  return std::vector<uint8_t>((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
}

// zeroth-order modified Bessel function, power series
double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  double half = x / 2.0;
  for (int k = 1; k < 64; ++k) {
    term *= (half / k) * (half / k);
    sum += term;
    if (term < 1e-16 * sum) break;
  }
  return sum;
}

}  // namespace

AudioClip read_wav(const std::string& path) {
  std::vector<uint8_t> raw = read_file(path);
  if (raw.size() < 12 || std::memcmp(raw.data(), "RIFF", 4) != 0 ||
      std::memcmp(raw.data() + 8, "WAVE", 4) != 0)
    throw Error(Error::Kind::format, "not a RIFF/WAVE file: " + path);

  uint16_t audio_format = 0, num_channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  const uint8_t* data_ptr = nullptr;
  uint32_t data_size = 0;
  bool have_fmt = false;

  size_t pos = 12;
  while (pos + 8 <= raw.size()) {
    const uint8_t* hdr = raw.data() + pos;
    uint32_t chunk_size = rd_u32(hdr + 4);
    size_t body = pos + 8;
    if (body + chunk_size > raw.size()) {
      if (std::memcmp(hdr, "data", 4) == 0)
        throw Error(Error::Kind::format, "truncated data chunk: " + path);
      throw Error(Error::Kind::format, "truncated chunk: " + path);
    }
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw Error(Error::Kind::format, "short fmt chunk: " + path);
      audio_format = rd_u16(raw.data() + body);
      num_channels = rd_u16(raw.data() + body + 2);
      sample_rate = rd_u32(raw.data() + body + 4);
      bits = rd_u16(raw.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data_ptr = raw.data() + body;
      data_size = chunk_size;
    }
    pos = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data_ptr == nullptr)
    throw Error(Error::Kind::format, "missing fmt or data chunk: " + path);
  if (num_channels < 1 || num_channels > 2)
    throw Error(Error::Kind::unsupported, "only mono/stereo supported: " + path);
  if (sample_rate == 0) throw Error(Error::Kind::format, "zero sample rate: " + path);

  bool pcm16 = audio_format == 1 && bits == 16;
  bool float32 = audio_format == 3 && bits == 32;
  if (!pcm16 && !float32)
    throw Error(Error::Kind::unsupported,
                "unsupported codec (want PCM16 or float32): " + path);

  size_t bytes_per = bits / 8u;
  size_t frame_bytes = bytes_per * num_channels;
  if (data_size % frame_bytes != 0)
    throw Error(Error::Kind::format, "data chunk is not frame-aligned: " + path);
  size_t n_frames = data_size / frame_bytes;

  AudioClip clip;
  clip.sample_rate = static_cast<int>(sample_rate);
  clip.source_id = path;
  clip.samples.resize(n_frames);
  for (size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (int ch = 0; ch < num_channels; ++ch) {
      const uint8_t* p = data_ptr + i * frame_bytes + static_cast<size_t>(ch) * bytes_per;
      if (pcm16) {
        int16_t v;
        std::memcpy(&v, p, 2);
        acc += v / 32768.0;
      } else {
        float v;
        std::memcpy(&v, p, 4);
        acc += v;
      }
    }
    clip.samples[i] = acc / num_channels;
  }
  return clip;
}

void write_wav_pcm16(const std::string& path, const std::vector<double>& samples,
                     int sample_rate) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Error::Kind::format, "cannot write file: " + path);

  uint32_t data_size = static_cast<uint32_t>(samples.size() * 2);
  uint32_t riff_size = 36 + data_size;
  uint32_t byte_rate = static_cast<uint32_t>(sample_rate) * 2;

  auto w16 = [&](uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
  auto w32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };

  out.write("RIFF", 4);
  w32(riff_size);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  w32(16);
  w16(1);  // PCM
  w16(1);  // mono
  w32(static_cast<uint32_t>(sample_rate));
  w32(byte_rate);
  w16(2);   // block align
  w16(16);  // bits
  out.write("data", 4);
  w32(data_size);
  for (double s : samples) {
    double clamped = std::clamp(s, -1.0, 1.0);
    int16_t v = static_cast<int16_t>(std::lrint(clamped * 32767.0));
    w16(static_cast<uint16_t>(v));
  }
}

AudioClip resample_to_16k(const AudioClip& clip) {
  if (clip.sample_rate < 8000)
    throw Error(Error::Kind::unsupported,
                "sample rate below 8 kHz: " + std::to_string(clip.sample_rate));
  if (clip.sample_rate == kCanonicalRate) return clip;

  const double in_rate = clip.sample_rate;
  const double ratio = kCanonicalRate / in_rate;
  const int64_t out_len = std::llround(static_cast<double>(clip.samples.size()) * ratio);

  // Low-pass at the smaller Nyquist, expressed as a fraction of the input
  // rate. Kaiser beta 8.6 gives ~90 dB stopband, far beyond the front end's
  // needs.
  const double cutoff = 0.5 * std::min(in_rate, static_cast<double>(kCanonicalRate)) / in_rate;
  const double beta = 8.6;
  const int half_taps = 32;
  const double i0_beta = bessel_i0(beta);

  AudioClip out;
  out.sample_rate = kCanonicalRate;
  out.source_id = clip.source_id;
  out.speaker_id = clip.speaker_id;
  out.label = clip.label;
  out.samples.resize(static_cast<size_t>(out_len));

  const int64_t n_in = static_cast<int64_t>(clip.samples.size());
  for (int64_t i = 0; i < out_len; ++i) {
    double center = static_cast<double>(i) / ratio;  // position in input samples
    int64_t j0 = static_cast<int64_t>(std::ceil(center)) - half_taps;
    int64_t j1 = static_cast<int64_t>(std::floor(center)) + half_taps;
    double acc = 0.0;
    for (int64_t j = std::max<int64_t>(j0, 0); j <= std::min(j1, n_in - 1); ++j) {
      double u = static_cast<double>(j) - center;
      double x = 2.0 * cutoff * u;
      double sinc = x == 0.0 ? 1.0 : std::sin(M_PI * x) / (M_PI * x);
      double t = u / half_taps;
      double window = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - t * t))) / i0_beta;
      acc += clip.samples[static_cast<size_t>(j)] * 2.0 * cutoff * sinc * window;
    }
    out.samples[static_cast<size_t>(i)] = acc;
  }
  return out;
}

AudioClip normalize(const AudioClip& clip) {
  if (clip.samples.empty()) throw Error(Error::Kind::empty_input, "normalize: empty clip");
  double peak = 0.0;
  for (double s : clip.samples) peak = std::max(peak, std::abs(s));
  if (peak == 0.0) return clip;
  AudioClip out = clip;
  for (double& s : out.samples) s /= peak;
  return out;
}

AudioClip segment(const AudioClip& clip, double target_seconds) {
  if (target_seconds <= 0.0)
    throw Error(Error::Kind::argument, "segment: non-positive target length");
  size_t target = static_cast<size_t>(std::llround(target_seconds * clip.sample_rate));
  AudioClip out = clip;
  out.samples.resize(target, 0.0);  // truncates or zero-pads the tail
  return out;
}

AudioClip load_canonical(const std::string& path, double target_seconds) {
  return segment(normalize(resample_to_16k(read_wav(path))), target_seconds);
}

int DatasetManifest::label_index(const std::string& label) const {
  auto it = std::lower_bound(label_set.begin(), label_set.end(), label);
  if (it == label_set.end() || *it != label)
    throw Error(Error::Kind::argument, "unknown label: " + label);
  return static_cast<int>(it - label_set.begin());
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Error::Kind::format, "cannot open manifest: " + path);
  std::string line;
  auto next_line = [&](std::string& out) {
    if (!std::getline(in, out)) return false;
    if (!out.empty() && out.back() == '\r') out.pop_back();
    return true;
  };

  if (!next_line(line) || line.empty())
    throw Error(Error::Kind::empty_input, "empty manifest: " + path);

  auto split = [](const std::string& s) {
    std::vector<std::string> fields;
    std::stringstream ss(s);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (!s.empty() && s.back() == ',') fields.push_back("");
    return fields;
  };

  std::vector<std::string> header = split(line);
  bool has_split = header.size() == 4 && header[3] == "split";
  if (!(header.size() == 3 || has_split) || header[0] != "path" || header[1] != "label" ||
      header[2] != "speaker")
    throw Error(Error::Kind::schema, "manifest header must be path,label,speaker[,split]");

  DatasetManifest m;
  std::set<std::string> labels;
  size_t lineno = 1;
  while (next_line(line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f = split(line);
    if (f.size() != header.size())
      throw Error(Error::Kind::schema,
                  "manifest line " + std::to_string(lineno) + ": wrong field count");
    if (f[0].empty() || f[1].empty() || f[2].empty())
      throw Error(Error::Kind::schema,
                  "manifest line " + std::to_string(lineno) + ": empty required field");
    ManifestEntry e;
    e.path = f[0];
    e.label = f[1];
    e.speaker_id = f[2];
    if (has_split) e.split_hint = f[3];
    labels.insert(e.label);
    m.entries.push_back(std::move(e));
  }
  m.label_set.assign(labels.begin(), labels.end());
  return m;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Error::Kind::format, "cannot write manifest: " + path);
  out << "path,label,speaker\n";
  for (const auto& e : manifest.entries)
    out << e.path << "," << e.label << "," << e.speaker_id << "\n";
}

}  // namespace sernet
