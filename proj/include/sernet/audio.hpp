#pragma once

#include <string>
#include <vector>

namespace sernet {

constexpr int kCanonicalRate = 16000;

// Mono waveform plus the metadata the training harness needs. Samples are
// kept in double for the signal-processing chain; they stay in [-1, 1] once
// normalize() has run.
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = kCanonicalRate;
  std::string source_id;
  std::string speaker_id;
  std::string label;
};

struct ManifestEntry {
  std::string path;
  std::string label;
  std::string speaker_id;
  std::string split_hint;  // optional, empty when absent
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> label_set;  // sorted distinct labels

  int label_index(const std::string& label) const;
  int num_classes() const { return static_cast<int>(label_set.size()); }
};

// RIFF/WAVE reader: PCM 16-bit or IEEE float 32-bit, mono or stereo.
// Stereo is averaged to mono; 16-bit PCM is scaled by 1/32768. The clip keeps
// the file's native sample rate.
AudioClip read_wav(const std::string& path);

// PCM 16-bit mono writer used by the synthetic-dataset generator and tests.
void write_wav_pcm16(const std::string& path, const std::vector<double>& samples, int sample_rate);

// Windowed-sinc (Kaiser) resampler to 16 kHz. Rates below 8 kHz are rejected.
AudioClip resample_to_16k(const AudioClip& clip);

// Peak normalization into [-1, 1]; all-zero input is returned unchanged.
AudioClip normalize(const AudioClip& clip);

// Cut or zero-pad the tail so the clip holds exactly
// round(target_seconds * sample_rate) samples.
AudioClip segment(const AudioClip& clip, double target_seconds);

// read -> resample -> normalize -> segment, the canonical input pipeline.
AudioClip load_canonical(const std::string& path, double target_seconds);

// CSV manifest with header `path,label,speaker[,split]`, no quoting.
DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& manifest, const std::string& path);

}  // namespace sernet
