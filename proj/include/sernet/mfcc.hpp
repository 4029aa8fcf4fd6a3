#pragma once

#include <complex>
#include <string>
#include <vector>

#include "sernet/audio.hpp"

namespace sernet {

struct StftConfig {
  int frame_len = 1024;  // 64 ms at 16 kHz
  int hop = 256;         // 16 ms
  int fft_size = 1024;
};

struct MelConfig {
  int n_mels = 40;
  double f_min = 40.0;
  double f_max = 7600.0;
  int n_mfcc = 40;
};

// Coefficient-by-frame matrix, row-major [n_mfcc x n_frames].
struct MfccMap {
  int rows = 0;
  int cols = 0;
  std::vector<double> coeffs;

  double at(int r, int c) const { return coeffs[static_cast<size_t>(r) * cols + c]; }
};

// w[k] = 0.54 - 0.46 cos(2 pi k / (n-1)), n >= 2
std::vector<double> hamming_window(int n);

// One-sided 1024-point DFT (bins 0..512), X[k] = sum x[n] e^{-i 2 pi k n / N},
// computed with an iterative radix-2 decimation-in-time transform.
std::vector<std::complex<double>> fft_1024(const std::vector<double>& frame);

// p[k] = |X[k]|^2
std::vector<double> power_spectrum(const std::vector<std::complex<double>>& bins);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular filters with centers uniformly spaced on the mel scale between
// f_min and f_max. Row-major [n_mels x (fft_size/2 + 1)].
std::vector<double> mel_filterbank(const MelConfig& cfg, int fft_size, int sample_rate);

// Per-frame orthonormal DCT-II along the mel axis, keeping coefficients
// 0..n_mfcc-1. log_mel is row-major [n_mels x n_frames].
MfccMap dct_mfcc(const std::vector<double>& log_mel, int n_mels, int n_frames, int n_mfcc);

// Full pipeline: frame -> window -> fft -> power -> mel -> log -> dct.
// The clip must already be canonical (16 kHz, normalized, fixed length).
MfccMap extract_mfcc(const AudioClip& clip, const StftConfig& stft, const MelConfig& mel);

int num_frames(int64_t n_samples, const StftConfig& stft);

// Binary dump: magic "MFCC", u32 version, u32 rows, u32 cols, row-major fp32.
void write_mfcc(const MfccMap& map, const std::string& path);
MfccMap read_mfcc(const std::string& path);

namespace detail {
// In-place radix-2 transform of any power-of-two length (test hook for
// Parseval and DFT-oracle checks as well as the engine behind fft_1024).
void fft_radix2(std::vector<std::complex<double>>& a);
}  // namespace detail

}  // namespace sernet
