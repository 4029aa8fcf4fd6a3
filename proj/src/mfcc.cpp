#include "sernet/mfcc.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "sernet/error.hpp"

namespace sernet {

namespace detail {

void fft_radix2(std::vector<std::complex<double>>& a) {
  const size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw Error(Error::Kind::argument, "fft length must be a power of two");

  // bit-reversal permutation
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  for (size_t len = 2; len <= n; len <<= 1) {
    double ang = -2.0 * M_PI / static_cast<double>(len);
    std::complex<double> wlen_step(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen_step;
      }
    }
  }
}

}  // namespace detail

std::vector<double> hamming_window(int n) {
  if (n < 2) throw Error(Error::Kind::argument, "hamming window needs n >= 2");
  std::vector<double> w(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k)
    w[static_cast<size_t>(k)] = 0.54 - 0.46 * std::cos(2.0 * M_PI * k / (n - 1));
  return w;
}

std::vector<std::complex<double>> fft_1024(const std::vector<double>& frame) {
  if (frame.size() != 1024)
    throw Error(Error::Kind::argument, "fft_1024 expects exactly 1024 samples");
  std::vector<std::complex<double>> a(frame.begin(), frame.end());
  detail::fft_radix2(a);
  a.resize(513);  // real input: keep the one-sided half
  return a;
}

std::vector<double> power_spectrum(const std::vector<std::complex<double>>& bins) {
  std::vector<double> p(bins.size());
  for (size_t i = 0; i < bins.size(); ++i) p[i] = std::norm(bins[i]);
  return p;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> mel_filterbank(const MelConfig& cfg, int fft_size, int sample_rate) {
  const double nyquist = sample_rate / 2.0;
  if (cfg.f_max > nyquist)
    throw Error(Error::Kind::argument, "mel f_max above Nyquist");
  if (cfg.f_min >= cfg.f_max)
    throw Error(Error::Kind::argument, "mel f_min must be below f_max");

  const int n_bins = fft_size / 2 + 1;
  const int n_mels = cfg.n_mels;

  // filter edge frequencies: n_mels + 2 points uniform on the mel scale
  std::vector<double> edges(static_cast<size_t>(n_mels) + 2);
  double mel_lo = hz_to_mel(cfg.f_min), mel_hi = hz_to_mel(cfg.f_max);
  for (int i = 0; i < n_mels + 2; ++i)
    edges[static_cast<size_t>(i)] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));

  std::vector<double> bank(static_cast<size_t>(n_mels) * n_bins, 0.0);
  for (int m = 0; m < n_mels; ++m) {
    double left = edges[static_cast<size_t>(m)];
    double center = edges[static_cast<size_t>(m) + 1];
    double right = edges[static_cast<size_t>(m) + 2];
    for (int k = 0; k < n_bins; ++k) {
      double f = static_cast<double>(k) * sample_rate / fft_size;
      double w = 0.0;
      if (f > left && f < center)
        w = (f - left) / (center - left);
      else if (f == center)
        w = 1.0;
      else if (f > center && f < right)
        w = (right - f) / (right - center);
      bank[static_cast<size_t>(m) * n_bins + k] = w;
    }
  }
  return bank;
}

MfccMap dct_mfcc(const std::vector<double>& log_mel, int n_mels, int n_frames, int n_mfcc) {
  if (n_mfcc > n_mels)
    throw Error(Error::Kind::argument, "n_mfcc cannot exceed n_mels");
  if (log_mel.size() != static_cast<size_t>(n_mels) * n_frames)
    throw Error(Error::Kind::shape, "log_mel size mismatch");

  // orthonormal DCT-II basis, row k evaluated over mel index n
  std::vector<double> basis(static_cast<size_t>(n_mfcc) * n_mels);
  const double s0 = std::sqrt(1.0 / n_mels);
  const double sk = std::sqrt(2.0 / n_mels);
  for (int k = 0; k < n_mfcc; ++k)
    for (int n = 0; n < n_mels; ++n)
      basis[static_cast<size_t>(k) * n_mels + n] =
          (k == 0 ? s0 : sk) * std::cos(M_PI * (2.0 * n + 1.0) * k / (2.0 * n_mels));

  MfccMap out;
  out.rows = n_mfcc;
  out.cols = n_frames;
  out.coeffs.assign(static_cast<size_t>(n_mfcc) * n_frames, 0.0);
  for (int k = 0; k < n_mfcc; ++k)
    for (int n = 0; n < n_mels; ++n) {
      double b = basis[static_cast<size_t>(k) * n_mels + n];
      const double* src = &log_mel[static_cast<size_t>(n) * n_frames];
      double* dst = &out.coeffs[static_cast<size_t>(k) * n_frames];
      for (int t = 0; t < n_frames; ++t) dst[t] += b * src[t];
    }
  return out;
}

int num_frames(int64_t n_samples, const StftConfig& stft) {
  if (n_samples < stft.frame_len) return 0;
  return static_cast<int>(1 + (n_samples - stft.frame_len) / stft.hop);
}

MfccMap extract_mfcc(const AudioClip& clip, const StftConfig& stft, const MelConfig& mel) {
  if (stft.frame_len > stft.fft_size)
    throw Error(Error::Kind::argument, "frame_len larger than fft_size");
  const int frames = num_frames(static_cast<int64_t>(clip.samples.size()), stft);
  if (frames <= 0)
    throw Error(Error::Kind::empty_input, "clip shorter than one frame");

  const std::vector<double> window = hamming_window(stft.frame_len);
  const std::vector<double> bank = mel_filterbank(mel, stft.fft_size, clip.sample_rate);
  const int n_bins = stft.fft_size / 2 + 1;
  constexpr double kLogFloor = 1e-10;

  std::vector<double> log_mel(static_cast<size_t>(mel.n_mels) * frames);
  std::vector<std::complex<double>> buf(static_cast<size_t>(stft.fft_size));
  for (int f = 0; f < frames; ++f) {
    const double* src = clip.samples.data() + static_cast<size_t>(f) * stft.hop;
    for (int i = 0; i < stft.frame_len; ++i)
      buf[static_cast<size_t>(i)] = src[i] * window[static_cast<size_t>(i)];
    for (int i = stft.frame_len; i < stft.fft_size; ++i) buf[static_cast<size_t>(i)] = 0.0;
    detail::fft_radix2(buf);

    for (int m = 0; m < mel.n_mels; ++m) {
      const double* filt = &bank[static_cast<size_t>(m) * n_bins];
      double acc = 0.0;
      for (int k = 0; k < n_bins; ++k) acc += filt[k] * std::norm(buf[static_cast<size_t>(k)]);
      log_mel[static_cast<size_t>(m) * frames + f] = std::log(std::max(acc, kLogFloor));
    }
  }
  return dct_mfcc(log_mel, mel.n_mels, frames, mel.n_mfcc);
}

void write_mfcc(const MfccMap& map, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Error::Kind::format, "cannot write mfcc dump: " + path);
  uint32_t version = 1, rows = static_cast<uint32_t>(map.rows), cols = static_cast<uint32_t>(map.cols);
  out.write("MFCC", 4);
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&rows), 4);
  out.write(reinterpret_cast<const char*>(&cols), 4);
  for (double v : map.coeffs) {
    float f = static_cast<float>(v);
    out.write(reinterpret_cast<const char*>(&f), 4);
  }
}

MfccMap read_mfcc(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Error::Kind::format, "cannot open mfcc dump: " + path);
  char magic[4];
  uint32_t version = 0, rows = 0, cols = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&rows), 4);
  in.read(reinterpret_cast<char*>(&cols), 4);
  if (!in || std::memcmp(magic, "MFCC", 4) != 0 || version != 1)
    throw Error(Error::Kind::format, "bad mfcc dump header: " + path);
  MfccMap map;
  map.rows = static_cast<int>(rows);
  map.cols = static_cast<int>(cols);
  map.coeffs.resize(static_cast<size_t>(rows) * cols);
  for (double& v : map.coeffs) {
    float f;
    in.read(reinterpret_cast<char*>(&f), 4);
    v = f;
  }
  if (!in) throw Error(Error::Kind::format, "truncated mfcc dump: " + path);
  return map;
}

}  // namespace sernet
