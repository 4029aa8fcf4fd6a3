#include "sernet/fp16.hpp"

#include <cmath>
#include <cstring>

namespace sernet {

uint16_t float_to_half(float f) {
  uint32_t bits;
  std::memcpy(&bits, &f, 4);
  uint16_t sign = static_cast<uint16_t>((bits >> 16) & 0x8000u);
  int32_t exp = static_cast<int32_t>((bits >> 23) & 0xff) - 127;
  uint32_t mant = bits & 0x7fffffu;

  if (exp == 128) {  // inf or NaN
    if (mant != 0) return static_cast<uint16_t>(sign | 0x7e00u);  // qNaN
    return static_cast<uint16_t>(sign | 0x7bffu);                 // clamp inf to 65504
  }

  // Magnitude above half range saturates to max normal, not infinity.
  // exp == 15 values that round past 65504 are caught after rounding below.
  if (exp > 15) return static_cast<uint16_t>(sign | 0x7bffu);

  if (exp < -24) return sign;  // underflows to zero even after rounding

  if (exp < -14) {
    // subnormal half: mantissa shifted with hidden bit restored
    uint32_t full = mant | 0x800000u;
    int shift = -exp - 14 + 13;  // bits to drop from the 24-bit significand
    uint32_t half_mant = full >> shift;
    uint32_t rem = full & ((1u << shift) - 1);
    uint32_t halfway = 1u << (shift - 1);
    if (rem > halfway || (rem == halfway && (half_mant & 1))) half_mant++;
    return static_cast<uint16_t>(sign | half_mant);
  }

  // normal range: drop 13 mantissa bits with round-to-nearest-even
  uint32_t half_mant = mant >> 13;
  uint32_t rem = mant & 0x1fffu;
  uint32_t he = static_cast<uint32_t>(exp + 15);
  if (rem > 0x1000u || (rem == 0x1000u && (half_mant & 1))) {
    half_mant++;
    if (half_mant == 0x400u) {  // mantissa overflow bumps the exponent
      half_mant = 0;
      he++;
    }
  }
  if (he >= 31) return static_cast<uint16_t>(sign | 0x7bffu);  // rounded past max
  return static_cast<uint16_t>(sign | (he << 10) | half_mant);
}

float half_to_float(uint16_t h) {
  uint32_t sign = static_cast<uint32_t>(h & 0x8000u) << 16;
  uint32_t exp = (h >> 10) & 0x1f;
  uint32_t mant = h & 0x3ffu;
  uint32_t bits;
  if (exp == 0) {
    if (mant == 0) {
      bits = sign;
    } else {
      // normalize subnormal
      int e = -1;
      do {
        mant <<= 1;
        e++;
      } while ((mant & 0x400u) == 0);
      bits = sign | ((127 - 15 - e) << 23) | ((mant & 0x3ffu) << 13);
    }
  } else if (exp == 31) {
    bits = sign | 0x7f800000u | (mant << 13);
  } else {
    bits = sign | ((exp - 15 + 127) << 23) | (mant << 13);
  }
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

std::vector<uint16_t> to_half(const std::vector<float>& v) {
  std::vector<uint16_t> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = float_to_half(v[i]);
  return out;
}

std::vector<float> from_half(const std::vector<uint16_t>& v) {
  std::vector<float> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = half_to_float(v[i]);
  return out;
}

}  // namespace sernet
