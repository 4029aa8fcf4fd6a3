#pragma once

#include <cstdint>
#include <vector>

namespace sernet {

// IEEE 754 binary16 conversion, round-to-nearest-even. Finite values whose
// magnitude exceeds 65504 (half's max normal) are clamped to +-65504 instead
// of overflowing to infinity; values below the subnormal range flush to
// signed zero via rounding.
uint16_t float_to_half(float f);
float half_to_float(uint16_t h);

std::vector<uint16_t> to_half(const std::vector<float>& v);
std::vector<float> from_half(const std::vector<uint16_t>& v);

}  // namespace sernet
