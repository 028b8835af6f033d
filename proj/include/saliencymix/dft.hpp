#pragma once

/// @file dft.hpp
/// @brief Separable 2-D discrete Fourier transform over row-major complex
/// fields. Power-of-two line lengths use an iterative radix-2 FFT; other
/// lengths fall back to a direct O(n^2) transform.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "saliencymix/core_types.hpp"

namespace saliencymix {

using Complex = std::complex<double>;

/// Row-major complex field.
struct ComplexField {
  int width = 0;
  int height = 0;
  std::vector<Complex> data;

  ComplexField() = default;
  ComplexField(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h) {}

  Complex& at(int x, int y) noexcept { return data[static_cast<std::size_t>(y) * width + x]; }
  const Complex& at(int x, int y) const noexcept {
    return data[static_cast<std::size_t>(y) * width + x];
  }
};

namespace detail {

constexpr bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

// In-place transform of one line. sign = -1 forward, +1 inverse (unscaled).
inline void fft_line(std::vector<Complex>& a, int sign) {
  const std::size_t n = a.size();
  if (n <= 1) return;
  if (!is_power_of_two(n)) {
    std::vector<Complex> out(n);
    for (std::size_t k = 0; k < n; ++k) {
      Complex acc = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>((k * t) % n) /
                             static_cast<double>(n);
        acc += a[t] * Complex(std::cos(angle), std::sin(angle));
      }
      out[k] = acc;
    }
    a.swap(out);
    return;
  }
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    for (std::size_t k = 0; k < half; ++k) {
      // Twiddles computed directly rather than by repeated multiplication so
      // that rounding error does not accumulate along the butterfly.
      const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) /
                           static_cast<double>(len);
      const Complex w(std::cos(angle), std::sin(angle));
      for (std::size_t i = k; i < n; i += len) {
        const Complex u = a[i];
        const Complex v = a[i + half] * w;
        a[i] = u + v;
        a[i + half] = u - v;
      }
    }
  }
}

inline void transform_2d(ComplexField& field, int sign) {
  std::vector<Complex> line(static_cast<std::size_t>(field.width));
  for (int y = 0; y < field.height; ++y) {
    for (int x = 0; x < field.width; ++x) line[x] = field.at(x, y);
    fft_line(line, sign);
    for (int x = 0; x < field.width; ++x) field.at(x, y) = line[x];
  }
  line.resize(static_cast<std::size_t>(field.height));
  for (int x = 0; x < field.width; ++x) {
    for (int y = 0; y < field.height; ++y) line[y] = field.at(x, y);
    fft_line(line, sign);
    for (int y = 0; y < field.height; ++y) field.at(x, y) = line[y];
  }
}

}  // namespace detail

/// Forward 2-D DFT, no scaling.
inline ComplexField dft2d(ComplexField field) {
  detail::transform_2d(field, -1);
  return field;
}

/// Inverse 2-D DFT, scaled by 1/(W*H).
inline ComplexField idft2d(ComplexField field) {
  detail::transform_2d(field, +1);
  const double scale = 1.0 / (static_cast<double>(field.width) * field.height);
  for (auto& v : field.data) v *= scale;
  return field;
}

}  // namespace saliencymix
