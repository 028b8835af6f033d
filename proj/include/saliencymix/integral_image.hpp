#pragma once

#include <cstdint>
#include <vector>

#include "saliencymix/core_types.hpp"

namespace saliencymix {

/// Summed-area table of a single-channel image. Entry (x, y) holds the sum
/// of every pixel strictly above and to the left, so the table is
/// (W+1)x(H+1) and any axis-aligned window sum costs four lookups.
class IntegralImage {
 public:
  explicit IntegralImage(const Image& gray)
      : width_(gray.width()), height_(gray.height()),
        table_(static_cast<std::size_t>(gray.width() + 1) * (gray.height() + 1), 0) {
    if (gray.channels() != 1) {
      throw Error(ErrorKind::unsupported_format, "integral image needs a single-channel image");
    }
    const int stride = width_ + 1;
    for (int y = 0; y < height_; ++y) {
      std::uint64_t row = 0;
      for (int x = 0; x < width_; ++x) {
        row += gray.at(x, y);
        table_[static_cast<std::size_t>(y + 1) * stride + x + 1] =
            table_[static_cast<std::size_t>(y) * stride + x + 1] + row;
      }
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  /// Table entry at (x, y), 0 <= x <= W, 0 <= y <= H.
  std::uint64_t at(int x, int y) const noexcept {
    return table_[static_cast<std::size_t>(y) * (width_ + 1) + x];
  }

  /// Sum over the half-open window [x0, x1) x [y0, y1).
  std::uint64_t window_sum(int x0, int y0, int x1, int y1) const noexcept {
    return at(x1, y1) - at(x0, y1) - at(x1, y0) + at(x0, y0);
  }

  std::uint64_t total() const noexcept { return at(width_, height_); }

  /// Mean over the square of the given radius centred on (cx, cy), clipped to
  /// the image; divides by the clipped pixel count.
  double clipped_mean(int cx, int cy, int radius) const noexcept {
    const int x0 = std::max(cx - radius, 0);
    const int y0 = std::max(cy - radius, 0);
    const int x1 = std::min(cx + radius + 1, width_);
    const int y1 = std::min(cy + radius + 1, height_);
    const auto count = static_cast<double>(x1 - x0) * (y1 - y0);
    return static_cast<double>(window_sum(x0, y0, x1, y1)) / count;
  }

 private:
  int width_;
  int height_;
  std::vector<std::uint64_t> table_;
};

inline IntegralImage integral_image(const Image& gray) { return IntegralImage(gray); }

}  // namespace saliencymix
