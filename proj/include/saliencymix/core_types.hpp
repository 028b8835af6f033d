#pragma once

/// @file core_types.hpp
/// @brief Value types shared by every saliencymix module: images, saliency
/// maps, label vectors, the error type and the counter-based RNG.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace saliencymix {

enum class ErrorKind {
  unsupported_format,
  numeric_domain,
  missing_input,
  shape,
  empty_input,
  corrupt_file,
  not_found,
  parse,
  io,
};

inline const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::unsupported_format: return "unsupported-format";
    case ErrorKind::numeric_domain: return "numeric-domain";
    case ErrorKind::missing_input: return "missing-input";
    case ErrorKind::shape: return "shape";
    case ErrorKind::empty_input: return "empty-input";
    case ErrorKind::corrupt_file: return "corrupt-file";
    case ErrorKind::not_found: return "not-found";
    case ErrorKind::parse: return "parse";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library. The kind is stable and meant for
/// programmatic dispatch; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Row-major, channel-interleaved 8-bit raster.
class Image {
 public:
  Image() = default;

  Image(int width, int height, int channels, std::uint8_t fill = 0)
      : width_(width), height_(height), channels_(channels) {
    check_dims(width, height, channels);
    pixels_.assign(static_cast<std::size_t>(width) * height * channels, fill);
  }

  Image(int width, int height, int channels, std::vector<std::uint8_t> pixels)
      : width_(width), height_(height), channels_(channels), pixels_(std::move(pixels)) {
    check_dims(width, height, channels);
    if (pixels_.size() != static_cast<std::size_t>(width) * height * channels) {
      throw Error(ErrorKind::shape, "pixel buffer length " + std::to_string(pixels_.size()) +
                                        " does not match " + std::to_string(width) + "x" +
                                        std::to_string(height) + "x" + std::to_string(channels));
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  bool empty() const noexcept { return pixels_.empty(); }

  std::size_t index(int x, int y, int c = 0) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  std::uint8_t at(int x, int y, int c = 0) const noexcept { return pixels_[index(x, y, c)]; }
  std::uint8_t& at(int x, int y, int c = 0) noexcept { return pixels_[index(x, y, c)]; }

  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  std::span<std::uint8_t> pixels() noexcept { return pixels_; }

  bool same_shape(const Image& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  static void check_dims(int width, int height, int channels) {
    if (width < 1 || height < 1) {
      throw Error(ErrorKind::shape, "image dimensions must be positive, got " +
                                        std::to_string(width) + "x" + std::to_string(height));
    }
    if (channels < 1) {
      throw Error(ErrorKind::shape, "channel count must be positive");
    }
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Row-major scalar field. Values produced by normalize_map lie in [0,1].
class SaliencyMap {
 public:
  SaliencyMap() = default;

  SaliencyMap(int width, int height, double fill = 0.0)
      : width_(width), height_(height),
        values_(static_cast<std::size_t>(width) * height, fill) {}

  SaliencyMap(int width, int height, std::vector<double> values)
      : width_(width), height_(height), values_(std::move(values)) {
    if (values_.size() != static_cast<std::size_t>(width) * height) {
      throw Error(ErrorKind::shape, "saliency buffer length mismatch");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  double at(int x, int y) const noexcept { return values_[static_cast<std::size_t>(y) * width_ + x]; }
  double& at(int x, int y) noexcept { return values_[static_cast<std::size_t>(y) * width_ + x]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  friend bool operator==(const SaliencyMap&, const SaliencyMap&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

/// Per-class probabilities.
struct LabelVector {
  std::vector<double> probs;

  static LabelVector one_hot(std::size_t class_count, std::size_t label) {
    if (label >= class_count) {
      throw Error(ErrorKind::shape, "label " + std::to_string(label) + " out of range for " +
                                        std::to_string(class_count) + " classes");
    }
    LabelVector v{std::vector<double>(class_count, 0.0)};
    v.probs[label] = 1.0;
    return v;
  }

  std::size_t size() const noexcept { return probs.size(); }

  bool valid(double tolerance = 1e-9) const noexcept {
    double sum = 0.0;
    for (double p : probs) {
      if (!(p >= 0.0)) return false;
      sum += p;
    }
    return std::abs(sum - 1.0) <= tolerance;
  }

  friend bool operator==(const LabelVector&, const LabelVector&) = default;
};

// ---------------------------------------------------------------------------
// Random numbers
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based generator state. Draw number n of a seed is
/// splitmix64_mix(seed + (n + 1) * gamma), i.e. the n-th output of a classic
/// SplitMix64 stream started at `seed`, so any draw is addressable directly.
struct RngState {
  std::uint64_t seed = 0;
  std::uint64_t counter = 0;

  std::uint64_t next_u64() noexcept {
    const std::uint64_t out = splitmix64_mix(seed + (counter + 1) * kGoldenGamma);
    ++counter;
    return out;
  }

  friend bool operator==(const RngState&, const RngState&) = default;
};

/// Uniform draw strictly inside (0,1) from the top 53 bits of the next
/// output. The single all-zero pattern maps to 2^-54.
inline double rng_uniform(RngState& state) noexcept {
  const std::uint64_t top = state.next_u64() >> 11;
  if (top == 0) return 0x1p-54;
  return static_cast<double>(top) * 0x1p-53;
}

/// Uniform index in [0, n) derived from one rng_uniform draw.
inline std::size_t rng_index(RngState& state, std::size_t n) noexcept {
  const auto i = static_cast<std::size_t>(rng_uniform(state) * static_cast<double>(n));
  return std::min(i, n - 1);
}

// ---------------------------------------------------------------------------
// Pixel helpers
// ---------------------------------------------------------------------------

/// BT.601 luma. Single-channel input is returned unchanged.
inline Image luma(const Image& img) {
  if (img.channels() == 1) return img;
  if (img.channels() != 3) {
    throw Error(ErrorKind::unsupported_format,
                "luma expects 1 or 3 channels, got " + std::to_string(img.channels()));
  }
  Image out(img.width(), img.height(), 1);
  const auto src = img.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double v = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
    dst[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  }
  return out;
}

inline constexpr double kConstantMapEpsilon = 1e-12;

/// Min-max normalization to [0,1]. A field whose range is below 1e-12 maps
/// to all zeros so callers can recognise the degenerate case.
inline SaliencyMap normalize_map(int width, int height, std::span<const double> raw) {
  if (raw.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorKind::shape, "raw field length does not match dimensions");
  }
  double lo = 0.0;
  double hi = 0.0;
  bool first = true;
  for (double v : raw) {
    if (!std::isfinite(v)) throw Error(ErrorKind::numeric_domain, "non-finite saliency value");
    if (first) {
      lo = hi = v;
      first = false;
    } else {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  SaliencyMap out(width, height);
  const double range = hi - lo;
  if (range < kConstantMapEpsilon) return out;
  auto dst = out.values();
  for (std::size_t i = 0; i < raw.size(); ++i) {
    dst[i] = std::clamp((raw[i] - lo) / range, 0.0, 1.0);
  }
  return out;
}

inline SaliencyMap normalize_map(int width, int height, const std::vector<double>& raw) {
  return normalize_map(width, height, std::span<const double>(raw));
}

/// True when every value is zero (the normalized form of a constant field).
inline bool is_degenerate(const SaliencyMap& map) noexcept {
  return std::all_of(map.values().begin(), map.values().end(), [](double v) { return v == 0.0; });
}

}  // namespace saliencymix
