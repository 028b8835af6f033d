#pragma once

/// @file saliency.hpp
/// @brief Bottom-up saliency detectors and peak/trough localization.
///
/// Three unsupervised detectors are provided:
///   - fine_grained: multi-scale centre-surround intensity contrast computed
///     from one integral image (the default detector);
///   - spectral_residual: log-amplitude spectral residual on a fixed-size
///     working image;
///   - frequency_tuned: distance of the band-passed CIELAB colour from the
///     mean image colour.
/// Every detector returns a map at the input resolution, normalized with
/// normalize_map, so an input without contrast yields the all-zero map.

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "saliencymix/core_types.hpp"
#include "saliencymix/dft.hpp"
#include "saliencymix/integral_image.hpp"

namespace saliencymix {

enum class MethodTag { fine_grained, spectral_residual, frequency_tuned };

inline constexpr std::array kAllMethods = {MethodTag::fine_grained, MethodTag::spectral_residual,
                                           MethodTag::frequency_tuned};

inline const char* to_string(MethodTag tag) noexcept {
  switch (tag) {
    case MethodTag::fine_grained: return "fine_grained";
    case MethodTag::spectral_residual: return "spectral_residual";
    case MethodTag::frequency_tuned: return "frequency_tuned";
  }
  return "unknown";
}

inline MethodTag parse_method(std::string_view text) {
  for (MethodTag tag : kAllMethods) {
    if (text == to_string(tag)) return tag;
  }
  throw Error(ErrorKind::parse, "unknown saliency method '" + std::string(text) + "'");
}

struct FineGrainedParams {
  /// Centre radii; the surround of radius k has radius 2k.
  std::vector<int> scales{1, 2, 3, 4, 5, 6};
};

struct SpectralResidualParams {
  int working_size = 64;
  double blur_sigma = 2.5;
  double log_epsilon = 1e-8;
};

/// Detector selection plus per-detector tunables.
struct SaliencyMethod {
  MethodTag tag = MethodTag::fine_grained;
  FineGrainedParams fine_grained{};
  SpectralResidualParams spectral_residual{};

  static SaliencyMethod of(MethodTag tag) {
    SaliencyMethod m;
    m.tag = tag;
    return m;
  }
};

struct PeakLocation {
  int x = 0;
  int y = 0;
  friend bool operator==(const PeakLocation&, const PeakLocation&) = default;
};

// ---------------------------------------------------------------------------
// Filtering helpers on row-major double fields
// ---------------------------------------------------------------------------

namespace detail {

struct Field {
  int width = 0;
  int height = 0;
  std::vector<double> v;

  Field() = default;
  Field(int w, int h, double fill = 0.0) : width(w), height(h), v(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int x, int y) noexcept { return v[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const noexcept { return v[static_cast<std::size_t>(y) * width + x]; }
  double clamped(int x, int y) const noexcept {
    return at(std::clamp(x, 0, width - 1), std::clamp(y, 0, height - 1));
  }
};

inline Field to_field(const Image& gray) {
  Field f(gray.width(), gray.height());
  const auto px = gray.pixels();
  for (std::size_t i = 0; i < f.v.size(); ++i) f.v[i] = px[i];
  return f;
}

/// Bilinear resampling with pixel centres at half-integer coordinates and
/// edge clamping.
inline Field resize_bilinear(const Field& src, int width, int height) {
  if (src.width == width && src.height == height) return src;
  Field out(width, height);
  const double sx = static_cast<double>(src.width) / width;
  const double sy = static_cast<double>(src.height) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::max((y + 0.5) * sy - 0.5, 0.0);
    const int y0 = std::min(static_cast<int>(fy), src.height - 1);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::max((x + 0.5) * sx - 0.5, 0.0);
      const int x0 = std::min(static_cast<int>(fx), src.width - 1);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double tx = fx - x0;
      const double top = src.at(x0, y0) * (1.0 - tx) + src.at(x1, y0) * tx;
      const double bottom = src.at(x0, y1) * (1.0 - tx) + src.at(x1, y1) * tx;
      out.at(x, y) = top * (1.0 - ty) + bottom * ty;
    }
  }
  return out;
}

/// Separable convolution with a symmetric odd-length kernel, replicating
/// edge samples.
inline Field convolve_separable(const Field& src, const std::vector<double>& kernel) {
  const int radius = static_cast<int>(kernel.size() / 2);
  Field tmp(src.width, src.height);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * src.clamped(x + k, y);
      tmp.at(x, y) = acc;
    }
  }
  Field out(src.width, src.height);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * tmp.clamped(x, y + k);
      out.at(x, y) = acc;
    }
  }
  return out;
}

inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (double& w : k) w /= sum;
  return k;
}

inline const std::vector<double>& binomial5_kernel() {
  static const std::vector<double> k{1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  return k;
}

inline const std::vector<double>& box3_kernel() {
  static const std::vector<double> k{1.0 / 3, 1.0 / 3, 1.0 / 3};
  return k;
}

inline bool is_flat(const Image& img) {
  const auto px = img.pixels();
  return std::all_of(px.begin(), px.end(), [&](std::uint8_t v) { return v == px[0]; });
}

/// sRGB (8-bit, D65) to CIELAB.
inline std::array<double, 3> srgb_to_lab(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
  auto linear = [](std::uint8_t c) {
    const double v = c / 255.0;
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
  };
  const double r = linear(r8);
  const double g = linear(g8);
  const double b = linear(b8);
  const double x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
  const double y = (0.2126729 * r + 0.7151522 * g + 0.0721750 * b) / 1.00000;
  const double z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
  auto f = [](double t) {
    constexpr double delta = 6.0 / 29.0;
    return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
  };
  const double fx = f(x);
  const double fy = f(y);
  const double fz = f(z);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Detectors. The *_raw variants return the un-normalized field.
// ---------------------------------------------------------------------------

/// Sum over scales of |centre mean - surround mean| at every pixel.
inline std::vector<double> fine_grained_raw(const Image& gray, const FineGrainedParams& params = {}) {
  if (gray.channels() != 1) {
    throw Error(ErrorKind::unsupported_format, "fine_grained expects a single-channel image");
  }
  const IntegralImage table(gray);
  const int w = gray.width();
  const int h = gray.height();
  // Radii that do not fit the image shrink to the largest that does.
  const int fit = (std::min(w, h) - 1) / 2;
  std::vector<int> radii;
  for (int k : params.scales) {
    if (k < 0) throw Error(ErrorKind::numeric_domain, "negative fine_grained scale");
    radii.push_back(std::min(k, fit));
  }
  std::vector<double> raw(static_cast<std::size_t>(w) * h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int r : radii) {
        const double centre = table.clipped_mean(x, y, r);
        const double surround = table.clipped_mean(x, y, 2 * r);
        acc += std::max(0.0, centre - surround) + std::max(0.0, surround - centre);
      }
      raw[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  return raw;
}

inline SaliencyMap fine_grained(const Image& gray, const FineGrainedParams& params = {}) {
  return normalize_map(gray.width(), gray.height(), fine_grained_raw(gray, params));
}

inline std::vector<double> spectral_residual_raw(const Image& gray,
                                                 const SpectralResidualParams& params = {}) {
  if (gray.channels() != 1) {
    throw Error(ErrorKind::unsupported_format, "spectral_residual expects a single-channel image");
  }
  if (params.working_size < 1 || !(params.blur_sigma > 0.0) || !(params.log_epsilon > 0.0)) {
    throw Error(ErrorKind::numeric_domain, "invalid spectral_residual parameters");
  }
  const int w = gray.width();
  const int h = gray.height();
  // A flat image has no residual structure; its raw map is flat too.
  if (detail::is_flat(gray)) return std::vector<double>(static_cast<std::size_t>(w) * h, 0.0);

  const int n = params.working_size;
  const detail::Field work = detail::resize_bilinear(detail::to_field(gray), n, n);

  ComplexField spectrum(n, n);
  for (std::size_t i = 0; i < work.v.size(); ++i) spectrum.data[i] = work.v[i];
  spectrum = dft2d(std::move(spectrum));

  detail::Field log_amp(n, n);
  detail::Field phase(n, n);
  for (std::size_t i = 0; i < spectrum.data.size(); ++i) {
    log_amp.v[i] = std::log(std::abs(spectrum.data[i]) + params.log_epsilon);
    phase.v[i] = std::arg(spectrum.data[i]);
  }
  const detail::Field smoothed = detail::convolve_separable(log_amp, detail::box3_kernel());

  for (std::size_t i = 0; i < spectrum.data.size(); ++i) {
    spectrum.data[i] = std::polar(std::exp(log_amp.v[i] - smoothed.v[i]), phase.v[i]);
  }
  spectrum = idft2d(std::move(spectrum));

  detail::Field energy(n, n);
  for (std::size_t i = 0; i < spectrum.data.size(); ++i) energy.v[i] = std::norm(spectrum.data[i]);
  energy = detail::convolve_separable(energy, detail::gaussian_kernel(params.blur_sigma));
  return detail::resize_bilinear(energy, w, h).v;
}

inline SaliencyMap spectral_residual(const Image& gray, const SpectralResidualParams& params = {}) {
  return normalize_map(gray.width(), gray.height(), spectral_residual_raw(gray, params));
}

inline std::vector<double> frequency_tuned_raw(const Image& img) {
  if (img.channels() != 3) {
    throw Error(ErrorKind::unsupported_format, "frequency_tuned expects a 3-channel image");
  }
  const int w = img.width();
  const int h = img.height();
  std::array<detail::Field, 3> lab{detail::Field(w, h), detail::Field(w, h), detail::Field(w, h)};
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto v = detail::srgb_to_lab(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2));
      for (int c = 0; c < 3; ++c) {
        lab[c].at(x, y) = v[c];
        mean[c] += v[c];
      }
    }
  }
  const double count = static_cast<double>(w) * h;
  for (double& m : mean) m /= count;

  std::vector<double> raw(static_cast<std::size_t>(w) * h, 0.0);
  for (int c = 0; c < 3; ++c) {
    const detail::Field blurred = detail::convolve_separable(lab[c], detail::binomial5_kernel());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const double d = blurred.v[i] - mean[c];
      raw[i] += d * d;
    }
  }
  for (double& v : raw) v = std::sqrt(v);
  return raw;
}

inline SaliencyMap frequency_tuned(const Image& img) {
  return normalize_map(img.width(), img.height(), frequency_tuned_raw(img));
}

/// Runs the selected detector at the input's resolution. fine_grained and
/// spectral_residual accept 1- or 3-channel input (colour goes through
/// luma); frequency_tuned requires colour.
inline SaliencyMap detect(const SaliencyMethod& method, const Image& img) {
  if (img.empty()) throw Error(ErrorKind::empty_input, "cannot detect saliency of an empty image");
  switch (method.tag) {
    case MethodTag::fine_grained: return fine_grained(luma(img), method.fine_grained);
    case MethodTag::spectral_residual:
      return spectral_residual(luma(img), method.spectral_residual);
    case MethodTag::frequency_tuned: return frequency_tuned(img);
  }
  throw Error(ErrorKind::parse, "unknown saliency method");
}

inline SaliencyMap detect(MethodTag tag, const Image& img) { return detect(SaliencyMethod::of(tag), img); }

// ---------------------------------------------------------------------------
// Localization
// ---------------------------------------------------------------------------

namespace detail {

template <typename Better>
PeakLocation extreme(const SaliencyMap& map, Better better) {
  const auto values = map.values();
  if (values.empty()) return {};
  std::size_t best = 0;
  double lo = values[0];
  double hi = values[0];
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (better(values[i], values[best])) best = i;
    lo = std::min(lo, values[i]);
    hi = std::max(hi, values[i]);
  }
  if (lo == hi) return {map.width() / 2, map.height() / 2};
  return {static_cast<int>(best % map.width()), static_cast<int>(best / map.width())};
}

}  // namespace detail

/// Location of the maximum; ties go to the smallest row-major index and a
/// constant map yields the image centre.
inline PeakLocation peak(const SaliencyMap& map) {
  return detail::extreme(map, [](double a, double b) { return a > b; });
}

/// As peak, for the minimum.
inline PeakLocation trough(const SaliencyMap& map) {
  return detail::extreme(map, [](double a, double b) { return a < b; });
}

}  // namespace saliencymix
