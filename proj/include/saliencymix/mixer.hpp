#pragma once

/// @file mixer.hpp
/// @brief Patch selection, placement and mixing for a single source/target
/// pair.
///
/// A combination ratio lambda ~ U(0,1) fixes the patch area fraction 1-lambda.
/// The source patch is anchored on the peak (or trough) of the source
/// saliency map and translated, never shrunk, until it fits in the image, so
/// it always contains its anchor. The patch is pasted into the target either
/// at the same coordinates (sal2corr) or re-anchored on the target map. The
/// label weight actually used is recomputed from the integer patch area.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "saliencymix/core_types.hpp"
#include "saliencymix/saliency.hpp"

namespace saliencymix {

/// Axis-aligned rectangle; zero width or height means "no patch".
struct PatchRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  std::int64_t area() const noexcept { return static_cast<std::int64_t>(w) * h; }
  bool empty() const noexcept { return w == 0 || h == 0; }

  bool contains(const PeakLocation& p) const noexcept {
    return p.x >= x && p.x < x + w && p.y >= y && p.y < y + h;
  }

  bool fits(int width, int height) const noexcept {
    return x >= 0 && y >= 0 && w >= 0 && h >= 0 && x + w <= width && y + h <= height;
  }

  friend bool operator==(const PatchRect&, const PatchRect&) = default;
};

enum class Scheme { sal2corr, sal2sal, sal2nonsal, nonsal2sal, nonsal2nonsal };

inline constexpr std::array kAllSchemes = {Scheme::sal2corr, Scheme::sal2sal, Scheme::sal2nonsal,
                                           Scheme::nonsal2sal, Scheme::nonsal2nonsal};

inline const char* to_string(Scheme s) noexcept {
  switch (s) {
    case Scheme::sal2corr: return "sal2corr";
    case Scheme::sal2sal: return "sal2sal";
    case Scheme::sal2nonsal: return "sal2nonsal";
    case Scheme::nonsal2sal: return "nonsal2sal";
    case Scheme::nonsal2nonsal: return "nonsal2nonsal";
  }
  return "unknown";
}

inline Scheme parse_scheme(std::string_view text) {
  for (Scheme s : kAllSchemes) {
    if (text == to_string(s)) return s;
  }
  throw Error(ErrorKind::parse, "unknown mixing scheme '" + std::string(text) + "'");
}

inline bool needs_target_saliency(Scheme s) noexcept { return s != Scheme::sal2corr; }
inline bool source_uses_trough(Scheme s) noexcept {
  return s == Scheme::nonsal2sal || s == Scheme::nonsal2nonsal;
}
inline bool target_uses_trough(Scheme s) noexcept {
  return s == Scheme::sal2nonsal || s == Scheme::nonsal2nonsal;
}

/// Everything decided while producing one augmented sample.
struct MixPlan {
  double lambda_raw = 0.0;
  double lambda_eff = 1.0;
  PatchRect src_rect{};
  PatchRect tgt_rect{};
  Scheme scheme = Scheme::sal2corr;
  MethodTag method = MethodTag::fine_grained;
  PeakLocation src_peak{};
  std::optional<PeakLocation> tgt_anchor{};

  friend bool operator==(const MixPlan&, const MixPlan&) = default;
};

struct AugmentedSample {
  Image image;
  LabelVector label;
  MixPlan plan;

  friend bool operator==(const AugmentedSample&, const AugmentedSample&) = default;
};

/// One uniform draw in (0,1).
inline double sample_lambda(RngState& rng) noexcept { return rng_uniform(rng); }

/// Patch side lengths covering an area fraction of about 1-lambda with the
/// image's aspect ratio.
inline std::pair<int, int> patch_dims(int width, int height, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw Error(ErrorKind::numeric_domain, "lambda must lie in [0,1]");
  }
  const double side = std::sqrt(1.0 - lambda);
  const int w = static_cast<int>(std::lround(width * side));
  const int h = static_cast<int>(std::lround(height * side));
  return {std::clamp(w, 0, width), std::clamp(h, 0, height)};
}

/// 1 - (w*h)/(W*H), correctly rounded from the exact rational.
inline double effective_lambda(int w, int h, int width, int height) noexcept {
  const auto total = static_cast<std::int64_t>(width) * height;
  const auto patch = static_cast<std::int64_t>(w) * h;
  return static_cast<double>(total - patch) / static_cast<double>(total);
}

/// Centres a w x h rectangle on the anchor, then translates it to lie inside
/// the image. The anchor stays covered whenever w, h > 0.
inline PatchRect place_rect(const PeakLocation& anchor, int w, int h, int width, int height) {
  if (w < 0 || h < 0 || w > width || h > height) {
    throw Error(ErrorKind::shape, "patch larger than image");
  }
  return PatchRect{std::clamp(anchor.x - w / 2, 0, width - w),
                   std::clamp(anchor.y - h / 2, 0, height - h), w, h};
}

struct Anchors {
  PeakLocation src;
  /// Empty for sal2corr, where the target rect reuses the source coordinates.
  std::optional<PeakLocation> tgt;
};

inline Anchors resolve_anchors(Scheme scheme, const SaliencyMap& src_map, const SaliencyMap* tgt_map) {
  Anchors a;
  a.src = source_uses_trough(scheme) ? trough(src_map) : peak(src_map);
  if (!needs_target_saliency(scheme)) return a;
  if (tgt_map == nullptr) {
    throw Error(ErrorKind::missing_input,
                std::string("scheme ") + to_string(scheme) + " needs the target saliency map");
  }
  a.tgt = target_uses_trough(scheme) ? trough(*tgt_map) : peak(*tgt_map);
  return a;
}

inline Anchors resolve_anchors(Scheme scheme, const SaliencyMap& src_map,
                               const std::optional<SaliencyMap>& tgt_map) {
  return resolve_anchors(scheme, src_map, tgt_map ? &*tgt_map : nullptr);
}

/// Copies the source window src_rect over tgt_rect of a copy of the target.
inline Image mix_images(const Image& src, const Image& tgt, const PatchRect& src_rect,
                        const PatchRect& tgt_rect) {
  if (!src.same_shape(tgt)) throw Error(ErrorKind::shape, "source and target shapes differ");
  if (src_rect.w != tgt_rect.w || src_rect.h != tgt_rect.h) {
    throw Error(ErrorKind::shape, "source and target rects differ in size");
  }
  if (!src_rect.fits(src.width(), src.height()) || !tgt_rect.fits(tgt.width(), tgt.height())) {
    throw Error(ErrorKind::shape, "patch rect out of bounds");
  }
  Image out = tgt;
  const auto row_bytes = static_cast<std::size_t>(src_rect.w) * src.channels();
  const auto in = src.pixels();
  auto dst = out.pixels();
  for (int dy = 0; dy < src_rect.h; ++dy) {
    const auto from = in.begin() + static_cast<std::ptrdiff_t>(src.index(src_rect.x, src_rect.y + dy));
    const auto to = dst.begin() + static_cast<std::ptrdiff_t>(out.index(tgt_rect.x, tgt_rect.y + dy));
    std::copy_n(from, row_bytes, to);
  }
  return out;
}

/// lambda_eff * y_t + (1 - lambda_eff) * y_s.
inline LabelVector mix_labels(const LabelVector& y_s, const LabelVector& y_t, double lambda_eff) {
  if (y_s.size() != y_t.size()) throw Error(ErrorKind::shape, "label vectors differ in length");
  if (!(lambda_eff >= 0.0 && lambda_eff <= 1.0)) {
    throw Error(ErrorKind::numeric_domain, "lambda_eff must lie in [0,1]");
  }
  LabelVector out{std::vector<double>(y_s.size())};
  for (std::size_t i = 0; i < out.probs.size(); ++i) {
    out.probs[i] = lambda_eff * y_t.probs[i] + (1.0 - lambda_eff) * y_s.probs[i];
  }
  return out;
}

/// saliencymix_pair with saliency maps supplied by the caller. tgt_map may
/// be null for sal2corr.
inline AugmentedSample saliencymix_pair_with_maps(const Image& src, const LabelVector& y_s,
                                                  const Image& tgt, const LabelVector& y_t,
                                                  Scheme scheme, MethodTag method,
                                                  const SaliencyMap& src_map,
                                                  const SaliencyMap* tgt_map, RngState& rng) {
  if (!src.same_shape(tgt)) throw Error(ErrorKind::shape, "source and target shapes differ");
  const int width = src.width();
  const int height = src.height();
  const Anchors anchors = resolve_anchors(scheme, src_map, tgt_map);

  MixPlan plan;
  plan.scheme = scheme;
  plan.method = method;
  plan.src_peak = anchors.src;
  plan.tgt_anchor = anchors.tgt;
  plan.lambda_raw = sample_lambda(rng);
  const auto [w, h] = patch_dims(width, height, plan.lambda_raw);
  plan.src_rect = place_rect(anchors.src, w, h, width, height);
  plan.tgt_rect = anchors.tgt ? place_rect(*anchors.tgt, w, h, width, height) : plan.src_rect;
  plan.lambda_eff = effective_lambda(w, h, width, height);

  AugmentedSample out;
  out.image = mix_images(src, tgt, plan.src_rect, plan.tgt_rect);
  out.label = mix_labels(y_s, y_t, plan.lambda_eff);
  out.plan = plan;
  return out;
}

/// Full pipeline for one pair: detect, anchor, draw lambda, place, mix.
inline AugmentedSample saliencymix_pair(const Image& src, const LabelVector& y_s, const Image& tgt,
                                        const LabelVector& y_t, Scheme scheme,
                                        const SaliencyMethod& method, RngState& rng) {
  if (!src.same_shape(tgt)) throw Error(ErrorKind::shape, "source and target shapes differ");
  const SaliencyMap src_map = detect(method, src);
  std::optional<SaliencyMap> tgt_map;
  if (needs_target_saliency(scheme)) tgt_map = detect(method, tgt);
  return saliencymix_pair_with_maps(src, y_s, tgt, y_t, scheme, method.tag, src_map,
                                    tgt_map ? &*tgt_map : nullptr, rng);
}

}  // namespace saliencymix
