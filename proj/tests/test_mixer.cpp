#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "saliencymix/batch.hpp"
#include "saliencymix/mixer.hpp"

using namespace saliencymix;

namespace {

/// Checks the per-pixel contract of an augmented sample and returns the
/// number of positions taken from the source.
std::int64_t check_membership(const Image& src, const Image& tgt, const AugmentedSample& s) {
  const auto& r = s.plan.tgt_rect;
  const auto& sr = s.plan.src_rect;
  std::int64_t from_source = 0;
  for (int y = 0; y < tgt.height(); ++y) {
    for (int x = 0; x < tgt.width(); ++x) {
      const bool inside = x >= r.x && x < r.x + r.w && y >= r.y && y < r.y + r.h;
      for (int c = 0; c < tgt.channels(); ++c) {
        const auto want = inside ? src.at(sr.x + (x - r.x), sr.y + (y - r.y), c) : tgt.at(x, y, c);
        EXPECT_EQ(s.image.at(x, y, c), want);
      }
      from_source += inside;
    }
  }
  return from_source;
}

}  // namespace

TEST(Scheme, ParseRoundTrip) {
  for (Scheme s : kAllSchemes) EXPECT_EQ(parse_scheme(to_string(s)), s);
  EXPECT_THROW(parse_scheme("sal2random"), Error);
}

TEST(SampleLambda, DeterministicAndOpenInterval) {
  RngState a{77, 0}, b{77, 0};
  EXPECT_EQ(sample_lambda(a), sample_lambda(b));
  RngState s{5, 0};
  for (int i = 0; i < 100000; ++i) {
    const double l = sample_lambda(s);
    ASSERT_GT(l, 0.0);
    ASSERT_LT(l, 1.0);
  }
}

TEST(SampleLambda, KolmogorovSmirnovAgainstUniform) {
  RngState s{2718, 0};
  std::vector<double> xs(100000);
  for (double& x : xs) x = sample_lambda(s);
  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  const double n = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    d = std::max({d, (i + 1) / n - xs[i], xs[i] - i / n});
  }
  EXPECT_LT(d, 0.01);
}

TEST(PatchDims, Examples) {
  EXPECT_EQ(patch_dims(32, 32, 0.0), std::make_pair(32, 32));
  EXPECT_EQ(patch_dims(32, 32, 1.0), std::make_pair(0, 0));
  EXPECT_EQ(patch_dims(32, 32, 0.36), std::make_pair(26, 26));
  EXPECT_EQ(patch_dims(64, 16, 0.75), std::make_pair(32, 8));
  EXPECT_THROW(patch_dims(32, 32, 1.5), Error);
  EXPECT_THROW(patch_dims(32, 32, std::nan("")), Error);
}

TEST(EffectiveLambda, ExactRational) {
  EXPECT_EQ(effective_lambda(26, 26, 32, 32), 0.33984375);
  EXPECT_EQ(effective_lambda(0, 0, 32, 32), 1.0);
  EXPECT_EQ(effective_lambda(32, 32, 32, 32), 0.0);
}

TEST(PlaceRect, Examples) {
  EXPECT_EQ(place_rect({16, 16}, 26, 26, 32, 32), (PatchRect{3, 3, 26, 26}));
  EXPECT_EQ(place_rect({0, 0}, 26, 26, 32, 32), (PatchRect{0, 0, 26, 26}));
  EXPECT_EQ(place_rect({7, 9}, 0, 0, 32, 32), (PatchRect{7, 9, 0, 0}));
  EXPECT_EQ(place_rect({31, 31}, 10, 4, 32, 32), (PatchRect{22, 28, 10, 4}));
  EXPECT_THROW(place_rect({0, 0}, 33, 1, 32, 32), Error);
}

TEST(PlaceRect, ContainsAnchorAndFits) {
  std::mt19937_64 gen(61);
  std::uniform_int_distribution<int> dim(1, 50);
  for (int trial = 0; trial < 5000; ++trial) {
    const int W = dim(gen), H = dim(gen);
    const int w = std::uniform_int_distribution<int>(0, W)(gen);
    const int h = std::uniform_int_distribution<int>(0, H)(gen);
    const PeakLocation a{std::uniform_int_distribution<int>(0, W - 1)(gen),
                         std::uniform_int_distribution<int>(0, H - 1)(gen)};
    const PatchRect r = place_rect(a, w, h, W, H);
    ASSERT_TRUE(r.fits(W, H));
    ASSERT_EQ(r.w, w);
    ASSERT_EQ(r.h, h);
    if (w > 0 && h > 0) { ASSERT_TRUE(r.contains(a)); }
  }
}

TEST(ResolveAnchors, SchemeTable) {
  const SaliencyMap src(3, 3, {0.1, 0.0, 0.3, 0.4, 1.0, 0.5, 0.6, 0.7, 0.8});
  const SaliencyMap tgt(3, 3, {0.9, 0.2, 0.0, 0.4, 0.5, 1.0, 0.6, 0.7, 0.8});
  const PeakLocation src_peak{1, 1}, src_trough{1, 0}, tgt_peak{2, 1}, tgt_trough{2, 0};

  auto a = resolve_anchors(Scheme::sal2corr, src, nullptr);
  EXPECT_EQ(a.src, src_peak);
  EXPECT_FALSE(a.tgt.has_value());
  a = resolve_anchors(Scheme::sal2sal, src, &tgt);
  EXPECT_EQ(a.src, src_peak);
  EXPECT_EQ(a.tgt, tgt_peak);
  a = resolve_anchors(Scheme::sal2nonsal, src, &tgt);
  EXPECT_EQ(a.src, src_peak);
  EXPECT_EQ(a.tgt, tgt_trough);
  a = resolve_anchors(Scheme::nonsal2sal, src, &tgt);
  EXPECT_EQ(a.src, src_trough);
  EXPECT_EQ(a.tgt, tgt_peak);
  a = resolve_anchors(Scheme::nonsal2nonsal, src, &tgt);
  EXPECT_EQ(a.src, src_trough);
  EXPECT_EQ(a.tgt, tgt_trough);
}

TEST(ResolveAnchors, ConstantMapsGiveCentres) {
  const SaliencyMap flat(7, 5);
  for (Scheme s : kAllSchemes) {
    const auto a = resolve_anchors(s, flat, &flat);
    EXPECT_EQ(a.src, (PeakLocation{3, 2}));
    if (a.tgt) { EXPECT_EQ(*a.tgt, (PeakLocation{3, 2})); }
  }
}

TEST(ResolveAnchors, MissingTargetMap) {
  const SaliencyMap m(2, 2);
  try {
    resolve_anchors(Scheme::nonsal2sal, m, nullptr);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::missing_input);
  }
}

TEST(ResolveAnchors, SalToCorrPastesAtSourceCoordinates) {
  SaliencyMap src(16, 16);
  src.at(5, 7) = 1.0;
  const Image a(16, 16, 3, 200), b(16, 16, 3, 10);
  RngState rng{3, 0};
  const auto sample = saliencymix_pair_with_maps(a, LabelVector::one_hot(2, 0), b, LabelVector::one_hot(2, 1),
                                                 Scheme::sal2corr, MethodTag::fine_grained, src, nullptr, rng);
  EXPECT_EQ(sample.plan.src_peak, (PeakLocation{5, 7}));
  EXPECT_EQ(sample.plan.src_rect, sample.plan.tgt_rect);
}

TEST(MixImages, Edges) {
  std::mt19937_64 gen(67);
  const Image src = oracle::random_image(gen, 9, 6, 3);
  const Image tgt = oracle::random_image(gen, 9, 6, 3);
  EXPECT_EQ(mix_images(src, tgt, {4, 2, 0, 0}, {1, 1, 0, 0}), tgt);
  EXPECT_EQ(mix_images(src, tgt, {0, 0, 9, 6}, {0, 0, 9, 6}), src);
}

TEST(MixImages, FourByFourCount) {
  const Image src(4, 4, 1, 9), tgt(4, 4, 1, 1);
  const Image out = mix_images(src, tgt, {1, 1, 2, 2}, {1, 1, 2, 2});
  const auto nines = std::count(out.pixels().begin(), out.pixels().end(), 9);
  const auto ones = std::count(out.pixels().begin(), out.pixels().end(), 1);
  EXPECT_EQ(nines, 4);
  EXPECT_EQ(ones, 12);
}

TEST(MixImages, ShapeErrors) {
  const Image a(4, 4, 1), b(4, 5, 1), c(4, 4, 3);
  for (const Image* other : {&b, &c}) {
    try {
      mix_images(a, *other, {0, 0, 1, 1}, {0, 0, 1, 1});
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::shape);
    }
  }
  EXPECT_THROW(mix_images(a, a, {0, 0, 2, 2}, {0, 0, 2, 1}), Error);
  EXPECT_THROW(mix_images(a, a, {3, 3, 2, 2}, {0, 0, 2, 2}), Error);
}

TEST(MixImages, EqualsMaskFormulationWhenRectsCoincide) {
  std::mt19937_64 gen(71);
  for (int trial = 0; trial < 200; ++trial) {
    const int W = std::uniform_int_distribution<int>(1, 40)(gen);
    const int H = std::uniform_int_distribution<int>(1, 40)(gen);
    const Image src = oracle::random_image(gen, W, H, 3);
    const Image tgt = oracle::random_image(gen, W, H, 3);
    const int w = std::uniform_int_distribution<int>(0, W)(gen);
    const int h = std::uniform_int_distribution<int>(0, H)(gen);
    const PatchRect r{std::uniform_int_distribution<int>(0, W - w)(gen),
                      std::uniform_int_distribution<int>(0, H - h)(gen), w, h};
    ASSERT_EQ(mix_images(src, tgt, r, r), oracle::mask_mix(src, tgt, r));
  }
}

TEST(MixLabels, Examples) {
  const auto ys = LabelVector::one_hot(10, 2);
  const auto yt = LabelVector::one_hot(10, 5);
  EXPECT_EQ(mix_labels(ys, yt, 1.0), yt);
  EXPECT_EQ(mix_labels(ys, yt, 0.0), ys);
  const auto ya = mix_labels(ys, yt, 0.33984375);
  EXPECT_EQ(ya.probs[2], 0.66015625);
  EXPECT_EQ(ya.probs[5], 0.33984375);
  for (int i : {0, 1, 3, 4, 6, 7, 8, 9}) EXPECT_EQ(ya.probs[i], 0.0);
  EXPECT_TRUE(ya.valid());
  EXPECT_THROW(mix_labels(ys, LabelVector::one_hot(3, 0), 0.5), Error);
}

TEST(SaliencymixPair, Deterministic) {
  std::mt19937_64 gen(73);
  const Image a = oracle::random_image(gen, 32, 32, 3);
  const Image b = oracle::random_image(gen, 32, 32, 3);
  for (Scheme s : kAllSchemes) {
    RngState r1{9, 0}, r2{9, 0};
    const auto s1 = saliencymix_pair(a, LabelVector::one_hot(3, 0), b, LabelVector::one_hot(3, 1), s, {}, r1);
    const auto s2 = saliencymix_pair(a, LabelVector::one_hot(3, 0), b, LabelVector::one_hot(3, 1), s, {}, r2);
    EXPECT_EQ(s1, s2);
  }
}

TEST(SaliencymixPair, NearOneLambdaChangesFewPixels) {
  // Find a draw with lambda >= 0.999 and run the pair at that counter.
  RngState probe{11, 0};
  std::uint64_t counter = 0;
  while (true) {
    const std::uint64_t c = probe.counter;
    if (rng_uniform(probe) >= 0.999) {
      counter = c;
      break;
    }
  }
  std::mt19937_64 gen(79);
  const Image a = oracle::random_image(gen, 64, 48, 3);
  const Image b = oracle::random_image(gen, 64, 48, 3);
  RngState rng{11, counter};
  const auto s = saliencymix_pair(a, LabelVector::one_hot(2, 0), b, LabelVector::one_hot(2, 1), Scheme::sal2corr, {}, rng);
  EXPECT_GE(s.plan.lambda_raw, 0.999);
  const long bound = std::lround(64 * std::sqrt(0.001)) * std::lround(48 * std::sqrt(0.001));
  long differing = 0;
  for (int y = 0; y < 48; ++y) {
    for (int x = 0; x < 64; ++x) {
      bool diff = false;
      for (int c = 0; c < 3; ++c) diff |= s.image.at(x, y, c) != b.at(x, y, c);
      differing += diff;
    }
  }
  EXPECT_LE(differing, bound);
}

TEST(SaliencymixPair, SalToCorrOnDiskCoversCentre) {
  for (const auto& [cx, cy] : oracle::disk_positions(83, 25, 32, 8)) {
    const Image src = oracle::disk(32, cx, cy, 4);
    const Image tgt(32, 32, 3, 60);
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      RngState rng{seed, 0};
      const auto s = saliencymix_pair(src, LabelVector::one_hot(2, 0), tgt, LabelVector::one_hot(2, 1),
                                      Scheme::sal2corr, {}, rng);
      const auto& r = s.plan.src_rect;
      if (r.empty()) continue;
      EXPECT_TRUE(oracle::in_disk(s.plan.src_peak, cx, cy, 4));
      EXPECT_TRUE(r.contains(s.plan.src_peak));
      if (r.w >= 9 && r.h >= 9) { EXPECT_TRUE(r.contains({cx, cy})) << cx << "," << cy << " w=" << r.w; }
    }
  }
}

TEST(SaliencymixPair, InvariantsAcrossSchemesAndMethods) {
  std::mt19937_64 gen(89);
  const auto data = oracle::synthetic_cifar(97, 12);
  for (MethodTag m : kAllMethods) {
    for (Scheme sch : kAllSchemes) {
      for (int trial = 0; trial < 6; ++trial) {
        const auto& src = data.items[trial].image;
        const auto& tgt = data.items[trial + 6].image;
        RngState rng{static_cast<std::uint64_t>(trial), 0};
        const auto s = saliencymix_pair(src, data.label(trial), tgt, data.label(trial + 6), sch,
                                        SaliencyMethod::of(m), rng);
        const auto& p = s.plan;
        EXPECT_EQ(p.src_rect.w, p.tgt_rect.w);
        EXPECT_EQ(p.src_rect.h, p.tgt_rect.h);
        EXPECT_EQ(p.lambda_eff, effective_lambda(p.src_rect.w, p.src_rect.h, 32, 32));
        EXPECT_EQ(check_membership(src, tgt, s), p.src_rect.area());
        EXPECT_TRUE(s.label.valid());
        const SaliencyMap map = detect(m, src);
        const PeakLocation anchor = source_uses_trough(sch) ? trough(map) : peak(map);
        EXPECT_EQ(p.src_peak, anchor);
        if (!p.src_rect.empty()) { EXPECT_TRUE(p.src_rect.contains(anchor)); }
        if (sch == Scheme::sal2corr) { EXPECT_EQ(p.src_rect, p.tgt_rect); }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Batch driver
// ---------------------------------------------------------------------------

TEST(AugmentBatch, EmptyInputs) {
  const auto data = oracle::synthetic_cifar(1, 4);
  EXPECT_TRUE(augment_batch(data, 0, BatchConfig{}).empty());
  try {
    augment_batch(Dataset{}, 3, BatchConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::empty_input);
  }
}

TEST(AugmentBatch, IndependentOfThreadCountAndCache) {
  const auto data = oracle::synthetic_cifar(2, 30);
  for (Scheme s : {Scheme::sal2corr, Scheme::nonsal2sal}) {
    BatchConfig cfg;
    cfg.seed = 7;
    cfg.scheme = s;
    const auto one = augment_batch(data, 300, cfg);
    cfg.threads = 4;
    const auto four = augment_batch(data, 300, cfg);
    cfg.cache_saliency = true;
    const auto cached = augment_batch(data, 300, cfg);
    ASSERT_EQ(one.size(), 300u);
    for (std::size_t k = 0; k < one.size(); ++k) {
      ASSERT_EQ(one[k].index, k);
      ASSERT_EQ(one[k].sample, four[k].sample);
      ASSERT_EQ(one[k].sample, cached[k].sample);
      ASSERT_EQ(one[k].source_index, four[k].source_index);
      ASSERT_EQ(one[k].target_index, cached[k].target_index);
    }
  }
}

TEST(AugmentBatch, SampleKDependsOnlyOnK) {
  const auto data = oracle::synthetic_cifar(3, 20);
  BatchConfig cfg;
  cfg.seed = 99;
  const auto all = augment_batch(data, 50, cfg);
  for (std::size_t k : {0u, 17u, 49u}) EXPECT_EQ(augment_one(data, k, cfg).sample, all[k].sample);
}

TEST(AugmentBatch, NeverPairsAnImageWithItself) {
  const auto data = oracle::synthetic_cifar(4, 3);
  for (Pairing mode : {Pairing::with_replacement, Pairing::shuffle}) {
    BatchConfig cfg;
    cfg.pairing = mode;
    for (const auto& item : augment_batch(data, 200, cfg)) EXPECT_NE(item.source_index, item.target_index);
  }
}

TEST(AugmentBatch, ShufflePairingVisitsEveryTargetOncePerEpoch) {
  const auto data = oracle::synthetic_cifar(5, 10);
  BatchConfig cfg;
  cfg.pairing = Pairing::shuffle;
  cfg.seed = 12;
  const auto items = augment_batch(data, 20, cfg);
  for (std::size_t k = 0; k < items.size(); ++k) EXPECT_EQ(items[k].target_index, k % 10);
  cfg.threads = 3;
  const auto again = augment_batch(data, 20, cfg);
  for (std::size_t k = 0; k < items.size(); ++k) EXPECT_EQ(items[k].source_index, again[k].source_index);
}

TEST(AugmentBatch, ApplyProbabilityZeroPassesTargetsThrough) {
  const auto data = oracle::synthetic_cifar(6, 8);
  BatchConfig cfg;
  cfg.apply_probability = 0.0;
  for (const auto& item : augment_batch(data, 40, cfg)) {
    EXPECT_FALSE(item.applied);
    EXPECT_EQ(item.sample.image, data.items[item.target_index].image);
    EXPECT_EQ(item.sample.label, data.label(item.target_index));
    EXPECT_EQ(item.sample.plan.lambda_eff, 1.0);
    EXPECT_TRUE(item.sample.plan.src_rect.empty());
  }
  cfg.apply_probability = 1.5;
  EXPECT_THROW(augment_batch(data, 1, cfg), Error);
}

TEST(AugmentBatch, SingleImageDatasetPairsWithItself) {
  const auto data = oracle::synthetic_cifar(7, 1);
  const auto items = augment_batch(data, 5, BatchConfig{});
  for (const auto& item : items) {
    EXPECT_EQ(item.source_index, 0u);
    EXPECT_EQ(item.target_index, 0u);
  }
}

TEST(SaliencyCache, MemoizesPerImageAndMethod) {
  const auto data = oracle::synthetic_cifar(8, 3);
  SaliencyCache cache;
  const auto a = cache.get(data, 1, {});
  const auto b = cache.get(data, 1, {});
  EXPECT_EQ(a.get(), b.get());
  cache.get(data, 1, SaliencyMethod::of(MethodTag::spectral_residual));
  EXPECT_EQ(cache.size(), 2u);
  EXPECT_EQ(*a, detect(MethodTag::fine_grained, data.items[1].image));
}
