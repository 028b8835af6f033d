#pragma once

/// @file batch.hpp
/// @brief Dataset-level driver. Sample k draws from its own RNG state
/// (seed, counter = 8k), so results do not depend on thread count or
/// scheduling. Draw order within a sample: source index, target index
/// (redrawn while equal to the source), apply decision, lambda.

#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <thread>
#include <vector>

#include "saliencymix/dataset.hpp"
#include "saliencymix/mixer.hpp"

namespace saliencymix {

enum class Pairing { with_replacement, shuffle };

inline const char* to_string(Pairing p) noexcept {
  return p == Pairing::shuffle ? "shuffle" : "with_replacement";
}

inline Pairing parse_pairing(std::string_view text) {
  if (text == "with_replacement") return Pairing::with_replacement;
  if (text == "shuffle") return Pairing::shuffle;
  throw Error(ErrorKind::parse, "unknown pairing mode '" + std::string(text) + "'");
}

struct BatchConfig {
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::sal2corr;
  SaliencyMethod method{};
  Pairing pairing = Pairing::with_replacement;
  /// Probability that a sample is mixed at all; otherwise the target passes
  /// through unchanged with its one-hot label.
  double apply_probability = 1.0;
  int threads = 1;
  bool cache_saliency = false;
};

inline constexpr std::uint64_t kDrawsPerSample = 8;

struct BatchItem {
  std::size_t index = 0;
  std::size_t source_index = 0;
  std::size_t target_index = 0;
  bool applied = true;
  AugmentedSample sample;
};

/// Memoized saliency maps keyed by (dataset position, method). Safe to share
/// between threads; a map may be computed twice under contention but every
/// copy is identical.
class SaliencyCache {
 public:
  std::shared_ptr<const SaliencyMap> get(const Dataset& data, std::size_t i,
                                         const SaliencyMethod& method) {
    const Key key{i, method.tag};
    {
      std::lock_guard lock(mutex_);
      if (auto it = maps_.find(key); it != maps_.end()) return it->second;
    }
    auto map = std::make_shared<const SaliencyMap>(detect(method, data.items[i].image));
    std::lock_guard lock(mutex_);
    return maps_.try_emplace(key, std::move(map)).first->second;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return maps_.size();
  }

 private:
  using Key = std::pair<std::size_t, MethodTag>;
  mutable std::mutex mutex_;
  std::map<Key, std::shared_ptr<const SaliencyMap>> maps_;
};

/// Permutation of [0, n) for one pass over the dataset in shuffle mode.
inline std::vector<std::size_t> pairing_permutation(std::uint64_t seed, std::uint64_t epoch, std::size_t n) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  RngState rng{splitmix64_mix(seed ^ 0x70657266756c6c73ULL) + epoch * kGoldenGamma, 0};
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng_index(rng, i)]);
  return perm;
}

namespace detail {

inline std::pair<std::size_t, std::size_t> draw_pair(const Dataset& data, std::size_t k,
                                                     const BatchConfig& config, RngState& rng,
                                                     const std::vector<std::size_t>* perm) {
  const std::size_t n = data.size();
  if (config.pairing == Pairing::shuffle && perm != nullptr) {
    const std::size_t target = k % n;
    std::size_t source = (*perm)[target];
    if (source == target && n > 1) source = (*perm)[(target + 1) % n];
    return {source, target};
  }
  const std::size_t source = rng_index(rng, n);
  std::size_t target = rng_index(rng, n);
  while (n > 1 && target == source) target = rng_index(rng, n);
  return {source, target};
}

}  // namespace detail

/// Produces sample k. perm is the shuffle permutation for k's epoch (ignored
/// in with-replacement mode); cache may be null.
inline BatchItem augment_one(const Dataset& data, std::size_t k, const BatchConfig& config,
                             const std::vector<std::size_t>* perm = nullptr,
                             SaliencyCache* cache = nullptr) {
  RngState rng{config.seed, static_cast<std::uint64_t>(k) * kDrawsPerSample};
  BatchItem item;
  item.index = k;
  std::tie(item.source_index, item.target_index) = detail::draw_pair(data, k, config, rng, perm);
  const auto& src = data.items[item.source_index];
  const auto& tgt = data.items[item.target_index];
  const LabelVector y_s = data.label(item.source_index);
  const LabelVector y_t = data.label(item.target_index);

  item.applied = rng_uniform(rng) < config.apply_probability;
  if (!item.applied) {
    // Pass-through is the lambda_eff == 1 corner: empty patch, target label.
    MixPlan plan;
    plan.lambda_raw = sample_lambda(rng);
    plan.lambda_eff = 1.0;
    plan.scheme = config.scheme;
    plan.method = config.method.tag;
    item.sample = AugmentedSample{tgt.image, y_t, plan};
    return item;
  }

  std::shared_ptr<const SaliencyMap> src_map;
  std::shared_ptr<const SaliencyMap> tgt_map;
  const bool need_tgt = needs_target_saliency(config.scheme);
  if (cache != nullptr) {
    src_map = cache->get(data, item.source_index, config.method);
    if (need_tgt) tgt_map = cache->get(data, item.target_index, config.method);
  } else {
    src_map = std::make_shared<const SaliencyMap>(detect(config.method, src.image));
    if (need_tgt) tgt_map = std::make_shared<const SaliencyMap>(detect(config.method, tgt.image));
  }
  item.sample = saliencymix_pair_with_maps(src.image, y_s, tgt.image, y_t, config.scheme,
                                           config.method.tag, *src_map, tgt_map.get(), rng);
  return item;
}

/// Streams `count` samples to `sink` in index order. Work is split across
/// config.threads workers in fixed-size chunks.
template <typename Sink>
void augment_batch(const Dataset& data, std::size_t count, const BatchConfig& config, Sink&& sink) {
  if (data.empty()) throw Error(ErrorKind::empty_input, "dataset is empty");
  if (!(config.apply_probability >= 0.0 && config.apply_probability <= 1.0)) {
    throw Error(ErrorKind::numeric_domain, "apply probability must lie in [0,1]");
  }
  const std::size_t n = data.size();
  std::vector<std::vector<std::size_t>> perms;
  if (config.pairing == Pairing::shuffle) {
    const std::size_t epochs = (count + n - 1) / n;
    for (std::size_t e = 0; e < epochs; ++e) perms.push_back(pairing_permutation(config.seed, e, n));
  }
  std::unique_ptr<SaliencyCache> cache;
  if (config.cache_saliency) cache = std::make_unique<SaliencyCache>();

  const auto run = [&](std::size_t k) {
    const std::vector<std::size_t>* perm = perms.empty() ? nullptr : &perms[k / n];
    return augment_one(data, k, config, perm, cache.get());
  };

  const std::size_t threads = static_cast<std::size_t>(std::max(1, config.threads));
  constexpr std::size_t kChunk = 256;
  std::vector<BatchItem> chunk;
  for (std::size_t begin = 0; begin < count; begin += kChunk) {
    const std::size_t len = std::min(kChunk, count - begin);
    chunk.assign(len, BatchItem{});
    if (threads == 1) {
      for (std::size_t i = 0; i < len; ++i) chunk[i] = run(begin + i);
    } else {
      std::vector<std::exception_ptr> errors(threads);
      std::vector<std::thread> workers;
      for (std::size_t t = 0; t < threads; ++t) {
        workers.emplace_back([&, t] {
          try {
            for (std::size_t i = t; i < len; i += threads) chunk[i] = run(begin + i);
          } catch (...) {
            errors[t] = std::current_exception();
          }
        });
      }
      for (auto& w : workers) w.join();
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    for (auto& item : chunk) sink(std::move(item));
  }
}

inline std::vector<BatchItem> augment_batch(const Dataset& data, std::size_t count, const BatchConfig& config) {
  std::vector<BatchItem> out;
  out.reserve(count);
  augment_batch(data, count, config, [&](BatchItem&& item) { out.push_back(std::move(item)); });
  return out;
}

}  // namespace saliencymix
