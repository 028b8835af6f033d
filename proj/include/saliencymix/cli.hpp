#pragma once

/// @file cli.hpp
/// @brief The `saliencymix` command line: `saliency`, `augment`, `bench`.
///
/// Standard output is line oriented:
///   saliency: `<name> <x> <y>` per image
///   augment:  `wrote <count> samples to <dir>`
///   bench:    `method=<tag> threads=<n> samples=<count> seconds=<s> samples_per_second=<r>`
/// Exit codes: 0 success, 1 processing failure, 2 missing input or bad usage.

#include <chrono>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "saliencymix/batch.hpp"
#include "saliencymix/dataset_io.hpp"

namespace saliencymix::cli {

enum class DatasetKind { cifar10, cifar100, imagedir };

struct CliConfig {
  std::string subcommand;
  MethodTag method = MethodTag::fine_grained;
  bool method_given = false;
  Scheme scheme = Scheme::sal2corr;
  std::uint64_t seed = 0;
  std::size_t count = 10;
  std::string input;
  std::string labels;
  DatasetKind dataset = DatasetKind::cifar10;
  std::string out = ".";
  std::string manifest;
  int threads = 1;
  double apply_probability = 1.0;
  Pairing pairing = Pairing::with_replacement;
  bool cache_saliency = false;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitMissingInput = 2;

inline int exit_code_for(const Error& e) {
  return e.kind() == ErrorKind::not_found ? kExitMissingInput : kExitFailure;
}

inline Dataset load_dataset(const CliConfig& config) {
  switch (config.dataset) {
    case DatasetKind::cifar10: return load_cifar(config.input, CifarVariant::cifar10);
    case DatasetKind::cifar100: return load_cifar(config.input, CifarVariant::cifar100);
    case DatasetKind::imagedir: {
      const fs::path labels = config.labels.empty() ? fs::path(config.input) / "labels.csv" : fs::path(config.labels);
      return load_image_dir(config.input, labels);
    }
  }
  throw Error(ErrorKind::parse, "unknown dataset kind");
}

inline BatchConfig batch_config(const CliConfig& config, MethodTag method, int threads) {
  BatchConfig bc;
  bc.seed = config.seed;
  bc.scheme = config.scheme;
  bc.method = SaliencyMethod::of(method);
  bc.pairing = config.pairing;
  bc.apply_probability = config.apply_probability;
  bc.threads = threads;
  bc.cache_saliency = config.cache_saliency;
  return bc;
}

inline int cmd_saliency(const CliConfig& config, std::ostream& out, std::ostream& err) {
  const fs::path input(config.input);
  if (config.input.empty() || !fs::exists(input)) {
    err << "saliency: input '" << config.input << "' does not exist\n";
    return kExitMissingInput;
  }
  std::vector<fs::path> files;
  if (fs::is_directory(input)) {
    for (const auto& entry : fs::directory_iterator(input)) {
      if (entry.is_regular_file() && has_image_extension(entry.path()) &&
          entry.path().filename().string().find(".saliency.") == std::string::npos) {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(input);
  }
  try {
    fs::create_directories(config.out);
    const SaliencyMethod method = SaliencyMethod::of(config.method);
    for (const auto& file : files) {
      const Image img = read_image(file);
      const SaliencyMap map = detect(method, img);
      const std::string name = file.stem().string();
      write_saliency_png(map, fs::path(config.out) / (name + ".saliency.png"));
      const PeakLocation p = peak(map);
      out << name << ' ' << p.x << ' ' << p.y << '\n';
    }
  } catch (const Error& e) {
    err << "saliency: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "saliency: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

inline int cmd_augment(const CliConfig& config, std::ostream& out, std::ostream& err) {
  const fs::path out_dir(config.out);
  const fs::path manifest_path = config.manifest.empty() ? out_dir / "manifest.jsonl" : fs::path(config.manifest);
  const fs::path labels_path = out_dir / "labels.txt";
  bool manifest_started = false;
  try {
    const Dataset data = load_dataset(config);
    fs::create_directories(out_dir);
    if (manifest_path.has_parent_path()) fs::create_directories(manifest_path.parent_path());
    ManifestWriter manifest(manifest_path);
    manifest_started = true;
    std::ofstream labels(labels_path, std::ios::trunc);
    if (!labels) throw Error(ErrorKind::io, "cannot create '" + labels_path.string() + "'");

    augment_batch(data, config.count, batch_config(config, config.method, config.threads),
                  [&](BatchItem&& item) {
                    write_image(out_dir / ("aug_" + std::to_string(item.index) + ".png"), item.sample.image);
                    labels << format_label_line(item.index, item.sample.label) << '\n';
                    manifest.add(make_record(data, item, config.seed));
                  });
    manifest.finish();
    labels.flush();
    if (!labels) throw Error(ErrorKind::io, "write failed on '" + labels_path.string() + "'");
  } catch (const Error& e) {
    if (manifest_started) fs::remove(manifest_path);
    err << "augment: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    if (manifest_started) fs::remove(manifest_path);
    err << "augment: " << e.what() << '\n';
    return kExitFailure;
  }
  out << "wrote " << config.count << " samples to " << out_dir.string() << '\n';
  return kExitOk;
}

struct BenchResult {
  MethodTag method;
  int threads;
  std::size_t samples;
  double seconds;

  double samples_per_second() const noexcept { return seconds > 0.0 ? samples / seconds : 0.0; }
};

inline std::string format_bench_line(const BenchResult& r) {
  return std::string("method=") + to_string(r.method) + " threads=" + std::to_string(r.threads) +
         " samples=" + std::to_string(r.samples) + " seconds=" + format_double(r.seconds) +
         " samples_per_second=" + format_double(r.samples_per_second());
}

/// Times `count` augmentations per method, single-threaded and at the
/// configured thread count. Every timed run is checked to produce the same
/// plans as the single-threaded run of its method.
inline int cmd_bench(const CliConfig& config, std::ostream& out, std::ostream& err) {
  try {
    const Dataset data = load_dataset(config);
    std::vector<MethodTag> methods;
    if (config.method_given) {
      methods.push_back(config.method);
    } else {
      methods.assign(kAllMethods.begin(), kAllMethods.end());
    }
    std::vector<int> thread_counts{1};
    if (config.threads > 1) thread_counts.push_back(config.threads);

    for (MethodTag method : methods) {
      if (method == MethodTag::frequency_tuned && data.items.front().image.channels() != 3) {
        out << "method=" << to_string(method) << " skipped=single_channel_dataset\n";
        continue;
      }
      std::vector<ManifestRecord> reference;
      for (int threads : thread_counts) {
        std::vector<ManifestRecord> records;
        records.reserve(config.count);
        const auto start = std::chrono::steady_clock::now();
        augment_batch(data, config.count, batch_config(config, method, threads),
                      [&](BatchItem&& item) { records.push_back(make_record(data, item, config.seed)); });
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        out << format_bench_line({method, threads, config.count, elapsed.count()}) << '\n';
        if (threads == 1) {
          reference = records;
        } else if (records != reference) {
          err << "bench: " << to_string(method) << " plans differ between 1 and " << threads << " threads\n";
          return kExitFailure;
        }
        if (!config.manifest.empty() && method == config.method && threads == thread_counts.back()) {
          write_manifest(records, config.manifest);
        }
      }
    }
  } catch (const Error& e) {
    err << "bench: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "bench: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

/// Parses argv and dispatches. argv[0] is the program name.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"SaliencyMix augmentation tool"};
  app.require_subcommand(1);
  CliConfig config;

  const std::map<std::string, MethodTag> method_map{
      {"fine_grained", MethodTag::fine_grained},
      {"spectral_residual", MethodTag::spectral_residual},
      {"frequency_tuned", MethodTag::frequency_tuned}};
  std::map<std::string, Scheme> scheme_map;
  for (Scheme s : kAllSchemes) scheme_map.emplace(to_string(s), s);
  const std::map<std::string, DatasetKind> dataset_map{
      {"cifar10", DatasetKind::cifar10}, {"cifar100", DatasetKind::cifar100}, {"imagedir", DatasetKind::imagedir}};
  const std::map<std::string, Pairing> pairing_map{{"with_replacement", Pairing::with_replacement},
                                                   {"shuffle", Pairing::shuffle}};

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--method", config.method, "saliency detector")
        ->transform(CLI::CheckedTransformer(method_map, CLI::ignore_case));
    sub->add_option("--input", config.input, "image file, image directory or dataset path");
    sub->add_option("--out", config.out, "output directory");
  };
  auto add_dataset = [&](CLI::App* sub) {
    sub->add_option("--scheme", config.scheme, "patch selection/placement scheme")
        ->transform(CLI::CheckedTransformer(scheme_map, CLI::ignore_case));
    sub->add_option("--seed", config.seed, "64-bit seed");
    sub->add_option("--count", config.count, "number of augmented samples");
    sub->add_option("--dataset", config.dataset, "dataset format")
        ->transform(CLI::CheckedTransformer(dataset_map, CLI::ignore_case));
    sub->add_option("--labels", config.labels, "labels file for --dataset imagedir");
    sub->add_option("--manifest", config.manifest, "manifest output path");
    sub->add_option("--threads", config.threads, "worker threads")->check(CLI::Range(1, 1024));
    sub->add_option("--apply-probability", config.apply_probability, "probability of mixing a sample")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--pairing", config.pairing, "source/target pairing")
        ->transform(CLI::CheckedTransformer(pairing_map, CLI::ignore_case));
    sub->add_flag("--cache-saliency", config.cache_saliency, "memoize saliency maps per image");
  };

  CLI::App* saliency = app.add_subcommand("saliency", "write saliency maps and print peaks");
  add_common(saliency);
  CLI::App* augment = app.add_subcommand("augment", "augment a dataset");
  add_common(augment);
  add_dataset(augment);
  CLI::App* bench = app.add_subcommand("bench", "measure augmentation throughput");
  add_common(bench);
  add_dataset(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << e.what() << '\n';
    return kExitMissingInput;
  }

  for (CLI::App* sub : {saliency, augment, bench}) {
    if (sub->parsed() && sub->get_option("--method")->count() > 0) config.method_given = true;
  }
  if (saliency->parsed()) return cmd_saliency(config, out, err);
  if (augment->parsed()) return cmd_augment(config, out, err);
  return cmd_bench(config, out, err);
}

}  // namespace saliencymix::cli
