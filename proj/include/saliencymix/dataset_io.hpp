#pragma once

/// @file dataset_io.hpp
/// @brief Dataset loaders (CIFAR binary, labelled image directories), image
/// files (8-bit PNG, binary PGM/PPM), saliency visualisation and the
/// line-delimited augmentation manifest.

#include <png.h>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "saliencymix/dataset.hpp"
#include "saliencymix/batch.hpp"

namespace saliencymix {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Raw file helpers
// ---------------------------------------------------------------------------

inline std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::not_found, "cannot open '" + path.string() + "'");
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> bytes(size);
  if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size))) {
    throw Error(ErrorKind::io, "short read on '" + path.string() + "'");
  }
  return bytes;
}

inline void write_file_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot create '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::io, "write failed on '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// PNG
// ---------------------------------------------------------------------------

inline constexpr std::array<std::uint8_t, 8> kPngSignature{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

inline Image decode_png(std::span<const std::uint8_t> bytes, const std::string& name = "<memory>") {
  // IHDR sits at a fixed offset: signature(8) length(4) type(4) w(4) h(4) depth(1) color(1).
  if (bytes.size() < 33 || !std::equal(kPngSignature.begin(), kPngSignature.end(), bytes.begin()) ||
      std::memcmp(bytes.data() + 12, "IHDR", 4) != 0) {
    throw Error(ErrorKind::unsupported_format, "'" + name + "' is not a PNG file");
  }
  const int bit_depth = bytes[24];
  const int color_type = bytes[25];
  if (bit_depth != 8) {
    throw Error(ErrorKind::unsupported_format,
                "'" + name + "': bit depth " + std::to_string(bit_depth) + " not supported");
  }
  if (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_RGB) {
    throw Error(ErrorKind::unsupported_format,
                "'" + name + "': color type " + std::to_string(color_type) + " not supported");
  }
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw Error(ErrorKind::corrupt_file, "'" + name + "': " + png.message);
  }
  const int channels = color_type == PNG_COLOR_TYPE_GRAY ? 1 : 3;
  png.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, pixels.data(), 0, nullptr)) {
    const std::string message = png.message;
    png_image_free(&png);
    throw Error(ErrorKind::corrupt_file, "'" + name + "': " + message);
  }
  return Image(static_cast<int>(png.width), static_cast<int>(png.height), channels, std::move(pixels));
}

inline std::vector<std::uint8_t> encode_png(const Image& img) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw Error(ErrorKind::unsupported_format, "PNG output supports 1 or 3 channels");
  }
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width());
  png.height = static_cast<png_uint_32>(img.height());
  png.format = img.channels() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, img.pixels().data(), 0, nullptr)) {
    throw Error(ErrorKind::io, std::string("PNG encode failed: ") + png.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, img.pixels().data(), 0, nullptr)) {
    throw Error(ErrorKind::io, std::string("PNG encode failed: ") + png.message);
  }
  out.resize(size);
  return out;
}

// ---------------------------------------------------------------------------
// Binary PGM / PPM
// ---------------------------------------------------------------------------

inline Image decode_pnm(std::span<const std::uint8_t> bytes, const std::string& name = "<memory>") {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&] {
    skip_space();
    int value = 0;
    const auto* first = reinterpret_cast<const char*>(bytes.data() + pos);
    const auto* last = reinterpret_cast<const char*>(bytes.data() + bytes.size());
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr == first) {
      throw Error(ErrorKind::corrupt_file, "'" + name + "': malformed PNM header");
    }
    pos += static_cast<std::size_t>(ptr - first);
    return value;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw Error(ErrorKind::unsupported_format, "'" + name + "' is not a binary PGM/PPM file");
  }
  const int channels = bytes[1] == '5' ? 1 : 3;
  pos = 2;
  const int width = read_int();
  const int height = read_int();
  const int maxval = read_int();
  if (maxval != 255) {
    throw Error(ErrorKind::unsupported_format, "'" + name + "': only 8-bit PNM (maxval 255) supported");
  }
  ++pos;  // single whitespace byte before the raster
  const auto needed = static_cast<std::size_t>(width) * height * channels;
  if (width < 1 || height < 1 || pos + needed > bytes.size()) {
    throw Error(ErrorKind::corrupt_file, "'" + name + "': truncated PNM raster");
  }
  std::vector<std::uint8_t> pixels(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                   bytes.begin() + static_cast<std::ptrdiff_t>(pos + needed));
  return Image(width, height, channels, std::move(pixels));
}

inline std::vector<std::uint8_t> encode_pnm(const Image& img) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw Error(ErrorKind::unsupported_format, "PNM output supports 1 or 3 channels");
  }
  const std::string header = std::string(img.channels() == 1 ? "P5\n" : "P6\n") +
                             std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels().begin(), img.pixels().end());
  return out;
}

/// Reads a PNG, PGM or PPM file, identified by its leading bytes.
inline Image read_image(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorKind::not_found, "no such file '" + path.string() + "'");
  const auto bytes = read_file_bytes(path);
  if (bytes.size() >= 8 && std::equal(kPngSignature.begin(), kPngSignature.end(), bytes.begin())) {
    return decode_png(bytes, path.string());
  }
  if (bytes.size() >= 2 && bytes[0] == 'P') return decode_pnm(bytes, path.string());
  throw Error(ErrorKind::unsupported_format, "'" + path.string() + "' is neither PNG nor PNM");
}

/// Writes by extension: .png, .pgm (gray) or .ppm (RGB).
inline void write_image(const fs::path& path, const Image& img) {
  const std::string ext = path.extension().string();
  if (ext == ".png") {
    write_file_bytes(path, encode_png(img));
  } else if ((ext == ".pgm" && img.channels() == 1) || (ext == ".ppm" && img.channels() == 3)) {
    write_file_bytes(path, encode_pnm(img));
  } else {
    throw Error(ErrorKind::unsupported_format,
                "cannot write a " + std::to_string(img.channels()) + "-channel image as '" + ext + "'");
  }
}

inline bool has_image_extension(const fs::path& path) {
  const std::string ext = path.extension().string();
  return ext == ".png" || ext == ".pgm" || ext == ".ppm";
}

/// Grayscale rendering of a map, pixel = round(255 * v).
inline Image saliency_to_image(const SaliencyMap& map) {
  Image out(map.width(), map.height(), 1);
  auto px = out.pixels();
  const auto values = map.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    px[i] = static_cast<std::uint8_t>(std::clamp(std::lround(255.0 * values[i]), 0L, 255L));
  }
  return out;
}

inline void write_saliency_png(const SaliencyMap& map, const fs::path& path) {
  write_file_bytes(path, encode_png(saliency_to_image(map)));
}

// ---------------------------------------------------------------------------
// CIFAR binary batches
// ---------------------------------------------------------------------------

enum class CifarVariant { cifar10, cifar100 };

inline constexpr std::size_t kCifarSide = 32;
inline constexpr std::size_t kCifarPixelBytes = kCifarSide * kCifarSide * 3;

inline constexpr std::size_t cifar_label_bytes(CifarVariant v) noexcept {
  return v == CifarVariant::cifar10 ? 1 : 2;
}
inline constexpr std::size_t cifar_record_bytes(CifarVariant v) noexcept {
  return cifar_label_bytes(v) + kCifarPixelBytes;
}
inline constexpr std::size_t cifar_class_count(CifarVariant v) noexcept {
  return v == CifarVariant::cifar10 ? 10 : 100;
}

/// Channel-planar CIFAR pixels to an interleaved 32x32x3 image.
inline Image cifar_planar_to_image(std::span<const std::uint8_t> planar) {
  constexpr std::size_t plane = kCifarSide * kCifarSide;
  std::vector<std::uint8_t> px(kCifarPixelBytes);
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < 3; ++c) px[3 * i + c] = planar[c * plane + i];
  }
  return Image(kCifarSide, kCifarSide, 3, std::move(px));
}

/// Inverse of cifar_planar_to_image, appended to out.
inline void append_cifar_planar(const Image& img, std::vector<std::uint8_t>& out) {
  if (img.width() != 32 || img.height() != 32 || img.channels() != 3) {
    throw Error(ErrorKind::shape, "CIFAR records hold 32x32x3 images");
  }
  constexpr std::size_t plane = kCifarSide * kCifarSide;
  const auto px = img.pixels();
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < plane; ++i) out.push_back(px[3 * i + c]);
  }
}

/// Parses the records of one batch file. The CIFAR-100 coarse label is
/// validated and discarded; the fine label is the class.
inline void parse_cifar_records(std::span<const std::uint8_t> bytes, CifarVariant variant,
                                const std::string& name, Dataset& into) {
  const std::size_t record = cifar_record_bytes(variant);
  if (bytes.size() % record != 0) {
    throw Error(ErrorKind::corrupt_file, "'" + name + "': length " + std::to_string(bytes.size()) +
                                             " is not a multiple of the " + std::to_string(record) +
                                             "-byte record size");
  }
  const std::size_t classes = cifar_class_count(variant);
  const std::size_t count = bytes.size() / record;
  into.items.reserve(into.items.size() + count);
  for (std::size_t r = 0; r < count; ++r) {
    const auto rec = bytes.subspan(r * record, record);
    std::size_t label = rec[0];
    if (variant == CifarVariant::cifar100) {
      if (rec[0] >= 20) {
        throw Error(ErrorKind::corrupt_file, "'" + name + "': coarse label out of range in record " +
                                                 std::to_string(r));
      }
      label = rec[1];
    }
    if (label >= classes) {
      throw Error(ErrorKind::corrupt_file,
                  "'" + name + "': label " + std::to_string(label) + " out of range in record " +
                      std::to_string(r));
    }
    into.items.push_back(DatasetItem{name + "#" + std::to_string(r),
                                     cifar_planar_to_image(rec.subspan(cifar_label_bytes(variant))),
                                     label});
  }
}

namespace detail {

inline std::vector<std::string> read_name_lines(const fs::path& path) {
  std::vector<std::string> names;
  std::ifstream in(path);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) names.push_back(line);
  }
  return names;
}

}  // namespace detail

/// Loads one CIFAR batch file, or every training batch of a directory
/// (data_batch_*.bin for CIFAR-10, train.bin for CIFAR-100) in name order.
inline Dataset load_cifar(const fs::path& path, CifarVariant variant) {
  if (!fs::exists(path)) throw Error(ErrorKind::not_found, "no such path '" + path.string() + "'");
  Dataset data;
  data.class_count = cifar_class_count(variant);
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      const std::string fname = entry.path().filename().string();
      const bool wanted = variant == CifarVariant::cifar10
                              ? fname.rfind("data_batch_", 0) == 0 && entry.path().extension() == ".bin"
                              : fname == "train.bin";
      if (wanted) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error(ErrorKind::not_found, "no CIFAR batches in '" + path.string() + "'");
    const fs::path names = path / (variant == CifarVariant::cifar10 ? "batches.meta.txt" : "fine_label_names.txt");
    if (fs::exists(names)) data.class_names = detail::read_name_lines(names);
  } else {
    files.push_back(path);
  }
  for (const auto& file : files) {
    parse_cifar_records(read_file_bytes(file), variant, file.filename().string(), data);
  }
  return data;
}

/// Serializes a CIFAR-10 dataset back to the binary record layout.
inline std::vector<std::uint8_t> encode_cifar10(const Dataset& data) {
  std::vector<std::uint8_t> out;
  out.reserve(data.size() * cifar_record_bytes(CifarVariant::cifar10));
  for (const auto& item : data.items) {
    if (item.label_index >= 10) throw Error(ErrorKind::shape, "CIFAR-10 label out of range");
    out.push_back(static_cast<std::uint8_t>(item.label_index));
    append_cifar_planar(item.image, out);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Labelled image directory
// ---------------------------------------------------------------------------

/// Loads images listed in a "relative_path,class_index" file, in file order.
inline Dataset load_image_dir(const fs::path& root, const fs::path& labels_file) {
  std::ifstream in(labels_file);
  if (!in) throw Error(ErrorKind::not_found, "cannot open labels file '" + labels_file.string() + "'");
  Dataset data;
  std::size_t line_no = 0;
  std::size_t max_label = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto comma = line.rfind(',');
    std::size_t label = 0;
    const char* first = line.data() + comma + 1;
    const char* last = line.data() + line.size();
    if (comma == std::string::npos || comma == 0 ||
        std::from_chars(first, last, label).ptr != last || first == last) {
      throw Error(ErrorKind::parse, labels_file.string() + ":" + std::to_string(line_no) +
                                        ": expected 'relative_path,class_index'");
    }
    const std::string rel = line.substr(0, comma);
    const fs::path file = root / rel;
    if (!fs::exists(file)) throw Error(ErrorKind::not_found, "image not found: '" + file.string() + "'");
    Image img = read_image(file);
    if (!data.items.empty() && !img.same_shape(data.items.front().image)) {
      throw Error(ErrorKind::shape, "image '" + rel + "' differs in shape from '" + data.items.front().id + "'");
    }
    max_label = std::max(max_label, label);
    data.items.push_back(DatasetItem{rel, std::move(img), label});
  }
  if (data.items.empty()) {
    throw Error(ErrorKind::empty_input, "labels file '" + labels_file.string() + "' lists no images");
  }
  data.class_count = max_label + 1;
  return data;
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

/// One augmentation decision as persisted in the manifest.
struct ManifestRecord {
  std::uint64_t index = 0;
  std::string source_id;
  std::string target_id;
  double lambda_raw = 0.0;
  double lambda_eff = 1.0;
  PatchRect src_rect{};
  PatchRect tgt_rect{};
  Scheme scheme = Scheme::sal2corr;
  MethodTag method = MethodTag::fine_grained;
  std::uint64_t seed = 0;

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

namespace detail {

inline nlohmann::ordered_json rect_json(const PatchRect& r) {
  return nlohmann::ordered_json{{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}};
}

inline PatchRect rect_from_json(const nlohmann::json& j) {
  return PatchRect{j.at("x").get<int>(), j.at("y").get<int>(), j.at("w").get<int>(), j.at("h").get<int>()};
}

}  // namespace detail

/// One JSON object on one line, fields in fixed order. Doubles are written
/// in shortest round-trip form.
inline std::string format_manifest_line(const ManifestRecord& r) {
  if (!std::isfinite(r.lambda_raw) || !std::isfinite(r.lambda_eff)) {
    throw Error(ErrorKind::numeric_domain, "manifest record " + std::to_string(r.index) + " has a non-finite lambda");
  }
  nlohmann::ordered_json j;
  j["index"] = r.index;
  j["source_id"] = r.source_id;
  j["target_id"] = r.target_id;
  j["lambda_raw"] = r.lambda_raw;
  j["lambda_eff"] = r.lambda_eff;
  j["src_rect"] = detail::rect_json(r.src_rect);
  j["tgt_rect"] = detail::rect_json(r.tgt_rect);
  j["scheme"] = to_string(r.scheme);
  j["method"] = to_string(r.method);
  j["seed"] = r.seed;
  return j.dump();
}

inline ManifestRecord parse_manifest_line(const std::string& line, std::size_t line_no = 0) {
  try {
    const auto j = nlohmann::json::parse(line);
    ManifestRecord r;
    r.index = j.at("index").get<std::uint64_t>();
    r.source_id = j.at("source_id").get<std::string>();
    r.target_id = j.at("target_id").get<std::string>();
    r.lambda_raw = j.at("lambda_raw").get<double>();
    r.lambda_eff = j.at("lambda_eff").get<double>();
    r.src_rect = detail::rect_from_json(j.at("src_rect"));
    r.tgt_rect = detail::rect_from_json(j.at("tgt_rect"));
    r.scheme = parse_scheme(j.at("scheme").get<std::string>());
    r.method = parse_method(j.at("method").get<std::string>());
    r.seed = j.at("seed").get<std::uint64_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, "manifest line " + std::to_string(line_no) + ": " + e.what());
  } catch (const Error& e) {
    throw Error(ErrorKind::parse, "manifest line " + std::to_string(line_no) + ": " + e.what());
  }
}

inline ManifestRecord make_record(const Dataset& data, const BatchItem& item, std::uint64_t seed) {
  const MixPlan& plan = item.sample.plan;
  return ManifestRecord{item.index,           data.items[item.source_index].id,
                        data.items[item.target_index].id, plan.lambda_raw,
                        plan.lambda_eff,      plan.src_rect,
                        plan.tgt_rect,        plan.scheme,
                        plan.method,          seed};
}

inline void write_manifest(const std::vector<ManifestRecord>& records, const fs::path& path) {
  std::string text;
  for (const auto& r : records) {
    text += format_manifest_line(r);
    text += '\n';
  }
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

inline std::vector<ManifestRecord> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::not_found, "cannot open manifest '" + path.string() + "'");
  std::vector<ManifestRecord> out;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty()) continue;
    out.push_back(parse_manifest_line(line, line_no));
  }
  return out;
}

/// Streaming manifest writer. Records may arrive in any order; lines are
/// flushed strictly by index starting at 0.
class ManifestWriter {
 public:
  explicit ManifestWriter(const fs::path& path) : path_(path), out_(path, std::ios::trunc) {
    if (!out_) throw Error(ErrorKind::io, "cannot create manifest '" + path.string() + "'");
  }

  void add(ManifestRecord record) {
    const std::string line = format_manifest_line(record);
    pending_.emplace(record.index, line);
    for (auto it = pending_.find(next_); it != pending_.end(); it = pending_.find(next_)) {
      out_ << it->second << '\n';
      pending_.erase(it);
      ++next_;
    }
  }

  /// Flushes and checks that indices 0..n-1 were all written.
  void finish() {
    out_.flush();
    if (!out_) throw Error(ErrorKind::io, "write failed on '" + path_.string() + "'");
    if (!pending_.empty()) {
      throw Error(ErrorKind::missing_input, "manifest gap: record " + std::to_string(next_) + " never arrived");
    }
  }

  std::uint64_t written() const noexcept { return next_; }

 private:
  fs::path path_;
  std::ofstream out_;
  std::map<std::uint64_t, std::string> pending_;
  std::uint64_t next_ = 0;
};

// ---------------------------------------------------------------------------
// Soft labels
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

/// "index p0 p1 ... p{K-1}" with shortest round-trip decimals.
inline std::string format_label_line(std::uint64_t index, const LabelVector& label) {
  std::string line = std::to_string(index);
  for (double p : label.probs) {
    line += ' ';
    line += format_double(p);
  }
  return line;
}

}  // namespace saliencymix
