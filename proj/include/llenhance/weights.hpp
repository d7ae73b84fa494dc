#pragma once

// Generator architecture description and the portable "LLGW" weight file.
//
// Layout (version 1, little-endian):
//   0..3    magic "LLGW"
//   4..7    u32 version (1)
//   8..11   u32 header length H
//   12..    H bytes of UTF-8 JSON:
//           {"arch": {...}, "tensors": [{"name", "shape", "offset", "dtype": "f32le"}, ...]}
//   12+H..  tensor blob; offsets are relative to the blob start and 4-byte aligned

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "llenhance/error.hpp"
#include "llenhance/frame_io.hpp"

namespace llenhance {

struct GeneratorArch {
  int in_channels = 6;
  int out_channels = 6;
  int base_filters = 64;
  int n_encoder_blocks = 3;
  int n_resnet_blocks = 9;
  int n_decoder_blocks = 3;

  friend bool operator==(const GeneratorArch&, const GeneratorArch&) = default;

  void validate() const {
    if (in_channels < 1 || out_channels < 1 || base_filters < 1) {
      throw InvalidArgument("generator arch: channel counts must be positive");
    }
    if (n_encoder_blocks < 1 || n_encoder_blocks != n_decoder_blocks) {
      throw InvalidArgument("generator arch: encoder and decoder need the same positive block count");
    }
    if (n_resnet_blocks < 0) throw InvalidArgument("generator arch: negative resnet block count");
  }

  int encoder_out(int i) const { return base_filters << i; }
  int encoder_in(int i) const { return i == 0 ? in_channels : encoder_out(i - 1); }
  int bottleneck() const { return encoder_out(n_encoder_blocks - 1); }
  int decoder_out(int i) const { return base_filters << std::max(n_decoder_blocks - 2 - i, 0); }
  int decoder_in(int i) const { return i == 0 ? bottleneck() : decoder_out(i - 1); }
  /// Spatial side must be divisible by this.
  int size_multiple() const { return 1 << n_encoder_blocks; }
};

struct TensorSpec {
  std::string name;
  std::vector<int> shape;
  std::size_t count() const {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
  }
};

/// Every parameter tensor the architecture needs, in canonical file order.
inline std::vector<TensorSpec> expected_tensors(const GeneratorArch& arch) {
  arch.validate();
  std::vector<TensorSpec> out;
  auto conv = [&](const std::string& prefix, int cout, int cin) {
    out.push_back({prefix + ".weight", {cout, cin, 3, 3}});
    out.push_back({prefix + ".bias", {cout}});
  };
  auto norm = [&](const std::string& prefix, int c) {
    out.push_back({prefix + ".gamma", {c}});
    out.push_back({prefix + ".beta", {c}});
  };
  for (int i = 0; i < arch.n_encoder_blocks; ++i) {
    const std::string p = "enc." + std::to_string(i);
    conv(p + ".conv", arch.encoder_out(i), arch.encoder_in(i));
    norm(p + ".norm", arch.encoder_out(i));
    out.push_back({p + ".shrink.lambda", {arch.encoder_out(i)}});
  }
  const int b = arch.bottleneck();
  for (int i = 0; i < arch.n_resnet_blocks; ++i) {
    const std::string p = "res." + std::to_string(i);
    conv(p + ".conv1", b, b);
    norm(p + ".norm1", b);
    conv(p + ".conv2", b, b);
    norm(p + ".norm2", b);
  }
  for (int i = 0; i < arch.n_decoder_blocks; ++i) {
    const std::string p = "dec." + std::to_string(i);
    conv(p + ".conv", arch.decoder_out(i), arch.decoder_in(i));
    norm(p + ".norm", arch.decoder_out(i));
  }
  conv("head.conv", arch.out_channels, arch.decoder_out(arch.n_decoder_blocks - 1));
  return out;
}

/// Distinct failure kinds when reading a weight file.
class WeightFormatError : public Error {
 public:
  enum class Kind { BadMagic, UnsupportedVersion, Truncated, BadHeader, BadDtype, BadOffset,
                    MissingTensor, UnknownTensor, ShapeMismatch, NonFinite };

  WeightFormatError(Kind kind, const std::string& detail) : Error(label(kind) + ": " + detail), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

  static std::string label(Kind k) {
    switch (k) {
      case Kind::BadMagic: return "bad magic";
      case Kind::UnsupportedVersion: return "unsupported version";
      case Kind::Truncated: return "truncated file";
      case Kind::BadHeader: return "malformed header";
      case Kind::BadDtype: return "unsupported dtype";
      case Kind::BadOffset: return "bad tensor offset";
      case Kind::MissingTensor: return "missing tensor";
      case Kind::UnknownTensor: return "unknown tensor";
      case Kind::ShapeMismatch: return "shape mismatch";
      case Kind::NonFinite: return "non-finite value";
    }
    return "weight format error";
  }

 private:
  Kind kind_;
};

/// Architecture plus named parameter tensors. Shapes are checked against the
/// architecture on construction.
class GeneratorWeights {
 public:
  using Store = std::map<std::string, std::vector<float>>;

  explicit GeneratorWeights(GeneratorArch arch) : arch_(arch) {
    for (const auto& spec : expected_tensors(arch_)) tensors_[spec.name].assign(spec.count(), 0.0f);
  }

  const GeneratorArch& arch() const noexcept { return arch_; }
  const Store& tensors() const noexcept { return tensors_; }

  std::vector<float>& operator[](const std::string& name) {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw InvalidArgument("no tensor named " + name);
    return it->second;
  }
  const std::vector<float>& operator[](const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw InvalidArgument("no tensor named " + name);
    return it->second;
  }

 private:
  GeneratorArch arch_;
  Store tensors_;
};

inline constexpr char kWeightMagic[4] = {'L', 'L', 'G', 'W'};
inline constexpr std::uint32_t kWeightVersion = 1;

inline nlohmann::json arch_to_json(const GeneratorArch& a) {
  return {{"in_channels", a.in_channels},       {"out_channels", a.out_channels},
          {"base_filters", a.base_filters},     {"n_encoder_blocks", a.n_encoder_blocks},
          {"n_resnet_blocks", a.n_resnet_blocks}, {"n_decoder_blocks", a.n_decoder_blocks}};
}

/// Serialises to the LLGW v1 byte layout.
inline std::vector<char> encode_weights(const GeneratorWeights& w) {
  nlohmann::json header;
  header["arch"] = arch_to_json(w.arch());
  header["tensors"] = nlohmann::json::array();
  std::size_t offset = 0;
  const auto specs = expected_tensors(w.arch());
  for (const auto& spec : specs) {
    header["tensors"].push_back({{"name", spec.name}, {"shape", spec.shape}, {"offset", offset}, {"dtype", "f32le"}});
    offset += 4 * spec.count();
  }
  const std::string text = header.dump();

  std::ostringstream os(std::ios::binary);
  os.write(kWeightMagic, 4);
  detail::put_u32(os, kWeightVersion);
  detail::put_u32(os, static_cast<std::uint32_t>(text.size()));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& spec : specs) detail::write_f32le(os, w[spec.name]);
  const std::string bytes = os.str();
  return {bytes.begin(), bytes.end()};
}

/// Writes atomically (temporary file, then rename).
inline void save_weights(const GeneratorWeights& w, const std::filesystem::path& path) {
  const auto bytes = encode_weights(w);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot write weights");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(path.string(), "cannot write weights");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError(path.string(), "cannot write weights");
  }
}

/// Parses and validates LLGW v1 bytes. Negative softshrink thresholds are
/// clamped to zero.
inline GeneratorWeights decode_weights(std::span<const unsigned char> bytes) {
  using Kind = WeightFormatError::Kind;
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kWeightMagic, 4) != 0) {
    throw WeightFormatError(Kind::BadMagic, "expected LLGW");
  }
  if (bytes.size() < 12) throw WeightFormatError(Kind::Truncated, "header prefix incomplete");
  const std::uint32_t version = detail::get_u32(&bytes[4]);
  if (version != kWeightVersion) throw WeightFormatError(Kind::UnsupportedVersion, "version " + std::to_string(version));
  const std::uint32_t header_len = detail::get_u32(&bytes[8]);
  if (bytes.size() < 12ull + header_len) throw WeightFormatError(Kind::Truncated, "header extends past end of file");
  const auto blob = bytes.subspan(12 + header_len);

  nlohmann::json header;
  GeneratorArch arch;
  try {
    header = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + header_len);
    const auto& a = header.at("arch");
    arch.in_channels = a.at("in_channels").get<int>();
    arch.out_channels = a.at("out_channels").get<int>();
    arch.base_filters = a.at("base_filters").get<int>();
    arch.n_encoder_blocks = a.at("n_encoder_blocks").get<int>();
    arch.n_resnet_blocks = a.at("n_resnet_blocks").get<int>();
    arch.n_decoder_blocks = a.at("n_decoder_blocks").get<int>();
    if (!header.at("tensors").is_array()) throw WeightFormatError(Kind::BadHeader, "tensors is not an array");
    arch.validate();
  } catch (const nlohmann::json::exception& e) {
    throw WeightFormatError(Kind::BadHeader, e.what());
  } catch (const InvalidArgument& e) {
    throw WeightFormatError(Kind::BadHeader, e.what());
  }

  GeneratorWeights weights(arch);
  std::map<std::string, std::vector<int>> expected;
  for (auto& spec : expected_tensors(arch)) expected.emplace(spec.name, spec.shape);

  std::map<std::string, bool> seen;
  for (const auto& entry : header["tensors"]) {
    std::string name;
    std::vector<int> shape;
    std::uint64_t offset = 0;
    std::string dtype;
    try {
      name = entry.at("name").get<std::string>();
      shape = entry.at("shape").get<std::vector<int>>();
      offset = entry.at("offset").get<std::uint64_t>();
      dtype = entry.at("dtype").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw WeightFormatError(Kind::BadHeader, e.what());
    }
    const auto want = expected.find(name);
    if (want == expected.end()) throw WeightFormatError(Kind::UnknownTensor, name);
    if (seen[name]) throw WeightFormatError(Kind::BadHeader, "duplicate tensor " + name);
    seen[name] = true;
    if (dtype != "f32le") throw WeightFormatError(Kind::BadDtype, name + " has dtype " + dtype);
    if (shape != want->second) throw WeightFormatError(Kind::ShapeMismatch, name);
    auto& values = weights[name];
    if (offset % 4 != 0) throw WeightFormatError(Kind::BadOffset, name + " offset not 4-byte aligned");
    if (offset + 4ull * values.size() > blob.size()) throw WeightFormatError(Kind::Truncated, name + " data past end of file");
    detail::read_f32le(blob.data() + offset, values);
    for (float v : values) {
      if (!std::isfinite(v)) throw WeightFormatError(Kind::NonFinite, name);
    }
    if (name.ends_with(".shrink.lambda")) {
      for (float& v : values) v = std::max(v, 0.0f);
    }
  }
  for (const auto& [name, shape] : expected) {
    if (!seen[name]) throw WeightFormatError(Kind::MissingTensor, name);
  }
  return weights;
}

inline GeneratorWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open weight file");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_weights(bytes);
}

}  // namespace llenhance
