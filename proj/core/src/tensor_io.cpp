#include "leafdet/tensor_io.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

#include "leafdet/error.hpp"

namespace leafdet {

namespace {

using json = nlohmann::json;

constexpr const char* kFormat = "leafdet-tensors";

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    os << (i ? ", " : "") << shape[i];
  }
  os << "]";
  return os.str();
}

void append_le(std::string& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int b = 0; b < 4; ++b) {
    out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFFu));
  }
}

float read_le(const unsigned char* p) {
  const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                             (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) |
                             (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Tensor expect_shape(const TensorBundle& bundle, const std::string& name,
                    const std::vector<std::size_t>& shape) {
  const Tensor& t = bundle.get(name);
  if (t.shape != shape) {
    throw ValidationError("tensor " + name + " has shape " + shape_string(t.shape) +
                          ", expected " + shape_string(shape));
  }
  return t;
}

std::vector<double> widen(const std::vector<float>& v) { return {v.begin(), v.end()}; }

Tensor narrow(std::vector<std::size_t> shape, std::span<const double> v) {
  Tensor t{std::move(shape), {}};
  t.data.reserve(v.size());
  for (double x : v) t.data.push_back(static_cast<float>(x));
  return t;
}

ConvLayer conv_from(const TensorBundle& bundle, const std::string& prefix, std::size_t kernel) {
  const Tensor& w = bundle.get(prefix + ".weight");
  if (w.shape.size() != 4 || w.shape[2] != kernel || w.shape[3] != kernel) {
    throw ValidationError("tensor " + prefix + ".weight has shape " + shape_string(w.shape) +
                          ", expected [out, in, " + std::to_string(kernel) + ", " +
                          std::to_string(kernel) + "]");
  }
  const Tensor b = expect_shape(bundle, prefix + ".bias", {w.shape[0]});
  return ConvLayer(kernel, w.shape[1], w.shape[0], widen(w.data), widen(b.data));
}

void put_conv(TensorBundle& bundle, const std::string& prefix, const ConvLayer& layer) {
  bundle.put(prefix + ".weight",
             narrow({layer.out_channels(), layer.in_channels(), layer.kernel(), layer.kernel()},
                    layer.weights()));
  bundle.put(prefix + ".bias", narrow({layer.out_channels()}, layer.bias()));
}

}  // namespace

std::size_t Tensor::element_count() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<std::size_t>());
}

void TensorBundle::put(const std::string& name, Tensor tensor) {
  if (tensor.element_count() != tensor.data.size()) {
    throw ValidationError("tensor " + name + " with shape " + shape_string(tensor.shape) +
                          " holds " + std::to_string(tensor.data.size()) + " values");
  }
  tensors_[name] = std::move(tensor);
}

const Tensor& TensorBundle::get(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) {
    throw ValidationError("missing tensor " + name);
  }
  return it->second;
}

TensorBundle read_tensor_bundle(const std::filesystem::path& manifest) {
  json doc;
  try {
    doc = json::parse(read_file(manifest));
  } catch (const json::parse_error& e) {
    throw ValidationError(manifest.string() + ": malformed manifest: " + e.what());
  }

  TensorBundle bundle;
  try {
    if (doc.at("format").get<std::string>() != kFormat) {
      throw ValidationError(manifest.string() + ": not a " + kFormat + " manifest");
    }
    if (doc.value("dtype", "float32") != "float32" ||
        doc.value("byte_order", "little") != "little") {
      throw ValidationError(manifest.string() + ": only little-endian float32 is supported");
    }
    const std::string blob = read_file(manifest.parent_path() / doc.at("blob").get<std::string>());
    const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());
    for (const json& entry : doc.at("tensors")) {
      const auto name = entry.at("name").get<std::string>();
      Tensor t;
      t.shape = entry.at("shape").get<std::vector<std::size_t>>();
      const auto offset = entry.at("offset").get<std::size_t>();
      const std::size_t n = t.element_count();
      if (offset > blob.size() || n > (blob.size() - offset) / 4) {
        throw ValidationError("tensor " + name + " extends past the end of the blob");
      }
      t.data.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        t.data[i] = read_le(bytes + offset + 4 * i);
      }
      bundle.put(name, std::move(t));
    }
  } catch (const json::exception& e) {
    throw ValidationError(manifest.string() + ": " + e.what());
  }
  return bundle;
}

void write_tensor_bundle(const std::filesystem::path& manifest, const TensorBundle& bundle) {
  const std::string blob_name = manifest.stem().string() + ".bin";
  std::string blob;
  json entries = json::array();
  for (const auto& [name, t] : bundle.tensors()) {
    entries.push_back({{"name", name}, {"shape", t.shape}, {"offset", blob.size()}});
    for (float v : t.data) append_le(blob, v);
  }
  const json doc = {{"format", kFormat}, {"version", 1},         {"dtype", "float32"},
                    {"byte_order", "little"}, {"blob", blob_name}, {"tensors", entries}};

  std::ofstream bin(manifest.parent_path() / blob_name, std::ios::binary);
  bin.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  std::ofstream man(manifest);
  man << doc.dump(2) << "\n";
  if (!bin || !man) {
    throw IoError("cannot write tensor bundle " + manifest.string());
  }
}

Tensor to_tensor(const FeatureMap& map) {
  return narrow({map.channels(), map.height(), map.width()}, map.values());
}

FeatureMap to_feature_map(const Tensor& tensor, const std::string& name) {
  if (tensor.shape.size() != 3) {
    throw ValidationError("tensor " + name + " has shape " + shape_string(tensor.shape) +
                          ", expected [channels, height, width]");
  }
  return FeatureMap(tensor.shape[0], tensor.shape[1], tensor.shape[2], widen(tensor.data));
}

void put_rpn_head(TensorBundle& bundle, const RpnHead& head) {
  put_conv(bundle, "rpn.shared", head.shared);
  put_conv(bundle, "rpn.cls", head.cls);
  put_conv(bundle, "rpn.reg", head.reg);
}

RpnHead rpn_head_from_bundle(const TensorBundle& bundle, std::size_t anchors_per_position) {
  RpnHead head{conv_from(bundle, "rpn.shared", 3), conv_from(bundle, "rpn.cls", 1),
               conv_from(bundle, "rpn.reg", 1), anchors_per_position};
  head.validate();
  return head;
}

}  // namespace leafdet
