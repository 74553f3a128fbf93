#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "leafdet/feature_map.hpp"
#include "leafdet/rpn.hpp"

namespace leafdet {

/// Named float32 tensors stored as a JSON manifest plus one binary blob.
///
/// Manifest layout:
///
///   {"format": "leafdet-tensors", "version": 1, "dtype": "float32",
///    "byte_order": "little", "blob": "<file next to the manifest>",
///    "tensors": [{"name": "...", "shape": [d0, d1, ...], "offset": <bytes>}]}
///
/// Each tensor occupies prod(shape) little-endian IEEE-754 float32 values,
/// row-major, starting at `offset` bytes into the blob. Conv weights use
/// (out_channel, in_channel, ky, kx); feature maps use (channel, row, col).
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<float> data;

  std::size_t element_count() const;
};

class TensorBundle {
 public:
  void put(const std::string& name, Tensor tensor);
  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }

  /// Throws ValidationError when the tensor is missing.
  const Tensor& get(const std::string& name) const;

  const std::map<std::string, Tensor>& tensors() const { return tensors_; }

 private:
  std::map<std::string, Tensor> tensors_;
};

/// Throws IoError when files are unreadable, ValidationError when the
/// manifest is malformed or a tensor does not fit in the blob.
TensorBundle read_tensor_bundle(const std::filesystem::path& manifest);

/// Writes `<manifest>` and a blob named `<manifest stem>.bin` next to it.
void write_tensor_bundle(const std::filesystem::path& manifest, const TensorBundle& bundle);

Tensor to_tensor(const FeatureMap& map);
/// Expects shape [C, H, W].
FeatureMap to_feature_map(const Tensor& tensor, const std::string& name = "features");

/// Tensor names used for an RPN head: rpn.{shared,cls,reg}.{weight,bias}.
void put_rpn_head(TensorBundle& bundle, const RpnHead& head);
RpnHead rpn_head_from_bundle(const TensorBundle& bundle, std::size_t anchors_per_position);

}  // namespace leafdet
