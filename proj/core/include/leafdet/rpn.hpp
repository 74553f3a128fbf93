#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "leafdet/box_coding.hpp"
#include "leafdet/feature_map.hpp"

namespace leafdet {

/// Square convolution, 1x1 or 3x3, stride 1. 3x3 kernels are zero padded
/// by one so the spatial size is preserved.
///
/// Weights are laid out (out_channel, in_channel, ky, kx), row-major.
class ConvLayer {
 public:
  ConvLayer(std::size_t kernel, std::size_t in_channels, std::size_t out_channels,
            std::vector<double> weights, std::vector<double> bias);

  /// Gaussian weights N(0, stddev^2) from a generator seeded with `seed`, zero bias.
  static ConvLayer random(std::size_t kernel, std::size_t in_channels,
                          std::size_t out_channels, std::uint64_t seed,
                          double stddev = 0.01);

  std::size_t kernel() const { return kernel_; }
  std::size_t in_channels() const { return in_; }
  std::size_t out_channels() const { return out_; }
  std::span<const double> weights() const { return weights_; }
  std::span<const double> bias() const { return bias_; }

  double weight(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) const {
    return weights_[((o * in_ + i) * kernel_ + ky) * kernel_ + kx];
  }

 private:
  std::size_t kernel_;
  std::size_t in_;
  std::size_t out_;
  std::vector<double> weights_;
  std::vector<double> bias_;
};

/// Fully connected layer, weights (out, in) row-major.
class DenseLayer {
 public:
  DenseLayer(std::size_t in_features, std::size_t out_features,
             std::vector<double> weights, std::vector<double> bias);

  static DenseLayer random(std::size_t in_features, std::size_t out_features,
                           std::uint64_t seed, double stddev = 0.01);

  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }
  std::span<const double> weights() const { return weights_; }
  std::span<const double> bias() const { return bias_; }

  std::vector<double> forward(std::span<const double> x) const;

 private:
  std::size_t in_;
  std::size_t out_;
  std::vector<double> weights_;
  std::vector<double> bias_;
};

FeatureMap conv_forward(const FeatureMap& input, const ConvLayer& layer);

/// max(0, x) elementwise.
FeatureMap relu(FeatureMap map);

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

/// Shared 3x3 conv followed by the sibling 1x1 objectness (2k outputs) and
/// regression (4k outputs) convolutions.
struct RpnHead {
  ConvLayer shared;
  ConvLayer cls;
  ConvLayer reg;
  std::size_t anchors_per_position;

  /// Throws ValidationError naming the expected channel counts when the
  /// layers do not chain or do not produce 2k / 4k outputs.
  void validate() const;

  /// Seeded random head; the shared conv keeps the input channel count.
  static RpnHead random(std::size_t feature_channels, std::size_t anchors_per_position,
                        std::uint64_t seed, std::size_t shared_channels = 0);
};

/// RPN output maps over the same Hf x Wf grid as the input features.
///
/// Objectness channels come in (not-object, object) pairs per anchor:
/// channel 2a is the background logit of anchor a and 2a + 1 the object
/// logit. Regression channels 4a .. 4a + 3 hold (tx, ty, tw, th).
class RpnOutput {
 public:
  RpnOutput(FeatureMap cls_map, FeatureMap reg_map, std::size_t anchors_per_position);

  const FeatureMap& cls_map() const { return cls_; }
  const FeatureMap& reg_map() const { return reg_; }
  std::size_t anchors_per_position() const { return k_; }
  std::size_t height() const { return cls_.height(); }
  std::size_t width() const { return cls_.width(); }

  /// Softmax probability that anchor a at (row, col) is an object.
  double object_probability(std::size_t row, std::size_t col, std::size_t a) const;

  /// Map of softmaxed (not-object, object) probability pairs, 2k channels.
  FeatureMap objectness() const;

  BoxDelta delta(std::size_t row, std::size_t col, std::size_t a) const;

 private:
  FeatureMap cls_;
  FeatureMap reg_;
  std::size_t k_;
};

RpnOutput rpn_forward(const FeatureMap& features, const RpnHead& head);

/// Fully connected detection head: hidden layers (each followed by ReLU),
/// then a (C + 1)-way classifier with background at index 0 and a 4C box
/// regressor (one BoxDelta per foreground class).
struct DetectionHead {
  std::vector<DenseLayer> hidden;
  DenseLayer cls_score;
  DenseLayer bbox_pred;
  std::size_t num_classes;

  void validate() const;

  static DetectionHead random(std::size_t input_features,
                              std::span<const std::size_t> hidden_sizes,
                              std::size_t num_classes, std::uint64_t seed);
};

struct HeadOutput {
  /// Length C + 1; index 0 is background.
  std::vector<double> class_probs;
  /// Length 4C, laid out (class, tx ty tw th) for foreground classes.
  std::vector<double> box_deltas;

  BoxDelta delta_for(std::size_t foreground_class) const;
};

/// Runs the head on a pooled RoI vector of length W * H * C_f.
HeadOutput head_forward(std::span<const double> roi_vector, const DetectionHead& head);

}  // namespace leafdet
