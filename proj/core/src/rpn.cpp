#include "leafdet/rpn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "leafdet/error.hpp"

namespace leafdet {

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

std::vector<double> gaussian(std::size_t n, std::uint64_t seed, double stddev) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> out(n);
  for (double& v : out) {
    v = dist(rng);
  }
  return out;
}

}  // namespace

ConvLayer::ConvLayer(std::size_t kernel, std::size_t in_channels, std::size_t out_channels,
                     std::vector<double> weights, std::vector<double> bias)
    : kernel_(kernel),
      in_(in_channels),
      out_(out_channels),
      weights_(std::move(weights)),
      bias_(std::move(bias)) {
  if (kernel != 1 && kernel != 3) {
    throw ValidationError("conv kernel must be 1x1 or 3x3, got " + std::to_string(kernel));
  }
  if (in_ == 0 || out_ == 0) {
    throw ValidationError("conv layer needs at least one input and output channel");
  }
  const std::size_t expected = out_ * in_ * kernel_ * kernel_;
  if (weights_.size() != expected) {
    std::ostringstream msg;
    msg << "conv weight tensor has " << weights_.size() << " values, expected " << expected
        << " (" << out_ << "x" << in_ << "x" << kernel_ << "x" << kernel_ << ")";
    throw ValidationError(msg.str());
  }
  if (bias_.size() != out_) {
    std::ostringstream msg;
    msg << "conv bias has " << bias_.size() << " values, expected " << out_;
    throw ValidationError(msg.str());
  }
  if (!all_finite(weights_) || !all_finite(bias_)) {
    throw ValidationError("conv layer has non-finite parameters");
  }
}

ConvLayer ConvLayer::random(std::size_t kernel, std::size_t in_channels,
                            std::size_t out_channels, std::uint64_t seed, double stddev) {
  return ConvLayer(kernel, in_channels, out_channels,
                   gaussian(out_channels * in_channels * kernel * kernel, seed, stddev),
                   std::vector<double>(out_channels, 0.0));
}

DenseLayer::DenseLayer(std::size_t in_features, std::size_t out_features,
                       std::vector<double> weights, std::vector<double> bias)
    : in_(in_features), out_(out_features), weights_(std::move(weights)), bias_(std::move(bias)) {
  if (in_ == 0 || out_ == 0) {
    throw ValidationError("dense layer needs at least one input and output");
  }
  if (weights_.size() != in_ * out_) {
    std::ostringstream msg;
    msg << "dense weight matrix has " << weights_.size() << " values, expected "
        << out_ << "x" << in_;
    throw ValidationError(msg.str());
  }
  if (bias_.size() != out_) {
    std::ostringstream msg;
    msg << "dense bias has " << bias_.size() << " values, expected " << out_;
    throw ValidationError(msg.str());
  }
  if (!all_finite(weights_) || !all_finite(bias_)) {
    throw ValidationError("dense layer has non-finite parameters");
  }
}

DenseLayer DenseLayer::random(std::size_t in_features, std::size_t out_features,
                              std::uint64_t seed, double stddev) {
  return DenseLayer(in_features, out_features,
                    gaussian(in_features * out_features, seed, stddev),
                    std::vector<double>(out_features, 0.0));
}

std::vector<double> DenseLayer::forward(std::span<const double> x) const {
  if (x.size() != in_) {
    std::ostringstream msg;
    msg << "dense layer expects " << in_ << " inputs, got " << x.size();
    throw ValidationError(msg.str());
  }
  std::vector<double> y(bias_.begin(), bias_.end());
  for (std::size_t o = 0; o < out_; ++o) {
    const double* row = weights_.data() + o * in_;
    double acc = 0.0;
    for (std::size_t i = 0; i < in_; ++i) {
      acc += row[i] * x[i];
    }
    y[o] += acc;
  }
  return y;
}

FeatureMap conv_forward(const FeatureMap& input, const ConvLayer& layer) {
  if (input.channels() != layer.in_channels()) {
    std::ostringstream msg;
    msg << "conv expects " << layer.in_channels() << " input channels, got "
        << input.channels();
    throw ValidationError(msg.str());
  }
  const std::size_t h = input.height();
  const std::size_t w = input.width();
  const std::size_t kern = layer.kernel();
  const std::ptrdiff_t pad = kern == 3 ? 1 : 0;
  FeatureMap out(layer.out_channels(), h, w);

  for (std::size_t o = 0; o < layer.out_channels(); ++o) {
    const double b = layer.bias()[o];
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        double acc = 0.0;
        for (std::size_t c = 0; c < input.channels(); ++c) {
          for (std::size_t ky = 0; ky < kern; ++ky) {
            const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(i + ky) - pad;
            if (y < 0 || y >= static_cast<std::ptrdiff_t>(h)) continue;
            for (std::size_t kx = 0; kx < kern; ++kx) {
              const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(j + kx) - pad;
              if (x < 0 || x >= static_cast<std::ptrdiff_t>(w)) continue;
              acc += layer.weight(o, c, ky, kx) *
                     input(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x));
            }
          }
        }
        out(o, i, j) = acc + b;
      }
    }
  }
  return out;
}

FeatureMap relu(FeatureMap map) {
  for (double& v : map.values()) {
    v = std::max(0.0, v);
  }
  return map;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    sum += out[i];
  }
  for (double& v : out) {
    v /= sum;
  }
  return out;
}

void RpnHead::validate() const {
  const std::size_t k = anchors_per_position;
  if (k == 0) {
    throw ValidationError("RPN head needs at least one anchor per position");
  }
  if (shared.kernel() != 3) {
    throw ValidationError("RPN shared layer must be a 3x3 conv");
  }
  if (cls.kernel() != 1 || reg.kernel() != 1) {
    throw ValidationError("RPN cls/reg layers must be 1x1 convs");
  }
  if (cls.in_channels() != shared.out_channels() || reg.in_channels() != shared.out_channels()) {
    std::ostringstream msg;
    msg << "RPN sibling layers expect " << shared.out_channels()
        << " input channels (shared conv output), got cls=" << cls.in_channels()
        << " reg=" << reg.in_channels();
    throw ValidationError(msg.str());
  }
  if (cls.out_channels() != 2 * k) {
    std::ostringstream msg;
    msg << "RPN cls layer must output 2k = " << 2 * k << " channels for k = " << k
        << ", got " << cls.out_channels();
    throw ValidationError(msg.str());
  }
  if (reg.out_channels() != 4 * k) {
    std::ostringstream msg;
    msg << "RPN reg layer must output 4k = " << 4 * k << " channels for k = " << k
        << ", got " << reg.out_channels();
    throw ValidationError(msg.str());
  }
}

RpnHead RpnHead::random(std::size_t feature_channels, std::size_t anchors_per_position,
                        std::uint64_t seed, std::size_t shared_channels) {
  const std::size_t mid = shared_channels == 0 ? feature_channels : shared_channels;
  std::seed_seq seq{seed};
  std::vector<std::uint64_t> seeds(3);
  seq.generate(seeds.begin(), seeds.end());
  return RpnHead{
      ConvLayer::random(3, feature_channels, mid, seeds[0]),
      ConvLayer::random(1, mid, 2 * anchors_per_position, seeds[1]),
      ConvLayer::random(1, mid, 4 * anchors_per_position, seeds[2]),
      anchors_per_position,
  };
}

RpnOutput::RpnOutput(FeatureMap cls_map, FeatureMap reg_map, std::size_t anchors_per_position)
    : cls_(std::move(cls_map)), reg_(std::move(reg_map)), k_(anchors_per_position) {
  if (cls_.channels() != 2 * k_ || reg_.channels() != 4 * k_) {
    std::ostringstream msg;
    msg << "RPN output expects 2k = " << 2 * k_ << " cls and 4k = " << 4 * k_
        << " reg channels, got " << cls_.channels() << " and " << reg_.channels();
    throw ValidationError(msg.str());
  }
  if (cls_.height() != reg_.height() || cls_.width() != reg_.width()) {
    throw ValidationError("RPN cls and reg maps have different spatial sizes");
  }
}

double RpnOutput::object_probability(std::size_t row, std::size_t col, std::size_t a) const {
  const double bg = cls_(2 * a, row, col);
  const double fg = cls_(2 * a + 1, row, col);
  // Two-way softmax written as a logistic of the logit difference.
  const double d = bg - fg;
  return 1.0 / (1.0 + std::exp(d));
}

FeatureMap RpnOutput::objectness() const {
  FeatureMap out(cls_.channels(), cls_.height(), cls_.width());
  for (std::size_t a = 0; a < k_; ++a) {
    for (std::size_t i = 0; i < cls_.height(); ++i) {
      for (std::size_t j = 0; j < cls_.width(); ++j) {
        const double p = object_probability(i, j, a);
        out(2 * a, i, j) = 1.0 - p;
        out(2 * a + 1, i, j) = p;
      }
    }
  }
  return out;
}

BoxDelta RpnOutput::delta(std::size_t row, std::size_t col, std::size_t a) const {
  return BoxDelta{reg_(4 * a, row, col), reg_(4 * a + 1, row, col),
                  reg_(4 * a + 2, row, col), reg_(4 * a + 3, row, col)};
}

RpnOutput rpn_forward(const FeatureMap& features, const RpnHead& head) {
  head.validate();
  const FeatureMap shared = relu(conv_forward(features, head.shared));
  return RpnOutput(conv_forward(shared, head.cls), conv_forward(shared, head.reg),
                   head.anchors_per_position);
}

void DetectionHead::validate() const {
  if (num_classes == 0) {
    throw ValidationError("detection head needs at least one foreground class");
  }
  std::size_t width = hidden.empty() ? cls_score.in_features() : hidden.front().in_features();
  for (std::size_t l = 0; l < hidden.size(); ++l) {
    if (hidden[l].in_features() != width) {
      std::ostringstream msg;
      msg << "hidden layer " << l << " expects " << hidden[l].in_features()
          << " inputs but the previous layer produces " << width;
      throw ValidationError(msg.str());
    }
    width = hidden[l].out_features();
  }
  if (cls_score.in_features() != width || bbox_pred.in_features() != width) {
    std::ostringstream msg;
    msg << "output layers expect " << width << " inputs, got cls=" << cls_score.in_features()
        << " bbox=" << bbox_pred.in_features();
    throw ValidationError(msg.str());
  }
  if (cls_score.out_features() != num_classes + 1) {
    std::ostringstream msg;
    msg << "classifier must output C + 1 = " << num_classes + 1 << " scores, got "
        << cls_score.out_features();
    throw ValidationError(msg.str());
  }
  if (bbox_pred.out_features() != 4 * num_classes) {
    std::ostringstream msg;
    msg << "box regressor must output 4C = " << 4 * num_classes << " values, got "
        << bbox_pred.out_features();
    throw ValidationError(msg.str());
  }
}

DetectionHead DetectionHead::random(std::size_t input_features,
                                    std::span<const std::size_t> hidden_sizes,
                                    std::size_t num_classes, std::uint64_t seed) {
  std::seed_seq seq{seed};
  std::vector<std::uint64_t> seeds(hidden_sizes.size() + 2);
  seq.generate(seeds.begin(), seeds.end());
  std::vector<DenseLayer> hidden;
  std::size_t width = input_features;
  for (std::size_t l = 0; l < hidden_sizes.size(); ++l) {
    hidden.push_back(DenseLayer::random(width, hidden_sizes[l], seeds[l]));
    width = hidden_sizes[l];
  }
  return DetectionHead{
      std::move(hidden),
      DenseLayer::random(width, num_classes + 1, seeds[hidden_sizes.size()]),
      DenseLayer::random(width, 4 * num_classes, seeds[hidden_sizes.size() + 1], 0.001),
      num_classes,
  };
}

BoxDelta HeadOutput::delta_for(std::size_t foreground_class) const {
  const std::size_t base = 4 * foreground_class;
  if (base + 4 > box_deltas.size()) {
    throw std::out_of_range("foreground class index out of range");
  }
  return BoxDelta{box_deltas[base], box_deltas[base + 1], box_deltas[base + 2],
                  box_deltas[base + 3]};
}

HeadOutput head_forward(std::span<const double> roi_vector, const DetectionHead& head) {
  head.validate();
  const std::size_t expected =
      head.hidden.empty() ? head.cls_score.in_features() : head.hidden.front().in_features();
  if (roi_vector.size() != expected) {
    std::ostringstream msg;
    msg << "detection head expects a pooled vector of length " << expected << ", got "
        << roi_vector.size();
    throw ValidationError(msg.str());
  }
  std::vector<double> x(roi_vector.begin(), roi_vector.end());
  for (const DenseLayer& layer : head.hidden) {
    x = layer.forward(x);
    for (double& v : x) v = std::max(0.0, v);
  }
  return HeadOutput{softmax(head.cls_score.forward(x)), head.bbox_pred.forward(x)};
}

}  // namespace leafdet
