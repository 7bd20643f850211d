#include "polegrad/layers.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "polegrad/errors.hpp"

namespace polegrad {

std::string_view to_string(LayerType type) {
  switch (type) {
    case LayerType::kInnerProduct: return "InnerProduct";
    case LayerType::kRelu: return "ReLU";
    case LayerType::kSigmoid: return "Sigmoid";
    case LayerType::kSoftmax: return "Softmax";
    case LayerType::kMemoryData: return "MemoryData";
    case LayerType::kMemoryLoss: return "MemoryLoss";
  }
  return "?";
}

std::optional<LayerType> layer_type_from_string(std::string_view name) {
  if (name == "InnerProduct") return LayerType::kInnerProduct;
  if (name == "ReLU") return LayerType::kRelu;
  if (name == "Sigmoid") return LayerType::kSigmoid;
  if (name == "Softmax") return LayerType::kSoftmax;
  if (name == "MemoryData") return LayerType::kMemoryData;
  if (name == "MemoryLoss") return LayerType::kMemoryLoss;
  return std::nullopt;
}

const std::vector<std::shared_ptr<Blob>>& Layer::params() const {
  static const std::vector<std::shared_ptr<Blob>> kEmpty;
  return kEmpty;
}

void Layer::set_loss_hook(LossHook) {
  throw ModelError("layer '" + spec_.name + "': loss hooks require a MemoryLoss layer");
}

namespace {

struct Arity {
  std::size_t bottoms;
  std::size_t tops;
};

Arity arity_for(LayerType type) {
  switch (type) {
    case LayerType::kMemoryData: return {0, 1};
    case LayerType::kMemoryLoss: return {1, 0};
    default: return {1, 1};
  }
}

void check_one_bottom(const LayerSpec& spec, const std::vector<Shape>& bottom_shapes) {
  if (bottom_shapes.size() != 1) {
    throw ModelError("layer '" + spec.name + "': expected exactly one bottom shape");
  }
}

}  // namespace

std::unique_ptr<Layer> make_layer(const LayerSpec& spec) {
  const Arity arity = arity_for(spec.type);
  if (spec.bottoms.size() != arity.bottoms || spec.tops.size() != arity.tops) {
    throw ModelError("layer '" + spec.name + "' (" + std::string(to_string(spec.type)) +
                     "): expected " + std::to_string(arity.bottoms) + " bottom(s) and " +
                     std::to_string(arity.tops) + " top(s), got " +
                     std::to_string(spec.bottoms.size()) + " and " +
                     std::to_string(spec.tops.size()));
  }
  switch (spec.type) {
    case LayerType::kInnerProduct: {
      if (!spec.inner_product || spec.inner_product->num_output < 1) {
        throw ModelError("layer '" + spec.name +
                         "': inner_product_param.num_output >= 1 is required");
      }
      return std::make_unique<InnerProductLayer>(spec);
    }
    case LayerType::kRelu: return std::make_unique<ReluLayer>(spec);
    case LayerType::kSigmoid: return std::make_unique<SigmoidLayer>(spec);
    case LayerType::kSoftmax: return std::make_unique<SoftmaxLayer>(spec);
    case LayerType::kMemoryData: {
      const auto& p = spec.memory_data;
      if (!p || p->batch_size < 1 || p->channels < 1 || p->height < 1 || p->width < 1) {
        throw ModelError("layer '" + spec.name +
                         "': memory_data_param with positive batch_size, channels, "
                         "height, width is required");
      }
      return std::make_unique<MemoryDataLayer>(spec);
    }
    case LayerType::kMemoryLoss: return std::make_unique<MemoryLossLayer>(spec);
  }
  throw ModelError("layer '" + spec.name + "': unhandled layer type");
}

// ---------------------------------------------------------------------------
// InnerProduct

std::vector<Shape> InnerProductLayer::setup(const std::vector<Shape>& bottom_shapes,
                                            const std::shared_ptr<Registry>& registry,
                                            Rng& rng) {
  check_one_bottom(spec_, bottom_shapes);
  const Shape& bottom = bottom_shapes[0];
  input_dim_ = bottom.c() * bottom.h() * bottom.w();
  num_output_ = spec_.inner_product->num_output;

  params_.clear();
  params_.push_back(std::make_shared<Blob>(
      registry, Shape{{1, 1, num_output_, input_dim_}}, spec_.name + ".weight"));
  params_.push_back(std::make_shared<Blob>(registry, Shape{{1, 1, 1, num_output_}},
                                           spec_.name + ".bias"));

  // Uniform Xavier fill; bias stays zero.
  const double limit = std::sqrt(6.0 / (input_dim_ + num_output_));
  auto w = params_[0]->data();
  for (auto& v : w) v = static_cast<real>(rng.uniform(-limit, limit));

  return {Shape{{bottom.n(), 1, 1, num_output_}}};
}

void InnerProductLayer::forward(std::span<Blob* const> bottoms,
                                std::span<Blob* const> tops) {
  Blob& bottom = *bottoms[0];
  Blob& top = *tops[0];
  Registry& reg = bottom.registry();
  const int rows = bottom.shape().n();

  // top = bottom * W^T
  kernels::gemm(reg, false, true, rows, num_output_, input_dim_, real(1),
                bottom.data_handle(), weight().data_handle(), real(0),
                top.data_handle());

  auto t = top.data();
  auto b = bias().data();
  for (int r = 0; r < rows; ++r) {
    for (int j = 0; j < num_output_; ++j) {
      t[static_cast<std::size_t>(r) * num_output_ + j] += b[j];
    }
  }
}

void InnerProductLayer::backward(std::span<Blob* const> tops,
                                 std::span<Blob* const> bottoms) {
  Blob& bottom = *bottoms[0];
  Blob& top = *tops[0];
  Registry& reg = bottom.registry();
  const int rows = bottom.shape().n();

  // dW += top.diff^T * bottom.data
  kernels::gemm(reg, true, false, num_output_, input_dim_, rows, real(1),
                top.diff_handle(), bottom.data_handle(), real(1),
                weight().diff_handle());

  auto td = top.diff();
  auto bd = bias().diff();
  for (int r = 0; r < rows; ++r) {
    for (int j = 0; j < num_output_; ++j) {
      bd[j] += td[static_cast<std::size_t>(r) * num_output_ + j];
    }
  }

  // bottom.diff = top.diff * W
  kernels::gemm(reg, false, false, rows, input_dim_, num_output_, real(1),
                top.diff_handle(), weight().data_handle(), real(0),
                bottom.diff_handle());
}

// ---------------------------------------------------------------------------
// ReLU

std::vector<Shape> ReluLayer::setup(const std::vector<Shape>& bottom_shapes,
                                    const std::shared_ptr<Registry>&, Rng&) {
  check_one_bottom(spec_, bottom_shapes);
  return {bottom_shapes[0]};
}

void ReluLayer::forward(std::span<Blob* const> bottoms, std::span<Blob* const> tops) {
  auto x = bottoms[0]->data();
  auto y = tops[0]->data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = x[i] > real(0) ? x[i] : real(0);
  }
}

void ReluLayer::backward(std::span<Blob* const> tops, std::span<Blob* const> bottoms) {
  auto x = bottoms[0]->data();
  auto td = tops[0]->diff();
  auto bd = bottoms[0]->diff();
  for (std::size_t i = 0; i < x.size(); ++i) {
    bd[i] = x[i] > real(0) ? td[i] : real(0);
  }
}

// ---------------------------------------------------------------------------
// Sigmoid

std::vector<Shape> SigmoidLayer::setup(const std::vector<Shape>& bottom_shapes,
                                       const std::shared_ptr<Registry>&, Rng&) {
  check_one_bottom(spec_, bottom_shapes);
  return {bottom_shapes[0]};
}

void SigmoidLayer::forward(std::span<Blob* const> bottoms, std::span<Blob* const> tops) {
  auto x = bottoms[0]->data();
  auto y = tops[0]->data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = real(1) / (real(1) + std::exp(-x[i]));
  }
}

void SigmoidLayer::backward(std::span<Blob* const> tops, std::span<Blob* const> bottoms) {
  auto y = tops[0]->data();
  auto td = tops[0]->diff();
  auto bd = bottoms[0]->diff();
  for (std::size_t i = 0; i < y.size(); ++i) {
    bd[i] = td[i] * y[i] * (real(1) - y[i]);
  }
}

// ---------------------------------------------------------------------------
// Softmax

std::vector<Shape> SoftmaxLayer::setup(const std::vector<Shape>& bottom_shapes,
                                       const std::shared_ptr<Registry>&, Rng&) {
  check_one_bottom(spec_, bottom_shapes);
  return {bottom_shapes[0]};
}

void SoftmaxLayer::forward(std::span<Blob* const> bottoms, std::span<Blob* const> tops) {
  const Shape& shape = bottoms[0]->shape();
  const std::size_t features =
      static_cast<std::size_t>(shape.c()) * shape.h() * shape.w();
  auto x = bottoms[0]->data();
  auto y = tops[0]->data();
  for (int s = 0; s < shape.n(); ++s) {
    const std::size_t base = static_cast<std::size_t>(s) * features;
    real m = x[base];
    for (std::size_t i = 1; i < features; ++i) m = std::max(m, x[base + i]);
    real sum = 0;
    for (std::size_t i = 0; i < features; ++i) {
      y[base + i] = std::exp(x[base + i] - m);
      sum += y[base + i];
    }
    for (std::size_t i = 0; i < features; ++i) y[base + i] /= sum;
  }
}

void SoftmaxLayer::backward(std::span<Blob* const> tops, std::span<Blob* const> bottoms) {
  const Shape& shape = bottoms[0]->shape();
  const std::size_t features =
      static_cast<std::size_t>(shape.c()) * shape.h() * shape.w();
  auto y = tops[0]->data();
  auto td = tops[0]->diff();
  auto bd = bottoms[0]->diff();
  for (int s = 0; s < shape.n(); ++s) {
    const std::size_t base = static_cast<std::size_t>(s) * features;
    real weighted = 0;
    for (std::size_t i = 0; i < features; ++i) weighted += td[base + i] * y[base + i];
    for (std::size_t i = 0; i < features; ++i) {
      bd[base + i] = y[base + i] * (td[base + i] - weighted);
    }
  }
}

// ---------------------------------------------------------------------------
// MemoryData

std::vector<Shape> MemoryDataLayer::setup(const std::vector<Shape>& bottom_shapes,
                                          const std::shared_ptr<Registry>&, Rng&) {
  if (!bottom_shapes.empty()) {
    throw ModelError("layer '" + spec_.name + "': MemoryData takes no bottoms");
  }
  const MemoryDataParam& p = *spec_.memory_data;
  batch_size_ = p.batch_size;
  sample_size_ = static_cast<std::size_t>(p.channels) * p.height * p.width;
  return {Shape{{p.batch_size, p.channels, p.height, p.width}}};
}

void MemoryDataLayer::enqueue(std::span<const real> sample) {
  if (sample.size() != sample_size_) {
    throw InvalidArgument("layer '" + spec_.name + "': enqueue of " +
                          std::to_string(sample.size()) + " values, expected " +
                          std::to_string(sample_size_));
  }
  queue_.emplace_back(sample.begin(), sample.end());
}

void MemoryDataLayer::forward(std::span<Blob* const>, std::span<Blob* const> tops) {
  if (queue_.size() < static_cast<std::size_t>(batch_size_)) {
    throw DataStarvation("layer '" + spec_.name + "': queue holds " +
                         std::to_string(queue_.size()) + " sample(s), batch needs " +
                         std::to_string(batch_size_));
  }
  auto out = tops[0]->data();
  for (int b = 0; b < batch_size_; ++b) {
    const std::vector<real>& sample = queue_.front();
    std::copy(sample.begin(), sample.end(),
              out.begin() + static_cast<std::ptrdiff_t>(b * sample_size_));
    queue_.pop_front();
  }
}

void MemoryDataLayer::backward(std::span<Blob* const>, std::span<Blob* const>) {}

// ---------------------------------------------------------------------------
// MemoryLoss

std::vector<Shape> MemoryLossLayer::setup(const std::vector<Shape>& bottom_shapes,
                                          const std::shared_ptr<Registry>&, Rng&) {
  check_one_bottom(spec_, bottom_shapes);
  return {};
}

void MemoryLossLayer::forward(std::span<Blob* const>, std::span<Blob* const>) {}

void MemoryLossLayer::backward(std::span<Blob* const>, std::span<Blob* const> bottoms) {
  if (hook_) {
    hook_(*bottoms[0]);
  }
}

// ---------------------------------------------------------------------------

std::vector<real> softmax_xent_gradient(std::span<const real> probs,
                                        std::span<const real> target) {
  if (probs.size() != target.size()) {
    throw InvalidArgument("softmax_xent_gradient: probs length " +
                          std::to_string(probs.size()) + " != target length " +
                          std::to_string(target.size()));
  }
  if (probs.empty()) {
    throw InvalidArgument("softmax_xent_gradient: empty input");
  }
  real prob_sum = 0;
  for (real p : probs) prob_sum += p;
  if (std::abs(prob_sum - real(1)) > real(1e-6)) {
    throw InvalidArgument("softmax_xent_gradient: probs sum to " +
                          std::to_string(prob_sum) + ", expected 1");
  }
  int ones = 0;
  for (real t : target) {
    if (t == real(1)) {
      ++ones;
    } else if (t != real(0)) {
      throw InvalidArgument("softmax_xent_gradient: target is not one-hot");
    }
  }
  if (ones != 1) {
    throw InvalidArgument("softmax_xent_gradient: target is not one-hot");
  }
  std::vector<real> grad(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) grad[i] = probs[i] - target[i];
  return grad;
}

}  // namespace polegrad
