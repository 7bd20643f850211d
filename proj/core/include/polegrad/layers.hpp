#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "polegrad/blob.hpp"
#include "polegrad/proto_node.hpp"
#include "polegrad/types.hpp"

namespace polegrad {

enum class LayerType {
  kInnerProduct,
  kRelu,
  kSigmoid,
  kSoftmax,
  kMemoryData,
  kMemoryLoss,
};

std::string_view to_string(LayerType type);
std::optional<LayerType> layer_type_from_string(std::string_view name);

struct InnerProductParam {
  int num_output = 0;
  std::vector<ProtoNode> extras;  // unrecognized fields, kept for printing

  bool operator==(const InnerProductParam&) const = default;
};

struct MemoryDataParam {
  int batch_size = 0;
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<ProtoNode> extras;

  bool operator==(const MemoryDataParam&) const = default;
};

struct LayerSpec {
  std::string name;
  LayerType type = LayerType::kInnerProduct;
  std::vector<std::string> bottoms;
  std::vector<std::string> tops;
  std::optional<InnerProductParam> inner_product;
  std::optional<MemoryDataParam> memory_data;
  std::vector<ProtoNode> extras;

  bool operator==(const LayerSpec&) const = default;
};

// Called during backward to fill a gradient; receives the MemoryLoss
// layer's bottom blob.
using LossHook = std::function<void(Blob& bottom)>;

// A configured layer instance: owns its parameter blobs and any internal
// state (queues, hooks). Shapes are fixed at setup().
class Layer {
 public:
  explicit Layer(LayerSpec spec) : spec_(std::move(spec)) {}
  virtual ~Layer() = default;

  Layer(const Layer&) = delete;
  Layer& operator=(const Layer&) = delete;

  const LayerSpec& spec() const { return spec_; }
  const std::string& name() const { return spec_.name; }
  LayerType type() const { return spec_.type; }

  // Validates bottom shapes, allocates parameters, returns top shapes.
  virtual std::vector<Shape> setup(const std::vector<Shape>& bottom_shapes,
                                   const std::shared_ptr<Registry>& registry,
                                   Rng& rng) = 0;

  virtual void forward(std::span<Blob* const> bottoms, std::span<Blob* const> tops) = 0;

  // Writes bottom gradients from top gradients; parameter gradients
  // accumulate, bottom gradients are overwritten.
  virtual void backward(std::span<Blob* const> tops, std::span<Blob* const> bottoms) = 0;

  virtual const std::vector<std::shared_ptr<Blob>>& params() const;

  // Only MemoryLoss accepts a hook; everything else throws ModelError.
  virtual void set_loss_hook(LossHook hook);

 protected:
  LayerSpec spec_;
};

// Validates arity and per-type required params, then constructs the layer.
std::unique_ptr<Layer> make_layer(const LayerSpec& spec);

class InnerProductLayer final : public Layer {
 public:
  using Layer::Layer;

  std::vector<Shape> setup(const std::vector<Shape>& bottom_shapes,
                           const std::shared_ptr<Registry>& registry, Rng& rng) override;
  void forward(std::span<Blob* const> bottoms, std::span<Blob* const> tops) override;
  void backward(std::span<Blob* const> tops, std::span<Blob* const> bottoms) override;
  const std::vector<std::shared_ptr<Blob>>& params() const override { return params_; }

  Blob& weight() { return *params_[0]; }
  Blob& bias() { return *params_[1]; }

 private:
  int input_dim_ = 0;
  int num_output_ = 0;
  std::vector<std::shared_ptr<Blob>> params_;
};

class ReluLayer final : public Layer {
 public:
  using Layer::Layer;

  std::vector<Shape> setup(const std::vector<Shape>& bottom_shapes,
                           const std::shared_ptr<Registry>& registry, Rng& rng) override;
  void forward(std::span<Blob* const> bottoms, std::span<Blob* const> tops) override;
  void backward(std::span<Blob* const> tops, std::span<Blob* const> bottoms) override;
};

class SigmoidLayer final : public Layer {
 public:
  using Layer::Layer;

  std::vector<Shape> setup(const std::vector<Shape>& bottom_shapes,
                           const std::shared_ptr<Registry>& registry, Rng& rng) override;
  void forward(std::span<Blob* const> bottoms, std::span<Blob* const> tops) override;
  void backward(std::span<Blob* const> tops, std::span<Blob* const> bottoms) override;
};

// Normalizes each sample's feature vector (all of C*H*W) with the usual
// max-subtraction guard. Backward applies the full Jacobian.
class SoftmaxLayer final : public Layer {
 public:
  using Layer::Layer;

  std::vector<Shape> setup(const std::vector<Shape>& bottom_shapes,
                           const std::shared_ptr<Registry>& registry, Rng& rng) override;
  void forward(std::span<Blob* const> bottoms, std::span<Blob* const> tops) override;
  void backward(std::span<Blob* const> tops, std::span<Blob* const> bottoms) override;
};

// FIFO input feed. Each enqueue supplies one sample of C*H*W values; each
// forward consumes batch_size samples or throws DataStarvation.
class MemoryDataLayer final : public Layer {
 public:
  using Layer::Layer;

  std::vector<Shape> setup(const std::vector<Shape>& bottom_shapes,
                           const std::shared_ptr<Registry>& registry, Rng& rng) override;
  void forward(std::span<Blob* const> bottoms, std::span<Blob* const> tops) override;
  void backward(std::span<Blob* const> tops, std::span<Blob* const> bottoms) override;

  void enqueue(std::span<const real> sample);
  std::size_t queued() const { return queue_.size(); }
  std::size_t sample_size() const { return sample_size_; }

 private:
  std::size_t sample_size_ = 0;
  int batch_size_ = 0;
  std::deque<std::vector<real>> queue_;
};

// Terminal layer with no top. Backward invokes the installed hook so a
// caller can write gradients into the graph; without a hook it leaves the
// bottom gradient untouched.
class MemoryLossLayer final : public Layer {
 public:
  using Layer::Layer;

  std::vector<Shape> setup(const std::vector<Shape>& bottom_shapes,
                           const std::shared_ptr<Registry>& registry, Rng& rng) override;
  void forward(std::span<Blob* const> bottoms, std::span<Blob* const> tops) override;
  void backward(std::span<Blob* const> tops, std::span<Blob* const> bottoms) override;
  void set_loss_hook(LossHook hook) override { hook_ = std::move(hook); }
  bool has_loss_hook() const { return static_cast<bool>(hook_); }

 private:
  LossHook hook_;
};

// Gradient of cross-entropy loss at a softmax output: probs - target.
// target must be one-hot; the result's components sum to zero.
std::vector<real> softmax_xent_gradient(std::span<const real> probs,
                                        std::span<const real> target);

}  // namespace polegrad
