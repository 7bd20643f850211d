#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "polegrad/layers.hpp"
#include "polegrad/proto_node.hpp"

namespace polegrad {

// Ordered model description. Layer order is execution order; every bottom
// must be produced as a top by an earlier layer.
struct NetDef {
  std::optional<std::string> name;
  std::vector<LayerSpec> layers;
  std::vector<ProtoNode> extras;  // unrecognized top-level fields

  bool operator==(const NetDef&) const = default;
};

// An executable network: layers wired through named blobs, all storage in a
// private Registry. Construction validates the definition, propagates
// shapes, and fills weights from the seed.
class Net {
 public:
  Net() = default;
  Net(const NetDef& def, std::uint64_t seed);
  ~Net();

  Net(const Net&) = delete;
  Net& operator=(const Net&) = delete;
  Net(Net&&) noexcept = default;
  Net& operator=(Net&& other) noexcept;

  // Runs every layer in definition order; returns the blobs no layer
  // consumes.
  std::map<std::string, Blob*> forward();

  // Runs every layer's backward in reverse definition order.
  void backward();

  // Runs backward only for the named blob's producer and the layers above
  // it; everything downstream is skipped. Parameter gradients accumulate.
  void backward_from(const std::string& blob_name);

  bool has_blob(const std::string& name) const;
  Blob& blob(const std::string& name);
  const Blob& blob(const std::string& name) const;

  const std::vector<std::unique_ptr<Layer>>& layers() const { return layers_; }
  Layer* find_layer(const std::string& name);

  // Parameter blobs of every layer, in layer order.
  const std::vector<Blob*>& params() const { return params_; }

  // Blob names in creation order with their shapes (for reporting).
  std::vector<std::pair<std::string, Shape>> blob_shapes() const;

  const NetDef& def() const { return def_; }
  const std::shared_ptr<Registry>& registry() const { return registry_; }

  // Binary image of all parameter blobs; see snapshot.cpp for the layout.
  std::vector<std::uint8_t> snapshot_weights() const;

  // Restores a snapshot taken from an identically structured net; anything
  // else is a FormatError.
  void restore_weights(std::span<const std::uint8_t> bytes);

 private:
  std::shared_ptr<Registry> registry_;
  Handle rng_handle_{};
  NetDef def_;
  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<std::vector<Blob*>> bottoms_;
  std::vector<std::vector<Blob*>> tops_;
  std::vector<std::shared_ptr<Blob>> blobs_;
  std::map<std::string, Blob*> blob_index_;
  std::map<std::string, std::size_t> producer_index_;
  std::vector<Blob*> params_;
  std::vector<std::string> output_names_;
};

}  // namespace polegrad
