#include "polegrad/net.hpp"

#include <bit>
#include <cstring>
#include <set>
#include <utility>

#include "polegrad/errors.hpp"

namespace polegrad {

Net::Net(const NetDef& def, std::uint64_t seed)
    : registry_(std::make_shared<Registry>()), def_(def) {
  rng_handle_ = registry_->create_rng(seed);
  Rng& rng = registry_->rng(rng_handle_);

  std::set<std::string> consumed;
  for (const LayerSpec& spec : def_.layers) {
    auto layer = make_layer(spec);

    std::vector<Blob*> bottoms;
    std::vector<Shape> bottom_shapes;
    for (const std::string& bottom_name : spec.bottoms) {
      auto it = blob_index_.find(bottom_name);
      if (it == blob_index_.end()) {
        throw ModelError("layer '" + spec.name + "': undefined bottom '" + bottom_name +
                         "'");
      }
      bottoms.push_back(it->second);
      bottom_shapes.push_back(it->second->shape());
      consumed.insert(bottom_name);
    }

    std::vector<Shape> top_shapes = layer->setup(bottom_shapes, registry_, rng);
    if (top_shapes.size() != spec.tops.size()) {
      throw ModelError("layer '" + spec.name + "': produced " +
                       std::to_string(top_shapes.size()) + " top shape(s) for " +
                       std::to_string(spec.tops.size()) + " top name(s)");
    }

    std::vector<Blob*> tops;
    for (std::size_t t = 0; t < spec.tops.size(); ++t) {
      const std::string& top_name = spec.tops[t];
      if (blob_index_.contains(top_name)) {
        throw ModelError("layer '" + spec.name + "': top '" + top_name +
                         "' is already produced");
      }
      blobs_.push_back(std::make_shared<Blob>(registry_, top_shapes[t], top_name));
      Blob* blob = blobs_.back().get();
      blob_index_.emplace(top_name, blob);
      producer_index_.emplace(top_name, layers_.size());
      tops.push_back(blob);
    }

    for (const auto& param : layer->params()) {
      params_.push_back(param.get());
    }

    layers_.push_back(std::move(layer));
    bottoms_.push_back(std::move(bottoms));
    tops_.push_back(std::move(tops));
  }

  for (const auto& blob : blobs_) {
    if (!consumed.contains(blob->name())) {
      output_names_.push_back(blob->name());
    }
  }
}

Net::~Net() {
  if (registry_ && rng_handle_) {
    registry_->free_subsystem(rng_handle_);
  }
}

Net& Net::operator=(Net&& other) noexcept {
  if (this != &other) {
    if (registry_ && rng_handle_) {
      registry_->free_subsystem(rng_handle_);
    }
    registry_ = std::move(other.registry_);
    rng_handle_ = std::exchange(other.rng_handle_, Handle{});
    def_ = std::move(other.def_);
    layers_ = std::move(other.layers_);
    bottoms_ = std::move(other.bottoms_);
    tops_ = std::move(other.tops_);
    blobs_ = std::move(other.blobs_);
    blob_index_ = std::move(other.blob_index_);
    producer_index_ = std::move(other.producer_index_);
    params_ = std::move(other.params_);
    output_names_ = std::move(other.output_names_);
  }
  return *this;
}

std::map<std::string, Blob*> Net::forward() {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->forward(bottoms_[i], tops_[i]);
  }
  std::map<std::string, Blob*> outputs;
  for (const std::string& name : output_names_) {
    outputs.emplace(name, blob_index_.at(name));
  }
  return outputs;
}

void Net::backward() {
  for (std::size_t i = layers_.size(); i-- > 0;) {
    layers_[i]->backward(tops_[i], bottoms_[i]);
  }
}

void Net::backward_from(const std::string& blob_name) {
  auto it = producer_index_.find(blob_name);
  if (it == producer_index_.end()) {
    throw ModelError("backward_from: no layer produces blob '" + blob_name + "'");
  }
  for (std::size_t i = it->second + 1; i-- > 0;) {
    layers_[i]->backward(tops_[i], bottoms_[i]);
  }
}

bool Net::has_blob(const std::string& name) const { return blob_index_.contains(name); }

Blob& Net::blob(const std::string& name) {
  auto it = blob_index_.find(name);
  if (it == blob_index_.end()) {
    throw NotFound("no blob named '" + name + "'");
  }
  return *it->second;
}

const Blob& Net::blob(const std::string& name) const {
  return const_cast<Net*>(this)->blob(name);
}

Layer* Net::find_layer(const std::string& name) {
  for (const auto& layer : layers_) {
    if (layer->name() == name) return layer.get();
  }
  return nullptr;
}

std::vector<std::pair<std::string, Shape>> Net::blob_shapes() const {
  std::vector<std::pair<std::string, Shape>> shapes;
  shapes.reserve(blobs_.size());
  for (const auto& blob : blobs_) {
    shapes.emplace_back(blob->name(), blob->shape());
  }
  return shapes;
}

// ---------------------------------------------------------------------------
// Weight snapshots.
//
// Layout, all integers little-endian:
//   bytes 0..3   magic "MCWT"
//   u32          version (1)
//   u32          parameter blob count
//   per blob:    u32 name length, name bytes,
//                u32 dims[4] (NCHW),
//                f64 values[count] (IEEE-754 little-endian)

namespace {

constexpr char kMagic[4] = {'M', 'C', 'W', 'T'};
constexpr std::uint32_t kVersion = 1;

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

void append_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int shift = 0; shift < 64; shift += 8) {
    out.push_back(static_cast<std::uint8_t>((bits >> shift) & 0xff));
  }
}

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t read_u32() {
    require(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  double read_f64() {
    require(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
      bits |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    }
    pos_ += 8;
    return std::bit_cast<double>(bits);
  }

  std::string read_string(std::size_t len) {
    require(len);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
    pos_ += len;
    return s;
  }

  bool exhausted() const { return pos_ == bytes_.size(); }

 private:
  void require(std::size_t n) {
    if (bytes_.size() - pos_ < n) {
      throw FormatError("weight snapshot: truncated payload");
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> Net::snapshot_weights() const {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  append_u32(out, kVersion);
  append_u32(out, static_cast<std::uint32_t>(params_.size()));
  for (const Blob* param : params_) {
    append_u32(out, static_cast<std::uint32_t>(param->name().size()));
    out.insert(out.end(), param->name().begin(), param->name().end());
    for (int dim : param->shape().d) {
      append_u32(out, static_cast<std::uint32_t>(dim));
    }
    for (real v : param->data()) {
      append_f64(out, static_cast<double>(v));
    }
  }
  return out;
}

void Net::restore_weights(std::span<const std::uint8_t> bytes) {
  ByteReader reader(bytes);
  const std::string magic = reader.read_string(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) {
    throw FormatError("weight snapshot: bad magic");
  }
  const std::uint32_t version = reader.read_u32();
  if (version != kVersion) {
    throw FormatError("weight snapshot: unsupported version " + std::to_string(version));
  }
  const std::uint32_t blob_count = reader.read_u32();
  if (blob_count != params_.size()) {
    throw FormatError("weight snapshot: holds " + std::to_string(blob_count) +
                      " blob(s), net has " + std::to_string(params_.size()));
  }
  for (Blob* param : params_) {
    const std::uint32_t name_len = reader.read_u32();
    const std::string name = reader.read_string(name_len);
    if (name != param->name()) {
      throw FormatError("weight snapshot: blob '" + name + "' does not match '" +
                        param->name() + "'");
    }
    Shape shape;
    for (int i = 0; i < 4; ++i) {
      shape.d[i] = static_cast<int>(reader.read_u32());
    }
    if (shape != param->shape()) {
      throw FormatError("weight snapshot: blob '" + name + "' has shape " +
                        to_string(shape) + ", net expects " + to_string(param->shape()));
    }
    auto dst = param->data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i] = static_cast<real>(reader.read_f64());
    }
  }
  if (!reader.exhausted()) {
    throw FormatError("weight snapshot: trailing bytes");
  }
}

}  // namespace polegrad
