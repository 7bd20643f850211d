#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string>

#include "polegrad/backend.hpp"
#include "polegrad/types.hpp"

namespace polegrad {

// NCHW extents. Every dimension is at least 1; plain vectors are modeled as
// (1, 1, 1, W).
struct Shape {
  std::array<int, 4> d{1, 1, 1, 1};

  int n() const { return d[0]; }
  int c() const { return d[1]; }
  int h() const { return d[2]; }
  int w() const { return d[3]; }

  std::size_t count() const {
    return static_cast<std::size_t>(d[0]) * static_cast<std::size_t>(d[1]) *
           static_cast<std::size_t>(d[2]) * static_cast<std::size_t>(d[3]);
  }

  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& s);

// Named NCHW tensor with separate value and gradient buffers, both owned
// through registry handles and freed on destruction.
class Blob {
 public:
  Blob(std::shared_ptr<Registry> registry, const Shape& shape, std::string name);
  ~Blob();

  Blob(const Blob&) = delete;
  Blob& operator=(const Blob&) = delete;
  Blob(Blob&& other) noexcept;
  Blob& operator=(Blob&& other) noexcept;

  const std::string& name() const { return name_; }
  const Shape& shape() const { return shape_; }
  std::size_t count() const { return shape_.count(); }

  Handle data_handle() const { return data_; }
  Handle diff_handle() const { return diff_; }
  Registry& registry() const { return *registry_; }

  std::span<real> data() { return registry_->buffer(data_); }
  std::span<const real> data() const { return registry_->buffer(data_); }
  std::span<real> diff() { return registry_->buffer(diff_); }
  std::span<const real> diff() const { return registry_->buffer(diff_); }

  // Same element count: buffers and contents are kept. Different count: both
  // buffers are reallocated and zero-filled.
  void reshape(const Shape& shape);

  // Zeroes the gradient buffer only.
  void zero_diff();

 private:
  void release();

  std::shared_ptr<Registry> registry_;
  Shape shape_;
  std::string name_;
  Handle data_{};
  Handle diff_{};
};

}  // namespace polegrad
