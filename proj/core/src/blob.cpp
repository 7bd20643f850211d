#include "polegrad/blob.hpp"

#include <utility>

#include "polegrad/errors.hpp"

namespace polegrad {

std::string to_string(const Shape& s) {
  return "(" + std::to_string(s.n()) + ", " + std::to_string(s.c()) + ", " +
         std::to_string(s.h()) + ", " + std::to_string(s.w()) + ")";
}

namespace {

void check_shape(const Shape& shape, const std::string& name) {
  for (int dim : shape.d) {
    if (dim < 1) {
      throw InvalidArgument("blob '" + name + "': every dimension must be >= 1, got " +
                            to_string(shape));
    }
  }
}

}  // namespace

Blob::Blob(std::shared_ptr<Registry> registry, const Shape& shape, std::string name)
    : registry_(std::move(registry)), shape_(shape), name_(std::move(name)) {
  check_shape(shape_, name_);
  data_ = registry_->alloc_buffer(shape_.count());
  diff_ = registry_->alloc_buffer(shape_.count());
}

Blob::~Blob() { release(); }

Blob::Blob(Blob&& other) noexcept
    : registry_(std::move(other.registry_)),
      shape_(other.shape_),
      name_(std::move(other.name_)),
      data_(other.data_),
      diff_(other.diff_) {
  other.data_ = Handle{};
  other.diff_ = Handle{};
}

Blob& Blob::operator=(Blob&& other) noexcept {
  if (this != &other) {
    release();
    registry_ = std::move(other.registry_);
    shape_ = other.shape_;
    name_ = std::move(other.name_);
    data_ = other.data_;
    diff_ = other.diff_;
    other.data_ = Handle{};
    other.diff_ = Handle{};
  }
  return *this;
}

void Blob::release() {
  if (registry_) {
    if (data_) registry_->free_buffer(data_);
    if (diff_) registry_->free_buffer(diff_);
  }
  data_ = Handle{};
  diff_ = Handle{};
}

void Blob::reshape(const Shape& shape) {
  check_shape(shape, name_);
  if (shape.count() == shape_.count()) {
    shape_ = shape;
    return;
  }
  registry_->free_buffer(data_);
  registry_->free_buffer(diff_);
  shape_ = shape;
  data_ = registry_->alloc_buffer(shape_.count());
  diff_ = registry_->alloc_buffer(shape_.count());
}

void Blob::zero_diff() {
  kernels::fill(*registry_, diff_, count(), real(0));
}

}  // namespace polegrad
