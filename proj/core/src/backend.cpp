#include "polegrad/backend.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "polegrad/errors.hpp"

namespace polegrad {

namespace {

std::string handle_label(std::uint64_t id) { return "handle " + std::to_string(id); }

}  // namespace

Handle Registry::alloc_buffer(std::size_t length) {
  if (length == 0) {
    throw InvalidArgument("alloc_buffer: length must be > 0");
  }
  std::lock_guard lock(mutex_);
  const std::uint64_t id = next_id_++;
  slots_.emplace(id, std::vector<real>(length, real(0)));
  return Handle{id, HandleKind::kBuffer};
}

void Registry::free_buffer(Handle h) {
  std::lock_guard lock(mutex_);
  auto it = slots_.find(h.id);
  if (h.id == 0 || it == slots_.end()) {
    throw DanglingHandle("free_buffer: " + handle_label(h.id) + " is not live");
  }
  if (!std::holds_alternative<std::vector<real>>(it->second)) {
    throw InvalidArgument("free_buffer: " + handle_label(h.id) + " is not a buffer");
  }
  slots_.erase(it);
}

std::vector<real>& Registry::buffer_slot(std::uint64_t id, HandleKind) {
  std::lock_guard lock(mutex_);
  auto it = slots_.find(id);
  if (id == 0 || it == slots_.end()) {
    throw DanglingHandle(handle_label(id) + " is not live");
  }
  auto* vec = std::get_if<std::vector<real>>(&it->second);
  if (vec == nullptr) {
    throw InvalidArgument(handle_label(id) + " is not a buffer");
  }
  return *vec;
}

const std::vector<real>& Registry::buffer_slot(std::uint64_t id, HandleKind kind) const {
  return const_cast<Registry*>(this)->buffer_slot(id, kind);
}

std::size_t Registry::buffer_length(Handle h) const {
  return buffer_slot(h.id, h.kind).size();
}

void Registry::write(Handle h, std::span<const real> values) {
  auto& buf = buffer_slot(h.id, h.kind);
  if (values.size() > buf.size()) {
    throw InvalidArgument("write: " + std::to_string(values.size()) +
                          " values into a buffer of length " + std::to_string(buf.size()));
  }
  std::copy(values.begin(), values.end(), buf.begin());
}

std::vector<real> Registry::read(Handle h) const {
  return buffer_slot(h.id, h.kind);
}

std::span<real> Registry::buffer(Handle h) { return buffer_slot(h.id, h.kind); }

std::span<const real> Registry::buffer(Handle h) const {
  return buffer_slot(h.id, h.kind);
}

Handle Registry::create_rng(std::uint64_t seed) {
  std::lock_guard lock(mutex_);
  const std::uint64_t id = next_id_++;
  slots_.emplace(id, Rng(seed));
  return Handle{id, HandleKind::kSubsystem};
}

Rng& Registry::rng(Handle h) {
  std::lock_guard lock(mutex_);
  auto it = slots_.find(h.id);
  if (h.id == 0 || it == slots_.end()) {
    throw DanglingHandle("rng: " + handle_label(h.id) + " is not live");
  }
  auto* r = std::get_if<Rng>(&it->second);
  if (r == nullptr) {
    throw InvalidArgument("rng: " + handle_label(h.id) + " is not a rng subsystem");
  }
  return *r;
}

void Registry::free_subsystem(Handle h) {
  std::lock_guard lock(mutex_);
  auto it = slots_.find(h.id);
  if (h.id == 0 || it == slots_.end()) {
    throw DanglingHandle("free_subsystem: " + handle_label(h.id) + " is not live");
  }
  if (!std::holds_alternative<Rng>(it->second)) {
    throw InvalidArgument("free_subsystem: " + handle_label(h.id) + " is not a subsystem");
  }
  slots_.erase(it);
}

std::size_t Registry::live_slots() const {
  std::lock_guard lock(mutex_);
  return slots_.size();
}

namespace kernels {

namespace {

void check_length(const Registry& reg, Handle h, std::size_t n, const char* what) {
  if (reg.buffer_length(h) < n) {
    throw InvalidArgument(std::string(what) + ": buffer of length " +
                          std::to_string(reg.buffer_length(h)) + " is shorter than " +
                          std::to_string(n));
  }
}

}  // namespace

void fill(Registry& reg, Handle dst, std::size_t n, real value) {
  check_length(reg, dst, n, "fill");
  auto d = reg.buffer(dst);
  std::fill(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(n), value);
}

void copy(Registry& reg, Handle src, Handle dst, std::size_t n) {
  check_length(reg, src, n, "copy");
  check_length(reg, dst, n, "copy");
  auto s = reg.buffer(src);
  auto d = reg.buffer(dst);
  std::copy(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(n), d.begin());
}

void scal(Registry& reg, std::size_t n, real alpha, Handle x) {
  check_length(reg, x, n, "scal");
  auto xs = reg.buffer(x);
  for (std::size_t i = 0; i < n; ++i) xs[i] *= alpha;
}

void axpy(Registry& reg, std::size_t n, real alpha, Handle x, Handle y) {
  check_length(reg, x, n, "axpy");
  check_length(reg, y, n, "axpy");
  auto xs = reg.buffer(x);
  auto ys = reg.buffer(y);
  for (std::size_t i = 0; i < n; ++i) ys[i] += alpha * xs[i];
}

real dot(Registry& reg, std::size_t n, Handle x, Handle y) {
  check_length(reg, x, n, "dot");
  check_length(reg, y, n, "dot");
  auto xs = reg.buffer(x);
  auto ys = reg.buffer(y);
  real acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += xs[i] * ys[i];
  return acc;
}

void gemm(Registry& reg, bool trans_a, bool trans_b, int m, int n, int k,
          real alpha, Handle a, Handle b, real beta, Handle c) {
  if (m <= 0 || n <= 0 || k <= 0) {
    throw InvalidArgument("gemm: m, n, k must be positive");
  }
  const auto need_a = static_cast<std::size_t>(m) * static_cast<std::size_t>(k);
  const auto need_b = static_cast<std::size_t>(k) * static_cast<std::size_t>(n);
  const auto need_c = static_cast<std::size_t>(m) * static_cast<std::size_t>(n);
  check_length(reg, a, need_a, "gemm A");
  check_length(reg, b, need_b, "gemm B");
  check_length(reg, c, need_c, "gemm C");
  auto as = reg.buffer(a);
  auto bs = reg.buffer(b);
  auto cs = reg.buffer(c);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      real acc = 0;
      for (int p = 0; p < k; ++p) {
        const real av = trans_a ? as[static_cast<std::size_t>(p) * m + i]
                                : as[static_cast<std::size_t>(i) * k + p];
        const real bv = trans_b ? bs[static_cast<std::size_t>(j) * k + p]
                                : bs[static_cast<std::size_t>(p) * n + j];
        acc += av * bv;
      }
      const std::size_t idx = static_cast<std::size_t>(i) * n + j;
      cs[idx] = (beta == real(0)) ? alpha * acc : alpha * acc + beta * cs[idx];
    }
  }
}

void rng_uniform(Registry& reg, Handle rng_h, Handle dst, std::size_t n, real lo,
                 real hi) {
  check_length(reg, dst, n, "rng_uniform");
  Rng& r = reg.rng(rng_h);
  auto d = reg.buffer(dst);
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = static_cast<real>(r.uniform(lo, hi));
  }
}

}  // namespace kernels

namespace {

Handle decode_handle(real v, HandleKind kind, const char* what) {
  if (!(v >= 0) || v != std::floor(v)) {
    throw InvalidArgument(std::string(what) + ": " + std::to_string(v) +
                          " is not a handle id");
  }
  return Handle{static_cast<std::uint64_t>(v), kind};
}

std::size_t decode_size(real v, const char* what) {
  if (!(v >= 0) || v != std::floor(v)) {
    throw InvalidArgument(std::string(what) + ": " + std::to_string(v) +
                          " is not a valid count");
  }
  return static_cast<std::size_t>(v);
}

int decode_int(real v, const char* what) {
  if (v != std::floor(v)) {
    throw InvalidArgument(std::string(what) + ": " + std::to_string(v) +
                          " is not an integer");
  }
  return static_cast<int>(v);
}

void check_arity(int index, const char* name, std::span<const real> args,
                 std::size_t expected) {
  if (args.size() != expected) {
    throw InvalidArgument("dispatch: function " + std::to_string(index) + " (" + name +
                          ") expects " + std::to_string(expected) + " arguments, got " +
                          std::to_string(args.size()));
  }
}

}  // namespace

std::vector<real> Registry::dispatch(int function_index, std::span<const real> args) {
  switch (function_index) {
    case fn::kFill: {
      check_arity(function_index, "fill", args, 3);
      kernels::fill(*this, decode_handle(args[0], HandleKind::kBuffer, "fill dst"),
                    decode_size(args[1], "fill n"), args[2]);
      return {};
    }
    case fn::kCopy: {
      check_arity(function_index, "copy", args, 3);
      kernels::copy(*this, decode_handle(args[0], HandleKind::kBuffer, "copy src"),
                    decode_handle(args[1], HandleKind::kBuffer, "copy dst"),
                    decode_size(args[2], "copy n"));
      return {};
    }
    case fn::kScal: {
      check_arity(function_index, "scal", args, 3);
      kernels::scal(*this, decode_size(args[0], "scal n"), args[1],
                    decode_handle(args[2], HandleKind::kBuffer, "scal x"));
      return {};
    }
    case fn::kAxpy: {
      check_arity(function_index, "axpy", args, 4);
      kernels::axpy(*this, decode_size(args[0], "axpy n"), args[1],
                    decode_handle(args[2], HandleKind::kBuffer, "axpy x"),
                    decode_handle(args[3], HandleKind::kBuffer, "axpy y"));
      return {};
    }
    case fn::kDot: {
      check_arity(function_index, "dot", args, 3);
      return {kernels::dot(*this, decode_size(args[0], "dot n"),
                           decode_handle(args[1], HandleKind::kBuffer, "dot x"),
                           decode_handle(args[2], HandleKind::kBuffer, "dot y"))};
    }
    case fn::kGemm: {
      check_arity(function_index, "gemm", args, 10);
      kernels::gemm(*this, decode_int(args[0], "gemm trans_a") != 0,
                    decode_int(args[1], "gemm trans_b") != 0,
                    decode_int(args[2], "gemm m"), decode_int(args[3], "gemm n"),
                    decode_int(args[4], "gemm k"), args[5],
                    decode_handle(args[6], HandleKind::kBuffer, "gemm a"),
                    decode_handle(args[7], HandleKind::kBuffer, "gemm b"), args[8],
                    decode_handle(args[9], HandleKind::kBuffer, "gemm c"));
      return {};
    }
    case fn::kRngUniform: {
      check_arity(function_index, "rng_uniform", args, 5);
      kernels::rng_uniform(*this,
                           decode_handle(args[0], HandleKind::kSubsystem, "rng_uniform rng"),
                           decode_handle(args[1], HandleKind::kBuffer, "rng_uniform dst"),
                           decode_size(args[2], "rng_uniform n"), args[3], args[4]);
      return {};
    }
    default:
      throw UnknownFunction("dispatch: no function with index " +
                            std::to_string(function_index));
  }
}

}  // namespace polegrad
