#pragma once

#include <cstdint>
#include <mutex>
#include <random>
#include <span>
#include <unordered_map>
#include <variant>
#include <vector>

#include "polegrad/types.hpp"

namespace polegrad {

enum class HandleKind { kBuffer, kSubsystem };

// Opaque reference into a Registry. Ids start at 1 and strictly increase for
// the registry's lifetime; 0 is the null handle and never refers to a slot.
struct Handle {
  std::uint64_t id = 0;
  HandleKind kind = HandleKind::kBuffer;

  explicit operator bool() const { return id != 0; }
  bool operator==(const Handle&) const = default;
};

// Deterministic uniform source. mt19937_64 is fully specified by the
// standard, and the [0,1) mapping below uses the top 53 bits directly, so
// sequences are bit-identical across platforms and standard libraries
// (std::uniform_real_distribution is not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

 private:
  std::mt19937_64 engine_;
};

// Stable function indices for dispatch(). Argument layout per function, with
// buffer/rng arguments passed as handle ids:
//
//   idx  name         arguments                                      returns
//   1    fill         dst, n, value                                  -
//   2    copy         src, dst, n                                    -
//   3    scal         n, alpha, x                                    -
//   4    axpy         n, alpha, x, y                                 -
//   5    dot          n, x, y                                        result
//   6    gemm         trans_a, trans_b, m, n, k, alpha, a, b,        -
//                     beta, c
//   7    rng_uniform  rng, dst, n, lo, hi                            -
//
// Indices are frozen; new kernels may only append.
namespace fn {
inline constexpr int kFill = 1;
inline constexpr int kCopy = 2;
inline constexpr int kScal = 3;
inline constexpr int kAxpy = 4;
inline constexpr int kDot = 5;
inline constexpr int kGemm = 6;
inline constexpr int kRngUniform = 7;
}  // namespace fn

// Owns every buffer and subsystem slot behind integer handles. Allocation
// and release are serialized internally; reads/writes of buffer contents are
// the caller's problem to order.
class Registry {
 public:
  Registry() = default;
  Registry(const Registry&) = delete;
  Registry& operator=(const Registry&) = delete;

  // Zero-initialized buffer of `length` elements; length must be > 0.
  Handle alloc_buffer(std::size_t length);
  void free_buffer(Handle h);

  std::size_t buffer_length(Handle h) const;

  // Copies values into the buffer starting at element 0.
  void write(Handle h, std::span<const real> values);
  std::vector<real> read(Handle h) const;

  // In-process view of the buffer contents. Stays valid until the handle is
  // freed.
  std::span<real> buffer(Handle h);
  std::span<const real> buffer(Handle h) const;

  Handle create_rng(std::uint64_t seed);
  Rng& rng(Handle h);
  void free_subsystem(Handle h);

  // Number of currently allocated slots of any kind.
  std::size_t live_slots() const;

  // Calls the kernel with the given function index. Unknown index throws
  // UnknownFunction; wrong argument count throws InvalidArgument. Buffer
  // state afterwards is bit-identical to calling the kernel directly.
  std::vector<real> dispatch(int function_index, std::span<const real> args);

 private:
  using Slot = std::variant<std::vector<real>, Rng>;

  std::vector<real>& buffer_slot(std::uint64_t id, HandleKind kind);
  const std::vector<real>& buffer_slot(std::uint64_t id, HandleKind kind) const;

  mutable std::mutex mutex_;
  std::unordered_map<std::uint64_t, Slot> slots_;
  std::uint64_t next_id_ = 1;
};

namespace kernels {

// dst[0..n) = value
void fill(Registry& reg, Handle dst, std::size_t n, real value);

// dst[0..n) = src[0..n)
void copy(Registry& reg, Handle src, Handle dst, std::size_t n);

// x[0..n) *= alpha
void scal(Registry& reg, std::size_t n, real alpha, Handle x);

// y[0..n) += alpha * x[0..n)
void axpy(Registry& reg, std::size_t n, real alpha, Handle x, Handle y);

real dot(Registry& reg, std::size_t n, Handle x, Handle y);

// C = alpha * op(A) * op(B) + beta * C with row-major storage, op(A) m-by-k,
// op(B) k-by-n. trans_a/trans_b select the transposed reading of the stored
// matrix. beta == 0 overwrites C without reading it.
void gemm(Registry& reg, bool trans_a, bool trans_b, int m, int n, int k,
          real alpha, Handle a, Handle b, real beta, Handle c);

// dst[0..n) = uniform draws from [lo, hi) using the rng subsystem.
void rng_uniform(Registry& reg, Handle rng, Handle dst, std::size_t n, real lo,
                 real hi);

}  // namespace kernels

}  // namespace polegrad
