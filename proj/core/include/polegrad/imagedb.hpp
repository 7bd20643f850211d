#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "polegrad/backend.hpp"
#include "polegrad/types.hpp"

namespace polegrad::imagedb {

struct Entry {
  std::int64_t id = 0;
  int label = 0;
  real boost = real(1);
  std::array<int, 3> dims{0, 0, 0};  // C, H, W
  std::vector<real> tensor;
};

enum class SampleMethod { kUniform, kLabelBalanced };

// In-memory dataset grouped by label. Sampling is uniform or
// label-balanced (pick a label uniformly, then an entry within it); with
// use_boost, an entry's weight within its pool is proportional to its boost.
class Dataset {
 public:
  void add(Entry entry);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  const Entry& entry(std::int64_t id) const;
  const std::map<int, std::vector<std::int64_t>>& groups() const { return groups_; }

  // boost must be >= 1; unknown id throws NotFound.
  void set_boost(std::int64_t id, real boost);

  const Entry& sample(SampleMethod method, bool use_boost, Rng& rng) const;

 private:
  Entry& entry_mut(std::int64_t id);

  std::map<std::int64_t, Entry> entries_;
  std::map<int, std::vector<std::int64_t>> groups_;
};

// Index file: one `id,label,boost,relative_path` line per entry, `#` comment
// and blank lines skipped. Each referenced tensor file holds three
// little-endian u32 dims (C, H, W) followed by C*H*W little-endian f32
// values. Problems throw LoadError with the index line number.
Dataset load(const std::filesystem::path& index_path);

}  // namespace polegrad::imagedb
