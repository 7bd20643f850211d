#include "polegrad/imagedb.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <string>

#include "polegrad/errors.hpp"

namespace polegrad::imagedb {

void Dataset::add(Entry entry) {
  if (entries_.contains(entry.id)) {
    throw InvalidArgument("dataset: duplicate entry id " + std::to_string(entry.id));
  }
  if (!(entry.boost >= real(1))) {
    throw InvalidArgument("dataset: boost must be >= 1, got entry id " +
                          std::to_string(entry.id));
  }
  groups_[entry.label].push_back(entry.id);
  entries_.emplace(entry.id, std::move(entry));
}

const Entry& Dataset::entry(std::int64_t id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) {
    throw NotFound("dataset: no entry with id " + std::to_string(id));
  }
  return it->second;
}

Entry& Dataset::entry_mut(std::int64_t id) {
  auto it = entries_.find(id);
  if (it == entries_.end()) {
    throw NotFound("dataset: no entry with id " + std::to_string(id));
  }
  return it->second;
}

void Dataset::set_boost(std::int64_t id, real boost) {
  if (!(boost >= real(1))) {
    throw InvalidArgument("dataset: boost must be >= 1, got " + std::to_string(boost));
  }
  entry_mut(id).boost = boost;
}

namespace {

// Weighted pick over ids: weight 1 each, or the entry's boost.
std::int64_t pick(const std::map<std::int64_t, Entry>& entries,
                  const std::vector<std::int64_t>& ids, bool use_boost, Rng& rng) {
  if (!use_boost) {
    const auto index = static_cast<std::size_t>(rng.uniform01() * ids.size());
    return ids[std::min(index, ids.size() - 1)];
  }
  real total = 0;
  for (std::int64_t id : ids) total += entries.at(id).boost;
  const real target = static_cast<real>(rng.uniform01()) * total;
  real cumulative = 0;
  for (std::int64_t id : ids) {
    cumulative += entries.at(id).boost;
    if (target < cumulative) return id;
  }
  return ids.back();
}

}  // namespace

const Entry& Dataset::sample(SampleMethod method, bool use_boost, Rng& rng) const {
  if (entries_.empty()) {
    throw InvalidState("dataset: cannot sample from an empty dataset");
  }
  if (method == SampleMethod::kUniform) {
    std::vector<std::int64_t> ids;
    ids.reserve(entries_.size());
    for (const auto& [id, entry] : entries_) ids.push_back(id);
    return entries_.at(pick(entries_, ids, use_boost, rng));
  }
  const auto group_index = static_cast<std::size_t>(rng.uniform01() * groups_.size());
  auto it = groups_.begin();
  std::advance(it, std::min(group_index, groups_.size() - 1));
  return entries_.at(pick(entries_, it->second, use_boost, rng));
}

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InvalidState("cannot open " + path.string());
  }
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

std::uint32_t read_u32(const std::vector<std::uint8_t>& bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(bytes[offset + i]) << (8 * i);
  }
  return v;
}

std::vector<real> load_tensor(const std::filesystem::path& path, std::array<int, 3>& dims) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  if (bytes.size() < 12) {
    throw InvalidState("tensor file " + path.string() + " is truncated");
  }
  std::size_t count = 1;
  for (int i = 0; i < 3; ++i) {
    const std::uint32_t dim = read_u32(bytes, static_cast<std::size_t>(i) * 4);
    if (dim == 0) {
      throw InvalidState("tensor file " + path.string() + " has a zero dimension");
    }
    dims[i] = static_cast<int>(dim);
    count *= dim;
  }
  if (bytes.size() != 12 + count * 4) {
    throw InvalidState("tensor file " + path.string() + " holds " +
                       std::to_string((bytes.size() - 12) / 4) + " values, header says " +
                       std::to_string(count));
  }
  std::vector<real> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t bits = read_u32(bytes, 12 + i * 4);
    values[i] = static_cast<real>(std::bit_cast<float>(bits));
  }
  return values;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(field);
  return fields;
}

std::string trim(const std::string& s) {
  std::size_t begin = s.find_first_not_of(" \t\r");
  std::size_t end = s.find_last_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  return s.substr(begin, end - begin + 1);
}

template <typename T>
T parse_number(const std::string& text, int line, const char* what) {
  T value{};
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw LoadError(line, std::string(what) + ": cannot parse '" + text + "'");
  }
  return value;
}

}  // namespace

Dataset load(const std::filesystem::path& index_path) {
  std::ifstream in(index_path);
  if (!in) {
    throw LoadError(0, "cannot open index " + index_path.string());
  }
  const std::filesystem::path base = index_path.parent_path();

  Dataset dataset;
  std::string raw_line;
  int line_number = 0;
  while (std::getline(in, raw_line)) {
    ++line_number;
    const std::string line = trim(raw_line);
    if (line.empty() || line[0] == '#') continue;

    const std::vector<std::string> fields = split_csv(line);
    if (fields.size() != 4) {
      throw LoadError(line_number, "expected id,label,boost,relative_path, got " +
                                       std::to_string(fields.size()) + " field(s)");
    }
    Entry entry;
    entry.id = parse_number<std::int64_t>(trim(fields[0]), line_number, "id");
    entry.label = parse_number<int>(trim(fields[1]), line_number, "label");
    entry.boost =
        static_cast<real>(parse_number<double>(trim(fields[2]), line_number, "boost"));
    if (!(entry.boost >= real(1))) {
      throw LoadError(line_number, "boost must be >= 1");
    }
    const std::string rel = trim(fields[3]);
    if (rel.empty()) {
      throw LoadError(line_number, "empty tensor path");
    }
    try {
      entry.tensor = load_tensor(base / rel, entry.dims);
    } catch (const InvalidState& e) {
      throw LoadError(line_number, e.what());
    }
    try {
      dataset.add(std::move(entry));
    } catch (const InvalidArgument& e) {
      throw LoadError(line_number, e.what());
    }
  }
  return dataset;
}

}  // namespace polegrad::imagedb
