#pragma once

#include <string>
#include <vector>

namespace polegrad {

// One field of a protobuf-text document: either a scalar (`key: value`) or a
// nested block (`key { ... }`). Children keep source order. Scalar values
// keep their raw token text (strings are stored unescaped), so unrecognized
// fields survive a parse/print round trip byte-for-byte.
struct ProtoNode {
  enum class Kind { kString, kNumber, kIdentifier, kBlock };

  std::string key;
  Kind kind = Kind::kIdentifier;
  std::string value;                 // scalar kinds only
  std::vector<ProtoNode> children;   // kBlock only
  int line = 0;                      // 1-based source line, 0 if synthesized

  // Structural equality; source line is bookkeeping, not structure.
  bool operator==(const ProtoNode& other) const {
    return key == other.key && kind == other.kind && value == other.value &&
           children == other.children;
  }
};

}  // namespace polegrad
