#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "polegrad/net.hpp"
#include "polegrad/proto_node.hpp"

namespace polegrad::prototxt {

// Parses protobuf text format into a NetDef. Recognized fields: top-level
// `name` and `layer` blocks; within a layer: name, type, repeated
// bottom/top, inner_product_param.num_output, and memory_data_param's
// batch_size/channels/height/width. Anything else is preserved verbatim as
// opaque nodes and ignored semantically. `#` comments are dropped. A
// duplicated recognized scalar key keeps the last value and appends a note
// to `warnings` (stderr when warnings is null). Errors throw ParseError with
// a 1-based line number.
NetDef parse(std::string_view text, std::vector<std::string>* warnings = nullptr);

// Canonical form: two-space indent, one field per line, double-quoted
// strings. print(parse(print(parse(text)))) == print(parse(text)) for any
// parsable text, and reparsing printed output reproduces the same NetDef.
std::string print(const NetDef& def);

}  // namespace polegrad::prototxt
