#include "polegrad/prototxt.hpp"

#include <cctype>
#include <charconv>
#include <iostream>
#include <optional>

#include "polegrad/errors.hpp"

namespace polegrad::prototxt {

namespace {

struct Token {
  enum class Kind { kIdent, kNumber, kString, kLBrace, kRBrace, kColon, kEnd };

  Kind kind = Kind::kEnd;
  std::string text;
  int line = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    skip_space_and_comments();
    Token token;
    token.line = line_;
    if (pos_ >= text_.size()) {
      token.kind = Token::Kind::kEnd;
      return token;
    }
    const char c = text_[pos_];
    if (c == '{') {
      ++pos_;
      token.kind = Token::Kind::kLBrace;
      return token;
    }
    if (c == '}') {
      ++pos_;
      token.kind = Token::Kind::kRBrace;
      return token;
    }
    if (c == ':') {
      ++pos_;
      token.kind = Token::Kind::kColon;
      return token;
    }
    if (c == '"') {
      token.kind = Token::Kind::kString;
      token.text = read_string();
      return token;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      token.kind = Token::Kind::kIdent;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        token.text += text_[pos_++];
      }
      return token;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
      token.kind = Token::Kind::kNumber;
      while (pos_ < text_.size() && is_number_char(text_[pos_])) {
        token.text += text_[pos_++];
      }
      return token;
    }
    throw ParseError(line_, std::string("unexpected character '") + c + "'");
  }

 private:
  static bool is_number_char(char c) {
    return std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' ||
           c == '.' || c == 'e' || c == 'E' || c == 'x' ||
           (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
  }

  void skip_space_and_comments() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '\n') {
        ++line_;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string read_string() {
    const int open_line = line_;
    ++pos_;  // opening quote
    std::string out;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '"') {
        ++pos_;
        return out;
      }
      if (c == '\n') {
        throw ParseError(open_line, "unterminated string");
      }
      if (c == '\\') {
        ++pos_;
        if (pos_ >= text_.size()) break;
        switch (text_[pos_]) {
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          default:
            throw ParseError(line_, std::string("unsupported escape '\\") +
                                        text_[pos_] + "'");
        }
        ++pos_;
      } else {
        out += c;
        ++pos_;
      }
    }
    throw ParseError(open_line, "unterminated string");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lexer_(text) { advance(); }

  std::vector<ProtoNode> parse_document() {
    std::vector<ProtoNode> nodes;
    while (current_.kind != Token::Kind::kEnd) {
      if (current_.kind == Token::Kind::kRBrace) {
        throw ParseError(current_.line, "unexpected '}'");
      }
      nodes.push_back(parse_field());
    }
    return nodes;
  }

 private:
  void advance() { current_ = lexer_.next(); }

  ProtoNode parse_field() {
    if (current_.kind != Token::Kind::kIdent) {
      throw ParseError(current_.line, "expected a field name");
    }
    ProtoNode node;
    node.key = current_.text;
    node.line = current_.line;
    advance();

    bool saw_colon = false;
    if (current_.kind == Token::Kind::kColon) {
      saw_colon = true;
      advance();
    }

    if (current_.kind == Token::Kind::kLBrace) {
      const int open_line = node.line;
      node.kind = ProtoNode::Kind::kBlock;
      advance();
      while (current_.kind != Token::Kind::kRBrace) {
        if (current_.kind == Token::Kind::kEnd) {
          throw ParseError(open_line, "unbalanced '{': block '" + node.key +
                                          "' is never closed");
        }
        node.children.push_back(parse_field());
      }
      advance();
      return node;
    }

    if (!saw_colon) {
      throw ParseError(current_.line, "expected ':' or '{' after '" + node.key + "'");
    }
    switch (current_.kind) {
      case Token::Kind::kString:
        node.kind = ProtoNode::Kind::kString;
        break;
      case Token::Kind::kNumber:
        node.kind = ProtoNode::Kind::kNumber;
        break;
      case Token::Kind::kIdent:
        node.kind = ProtoNode::Kind::kIdentifier;
        break;
      default:
        throw ParseError(current_.line, "expected a value for '" + node.key + "'");
    }
    node.value = current_.text;
    advance();
    return node;
  }

  Lexer lexer_;
  Token current_;
};

// --------------------------------------------------------------------------
// Node tree -> NetDef

class Warnings {
 public:
  explicit Warnings(std::vector<std::string>* sink) : sink_(sink) {}

  void duplicate_key(const ProtoNode& node, const std::string& scope) {
    std::string message = "line " + std::to_string(node.line) + ": duplicate '" +
                          node.key + "' in " + scope + ", last value wins";
    if (sink_ != nullptr) {
      sink_->push_back(std::move(message));
    } else {
      std::cerr << "warning: " << message << "\n";
    }
  }

 private:
  std::vector<std::string>* sink_;
};

std::string scalar_text(const ProtoNode& node) {
  if (node.kind == ProtoNode::Kind::kBlock) {
    throw ParseError(node.line, "'" + node.key + "' must be a scalar value");
  }
  return node.value;
}

int scalar_int(const ProtoNode& node) {
  if (node.kind != ProtoNode::Kind::kNumber) {
    throw ParseError(node.line, "'" + node.key + "' must be an integer");
  }
  int value = 0;
  const char* begin = node.value.data();
  const char* end = begin + node.value.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(node.line, "'" + node.key + "' must be an integer, got '" +
                                    node.value + "'");
  }
  return value;
}

InnerProductParam convert_inner_product(const ProtoNode& block, Warnings& warnings) {
  InnerProductParam param;
  bool seen = false;
  for (const ProtoNode& child : block.children) {
    if (child.key == "num_output" && child.kind != ProtoNode::Kind::kBlock) {
      if (seen) warnings.duplicate_key(child, "inner_product_param");
      param.num_output = scalar_int(child);
      seen = true;
    } else {
      param.extras.push_back(child);
    }
  }
  if (!seen) {
    throw ParseError(block.line, "inner_product_param requires num_output");
  }
  return param;
}

MemoryDataParam convert_memory_data(const ProtoNode& block, Warnings& warnings) {
  MemoryDataParam param;
  bool seen[4] = {false, false, false, false};
  for (const ProtoNode& child : block.children) {
    int* field = nullptr;
    int index = -1;
    if (child.kind != ProtoNode::Kind::kBlock) {
      if (child.key == "batch_size") {
        field = &param.batch_size;
        index = 0;
      } else if (child.key == "channels") {
        field = &param.channels;
        index = 1;
      } else if (child.key == "height") {
        field = &param.height;
        index = 2;
      } else if (child.key == "width") {
        field = &param.width;
        index = 3;
      }
    }
    if (field == nullptr) {
      param.extras.push_back(child);
      continue;
    }
    if (seen[index]) warnings.duplicate_key(child, "memory_data_param");
    *field = scalar_int(child);
    seen[index] = true;
  }
  for (bool s : seen) {
    if (!s) {
      throw ParseError(block.line,
                       "memory_data_param requires batch_size, channels, height, width");
    }
  }
  return param;
}

LayerSpec convert_layer(const ProtoNode& block, Warnings& warnings) {
  LayerSpec spec;
  bool seen_name = false;
  bool seen_type = false;
  const ProtoNode* type_node = nullptr;
  for (const ProtoNode& child : block.children) {
    if (child.kind != ProtoNode::Kind::kBlock) {
      if (child.key == "name") {
        if (seen_name) warnings.duplicate_key(child, "layer");
        spec.name = scalar_text(child);
        seen_name = true;
        continue;
      }
      if (child.key == "type") {
        if (seen_type) warnings.duplicate_key(child, "layer");
        type_node = &child;
        seen_type = true;
        continue;
      }
      if (child.key == "bottom") {
        spec.bottoms.push_back(scalar_text(child));
        continue;
      }
      if (child.key == "top") {
        spec.tops.push_back(scalar_text(child));
        continue;
      }
    } else {
      if (child.key == "inner_product_param") {
        if (spec.inner_product) warnings.duplicate_key(child, "layer");
        spec.inner_product = convert_inner_product(child, warnings);
        continue;
      }
      if (child.key == "memory_data_param") {
        if (spec.memory_data) warnings.duplicate_key(child, "layer");
        spec.memory_data = convert_memory_data(child, warnings);
        continue;
      }
    }
    spec.extras.push_back(child);
  }
  if (type_node == nullptr) {
    throw ParseError(block.line, "layer '" + spec.name + "' has no type");
  }
  const std::string type_name = scalar_text(*type_node);
  const auto type = layer_type_from_string(type_name);
  if (!type) {
    throw ParseError(type_node->line,
                     "unknown layer type \"" + type_name + "\" in layer '" + spec.name +
                         "'");
  }
  spec.type = *type;
  return spec;
}

}  // namespace

NetDef parse(std::string_view text, std::vector<std::string>* warning_sink) {
  Parser parser(text);
  const std::vector<ProtoNode> nodes = parser.parse_document();

  Warnings warnings(warning_sink);
  NetDef def;
  for (const ProtoNode& node : nodes) {
    if (node.key == "name" && node.kind != ProtoNode::Kind::kBlock) {
      if (def.name) warnings.duplicate_key(node, "net");
      def.name = scalar_text(node);
      continue;
    }
    if (node.key == "layer") {
      if (node.kind != ProtoNode::Kind::kBlock) {
        throw ParseError(node.line, "'layer' must be a block");
      }
      def.layers.push_back(convert_layer(node, warnings));
      continue;
    }
    def.extras.push_back(node);
  }
  return def;
}

// --------------------------------------------------------------------------
// Printing

namespace {

std::string escape(const std::string& raw) {
  std::string out;
  out.reserve(raw.size() + 2);
  for (char c : raw) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

void print_indent(std::string& out, int depth) {
  for (int i = 0; i < depth; ++i) out += "  ";
}

void print_node(std::string& out, const ProtoNode& node, int depth) {
  print_indent(out, depth);
  if (node.kind == ProtoNode::Kind::kBlock) {
    out += node.key + " {\n";
    for (const ProtoNode& child : node.children) {
      print_node(out, child, depth + 1);
    }
    print_indent(out, depth);
    out += "}\n";
    return;
  }
  out += node.key + ": ";
  if (node.kind == ProtoNode::Kind::kString) {
    out += "\"" + escape(node.value) + "\"";
  } else {
    out += node.value;
  }
  out += "\n";
}

void print_scalar_string(std::string& out, int depth, const std::string& key,
                         const std::string& value) {
  print_indent(out, depth);
  out += key + ": \"" + escape(value) + "\"\n";
}

void print_scalar_int(std::string& out, int depth, const std::string& key, int value) {
  print_indent(out, depth);
  out += key + ": " + std::to_string(value) + "\n";
}

void print_layer(std::string& out, const LayerSpec& layer) {
  out += "layer {\n";
  print_scalar_string(out, 1, "name", layer.name);
  print_scalar_string(out, 1, "type", std::string(to_string(layer.type)));
  for (const std::string& bottom : layer.bottoms) {
    print_scalar_string(out, 1, "bottom", bottom);
  }
  for (const std::string& top : layer.tops) {
    print_scalar_string(out, 1, "top", top);
  }
  for (const ProtoNode& extra : layer.extras) {
    print_node(out, extra, 1);
  }
  if (layer.inner_product) {
    print_indent(out, 1);
    out += "inner_product_param {\n";
    print_scalar_int(out, 2, "num_output", layer.inner_product->num_output);
    for (const ProtoNode& extra : layer.inner_product->extras) {
      print_node(out, extra, 2);
    }
    print_indent(out, 1);
    out += "}\n";
  }
  if (layer.memory_data) {
    print_indent(out, 1);
    out += "memory_data_param {\n";
    print_scalar_int(out, 2, "batch_size", layer.memory_data->batch_size);
    print_scalar_int(out, 2, "channels", layer.memory_data->channels);
    print_scalar_int(out, 2, "height", layer.memory_data->height);
    print_scalar_int(out, 2, "width", layer.memory_data->width);
    for (const ProtoNode& extra : layer.memory_data->extras) {
      print_node(out, extra, 2);
    }
    print_indent(out, 1);
    out += "}\n";
  }
  out += "}\n";
}

}  // namespace

std::string print(const NetDef& def) {
  std::string out;
  if (def.name) {
    out += "name: \"" + escape(*def.name) + "\"\n";
  }
  for (const ProtoNode& extra : def.extras) {
    print_node(out, extra, 0);
  }
  for (const LayerSpec& layer : def.layers) {
    print_layer(out, layer);
  }
  return out;
}

}  // namespace polegrad::prototxt
