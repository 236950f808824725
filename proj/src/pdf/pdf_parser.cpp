#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

#include "pdf/pdf_object.hpp"

namespace zoterag::pdf {

bool is_pdf_space(char c) {
  return c == ' ' || c == '\n' || c == '\r' || c == '\t' || c == '\f' ||
         c == '\0';
}

bool is_pdf_delim(char c) {
  return std::strchr("()<>[]{}/%", c) != nullptr && c != '\0';
}

const Object* Object::get(std::string_view key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return &v;
  }
  return nullptr;
}

bool Object::name_is(std::string_view key, std::string_view value) const {
  const Object* o = get(key);
  return o != nullptr && o->kind == Kind::kName && o->text == value;
}

bool Lexer::at_end() {
  skip_space();
  return pos_ >= data_.size();
}

void Lexer::skip_space() {
  while (pos_ < data_.size()) {
    const char c = data_[pos_];
    if (is_pdf_space(c)) {
      ++pos_;
    } else if (c == '%') {
      while (pos_ < data_.size() && data_[pos_] != '\n' && data_[pos_] != '\r') {
        ++pos_;
      }
    } else {
      break;
    }
  }
}

Object Lexer::parse_object() { return parse(true); }

Object Lexer::next_token() { return parse(false); }

Object Lexer::parse(bool fold_refs) {
  skip_space();
  if (pos_ >= data_.size()) throw std::runtime_error("unexpected end of data");
  const char c = data_[pos_];
  switch (c) {
    case '(':
      return parse_literal_string();
    case '/':
      return parse_name();
    case '[':
      ++pos_;
      return parse_array(fold_refs);
    case '<':
      if (pos_ + 1 < data_.size() && data_[pos_ + 1] == '<') {
        pos_ += 2;
        return parse_dict(fold_refs);
      }
      return parse_hex_string();
    case ']':
    case '>':
    case ')':
    case '{':
    case '}': {
      // Stray delimiter; surface as a keyword so callers can skip it.
      Object o;
      o.kind = Object::Kind::kKeyword;
      if (c == '>' && pos_ + 1 < data_.size() && data_[pos_ + 1] == '>') {
        o.text = ">>";
        pos_ += 2;
      } else {
        o.text = std::string(1, c);
        ++pos_;
      }
      return o;
    }
    default:
      break;
  }
  Object first = parse_number_or_keyword();
  if (!fold_refs || first.kind != Object::Kind::kNumber) return first;
  // Look ahead for "gen R".
  const std::size_t save = pos_;
  skip_space();
  if (pos_ < data_.size() && std::isdigit(static_cast<unsigned char>(data_[pos_]))) {
    Object second = parse_number_or_keyword();
    skip_space();
    if (second.kind == Object::Kind::kNumber && pos_ < data_.size() &&
        data_[pos_] == 'R' &&
        (pos_ + 1 >= data_.size() || is_pdf_space(data_[pos_ + 1]) ||
         is_pdf_delim(data_[pos_ + 1]))) {
      ++pos_;
      Object ref;
      ref.kind = Object::Kind::kRef;
      ref.ref = {static_cast<int>(first.number), static_cast<int>(second.number)};
      return ref;
    }
  }
  pos_ = save;
  return first;
}

Object Lexer::parse_literal_string() {
  ++pos_;  // (
  Object o;
  o.kind = Object::Kind::kString;
  int depth = 1;
  while (pos_ < data_.size()) {
    char c = data_[pos_++];
    if (c == '\\') {
      if (pos_ >= data_.size()) break;
      char e = data_[pos_++];
      switch (e) {
        case 'n': o.text.push_back('\n'); break;
        case 'r': o.text.push_back('\r'); break;
        case 't': o.text.push_back('\t'); break;
        case 'b': o.text.push_back('\b'); break;
        case 'f': o.text.push_back('\f'); break;
        case '\r':
          if (pos_ < data_.size() && data_[pos_] == '\n') ++pos_;
          break;
        case '\n':
          break;
        default:
          if (e >= '0' && e <= '7') {
            int value = e - '0';
            for (int i = 0; i < 2 && pos_ < data_.size() &&
                            data_[pos_] >= '0' && data_[pos_] <= '7';
                 ++i) {
              value = value * 8 + (data_[pos_++] - '0');
            }
            o.text.push_back(static_cast<char>(value & 0xFF));
          } else {
            o.text.push_back(e);
          }
      }
    } else if (c == '(') {
      ++depth;
      o.text.push_back(c);
    } else if (c == ')') {
      if (--depth == 0) return o;
      o.text.push_back(c);
    } else {
      o.text.push_back(c);
    }
  }
  throw std::runtime_error("unterminated string");
}

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

Object Lexer::parse_hex_string() {
  ++pos_;  // <
  Object o;
  o.kind = Object::Kind::kString;
  int high = -1;
  while (pos_ < data_.size()) {
    const char c = data_[pos_++];
    if (c == '>') {
      if (high >= 0) o.text.push_back(static_cast<char>(high << 4));
      return o;
    }
    const int v = hex_value(c);
    if (v < 0) continue;
    if (high < 0) {
      high = v;
    } else {
      o.text.push_back(static_cast<char>((high << 4) | v));
      high = -1;
    }
  }
  throw std::runtime_error("unterminated hex string");
}

Object Lexer::parse_name() {
  ++pos_;  // /
  Object o;
  o.kind = Object::Kind::kName;
  while (pos_ < data_.size() && !is_pdf_space(data_[pos_]) &&
         !is_pdf_delim(data_[pos_])) {
    const char c = data_[pos_++];
    if (c == '#' && pos_ + 1 < data_.size() && hex_value(data_[pos_]) >= 0 &&
        hex_value(data_[pos_ + 1]) >= 0) {
      o.text.push_back(static_cast<char>(hex_value(data_[pos_]) * 16 +
                                         hex_value(data_[pos_ + 1])));
      pos_ += 2;
    } else {
      o.text.push_back(c);
    }
  }
  return o;
}

Object Lexer::parse_number_or_keyword() {
  const std::size_t start = pos_;
  while (pos_ < data_.size() && !is_pdf_space(data_[pos_]) &&
         !is_pdf_delim(data_[pos_])) {
    ++pos_;
  }
  if (pos_ == start) {
    ++pos_;
    throw std::runtime_error("unexpected character");
  }
  const std::string token(data_.substr(start, pos_ - start));
  Object o;
  const char c = token[0];
  if (std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-' ||
      c == '.') {
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end != nullptr && *end == '\0') {
      o.kind = Object::Kind::kNumber;
      o.number = v;
      return o;
    }
  }
  if (token == "true" || token == "false") {
    o.kind = Object::Kind::kBool;
    o.boolean = token == "true";
  } else if (token == "null") {
    o.kind = Object::Kind::kNull;
  } else {
    o.kind = Object::Kind::kKeyword;
    o.text = token;
  }
  return o;
}

Object Lexer::parse_array(bool fold_refs) {
  Object o;
  o.kind = Object::Kind::kArray;
  while (true) {
    skip_space();
    if (pos_ >= data_.size()) throw std::runtime_error("unterminated array");
    if (data_[pos_] == ']') {
      ++pos_;
      return o;
    }
    o.items.push_back(parse(fold_refs));
  }
}

Object Lexer::parse_dict(bool fold_refs) {
  Object o;
  o.kind = Object::Kind::kDict;
  while (true) {
    skip_space();
    if (pos_ >= data_.size()) throw std::runtime_error("unterminated dict");
    if (data_[pos_] == '>' && pos_ + 1 < data_.size() && data_[pos_ + 1] == '>') {
      pos_ += 2;
      return o;
    }
    Object key = parse(fold_refs);
    if (key.kind != Object::Kind::kName) {
      // Malformed entry; skip the token.
      continue;
    }
    skip_space();
    if (pos_ < data_.size() && data_[pos_] == '>' && pos_ + 1 < data_.size() &&
        data_[pos_ + 1] == '>') {
      o.entries.emplace_back(key.text, Object{});
      continue;
    }
    o.entries.emplace_back(key.text, parse(fold_refs));
  }
}

// ---------------------------------------------------------------------------

Document::Document(std::string bytes) : bytes_(std::move(bytes)) {
  scan_objects();
  load_object_streams();
}

void Document::scan_objects() {
  const std::string_view data(bytes_);
  std::size_t pos = 0;
  while ((pos = data.find("obj", pos)) != std::string_view::npos) {
    const std::size_t keyword = pos;
    pos += 3;
    if (pos < data.size() && !is_pdf_space(data[pos]) && !is_pdf_delim(data[pos])) {
      continue;  // "objx", e.g. "endobj" is rejected below anyway
    }
    // Walk back over "num gen ".
    std::size_t p = keyword;
    auto skip_back_space = [&] {
      while (p > 0 && is_pdf_space(data[p - 1])) --p;
    };
    auto read_back_int = [&](long* out) {
      std::size_t end = p;
      while (p > 0 && std::isdigit(static_cast<unsigned char>(data[p - 1]))) --p;
      if (p == end || end - p > 10) return false;
      *out = std::strtol(std::string(data.substr(p, end - p)).c_str(), nullptr, 10);
      return true;
    };
    if (p == 0 || !is_pdf_space(data[p - 1])) continue;
    skip_back_space();
    long gen = 0;
    if (!read_back_int(&gen)) continue;
    if (p == 0 || !is_pdf_space(data[p - 1])) continue;
    skip_back_space();
    long num = 0;
    if (!read_back_int(&num)) continue;
    if (p > 0 && !is_pdf_space(data[p - 1]) && !is_pdf_delim(data[p - 1])) continue;
    // Later definitions (incremental updates) replace earlier ones.
    offsets_[static_cast<int>(num)] = keyword + 3;
  }
  encrypted_ = data.find("/Encrypt") != std::string_view::npos &&
               [&] {
                 // Only trailer-level /Encrypt counts; check trailers and
                 // xref stream dictionaries.
                 std::size_t t = 0;
                 while ((t = data.find("trailer", t)) != std::string_view::npos) {
                   const auto end = data.find(">>", t);
                   if (data.substr(t, end == std::string_view::npos
                                          ? std::string_view::npos
                                          : end - t)
                           .find("/Encrypt") != std::string_view::npos) {
                     return true;
                   }
                   t += 7;
                 }
                 return false;
               }();
}

std::shared_ptr<Object> Document::parse_at(std::size_t offset) const {
  Lexer lex(bytes_, offset);
  auto obj = std::make_shared<Object>(lex.parse_object());
  if (obj->kind != Object::Kind::kDict) return obj;
  lex.skip_space();
  const std::string_view data(bytes_);
  if (data.substr(lex.pos(), 6) != "stream") return obj;
  std::size_t start = lex.pos() + 6;
  if (start < data.size() && data[start] == '\r') ++start;
  if (start < data.size() && data[start] == '\n') ++start;

  std::size_t length = std::string_view::npos;
  if (const Object* len = obj->get("Length")) {
    const Object& resolved = resolve(*len);
    if (resolved.kind == Object::Kind::kNumber && resolved.number >= 0) {
      length = static_cast<std::size_t>(resolved.number);
    }
  }
  auto ends_ok = [&](std::size_t end) {
    if (end > data.size()) return false;
    std::size_t q = end;
    while (q < data.size() && is_pdf_space(data[q])) ++q;
    return data.substr(q, 9) == "endstream";
  };
  if (length == std::string_view::npos || !ends_ok(start + length)) {
    const auto found = data.find("endstream", start);
    std::size_t end = found == std::string_view::npos ? data.size() : found;
    if (end > start && data[end - 1] == '\n') --end;
    if (end > start && data[end - 1] == '\r') --end;
    length = end - start;
  }
  obj->kind = Object::Kind::kStream;
  obj->text.assign(data.substr(start, length));
  return obj;
}

const Object* Document::object(int num) const {
  if (auto it = cache_.find(num); it != cache_.end()) return it->second.get();
  if (auto it = offsets_.find(num); it != offsets_.end()) {
    // Guard against cycles through /Length while parsing.
    cache_[num] = std::make_shared<Object>();
    try {
      cache_[num] = parse_at(it->second);
    } catch (const std::exception&) {
      cache_[num] = std::make_shared<Object>();
    }
    return cache_[num].get();
  }
  if (auto it = packed_.find(num); it != packed_.end()) return it->second.get();
  return nullptr;
}

const Object& Document::resolve(const Object& o) const {
  static const Object kNull;
  const Object* cur = &o;
  for (int hops = 0; cur->kind == Object::Kind::kRef && hops < 32; ++hops) {
    const Object* next = object(cur->ref.num);
    if (next == nullptr) return kNull;
    cur = next;
  }
  return cur->kind == Object::Kind::kRef ? kNull : *cur;
}

void Document::load_object_streams() {
  std::vector<int> nums;
  nums.reserve(offsets_.size());
  for (const auto& [num, off] : offsets_) nums.push_back(num);
  for (int num : nums) {
    const Object* o = object(num);
    if (o == nullptr || o->kind != Object::Kind::kStream ||
        !o->name_is("Type", "ObjStm")) {
      continue;
    }
    try {
      const std::string data = decode_stream(*o, this);
      const Object* n = o->get("N");
      const Object* first = o->get("First");
      if (n == nullptr || first == nullptr) continue;
      const auto count = static_cast<std::size_t>(resolve(*n).number);
      const auto base = static_cast<std::size_t>(resolve(*first).number);
      Lexer header(data);
      std::vector<std::pair<int, std::size_t>> entries;
      for (std::size_t i = 0; i < count; ++i) {
        const Object objnum = header.next_token();
        const Object offset = header.next_token();
        entries.emplace_back(static_cast<int>(objnum.number),
                             static_cast<std::size_t>(offset.number));
      }
      for (const auto& [objnum, offset] : entries) {
        if (offsets_.count(objnum) != 0 || packed_.count(objnum) != 0) continue;
        Lexer body(data, base + offset);
        packed_[objnum] = std::make_shared<Object>(body.parse_object());
      }
    } catch (const std::exception&) {
      // A damaged object stream only loses the objects it holds.
    }
  }
}

void Document::collect_pages(const Object& node, std::vector<const Object*>& out,
                             int depth) const {
  if (depth > 64 || !node.is_dict_like()) return;
  const Object* kids = node.get("Kids");
  if (kids != nullptr) {
    const Object& arr = resolve(*kids);
    for (const auto& kid : arr.items) {
      collect_pages(resolve(kid), out, depth + 1);
    }
    return;
  }
  if (node.name_is("Type", "Page") || node.get("Contents") != nullptr) {
    out.push_back(&node);
  }
}

std::vector<const Object*> Document::pages() const {
  // Prefer the catalog's page tree; the last catalog wins for updated files.
  const Object* catalog = nullptr;
  int best = -1;
  std::vector<int> nums;
  for (const auto& [num, off] : offsets_) nums.push_back(num);
  for (const auto& [num, obj] : packed_) nums.push_back(num);
  std::sort(nums.begin(), nums.end());
  for (int num : nums) {
    const Object* o = object(num);
    if (o != nullptr && o->is_dict_like() && o->name_is("Type", "Catalog")) {
      const auto off = offsets_.count(num) ? static_cast<int>(offsets_.at(num)) : 0;
      if (off >= best) {
        best = off;
        catalog = o;
      }
    }
  }
  std::vector<const Object*> out;
  if (catalog != nullptr) {
    if (const Object* root = catalog->get("Pages")) {
      collect_pages(resolve(*root), out, 0);
    }
  }
  if (out.empty()) {
    for (int num : nums) {
      const Object* o = object(num);
      if (o != nullptr && o->is_dict_like() && o->name_is("Type", "Page")) {
        out.push_back(o);
      }
    }
  }
  return out;
}

}  // namespace zoterag::pdf
