#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace zoterag::pdf {

struct ObjRef {
  int num = 0;
  int gen = 0;
};

// One PDF object. Dictionaries keep insertion order; lookups are linear,
// which is fine for the small dictionaries PDFs contain.
struct Object {
  enum class Kind { kNull, kBool, kNumber, kName, kString, kArray, kDict,
                    kRef, kStream, kKeyword };

  Kind kind = Kind::kNull;
  bool boolean = false;
  double number = 0.0;
  std::string text;  // name, string bytes, keyword, or stream raw data
  std::vector<Object> items;  // array elements
  std::vector<std::pair<std::string, Object>> entries;  // dict / stream dict
  ObjRef ref;

  bool is(Kind k) const { return kind == k; }
  bool is_dict_like() const { return kind == Kind::kDict || kind == Kind::kStream; }
  const Object* get(std::string_view key) const;
  bool name_is(std::string_view key, std::string_view value) const;

  static Object make_number(double v) {
    Object o;
    o.kind = Kind::kNumber;
    o.number = v;
    return o;
  }
};

// Tokenizer and object parser over raw PDF bytes.
class Lexer {
 public:
  explicit Lexer(std::string_view data, std::size_t pos = 0)
      : data_(data), pos_(pos) {}

  std::size_t pos() const { return pos_; }
  void seek(std::size_t pos) { pos_ = pos; }
  bool at_end();

  void skip_space();
  // Parses one object; "R" references are folded when two integers precede
  // it. Bare keywords come back as kKeyword. Throws std::runtime_error.
  Object parse_object();
  // Reads a keyword-or-object token without reference folding; used for
  // content streams.
  Object next_token();

  std::string_view data() const { return data_; }

 private:
  Object parse_literal_string();
  Object parse_hex_string();
  Object parse_name();
  Object parse_number_or_keyword();
  Object parse_array(bool fold_refs);
  Object parse_dict(bool fold_refs);
  Object parse(bool fold_refs);

  std::string_view data_;
  std::size_t pos_;
};

bool is_pdf_space(char c);
bool is_pdf_delim(char c);

// Decodes a stream's data through its /Filter chain. Image filters
// (DCTDecode etc.) are not supported and throw std::runtime_error.
std::string decode_stream(const Object& stream,
                          const class Document* doc = nullptr);

std::string flate_decode(std::string_view in);
std::string ascii85_decode(std::string_view in);
std::string ascii_hex_decode(std::string_view in);
std::string lzw_decode(std::string_view in, bool early_change = true);
std::string run_length_decode(std::string_view in);

// Random-access view of the objects in a file, located by scanning for
// "N G obj" headers (which also tolerates damaged cross-reference tables)
// and by unpacking object streams.
class Document {
 public:
  explicit Document(std::string bytes);

  // Returns nullptr when the object does not exist.
  const Object* object(int num) const;
  const Object& resolve(const Object& o) const;

  std::vector<const Object*> pages() const;
  bool encrypted() const { return encrypted_; }

 private:
  void scan_objects();
  void load_object_streams();
  std::shared_ptr<Object> parse_at(std::size_t offset) const;
  void collect_pages(const Object& node, std::vector<const Object*>& out,
                     int depth) const;

  std::string bytes_;
  std::unordered_map<int, std::size_t> offsets_;  // object -> file offset
  mutable std::unordered_map<int, std::shared_ptr<Object>> cache_;
  std::unordered_map<int, std::shared_ptr<Object>> packed_;
  bool encrypted_ = false;

  friend std::string decode_stream(const Object&, const Document*);
};

}  // namespace zoterag::pdf
