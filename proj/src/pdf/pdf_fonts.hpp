#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "pdf/pdf_object.hpp"

namespace zoterag::pdf {

// Maps glyph names ("a", "quoteright", "uni2019", ...) to Unicode; 0 when
// the name is unknown.
char32_t glyph_to_unicode(std::string_view name);

struct ToUnicodeMap {
  std::vector<std::size_t> code_lengths;  // ascending distinct byte lengths
  std::map<std::uint32_t, std::string> mapping;  // code -> UTF-8

  static ToUnicodeMap parse(std::string_view cmap);
  bool empty() const { return mapping.empty(); }
};

// Decodes shown strings of one font to UTF-8 and reports glyph advances.
class FontDecoder {
 public:
  FontDecoder() = default;
  FontDecoder(const Object& font, const Document& doc);

  struct Glyph {
    std::string text;   // UTF-8, may be empty for unmapped codes
    double width = 0;   // in text space units per 1 unit of font size
    bool is_space = false;
  };

  std::vector<Glyph> decode(std::string_view bytes) const;

 private:
  double width_of(std::uint32_t code) const;

  bool composite_ = false;
  ToUnicodeMap to_unicode_;
  std::array<char32_t, 256> simple_{};
  int first_char_ = 0;
  std::vector<double> widths_;
  std::map<std::uint32_t, double> cid_widths_;
  double default_width_ = 0.5;
};

}  // namespace zoterag::pdf
