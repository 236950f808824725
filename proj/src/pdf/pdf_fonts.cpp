#include "pdf/pdf_fonts.hpp"

#include <algorithm>
#include <cstdlib>
#include <unordered_map>

#include "zoterag/text_util.hpp"

namespace zoterag::pdf {

namespace {

// Latin-1 supplement glyph names for 0xA0..0xFF (empty where unnamed).
constexpr std::array<std::string_view, 96> kLatin1Names = {
    "nbspace", "exclamdown", "cent", "sterling", "currency", "yen",
    "brokenbar", "section", "dieresis", "copyright", "ordfeminine",
    "guillemotleft", "logicalnot", "sfthyphen", "registered", "macron",
    "degree", "plusminus", "twosuperior", "threesuperior", "acute", "mu",
    "paragraph", "periodcentered", "cedilla", "onesuperior", "ordmasculine",
    "guillemotright", "onequarter", "onehalf", "threequarters",
    "questiondown", "Agrave", "Aacute", "Acircumflex", "Atilde", "Adieresis",
    "Aring", "AE", "Ccedilla", "Egrave", "Eacute", "Ecircumflex", "Edieresis",
    "Igrave", "Iacute", "Icircumflex", "Idieresis", "Eth", "Ntilde", "Ograve",
    "Oacute", "Ocircumflex", "Otilde", "Odieresis", "multiply", "Oslash",
    "Ugrave", "Uacute", "Ucircumflex", "Udieresis", "Yacute", "Thorn",
    "germandbls", "agrave", "aacute", "acircumflex", "atilde", "adieresis",
    "aring", "ae", "ccedilla", "egrave", "eacute", "ecircumflex", "edieresis",
    "igrave", "iacute", "icircumflex", "idieresis", "eth", "ntilde", "ograve",
    "oacute", "ocircumflex", "otilde", "odieresis", "divide", "oslash",
    "ugrave", "uacute", "ucircumflex", "udieresis", "yacute", "thorn",
    "ydieresis"};

// ASCII glyph names for 0x20..0x7E.
constexpr std::array<std::string_view, 95> kAsciiNames = {
    "space", "exclam", "quotedbl", "numbersign", "dollar", "percent",
    "ampersand", "quotesingle", "parenleft", "parenright", "asterisk", "plus",
    "comma", "hyphen", "period", "slash", "zero", "one", "two", "three",
    "four", "five", "six", "seven", "eight", "nine", "colon", "semicolon",
    "less", "equal", "greater", "question", "at", "A", "B", "C", "D", "E",
    "F", "G", "H", "I", "J", "K", "L", "M", "N", "O", "P", "Q", "R", "S",
    "T", "U", "V", "W", "X", "Y", "Z", "bracketleft", "backslash",
    "bracketright", "asciicircum", "underscore", "grave", "a", "b", "c", "d",
    "e", "f", "g", "h", "i", "j", "k", "l", "m", "n", "o", "p", "q", "r",
    "s", "t", "u", "v", "w", "x", "y", "z", "braceleft", "bar", "braceright",
    "asciitilde"};

const std::unordered_map<std::string_view, char32_t>& glyph_table() {
  static const auto table = [] {
    std::unordered_map<std::string_view, char32_t> t;
    for (std::size_t i = 0; i < kAsciiNames.size(); ++i) {
      t.emplace(kAsciiNames[i], static_cast<char32_t>(0x20 + i));
    }
    for (std::size_t i = 0; i < kLatin1Names.size(); ++i) {
      t.emplace(kLatin1Names[i], static_cast<char32_t>(0xA0 + i));
    }
    const std::pair<std::string_view, char32_t> extra[] = {
        {"quoteleft", 0x2018}, {"quoteright", 0x2019},
        {"quotedblleft", 0x201C}, {"quotedblright", 0x201D},
        {"quotesinglbase", 0x201A}, {"quotedblbase", 0x201E},
        {"endash", 0x2013}, {"emdash", 0x2014}, {"bullet", 0x2022},
        {"ellipsis", 0x2026}, {"dagger", 0x2020}, {"daggerdbl", 0x2021},
        {"perthousand", 0x2030}, {"guilsinglleft", 0x2039},
        {"guilsinglright", 0x203A}, {"trademark", 0x2122}, {"Euro", 0x20AC},
        {"minus", 0x2212}, {"fi", 0xFB01}, {"fl", 0xFB02}, {"ff", 0xFB00},
        {"ffi", 0xFB03}, {"ffl", 0xFB04}, {"florin", 0x0192},
        {"circumflex", 0x02C6}, {"tilde", 0x02DC}, {"Scaron", 0x0160},
        {"scaron", 0x0161}, {"Zcaron", 0x017D}, {"zcaron", 0x017E},
        {"OE", 0x0152}, {"oe", 0x0153}, {"Ydieresis", 0x0178},
        {"dotlessi", 0x0131}, {"Lslash", 0x0141}, {"lslash", 0x0142},
        {"fraction", 0x2044}, {"alpha", 0x03B1}, {"beta", 0x03B2},
        {"gamma", 0x03B3}, {"delta", 0x03B4}, {"mu1", 0x00B5},
        {"hyphenminus", 0x2D}, {"space1", 0x20}, {"nonbreakingspace", 0xA0}};
    for (const auto& [k, v] : extra) t.emplace(k, v);
    return t;
  }();
  return table;
}

// WinAnsiEncoding differs from Latin-1 only in 0x80..0x9F.
constexpr std::array<char32_t, 32> kWinAnsiHigh = {
    0x20AC, 0, 0x201A, 0x0192, 0x201E, 0x2026, 0x2020, 0x2021,
    0x02C6, 0x2030, 0x0160, 0x2039, 0x0152, 0, 0x017D, 0,
    0, 0x2018, 0x2019, 0x201C, 0x201D, 0x2022, 0x2013, 0x2014,
    0x02DC, 0x2122, 0x0161, 0x203A, 0x0153, 0, 0x017E, 0x0178};

std::array<char32_t, 256> win_ansi() {
  std::array<char32_t, 256> m{};
  for (int i = 0x20; i < 0x7F; ++i) m[i] = static_cast<char32_t>(i);
  m['\t'] = U'\t';
  m['\n'] = U'\n';
  m['\r'] = U'\r';
  for (int i = 0; i < 32; ++i) m[0x80 + i] = kWinAnsiHigh[i];
  for (int i = 0xA0; i < 0x100; ++i) m[i] = static_cast<char32_t>(i);
  m[0xAD] = U'-';
  return m;
}

std::array<char32_t, 256> standard_encoding() {
  auto m = win_ansi();
  m['\''] = 0x2019;
  m['`'] = 0x2018;
  for (int i = 0x80; i < 0x100; ++i) m[i] = 0;
  const std::pair<int, char32_t> high[] = {
      {0xA1, 0xA1}, {0xA2, 0xA2}, {0xA3, 0xA3}, {0xA4, 0x2044}, {0xA5, 0xA5},
      {0xA6, 0x0192}, {0xA7, 0xA7}, {0xA9, 0x27}, {0xAA, 0x201C},
      {0xAB, 0xAB}, {0xAE, 0xFB01}, {0xAF, 0xFB02}, {0xB1, 0x2013},
      {0xB2, 0x2020}, {0xB3, 0x2021}, {0xB4, 0xB7}, {0xB6, 0xB6},
      {0xB7, 0x2022}, {0xB8, 0x201A}, {0xB9, 0x201E}, {0xBA, 0x201D},
      {0xBB, 0xBB}, {0xBC, 0x2026}, {0xBD, 0x2030}, {0xBF, 0xBF},
      {0xD0, 0x2014}, {0xE1, 0xC6}, {0xE8, 0x141}, {0xE9, 0xD8},
      {0xEA, 0x152}, {0xF1, 0xE6}, {0xF5, 0x131}, {0xF8, 0x142},
      {0xF9, 0xF8}, {0xFA, 0x153}, {0xFB, 0xDF}};
  for (const auto& [code, cp] : high) m[code] = cp;
  return m;
}

std::array<char32_t, 256> mac_roman() {
  auto m = win_ansi();
  constexpr std::array<char32_t, 128> kHigh = {
      0xC4, 0xC5, 0xC7, 0xC9, 0xD1, 0xD6, 0xDC, 0xE1, 0xE0, 0xE2, 0xE4,
      0xE3, 0xE5, 0xE7, 0xE9, 0xE8, 0xEA, 0xEB, 0xED, 0xEC, 0xEE, 0xEF,
      0xF1, 0xF3, 0xF2, 0xF4, 0xF6, 0xF5, 0xFA, 0xF9, 0xFB, 0xFC, 0x2020,
      0xB0, 0xA2, 0xA3, 0xA7, 0x2022, 0xB6, 0xDF, 0xAE, 0xA9, 0x2122, 0xB4,
      0xA8, 0x2260, 0xC6, 0xD8, 0x221E, 0xB1, 0x2264, 0x2265, 0xA5, 0xB5,
      0x2202, 0x2211, 0x220F, 0x3C0, 0x222B, 0xAA, 0xBA, 0x3A9, 0xE6, 0xF8,
      0xBF, 0xA1, 0xAC, 0x221A, 0x192, 0x2248, 0x2206, 0xAB, 0xBB, 0x2026,
      0xA0, 0xC0, 0xC3, 0xD5, 0x152, 0x153, 0x2013, 0x2014, 0x201C, 0x201D,
      0x2018, 0x2019, 0xF7, 0x25CA, 0xFF, 0x178, 0x2044, 0x20AC, 0x2039,
      0x203A, 0xFB01, 0xFB02, 0x2021, 0xB7, 0x201A, 0x201E, 0x2030, 0xC2,
      0xCA, 0xC1, 0xCB, 0xC8, 0xCD, 0xCE, 0xCF, 0xCC, 0xD3, 0xD4, 0xF8FF,
      0xD2, 0xDA, 0xDB, 0xD9, 0x131, 0x2C6, 0x2DC, 0xAF, 0x2D8, 0x2D9,
      0x2DA, 0xB8, 0x2DD, 0x2DB, 0x2C7};
  for (int i = 0; i < 128; ++i) m[0x80 + i] = kHigh[i];
  return m;
}

std::string utf16be_to_utf8(std::string_view bytes) {
  std::string out;
  for (std::size_t i = 0; i + 1 < bytes.size(); i += 2) {
    char32_t u = (static_cast<unsigned char>(bytes[i]) << 8) |
                 static_cast<unsigned char>(bytes[i + 1]);
    if (u >= 0xD800 && u <= 0xDBFF && i + 3 < bytes.size()) {
      const char32_t lo = (static_cast<unsigned char>(bytes[i + 2]) << 8) |
                          static_cast<unsigned char>(bytes[i + 3]);
      if (lo >= 0xDC00 && lo <= 0xDFFF) {
        u = 0x10000 + ((u - 0xD800) << 10) + (lo - 0xDC00);
        i += 2;
      }
    }
    if (u >= 0xD800 && u <= 0xDFFF) u = 0xFFFD;
    text::append_utf8(out, u);
  }
  if (bytes.size() == 1) {
    text::append_utf8(out, static_cast<unsigned char>(bytes[0]));
  }
  return out;
}

std::uint32_t code_value(std::string_view bytes) {
  std::uint32_t v = 0;
  for (unsigned char b : bytes) v = (v << 8) | b;
  return v;
}

std::string increment_utf16(std::string bytes, std::uint32_t delta) {
  // Adds delta to the final UTF-16 unit, as bfrange destinations require.
  if (bytes.size() < 2) return bytes;
  std::uint32_t last = (static_cast<unsigned char>(bytes[bytes.size() - 2]) << 8) |
                       static_cast<unsigned char>(bytes.back());
  last += delta;
  bytes[bytes.size() - 2] = static_cast<char>((last >> 8) & 0xFF);
  bytes.back() = static_cast<char>(last & 0xFF);
  return bytes;
}

}  // namespace

char32_t glyph_to_unicode(std::string_view name) {
  const auto& t = glyph_table();
  if (auto it = t.find(name); it != t.end()) return it->second;
  const auto dot = name.find('.');
  if (dot != std::string_view::npos && dot > 0) {
    return glyph_to_unicode(name.substr(0, dot));
  }
  auto parse_hex = [](std::string_view h) -> char32_t {
    if (h.empty() || h.size() > 6) return 0;
    char32_t v = 0;
    for (char c : h) {
      v <<= 4;
      if (c >= '0' && c <= '9') v |= static_cast<char32_t>(c - '0');
      else if (c >= 'A' && c <= 'F') v |= static_cast<char32_t>(c - 'A' + 10);
      else if (c >= 'a' && c <= 'f') v |= static_cast<char32_t>(c - 'a' + 10);
      else return 0;
    }
    return v;
  };
  if (name.starts_with("uni") && name.size() >= 7) return parse_hex(name.substr(3, 4));
  if (name.starts_with("u") && name.size() >= 5 && name.size() <= 7) {
    return parse_hex(name.substr(1));
  }
  return 0;
}

ToUnicodeMap ToUnicodeMap::parse(std::string_view cmap) {
  ToUnicodeMap m;
  Lexer lex(cmap);
  std::vector<Object> operands;
  try {
    while (!lex.at_end()) {
      Object tok = lex.next_token();
      if (tok.kind != Object::Kind::kKeyword) {
        operands.push_back(std::move(tok));
        continue;
      }
      if (tok.text == "endcodespacerange") {
        for (std::size_t i = 0; i + 1 < operands.size(); i += 2) {
          m.code_lengths.push_back(operands[i].text.size());
        }
      } else if (tok.text == "endbfchar") {
        for (std::size_t i = 0; i + 1 < operands.size(); i += 2) {
          const Object& dst = operands[i + 1];
          std::string utf8;
          if (dst.kind == Object::Kind::kString) {
            utf8 = utf16be_to_utf8(dst.text);
          } else if (dst.kind == Object::Kind::kName) {
            if (char32_t cp = glyph_to_unicode(dst.text)) text::append_utf8(utf8, cp);
          }
          m.mapping[code_value(operands[i].text)] = utf8;
          if (m.code_lengths.empty()) m.code_lengths.push_back(operands[i].text.size());
        }
      } else if (tok.text == "endbfrange") {
        for (std::size_t i = 0; i + 2 < operands.size(); i += 3) {
          const std::uint32_t lo = code_value(operands[i].text);
          const std::uint32_t hi = code_value(operands[i + 1].text);
          if (hi < lo || hi - lo > 0xFFFF) continue;
          const Object& dst = operands[i + 2];
          for (std::uint32_t c = lo; c <= hi; ++c) {
            if (dst.kind == Object::Kind::kArray) {
              const std::size_t idx = c - lo;
              if (idx < dst.items.size()) {
                m.mapping[c] = utf16be_to_utf8(dst.items[idx].text);
              }
            } else if (dst.kind == Object::Kind::kString) {
              m.mapping[c] = utf16be_to_utf8(increment_utf16(dst.text, c - lo));
            }
          }
          if (m.code_lengths.empty()) m.code_lengths.push_back(operands[i].text.size());
        }
      }
      operands.clear();
    }
  } catch (const std::exception&) {
    // Keep whatever was mapped before the damage.
  }
  std::sort(m.code_lengths.begin(), m.code_lengths.end());
  m.code_lengths.erase(std::unique(m.code_lengths.begin(), m.code_lengths.end()),
                       m.code_lengths.end());
  std::erase(m.code_lengths, 0);
  return m;
}

FontDecoder::FontDecoder(const Object& font, const Document& doc) {
  composite_ = font.name_is("Subtype", "Type0");
  if (const Object* tu = font.get("ToUnicode")) {
    const Object& stream = doc.resolve(*tu);
    if (stream.kind == Object::Kind::kStream) {
      try {
        to_unicode_ = ToUnicodeMap::parse(decode_stream(stream, &doc));
      } catch (const std::exception&) {
      }
    }
  }

  if (composite_) {
    if (const Object* desc = font.get("DescendantFonts")) {
      const Object& arr = doc.resolve(*desc);
      if (arr.kind == Object::Kind::kArray && !arr.items.empty()) {
        const Object& cid = doc.resolve(arr.items[0]);
        if (const Object* dw = cid.get("DW")) {
          default_width_ = doc.resolve(*dw).number / 1000.0;
        } else {
          default_width_ = 1.0;
        }
        if (const Object* w = cid.get("W")) {
          const Object& warr = doc.resolve(*w);
          for (std::size_t i = 0; i < warr.items.size();) {
            const auto start = static_cast<std::uint32_t>(doc.resolve(warr.items[i]).number);
            if (i + 1 >= warr.items.size()) break;
            const Object& next = doc.resolve(warr.items[i + 1]);
            if (next.kind == Object::Kind::kArray) {
              for (std::size_t j = 0; j < next.items.size(); ++j) {
                cid_widths_[start + static_cast<std::uint32_t>(j)] =
                    doc.resolve(next.items[j]).number / 1000.0;
              }
              i += 2;
            } else if (i + 2 < warr.items.size()) {
              const auto end = static_cast<std::uint32_t>(next.number);
              const double width = doc.resolve(warr.items[i + 2]).number / 1000.0;
              for (std::uint32_t c = start; c <= end && c - start < 0x10000; ++c) {
                cid_widths_[c] = width;
              }
              i += 3;
            } else {
              break;
            }
          }
        }
      }
    }
    return;
  }

  simple_ = standard_encoding();
  const Object* enc = font.get("Encoding");
  const Object& encoding = enc != nullptr ? doc.resolve(*enc) : Object{};
  auto apply_base = [&](std::string_view base) {
    if (base == "WinAnsiEncoding") simple_ = win_ansi();
    else if (base == "MacRomanEncoding") simple_ = mac_roman();
    else if (base == "StandardEncoding") simple_ = standard_encoding();
  };
  if (font.name_is("Subtype", "TrueType")) simple_ = win_ansi();
  if (encoding.kind == Object::Kind::kName) {
    apply_base(encoding.text);
  } else if (encoding.kind == Object::Kind::kDict) {
    if (const Object* base = encoding.get("BaseEncoding")) {
      apply_base(doc.resolve(*base).text);
    }
    if (const Object* diffs = encoding.get("Differences")) {
      const Object& arr = doc.resolve(*diffs);
      int code = 0;
      for (const auto& item : arr.items) {
        if (item.kind == Object::Kind::kNumber) {
          code = static_cast<int>(item.number);
        } else if (item.kind == Object::Kind::kName) {
          if (code >= 0 && code < 256) simple_[code] = glyph_to_unicode(item.text);
          ++code;
        }
      }
    }
  }

  if (const Object* fc = font.get("FirstChar")) {
    first_char_ = static_cast<int>(doc.resolve(*fc).number);
  }
  if (const Object* w = font.get("Widths")) {
    for (const auto& item : doc.resolve(*w).items) {
      widths_.push_back(doc.resolve(item).number / 1000.0);
    }
  }
}

double FontDecoder::width_of(std::uint32_t code) const {
  if (composite_) {
    auto it = cid_widths_.find(code);
    return it == cid_widths_.end() ? default_width_ : it->second;
  }
  const long idx = static_cast<long>(code) - first_char_;
  if (idx >= 0 && static_cast<std::size_t>(idx) < widths_.size() && widths_[idx] > 0) {
    return widths_[idx];
  }
  return default_width_;
}

std::vector<FontDecoder::Glyph> FontDecoder::decode(std::string_view bytes) const {
  std::vector<Glyph> glyphs;
  std::size_t i = 0;
  while (i < bytes.size()) {
    std::size_t len = composite_ ? 2 : 1;
    std::string utf8;
    bool mapped = false;
    if (!to_unicode_.empty()) {
      for (std::size_t l : to_unicode_.code_lengths) {
        if (i + l > bytes.size()) break;
        auto it = to_unicode_.mapping.find(code_value(bytes.substr(i, l)));
        if (it != to_unicode_.mapping.end()) {
          len = l;
          utf8 = it->second;
          mapped = true;
          break;
        }
      }
      if (!mapped && !to_unicode_.code_lengths.empty()) {
        len = to_unicode_.code_lengths.front();
      }
    }
    len = std::min(len, bytes.size() - i);
    const std::uint32_t code = code_value(bytes.substr(i, len));
    if (!mapped && !composite_) {
      const char32_t cp = simple_[code & 0xFF];
      if (cp != 0) text::append_utf8(utf8, cp);
    }
    Glyph g;
    g.text = std::move(utf8);
    g.width = width_of(code);
    g.is_space = len == 1 && code == 32;
    glyphs.push_back(std::move(g));
    i += len;
  }
  return glyphs;
}

}  // namespace zoterag::pdf
