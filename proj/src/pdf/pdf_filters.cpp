#include <zlib.h>

#include <algorithm>
#include <cstdint>
#include <vector>
#include <stdexcept>

#include "pdf/pdf_object.hpp"

namespace zoterag::pdf {

namespace {

std::string inflate_with(std::string_view in, int window_bits) {
  z_stream zs{};
  if (inflateInit2(&zs, window_bits) != Z_OK) {
    throw std::runtime_error("inflateInit failed");
  }
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());
  std::string out;
  char buf[16384];
  int rc = Z_OK;
  while (rc == Z_OK) {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof(buf);
    rc = inflate(&zs, Z_NO_FLUSH);
    out.append(buf, sizeof(buf) - zs.avail_out);
    if (rc == Z_BUF_ERROR && zs.avail_in == 0) break;  // truncated tail
  }
  inflateEnd(&zs);
  if (rc != Z_STREAM_END && rc != Z_BUF_ERROR && out.empty()) {
    throw std::runtime_error("corrupt Flate stream");
  }
  return out;
}

}  // namespace

std::string flate_decode(std::string_view in) {
  try {
    return inflate_with(in, 15);
  } catch (const std::runtime_error&) {
    return inflate_with(in, -15);  // raw deflate without zlib header
  }
}

std::string ascii85_decode(std::string_view in) {
  std::string out;
  std::uint32_t tuple = 0;
  int count = 0;
  std::size_t i = 0;
  if (in.substr(0, 2) == "<~") i = 2;
  for (; i < in.size(); ++i) {
    const char c = in[i];
    if (c == '~') break;
    if (is_pdf_space(c)) continue;
    if (c == 'z' && count == 0) {
      out.append(4, '\0');
      continue;
    }
    if (c < '!' || c > 'u') throw std::runtime_error("bad ASCII85 character");
    tuple = tuple * 85 + static_cast<std::uint32_t>(c - '!');
    if (++count == 5) {
      for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<char>(tuple >> s));
      tuple = 0;
      count = 0;
    }
  }
  if (count > 0) {
    for (int pad = count; pad < 5; ++pad) tuple = tuple * 85 + 84;
    for (int b = 0; b < count - 1; ++b) {
      out.push_back(static_cast<char>(tuple >> (24 - 8 * b)));
    }
  }
  return out;
}

std::string ascii_hex_decode(std::string_view in) {
  std::string out;
  int high = -1;
  for (char c : in) {
    if (c == '>') break;
    int v = -1;
    if (c >= '0' && c <= '9') v = c - '0';
    else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
    if (v < 0) continue;
    if (high < 0) {
      high = v;
    } else {
      out.push_back(static_cast<char>((high << 4) | v));
      high = -1;
    }
  }
  if (high >= 0) out.push_back(static_cast<char>(high << 4));
  return out;
}

std::string lzw_decode(std::string_view in, bool early_change) {
  std::vector<std::string> table;
  auto reset = [&] {
    table.clear();
    for (int i = 0; i < 256; ++i) table.emplace_back(1, static_cast<char>(i));
    table.emplace_back();  // 256 clear
    table.emplace_back();  // 257 end of data
  };
  reset();
  std::string out;
  std::uint32_t bits = 0;
  int nbits = 0;
  int code_len = 9;
  std::string prev;
  bool have_prev = false;
  for (unsigned char byte : in) {
    bits = (bits << 8) | byte;
    nbits += 8;
    while (nbits >= code_len) {
      const int code = static_cast<int>((bits >> (nbits - code_len)) &
                                        ((1u << code_len) - 1));
      nbits -= code_len;
      if (code == 256) {
        reset();
        code_len = 9;
        have_prev = false;
        continue;
      }
      if (code == 257) return out;
      std::string entry;
      if (code < static_cast<int>(table.size())) {
        entry = table[code];
      } else if (have_prev && code == static_cast<int>(table.size())) {
        entry = prev + prev[0];
      } else {
        throw std::runtime_error("bad LZW code");
      }
      out += entry;
      if (have_prev) table.push_back(prev + entry[0]);
      prev = entry;
      have_prev = true;
      const std::size_t next = table.size() + (early_change ? 1 : 0);
      if (next >= 2048) {
        code_len = 12;
      } else if (next >= 1024) {
        code_len = 11;
      } else if (next >= 512) {
        code_len = 10;
      }
    }
  }
  return out;
}

std::string run_length_decode(std::string_view in) {
  std::string out;
  std::size_t i = 0;
  while (i < in.size()) {
    const auto len = static_cast<unsigned char>(in[i++]);
    if (len == 128) break;
    if (len < 128) {
      const std::size_t n = std::min<std::size_t>(len + 1, in.size() - i);
      out.append(in.substr(i, n));
      i += n;
    } else if (i < in.size()) {
      out.append(257 - len, in[i++]);
    }
  }
  return out;
}

std::string decode_stream(const Object& stream, const Document* doc) {
  static const Object kNull;
  auto resolve = [&](const Object* o) -> const Object& {
    if (o == nullptr) return kNull;
    return doc != nullptr ? doc->resolve(*o) : *o;
  };
  const Object& filter = resolve(stream.get("Filter"));
  std::vector<std::string> filters;
  if (filter.kind == Object::Kind::kName) {
    filters.push_back(filter.text);
  } else if (filter.kind == Object::Kind::kArray) {
    for (const auto& f : filter.items) {
      const Object& r = doc != nullptr ? doc->resolve(f) : f;
      if (r.kind == Object::Kind::kName) filters.push_back(r.text);
    }
  }
  std::string data = stream.text;
  for (const auto& f : filters) {
    if (f == "FlateDecode" || f == "Fl") {
      data = flate_decode(data);
    } else if (f == "ASCII85Decode" || f == "A85") {
      data = ascii85_decode(data);
    } else if (f == "ASCIIHexDecode" || f == "AHx") {
      data = ascii_hex_decode(data);
    } else if (f == "LZWDecode" || f == "LZW") {
      data = lzw_decode(data);
    } else if (f == "RunLengthDecode" || f == "RL") {
      data = run_length_decode(data);
    } else {
      throw std::runtime_error("unsupported filter " + f);
    }
  }
  return data;
}

}  // namespace zoterag::pdf
