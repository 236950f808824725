#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace zoterag::text {

// 64-bit FNV-1a.
constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t seed = kFnvOffset) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

std::string hex64(std::uint64_t value);

// Byte offsets of each Unicode scalar value in a UTF-8 string. Malformed
// bytes count as one character each so every byte belongs to some character.
// The returned vector has one extra trailing entry equal to text.size().
std::vector<std::size_t> char_offsets(std::string_view text);

std::size_t char_length(std::string_view text);

// Decodes the scalar value starting at text[pos]; malformed input yields the
// raw byte value and a length of 1.
char32_t decode_at(std::string_view text, std::size_t pos, std::size_t* len);

void append_utf8(std::string& out, char32_t cp);

bool is_space(char32_t cp);

bool is_blank(std::string_view text);

std::string_view trim_ascii(std::string_view s);

}  // namespace zoterag::text
