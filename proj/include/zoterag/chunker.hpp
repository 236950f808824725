#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace zoterag {

struct SourceDocument;

struct ChunkParams {
  std::size_t chunk_size = 500;
  std::size_t chunk_overlap = 200;
  std::vector<std::string> separators = {"\n\n", "\n", " ", ""};

  // Throws Error(kInvalidParams) when overlap >= size, size == 0, or the
  // separator list does not end with "".
  void validate() const;

  bool operator==(const ChunkParams&) const = default;
};

// A chunk's trimmed text and its [start, end) offsets into the source,
// counted in Unicode scalar values.
struct TextSpan {
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const TextSpan&) const = default;
};

struct Chunk {
  std::string doc_id;
  std::size_t seq = 0;
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const Chunk&) const = default;
};

// Recursive character splitting. The first separator present in a region
// splits it into pieces (separator dropped, empty pieces discarded); pieces
// longer than chunk_size recurse with the remaining separators; the rest are
// merged greedily into chunks of at most chunk_size characters measured over
// their source span. Each closed chunk seeds the next with its longest piece
// suffix that spans at most chunk_overlap characters and still leaves room for
// the incoming piece. Chunks are whitespace-trimmed and blank chunks dropped.
std::vector<TextSpan> split_text(std::string_view text,
                                 const ChunkParams& params);

std::vector<Chunk> chunk_document(const SourceDocument& doc,
                                  const ChunkParams& params);

}  // namespace zoterag
