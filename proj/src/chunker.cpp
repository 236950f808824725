#include "zoterag/chunker.hpp"

#include <algorithm>
#include <span>

#include "zoterag/error.hpp"
#include "zoterag/ingest.hpp"
#include "zoterag/text_util.hpp"

namespace zoterag {

void ChunkParams::validate() const {
  if (chunk_size == 0) {
    throw Error(ErrorCode::kInvalidParams, "chunk_size must be positive");
  }
  if (chunk_overlap >= chunk_size) {
    throw Error(ErrorCode::kInvalidParams,
                "chunk_overlap must be smaller than chunk_size");
  }
  if (separators.empty() || !separators.back().empty()) {
    throw Error(ErrorCode::kInvalidParams,
                "separators must be nonempty and end with \"\"");
  }
}

namespace {

// Byte range into the source text.
struct Piece {
  std::size_t begin;
  std::size_t end;
};

class RecursiveSplitter {
 public:
  RecursiveSplitter(std::string_view text, const ChunkParams& params)
      : text_(text), params_(params), offsets_(text::char_offsets(text)) {}

  std::vector<TextSpan> run() {
    std::vector<Piece> raw;
    if (!text_.empty()) {
      split({0, text_.size()}, params_.separators, raw);
    }
    std::vector<TextSpan> out;
    out.reserve(raw.size());
    for (const Piece& p : raw) {
      auto trimmed = trim(p);
      if (trimmed.begin == trimmed.end) continue;
      out.push_back({std::string(text_.substr(trimmed.begin,
                                              trimmed.end - trimmed.begin)),
                     char_index(trimmed.begin), char_index(trimmed.end)});
    }
    return out;
  }

 private:
  std::size_t char_index(std::size_t byte) const {
    auto it = std::lower_bound(offsets_.begin(), offsets_.end(), byte);
    return static_cast<std::size_t>(it - offsets_.begin());
  }

  std::size_t length(std::size_t begin, std::size_t end) const {
    return char_index(end) - char_index(begin);
  }

  void split(Piece region, std::span<const std::string> seps,
             std::vector<Piece>& out) {
    const std::string_view body = text_.substr(region.begin,
                                               region.end - region.begin);
    std::size_t chosen = 0;
    while (chosen + 1 < seps.size() &&
           body.find(seps[chosen]) == std::string_view::npos) {
      ++chosen;
    }
    const std::string& sep = seps[chosen];
    const auto rest = seps.subspan(chosen + 1);

    std::vector<Piece> pieces;
    if (sep.empty()) {
      const std::size_t first = char_index(region.begin);
      const std::size_t last = char_index(region.end);
      for (std::size_t c = first; c < last; ++c) {
        pieces.push_back({offsets_[c], offsets_[c + 1]});
      }
    } else {
      std::size_t pos = 0;
      while (true) {
        const auto hit = body.find(sep, pos);
        const std::size_t stop = hit == std::string_view::npos ? body.size()
                                                               : hit;
        if (stop > pos) {
          pieces.push_back({region.begin + pos, region.begin + stop});
        }
        if (hit == std::string_view::npos) break;
        pos = hit + sep.size();
      }
    }

    std::vector<Piece> fitting;
    for (const Piece& p : pieces) {
      if (length(p.begin, p.end) <= params_.chunk_size) {
        fitting.push_back(p);
        continue;
      }
      if (!fitting.empty()) {
        merge(fitting, out);
        fitting.clear();
      }
      if (rest.empty()) {
        out.push_back(p);
      } else {
        split(p, rest, out);
      }
    }
    if (!fitting.empty()) merge(fitting, out);
  }

  void merge(const std::vector<Piece>& pieces, std::vector<Piece>& out) {
    const std::size_t size = params_.chunk_size;
    const std::size_t overlap = params_.chunk_overlap;
    std::size_t lo = 0;
    std::size_t hi = 0;  // window is pieces[lo, hi)
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      const Piece& next = pieces[i];
      if (hi > lo && length(pieces[lo].begin, next.end) > size) {
        out.push_back({pieces[lo].begin, pieces[hi - 1].end});
        while (lo < hi &&
               (length(pieces[lo].begin, pieces[hi - 1].end) > overlap ||
                length(pieces[lo].begin, next.end) > size)) {
          ++lo;
        }
      }
      if (hi == lo) lo = i;
      hi = i + 1;
    }
    if (hi > lo) out.push_back({pieces[lo].begin, pieces[hi - 1].end});
  }

  Piece trim(Piece p) const {
    std::size_t b = p.begin;
    while (b < p.end) {
      std::size_t len = 1;
      if (!text::is_space(text::decode_at(text_, b, &len))) break;
      b += len;
    }
    std::size_t e = p.end;
    while (e > b) {
      const std::size_t c = char_index(e) - 1;
      const std::size_t start = offsets_[c];
      std::size_t len = 1;
      if (!text::is_space(text::decode_at(text_, start, &len))) break;
      e = start;
    }
    return {b, e};
  }

  std::string_view text_;
  const ChunkParams& params_;
  std::vector<std::size_t> offsets_;
};

}  // namespace

std::vector<TextSpan> split_text(std::string_view text,
                                 const ChunkParams& params) {
  params.validate();
  return RecursiveSplitter(text, params).run();
}

std::vector<Chunk> chunk_document(const SourceDocument& doc,
                                  const ChunkParams& params) {
  auto spans = split_text(doc.text, params);
  std::vector<Chunk> chunks;
  chunks.reserve(spans.size());
  for (std::size_t i = 0; i < spans.size(); ++i) {
    chunks.push_back({doc.doc_id, i, std::move(spans[i].text), spans[i].start,
                      spans[i].end});
  }
  return chunks;
}

}  // namespace zoterag
