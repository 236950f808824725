#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace zoterag {

struct PdfText {
  std::string text;  // pages joined by "\n\n"
  std::size_t page_count = 0;
  std::vector<std::string> pages;
};

// Extracts the text layer of a PDF. Within a page, lines are separated by
// "\n" and a vertical gap wider than a normal line break yields "\n\n".
//
// Throws Error(kNotAPdf) when the data does not start with "%PDF",
// Error(kExtractionFailed) for unreadable or encrypted files, and
// Error(kEmptyDocument) when no page carries any non-whitespace text.
PdfText extract_pdf_text(std::string_view bytes);
PdfText extract_text(const std::filesystem::path& pdf_file);

}  // namespace zoterag
