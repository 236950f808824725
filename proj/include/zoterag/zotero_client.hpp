#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "zoterag/http.hpp"

namespace zoterag {

enum class LibraryType { kUser, kGroup };

std::string_view to_string(LibraryType t);
LibraryType library_type_from_string(std::string_view s);

struct LibraryConfig {
  std::string api_key;
  LibraryType library_type = LibraryType::kGroup;
  std::string library_id;

  // Throws Error(kInvalidLibraryId) unless library_id is a nonempty digit
  // string.
  void validate() const;
};

struct AttachmentRef {
  std::string item_key;
  std::string filename;
  std::string title;
  std::string content_type;

  bool operator==(const AttachmentRef&) const = default;
};

struct AttachmentListing {
  std::vector<AttachmentRef> pdfs;
  std::size_t skipped_non_pdf = 0;
};

inline constexpr std::string_view kZoteroApiBase = "https://api.zotero.org";
inline constexpr std::string_view kPdfContentType = "application/pdf";

std::string build_base_url(const LibraryConfig& cfg,
                           std::string_view api_base = kZoteroApiBase);

// Replaces path separators and control characters with '_'.
std::string sanitize_filename(std::string_view name);

// Zotero Web API v3 client. Stateless apart from its transport, so one
// instance may be shared across threads.
class ZoteroClient {
 public:
  static constexpr std::size_t kPageSize = 100;

  explicit ZoteroClient(std::shared_ptr<http::Transport> transport,
                        std::string api_base = std::string(kZoteroApiBase));

  AttachmentListing list_attachments(const LibraryConfig& cfg) const;
  std::vector<AttachmentRef> list_pdf_attachments(
      const LibraryConfig& cfg) const {
    return list_attachments(cfg).pdfs;
  }

  // Writes dest_dir/{item_key}_{sanitized filename} and returns its path.
  std::filesystem::path download_attachment(
      const LibraryConfig& cfg, const AttachmentRef& ref,
      const std::filesystem::path& dest_dir) const;

 private:
  http::Response get(const LibraryConfig& cfg, const std::string& url) const;

  std::shared_ptr<http::Transport> transport_;
  std::string api_base_;
};

std::filesystem::path attachment_path(const std::filesystem::path& dest_dir,
                                      const AttachmentRef& ref);

}  // namespace zoterag
