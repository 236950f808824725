#include "zoterag/zotero_client.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "zoterag/error.hpp"
#include "zoterag/fs_util.hpp"
#include "zoterag/logging.hpp"

namespace zoterag {

using nlohmann::json;

std::string_view to_string(LibraryType t) {
  return t == LibraryType::kUser ? "user" : "group";
}

LibraryType library_type_from_string(std::string_view s) {
  if (s == "user") return LibraryType::kUser;
  if (s == "group") return LibraryType::kGroup;
  throw Error(ErrorCode::kInvalidParams,
              "library type must be \"user\" or \"group\"");
}

void LibraryConfig::validate() const {
  if (library_id.empty() ||
      !std::all_of(library_id.begin(), library_id.end(),
                   [](char c) { return c >= '0' && c <= '9'; })) {
    throw Error(ErrorCode::kInvalidLibraryId,
                "library id must be a nonempty digit string");
  }
}

std::string build_base_url(const LibraryConfig& cfg, std::string_view api_base) {
  cfg.validate();
  return std::string(api_base) +
         (cfg.library_type == LibraryType::kUser ? "/users/" : "/groups/") +
         cfg.library_id;
}

std::string sanitize_filename(std::string_view name) {
  std::string out;
  out.reserve(name.size());
  for (char ch : name) {
    const auto c = static_cast<unsigned char>(ch);
    out.push_back(c < 0x20 || c == 0x7F || ch == '/' || ch == '\\' ? '_' : ch);
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

std::filesystem::path attachment_path(const std::filesystem::path& dest_dir,
                                      const AttachmentRef& ref) {
  return dest_dir / (sanitize_filename(ref.item_key) + "_" +
                     sanitize_filename(ref.filename));
}

ZoteroClient::ZoteroClient(std::shared_ptr<http::Transport> transport,
                           std::string api_base)
    : transport_(std::move(transport)), api_base_(std::move(api_base)) {}

http::Response ZoteroClient::get(const LibraryConfig& cfg,
                                 const std::string& url) const {
  logging::register_secret(cfg.api_key);
  http::Request req{"GET", url,
                    {{"Zotero-API-Key", cfg.api_key},
                     {"Zotero-API-Version", "3"}},
                    {}};
  http::Response resp = transport_->send(req);
  switch (resp.status) {
    case 403:
      throw Error(ErrorCode::kAuthFailed,
                  "Zotero rejected the API key (HTTP 403)");
    case 404:
      throw Error(ErrorCode::kLibraryNotFound,
                  "Zotero library or item not found (HTTP 404)");
    default:
      break;
  }
  if (resp.status < 200 || resp.status >= 300) {
    throw Error(ErrorCode::kTransport,
                "Zotero returned HTTP " + std::to_string(resp.status));
  }
  return resp;
}

AttachmentListing ZoteroClient::list_attachments(
    const LibraryConfig& cfg) const {
  const std::string base = build_base_url(cfg, api_base_);
  AttachmentListing listing;
  std::set<std::string> seen;
  for (std::size_t start = 0;; start += kPageSize) {
    const auto resp = get(cfg, base + "/items?itemType=attachment&format=json" +
                                   "&limit=" + std::to_string(kPageSize) +
                                   "&start=" + std::to_string(start));
    json page;
    try {
      page = json::parse(resp.body);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kTransport,
                  std::string("malformed Zotero listing: ") + e.what());
    }
    if (!page.is_array()) {
      throw Error(ErrorCode::kTransport, "Zotero listing is not an array");
    }
    for (const auto& item : page) {
      const json& data = item.contains("data") ? item["data"] : item;
      AttachmentRef ref;
      ref.item_key = data.value("key", item.value("key", std::string()));
      ref.filename = data.value("filename", std::string());
      ref.title = data.value("title", std::string());
      ref.content_type = data.value("contentType", std::string());
      if (data.value("itemType", std::string("attachment")) != "attachment" ||
          ref.content_type != kPdfContentType || ref.item_key.empty()) {
        ++listing.skipped_non_pdf;
        continue;
      }
      if (!seen.insert(ref.item_key).second) continue;
      if (ref.filename.empty()) ref.filename = ref.item_key + ".pdf";
      listing.pdfs.push_back(std::move(ref));
    }
    if (page.size() < kPageSize) break;
  }
  if (listing.skipped_non_pdf > 0) {
    logging::get()->info("skipped {} non-PDF attachments",
                         listing.skipped_non_pdf);
  }
  return listing;
}

std::filesystem::path ZoteroClient::download_attachment(
    const LibraryConfig& cfg, const AttachmentRef& ref,
    const std::filesystem::path& dest_dir) const {
  if (ref.content_type != kPdfContentType) {
    throw Error(ErrorCode::kNotAPdf,
                ref.item_key + " has content type " + ref.content_type);
  }
  const auto resp =
      get(cfg, build_base_url(cfg, api_base_) + "/items/" + ref.item_key +
                   "/file");
  const std::string served = resp.header("content-type");
  if (!served.empty() && !served.starts_with(kPdfContentType) &&
      !served.starts_with("application/octet-stream")) {
    throw Error(ErrorCode::kNotAPdf,
                ref.item_key + " was served as " + served);
  }
  const auto path = attachment_path(dest_dir, ref);
  fs_util::write_file_atomic(path, resp.body);
  return path;
}

}  // namespace zoterag
