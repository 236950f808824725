#include "zoterag/fs_util.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include "zoterag/error.hpp"

namespace zoterag::fs_util {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) {
      throw Error(ErrorCode::kIoError, "cannot create directory " +
                                           path.parent_path().string() +
                                           ": " + ec.message());
    }
  }
  const auto tmp = path.string() + ".tmp";
  std::FILE* f = std::fopen(tmp.c_str(), "wb");
  if (f == nullptr) {
    throw Error(ErrorCode::kIoError,
                "cannot write " + tmp + ": " + std::strerror(errno));
  }
  const std::size_t written = std::fwrite(contents.data(), 1,
                                          contents.size(), f);
  const int write_errno = errno;
  const bool ok = written == contents.size() && std::fflush(f) == 0;
  const int flush_errno = errno;
  std::fclose(f);
  if (!ok) {
    std::remove(tmp.c_str());
    const int err = written != contents.size() ? write_errno : flush_errno;
    throw Error(err == ENOSPC ? ErrorCode::kDiskFull : ErrorCode::kIoError,
                "cannot write " + path.string() + ": " + std::strerror(err));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    throw Error(ErrorCode::kIoError,
                "cannot rename onto " + path.string() + ": " + ec.message());
  }
}

}  // namespace zoterag::fs_util
