#include "adx/store/record_log.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>
#include <zlib.h>

#include <cerrno>
#include <cstring>
#include <fstream>

namespace adx::store {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint32_t record_crc(std::uint8_t type, const std::uint8_t* payload, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, &type, 1);
  if (n) crc = crc32(crc, payload, static_cast<uInt>(n));
  return static_cast<std::uint32_t>(crc);
}

[[noreturn]] void fail(const std::string& what, const std::filesystem::path& path) {
  throw StoreIoError(what + " '" + path.string() + "': " + std::strerror(errno));
}

void write_all(int fd, const std::uint8_t* data, std::size_t n, const std::filesystem::path& path) {
  while (n > 0) {
    const ssize_t w = ::write(fd, data, n);
    if (w < 0) {
      if (errno == EINTR) continue;
      fail("write failed for", path);
    }
    data += w;
    n -= static_cast<std::size_t>(w);
  }
}

void fsync_dir(const std::filesystem::path& dir) {
  const int fd = ::open(dir.empty() ? "." : dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd >= 0) {
    ::fsync(fd);
    ::close(fd);
  }
}

}  // namespace

std::vector<std::uint8_t> frame_record(std::uint8_t type, std::span<const std::uint8_t> payload) {
  std::vector<std::uint8_t> out;
  out.reserve(kRecordHeaderSize + payload.size());
  put_u32(out, static_cast<std::uint32_t>(payload.size()));
  put_u32(out, record_crc(type, payload.data(), payload.size()));
  out.push_back(type);
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

ScanResult scan_log(const std::filesystem::path& path) {
  ScanResult result;
  std::ifstream in(path, std::ios::binary);
  if (!in) return result;
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  result.file_bytes = data.size();
  std::size_t pos = 0;
  while (data.size() - pos >= kRecordHeaderSize) {
    const std::uint32_t len = get_u32(&data[pos]);
    const std::uint32_t crc = get_u32(&data[pos + 4]);
    const std::uint8_t type = data[pos + 8];
    if (len > kMaxRecordPayload || data.size() - pos - kRecordHeaderSize < len) break;
    const std::uint8_t* payload = &data[pos + kRecordHeaderSize];
    if (record_crc(type, payload, len) != crc) break;
    result.records.push_back({type, std::vector<std::uint8_t>(payload, payload + len)});
    pos += kRecordHeaderSize + len;
  }
  result.valid_bytes = pos;
  return result;
}

RecordLog::RecordLog(std::filesystem::path path) : path_(std::move(path)) {
  auto scan = scan_log(path_);
  recovered_ = std::move(scan.records);
  fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) fail("cannot open log", path_);
  if (scan.torn_tail()) {
    if (::ftruncate(fd_, static_cast<off_t>(scan.valid_bytes)) != 0) fail("cannot truncate", path_);
    ::fsync(fd_);
  }
  size_ = scan.valid_bytes;
  if (::lseek(fd_, static_cast<off_t>(size_), SEEK_SET) < 0) fail("cannot seek", path_);
  fsync_dir(path_.parent_path());
}

RecordLog::~RecordLog() {
  if (fd_ >= 0) ::close(fd_);
}

void RecordLog::append(std::uint8_t type, std::span<const std::uint8_t> payload) {
  if (payload.size() > kMaxRecordPayload) throw StoreIoError("record too large");
  const auto framed = frame_record(type, payload);
  write_all(fd_, framed.data(), framed.size(), path_);
  if (::fdatasync(fd_) != 0) fail("fdatasync failed for", path_);
  size_ += framed.size();
}

void RecordLog::reset() {
  if (::ftruncate(fd_, 0) != 0) fail("cannot truncate", path_);
  if (::lseek(fd_, 0, SEEK_SET) < 0) fail("cannot seek", path_);
  ::fsync(fd_);
  size_ = 0;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) fail("cannot create", tmp);
  try {
    write_all(fd, bytes.data(), bytes.size(), tmp);
  } catch (...) {
    ::close(fd);
    throw;
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    fail("fsync failed for", tmp);
  }
  ::close(fd);
  if (::rename(tmp.c_str(), path.c_str()) != 0) fail("cannot rename onto", path);
  fsync_dir(path.parent_path());
}

}  // namespace adx::store
