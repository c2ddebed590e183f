#pragma once

// Append-only log of length-prefixed, checksummed records.
//
// Record layout (all integers little-endian):
//   u32 payload_length | u32 crc32(type || payload) | u8 type | payload
//
// A record is either fully valid or ignored: on open, scanning stops at the
// first record whose header or checksum does not verify, and the file is
// truncated back to the end of the last good record.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "adx/common/error.hpp"

namespace adx::store {

class StoreIoError : public IoError {
 public:
  using IoError::IoError;
};

struct LogRecord {
  std::uint8_t type = 0;
  std::vector<std::uint8_t> payload;
};

inline constexpr std::size_t kRecordHeaderSize = 9;
inline constexpr std::uint32_t kMaxRecordPayload = 16u << 20;

struct ScanResult {
  std::vector<LogRecord> records;
  std::uint64_t valid_bytes = 0;
  std::uint64_t file_bytes = 0;
  bool torn_tail() const { return valid_bytes != file_bytes; }
};

// Reads every intact record from the front of a log file. Missing file
// yields an empty result.
ScanResult scan_log(const std::filesystem::path& path);

std::vector<std::uint8_t> frame_record(std::uint8_t type, std::span<const std::uint8_t> payload);

class RecordLog {
 public:
  // Opens (creating if needed) and truncates any torn tail.
  explicit RecordLog(std::filesystem::path path);
  ~RecordLog();
  RecordLog(const RecordLog&) = delete;
  RecordLog& operator=(const RecordLog&) = delete;

  // Records present when the log was opened.
  const std::vector<LogRecord>& recovered() const { return recovered_; }
  void release_recovered() { recovered_.clear(); recovered_.shrink_to_fit(); }

  // Returns after the record is on stable storage.
  void append(std::uint8_t type, std::span<const std::uint8_t> payload);

  // Drops every record (after a snapshot has captured them).
  void reset();

  std::uint64_t size_bytes() const { return size_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  int fd_ = -1;
  std::uint64_t size_ = 0;
  std::vector<LogRecord> recovered_;
};

// Writes a whole file atomically: temp file, fsync, rename, fsync dir.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace adx::store
