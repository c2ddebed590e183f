#pragma once

// One-time-pad encryption with a persisted, monotonic cursor.
//
// Both ends hold identical copies of a pad. The byte range is split in two
// halves: the terminal encrypts with [0, n/2) and the server with [n/2, n),
// each advancing its own cursor, so the two directions never share bytes.
// The cursor is written to stable storage before any ciphertext produced
// from the reserved bytes is released; a crash can waste pad bytes but never
// reuse them.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adx/common/error.hpp"

namespace adx::smslink {

class PadExhaustedError : public Error {
 public:
  using Error::Error;
};
class PadError : public Error {
 public:
  using Error::Error;
};

enum class PadRole : std::uint8_t { terminal, server };

std::string_view to_string(PadRole role);
PadRole peer_of(PadRole role);

// Where a pad's cursor lives between process runs.
class CursorStore {
 public:
  virtual ~CursorStore() = default;
  virtual std::optional<std::uint64_t> load() const = 0;
  // Must be durable on return.
  virtual void save(std::uint64_t cursor) = 0;
};

// <dir>/<pad_id>.<role>.cursor, replaced atomically.
class FileCursorStore : public CursorStore {
 public:
  explicit FileCursorStore(std::filesystem::path path) : path_(std::move(path)) {}
  std::optional<std::uint64_t> load() const override;
  void save(std::uint64_t cursor) override;

 private:
  std::filesystem::path path_;
};

// Keeps the cursor in memory; survives a simulated crash as long as the
// object itself is kept alive by the test harness.
class MemoryCursorStore : public CursorStore {
 public:
  std::optional<std::uint64_t> load() const override { return value_; }
  void save(std::uint64_t cursor) override { value_ = cursor; }

 private:
  std::optional<std::uint64_t> value_;
};

class PadFile {
 public:
  using ConsumeObserver = std::function<void(const std::string& pad_id, std::uint64_t offset,
                                             std::size_t length)>;

  PadFile(std::string pad_id, std::shared_ptr<const std::vector<std::uint8_t>> bytes, PadRole role,
          std::shared_ptr<CursorStore> cursor_store);

  // Reads <dir>/<pad_id>.pad with its cursor file alongside.
  static std::shared_ptr<PadFile> open(const std::filesystem::path& dir, const std::string& pad_id,
                                       PadRole role);

  const std::string& pad_id() const { return pad_id_; }
  PadRole role() const { return role_; }
  std::uint64_t size() const { return bytes_->size(); }
  std::uint64_t cursor() const;
  std::uint64_t remaining() const;
  // [begin, end) of the half this role encrypts with.
  std::uint64_t region_begin(PadRole role) const;
  std::uint64_t region_end(PadRole role) const;

  // Claims `length` unused bytes and persists the advanced cursor. Throws
  // PadExhaustedError without consuming anything when too few remain.
  std::uint64_t reserve(std::size_t length);

  // Key bytes at [offset, offset + length). Throws PadError when out of range.
  std::span<const std::uint8_t> key(std::uint64_t offset, std::size_t length) const;

  void set_observer(ConsumeObserver observer) { observer_ = std::move(observer); }

 private:
  std::string pad_id_;
  std::shared_ptr<const std::vector<std::uint8_t>> bytes_;
  PadRole role_;
  std::shared_ptr<CursorStore> cursor_store_;
  mutable std::mutex mu_;
  std::uint64_t cursor_ = 0;
  ConsumeObserver observer_;
};

struct Ciphertext {
  std::vector<std::uint8_t> bytes;
  std::string pad_id;
  std::uint64_t offset = 0;
};

Ciphertext otp_encrypt(PadFile& pad, std::span<const std::uint8_t> plaintext);
std::vector<std::uint8_t> otp_decrypt(const PadFile& pad, std::span<const std::uint8_t> ciphertext,
                                      std::uint64_t offset);

// All pads one party holds, looked up by id; sends use the first pad with
// room left.
class PadBook {
 public:
  void add(std::shared_ptr<PadFile> pad);
  const PadFile* find(const std::string& pad_id) const;
  // Throws PadExhaustedError when no pad can fit `length` bytes.
  PadFile& for_sending(std::size_t length);
  std::uint64_t remaining() const;
  bool empty() const { return pads_.empty(); }

  // Loads every <id>.pad file in dir.
  static PadBook open_dir(const std::filesystem::path& dir, PadRole role);

 private:
  std::vector<std::shared_ptr<PadFile>> pads_;
};

// Writes <out>/terminal/<pad_id>.pad and <out>/server/<pad_id>.pad (identical
// bytes from the system CSPRNG) plus <out>/<pad_id>.meta.json.
void generate_pad_pair(const std::filesystem::path& out, const std::string& pad_id,
                       std::size_t bytes);

}  // namespace adx::smslink
