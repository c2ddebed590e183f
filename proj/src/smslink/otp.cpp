#include "adx/smslink/otp.hpp"

#include <sodium.h>

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "adx/kernels/kernels.hpp"
#include "adx/store/record_log.hpp"

namespace adx::smslink {

std::string_view to_string(PadRole role) { return role == PadRole::terminal ? "terminal" : "server"; }

PadRole peer_of(PadRole role) {
  return role == PadRole::terminal ? PadRole::server : PadRole::terminal;
}

std::optional<std::uint64_t> FileCursorStore::load() const {
  std::ifstream in(path_);
  if (!in) return std::nullopt;
  std::uint64_t v = 0;
  if (!(in >> v)) throw PadError("corrupt cursor file '" + path_.string() + "'");
  return v;
}

void FileCursorStore::save(std::uint64_t cursor) {
  const auto text = std::to_string(cursor) + "\n";
  store::write_file_atomic(path_, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

PadFile::PadFile(std::string pad_id, std::shared_ptr<const std::vector<std::uint8_t>> bytes,
                 PadRole role, std::shared_ptr<CursorStore> cursor_store)
    : pad_id_(std::move(pad_id)),
      bytes_(std::move(bytes)),
      role_(role),
      cursor_store_(std::move(cursor_store)) {
  if (pad_id_.empty() || pad_id_.size() > 32) throw PadError("pad id must be 1..32 bytes");
  cursor_ = cursor_store_->load().value_or(region_begin(role_));
  if (cursor_ < region_begin(role_) || cursor_ > region_end(role_))
    throw PadError("pad cursor outside the role's region for '" + pad_id_ + "'");
}

std::shared_ptr<PadFile> PadFile::open(const std::filesystem::path& dir, const std::string& pad_id,
                                       PadRole role) {
  const auto path = dir / (pad_id + ".pad");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PadError("cannot open pad '" + path.string() + "'");
  auto bytes = std::make_shared<std::vector<std::uint8_t>>((std::istreambuf_iterator<char>(in)),
                                                            std::istreambuf_iterator<char>());
  auto cursor = std::make_shared<FileCursorStore>(
      dir / (pad_id + "." + std::string(to_string(role)) + ".cursor"));
  return std::make_shared<PadFile>(pad_id, std::move(bytes), role, std::move(cursor));
}

std::uint64_t PadFile::cursor() const {
  std::lock_guard lock(mu_);
  return cursor_;
}

std::uint64_t PadFile::remaining() const {
  std::lock_guard lock(mu_);
  return region_end(role_) - cursor_;
}

std::uint64_t PadFile::region_begin(PadRole role) const {
  return role == PadRole::terminal ? 0 : size() / 2;
}

std::uint64_t PadFile::region_end(PadRole role) const {
  return role == PadRole::terminal ? size() / 2 : size();
}

std::uint64_t PadFile::reserve(std::size_t length) {
  std::lock_guard lock(mu_);
  if (region_end(role_) - cursor_ < length)
    throw PadExhaustedError("pad '" + pad_id_ + "' exhausted: " +
                            std::to_string(region_end(role_) - cursor_) + " bytes left, " +
                            std::to_string(length) + " needed");
  const std::uint64_t offset = cursor_;
  cursor_store_->save(offset + length);
  cursor_ = offset + length;
  if (observer_) observer_(pad_id_, offset, length);
  return offset;
}

std::span<const std::uint8_t> PadFile::key(std::uint64_t offset, std::size_t length) const {
  if (offset > size() || size() - offset < length)
    throw PadError("key range outside pad '" + pad_id_ + "'");
  return std::span(*bytes_).subspan(static_cast<std::size_t>(offset), length);
}

Ciphertext otp_encrypt(PadFile& pad, std::span<const std::uint8_t> plaintext) {
  Ciphertext ct;
  ct.pad_id = pad.pad_id();
  ct.offset = pad.reserve(plaintext.size());
  ct.bytes.resize(plaintext.size());
  kernels::xor_bytes(plaintext, pad.key(ct.offset, plaintext.size()), ct.bytes);
  return ct;
}

std::vector<std::uint8_t> otp_decrypt(const PadFile& pad, std::span<const std::uint8_t> ciphertext,
                                      std::uint64_t offset) {
  std::vector<std::uint8_t> out(ciphertext.size());
  kernels::xor_bytes(ciphertext, pad.key(offset, ciphertext.size()), out);
  return out;
}

void PadBook::add(std::shared_ptr<PadFile> pad) {
  if (find(pad->pad_id())) throw PadError("duplicate pad id '" + pad->pad_id() + "'");
  pads_.push_back(std::move(pad));
}

const PadFile* PadBook::find(const std::string& pad_id) const {
  for (const auto& p : pads_)
    if (p->pad_id() == pad_id) return p.get();
  return nullptr;
}

PadFile& PadBook::for_sending(std::size_t length) {
  for (auto& p : pads_)
    if (p->remaining() >= length) return *p;
  throw PadExhaustedError("all pads exhausted; SMS sync halted until new pads are provisioned");
}

std::uint64_t PadBook::remaining() const {
  std::uint64_t total = 0;
  for (const auto& p : pads_) total += p->remaining();
  return total;
}

PadBook PadBook::open_dir(const std::filesystem::path& dir, PadRole role) {
  std::vector<std::string> ids;
  if (std::filesystem::is_directory(dir)) {
    for (const auto& entry : std::filesystem::directory_iterator(dir))
      if (entry.path().extension() == ".pad") ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  PadBook book;
  for (const auto& id : ids) book.add(PadFile::open(dir, id, role));
  return book;
}

void generate_pad_pair(const std::filesystem::path& out, const std::string& pad_id,
                       std::size_t bytes) {
  if (bytes < 2) throw PadError("pad must be at least 2 bytes");
  if (pad_id.empty() || pad_id.size() > 32) throw PadError("pad id must be 1..32 bytes");
  if (sodium_init() < 0) throw PadError("libsodium initialisation failed");
  std::vector<std::uint8_t> pad(bytes);
  randombytes_buf(pad.data(), pad.size());
  for (const char* side : {"terminal", "server"}) {
    std::filesystem::create_directories(out / side);
    store::write_file_atomic(out / side / (pad_id + ".pad"), pad);
  }
  const auto meta = nlohmann::json{{"pad_id", pad_id},
                                   {"bytes", bytes},
                                   {"terminal_region", {0, bytes / 2}},
                                   {"server_region", {bytes / 2, bytes}},
                                   {"source", "libsodium randombytes_buf"}}
                        .dump(2) + "\n";
  store::write_file_atomic(out / (pad_id + ".meta.json"),
                           std::span(reinterpret_cast<const std::uint8_t*>(meta.data()), meta.size()));
}

}  // namespace adx::smslink
