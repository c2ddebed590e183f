#include "adx/server/document_store.hpp"

#include <cctype>

#include <json.hpp>

namespace adx::server {

namespace {

constexpr std::uint8_t kPut = 1;

bool valid_collection_name(const std::string& name) {
  if (name.empty() || name.size() > 64) return false;
  for (char c : name)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  return true;
}

}  // namespace

DocumentStore::DocumentStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

DocumentStore::Collection& DocumentStore::open_locked(const std::string& name) const {
  auto it = collections_.find(name);
  if (it != collections_.end()) return it->second;
  if (!valid_collection_name(name)) throw Error("invalid collection name '" + name + "'");
  Collection c;
  c.log = std::make_unique<store::RecordLog>(dir_ / (name + ".log"));
  for (const auto& rec : c.log->recovered()) {
    if (rec.type != kPut) continue;
    const auto body = nlohmann::json::from_msgpack(rec.payload);
    auto id = body.at("id").get<std::string>();
    if (!c.docs.contains(id)) c.order.push_back(id);
    c.docs[id] = body.at("doc").get<std::string>();
  }
  c.log->release_recovered();
  return collections_.emplace(name, std::move(c)).first->second;
}

void DocumentStore::put(const std::string& collection, const std::string& id,
                        const std::string& document) {
  std::lock_guard lock(mu_);
  Collection& c = open_locked(collection);
  const auto payload = nlohmann::json::to_msgpack(nlohmann::json{{"id", id}, {"doc", document}});
  c.log->append(kPut, payload);
  if (!c.docs.contains(id)) c.order.push_back(id);
  c.docs[id] = document;
}

std::optional<std::string> DocumentStore::get(const std::string& collection,
                                              const std::string& id) const {
  std::lock_guard lock(mu_);
  const Collection& c = open_locked(collection);
  auto it = c.docs.find(id);
  if (it == c.docs.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> DocumentStore::ids(const std::string& collection) const {
  std::lock_guard lock(mu_);
  return open_locked(collection).order;
}

std::size_t DocumentStore::size(const std::string& collection) const {
  std::lock_guard lock(mu_);
  return open_locked(collection).docs.size();
}

}  // namespace adx::server
