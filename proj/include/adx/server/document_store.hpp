#pragma once

// Durable collections of JSON documents keyed by string id.
//
// Each collection is one record log (<dir>/<name>.log); a put appends the
// whole document and the latest copy wins on replay. Reads are served from
// an in-memory index.

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "adx/store/record_log.hpp"

namespace adx::server {

class DocumentStore {
 public:
  explicit DocumentStore(std::filesystem::path dir);

  // Durable on return.
  void put(const std::string& collection, const std::string& id, const std::string& document);
  std::optional<std::string> get(const std::string& collection, const std::string& id) const;
  // Ids in first-insertion order.
  std::vector<std::string> ids(const std::string& collection) const;
  std::size_t size(const std::string& collection) const;

  const std::filesystem::path& dir() const { return dir_; }

 private:
  struct Collection {
    std::unique_ptr<store::RecordLog> log;
    std::map<std::string, std::string> docs;
    std::vector<std::string> order;
  };

  Collection& open_locked(const std::string& name) const;

  std::filesystem::path dir_;
  mutable std::mutex mu_;
  mutable std::map<std::string, Collection> collections_;
};

}  // namespace adx::server
