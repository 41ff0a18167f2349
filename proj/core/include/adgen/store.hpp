#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace adgen {

/// On-disk state of a service instance:
///   artifacts/<sha256>.png   content-addressed rasters
///   records.jsonl            append-only generation records
///   batches/<id>.json        batch state
///   collections/<name>.json  user collections
/// Every method is safe to call from several threads.
class Store {
public:
    explicit Store(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }

    /// Writes the bytes under their SHA-256 unless already present.
    std::string put_artifact(std::span<const std::uint8_t> bytes);
    bool has_artifact(const std::string& hash) const;
    std::filesystem::path artifact_path(const std::string& hash) const;
    /// Throws IoError for unknown hashes.
    std::vector<std::uint8_t> read_artifact(const std::string& hash) const;

    /// Appends a record (an object with an "id"). Returns false, writing
    /// nothing, when the id is already stored.
    bool append_record(const nlohmann::json& record);
    std::optional<nlohmann::json> record(const std::string& id) const;
    /// All records in append order.
    std::vector<nlohmann::json> records() const;

    void save_batch(const nlohmann::json& batch);
    std::optional<nlohmann::json> batch(const std::string& id) const;
    std::vector<nlohmann::json> batches() const;

    void save_collection(const nlohmann::json& collection);
    std::optional<nlohmann::json> collection(const std::string& name) const;

    std::filesystem::path profiles_path() const { return root_ / "profiles.json"; }
    std::filesystem::path tilts_path() const { return root_ / "tilts.json"; }

private:
    void load();

    std::filesystem::path root_;
    mutable std::mutex mutex_;
    std::vector<nlohmann::json> records_;
    std::map<std::string, std::size_t> record_index_;
    std::map<std::string, nlohmann::json> batches_;
    std::map<std::string, nlohmann::json> collections_;
};

/// Current UTC time, ISO 8601 with seconds.
std::string utc_timestamp();

}  // namespace adgen
