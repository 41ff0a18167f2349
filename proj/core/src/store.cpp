#include "adgen/store.hpp"

#include <chrono>
#include <cctype>
#include <ctime>
#include <fstream>

#include "adgen/errors.hpp"
#include "adgen/hashing.hpp"
#include "adgen/image.hpp"

namespace adgen {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_json(const fs::path& path, const json& j) {
    const std::string body = j.dump(1) + "\n";
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(body.data()), body.size()));
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError("corrupt state file " + path.string() + ": " + e.what());
    }
}

}  // namespace

Store::Store(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    for (const char* sub : {"artifacts", "batches", "collections"}) {
        fs::create_directories(root_ / sub, ec);
        if (ec) throw IoError("cannot create " + (root_ / sub).string() + ": " + ec.message());
    }
    load();
}

void Store::load() {
    std::ifstream in(root_ / "records.jsonl");
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception&) {
            continue;  // torn tail write
        }
        const std::string id = j.value("id", "");
        if (id.empty() || record_index_.count(id)) continue;
        record_index_[id] = records_.size();
        records_.push_back(std::move(j));
    }
    for (const auto& entry : fs::directory_iterator(root_ / "batches")) {
        if (entry.path().extension() != ".json") continue;
        json j = read_json(entry.path());
        const std::string id = j.at("id").get<std::string>();
        batches_[id] = std::move(j);
    }
    for (const auto& entry : fs::directory_iterator(root_ / "collections")) {
        if (entry.path().extension() != ".json") continue;
        json j = read_json(entry.path());
        const std::string name = j.at("name").get<std::string>();
        collections_[name] = std::move(j);
    }
}

std::filesystem::path Store::artifact_path(const std::string& hash) const {
    for (char c : hash) {
        if (!std::isxdigit(static_cast<unsigned char>(c))) throw IoError("malformed artifact hash '" + hash + "'");
    }
    return root_ / "artifacts" / (hash + ".png");
}

std::string Store::put_artifact(std::span<const std::uint8_t> bytes) {
    const std::string hash = sha256_hex(bytes);
    const fs::path path = artifact_path(hash);
    std::lock_guard lock(mutex_);
    if (!fs::exists(path)) write_file_bytes(path, bytes);
    return hash;
}

bool Store::has_artifact(const std::string& hash) const {
    if (hash.empty()) return false;
    return fs::exists(artifact_path(hash));
}

std::vector<std::uint8_t> Store::read_artifact(const std::string& hash) const {
    if (!has_artifact(hash)) throw IoError("unknown artifact " + hash);
    return read_file_bytes(artifact_path(hash));
}

bool Store::append_record(const json& record) {
    const std::string id = record.at("id").get<std::string>();
    std::lock_guard lock(mutex_);
    if (record_index_.count(id)) return false;
    std::ofstream out(root_ / "records.jsonl", std::ios::app | std::ios::binary);
    if (!out) throw IoError("cannot append to " + (root_ / "records.jsonl").string());
    out << record.dump() << '\n';
    out.flush();
    if (!out) throw IoError("write to records.jsonl failed");
    record_index_[id] = records_.size();
    records_.push_back(record);
    return true;
}

std::optional<json> Store::record(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto it = record_index_.find(id);
    if (it == record_index_.end()) return std::nullopt;
    return records_[it->second];
}

std::vector<json> Store::records() const {
    std::lock_guard lock(mutex_);
    return records_;
}

void Store::save_batch(const json& batch) {
    const std::string id = batch.at("id").get<std::string>();
    std::lock_guard lock(mutex_);
    write_json(root_ / "batches" / (id + ".json"), batch);
    batches_[id] = batch;
}

std::optional<json> Store::batch(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto it = batches_.find(id);
    if (it == batches_.end()) return std::nullopt;
    return it->second;
}

std::vector<json> Store::batches() const {
    std::lock_guard lock(mutex_);
    std::vector<json> out;
    for (const auto& [id, b] : batches_) out.push_back(b);
    return out;
}

void Store::save_collection(const json& collection) {
    const std::string name = collection.at("name").get<std::string>();
    std::lock_guard lock(mutex_);
    write_json(root_ / "collections" / (name + ".json"), collection);
    collections_[name] = collection;
}

std::optional<json> Store::collection(const std::string& name) const {
    std::lock_guard lock(mutex_);
    const auto it = collections_.find(name);
    if (it == collections_.end()) return std::nullopt;
    return it->second;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace adgen
