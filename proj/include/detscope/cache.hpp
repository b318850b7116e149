#pragma once

#include "detscope/traceform.hpp"

#include <atomic>
#include <functional>
#include <mutex>
#include <optional>
#include <string>

#include "json.hpp"

namespace detscope {

std::string sha256_hex(const std::string& text);

nlohmann::json to_json(const DetValue& v);
DetValue det_value_from_json(const nlohmann::json& j);

// One file per key under `dir`, named by the SHA-256 of the key; the key is stored alongside the value
// and checked on read. Writes go to a temporary file that is then renamed.
class DiskCache final : public ValueStore {
public:
    explicit DiskCache(std::string dir);

    std::optional<DetValue> get(const std::string& key) override;
    void put(const std::string& key, const DetValue& value) override;

    std::optional<nlohmann::json> get_record(const std::string& key);
    void put_record(const std::string& key, const nlohmann::json& value);
    // Cached record, computed and stored on a miss.
    nlohmann::json record(const std::string& key, const std::function<nlohmann::json()>& compute);

    long hits() const { return hits_; }
    long misses() const { return misses_; }
    const std::string& dir() const { return dir_; }

private:
    std::optional<nlohmann::json> read(const std::string& key);
    void write(const std::string& key, const nlohmann::json& value);

    std::string dir_;
    std::atomic<long> hits_{0}, misses_{0};
    std::atomic<long> serial_{0};
};

} // namespace detscope
