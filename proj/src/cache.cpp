#include "detscope/cache.hpp"

#include "detscope/config.hpp"
#include "detscope/errors.hpp"

#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace detscope {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(const std::string& text) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

namespace {
json pair(cd z) { return json::array({z.real(), z.imag()}); }
cd unpair(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }
} // namespace

json to_json(const DetValue& v) {
    json ev = json::array();
    for (const cd& e : v.eigenvalues) ev.push_back(pair(e));
    return {{"k", pair(v.k)}, {"d", pair(v.d)}, {"log_d", pair(v.log_d)}, {"rho", v.rho},
            {"phi", v.phi}, {"branch_path", v.branch_path}, {"eigenvalues", ev}};
}

DetValue det_value_from_json(const json& j) {
    DetValue v;
    v.k = unpair(j.at("k"));
    v.d = unpair(j.at("d"));
    v.log_d = unpair(j.at("log_d"));
    v.rho = j.at("rho").get<double>();
    v.phi = j.at("phi").get<double>();
    v.branch_path = j.at("branch_path").get<int>();
    for (const auto& e : j.at("eigenvalues")) v.eigenvalues.push_back(unpair(e));
    return v;
}

DiskCache::DiskCache(std::string dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create cache directory '" + dir_ + "': " + ec.message());
}

std::optional<json> DiskCache::read(const std::string& key) {
    std::ifstream in(fs::path(dir_) / sha256_hex(key));
    if (!in) return std::nullopt;
    try {
        json doc = json::parse(in);
        if (doc.at("key").get<std::string>() != key) return std::nullopt;
        return doc.at("value");
    } catch (const json::exception&) {
        return std::nullopt; // torn or foreign file: recompute
    }
}

void DiskCache::write(const std::string& key, const json& value) {
    const fs::path target = fs::path(dir_) / sha256_hex(key);
    const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid()) + "." + std::to_string(serial_++);
    {
        std::ofstream out(tmp);
        out << dump17(json{{"key", key}, {"value", value}}, 0) << '\n';
        if (!out) throw Error("cannot write cache file " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::optional<DetValue> DiskCache::get(const std::string& key) {
    auto j = read(key);
    if (!j) {
        ++misses_;
        return std::nullopt;
    }
    ++hits_;
    return det_value_from_json(*j);
}

void DiskCache::put(const std::string& key, const DetValue& value) { write(key, to_json(value)); }

std::optional<json> DiskCache::get_record(const std::string& key) { return read(key); }

void DiskCache::put_record(const std::string& key, const json& value) { write(key, value); }

json DiskCache::record(const std::string& key, const std::function<json()>& compute) {
    if (auto hit = read(key)) return *hit;
    json v = compute();
    write(key, v);
    return v;
}

} // namespace detscope
