#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "smgi/errors.hpp"
#include "smgi/report.hpp"

namespace smgi {

// FNV-1a 64-bit content digest, hex encoded.
inline std::string content_digest(const std::string& content) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : content) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Collects run outputs under one directory and writes a manifest of file
// names and content digests at the end.
class RunWriter {
public:
    explicit RunWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    void write(const std::string& name, const std::string& content) {
        std::ofstream out(dir_ / name, std::ios::binary);
        if (!out) throw ConfigError("cannot write output file '" + (dir_ / name).string() + "'");
        out << content;
        digests_[name] = content_digest(content);
    }

    void write_json(const std::string& name, const Json& j) { write(name, j.dump(2) + "\n"); }

    std::filesystem::path finalize_manifest() {
        Json manifest;
        Json files = Json::object();
        for (const auto& [name, digest] : digests_) files[name] = digest;
        manifest["files"] = files;
        manifest["digest_algorithm"] = "fnv1a64";
        const std::string content = manifest.dump(2) + "\n";
        std::ofstream out(dir_ / "manifest.json", std::ios::binary);
        out << content;
        return dir_ / "manifest.json";
    }

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    std::map<std::string, std::string> digests_;
};

} // namespace smgi
