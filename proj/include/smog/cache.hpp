// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <optional>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <thread>

#include <json.hpp>

#include "smog/error.hpp"
#include "smog/hash.hpp"

namespace smog {

/// String-to-string cache with one JSON file per key. The full key is stored
/// next to the value and compared on read, so hash collisions read as misses.
/// Writes go through a temp file and rename; readers never see partial files.
class DiskCache {
  public:
    explicit DiskCache(std::filesystem::path dir) : dir_(std::move(dir))
    {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw ConfigError("cannot create cache directory " + dir_.string());
    }

    std::optional<std::string> get(std::string_view key) const
    {
        std::shared_lock lock(mutex_);
        std::ifstream in(path_for(key));
        if (!in) return std::nullopt;
        try {
            auto doc = nlohmann::json::parse(in);
            if (doc.at("key").get<std::string>() != key) return std::nullopt;
            return doc.at("value").get<std::string>();
        } catch (const nlohmann::json::exception&) {
            return std::nullopt;
        }
    }

    void put(std::string_view key, std::string_view value) const
    {
        nlohmann::json doc{{"key", key}, {"value", value}};
        const auto target = path_for(key);
        std::ostringstream suffix;
        suffix << ".tmp." << std::this_thread::get_id() << '.' << counter_.fetch_add(1);
        auto tmp = target;
        tmp += suffix.str();
        {
            std::ofstream out(tmp, std::ios::binary);
            if (!out) throw ConfigError("cannot write cache file " + tmp.string());
            out << doc.dump();
        }
        std::unique_lock lock(mutex_);
        std::error_code ec;
        std::filesystem::rename(tmp, target, ec);
        if (ec) std::filesystem::remove(tmp, ec);
    }

    const std::filesystem::path& directory() const { return dir_; }

  private:
    std::filesystem::path path_for(std::string_view key) const
    {
        return dir_ / (hash_hex(key) + ".json");
    }

    std::filesystem::path dir_;
    mutable std::shared_mutex mutex_;
    mutable std::atomic<unsigned long> counter_{0};
};

}  // namespace smog
