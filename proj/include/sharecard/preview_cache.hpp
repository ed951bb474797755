#pragma once

#include <array>
#include <chrono>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include "sharecard/card.hpp"
#include "sharecard/clock.hpp"

namespace sharecard {

struct CacheEntry {
    std::string key;
    CardMetadata card;
    TimePoint stored_at;
    Millis ttl{0};

    bool fresh_at(TimePoint now) const { return now < stored_at + ttl; }
};

/// URL-keyed card cache with TTL, recrawl, and an optional append-only
/// persistence file.
///
/// Persistence records are a 4-byte big-endian length followed by a JSON
/// object {key, card, stored_at_ms, ttl_ms}. Replay stops at the first
/// corrupt record and the file is cut back to the last good one.
class PreviewCache {
public:
    using Unfurl = std::function<CardMetadata(const Url&)>;

    static constexpr Millis kDefaultTtl = std::chrono::hours(24);

    explicit PreviewCache(const Clock& clock, Millis default_ttl = kDefaultTtl,
                          std::optional<std::string> persistence_path = std::nullopt);

    /// Fresh card or nullopt; an expired entry is evicted on the way out.
    std::optional<CardMetadata> get(const Url& url);
    void put(const Url& url, CardMetadata card, std::optional<Millis> ttl = std::nullopt);

    /// Always refetches through `unfurl` and replaces the entry. If unfurl
    /// throws, the previous entry is left as it was and the exception propagates.
    CardMetadata recrawl(const Url& url, const Unfurl& unfurl, std::optional<Millis> ttl = std::nullopt);

    std::size_t size() const;
    std::size_t replayed_records() const { return replayed_; }

    static std::string cache_key(const Url& url) { return url.normalized(); }

private:
    struct Shard {
        mutable std::shared_mutex mu;
        std::map<std::string, CacheEntry> entries;
        std::map<std::string, std::shared_ptr<std::mutex>> key_locks;
    };
    static constexpr std::size_t kShards = 16;

    Shard& shard_for(const std::string& key);
    std::shared_ptr<std::mutex> key_lock(const std::string& key);
    void store(CacheEntry entry);
    void replay();
    void append_record(const CacheEntry& entry);

    const Clock& clock_;
    Millis default_ttl_;
    std::optional<std::string> path_;
    std::array<Shard, kShards> shards_;
    std::mutex file_mu_;
    std::ofstream file_;
    std::size_t replayed_ = 0;
};

}  // namespace sharecard
