#include "sharecard/preview_cache.hpp"

#include <filesystem>
#include <sstream>

namespace sharecard {

namespace {

long long to_ms(TimePoint t)
{
    return std::chrono::duration_cast<Millis>(t.time_since_epoch()).count();
}

TimePoint from_ms(long long ms)
{
    return TimePoint(std::chrono::duration_cast<TimePoint::duration>(Millis(ms)));
}

std::string encode_record(const CacheEntry& e)
{
    nlohmann::ordered_json j;
    j["key"] = e.key;
    j["card"] = card_to_json(e.card);
    j["stored_at_ms"] = to_ms(e.stored_at);
    j["ttl_ms"] = e.ttl.count();
    auto payload = j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
    auto n = static_cast<std::uint32_t>(payload.size());
    std::string out;
    out += static_cast<char>((n >> 24) & 0xFF);
    out += static_cast<char>((n >> 16) & 0xFF);
    out += static_cast<char>((n >> 8) & 0xFF);
    out += static_cast<char>(n & 0xFF);
    return out + payload;
}

}  // namespace

PreviewCache::PreviewCache(const Clock& clock, Millis default_ttl, std::optional<std::string> persistence_path)
    : clock_(clock), default_ttl_(default_ttl), path_(std::move(persistence_path))
{
    if (path_ && path_->empty())
        path_.reset();
    if (path_) {
        replay();
        file_.open(*path_, std::ios::binary | std::ios::app);
        if (!file_)
            throw std::runtime_error("cannot open cache persistence file: " + *path_);
    }
}

PreviewCache::Shard& PreviewCache::shard_for(const std::string& key)
{
    return shards_[std::hash<std::string>{}(key) % kShards];
}

std::shared_ptr<std::mutex> PreviewCache::key_lock(const std::string& key)
{
    auto& shard = shard_for(key);
    std::unique_lock lock(shard.mu);
    auto& slot = shard.key_locks[key];
    if (!slot)
        slot = std::make_shared<std::mutex>();
    return slot;
}

std::optional<CardMetadata> PreviewCache::get(const Url& url)
{
    auto key = cache_key(url);
    auto& shard = shard_for(key);
    auto now = clock_.now();
    {
        std::shared_lock lock(shard.mu);
        auto it = shard.entries.find(key);
        if (it == shard.entries.end())
            return std::nullopt;
        if (it->second.fresh_at(now))
            return it->second.card;
    }
    std::unique_lock lock(shard.mu);
    auto it = shard.entries.find(key);
    if (it != shard.entries.end() && !it->second.fresh_at(now))
        shard.entries.erase(it);
    else if (it != shard.entries.end())
        return it->second.card;
    return std::nullopt;
}

void PreviewCache::store(CacheEntry entry)
{
    auto& shard = shard_for(entry.key);
    {
        std::unique_lock lock(shard.mu);
        shard.entries[entry.key] = entry;
    }
    if (path_)
        append_record(entry);
}

void PreviewCache::put(const Url& url, CardMetadata card, std::optional<Millis> ttl)
{
    CacheEntry e{cache_key(url), std::move(card), clock_.now(), ttl.value_or(default_ttl_)};
    auto guard = key_lock(e.key);
    std::lock_guard lock(*guard);
    store(std::move(e));
}

CardMetadata PreviewCache::recrawl(const Url& url, const Unfurl& unfurl, std::optional<Millis> ttl)
{
    auto key = cache_key(url);
    auto guard = key_lock(key);
    std::lock_guard lock(*guard);
    auto card = unfurl(url);
    store(CacheEntry{key, card, clock_.now(), ttl.value_or(default_ttl_)});
    return card;
}

std::size_t PreviewCache::size() const
{
    std::size_t n = 0;
    for (const auto& shard : shards_) {
        std::shared_lock lock(shard.mu);
        n += shard.entries.size();
    }
    return n;
}

void PreviewCache::append_record(const CacheEntry& entry)
{
    auto rec = encode_record(entry);
    std::lock_guard lock(file_mu_);
    file_.write(rec.data(), static_cast<std::streamsize>(rec.size()));
    file_.flush();
}

void PreviewCache::replay()
{
    std::ifstream in(*path_, std::ios::binary);
    if (!in)
        return;
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string data = ss.str();
    in.close();

    std::size_t pos = 0;
    std::size_t good_end = 0;
    while (pos + 4 <= data.size()) {
        auto b = [&](std::size_t i) { return static_cast<std::uint32_t>(static_cast<unsigned char>(data[pos + i])); };
        std::uint32_t len = (b(0) << 24) | (b(1) << 16) | (b(2) << 8) | b(3);
        if (pos + 4 + len > data.size())
            break;
        try {
            auto j = nlohmann::json::parse(data.substr(pos + 4, len));
            CacheEntry e{j.at("key").get<std::string>(), card_from_json(j.at("card")),
                         from_ms(j.at("stored_at_ms").get<long long>()), Millis(j.at("ttl_ms").get<long long>())};
            shard_for(e.key).entries[e.key] = std::move(e);
        } catch (const std::exception&) {
            break;
        }
        pos += 4 + len;
        good_end = pos;
        ++replayed_;
    }
    if (good_end < data.size())
        std::filesystem::resize_file(*path_, good_end);
}

}  // namespace sharecard
