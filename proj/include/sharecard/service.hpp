#pragma once

#include <json.hpp>

#include <memory>
#include <optional>
#include <string>

#include "sharecard/config.hpp"
#include "sharecard/detector.hpp"
#include "sharecard/preview_cache.hpp"
#include "sharecard/report.hpp"
#include "sharecard/sdk_emulator.hpp"

namespace sharecard {

/// Card, chain and digest for one (URL, persona, profile) fetch.
struct UnfurlResult {
    std::string url;
    std::string persona;
    std::string profile;
    CardMetadata card;
    FetchResult fetch;
};

nlohmann::ordered_json unfurl_to_json(const UnfurlResult& r);

/// Everything a CLI command or API request needs, built once from Config.
/// CLI and service both go through here, so their reports match.
class Engine {
public:
    Engine(Config config, const Clock& clock, const std::vector<std::string>& extra_reputation_files = {});

    /// Throws FetchError, ConfigError (unknown persona/profile).
    UnfurlResult unfurl(const Url& url, const std::string& profile_name, const std::string& persona_name) const;
    UnfurlResult unfurl(const Url& url) const;

    DivergenceReport scan(const Url& url, std::optional<bool> strict_direct = std::nullopt) const;
    ScanReport scan_report(const Url& url, std::optional<bool> strict_direct = std::nullopt) const;

    const Config& config() const { return config_; }
    const Fetcher& fetcher() const { return fetcher_; }
    const ReputationList& reputation() const { return reputation_; }
    const Clock& clock() const { return clock_; }

private:
    Config config_;
    const Clock& clock_;
    Fetcher fetcher_;
    ReputationList reputation_;
    std::optional<PublicSuffixList> psl_;
};

/// JSON error body {schema_version, code, message, detail}.
std::string error_body(std::string_view code, std::string_view message,
                       const nlohmann::ordered_json& detail = nullptr);

/// The HTTP API:
///   GET  /v1/health
///   GET  /v1/unfurl?url=&profile=&persona=
///   GET  /v1/scan?url=&strict_direct=
///   POST /v1/recrawl            {"url"}
///   POST /v1/sdk/register       {"registered_domains": [...]}
///   POST /v1/sdk/token          {"app_id", "app_secret"}
///   GET  /v1/sdk/config?app_id=&url=
///   POST /v1/sdk/card?mode=     {"token", "title", "description", "image_url", "jump_link"}
class ApiServer {
public:
    ApiServer(const Engine& engine, sdk::SdkPlatform& sdk, PreviewCache& cache);
    ~ApiServer();
    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Binds; port 0 picks an ephemeral port. Returns the bound port, throws on failure.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    void listen();
    /// bind + listen on a background thread.
    int start_background(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace sharecard
