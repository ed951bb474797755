#pragma once

#include <json.hpp>

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sharecard/card.hpp"
#include "sharecard/clock.hpp"
#include "sharecard/detector.hpp"
#include "sharecard/fetcher.hpp"
#include "sharecard/public_suffix.hpp"

namespace sharecard {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kEnvPrefix = "SHARECARD_";

/// Operator configuration. Loaded fail-closed: unknown keys, out-of-range
/// thresholds and missing referenced files are errors.
///
/// Every key can be overridden from the environment as
/// SHARECARD_<KEY>[__<SUBKEY>...]; values are read as JSON when they parse,
/// plain strings otherwise.
struct Config {
    std::map<std::string, Persona> personas;
    std::map<std::string, PlatformProfile> profiles;
    Thresholds thresholds;
    FetchLimits limits;
    std::vector<std::string> reputation_files;
    Millis cache_ttl = std::chrono::hours(24);
    std::string cache_persistence_path;
    bool strict_direct = false;
    std::optional<ProxySettings> proxy;
    std::map<std::string, Endpoint> resolve;
    HostComparison host_comparison = HostComparison::Registrable;
    std::string public_suffix_file;
    std::string scan_crawler = "crawler";
    std::string scan_browser = "browser";
    std::string scan_profile = "twitter-like";
    std::chrono::seconds sdk_token_lifetime{7200};
    bool sdk_registrable_matching = false;

    static Config defaults();
    static nlohmann::json default_json();

    /// defaults <- file (JSON merge patch) <- environment.
    static Config load(const std::optional<std::string>& path, const std::map<std::string, std::string>& env = {});
    static Config from_json(const nlohmann::json& j);
    nlohmann::ordered_json to_json() const;

    const Persona& persona(const std::string& name) const;
    const PlatformProfile& profile(const std::string& name) const;
};

/// SHARECARD_* variables of the current process.
std::map<std::string, std::string> process_environment();

/// "host=address:port" as used by --resolve.
std::pair<std::string, Endpoint> parse_resolve_entry(const std::string& text);

}  // namespace sharecard
