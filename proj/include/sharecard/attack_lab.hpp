#pragma once

#include <json.hpp>

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sharecard/fetcher.hpp"

// Deterministic loopback HTTP servers that stage the two card-forgery
// attacks (crawler-only metadata via User-Agent dispatch, and benign-domain
// short links that bounce elsewhere) plus benign controls.
namespace sharecard::lab {

class InvalidScenario : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class PortBindError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ServeBody {
    int status = 200;
    std::string body;
    std::string content_type = "text/html; charset=utf-8";
};

struct Redirect {
    int status = 302;
    std::string location;
};

/// Body that can be replaced at runtime by POSTing to `mutate_path`.
struct MutableBody {
    std::string initial_body;
    std::string content_type = "text/html; charset=utf-8";
    std::string mutate_path;
};

using RouteAction = std::variant<ServeBody, Redirect, MutableBody>;

struct RouteRule {
    std::string path;
    /// Substring the User-Agent must contain; absent means wildcard.
    std::optional<std::string> ua_contains;
    RouteAction action;
};

struct ServerSpec {
    std::string host_alias;
    std::vector<RouteRule> routes;
};

struct Scenario {
    std::string name;
    std::vector<ServerSpec> servers;

    /// Throws InvalidScenario. Rules for a path are ordered, the first
    /// wildcard ends them, and every UA-conditional path has a wildcard.
    void validate() const;
};

inline constexpr std::string_view kDefaultCrawlerToken = "Twitterbot";

/// Builtins: benign, cloaking, shortlink, mismatch, chain, loop, refresh, mutable.
std::vector<std::string> builtin_names();
/// Throws InvalidScenario for an unknown name.
Scenario builtin_scenario(const std::string& name, std::string_view crawler_token = kDefaultCrawlerToken);

Scenario scenario_from_json(const nlohmann::json& j, const std::string& base_dir = ".");
nlohmann::ordered_json scenario_to_json(const Scenario& s);
Scenario load_scenario_file(const std::string& path);

struct RequestRecord {
    std::string server;  // host alias
    std::string method;
    std::string path;
    std::string user_agent;
};

/// A running scenario. Servers listen on ephemeral 127.0.0.1 ports until
/// stop() or destruction.
class Lab {
public:
    /// Throws InvalidScenario or PortBindError.
    static Lab start(const Scenario& scenario);

    Lab(Lab&&) noexcept;
    Lab& operator=(Lab&&) noexcept;
    ~Lab();

    /// Idempotent.
    void stop();
    bool running() const;

    const std::string& scenario_name() const;
    std::map<std::string, int> ports() const;
    /// Resolver entries for FetcherOptions::host_overrides.
    std::map<std::string, Endpoint> host_overrides() const;
    /// Base URL for an alias, e.g. "http://benign.local".
    static std::string url(const std::string& host_alias, const std::string& path = "/");

    std::vector<RequestRecord> request_log() const;
    void clear_log();

    /// Replaces a MutableBody route's body. Throws std::out_of_range if absent.
    void mutate(const std::string& host_alias, const std::string& path, std::string body);
    std::string current_body(const std::string& host_alias, const std::string& path) const;

private:
    struct State;
    explicit Lab(std::unique_ptr<State> state);
    std::unique_ptr<State> state_;
};

/// Host overrides of several labs merged (later labs win on collisions).
std::map<std::string, Endpoint> merged_overrides(std::initializer_list<const Lab*> labs);

}  // namespace sharecard::lab
