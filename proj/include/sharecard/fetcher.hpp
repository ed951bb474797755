#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sharecard/url.hpp"

namespace sharecard {

enum class PersonaLabel { Crawler, Browser, Custom };

std::string_view to_string(PersonaLabel label);
PersonaLabel parse_persona_label(std::string_view text);

/// A fetch identity: the User-Agent plus any extra request headers.
struct Persona {
    PersonaLabel label = PersonaLabel::Custom;
    std::string user_agent;
    std::vector<std::pair<std::string, std::string>> extra_headers;

    /// Throws std::invalid_argument on an empty UA or a non-token header name.
    void validate() const;

    static Persona twitterbot();
    static Persona desktop_browser();
};

enum class HopKind { Http3xx, MetaRefresh, Final };

std::string_view to_string(HopKind kind);
HopKind parse_hop_kind(std::string_view text);

struct Hop {
    std::string url;
    int status = 0;
    HopKind kind = HopKind::Final;
    std::optional<std::string> location;
    std::chrono::milliseconds elapsed{0};
};

struct RedirectChain {
    std::vector<Hop> hops;
    bool truncated = false;

    /// Checks the Final-hop, linking and status-range invariants.
    bool well_formed() const;
};

struct FetchResult {
    RedirectChain chain;
    std::string final_url;
    std::string body;
    bool body_truncated = false;
    std::string body_digest;  // lowercase hex SHA-256 of `body`
    std::optional<std::string> content_type;
    bool script_redirect = false;  // lexical hint only, never executed
};

struct FetchLimits {
    int max_hops = 10;
    std::chrono::milliseconds timeout{10'000};
    std::size_t max_body = 2 * 1024 * 1024;
};

/// Base for fetch failures; carries the hops completed before the failure.
class FetchError : public std::runtime_error {
public:
    FetchError(const std::string& what, std::vector<Hop> partial)
        : std::runtime_error(what), partial_(std::move(partial))
    {
    }
    const std::vector<Hop>& partial_chain() const { return partial_; }

private:
    std::vector<Hop> partial_;
};

/// DNS, connect, TLS or timeout failure.
class NetworkError : public FetchError {
public:
    using FetchError::FetchError;
};

class UnsupportedScheme : public FetchError {
public:
    using FetchError::FetchError;
};

struct Endpoint {
    std::string address;
    int port = 0;
};

struct ProxySettings {
    std::string host;
    int port = 0;
};

struct FetcherOptions {
    /// Hostname -> loopback endpoint, consulted before system DNS regardless of URL port.
    std::map<std::string, Endpoint> host_overrides;
    std::optional<ProxySettings> proxy;
};

/// Stateless HTTP(S) client that records every redirect hop.
///
/// Follows 3xx Location and HTML meta-refresh redirects. Cookies are not
/// carried between hops. Safe to share across threads.
class Fetcher {
public:
    explicit Fetcher(FetcherOptions options = {});

    FetchResult fetch(const Url& url, const Persona& persona, const FetchLimits& limits = {}) const;
    RedirectChain trace_redirects(const Url& url, const Persona& persona, int max_hops) const;
    RedirectChain trace_redirects(const Url& url, const Persona& persona, const FetchLimits& limits) const;

    const FetcherOptions& options() const { return options_; }

private:
    FetcherOptions options_;
};

std::string sha256_hex(std::string_view bytes);

}  // namespace sharecard
