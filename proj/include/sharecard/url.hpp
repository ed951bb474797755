#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sharecard {

class UrlError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Absolute URL split into the components the unfurler needs.
///
/// Scheme and host are stored lowercase. `port` is empty when the URL did
/// not name one; effective_port() fills in the scheme default.
class Url {
public:
    Url() = default;

    /// Parses an absolute URL (scheme + authority). Throws UrlError otherwise.
    static Url parse(std::string_view text);
    static std::optional<Url> try_parse(std::string_view text) noexcept;

    /// RFC 3986 reference resolution with dot-segment removal.
    Url resolve(std::string_view reference) const;

    const std::string& scheme() const { return scheme_; }
    const std::string& host() const { return host_; }
    const std::optional<int>& port() const { return port_; }
    int effective_port() const;
    const std::string& path() const { return path_; }
    const std::optional<std::string>& query() const { return query_; }
    const std::optional<std::string>& fragment() const { return fragment_; }

    bool is_http() const { return scheme_ == "http" || scheme_ == "https"; }
    bool has_default_port() const;

    /// Path plus query; what goes on the request line.
    std::string target() const;
    /// host[:port], port only when non-default.
    std::string authority() const;

    std::string str() const;

    /// Cache key: lowercase scheme and host, default port dropped,
    /// path and query verbatim, fragment dropped, empty path becomes "/".
    std::string normalized() const;

    friend bool operator==(const Url& a, const Url& b) { return a.str() == b.str(); }

private:
    std::string scheme_;
    std::string userinfo_;
    std::string host_;
    std::optional<int> port_;
    std::string path_;
    std::optional<std::string> query_;
    std::optional<std::string> fragment_;
};

std::string to_lower(std::string_view s);

/// Removes "." and ".." segments per RFC 3986 section 5.2.4.
std::string remove_dot_segments(std::string_view path);

/// True for a syntactically valid DNS hostname or IPv4 literal.
bool is_valid_hostname(std::string_view host);

bool is_ip_literal(std::string_view host);

}  // namespace sharecard
