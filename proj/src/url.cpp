#include "sharecard/url.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace sharecard {

namespace {

bool is_scheme_char(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
}

std::string_view trim_view(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

// Splits a reference into scheme / authority / path / query / fragment.
struct RefParts {
    std::optional<std::string> scheme;
    std::optional<std::string> authority;
    std::string path;
    std::optional<std::string> query;
    std::optional<std::string> fragment;
};

RefParts split_reference(std::string_view ref)
{
    RefParts out;
    if (auto hash = ref.find('#'); hash != std::string_view::npos) {
        out.fragment = std::string(ref.substr(hash + 1));
        ref = ref.substr(0, hash);
    }
    if (auto q = ref.find('?'); q != std::string_view::npos) {
        out.query = std::string(ref.substr(q + 1));
        ref = ref.substr(0, q);
    }
    if (!ref.empty() && std::isalpha(static_cast<unsigned char>(ref.front()))) {
        std::size_t i = 1;
        while (i < ref.size() && is_scheme_char(ref[i]))
            ++i;
        if (i < ref.size() && ref[i] == ':') {
            out.scheme = to_lower(ref.substr(0, i));
            ref = ref.substr(i + 1);
        }
    }
    if (ref.starts_with("//")) {
        ref.remove_prefix(2);
        auto end = ref.find('/');
        out.authority = std::string(ref.substr(0, end));
        ref = end == std::string_view::npos ? std::string_view{} : ref.substr(end);
    }
    out.path = std::string(ref);
    return out;
}

std::string merge_paths(const std::string& base_path, bool base_has_authority, const std::string& ref_path)
{
    if (base_has_authority && base_path.empty())
        return "/" + ref_path;
    auto slash = base_path.rfind('/');
    if (slash == std::string::npos)
        return ref_path;
    return base_path.substr(0, slash + 1) + ref_path;
}

}  // namespace

std::string to_lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string remove_dot_segments(std::string_view input)
{
    std::string in(input);
    std::string out;
    while (!in.empty()) {
        if (in.starts_with("../")) {
            in.erase(0, 3);
        } else if (in.starts_with("./")) {
            in.erase(0, 2);
        } else if (in.starts_with("/./")) {
            in.erase(0, 2);
        } else if (in == "/.") {
            in = "/";
        } else if (in.starts_with("/../") || in == "/..") {
            in = in == "/.." ? "/" : in.substr(3);
            auto slash = out.rfind('/');
            out.erase(slash == std::string::npos ? 0 : slash);
        } else if (in == "." || in == "..") {
            in.clear();
        } else {
            std::size_t start = in.front() == '/' ? 1 : 0;
            auto next = in.find('/', start);
            auto seg_len = next == std::string::npos ? in.size() : next;
            out += in.substr(0, seg_len);
            in.erase(0, seg_len);
        }
    }
    return out;
}

bool is_ip_literal(std::string_view host)
{
    if (host.starts_with('['))
        return true;
    int dots = 0;
    std::size_t digits = 0;
    for (char c : host) {
        if (c == '.') {
            if (digits == 0)
                return false;
            ++dots;
            digits = 0;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            if (++digits > 3)
                return false;
        } else {
            return false;
        }
    }
    return dots == 3 && digits > 0;
}

bool is_valid_hostname(std::string_view host)
{
    if (host.empty() || host.size() > 253)
        return false;
    if (is_ip_literal(host))
        return !host.starts_with('[');
    std::size_t label = 0;
    for (std::size_t i = 0; i < host.size(); ++i) {
        char c = host[i];
        if (c == '.') {
            if (label == 0 || host[i - 1] == '-')
                return false;
            label = 0;
            continue;
        }
        bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
        if (!ok || (label == 0 && c == '-') || ++label > 63)
            return false;
    }
    return label > 0 && host.back() != '-';
}

Url Url::parse(std::string_view text)
{
    auto parts = split_reference(trim_view(text));
    if (!parts.scheme)
        throw UrlError("URL has no scheme: " + std::string(text));
    if (!parts.authority)
        throw UrlError("URL has no authority: " + std::string(text));

    Url url;
    url.scheme_ = *parts.scheme;
    std::string_view auth = *parts.authority;
    if (auto at = auth.rfind('@'); at != std::string_view::npos) {
        url.userinfo_ = std::string(auth.substr(0, at));
        auth = auth.substr(at + 1);
    }
    std::string_view host = auth;
    std::string_view port;
    if (auth.starts_with('[')) {
        auto close = auth.find(']');
        if (close == std::string_view::npos)
            throw UrlError("unterminated IPv6 literal: " + std::string(text));
        host = auth.substr(0, close + 1);
        auto rest = auth.substr(close + 1);
        if (!rest.empty()) {
            if (rest.front() != ':')
                throw UrlError("garbage after IPv6 literal: " + std::string(text));
            port = rest.substr(1);
        }
    } else if (auto colon = auth.rfind(':'); colon != std::string_view::npos) {
        host = auth.substr(0, colon);
        port = auth.substr(colon + 1);
    }
    if (host.empty())
        throw UrlError("URL has empty host: " + std::string(text));
    for (char c : host) {
        if (std::isspace(static_cast<unsigned char>(c)) || c == '\\' || c == '<' || c == '>')
            throw UrlError("invalid character in host: " + std::string(text));
    }
    url.host_ = to_lower(host);
    if (!port.empty()) {
        int value = 0;
        auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
        if (ec != std::errc{} || ptr != port.data() + port.size() || value < 0 || value > 65535)
            throw UrlError("invalid port: " + std::string(text));
        url.port_ = value;
    }
    url.path_ = remove_dot_segments(parts.path);
    url.query_ = std::move(parts.query);
    url.fragment_ = std::move(parts.fragment);
    return url;
}

std::optional<Url> Url::try_parse(std::string_view text) noexcept
{
    try {
        return parse(text);
    } catch (...) {
        return std::nullopt;
    }
}

Url Url::resolve(std::string_view reference) const
{
    auto ref = split_reference(trim_view(reference));
    if (ref.scheme)
        return parse(trim_view(reference));

    Url out = *this;
    out.fragment_ = ref.fragment;
    if (ref.authority) {
        return parse(scheme_ + "://" + *ref.authority + ref.path + (ref.query ? "?" + *ref.query : "")
                     + (ref.fragment ? "#" + *ref.fragment : ""));
    }
    if (ref.path.empty()) {
        if (ref.query)
            out.query_ = ref.query;
        return out;
    }
    if (ref.path.front() == '/')
        out.path_ = remove_dot_segments(ref.path);
    else
        out.path_ = remove_dot_segments(merge_paths(path_, true, ref.path));
    out.query_ = ref.query;
    return out;
}

int Url::effective_port() const
{
    if (port_)
        return *port_;
    if (scheme_ == "https")
        return 443;
    if (scheme_ == "http")
        return 80;
    return 0;
}

bool Url::has_default_port() const
{
    return !port_ || (scheme_ == "http" && *port_ == 80) || (scheme_ == "https" && *port_ == 443);
}

std::string Url::target() const
{
    std::string t = path_.empty() ? "/" : path_;
    if (query_)
        t += "?" + *query_;
    return t;
}

std::string Url::authority() const
{
    if (has_default_port())
        return host_;
    return host_ + ":" + std::to_string(*port_);
}

std::string Url::str() const
{
    std::string s = scheme_ + "://";
    if (!userinfo_.empty())
        s += userinfo_ + "@";
    s += host_;
    if (port_)
        s += ":" + std::to_string(*port_);
    s += path_;
    if (query_)
        s += "?" + *query_;
    if (fragment_)
        s += "#" + *fragment_;
    return s;
}

std::string Url::normalized() const
{
    std::string s = scheme_ + "://";
    if (!userinfo_.empty())
        s += userinfo_ + "@";
    s += authority();
    s += target();
    return s;
}

}  // namespace sharecard
