#include "sharecard/fetcher.hpp"

#include "sharecard/html.hpp"

#include <httplib.h>
#include <openssl/evp.h>

#include <algorithm>
#include <cctype>

namespace sharecard {

namespace {

bool is_tchar(char c)
{
    if (std::isalnum(static_cast<unsigned char>(c)))
        return true;
    constexpr std::string_view extra = "!#$%&'*+-.^_`|~";
    return extra.find(c) != std::string_view::npos;
}

struct RawResponse {
    int status = 0;
    httplib::Headers headers;
    std::string body;
    bool body_truncated = false;
};

std::optional<std::string> header_value(const httplib::Headers& headers, const std::string& name)
{
    for (const auto& [k, v] : headers) {
        if (to_lower(k) == name)
            return v;
    }
    return std::nullopt;
}

RawResponse request_once(const Url& url, const Persona& persona, const FetchLimits& limits,
                         const FetcherOptions& options, const std::vector<Hop>& partial)
{
    int port = url.effective_port();
    std::map<std::string, std::string> addr_map;
    if (auto it = options.host_overrides.find(url.host()); it != options.host_overrides.end()) {
        port = it->second.port;
        addr_map[url.host()] = it->second.address;
    }

    httplib::Client client(url.scheme() + "://" + url.host() + ":" + std::to_string(port));
    if (!addr_map.empty())
        client.set_hostname_addr_map(addr_map);
    if (options.proxy)
        client.set_proxy(options.proxy->host, options.proxy->port);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(limits.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(limits.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    client.set_follow_location(false);
    client.set_keep_alive(false);

    httplib::Headers headers;
    headers.emplace("Host", url.authority());
    headers.emplace("User-Agent", persona.user_agent);
    for (const auto& [name, value] : persona.extra_headers)
        headers.emplace(name, value);

    RawResponse raw;
    auto res = client.Get(
        url.target(), headers,
        [&](const httplib::Response& r) {
            raw.status = r.status;
            raw.headers = r.headers;
            return true;
        },
        [&](const char* data, std::size_t len) {
            auto room = limits.max_body - std::min(limits.max_body, raw.body.size());
            raw.body.append(data, std::min(room, len));
            if (len > room) {
                raw.body_truncated = true;
                return false;
            }
            return true;
        });
    if (!res && !(res.error() == httplib::Error::Canceled && raw.body_truncated))
        throw NetworkError(url.str() + ": " + httplib::to_string(res.error()), partial);
    return raw;
}

}  // namespace

std::string_view to_string(PersonaLabel label)
{
    switch (label) {
    case PersonaLabel::Crawler:
        return "Crawler";
    case PersonaLabel::Browser:
        return "Browser";
    case PersonaLabel::Custom:
        return "Custom";
    }
    return "Custom";
}

PersonaLabel parse_persona_label(std::string_view text)
{
    auto t = to_lower(text);
    if (t == "crawler")
        return PersonaLabel::Crawler;
    if (t == "browser")
        return PersonaLabel::Browser;
    if (t == "custom")
        return PersonaLabel::Custom;
    throw std::invalid_argument("unknown persona label: " + std::string(text));
}

void Persona::validate() const
{
    if (user_agent.empty())
        throw std::invalid_argument("persona user_agent is empty");
    auto bad_value = [](const std::string& v) { return v.find_first_of("\r\n") != std::string::npos; };
    if (bad_value(user_agent))
        throw std::invalid_argument("persona user_agent contains a line break");
    for (const auto& [name, value] : extra_headers) {
        if (name.empty() || !std::all_of(name.begin(), name.end(), is_tchar))
            throw std::invalid_argument("invalid header name: '" + name + "'");
        if (bad_value(value))
            throw std::invalid_argument("header value for '" + name + "' contains a line break");
    }
}

Persona Persona::twitterbot()
{
    return {PersonaLabel::Crawler, "Twitterbot/1.0", {}};
}

Persona Persona::desktop_browser()
{
    return {PersonaLabel::Browser,
            "Mozilla/5.0 (X11; Linux x86_64) AppleWebKit/537.36 (KHTML, like Gecko) Chrome/124.0 Safari/537.36",
            {{"Accept", "text/html,application/xhtml+xml,application/xml;q=0.9,*/*;q=0.8"}}};
}

std::string_view to_string(HopKind kind)
{
    switch (kind) {
    case HopKind::Http3xx:
        return "Http3xx";
    case HopKind::MetaRefresh:
        return "MetaRefresh";
    case HopKind::Final:
        return "Final";
    }
    return "Final";
}

HopKind parse_hop_kind(std::string_view text)
{
    if (text == "Http3xx")
        return HopKind::Http3xx;
    if (text == "MetaRefresh")
        return HopKind::MetaRefresh;
    if (text == "Final")
        return HopKind::Final;
    throw std::invalid_argument("unknown hop kind: " + std::string(text));
}

bool RedirectChain::well_formed() const
{
    if (hops.empty())
        return false;
    for (std::size_t i = 0; i < hops.size(); ++i) {
        const auto& h = hops[i];
        bool last = i + 1 == hops.size();
        if ((h.kind == HopKind::Final) != !h.location.has_value())
            return false;
        if (h.kind == HopKind::Http3xx && (h.status < 300 || h.status > 399))
            return false;
        if (h.kind == HopKind::MetaRefresh && (h.status < 200 || h.status > 299))
            return false;
        if (last) {
            if (truncated == (h.kind == HopKind::Final))
                return false;
        } else {
            if (h.kind == HopKind::Final || *h.location != hops[i + 1].url)
                return false;
        }
    }
    return true;
}

Fetcher::Fetcher(FetcherOptions options) : options_(std::move(options))
{
    std::map<std::string, Endpoint> lowered;
    for (auto& [host, ep] : options_.host_overrides)
        lowered[to_lower(host)] = ep;
    options_.host_overrides = std::move(lowered);
}

FetchResult Fetcher::fetch(const Url& url, const Persona& persona, const FetchLimits& limits) const
{
    persona.validate();
    if (limits.max_hops < 1)
        throw std::invalid_argument("max_hops must be >= 1");
    if (!url.is_http())
        throw UnsupportedScheme("unsupported scheme: " + url.scheme(), {});

    FetchResult result;
    auto& hops = result.chain.hops;
    Url current = url;
    RawResponse last;
    while (true) {
        auto started = std::chrono::steady_clock::now();
        last = request_once(current, persona, limits, options_, hops);
        Hop hop;
        hop.url = current.str();
        hop.status = last.status;
        hop.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);

        std::optional<Url> next;
        auto resolve_next = [&](const std::string& ref) {
            try {
                next = current.resolve(ref);
            } catch (const UrlError& e) {
                hops.push_back(hop);
                throw NetworkError("bad redirect target from " + current.str() + ": " + e.what(), hops);
            }
        };
        auto content_type = header_value(last.headers, "content-type");
        if (last.status >= 300 && last.status <= 399) {
            if (auto loc = header_value(last.headers, "location"); loc && !loc->empty()) {
                resolve_next(*loc);
                hop.kind = HopKind::Http3xx;
            }
        } else if (last.status >= 200 && last.status <= 299
                   && (!content_type || to_lower(*content_type).find("html") != std::string::npos)) {
            if (auto target = html::meta_refresh_target(last.body)) {
                resolve_next(*target);
                hop.kind = HopKind::MetaRefresh;
            }
        }

        if (!next) {
            hop.kind = HopKind::Final;
            hops.push_back(std::move(hop));
            break;
        }
        hop.location = next->str();
        hops.push_back(std::move(hop));
        if (!next->is_http())
            throw UnsupportedScheme("redirect to unsupported scheme: " + next->scheme(), hops);
        if (static_cast<int>(hops.size()) >= limits.max_hops) {
            result.chain.truncated = true;
            break;
        }
        current = *next;
    }

    result.final_url = hops.back().url;
    result.content_type = header_value(last.headers, "content-type");
    result.body = std::move(last.body);
    result.body_truncated = last.body_truncated;
    result.body_digest = sha256_hex(result.body);
    result.script_redirect = html::has_script_redirect(result.body);
    return result;
}

RedirectChain Fetcher::trace_redirects(const Url& url, const Persona& persona, int max_hops) const
{
    FetchLimits limits;
    limits.max_hops = max_hops;
    return trace_redirects(url, persona, limits);
}

RedirectChain Fetcher::trace_redirects(const Url& url, const Persona& persona, const FetchLimits& limits) const
{
    return fetch(url, persona, limits).chain;
}

std::string sha256_hex(std::string_view bytes)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

}  // namespace sharecard
