#include "sharecard/sdk_emulator.hpp"

#include <openssl/rand.h>

namespace sharecard::sdk {

namespace {

std::string random_hex(std::size_t bytes)
{
    std::string raw(bytes, '\0');
    if (RAND_bytes(reinterpret_cast<unsigned char*>(raw.data()), static_cast<int>(bytes)) != 1)
        throw SdkError("system RNG failure");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned char c : raw) {
        out += hex[c >> 4];
        out += hex[c & 0xF];
    }
    return out;
}

std::string host_of(const std::string& url)
{
    auto u = Url::try_parse(url);
    return u ? u->host() : std::string{};
}

}  // namespace

std::string random_hex_128()
{
    return random_hex(16);
}

std::string_view to_string(ValidationMode m)
{
    return m == ValidationMode::Flawed ? "Flawed" : "Mitigated";
}

ValidationMode parse_validation_mode(std::string_view text)
{
    auto t = to_lower(text);
    if (t == "flawed")
        return ValidationMode::Flawed;
    if (t == "mitigated")
        return ValidationMode::Mitigated;
    throw std::invalid_argument("unknown validation mode: " + std::string(text));
}

SdkPlatform::SdkPlatform(const Clock& clock, SdkOptions options) : clock_(clock), options_(std::move(options)) {}

AppRegistration SdkPlatform::register_app(const std::set<std::string>& registered_domains)
{
    if (registered_domains.empty())
        throw InvalidDomain("at least one secure domain is required");
    AppRegistration app;
    for (const auto& d : registered_domains) {
        auto host = to_lower(d);
        if (host.find("://") != std::string::npos || !is_valid_hostname(host))
            throw InvalidDomain("malformed hostname: '" + d + "'");
        app.registered_domains.insert(host);
    }
    app.app_id = "app" + random_hex(8);
    app.app_secret = random_hex(16);
    std::unique_lock lock(mu_);
    apps_[app.app_id] = app;
    return app;
}

AccessToken SdkPlatform::issue_token(const std::string& app_id, const std::string& app_secret)
{
    std::unique_lock lock(mu_);
    auto it = apps_.find(app_id);
    if (it == apps_.end() || it->second.app_secret != app_secret)
        throw AuthFailed("app id or secret mismatch");
    AccessToken token{random_hex(32), app_id,
                      clock_.now() + std::chrono::duration_cast<TimePoint::duration>(options_.token_lifetime)};
    tokens_[token.token] = token;
    return token;
}

bool SdkPlatform::host_registered(const AppRegistration& app, std::string_view host) const
{
    auto h = to_lower(host);
    if (app.registered_domains.count(h))
        return true;
    if (!options_.registrable_matching)
        return false;
    auto site = PublicSuffixList::bundled().registrable_domain(h);
    return app.registered_domains.count(site) > 0;
}

bool SdkPlatform::validate_config(const std::string& app_id, const Url& page_url) const
{
    std::shared_lock lock(mu_);
    auto it = apps_.find(app_id);
    if (it == apps_.end())
        throw UnknownApp("unknown app: " + app_id);
    return host_registered(it->second, page_url.host());
}

CardOutcome SdkPlatform::create_card(const SdkCardRequest& req, ValidationMode mode, const Fetcher& fetcher) const
{
    AppRegistration app;
    {
        std::shared_lock lock(mu_);
        auto tok = tokens_.find(req.token);
        if (tok == tokens_.end())
            throw AuthFailed("unknown access token");
        if (clock_.now() >= tok->second.expires_at)
            throw TokenExpired("access token expired");
        auto it = apps_.find(tok->second.app_id);
        if (it == apps_.end())
            throw UnknownApp("unknown app: " + tok->second.app_id);
        app = it->second;
    }

    CardOutcome out;
    out.decision.mode = mode;
    auto link = Url::try_parse(req.jump_link);
    if (!link || !link->is_http()) {
        out.decision.reason = "jump_link is not an absolute http(s) URL";
        return out;
    }
    if (!host_registered(app, link->host())) {
        out.decision.reason = "jump_link host " + link->host() + " is not a registered domain";
        return out;
    }

    if (mode == ValidationMode::Mitigated) {
        RedirectChain chain;
        try {
            chain = fetcher.trace_redirects(*link, options_.resolver_persona, options_.limits);
        } catch (const FetchError& e) {
            if (!e.partial_chain().empty())
                out.decision.resolved_final_host = host_of(e.partial_chain().back().url);
            out.decision.reason = std::string("could not resolve jump_link: ") + e.what();
            return out;
        }
        auto final_host = host_of(chain.hops.back().url);
        out.decision.resolved_final_host = final_host;
        if (chain.truncated) {
            out.decision.reason = "redirect chain exceeded " + std::to_string(options_.limits.max_hops) + " hops";
            return out;
        }
        if (!host_registered(app, final_host)) {
            out.decision.reason = "jump_link resolves to unregistered host " + final_host + " after "
                                  + std::to_string(chain.hops.size()) + " hops";
            return out;
        }
    }

    out.decision.accepted = true;
    out.decision.reason = mode == ValidationMode::Flawed ? "jump_link host is registered"
                                                         : "final destination host is registered";
    CardMetadata card;
    card.title = req.title;
    card.description = req.description;
    card.image_url = req.image_url;
    card.canonical_url = link->str();
    card.source = TagNamespace::OpenGraph;
    out.card = std::move(card);
    return out;
}

}  // namespace sharecard::sdk
