#include "sharecard/service.hpp"

#include <httplib.h>

#include <thread>

namespace sharecard {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr const char* kJson = "application/json";

std::string dump(const ordered_json& j)
{
    return j.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

ordered_json partial_detail(const FetchError& e)
{
    RedirectChain partial;
    partial.hops = e.partial_chain();
    return {{"partial_chain", chain_to_json(partial, false)}};
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message,
                const ordered_json& detail = nullptr)
{
    res.status = status;
    res.set_content(error_body(code, message, detail), kJson);
}

std::optional<Url> url_param(const httplib::Request& req, httplib::Response& res, const std::string& raw)
{
    auto url = Url::try_parse(raw);
    if (raw.empty() || !url || !url->is_http()) {
        send_error(res, 400, "invalid_url", "parameter 'url' must be an absolute http(s) URL", {{"url", raw}});
        return std::nullopt;
    }
    (void)req;
    return url;
}

std::optional<json> json_body(const httplib::Request& req, httplib::Response& res)
{
    try {
        auto j = json::parse(req.body);
        if (!j.is_object())
            throw std::invalid_argument("body must be a JSON object");
        return j;
    } catch (const std::exception& e) {
        send_error(res, 400, "invalid_body", e.what());
        return std::nullopt;
    }
}

}  // namespace

ordered_json unfurl_to_json(const UnfurlResult& r)
{
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["url"] = r.url;
    j["persona"] = r.persona;
    j["profile"] = r.profile;
    j["card"] = card_to_json(r.card);
    j["final_url"] = r.fetch.final_url;
    j["chain"] = chain_to_json(r.fetch.chain, true);
    j["body_digest"] = r.fetch.body_digest;
    j["content_type"] = r.fetch.content_type ? ordered_json(*r.fetch.content_type) : ordered_json(nullptr);
    j["body_truncated"] = r.fetch.body_truncated;
    j["script_redirect"] = r.fetch.script_redirect;
    return j;
}

Engine::Engine(Config config, const Clock& clock, const std::vector<std::string>& extra_reputation_files)
    : config_(std::move(config)), clock_(clock), fetcher_(FetcherOptions{config_.resolve, config_.proxy})
{
    for (const auto& f : config_.reputation_files)
        reputation_.merge(ReputationList::load_file(f));
    for (const auto& f : extra_reputation_files)
        reputation_.merge(ReputationList::load_file(f));
    if (!config_.public_suffix_file.empty())
        psl_ = PublicSuffixList::load_file(config_.public_suffix_file);
}

UnfurlResult Engine::unfurl(const Url& url, const std::string& profile_name, const std::string& persona_name) const
{
    const auto& profile = config_.profile(profile_name);
    const auto& persona = config_.persona(persona_name);
    UnfurlResult r;
    r.url = url.str();
    r.persona = persona_name;
    r.profile = profile_name;
    r.fetch = fetcher_.fetch(url, persona, config_.limits);
    auto base = Url::try_parse(r.fetch.final_url).value_or(url);
    r.card = resolve_card(extract_tags(r.fetch.body, base), profile, url);
    return r;
}

UnfurlResult Engine::unfurl(const Url& url) const
{
    return unfurl(url, config_.scan_profile, config_.scan_crawler);
}

DivergenceReport Engine::scan(const Url& url, std::optional<bool> strict_direct) const
{
    ScanOptions options;
    options.limits = config_.limits;
    options.host_comparison = config_.host_comparison;
    options.psl = psl_ ? &*psl_ : nullptr;
    options.strict_direct = strict_direct.value_or(config_.strict_direct);
    return differential_scan(fetcher_, url, config_.persona(config_.scan_crawler),
                             config_.persona(config_.scan_browser), config_.profile(config_.scan_profile),
                             reputation_, config_.thresholds, options);
}

ScanReport Engine::scan_report(const Url& url, std::optional<bool> strict_direct) const
{
    return make_scan_report(scan(url, strict_direct), clock_.now());
}

std::string error_body(std::string_view code, std::string_view message, const ordered_json& detail)
{
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["code"] = code;
    j["message"] = message;
    j["detail"] = detail;
    return dump(j);
}

struct ApiServer::Impl {
    const Engine& engine;
    sdk::SdkPlatform& sdk;
    PreviewCache& cache;
    httplib::Server server;
    std::thread thread;

    Impl(const Engine& e, sdk::SdkPlatform& s, PreviewCache& c) : engine(e), sdk(s), cache(c) { routes(); }

    void routes()
    {
        server.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
            ordered_json j{{"schema_version", kSchemaVersion}, {"status", "ok"}, {"version", kToolVersion}};
            res.set_content(dump(j), kJson);
        });

        server.Get("/v1/unfurl", [this](const httplib::Request& req, httplib::Response& res) {
            auto url = url_param(req, res, req.get_param_value("url"));
            if (!url)
                return;
            auto profile = req.has_param("profile") ? req.get_param_value("profile") : engine.config().scan_profile;
            auto persona = req.has_param("persona") ? req.get_param_value("persona") : engine.config().scan_crawler;
            try {
                res.set_content(dump(unfurl_to_json(engine.unfurl(*url, profile, persona))), kJson);
            } catch (const ConfigError& e) {
                send_error(res, 400, "invalid_parameter", e.what());
            } catch (const FetchError& e) {
                send_error(res, 502, "upstream_error", e.what(), partial_detail(e));
            }
        });

        server.Get("/v1/scan", [this](const httplib::Request& req, httplib::Response& res) {
            auto url = url_param(req, res, req.get_param_value("url"));
            if (!url)
                return;
            std::optional<bool> strict;
            if (req.has_param("strict_direct"))
                strict = req.get_param_value("strict_direct") == "true" || req.get_param_value("strict_direct") == "1";
            try {
                res.set_content(serialize_report(engine.scan_report(*url, strict)), kJson);
            } catch (const FetchError& e) {
                send_error(res, 502, "upstream_error", e.what(), partial_detail(e));
            }
        });

        server.Post("/v1/recrawl", [this](const httplib::Request& req, httplib::Response& res) {
            auto body = json_body(req, res);
            if (!body)
                return;
            auto url = url_param(req, res, body->value("url", std::string{}));
            if (!url)
                return;
            try {
                auto card = cache.recrawl(*url, [this](const Url& u) { return engine.unfurl(u).card; });
                ordered_json j{{"schema_version", kSchemaVersion}, {"url", url->str()}, {"card", card_to_json(card)}};
                res.set_content(dump(j), kJson);
            } catch (const FetchError& e) {
                send_error(res, 502, "upstream_error", e.what(), partial_detail(e));
            }
        });

        server.Post("/v1/sdk/register", [this](const httplib::Request& req, httplib::Response& res) {
            auto body = json_body(req, res);
            if (!body)
                return;
            try {
                auto domains = body->at("registered_domains").get<std::set<std::string>>();
                auto app = sdk.register_app(domains);
                ordered_json j{{"schema_version", kSchemaVersion},
                               {"app_id", app.app_id},
                               {"app_secret", app.app_secret},
                               {"registered_domains", app.registered_domains}};
                res.set_content(dump(j), kJson);
            } catch (const sdk::InvalidDomain& e) {
                send_error(res, 400, "invalid_domain", e.what());
            } catch (const json::exception& e) {
                send_error(res, 400, "invalid_body", e.what());
            }
        });

        server.Post("/v1/sdk/token", [this](const httplib::Request& req, httplib::Response& res) {
            auto body = json_body(req, res);
            if (!body)
                return;
            try {
                auto token = sdk.issue_token(body->at("app_id").get<std::string>(),
                                             body->at("app_secret").get<std::string>());
                ordered_json j{{"schema_version", kSchemaVersion},
                               {"token", token.token},
                               {"app_id", token.app_id},
                               {"expires_at", format_rfc3339(token.expires_at)}};
                res.set_content(dump(j), kJson);
            } catch (const sdk::AuthFailed& e) {
                send_error(res, 401, "auth_failed", e.what());
            } catch (const json::exception& e) {
                send_error(res, 400, "invalid_body", e.what());
            }
        });

        server.Get("/v1/sdk/config", [this](const httplib::Request& req, httplib::Response& res) {
            auto url = url_param(req, res, req.get_param_value("url"));
            if (!url)
                return;
            try {
                bool ok = sdk.validate_config(req.get_param_value("app_id"), *url);
                res.set_content(dump({{"schema_version", kSchemaVersion}, {"valid", ok}}), kJson);
            } catch (const sdk::UnknownApp& e) {
                send_error(res, 404, "unknown_app", e.what());
            }
        });

        server.Post("/v1/sdk/card", [this](const httplib::Request& req, httplib::Response& res) {
            sdk::ValidationMode mode;
            try {
                mode = sdk::parse_validation_mode(req.has_param("mode") ? req.get_param_value("mode") : "flawed");
            } catch (const std::invalid_argument& e) {
                send_error(res, 400, "invalid_parameter", e.what());
                return;
            }
            auto body = json_body(req, res);
            if (!body)
                return;
            try {
                sdk::SdkCardRequest card_req;
                card_req.token = body->at("token").get<std::string>();
                card_req.title = body->value("title", std::string{});
                card_req.description = body->value("description", std::string{});
                if (body->contains("image_url") && !(*body)["image_url"].is_null())
                    card_req.image_url = (*body)["image_url"].get<std::string>();
                card_req.jump_link = body->at("jump_link").get<std::string>();

                auto outcome = sdk.create_card(card_req, mode, engine.fetcher());
                ordered_json decision;
                decision["accepted"] = outcome.decision.accepted;
                decision["mode"] = to_string(outcome.decision.mode);
                decision["reason"] = outcome.decision.reason;
                decision["resolved_final_host"] = outcome.decision.resolved_final_host
                                                      ? ordered_json(*outcome.decision.resolved_final_host)
                                                      : ordered_json(nullptr);
                ordered_json j;
                j["schema_version"] = kSchemaVersion;
                j["decision"] = std::move(decision);
                j["card"] = outcome.card ? card_to_json(*outcome.card) : ordered_json(nullptr);
                if (outcome.card)
                    j["snippet"] = render_card(*outcome.card).snippet;
                res.set_content(dump(j), kJson);
            } catch (const sdk::TokenExpired& e) {
                send_error(res, 401, "token_expired", e.what());
            } catch (const sdk::AuthFailed& e) {
                send_error(res, 401, "auth_failed", e.what());
            } catch (const sdk::UnknownApp& e) {
                send_error(res, 404, "unknown_app", e.what());
            } catch (const json::exception& e) {
                send_error(res, 400, "invalid_body", e.what());
            }
        });

        server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            std::string what = "unexpected error";
            try {
                std::rethrow_exception(ep);
            } catch (const std::exception& e) {
                what = e.what();
            } catch (...) {
            }
            send_error(res, 500, "internal_error", what);
        });
        server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
            if (res.body.empty())
                res.set_content(error_body(res.status == 404 ? "not_found" : "http_error",
                                           "no handler for " + req.method + " " + req.path),
                                kJson);
        });
    }
};

ApiServer::ApiServer(const Engine& engine, sdk::SdkPlatform& sdk, PreviewCache& cache)
    : impl_(std::make_unique<Impl>(engine, sdk, cache))
{
}

ApiServer::~ApiServer()
{
    stop();
}

int ApiServer::bind(const std::string& host, int port)
{
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound <= 0)
        throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    return bound;
}

void ApiServer::listen()
{
    impl_->server.listen_after_bind();
}

int ApiServer::start_background(const std::string& host, int port)
{
    int bound = bind(host, port);
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void ApiServer::stop()
{
    impl_->server.stop();
    if (impl_->thread.joinable())
        impl_->thread.join();
}

}  // namespace sharecard
