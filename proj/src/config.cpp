#include "sharecard/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

extern char** environ;

namespace sharecard {

namespace {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where)
{
    if (!j.is_object())
        throw ConfigError(where + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
T get(const json& j, const char* key, const std::string& where)
{
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

void require_file(const std::string& path, const std::string& what)
{
    if (!std::filesystem::is_regular_file(path))
        throw ConfigError(what + " does not exist: " + path);
}

json env_value(const std::string& text)
{
    try {
        return json::parse(text);
    } catch (const json::exception&) {
        return text;
    }
}

void apply_env(json& doc, const std::map<std::string, std::string>& env)
{
    for (const auto& [name, value] : env) {
        if (!name.starts_with(kEnvPrefix))
            continue;
        auto rest = to_lower(std::string_view(name).substr(kEnvPrefix.size()));
        std::vector<std::string> path;
        std::size_t start = 0;
        while (true) {
            auto sep = rest.find("__", start);
            path.push_back(rest.substr(start, sep == std::string::npos ? std::string::npos : sep - start));
            if (sep == std::string::npos)
                break;
            start = sep + 2;
        }
        json* node = &doc;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            if (!node->is_object())
                throw ConfigError("environment " + name + ": " + path[i] + " is not a section");
            node = &(*node)[path[i]];
            if (node->is_null())
                *node = json::object();
        }
        if (!node->is_object())
            throw ConfigError("environment " + name + ": parent is not a section");
        (*node)[path.back()] = env_value(value);
    }
}

}  // namespace

json Config::default_json()
{
    auto crawler = Persona::twitterbot();
    auto browser = Persona::desktop_browser();
    json headers = json::array();
    for (const auto& [k, v] : browser.extra_headers)
        headers.push_back({k, v});
    return {
        {"personas",
         {{"crawler", {{"label", "Crawler"}, {"user_agent", crawler.user_agent}, {"headers", json::array()}}},
          {"facebook",
           {{"label", "Crawler"}, {"user_agent", "facebookexternalhit/1.1"}, {"headers", json::array()}}},
          {"browser", {{"label", "Browser"}, {"user_agent", browser.user_agent}, {"headers", headers}}}}},
        {"profiles",
         {{"twitter-like",
           {{"tag_precedence", {"TwitterCard", "OpenGraph", "HtmlFallback"}}, {"crawler_user_agent", "Twitterbot/1.0"}}},
          {"og-generic",
           {{"tag_precedence", {"OpenGraph", "HtmlFallback"}}, {"crawler_user_agent", "facebookexternalhit/1.1"}}}}},
        {"thresholds", {{"t_content", 0.80}, {"t_card", 0.30}}},
        {"limits", {{"max_hops", 10}, {"timeout_ms", 10000}, {"max_body", 2 * 1024 * 1024}}},
        {"reputation", json::array()},
        {"cache", {{"ttl_s", 86400}, {"persistence_path", ""}}},
        {"strict_direct", false},
        {"proxy", nullptr},
        {"resolve", json::object()},
        {"host_comparison", "registrable"},
        {"public_suffix_file", ""},
        {"scan", {{"crawler", "crawler"}, {"browser", "browser"}, {"profile", "twitter-like"}}},
        {"sdk", {{"token_lifetime_s", 7200}, {"registrable_matching", false}}},
    };
}

Config Config::defaults()
{
    return from_json(default_json());
}

Config Config::load(const std::optional<std::string>& path, const std::map<std::string, std::string>& env)
{
    json doc = default_json();
    if (path) {
        std::ifstream in(*path);
        if (!in)
            throw ConfigError("cannot open config file: " + *path);
        try {
            doc.merge_patch(json::parse(in));
        } catch (const json::exception& e) {
            throw ConfigError(*path + ": " + e.what());
        }
    }
    apply_env(doc, env);
    return from_json(doc);
}

Config Config::from_json(const json& j)
{
    check_keys(j, {"personas", "profiles", "thresholds", "limits", "reputation", "cache", "strict_direct", "proxy",
                   "resolve", "host_comparison", "public_suffix_file", "scan", "sdk"},
               "config");
    Config c;
    try {
        for (const auto& [name, pj] : j.at("personas").items()) {
            auto where = "personas." + name;
            check_keys(pj, {"label", "user_agent", "headers"}, where);
            Persona p;
            p.label = parse_persona_label(pj.value("label", std::string("Custom")));
            p.user_agent = get<std::string>(pj, "user_agent", where);
            if (pj.contains("headers")) {
                for (const auto& h : pj["headers"]) {
                    if (!h.is_array() || h.size() != 2)
                        throw ConfigError(where + ".headers: expected [name, value] pairs");
                    p.extra_headers.emplace_back(h[0].get<std::string>(), h[1].get<std::string>());
                }
            }
            p.validate();
            c.personas[name] = std::move(p);
        }
        for (const auto& [name, pj] : j.at("profiles").items()) {
            auto where = "profiles." + name;
            check_keys(pj, {"tag_precedence", "crawler_user_agent"}, where);
            PlatformProfile p;
            p.name = name;
            for (const auto& ns : pj.at("tag_precedence"))
                p.tag_precedence.push_back(parse_namespace(ns.get<std::string>()));
            p.crawler_user_agent = get<std::string>(pj, "crawler_user_agent", where);
            p.validate();
            c.profiles[name] = std::move(p);
        }

        const auto& tj = j.at("thresholds");
        check_keys(tj, {"t_content", "t_card"}, "thresholds");
        c.thresholds.t_content = get<double>(tj, "t_content", "thresholds");
        c.thresholds.t_card = get<double>(tj, "t_card", "thresholds");
        c.thresholds.validate();

        const auto& lj = j.at("limits");
        check_keys(lj, {"max_hops", "timeout_ms", "max_body"}, "limits");
        c.limits.max_hops = get<int>(lj, "max_hops", "limits");
        c.limits.timeout = Millis(get<long long>(lj, "timeout_ms", "limits"));
        c.limits.max_body = get<std::size_t>(lj, "max_body", "limits");
        if (c.limits.max_hops < 1 || c.limits.timeout.count() <= 0)
            throw ConfigError("limits: max_hops must be >= 1 and timeout_ms > 0");

        for (const auto& f : j.at("reputation")) {
            auto path = f.get<std::string>();
            require_file(path, "reputation file");
            c.reputation_files.push_back(path);
        }

        const auto& cj = j.at("cache");
        check_keys(cj, {"ttl_s", "persistence_path"}, "cache");
        c.cache_ttl = std::chrono::seconds(get<long long>(cj, "ttl_s", "cache"));
        c.cache_persistence_path = get<std::string>(cj, "persistence_path", "cache");

        c.strict_direct = get<bool>(j, "strict_direct", "config");

        if (const auto& pj = j.at("proxy"); !pj.is_null()) {
            check_keys(pj, {"host", "port"}, "proxy");
            c.proxy = ProxySettings{get<std::string>(pj, "host", "proxy"), get<int>(pj, "port", "proxy")};
        }
        for (const auto& [host, ep] : j.at("resolve").items())
            c.resolve[to_lower(host)] = parse_resolve_entry(host + "=" + ep.get<std::string>()).second;

        auto mode = get<std::string>(j, "host_comparison", "config");
        if (mode == "registrable")
            c.host_comparison = HostComparison::Registrable;
        else if (mode == "exact")
            c.host_comparison = HostComparison::Exact;
        else
            throw ConfigError("host_comparison must be 'registrable' or 'exact'");

        c.public_suffix_file = get<std::string>(j, "public_suffix_file", "config");
        if (!c.public_suffix_file.empty())
            require_file(c.public_suffix_file, "public suffix file");

        const auto& sj = j.at("scan");
        check_keys(sj, {"crawler", "browser", "profile"}, "scan");
        c.scan_crawler = get<std::string>(sj, "crawler", "scan");
        c.scan_browser = get<std::string>(sj, "browser", "scan");
        c.scan_profile = get<std::string>(sj, "profile", "scan");

        const auto& dj = j.at("sdk");
        check_keys(dj, {"token_lifetime_s", "registrable_matching"}, "sdk");
        c.sdk_token_lifetime = std::chrono::seconds(get<long long>(dj, "token_lifetime_s", "sdk"));
        c.sdk_registrable_matching = get<bool>(dj, "registrable_matching", "sdk");
        if (c.sdk_token_lifetime.count() <= 0)
            throw ConfigError("sdk.token_lifetime_s must be positive");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    for (const auto& name : {c.scan_crawler, c.scan_browser}) {
        if (!c.personas.count(name))
            throw ConfigError("scan persona '" + name + "' is not defined");
    }
    if (!c.profiles.count(c.scan_profile))
        throw ConfigError("scan profile '" + c.scan_profile + "' is not defined");
    return c;
}

nlohmann::ordered_json Config::to_json() const
{
    nlohmann::ordered_json j;
    for (const auto& [name, p] : personas) {
        nlohmann::ordered_json headers = nlohmann::ordered_json::array();
        for (const auto& [k, v] : p.extra_headers)
            headers.push_back({k, v});
        j["personas"][name] = {{"label", to_string(p.label)}, {"user_agent", p.user_agent}, {"headers", headers}};
    }
    for (const auto& [name, p] : profiles) {
        nlohmann::ordered_json prec = nlohmann::ordered_json::array();
        for (auto ns : p.tag_precedence)
            prec.push_back(to_string(ns));
        j["profiles"][name] = {{"tag_precedence", prec}, {"crawler_user_agent", p.crawler_user_agent}};
    }
    j["thresholds"] = {{"t_content", thresholds.t_content}, {"t_card", thresholds.t_card}};
    j["limits"] = {{"max_hops", limits.max_hops}, {"timeout_ms", limits.timeout.count()}, {"max_body", limits.max_body}};
    j["reputation"] = reputation_files;
    j["cache"] = {{"ttl_s", std::chrono::duration_cast<std::chrono::seconds>(cache_ttl).count()},
                  {"persistence_path", cache_persistence_path}};
    j["strict_direct"] = strict_direct;
    j["proxy"] = proxy ? nlohmann::ordered_json{{"host", proxy->host}, {"port", proxy->port}} : nullptr;
    j["resolve"] = nlohmann::ordered_json::object();
    for (const auto& [host, ep] : resolve)
        j["resolve"][host] = ep.address + ":" + std::to_string(ep.port);
    j["host_comparison"] = host_comparison == HostComparison::Registrable ? "registrable" : "exact";
    j["public_suffix_file"] = public_suffix_file;
    j["scan"] = {{"crawler", scan_crawler}, {"browser", scan_browser}, {"profile", scan_profile}};
    j["sdk"] = {{"token_lifetime_s", sdk_token_lifetime.count()}, {"registrable_matching", sdk_registrable_matching}};
    return j;
}

const Persona& Config::persona(const std::string& name) const
{
    auto it = personas.find(name);
    if (it == personas.end())
        throw ConfigError("unknown persona '" + name + "'");
    return it->second;
}

const PlatformProfile& Config::profile(const std::string& name) const
{
    auto it = profiles.find(name);
    if (it == profiles.end())
        throw ConfigError("unknown profile '" + name + "'");
    return it->second;
}

std::map<std::string, std::string> process_environment()
{
    std::map<std::string, std::string> env;
    for (char** e = environ; e && *e; ++e) {
        std::string_view kv(*e);
        if (!kv.starts_with(kEnvPrefix))
            continue;
        auto eq = kv.find('=');
        if (eq == std::string_view::npos)
            continue;
        env.emplace(std::string(kv.substr(0, eq)), std::string(kv.substr(eq + 1)));
    }
    return env;
}

std::pair<std::string, Endpoint> parse_resolve_entry(const std::string& text)
{
    auto eq = text.find('=');
    auto colon = text.rfind(':');
    if (eq == std::string::npos || colon == std::string::npos || colon < eq)
        throw ConfigError("resolve entry must look like host=address:port, got '" + text + "'");
    auto host = to_lower(text.substr(0, eq));
    auto address = text.substr(eq + 1, colon - eq - 1);
    int port = 0;
    try {
        port = std::stoi(text.substr(colon + 1));
    } catch (const std::exception&) {
        throw ConfigError("bad port in resolve entry '" + text + "'");
    }
    if (host.empty() || address.empty() || port <= 0 || port > 65535)
        throw ConfigError("bad resolve entry '" + text + "'");
    return {host, Endpoint{address, port}};
}

}  // namespace sharecard
