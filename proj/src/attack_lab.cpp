#include "sharecard/attack_lab.hpp"

#include <httplib.h>

#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace sharecard::lab {

namespace {

constexpr std::string_view kCloakBenignPage = R"(<!doctype html>
<html lang="en">
<head>
<meta charset="utf-8">
<title>City Library - Summer Reading Program</title>
<meta property="og:title" content="Summer Reading Program 2024">
<meta property="og:description" content="Join the city library summer reading program for kids and adults.">
<meta property="og:image" content="/static/reading.png">
<meta name="twitter:card" content="summary_large_image">
<meta name="twitter:title" content="Summer Reading Program 2024">
<meta name="twitter:description" content="Join the city library summer reading program for kids and adults.">
</head>
<body>
<h1>Summer Reading Program 2024</h1>
<p>Join the city library summer reading program for kids and adults. Sign up at any branch.</p>
</body>
</html>
)";

constexpr std::string_view kPayloadPage = R"(<!doctype html>
<html>
<head><title>Account verification</title></head>
<body>
<h1>Verify your account</h1>
<form action="/collect" method="post">
<p>Your session expired. Enter your password to continue.</p>
<input name="user"><input type="password" name="pw">
</form>
</body>
</html>
)";

constexpr std::string_view kBenignPage = R"(<!doctype html>
<html>
<head>
<meta charset="utf-8">
<title>Benign Login Portal</title>
<meta property="og:title" content="Benign Login Portal">
<meta property="og:description" content="Sign in to the benign portal">
<meta property="og:url" content="http://benign.local/">
<meta name="twitter:card" content="summary">
</head>
<body>
<h1>Benign Login Portal</h1>
<p>Sign in to the benign portal now with your staff account.</p>
</body>
</html>
)";

constexpr std::string_view kSdkIndexPage = R"(<!doctype html>
<html>
<head>
<meta charset="utf-8">
<title>Benign Company News</title>
<meta property="og:title" content="Benign Company News">
<meta property="og:description" content="Quarterly news from the benign company">
<script src="https://res.example/js-sdk.js"></script>
</head>
<body>
<h1>Benign Company News</h1>
<p>Quarterly news from the benign company, straight from the team.</p>
</body>
</html>
)";

constexpr std::string_view kMismatchPage = R"(<!doctype html>
<html>
<head>
<meta charset="utf-8">
<title>Official Bank Security Update</title>
<meta property="og:title" content="Official Bank Security Update">
<meta property="og:description" content="Confirm your online banking details to keep your account safe.">
</head>
<body>
<h1>Cheap replica watches</h1>
<p>Cheap replica watches and handbags. Best prices on luxury goods, free shipping worldwide.</p>
</body>
</html>
)";

std::string simple_page(const std::string& title, const std::string& text)
{
    return "<!doctype html>\n<html><head><title>" + title + "</title>\n<meta property=\"og:title\" content=\"" + title
           + "\"></head>\n<body><h1>" + title + "</h1><p>" + text + "</p></body></html>\n";
}

RouteRule serve(std::string path, std::string_view body, std::optional<std::string> ua = std::nullopt)
{
    return {std::move(path), std::move(ua), ServeBody{200, std::string(body), "text/html; charset=utf-8"}};
}

RouteRule redirect(std::string path, std::string location, int status = 302,
                   std::optional<std::string> ua = std::nullopt)
{
    return {std::move(path), std::move(ua), Redirect{status, std::move(location)}};
}

void check_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed, const std::string& where)
{
    if (!j.is_object())
        throw InvalidScenario(where + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw InvalidScenario(where + ": unknown key '" + key + "'");
    }
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InvalidScenario("cannot read " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

void Scenario::validate() const
{
    if (name.empty())
        throw InvalidScenario("scenario name is empty");
    if (servers.empty())
        throw InvalidScenario("scenario '" + name + "' has no servers");
    std::set<std::string> aliases;
    for (const auto& server : servers) {
        if (!is_valid_hostname(server.host_alias) || server.host_alias != to_lower(server.host_alias))
            throw InvalidScenario("invalid host alias '" + server.host_alias + "'");
        if (!aliases.insert(server.host_alias).second)
            throw InvalidScenario("duplicate host alias '" + server.host_alias + "'");

        std::set<std::string> closed;       // paths whose wildcard was seen
        std::set<std::string> conditional;  // paths with a UA rule
        std::set<std::string> mutate_paths;
        for (const auto& rule : server.routes) {
            if (!rule.path.starts_with('/'))
                throw InvalidScenario(server.host_alias + ": route path must start with '/': " + rule.path);
            if (closed.count(rule.path))
                throw InvalidScenario(server.host_alias + ": rule after wildcard for " + rule.path);
            if (rule.ua_contains) {
                if (rule.ua_contains->empty())
                    throw InvalidScenario(server.host_alias + ": empty ua_contains on " + rule.path);
                conditional.insert(rule.path);
            } else {
                closed.insert(rule.path);
            }
            if (const auto* r = std::get_if<Redirect>(&rule.action)) {
                if (r->status < 300 || r->status > 399 || r->location.empty())
                    throw InvalidScenario(server.host_alias + ": bad redirect on " + rule.path);
            }
            if (const auto* m = std::get_if<MutableBody>(&rule.action)) {
                if (!m->mutate_path.starts_with('/'))
                    throw InvalidScenario(server.host_alias + ": bad mutate_path on " + rule.path);
                mutate_paths.insert(m->mutate_path);
            }
        }
        for (const auto& path : conditional) {
            if (!closed.count(path))
                throw InvalidScenario(server.host_alias + ": UA-conditional path " + path + " has no wildcard fallback");
        }
        for (const auto& path : mutate_paths) {
            if (closed.count(path) || conditional.count(path))
                throw InvalidScenario(server.host_alias + ": mutate_path collides with route " + path);
        }
    }
}

std::vector<std::string> builtin_names()
{
    return {"benign", "cloaking", "shortlink", "mismatch", "chain", "loop", "refresh", "mutable"};
}

Scenario builtin_scenario(const std::string& name, std::string_view crawler_token)
{
    const std::string token(crawler_token);
    if (name == "benign")
        return {"benign", {{"benign.local", {serve("/", kBenignPage)}}}};
    if (name == "cloaking") {
        return {"cloaking",
                {{"domain.local",
                  {serve("/", kCloakBenignPage, token), redirect("/", "http://malicious.local/payload")}},
                 {"malicious.local", {serve("/payload", kPayloadPage)}}}};
    }
    if (name == "shortlink") {
        return {"shortlink",
                {{"benign.local",
                  {serve("/index", kSdkIndexPage), redirect("/jump2mal", "http://malicious.local/mal")}},
                 {"malicious.local", {serve("/mal", kPayloadPage)}}}};
    }
    if (name == "mismatch")
        return {"mismatch", {{"mismatch.local", {serve("/", kMismatchPage)}}}};
    if (name == "chain") {
        return {"chain",
                {{"a.local", {redirect("/start", "http://b.local/next")}},
                 {"b.local", {redirect("/next", "http://c.local/end")}},
                 {"c.local", {serve("/end", simple_page("Chain End", "You reached the end of the chain."))}}}};
    }
    if (name == "loop") {
        return {"loop",
                {{"loop-a.local", {redirect("/", "http://loop-b.local/")}},
                 {"loop-b.local", {redirect("/", "http://loop-a.local/")}}}};
    }
    if (name == "refresh") {
        return {"refresh",
                {{"refresh.local",
                  {serve("/", "<html><head><meta http-equiv=\"refresh\" content=\"0; url=/landing\"></head>"
                              "<body>Redirecting</body></html>\n"),
                   serve("/landing", simple_page("Landing", "Meta refresh landing page."))}}}};
    }
    if (name == "mutable") {
        RouteRule article{"/article", std::nullopt,
                          MutableBody{simple_page("Original headline", "Original article text."),
                                      "text/html; charset=utf-8", "/article/mutate"}};
        return {"mutable", {{"news.local", {article}}}};
    }
    throw InvalidScenario("unknown builtin scenario '" + name + "'");
}

Scenario scenario_from_json(const nlohmann::json& j, const std::string& base_dir)
{
    try {
        check_keys(j, {"name", "servers"}, "scenario");
        Scenario s;
        s.name = j.at("name").get<std::string>();
        for (const auto& sj : j.at("servers")) {
            check_keys(sj, {"host", "routes"}, "server");
            ServerSpec spec;
            spec.host_alias = to_lower(sj.at("host").get<std::string>());
            for (const auto& rj : sj.at("routes")) {
                check_keys(rj, {"path", "match", "action"}, "route");
                RouteRule rule;
                rule.path = rj.at("path").get<std::string>();
                if (rj.contains("match") && !(rj["match"].is_string() && rj["match"] == "*")) {
                    check_keys(rj["match"], {"ua_contains"}, "match");
                    rule.ua_contains = rj["match"].at("ua_contains").get<std::string>();
                }
                const auto& aj = rj.at("action");
                auto type = aj.at("type").get<std::string>();
                auto body = [&]() -> std::string {
                    if (aj.contains("body_file"))
                        return read_file(std::filesystem::path(base_dir) / aj["body_file"].get<std::string>());
                    return aj.value("body", std::string{});
                };
                if (type == "serve") {
                    check_keys(aj, {"type", "status", "body", "body_file", "content_type"}, "serve action");
                    rule.action = ServeBody{aj.value("status", 200), body(),
                                            aj.value("content_type", std::string("text/html; charset=utf-8"))};
                } else if (type == "redirect") {
                    check_keys(aj, {"type", "status", "location"}, "redirect action");
                    rule.action = Redirect{aj.value("status", 302), aj.at("location").get<std::string>()};
                } else if (type == "mutable") {
                    check_keys(aj, {"type", "body", "body_file", "content_type", "mutate_path"}, "mutable action");
                    rule.action = MutableBody{body(), aj.value("content_type", std::string("text/html; charset=utf-8")),
                                              aj.at("mutate_path").get<std::string>()};
                } else {
                    throw InvalidScenario("unknown action type '" + type + "'");
                }
                spec.routes.push_back(std::move(rule));
            }
            s.servers.push_back(std::move(spec));
        }
        s.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidScenario(std::string("malformed scenario: ") + e.what());
    }
}

nlohmann::ordered_json scenario_to_json(const Scenario& s)
{
    nlohmann::ordered_json j;
    j["name"] = s.name;
    j["servers"] = nlohmann::ordered_json::array();
    for (const auto& server : s.servers) {
        nlohmann::ordered_json sj;
        sj["host"] = server.host_alias;
        sj["routes"] = nlohmann::ordered_json::array();
        for (const auto& rule : server.routes) {
            nlohmann::ordered_json rj;
            rj["path"] = rule.path;
            if (rule.ua_contains)
                rj["match"] = {{"ua_contains", *rule.ua_contains}};
            else
                rj["match"] = "*";
            std::visit(
                [&](const auto& a) {
                    using T = std::decay_t<decltype(a)>;
                    if constexpr (std::is_same_v<T, ServeBody>)
                        rj["action"] = {{"type", "serve"}, {"status", a.status}, {"content_type", a.content_type},
                                        {"body", a.body}};
                    else if constexpr (std::is_same_v<T, Redirect>)
                        rj["action"] = {{"type", "redirect"}, {"status", a.status}, {"location", a.location}};
                    else
                        rj["action"] = {{"type", "mutable"}, {"content_type", a.content_type},
                                        {"mutate_path", a.mutate_path}, {"body", a.initial_body}};
                },
                rule.action);
            sj["routes"].push_back(std::move(rj));
        }
        j["servers"].push_back(std::move(sj));
    }
    return j;
}

Scenario load_scenario_file(const std::string& path)
{
    auto text = read_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidScenario(path + ": " + e.what());
    }
    return scenario_from_json(j, std::filesystem::path(path).parent_path().string());
}

struct Lab::State {
    struct Runtime {
        ServerSpec spec;
        httplib::Server server;
        std::thread thread;
        int port = 0;
    };

    std::string name;
    std::vector<std::unique_ptr<Runtime>> servers;
    bool stopped = false;

    mutable std::mutex mu;
    std::vector<RequestRecord> log;
    std::map<std::pair<std::string, std::string>, std::string> mutable_bodies;  // (alias, path) -> body
    std::map<std::pair<std::string, std::string>, std::string> mutate_routes;   // (alias, mutate_path) -> path

    void handle(const Runtime& rt, const httplib::Request& req, httplib::Response& res)
    {
        const auto& alias = rt.spec.host_alias;
        auto ua = req.get_header_value("User-Agent");
        {
            std::lock_guard lock(mu);
            log.push_back({alias, req.method, req.path, ua});
            if (req.method == "POST") {
                if (auto it = mutate_routes.find({alias, req.path}); it != mutate_routes.end()) {
                    mutable_bodies[{alias, it->second}] = req.body;
                    res.status = 204;
                    return;
                }
            }
        }
        for (const auto& rule : rt.spec.routes) {
            if (rule.path != req.path)
                continue;
            if (rule.ua_contains && ua.find(*rule.ua_contains) == std::string::npos)
                continue;
            std::visit(
                [&](const auto& a) {
                    using T = std::decay_t<decltype(a)>;
                    if constexpr (std::is_same_v<T, ServeBody>) {
                        res.status = a.status;
                        res.set_content(a.body, a.content_type);
                    } else if constexpr (std::is_same_v<T, Redirect>) {
                        res.status = a.status;
                        res.set_header("Location", a.location);
                        res.set_content("Redirecting to " + a.location + "\n", "text/plain");
                    } else {
                        std::string body;
                        {
                            std::lock_guard lock(mu);
                            body = mutable_bodies[{alias, rule.path}];
                        }
                        res.status = 200;
                        res.set_content(body, a.content_type);
                    }
                },
                rule.action);
            return;
        }
        res.status = 404;
        res.set_content("not found\n", "text/plain");
    }

    void stop_all()
    {
        if (stopped)
            return;
        stopped = true;
        for (auto& rt : servers)
            rt->server.stop();
        for (auto& rt : servers) {
            if (rt->thread.joinable())
                rt->thread.join();
        }
    }
};

Lab::Lab(std::unique_ptr<State> state) : state_(std::move(state)) {}
Lab::Lab(Lab&&) noexcept = default;
Lab& Lab::operator=(Lab&& other) noexcept
{
    if (this != &other) {
        stop();
        state_ = std::move(other.state_);
    }
    return *this;
}

Lab::~Lab()
{
    stop();
}

Lab Lab::start(const Scenario& scenario)
{
    scenario.validate();
    auto state = std::make_unique<State>();
    state->name = scenario.name;
    for (const auto& spec : scenario.servers) {
        for (const auto& rule : spec.routes) {
            if (const auto* m = std::get_if<MutableBody>(&rule.action)) {
                state->mutable_bodies[{spec.host_alias, rule.path}] = m->initial_body;
                state->mutate_routes[{spec.host_alias, m->mutate_path}] = rule.path;
            }
        }
    }

    for (const auto& spec : scenario.servers) {
        auto rt = std::make_unique<State::Runtime>();
        rt->spec = spec;
        auto* raw_state = state.get();
        auto* raw_rt = rt.get();
        auto handler = [raw_state, raw_rt](const httplib::Request& req, httplib::Response& res) {
            raw_state->handle(*raw_rt, req, res);
        };
        rt->server.Get(".*", handler);
        rt->server.Post(".*", handler);
        rt->server.Put(".*", handler);
        rt->server.Delete(".*", handler);
        rt->server.set_keep_alive_max_count(1);
        rt->port = rt->server.bind_to_any_port("127.0.0.1");
        if (rt->port <= 0) {
            state->stop_all();
            throw PortBindError("cannot bind loopback port for " + spec.host_alias);
        }
        rt->thread = std::thread([raw_rt] { raw_rt->server.listen_after_bind(); });
        state->servers.push_back(std::move(rt));
    }
    for (auto& rt : state->servers)
        rt->server.wait_until_ready();
    return Lab(std::move(state));
}

void Lab::stop()
{
    if (state_)
        state_->stop_all();
}

bool Lab::running() const
{
    return state_ && !state_->stopped;
}

const std::string& Lab::scenario_name() const
{
    return state_->name;
}

std::map<std::string, int> Lab::ports() const
{
    std::map<std::string, int> out;
    for (const auto& rt : state_->servers)
        out[rt->spec.host_alias] = rt->port;
    return out;
}

std::map<std::string, Endpoint> Lab::host_overrides() const
{
    std::map<std::string, Endpoint> out;
    for (const auto& rt : state_->servers)
        out[rt->spec.host_alias] = Endpoint{"127.0.0.1", rt->port};
    return out;
}

std::string Lab::url(const std::string& host_alias, const std::string& path)
{
    return "http://" + host_alias + path;
}

std::vector<RequestRecord> Lab::request_log() const
{
    std::lock_guard lock(state_->mu);
    return state_->log;
}

void Lab::clear_log()
{
    std::lock_guard lock(state_->mu);
    state_->log.clear();
}

void Lab::mutate(const std::string& host_alias, const std::string& path, std::string body)
{
    std::lock_guard lock(state_->mu);
    auto it = state_->mutable_bodies.find({host_alias, path});
    if (it == state_->mutable_bodies.end())
        throw std::out_of_range("no mutable route " + host_alias + path);
    it->second = std::move(body);
}

std::string Lab::current_body(const std::string& host_alias, const std::string& path) const
{
    std::lock_guard lock(state_->mu);
    return state_->mutable_bodies.at({host_alias, path});
}

std::map<std::string, Endpoint> merged_overrides(std::initializer_list<const Lab*> labs)
{
    std::map<std::string, Endpoint> out;
    for (const auto* l : labs) {
        for (auto& [host, ep] : l->host_overrides())
            out[host] = ep;
    }
    return out;
}

}  // namespace sharecard::lab
