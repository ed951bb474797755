#include <doctest.h>

#include "support.hpp"

#include <json.hpp>

#include <fstream>
#include <future>
#include <set>

using namespace sharecard;
using namespace sharecard::lab;
using testsupport::fetcher_for;
using testsupport::lab_url;

TEST_SUITE("attack_lab") {

TEST_CASE("builtins validate")
{
    for (const auto& name : builtin_names()) {
        CAPTURE(name);
        CHECK_NOTHROW(builtin_scenario(name).validate());
    }
    CHECK_THROWS_AS(builtin_scenario("nope"), InvalidScenario);
}

TEST_CASE("cloaking scenario shape")
{
    auto s = builtin_scenario("cloaking");
    REQUIRE(s.servers.size() == 2);
    const auto& routes = s.servers[0].routes;
    REQUIRE(routes.size() == 2);
    CHECK(routes[0].ua_contains == "Twitterbot");
    CHECK(std::holds_alternative<ServeBody>(routes[0].action));
    CHECK_FALSE(routes[1].ua_contains);
    const auto& r = std::get<Redirect>(routes[1].action);
    CHECK(r.status == 302);
    CHECK(r.location == "http://malicious.local/payload");
    CHECK(builtin_scenario("cloaking", "Twitter-bot").servers[0].routes[0].ua_contains == "Twitter-bot");
}

TEST_CASE("shortlink scenario shape")
{
    auto s = builtin_scenario("shortlink");
    const auto& jump = s.servers[0].routes[1];
    CHECK(jump.path == "/jump2mal");
    CHECK(std::get<Redirect>(jump.action).location == "http://malicious.local/mal");
    CHECK(s.servers[1].host_alias == "malicious.local");
    CHECK(s.servers[1].routes[0].path == "/mal");
}

TEST_CASE("validation failures")
{
    auto bad = [](Scenario s) { CHECK_THROWS_AS(s.validate(), InvalidScenario); };
    bad({"", {{"a.local", {}}}});
    bad({"x", {}});
    bad({"x", {{"A.local", {}}}});
    bad({"x", {{"a.local", {}}, {"a.local", {}}}});
    bad({"x", {{"a.local", {{"nopath", std::nullopt, ServeBody{}}}}}});
    bad({"x", {{"a.local", {{"/", "Bot", ServeBody{}}}}}});
    bad({"x", {{"a.local", {{"/", std::nullopt, ServeBody{}}, {"/", "Bot", ServeBody{}}}}}});
    bad({"x", {{"a.local", {{"/", std::nullopt, Redirect{200, "/x"}}}}}});
    bad({"x", {{"a.local", {{"/", std::nullopt, MutableBody{"", "text/html", "/"}}}}}});
}

TEST_CASE("UA dispatch and request log")
{
    auto lab = Lab::start(builtin_scenario("cloaking"));
    CHECK(lab.request_log().empty());
    auto fetcher = fetcher_for(lab);
    auto crawler = fetcher.fetch(lab_url("domain.local"), Persona::twitterbot());
    auto log = lab.request_log();
    REQUIRE(log.size() == 1);
    CHECK(log[0].server == "domain.local");
    CHECK(log[0].method == "GET");
    CHECK(log[0].path == "/");
    CHECK(log[0].user_agent == "Twitterbot/1.0");
    CHECK(crawler.chain.hops.size() == 1);

    auto browser = fetcher.fetch(lab_url("domain.local"), Persona::desktop_browser());
    CHECK(browser.final_url == "http://malicious.local/payload");
    CHECK(lab.request_log().size() == 3);
}

TEST_CASE("UA dispatch soundness over random agents")
{
    auto lab = Lab::start(builtin_scenario("cloaking"));
    auto fetcher = fetcher_for(lab);
    const char* agents[] = {"Twitterbot/1.0", "Mozilla/5.0", "xTwitterbotx", "twitterbot", "Slackbot",
                            "Mozilla/5.0 (compatible; Twitterbot/1.0)", "curl/8.0"};
    for (const char* ua : agents) {
        CAPTURE(std::string(ua));
        auto chain = fetcher.trace_redirects(lab_url("domain.local"), Persona{PersonaLabel::Custom, ua, {}}, 1);
        bool crawler = std::string_view(ua).find("Twitterbot") != std::string_view::npos;
        CHECK((chain.hops[0].status == 200) == crawler);
    }
}

TEST_CASE("concurrent fetches are both logged")
{
    auto lab = Lab::start(builtin_scenario("benign"));
    auto fetcher = fetcher_for(lab);
    auto a = std::async(std::launch::async, [&] { return fetcher.fetch(lab_url("benign.local"), Persona::twitterbot()); });
    auto b = std::async(std::launch::async,
                        [&] { return fetcher.fetch(lab_url("benign.local"), Persona::desktop_browser()); });
    a.get();
    b.get();
    auto log = lab.request_log();
    REQUIRE(log.size() == 2);
    std::set<std::string> uas{log[0].user_agent, log[1].user_agent};
    CHECK(uas == std::set<std::string>{Persona::twitterbot().user_agent, Persona::desktop_browser().user_agent});
}

TEST_CASE("responses are deterministic")
{
    std::string first, second;
    for (auto* out : {&first, &second}) {
        auto lab = Lab::start(builtin_scenario("cloaking"));
        auto fetcher = fetcher_for(lab);
        for (const auto& p : {Persona::twitterbot(), Persona::desktop_browser()}) {
            auto r = fetcher.fetch(lab_url("domain.local"), p);
            *out += r.body_digest + r.final_url;
        }
    }
    CHECK(first == second);
}

TEST_CASE("stop is idempotent and fetch after stop fails")
{
    auto lab = Lab::start(builtin_scenario("benign"));
    auto fetcher = fetcher_for(lab);
    CHECK(lab.running());
    lab.stop();
    CHECK_NOTHROW(lab.stop());
    CHECK_FALSE(lab.running());
    FetchLimits limits;
    limits.timeout = std::chrono::milliseconds(500);
    CHECK_THROWS_AS(fetcher.fetch(lab_url("benign.local"), Persona::twitterbot(), limits), NetworkError);

    auto again = Lab::start(builtin_scenario("benign"));
    CHECK(again.request_log().empty());
    CHECK(fetcher_for(again).fetch(lab_url("benign.local"), Persona::twitterbot()).chain.hops.size() == 1);
}

TEST_CASE("unknown path is 404 and mutate replaces the body")
{
    auto lab = Lab::start(builtin_scenario("mutable"));
    auto fetcher = fetcher_for(lab);
    CHECK(fetcher.fetch(lab_url("news.local", "/missing"), Persona::twitterbot()).chain.hops[0].status == 404);
    CHECK(lab.current_body("news.local", "/article").find("Original headline") != std::string::npos);
    lab.mutate("news.local", "/article", "<meta property=\"og:title\" content=\"Changed\">");
    auto r = fetcher.fetch(lab_url("news.local", "/article"), Persona::twitterbot());
    CHECK(r.body == "<meta property=\"og:title\" content=\"Changed\">");
    CHECK_THROWS_AS(lab.mutate("news.local", "/nope", ""), std::out_of_range);
}

TEST_CASE("ports and overrides")
{
    auto lab = Lab::start(builtin_scenario("shortlink"));
    auto ports = lab.ports();
    REQUIRE(ports.size() == 2);
    CHECK(ports.at("benign.local") > 0);
    CHECK(ports.at("benign.local") != ports.at("malicious.local"));
    CHECK(lab.host_overrides().at("malicious.local").address == "127.0.0.1");
    CHECK(Lab::url("benign.local", "/x") == "http://benign.local/x");
    CHECK(lab.scenario_name() == "shortlink");
}

TEST_CASE("scenario files round trip and are strict")
{
    testsupport::TempDir dir;
    for (const auto& name : builtin_names()) {
        auto j = scenario_to_json(builtin_scenario(name));
        auto back = scenario_from_json(nlohmann::json::parse(j.dump()));
        CHECK(scenario_to_json(back) == j);
    }
    {
        std::ofstream(dir.file("page.html")) << "<p>from file</p>";
        std::ofstream(dir.file("s.json")) << R"({"name":"f","servers":[{"host":"f.local","routes":[
            {"path":"/","match":{"ua_contains":"Bot"},"action":{"type":"serve","body_file":"page.html"}},
            {"path":"/","match":"*","action":{"type":"redirect","status":307,"location":"/p"}}]}]})";
    }
    auto s = load_scenario_file(dir.file("s.json"));
    CHECK(std::get<ServeBody>(s.servers[0].routes[0].action).body == "<p>from file</p>");
    CHECK(std::get<Redirect>(s.servers[0].routes[1].action).status == 307);

    CHECK_THROWS_AS(scenario_from_json(nlohmann::json::parse(R"({"name":"x","servers":[],"extra":1})")),
                    InvalidScenario);
    CHECK_THROWS_AS(scenario_from_json(nlohmann::json::parse(
                        R"({"name":"x","servers":[{"host":"a.local","routes":[{"path":"/","action":{"type":"teleport"}}]}]})")),
                    InvalidScenario);
    CHECK_THROWS_AS(load_scenario_file(dir.file("missing.json")), InvalidScenario);
}

}
