#include <doctest.h>

#include "sharecard/config.hpp"
#include "support.hpp"

#include <fstream>

using namespace sharecard;

namespace {

std::string write(const testsupport::TempDir& dir, const std::string& name, const std::string& text)
{
    auto path = dir.file(name);
    std::ofstream(path) << text;
    return path;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("defaults")
{
    auto c = Config::defaults();
    CHECK(c.thresholds.t_content == 0.80);
    CHECK(c.thresholds.t_card == 0.30);
    CHECK(c.limits.max_hops == 10);
    CHECK(c.limits.timeout == std::chrono::seconds(10));
    CHECK(c.limits.max_body == 2u * 1024 * 1024);
    CHECK(c.cache_ttl == std::chrono::hours(24));
    CHECK(c.sdk_token_lifetime == std::chrono::seconds(7200));
    CHECK_FALSE(c.strict_direct);
    CHECK(c.host_comparison == HostComparison::Registrable);
    CHECK(c.persona("crawler").label == PersonaLabel::Crawler);
    CHECK(c.persona("browser").label == PersonaLabel::Browser);
    CHECK(c.profile("twitter-like").tag_precedence
          == std::vector<TagNamespace>{TagNamespace::TwitterCard, TagNamespace::OpenGraph, TagNamespace::HtmlFallback});
    CHECK(c.profile("og-generic").tag_precedence
          == std::vector<TagNamespace>{TagNamespace::OpenGraph, TagNamespace::HtmlFallback});
    CHECK_THROWS_AS(c.persona("nobody"), ConfigError);
    CHECK_THROWS_AS(c.profile("nothing"), ConfigError);
    CHECK(Config::load(std::nullopt).to_json() == c.to_json());
}

TEST_CASE("to_json round trips")
{
    auto c = Config::defaults();
    c.strict_direct = true;
    c.resolve["x.local"] = Endpoint{"127.0.0.1", 9000};
    auto again = Config::from_json(nlohmann::json::parse(c.to_json().dump()));
    CHECK(again.to_json() == c.to_json());
}

TEST_CASE("file overlay merges over defaults")
{
    testsupport::TempDir dir;
    auto path = write(dir, "c.json", R"({"thresholds": {"t_card": 0.5}, "limits": {"max_hops": 3}})");
    auto c = Config::load(path);
    CHECK(c.thresholds.t_card == 0.5);
    CHECK(c.thresholds.t_content == 0.80);
    CHECK(c.limits.max_hops == 3);
    CHECK(c.limits.max_body == 2u * 1024 * 1024);
}

TEST_CASE("fail closed")
{
    testsupport::TempDir dir;
    CHECK_THROWS_AS(Config::load(write(dir, "a.json", R"({"colour": 1})")), ConfigError);
    CHECK_THROWS_AS(Config::load(write(dir, "b.json", R"({"limits": {"hops": 3}})")), ConfigError);
    CHECK_THROWS_AS(Config::load(write(dir, "c.json", R"({"thresholds": {"t_card": 1.5}})")), ConfigError);
    CHECK_THROWS_AS(Config::load(write(dir, "d.json", R"({"thresholds": {"t_content": -0.1}})")), ConfigError);
    CHECK_THROWS_AS(Config::load(write(dir, "e.json", R"({"reputation": ["/no/such/list.txt"]})")), ConfigError);
    CHECK_THROWS_AS(Config::load(write(dir, "f.json", R"({"public_suffix_file": "/no/such/psl.dat"})")),
                    ConfigError);
    CHECK_THROWS_AS(Config::load(write(dir, "g.json", "{not json")), ConfigError);
    CHECK_THROWS_AS(Config::load(write(dir, "h.json", R"({"limits": {"max_hops": 0}})")), ConfigError);
    CHECK_THROWS_AS(Config::load(write(dir, "i.json", R"({"host_comparison": "fuzzy"})")), ConfigError);
    CHECK_THROWS_AS(Config::load(write(dir, "j.json", R"({"scan": {"crawler": "ghost"}})")), ConfigError);
    CHECK_THROWS_AS(Config::load(write(dir, "k.json", R"({"profiles": {"p": {"tag_precedence": []}}})")),
                    ConfigError);
    CHECK_THROWS_AS(
        Config::load(write(dir, "l.json",
                           R"({"profiles": {"p": {"tag_precedence": ["OpenGraph", "OpenGraph"], "crawler_user_agent": "x"}}})")),
        ConfigError);
    CHECK_THROWS_AS(Config::load(write(dir, "m.json", R"({"sdk": {"token_lifetime_s": 0}})")), ConfigError);
    CHECK_THROWS_AS(Config::load(dir.file("missing.json")), ConfigError);
}

TEST_CASE("referenced files that exist are accepted")
{
    testsupport::TempDir dir;
    auto rep = write(dir, "rep.txt", "malicious.local\n");
    auto c = Config::load(write(dir, "c.json", R"({"reputation": [")" + rep + R"("]})"));
    CHECK(c.reputation_files == std::vector<std::string>{rep});
}

TEST_CASE("environment overrides")
{
    std::map<std::string, std::string> env{{"SHARECARD_THRESHOLDS__T_CARD", "0.4"},
                                           {"SHARECARD_STRICT_DIRECT", "true"},
                                           {"SHARECARD_SCAN__PROFILE", "og-generic"},
                                           {"UNRELATED", "1"}};
    auto c = Config::load(std::nullopt, env);
    CHECK(c.thresholds.t_card == 0.4);
    CHECK(c.strict_direct);
    CHECK(c.scan_profile == "og-generic");

    testsupport::TempDir dir;
    auto path = write(dir, "c.json", R"({"thresholds": {"t_card": 0.9}})");
    CHECK(Config::load(path, {{"SHARECARD_THRESHOLDS__T_CARD", "0.2"}}).thresholds.t_card == 0.2);

    CHECK_THROWS_AS(Config::load(std::nullopt, {{"SHARECARD_BOGUS", "1"}}), ConfigError);
    CHECK_THROWS_AS(Config::load(std::nullopt, {{"SHARECARD_THRESHOLDS__T_CARD", "2"}}), ConfigError);
    CHECK_THROWS_AS(Config::load(std::nullopt, {{"SHARECARD_STRICT_DIRECT__X", "1"}}), ConfigError);
}

TEST_CASE("resolve entries")
{
    auto [host, ep] = parse_resolve_entry("Benign.LOCAL=127.0.0.1:8081");
    CHECK(host == "benign.local");
    CHECK(ep.address == "127.0.0.1");
    CHECK(ep.port == 8081);
    CHECK_THROWS_AS(parse_resolve_entry("benign.local"), ConfigError);
    CHECK_THROWS_AS(parse_resolve_entry("benign.local=127.0.0.1"), ConfigError);
    CHECK_THROWS_AS(parse_resolve_entry("benign.local=127.0.0.1:http"), ConfigError);
    CHECK_THROWS_AS(parse_resolve_entry("benign.local=127.0.0.1:70000"), ConfigError);
    auto c = Config::load(std::nullopt, {{"SHARECARD_RESOLVE", R"({"a.local": "127.0.0.1:1234"})"}});
    CHECK(c.resolve.at("a.local").port == 1234);
}

}
