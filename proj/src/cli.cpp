#include "sharecard/cli.hpp"

#include "sharecard/attack_lab.hpp"
#include "sharecard/service.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <thread>

namespace sharecard::cli {

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int)
{
    g_stop = true;
}

class SignalScope {
public:
    SignalScope()
    {
        g_stop = false;
        prev_int_ = std::signal(SIGINT, on_signal);
        prev_term_ = std::signal(SIGTERM, on_signal);
    }
    ~SignalScope()
    {
        std::signal(SIGINT, prev_int_);
        std::signal(SIGTERM, prev_term_);
    }

private:
    void (*prev_int_)(int);
    void (*prev_term_)(int);
};

void wait_for_stop(long long for_ms)
{
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(for_ms);
    while (!g_stop) {
        if (for_ms > 0 && std::chrono::steady_clock::now() >= deadline)
            break;
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
}

struct GlobalOptions {
    std::string config_path;
    std::vector<std::string> reputation;
    std::vector<std::string> resolve;
    std::string pin_clock;
    bool json = false;
};

void print_chain(std::ostream& out, const RedirectChain& chain)
{
    for (std::size_t i = 0; i < chain.hops.size(); ++i) {
        const auto& h = chain.hops[i];
        out << "  [" << i << "] " << h.status << " " << to_string(h.kind) << " " << h.url;
        if (h.location)
            out << " -> " << *h.location;
        out << " (" << h.elapsed.count() << " ms)\n";
    }
    if (chain.truncated)
        out << "  (chain truncated at hop limit)\n";
}

void print_scan_summary(std::ostream& out, const ScanReport& report)
{
    const auto& r = report.payload;
    out << "url:                   " << r.url << "\n"
        << "verdict:               " << to_string(r.verdict) << (r.partial ? " (partial)" : "") << "\n"
        << "final_host_mismatch:   " << (r.final_host_mismatch ? "true" : "false") << "\n"
        << "metadata_similarity:   " << r.metadata_similarity << "\n"
        << "content_similarity:    " << r.content_similarity << "\n"
        << "card_page_consistency: " << r.card_page_consistency
        << (r.consistency_insufficient_data ? " (insufficient data)" : "") << "\n"
        << "direct_link:           " << (r.direct_link ? "true" : "false") << "\n";
    for (const auto* view : {&r.crawler_view, &r.browser_view}) {
        out << (view == &r.crawler_view ? "crawler view:" : "browser view:");
        if (!view->available) {
            out << " unavailable: " << view->error.value_or("") << "\n";
            continue;
        }
        out << " " << view->final_url << "\n";
        print_chain(out, view->chain);
    }
    for (const auto& f : r.chain_flags) {
        if (f.finding.finding != Finding::Unknown)
            out << "reputation: " << to_string(f.view) << " hop " << f.finding.hop_index << " " << f.finding.host
                << " " << to_string(f.finding.finding) << "\n";
    }
}

Config load_config(const GlobalOptions& g, const std::map<std::string, std::string>& env)
{
    auto config = Config::load(g.config_path.empty() ? std::nullopt : std::optional(g.config_path), env);
    for (const auto& entry : g.resolve) {
        auto [host, ep] = parse_resolve_entry(entry);
        config.resolve[host] = ep;
    }
    return config;
}

}  // namespace

void request_stop()
{
    g_stop = true;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::map<std::string, std::string>& env)
{
    CLI::App app{"Sharing-card unfurler and card-forgery scanner", "sharecard"};
    app.require_subcommand(1);
    GlobalOptions g;
    app.add_option("--config", g.config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--reputation", g.reputation, "Reputation list file (repeatable)")->check(CLI::ExistingFile);
    app.add_option("--resolve", g.resolve, "Host override host=address:port (repeatable)");
    app.add_option("--pin-clock", g.pin_clock, "Fixed RFC 3339 time used for report timestamps");
    app.add_flag("--json", g.json, "Machine-readable output");

    std::string url_arg, profile, persona, report_path;
    bool strict_direct = false;
    auto* unfurl = app.add_subcommand("unfurl", "Fetch a URL as a platform crawler and render its card");
    unfurl->add_option("url", url_arg, "URL to unfurl")->required();
    unfurl->add_option("--profile", profile, "Platform profile");
    unfurl->add_option("--persona", persona, "Fetch persona");

    auto* scan = app.add_subcommand("scan", "Differential crawler/browser scan for card forgery");
    scan->add_option("url", url_arg, "URL to scan")->required();
    scan->add_option("--report", report_path, "Write the JSON report here");
    scan->add_flag("--strict-direct", strict_direct, "Require a direct link without redirects");

    std::string scenario_arg, crawler_token{lab::kDefaultCrawlerToken};
    long long for_ms = 0;
    auto* labcmd = app.add_subcommand("lab", "Run an attack-lab scenario in the foreground");
    labcmd->add_option("scenario", scenario_arg, "Builtin scenario name or scenario file")->required();
    labcmd->add_option("--crawler-token", crawler_token, "UA substring the cloaking server treats as a crawler");
    labcmd->add_option("--for-ms", for_ms, "Stop after this many milliseconds (0 = until SIGINT)");

    std::string bind_addr = "127.0.0.1:8080";
    auto* serve = app.add_subcommand("serve", "Run the HTTP API");
    serve->add_option("--bind", bind_addr, "host:port to listen on");
    serve->add_option("--for-ms", for_ms, "Stop after this many milliseconds (0 = until SIGINT)");

    auto* cache = app.add_subcommand("cache", "Preview cache maintenance");
    cache->require_subcommand(1);
    auto* recrawl = cache->add_subcommand("recrawl", "Refetch a URL and replace its cached card");
    recrawl->add_option("url", url_arg, "URL to recrawl")->required();

    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    try {
        app.parse(argv_rev);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }

    try {
        auto config = load_config(g, env);
        std::unique_ptr<Clock> clock;
        if (!g.pin_clock.empty())
            clock = std::make_unique<ManualClock>(parse_rfc3339(g.pin_clock));
        else
            clock = std::make_unique<SystemClock>();

        auto parse_target = [&]() -> std::optional<Url> {
            auto u = Url::try_parse(url_arg);
            if (!u || !u->is_http()) {
                err << "error: not an absolute http(s) URL: " << url_arg << "\n";
                return std::nullopt;
            }
            return u;
        };

        if (unfurl->parsed()) {
            auto url = parse_target();
            if (!url)
                return kExitError;
            Engine engine(config, *clock, g.reputation);
            auto result = engine.unfurl(*url, profile.empty() ? config.scan_profile : profile,
                                        persona.empty() ? config.scan_crawler : persona);
            if (g.json) {
                out << unfurl_to_json(result).dump(2, ' ', false, nlohmann::json::error_handler_t::replace) << "\n";
            } else {
                auto rendered = render_card(result.card);
                out << rendered.snippet << "record: " << rendered.record << "\nchain:\n";
                print_chain(out, result.fetch.chain);
                out << "body_digest: " << result.fetch.body_digest << "\n";
            }
            return 0;
        }

        if (scan->parsed()) {
            auto url = parse_target();
            if (!url)
                return kExitError;
            Engine engine(config, *clock, g.reputation);
            auto report = engine.scan_report(*url, strict_direct ? std::optional(true) : std::nullopt);
            auto bytes = serialize_report(report);
            if (!report_path.empty()) {
                std::ofstream f(report_path, std::ios::binary | std::ios::trunc);
                if (!f) {
                    err << "error: cannot write report " << report_path << "\n";
                    return kExitError;
                }
                f << bytes;
            }
            if (g.json)
                out << bytes;
            else
                print_scan_summary(out, report);
            return exit_code_for(report.payload.verdict);
        }

        if (labcmd->parsed()) {
            lab::Scenario scenario;
            auto names = lab::builtin_names();
            if (std::find(names.begin(), names.end(), scenario_arg) != names.end()) {
                scenario = lab::builtin_scenario(scenario_arg, crawler_token);
            } else if (std::filesystem::is_regular_file(scenario_arg)) {
                scenario = lab::load_scenario_file(scenario_arg);
            } else {
                err << "error: unknown scenario '" << scenario_arg << "'\n";
                return kExitError;
            }
            SignalScope signals;
            auto running = lab::Lab::start(scenario);
            if (g.json) {
                nlohmann::ordered_json j{{"scenario", scenario.name}, {"ports", running.ports()}};
                out << j.dump() << "\n";
            } else {
                out << "scenario " << scenario.name << " (" << running.ports().size() << " servers)\n";
                for (const auto& [alias, port] : running.ports())
                    out << "  " << alias << " -> 127.0.0.1:" << port << "   --resolve " << alias << "=127.0.0.1:"
                        << port << "\n";
            }
            out.flush();
            wait_for_stop(for_ms);
            running.stop();
            out << "lab stopped\n";
            return 0;
        }

        if (serve->parsed()) {
            auto colon = bind_addr.rfind(':');
            if (colon == std::string::npos) {
                err << "error: --bind expects host:port\n";
                return kExitError;
            }
            auto host = bind_addr.substr(0, colon);
            int port = std::stoi(bind_addr.substr(colon + 1));
            Engine engine(config, *clock, g.reputation);
            sdk::SdkOptions sdk_options;
            sdk_options.token_lifetime = config.sdk_token_lifetime;
            sdk_options.registrable_matching = config.sdk_registrable_matching;
            sdk_options.resolver_persona = config.persona(config.scan_browser);
            sdk_options.limits = config.limits;
            sdk::SdkPlatform platform(*clock, sdk_options);
            PreviewCache preview_cache(*clock, config.cache_ttl,
                                       config.cache_persistence_path.empty()
                                           ? std::nullopt
                                           : std::optional(config.cache_persistence_path));
            SignalScope signals;
            ApiServer server(engine, platform, preview_cache);
            int bound = server.start_background(host, port);
            out << "listening on " << host << ":" << bound << "\n";
            out.flush();
            wait_for_stop(for_ms);
            server.stop();
            return 0;
        }

        if (recrawl->parsed()) {
            auto url = parse_target();
            if (!url)
                return kExitError;
            Engine engine(config, *clock, g.reputation);
            PreviewCache preview_cache(*clock, config.cache_ttl,
                                       config.cache_persistence_path.empty()
                                           ? std::nullopt
                                           : std::optional(config.cache_persistence_path));
            auto card = preview_cache.recrawl(*url, [&](const Url& u) { return engine.unfurl(u).card; });
            auto rendered = render_card(card);
            if (g.json)
                out << rendered.record << "\n";
            else
                out << rendered.snippet;
            return 0;
        }
    } catch (const FetchError& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}

}  // namespace sharecard::cli
