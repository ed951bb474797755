#include "sharecard/report.hpp"

#include <stdexcept>

namespace sharecard {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json view_to_json(const ViewSummary& v)
{
    ordered_json j;
    j["available"] = v.available;
    j["final_url"] = v.available ? ordered_json(v.final_url) : ordered_json(nullptr);
    j["final_host"] = v.available ? ordered_json(v.final_host) : ordered_json(nullptr);
    j["card"] = card_to_json(v.card);
    j["body_digest"] = v.available ? ordered_json(v.body_digest) : ordered_json(nullptr);
    j["chain"] = chain_to_json(v.chain, false);
    j["script_redirect"] = v.script_redirect;
    j["error"] = v.error ? ordered_json(*v.error) : ordered_json(nullptr);
    return j;
}

ViewSummary view_from_json(const json& j)
{
    ViewSummary v;
    v.available = j.at("available").get<bool>();
    if (v.available) {
        v.final_url = j.at("final_url").get<std::string>();
        v.final_host = j.at("final_host").get<std::string>();
        v.body_digest = j.at("body_digest").get<std::string>();
    }
    v.card = card_from_json(j.at("card"));
    v.chain = chain_from_json(j.at("chain"));
    v.script_redirect = j.at("script_redirect").get<bool>();
    if (!j.at("error").is_null())
        v.error = j.at("error").get<std::string>();
    return v;
}

}  // namespace

ScanReport make_scan_report(DivergenceReport payload, TimePoint scanned_at)
{
    ScanReport r;
    r.scanned_at = std::chrono::time_point_cast<Millis>(scanned_at);
    r.payload = std::move(payload);
    return r;
}

ordered_json chain_to_json(const RedirectChain& chain, bool with_elapsed)
{
    ordered_json hops = ordered_json::array();
    for (const auto& h : chain.hops) {
        ordered_json hj;
        hj["url"] = h.url;
        hj["status"] = h.status;
        hj["kind"] = to_string(h.kind);
        hj["location"] = h.location ? ordered_json(*h.location) : ordered_json(nullptr);
        if (with_elapsed)
            hj["elapsed_ms"] = h.elapsed.count();
        hops.push_back(std::move(hj));
    }
    ordered_json j;
    j["hops"] = std::move(hops);
    j["truncated"] = chain.truncated;
    return j;
}

RedirectChain chain_from_json(const json& j)
{
    RedirectChain c;
    c.truncated = j.at("truncated").get<bool>();
    for (const auto& hj : j.at("hops")) {
        Hop h;
        h.url = hj.at("url").get<std::string>();
        h.status = hj.at("status").get<int>();
        h.kind = parse_hop_kind(hj.at("kind").get<std::string>());
        if (!hj.at("location").is_null())
            h.location = hj.at("location").get<std::string>();
        if (hj.contains("elapsed_ms"))
            h.elapsed = Millis(hj["elapsed_ms"].get<long long>());
        c.hops.push_back(std::move(h));
    }
    return c;
}

ordered_json divergence_to_json(const DivergenceReport& r)
{
    ordered_json j;
    j["url"] = r.url;
    j["verdict"] = to_string(r.verdict);
    j["partial"] = r.partial;
    j["final_host_mismatch"] = r.final_host_mismatch;
    j["metadata_similarity"] = r.metadata_similarity;
    j["content_similarity"] = r.content_similarity;
    j["card_page_consistency"] = r.card_page_consistency;
    j["consistency_insufficient_data"] = r.consistency_insufficient_data;
    j["direct_link"] = r.direct_link;
    j["strict_direct"] = r.strict_direct;
    ordered_json flags = ordered_json::array();
    for (const auto& f : r.chain_flags) {
        ordered_json fj;
        fj["view"] = to_string(f.view);
        fj["hop_index"] = f.finding.hop_index;
        fj["host"] = f.finding.host;
        fj["finding"] = to_string(f.finding.finding);
        flags.push_back(std::move(fj));
    }
    j["chain_flags"] = std::move(flags);
    j["crawler_view"] = view_to_json(r.crawler_view);
    j["browser_view"] = view_to_json(r.browser_view);
    return j;
}

DivergenceReport divergence_from_json(const json& j)
{
    DivergenceReport r;
    r.url = j.at("url").get<std::string>();
    r.verdict = parse_verdict(j.at("verdict").get<std::string>());
    r.partial = j.at("partial").get<bool>();
    r.final_host_mismatch = j.at("final_host_mismatch").get<bool>();
    r.metadata_similarity = j.at("metadata_similarity").get<double>();
    r.content_similarity = j.at("content_similarity").get<double>();
    r.card_page_consistency = j.at("card_page_consistency").get<double>();
    r.consistency_insufficient_data = j.at("consistency_insufficient_data").get<bool>();
    r.direct_link = j.at("direct_link").get<bool>();
    r.strict_direct = j.at("strict_direct").get<bool>();
    for (const auto& fj : j.at("chain_flags")) {
        ChainFlag f;
        f.view = fj.at("view").get<std::string>() == "crawler" ? ScanView::Crawler : ScanView::Browser;
        f.finding.hop_index = fj.at("hop_index").get<std::size_t>();
        f.finding.host = fj.at("host").get<std::string>();
        f.finding.finding = parse_finding(fj.at("finding").get<std::string>());
        r.chain_flags.push_back(std::move(f));
    }
    r.crawler_view = view_from_json(j.at("crawler_view"));
    r.browser_view = view_from_json(j.at("browser_view"));
    return r;
}

std::string serialize_report(const ScanReport& r)
{
    ordered_json j;
    j["schema_version"] = r.schema_version;
    j["tool_version"] = r.tool_version;
    j["scanned_at"] = format_rfc3339(r.scanned_at);
    j["report"] = divergence_to_json(r.payload);
    return j.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

ScanReport parse_report(std::string_view text)
{
    auto j = json::parse(text);
    ScanReport r;
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != kSchemaVersion)
        throw std::invalid_argument("unsupported report schema_version " + std::to_string(r.schema_version));
    r.tool_version = j.at("tool_version").get<std::string>();
    r.scanned_at = parse_rfc3339(j.at("scanned_at").get<std::string>());
    r.payload = divergence_from_json(j.at("report"));
    return r;
}

int exit_code_for(Verdict v)
{
    switch (v) {
    case Verdict::Benign:
        return 0;
    case Verdict::InconsistentCard:
        return 3;
    case Verdict::RedirectLaundering:
        return 4;
    case Verdict::CloakingSuspected:
        return 5;
    case Verdict::Denied:
        return 6;
    }
    return kExitError;
}

}  // namespace sharecard
