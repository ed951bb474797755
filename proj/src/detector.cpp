#include "sharecard/detector.hpp"

#include "sharecard/html.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <future>
#include <sstream>
#include <stdexcept>

namespace sharecard {

namespace {

bool token_byte(unsigned char c)
{
    return c >= 0x80 || std::isalnum(c);
}

std::size_t codepoints(std::string_view s)
{
    return static_cast<std::size_t>(
        std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::string normalize_pattern(std::string_view raw)
{
    auto p = to_lower(raw);
    std::string_view host = p;
    if (host.starts_with("*."))
        host.remove_prefix(2);
    if (!is_valid_hostname(host))
        throw std::invalid_argument("invalid host pattern: '" + std::string(raw) + "'");
    return p;
}

std::string host_of(const std::string& url)
{
    auto parsed = Url::try_parse(url);
    return parsed ? parsed->host() : std::string{};
}

bool hops_equal(const std::vector<Hop>& a, const std::vector<Hop>& b)
{
    return std::equal(a.begin(), a.end(), b.begin(), b.end(), [](const Hop& x, const Hop& y) {
        return x.url == y.url && x.status == y.status && x.kind == y.kind && x.location == y.location;
    });
}

std::string card_text(const CardMetadata& card)
{
    return card.title + " " + card.description;
}

struct AnalyzedView {
    ViewSummary summary;
    std::string page_text;
};

AnalyzedView analyze_view(const ViewOutcome& outcome, const Url& requested, const PlatformProfile& profile)
{
    AnalyzedView v;
    if (!outcome.result) {
        v.summary.available = false;
        v.summary.error = outcome.error;
        v.summary.chain.hops = outcome.partial_chain;
        v.summary.card = CardMetadata::empty_card(requested.str());
        return v;
    }
    const auto& r = *outcome.result;
    v.summary.available = true;
    v.summary.final_url = r.final_url;
    v.summary.final_host = host_of(r.final_url);
    v.summary.chain = r.chain;
    v.summary.body_digest = r.body_digest;
    v.summary.script_redirect = r.script_redirect;
    auto base = Url::try_parse(r.final_url).value_or(requested);
    v.summary.card = resolve_card(extract_tags(r.body, base), profile, requested);
    v.page_text = html::visible_text(r.body);
    return v;
}

bool leaves_site_for_unknown(const RedirectChain& chain, const ReputationList& rep, HostComparison mode,
                             const PublicSuffixList& psl)
{
    if (chain.hops.size() < 2)
        return false;
    auto origin = host_of(chain.hops.front().url);
    for (std::size_t i = 1; i < chain.hops.size(); ++i) {
        auto host = host_of(chain.hops[i].url);
        if (!same_site(origin, host, mode, psl) && rep.classify(host) == Finding::Unknown)
            return true;
    }
    return false;
}

}  // namespace

std::string_view to_string(Finding f)
{
    switch (f) {
    case Finding::Denied:
        return "Denied";
    case Finding::Allowed:
        return "Allowed";
    case Finding::Unknown:
        return "Unknown";
    }
    return "Unknown";
}

Finding parse_finding(std::string_view text)
{
    if (text == "Denied")
        return Finding::Denied;
    if (text == "Allowed")
        return Finding::Allowed;
    if (text == "Unknown")
        return Finding::Unknown;
    throw std::invalid_argument("unknown finding: " + std::string(text));
}

bool host_matches(std::string_view pattern, std::string_view raw_host)
{
    auto host = to_lower(raw_host);
    if (pattern.starts_with("*.")) {
        auto suffix = pattern.substr(2);
        if (host == suffix)
            return true;
        return host.size() > suffix.size() && host.ends_with(suffix) && host[host.size() - suffix.size() - 1] == '.';
    }
    return host == pattern;
}

void ReputationList::deny(std::string_view pattern)
{
    auto p = normalize_pattern(pattern);
    if (allowed_.count(p))
        throw std::invalid_argument("pattern is both denied and allowed: " + p);
    denied_.insert(std::move(p));
}

void ReputationList::allow(std::string_view pattern)
{
    auto p = normalize_pattern(pattern);
    if (denied_.count(p))
        throw std::invalid_argument("pattern is both denied and allowed: " + p);
    allowed_.insert(std::move(p));
}

void ReputationList::merge(const ReputationList& other)
{
    for (const auto& p : other.denied_)
        deny(p);
    for (const auto& p : other.allowed_)
        allow(p);
}

ReputationList ReputationList::parse(std::istream& in)
{
    ReputationList rep;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos)
            continue;
        auto last = line.find_last_not_of(" \t\r");
        std::string_view entry(line.data() + first, last - first + 1);
        try {
            if (entry.starts_with('!'))
                rep.allow(entry.substr(1));
            else
                rep.deny(entry);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rep;
}

ReputationList ReputationList::parse(std::string_view text)
{
    std::istringstream in{std::string(text)};
    return parse(in);
}

ReputationList ReputationList::load_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open reputation file: " + path);
    try {
        return parse(in);
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

Finding ReputationList::classify(std::string_view host) const
{
    for (const auto& p : denied_) {
        if (host_matches(p, host))
            return Finding::Denied;
    }
    for (const auto& p : allowed_) {
        if (host_matches(p, host))
            return Finding::Allowed;
    }
    return Finding::Unknown;
}

std::vector<HopFinding> reputation_check(const std::vector<Hop>& hops, const ReputationList& rep)
{
    std::vector<HopFinding> out;
    out.reserve(hops.size());
    for (std::size_t i = 0; i < hops.size(); ++i) {
        auto host = host_of(hops[i].url);
        out.push_back({i, host, rep.classify(host)});
    }
    return out;
}

std::vector<HopFinding> reputation_check(const RedirectChain& chain, const ReputationList& rep)
{
    return reputation_check(chain.hops, rep);
}

bool direct_link_gate(const RedirectChain& chain)
{
    return !chain.truncated && chain.hops.size() == 1 && chain.hops.front().kind == HopKind::Final;
}

void Thresholds::validate() const
{
    auto ok = [](double t) { return t >= 0.0 && t <= 1.0; };
    if (!ok(t_content) || !ok(t_card))
        throw std::invalid_argument("thresholds must lie in [0, 1]");
}

std::set<std::string> normalize_tokens(std::string_view text)
{
    std::set<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (codepoints(current) >= 2)
            tokens.insert(current);
        current.clear();
    };
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (token_byte(c))
            current += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
        else
            flush();
    }
    flush();
    return tokens;
}

double token_jaccard(const std::set<std::string>& a, const std::set<std::string>& b)
{
    if (a.empty() && b.empty())
        return 1.0;
    std::size_t common = 0;
    for (const auto& t : a)
        common += b.count(t);
    return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

AuditResult consistency_audit(const CardMetadata& card, std::string_view page_text)
{
    if (card.is_empty())
        return {0.0, true};
    auto card_tokens = normalize_tokens(card_text(card));
    auto page_tokens = normalize_tokens(page_text);
    if (card_tokens.empty() || page_tokens.empty())
        return {0.0, true};
    std::size_t common = 0;
    for (const auto& t : card_tokens)
        common += page_tokens.count(t);
    if (card_tokens.size() < page_tokens.size())
        return {static_cast<double>(common) / static_cast<double>(card_tokens.size()), false};
    return {static_cast<double>(common) / static_cast<double>(card_tokens.size() + page_tokens.size() - common),
            false};
}

std::string_view to_string(Verdict v)
{
    switch (v) {
    case Verdict::Benign:
        return "Benign";
    case Verdict::CloakingSuspected:
        return "CloakingSuspected";
    case Verdict::RedirectLaundering:
        return "RedirectLaundering";
    case Verdict::InconsistentCard:
        return "InconsistentCard";
    case Verdict::Denied:
        return "Denied";
    }
    return "Benign";
}

Verdict parse_verdict(std::string_view text)
{
    for (auto v : kAllVerdicts) {
        if (to_string(v) == text)
            return v;
    }
    throw std::invalid_argument("unknown verdict: " + std::string(text));
}

std::string_view to_string(ScanView v)
{
    return v == ScanView::Crawler ? "crawler" : "browser";
}

bool ViewSummary::operator==(const ViewSummary& o) const
{
    return available == o.available && final_url == o.final_url && final_host == o.final_host && card == o.card
           && body_digest == o.body_digest && chain.truncated == o.chain.truncated
           && hops_equal(chain.hops, o.chain.hops) && script_redirect == o.script_redirect && error == o.error;
}

bool DivergenceReport::operator==(const DivergenceReport& o) const
{
    return url == o.url && crawler_view == o.crawler_view && browser_view == o.browser_view
           && final_host_mismatch == o.final_host_mismatch && metadata_similarity == o.metadata_similarity
           && content_similarity == o.content_similarity && card_page_consistency == o.card_page_consistency
           && consistency_insufficient_data == o.consistency_insufficient_data && chain_flags == o.chain_flags
           && direct_link == o.direct_link && strict_direct == o.strict_direct && partial == o.partial
           && verdict == o.verdict;
}

ScanTranscript collect_transcript(const Fetcher& fetcher, const Url& url, const Persona& crawler,
                                  const Persona& browser, const FetchLimits& limits)
{
    auto run = [&](const Persona& persona) {
        ViewOutcome out;
        try {
            out.result = fetcher.fetch(url, persona, limits);
        } catch (const FetchError& e) {
            out.error = e.what();
            out.partial_chain = e.partial_chain();
        }
        return out;
    };
    ScanTranscript t;
    t.url = url.str();
    auto crawler_future = std::async(std::launch::async, run, std::cref(crawler));
    t.browser = run(browser);
    t.crawler = crawler_future.get();
    return t;
}

DivergenceReport analyze_transcript(const ScanTranscript& transcript, const PlatformProfile& profile,
                                    const ReputationList& rep, const Thresholds& thresholds,
                                    const ScanOptions& options)
{
    if (!transcript.crawler.result && !transcript.browser.result)
        throw NetworkError("both views failed: " + transcript.crawler.error, transcript.crawler.partial_chain);

    const auto& psl = options.psl ? *options.psl : PublicSuffixList::bundled();
    const auto mode = options.host_comparison;
    const auto requested = Url::parse(transcript.url);

    auto crawler = analyze_view(transcript.crawler, requested, profile);
    auto browser = analyze_view(transcript.browser, requested, profile);

    DivergenceReport r;
    r.url = transcript.url;
    r.strict_direct = options.strict_direct;
    r.partial = !crawler.summary.available || !browser.summary.available;

    if (!r.partial) {
        r.final_host_mismatch = !same_site(crawler.summary.final_host, browser.summary.final_host, mode, psl);
        r.metadata_similarity = token_jaccard(normalize_tokens(card_text(crawler.summary.card)),
                                              normalize_tokens(card_text(browser.summary.card)));
        r.content_similarity = crawler.summary.body_digest == browser.summary.body_digest
                                   ? 1.0
                                   : token_jaccard(normalize_tokens(crawler.page_text),
                                                   normalize_tokens(browser.page_text));
    }
    const auto& audited_card = crawler.summary.available ? crawler.summary.card : browser.summary.card;
    const auto& audited_page = browser.summary.available ? browser.page_text : crawler.page_text;
    auto audit = consistency_audit(audited_card, audited_page);
    r.card_page_consistency = audit.score;
    r.consistency_insufficient_data = audit.insufficient_data;

    bool any_denied = false;
    for (auto [view, summary] : {std::pair{ScanView::Crawler, &crawler.summary}, std::pair{ScanView::Browser, &browser.summary}}) {
        for (auto& f : reputation_check(summary->chain, rep)) {
            any_denied |= f.finding == Finding::Denied;
            r.chain_flags.push_back({view, std::move(f)});
        }
    }

    r.direct_link = (!crawler.summary.available || direct_link_gate(crawler.summary.chain))
                    && (!browser.summary.available || direct_link_gate(browser.summary.chain));

    const auto& user_chain = browser.summary.available ? browser.summary.chain : crawler.summary.chain;
    const auto& user_final_host = browser.summary.available ? browser.summary.final_host : crawler.summary.final_host;
    auto card_host = host_of(audited_card.canonical_url);

    if (any_denied) {
        r.verdict = Verdict::Denied;
    } else if (r.partial || r.final_host_mismatch || r.content_similarity < thresholds.t_content) {
        r.verdict = Verdict::CloakingSuspected;
    } else if (leaves_site_for_unknown(user_chain, rep, mode, psl)
               && !same_site(card_host, user_final_host, mode, psl)) {
        r.verdict = Verdict::RedirectLaundering;
    } else if (!audited_card.is_empty() && r.card_page_consistency < thresholds.t_card) {
        r.verdict = Verdict::InconsistentCard;
    } else {
        r.verdict = Verdict::Benign;
    }
    if (options.strict_direct && !r.direct_link
        && (r.verdict == Verdict::Benign || r.verdict == Verdict::InconsistentCard))
        r.verdict = Verdict::RedirectLaundering;

    r.crawler_view = std::move(crawler.summary);
    r.browser_view = std::move(browser.summary);
    return r;
}

DivergenceReport differential_scan(const Fetcher& fetcher, const Url& url, const Persona& crawler,
                                   const Persona& browser, const PlatformProfile& profile,
                                   const ReputationList& rep, const Thresholds& thresholds,
                                   const ScanOptions& options)
{
    if (crawler.user_agent == browser.user_agent)
        throw std::invalid_argument("crawler and browser personas must differ in user_agent");
    profile.validate();
    thresholds.validate();
    auto transcript = collect_transcript(fetcher, url, crawler, browser, options.limits);
    return analyze_transcript(transcript, profile, rep, thresholds, options);
}

}  // namespace sharecard
