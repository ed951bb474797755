#pragma once

#include <istream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sharecard/card.hpp"
#include "sharecard/fetcher.hpp"
#include "sharecard/public_suffix.hpp"

namespace sharecard {

enum class Finding { Denied, Allowed, Unknown };
std::string_view to_string(Finding f);
Finding parse_finding(std::string_view text);

/// "*.x" matches x itself and every subdomain of x; anything else is exact.
bool host_matches(std::string_view pattern, std::string_view host);

/// Deny/allow host patterns. Patterns are stored lowercase and a pattern
/// may not be both denied and allowed.
class ReputationList {
public:
    void deny(std::string_view pattern);
    void allow(std::string_view pattern);
    /// Adds the other list's patterns; throws if that creates a conflict.
    void merge(const ReputationList& other);

    /// One pattern per line, '#' comments, '!' prefix marks an allowed host.
    static ReputationList parse(std::istream& in);
    static ReputationList parse(std::string_view text);
    static ReputationList load_file(const std::string& path);

    /// Denied patterns are consulted before allowed ones.
    Finding classify(std::string_view host) const;

    const std::set<std::string>& denied() const { return denied_; }
    const std::set<std::string>& allowed() const { return allowed_; }

private:
    std::set<std::string> denied_;
    std::set<std::string> allowed_;
};

struct HopFinding {
    std::size_t hop_index = 0;
    std::string host;
    Finding finding = Finding::Unknown;

    bool operator==(const HopFinding&) const = default;
};

std::vector<HopFinding> reputation_check(const RedirectChain& chain, const ReputationList& rep);
std::vector<HopFinding> reputation_check(const std::vector<Hop>& hops, const ReputationList& rep);

/// True iff the chain is a single Final hop.
bool direct_link_gate(const RedirectChain& chain);

struct Thresholds {
    double t_content = 0.80;
    double t_card = 0.30;

    void validate() const;
    bool operator==(const Thresholds&) const = default;
};

/// Lowercased alphanumeric runs of at least two characters, deduplicated.
/// Bytes >= 0x80 count as alphanumeric, so UTF-8 words stay whole.
std::set<std::string> normalize_tokens(std::string_view text);

/// |A ∩ B| / |A ∪ B|; two empty sets are identical and score 1.0.
double token_jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

struct AuditResult {
    double score = 0.0;
    bool insufficient_data = false;
};

/// Card text (title + description) against page text. Containment
/// |C ∩ P| / |C| when the card has fewer tokens than the page, Jaccard
/// otherwise; EmptyCard or empty page text scores 0.0 with the flag set.
AuditResult consistency_audit(const CardMetadata& card, std::string_view page_text);

enum class Verdict { Benign, CloakingSuspected, RedirectLaundering, InconsistentCard, Denied };
std::string_view to_string(Verdict v);
Verdict parse_verdict(std::string_view text);
inline constexpr Verdict kAllVerdicts[] = {Verdict::Benign, Verdict::CloakingSuspected, Verdict::RedirectLaundering,
                                           Verdict::InconsistentCard, Verdict::Denied};

enum class ScanView { Crawler, Browser };
std::string_view to_string(ScanView v);

struct ChainFlag {
    ScanView view = ScanView::Crawler;
    HopFinding finding;

    bool operator==(const ChainFlag&) const = default;
};

/// Per-persona outcome. When `available` is false only `error` and the
/// partial chain are meaningful.
struct ViewSummary {
    bool available = false;
    std::string final_url;
    std::string final_host;
    CardMetadata card;
    std::string body_digest;
    RedirectChain chain;
    bool script_redirect = false;
    std::optional<std::string> error;

    bool operator==(const ViewSummary& o) const;
};

struct DivergenceReport {
    std::string url;
    ViewSummary crawler_view;
    ViewSummary browser_view;
    bool final_host_mismatch = false;
    double metadata_similarity = 0.0;
    double content_similarity = 0.0;
    double card_page_consistency = 0.0;
    bool consistency_insufficient_data = false;
    std::vector<ChainFlag> chain_flags;
    bool direct_link = false;
    bool strict_direct = false;
    bool partial = false;
    Verdict verdict = Verdict::Benign;

    bool operator==(const DivergenceReport& o) const;
};

struct ScanOptions {
    FetchLimits limits;
    HostComparison host_comparison = HostComparison::Registrable;
    const PublicSuffixList* psl = nullptr;  // bundled when null
    bool strict_direct = false;
};

/// Raw result of one persona's fetch, before any analysis.
struct ViewOutcome {
    std::optional<FetchResult> result;
    std::string error;
    std::vector<Hop> partial_chain;
};

struct ScanTranscript {
    std::string url;
    ViewOutcome crawler;
    ViewOutcome browser;
};

/// Runs the crawler and browser fetches concurrently.
ScanTranscript collect_transcript(const Fetcher& fetcher, const Url& url, const Persona& crawler,
                                  const Persona& browser, const FetchLimits& limits);

/// Pure analysis of a transcript. Throws NetworkError when both views failed.
///
/// Verdict priority: a Denied hop on either chain, then a one-sided
/// failure or final-host mismatch or low content similarity
/// (CloakingSuspected), then a browser chain that leaves the shared site
/// for an Unknown host while the card names a different site
/// (RedirectLaundering), then low card/page consistency (InconsistentCard).
/// With strict_direct a non-direct chain lifts anything weaker than
/// RedirectLaundering to RedirectLaundering.
DivergenceReport analyze_transcript(const ScanTranscript& transcript, const PlatformProfile& profile,
                                    const ReputationList& rep, const Thresholds& thresholds,
                                    const ScanOptions& options);

DivergenceReport differential_scan(const Fetcher& fetcher, const Url& url, const Persona& crawler,
                                   const Persona& browser, const PlatformProfile& profile,
                                   const ReputationList& rep, const Thresholds& thresholds,
                                   const ScanOptions& options = {});

}  // namespace sharecard
