#pragma once

#include <json.hpp>

#include <string>
#include <string_view>

#include "sharecard/clock.hpp"
#include "sharecard/detector.hpp"
#include "sharecard/fetcher.hpp"

namespace sharecard {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kToolVersion = "0.1.0";

struct ScanReport {
    int schema_version = kSchemaVersion;
    TimePoint scanned_at;  // millisecond precision
    std::string tool_version{kToolVersion};
    DivergenceReport payload;

    bool operator==(const ScanReport&) const = default;
};

ScanReport make_scan_report(DivergenceReport payload, TimePoint scanned_at);

/// Hops as JSON; elapsed times only when asked (they break byte stability).
nlohmann::ordered_json chain_to_json(const RedirectChain& chain, bool with_elapsed);
RedirectChain chain_from_json(const nlohmann::json& j);

nlohmann::ordered_json divergence_to_json(const DivergenceReport& r);
DivergenceReport divergence_from_json(const nlohmann::json& j);

/// Pretty-printed JSON with a fixed key order, newline terminated.
std::string serialize_report(const ScanReport& r);
/// Throws on malformed input or an unknown schema_version.
ScanReport parse_report(std::string_view text);

/// 0 Benign, 3 InconsistentCard, 4 RedirectLaundering, 5 CloakingSuspected, 6 Denied.
int exit_code_for(Verdict v);

inline constexpr int kExitError = 2;

}  // namespace sharecard
