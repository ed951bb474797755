#pragma once

// Property and corpus checks shared by the unit tests and the acceptance runner.
// Each returns human-readable failure descriptions; empty means pass.

#include "sharecard/card.hpp"
#include "sharecard/detector.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace checks {

struct Outcome {
    std::size_t cases = 0;
    std::vector<std::string> failures;
    bool ok() const { return failures.empty(); }
};

std::string fixture_dir();

/// Golden extract_tags / resolve_card comparison over fixtures/html/manifest.json.
Outcome corpus_goldens();

/// Random TagBags and random profiles against an independent precedence oracle.
Outcome precedence_property(std::size_t n, std::uint64_t seed);

/// Generated card/page pairs served by a lab; matched pairs must score >= t_card,
/// mismatched ones below it.
struct CalibrationResult {
    std::size_t matched = 0;
    std::size_t mismatched = 0;
    std::vector<std::string> misclassified;
    double min_matched = 1.0;
    double max_mismatched = 0.0;
};
CalibrationResult audit_calibration(const sharecard::Thresholds& thresholds);

/// Randomized lab redirect chains (1..12 hops, random limits) checked for the
/// linking and Final-hop invariants plus the shape the scenario dictates.
Outcome chain_invariants(std::size_t n, std::uint64_t seed);

}  // namespace checks
