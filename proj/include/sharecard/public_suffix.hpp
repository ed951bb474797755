#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <unordered_map>

namespace sharecard {

/// Public Suffix List matcher (rules, "*." wildcards, "!" exceptions).
///
/// A host under a TLD with no listed rule falls back to the implicit "*"
/// rule, so "benign.local" is itself registrable.
class PublicSuffixList {
public:
    PublicSuffixList() = default;

    static PublicSuffixList parse(std::istream& in);
    static PublicSuffixList parse(std::string_view text);
    static PublicSuffixList load_file(const std::string& path);

    /// Snapshot compiled into the library from data/public_suffix_list.dat.
    static const PublicSuffixList& bundled();

    std::string public_suffix(std::string_view host) const;

    /// eTLD+1 for `host`. IP literals and hosts that are themselves a
    /// public suffix come back unchanged.
    std::string registrable_domain(std::string_view host) const;

    std::size_t rule_count() const { return rules_.size(); }

private:
    enum class RuleKind { Normal, Wildcard, Exception };
    std::unordered_map<std::string, RuleKind> rules_;
};

enum class HostComparison { Registrable, Exact };

/// Whether two hosts belong to the same site under the chosen comparison.
bool same_site(std::string_view a, std::string_view b, HostComparison mode,
               const PublicSuffixList& psl = PublicSuffixList::bundled());

std::string site_of(std::string_view host, HostComparison mode,
                    const PublicSuffixList& psl = PublicSuffixList::bundled());

}  // namespace sharecard
