#pragma once

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sharecard/url.hpp"

namespace sharecard {

/// Tag family a card field was read from.
enum class TagNamespace { TwitterCard, OpenGraph, HtmlFallback };

std::string_view to_string(TagNamespace ns);
/// Accepts the enum names plus the short aliases "twitter", "og"/"opengraph", "html".
TagNamespace parse_namespace(std::string_view text);

/// Values longer than this are cut on a UTF-8 boundary and flagged.
inline constexpr std::size_t kMaxFieldBytes = 4096;

struct TagValue {
    std::string value;
    bool truncated = false;

    bool operator==(const TagValue&) const = default;
};

/// Namespaced tag name -> first-occurrence value. Keys are "og:*",
/// "twitter:*", and "html:title" / "html:description" for the fallback.
class TagBag {
public:
    bool insert_first(std::string key, TagValue value);
    void set(std::string key, TagValue value) { tags_[std::move(key)] = std::move(value); }
    const TagValue* find(std::string_view key) const;
    bool contains(std::string_view key) const { return find(key) != nullptr; }
    void erase(const std::string& key) { tags_.erase(key); }

    bool empty() const { return tags_.empty(); }
    std::size_t size() const { return tags_.size(); }
    auto begin() const { return tags_.begin(); }
    auto end() const { return tags_.end(); }

    bool operator==(const TagBag&) const = default;

private:
    std::map<std::string, TagValue, std::less<>> tags_;
};

struct PlatformProfile {
    std::string name;
    std::vector<TagNamespace> tag_precedence;
    std::string crawler_user_agent;

    /// Throws std::invalid_argument on empty/duplicated precedence or empty UA.
    void validate() const;

    /// TwitterCard -> OpenGraph -> HtmlFallback, crawler "Twitterbot/1.0".
    static PlatformProfile twitter_like();
    /// OpenGraph -> HtmlFallback, crawler "facebookexternalhit/1.1".
    static PlatformProfile og_generic();
};

/// A resolved sharing card.
///
/// `source` is the family that supplied the title. It is absent only for
/// the EmptyCard value produced when no card field was present at all; a
/// card with other fields but no title reports HtmlFallback.
struct CardMetadata {
    std::string title;
    std::string description;
    std::optional<std::string> image_url;
    std::optional<std::string> card_type;
    std::string canonical_url;
    std::optional<TagNamespace> source;
    bool truncated = false;

    bool is_empty() const { return !source.has_value(); }
    static CardMetadata empty_card(std::string canonical_url);

    bool operator==(const CardMetadata&) const = default;
};

/// Best-effort meta tag extraction. Never throws; non-HTML bytes give an
/// empty bag. Relative URL values resolve against `<base href>` when
/// present, otherwise `base_url`; unresolvable URL values are dropped.
TagBag extract_tags(std::string_view html, const Url& base_url);

CardMetadata resolve_card(const TagBag& tags, const PlatformProfile& profile, const Url& fetch_url);

/// Tag keys consulted for one card field within one namespace, in order.
enum class CardField { Title, Description, Image, CardType, Canonical };
const std::vector<std::string_view>& field_keys(CardField field, TagNamespace ns);

struct RenderedCard {
    std::string record;   // compact JSON, fixed field order
    std::string snippet;  // human-readable
};

RenderedCard render_card(const CardMetadata& card);
nlohmann::ordered_json card_to_json(const CardMetadata& card);
CardMetadata card_from_json(const nlohmann::json& j);
/// Inverse of render_card(...).record. Throws nlohmann::json::exception on malformed input.
CardMetadata parse_card_record(std::string_view record);

}  // namespace sharecard
