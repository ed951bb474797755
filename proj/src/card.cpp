#include "sharecard/card.hpp"

#include "sharecard/html.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

namespace sharecard {

namespace {

const std::set<std::string, std::less<>> kUrlValuedKeys{
    "og:url",         "og:image",        "og:image:url",          "og:image:secure_url",
    "og:video",       "og:video:url",    "og:video:secure_url",   "og:audio",
    "og:audio:url",   "og:audio:secure_url", "twitter:image",     "twitter:image:src",
    "twitter:player", "twitter:player:stream", "twitter:url",
};

std::string trim(std::string_view s)
{
    auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
    while (!s.empty() && is_ws(s.front()))
        s.remove_prefix(1);
    while (!s.empty() && is_ws(s.back()))
        s.remove_suffix(1);
    return std::string(s);
}

TagValue capped(std::string value)
{
    TagValue v;
    if (value.size() > kMaxFieldBytes) {
        std::size_t cut = kMaxFieldBytes;
        while (cut > 0 && (static_cast<unsigned char>(value[cut]) & 0xC0) == 0x80)
            --cut;
        value.resize(cut);
        v.truncated = true;
    }
    v.value = std::move(value);
    return v;
}

std::optional<std::string> meta_key(const html::Token& t)
{
    const std::string* attrs[] = {t.attr("property"), t.attr("name")};
    for (const auto* a : attrs) {
        if (!a)
            continue;
        auto key = to_lower(trim(*a));
        if (key.starts_with("og:") || key.starts_with("twitter:"))
            return key;
    }
    for (const auto* a : attrs) {
        if (a && to_lower(trim(*a)) == "description")
            return std::string("html:description");
    }
    return std::nullopt;
}

const TagValue* first_present(const TagBag& tags, CardField field, TagNamespace ns)
{
    for (auto key : field_keys(field, ns)) {
        if (const auto* v = tags.find(key))
            return v;
    }
    return nullptr;
}

struct FieldPick {
    const TagValue* value = nullptr;
    TagNamespace ns = TagNamespace::HtmlFallback;
};

FieldPick pick(const TagBag& tags, const PlatformProfile& profile, CardField field)
{
    for (auto ns : profile.tag_precedence) {
        if (const auto* v = first_present(tags, field, ns))
            return {v, ns};
    }
    return {};
}

}  // namespace

std::string_view to_string(TagNamespace ns)
{
    switch (ns) {
    case TagNamespace::TwitterCard:
        return "TwitterCard";
    case TagNamespace::OpenGraph:
        return "OpenGraph";
    case TagNamespace::HtmlFallback:
        return "HtmlFallback";
    }
    return "HtmlFallback";
}

TagNamespace parse_namespace(std::string_view text)
{
    auto t = to_lower(text);
    if (t == "twittercard" || t == "twitter")
        return TagNamespace::TwitterCard;
    if (t == "opengraph" || t == "og")
        return TagNamespace::OpenGraph;
    if (t == "htmlfallback" || t == "html")
        return TagNamespace::HtmlFallback;
    throw std::invalid_argument("unknown tag namespace: " + std::string(text));
}

bool TagBag::insert_first(std::string key, TagValue value)
{
    return tags_.emplace(std::move(key), std::move(value)).second;
}

const TagValue* TagBag::find(std::string_view key) const
{
    auto it = tags_.find(key);
    return it == tags_.end() ? nullptr : &it->second;
}

void PlatformProfile::validate() const
{
    if (tag_precedence.empty())
        throw std::invalid_argument("profile '" + name + "': tag_precedence is empty");
    std::set<TagNamespace> seen(tag_precedence.begin(), tag_precedence.end());
    if (seen.size() != tag_precedence.size())
        throw std::invalid_argument("profile '" + name + "': tag_precedence has duplicates");
    if (crawler_user_agent.empty())
        throw std::invalid_argument("profile '" + name + "': crawler_user_agent is empty");
}

PlatformProfile PlatformProfile::twitter_like()
{
    return {"twitter-like",
            {TagNamespace::TwitterCard, TagNamespace::OpenGraph, TagNamespace::HtmlFallback},
            "Twitterbot/1.0"};
}

PlatformProfile PlatformProfile::og_generic()
{
    return {"og-generic", {TagNamespace::OpenGraph, TagNamespace::HtmlFallback}, "facebookexternalhit/1.1"};
}

CardMetadata CardMetadata::empty_card(std::string canonical_url)
{
    CardMetadata c;
    c.canonical_url = std::move(canonical_url);
    return c;
}

const std::vector<std::string_view>& field_keys(CardField field, TagNamespace ns)
{
    static const std::vector<std::string_view> none;
    static const std::vector<std::string_view> tw_title{"twitter:title"}, og_title{"og:title"},
        html_title{"html:title"};
    static const std::vector<std::string_view> tw_desc{"twitter:description"}, og_desc{"og:description"},
        html_desc{"html:description"};
    static const std::vector<std::string_view> tw_image{"twitter:image", "twitter:image:src"},
        og_image{"og:image", "og:image:url", "og:image:secure_url"};
    static const std::vector<std::string_view> tw_card{"twitter:card"}, og_type{"og:type"};
    static const std::vector<std::string_view> og_url{"og:url"};

    switch (field) {
    case CardField::Title:
        return ns == TagNamespace::TwitterCard ? tw_title : ns == TagNamespace::OpenGraph ? og_title : html_title;
    case CardField::Description:
        return ns == TagNamespace::TwitterCard ? tw_desc : ns == TagNamespace::OpenGraph ? og_desc : html_desc;
    case CardField::Image:
        return ns == TagNamespace::TwitterCard ? tw_image : ns == TagNamespace::OpenGraph ? og_image : none;
    case CardField::CardType:
        return ns == TagNamespace::TwitterCard ? tw_card : ns == TagNamespace::OpenGraph ? og_type : none;
    case CardField::Canonical:
        return ns == TagNamespace::OpenGraph ? og_url : none;
    }
    return none;
}

TagBag extract_tags(std::string_view bytes, const Url& base_url)
{
    TagBag bag;
    if (bytes.empty() || !html::looks_like_html(bytes))
        return bag;

    std::optional<std::string> base_href;
    bool in_title = false;
    bool have_title = false;
    html::Tokenizer tok(bytes);
    while (auto t = tok.next()) {
        if (t->kind == html::TokenKind::StartTag) {
            if (t->name == "meta") {
                auto key = meta_key(*t);
                const auto* content = t->attr("content");
                if (!key || !content)
                    continue;
                auto value = trim(*content);
                if (!value.empty())
                    bag.insert_first(std::move(*key), capped(std::move(value)));
            } else if (t->name == "base" && !base_href) {
                if (const auto* href = t->attr("href"))
                    base_href = trim(*href);
            } else if (t->name == "title") {
                in_title = !have_title;
            }
        } else if (t->kind == html::TokenKind::Text && t->raw_text && t->name == "title" && in_title) {
            auto value = trim(html::decode_entities(t->text));
            have_title = true;
            in_title = false;
            if (!value.empty())
                bag.insert_first("html:title", capped(std::move(value)));
        } else if (t->kind == html::TokenKind::EndTag && t->name == "title") {
            have_title = have_title || in_title;
            in_title = false;
        }
    }

    Url base = base_url;
    if (base_href) {
        try {
            auto resolved = base_url.resolve(*base_href);
            if (resolved.is_http())
                base = resolved;
        } catch (const UrlError&) {
        }
    }

    std::vector<std::string> drop;
    for (const auto& [key, value] : bag) {
        if (!kUrlValuedKeys.count(key))
            continue;
        try {
            auto resolved = base.resolve(value.value);
            if (!resolved.is_http()) {
                drop.push_back(key);
                continue;
            }
            TagValue v = capped(resolved.str());
            v.truncated = v.truncated || value.truncated;
            bag.set(key, std::move(v));
        } catch (const UrlError&) {
            drop.push_back(key);
        }
    }
    for (const auto& key : drop)
        bag.erase(key);
    return bag;
}

CardMetadata resolve_card(const TagBag& tags, const PlatformProfile& profile, const Url& fetch_url)
{
    auto title = pick(tags, profile, CardField::Title);
    auto description = pick(tags, profile, CardField::Description);
    auto image = pick(tags, profile, CardField::Image);
    auto card_type = pick(tags, profile, CardField::CardType);
    auto canonical = pick(tags, profile, CardField::Canonical);

    if (!title.value && !description.value && !image.value && !card_type.value && !canonical.value)
        return CardMetadata::empty_card(fetch_url.str());

    CardMetadata card;
    bool truncated = false;
    if (title.value) {
        card.title = title.value->value;
        truncated |= title.value->truncated;
        card.source = title.ns;
    } else {
        card.source = TagNamespace::HtmlFallback;
    }
    if (description.value) {
        card.description = description.value->value;
        truncated |= description.value->truncated;
    }
    if (image.value) {
        card.image_url = image.value->value;
        truncated |= image.value->truncated;
    }
    if (card_type.value) {
        card.card_type = card_type.value->value;
        truncated |= card_type.value->truncated;
    }
    if (canonical.value) {
        card.canonical_url = canonical.value->value;
        truncated |= canonical.value->truncated;
    } else {
        card.canonical_url = fetch_url.str();
    }
    card.truncated = truncated;
    return card;
}

nlohmann::ordered_json card_to_json(const CardMetadata& card)
{
    using nlohmann::ordered_json;
    ordered_json j;
    j["title"] = card.is_empty() || card.title.empty() ? ordered_json(nullptr) : ordered_json(card.title);
    j["description"] = card.is_empty() ? ordered_json(nullptr) : ordered_json(card.description);
    j["image_url"] = card.image_url ? ordered_json(*card.image_url) : ordered_json(nullptr);
    j["card_type"] = card.card_type ? ordered_json(*card.card_type) : ordered_json(nullptr);
    j["canonical_url"] = card.canonical_url;
    j["namespace"] = card.source ? ordered_json(std::string(to_string(*card.source))) : ordered_json(nullptr);
    j["truncated"] = card.truncated;
    return j;
}

CardMetadata card_from_json(const nlohmann::json& j)
{
    CardMetadata c;
    if (!j.at("title").is_null())
        c.title = j.at("title").get<std::string>();
    if (!j.at("description").is_null())
        c.description = j.at("description").get<std::string>();
    if (!j.at("image_url").is_null())
        c.image_url = j.at("image_url").get<std::string>();
    if (!j.at("card_type").is_null())
        c.card_type = j.at("card_type").get<std::string>();
    c.canonical_url = j.at("canonical_url").get<std::string>();
    if (!j.at("namespace").is_null())
        c.source = parse_namespace(j.at("namespace").get<std::string>());
    c.truncated = j.value("truncated", false);
    return c;
}

RenderedCard render_card(const CardMetadata& card)
{
    RenderedCard out;
    out.record = card_to_json(card).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);

    std::ostringstream s;
    if (card.is_empty()) {
        s << "[EmptyCard] (no card metadata)\n";
    } else {
        s << "[" << to_string(*card.source) << "] " << (card.title.empty() ? "(untitled)" : card.title) << "\n";
        if (!card.description.empty())
            s << "  " << card.description << "\n";
        if (card.image_url)
            s << "  image: " << *card.image_url << "\n";
        if (card.card_type)
            s << "  type:  " << *card.card_type << "\n";
    }
    s << "  -> " << card.canonical_url << "\n";
    if (card.truncated)
        s << "  (some fields truncated at " << kMaxFieldBytes << " bytes)\n";
    out.snippet = s.str();
    return out;
}

CardMetadata parse_card_record(std::string_view record)
{
    return card_from_json(nlohmann::json::parse(record));
}

}  // namespace sharecard
