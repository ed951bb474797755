#include "checks.hpp"

#include "sharecard/attack_lab.hpp"
#include "sharecard/html.hpp"
#include "support.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace checks {

using namespace sharecard;
using nlohmann::json;

namespace {

std::string read_all(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string golden_string(const json& v)
{
    if (v.is_object())
        return std::string(v.at("count").get<std::size_t>(), v.at("repeat").get<std::string>().at(0));
    return v.get<std::string>();
}

std::string short_text(const std::string& s)
{
    return s.size() > 60 ? s.substr(0, 57) + "..." : s;
}

std::vector<std::string> compare_card(const std::string& file, const std::string& label, const json& want,
                                      const CardMetadata& got, const std::string& base)
{
    std::vector<std::string> out;
    auto fail = [&](const std::string& field, const std::string& w, const std::string& g) {
        out.push_back(file + " [" + label + "] " + field + ": want '" + short_text(w) + "' got '" + short_text(g)
                      + "'");
    };
    if (want.value("empty", false)) {
        if (!got.is_empty())
            fail("kind", "EmptyCard", render_card(got).record);
        if (got.canonical_url != base)
            fail("canonical_url", base, got.canonical_url);
        return out;
    }
    if (got.is_empty()) {
        fail("kind", "card", "EmptyCard");
        return out;
    }
    auto str_or = [&](const char* key, const std::string& dflt) {
        return want.contains(key) && !want[key].is_null() ? golden_string(want[key]) : dflt;
    };
    auto opt = [&](const char* key) -> std::optional<std::string> {
        if (!want.contains(key) || want[key].is_null())
            return std::nullopt;
        return golden_string(want[key]);
    };
    if (got.title != str_or("title", ""))
        fail("title", str_or("title", ""), got.title);
    if (got.description != str_or("description", ""))
        fail("description", str_or("description", ""), got.description);
    if (got.image_url != opt("image_url"))
        fail("image_url", opt("image_url").value_or("<none>"), got.image_url.value_or("<none>"));
    if (got.card_type != opt("card_type"))
        fail("card_type", opt("card_type").value_or("<none>"), got.card_type.value_or("<none>"));
    if (got.canonical_url != str_or("canonical_url", base))
        fail("canonical_url", str_or("canonical_url", base), got.canonical_url);
    auto ns = want.at("namespace").get<std::string>();
    if (std::string(to_string(*got.source)) != ns)
        fail("namespace", ns, std::string(to_string(*got.source)));
    if (got.truncated != want.value("truncated", false))
        fail("truncated", want.value("truncated", false) ? "true" : "false", got.truncated ? "true" : "false");
    return out;
}

// Oracle key table, written out independently of field_keys().
struct OracleKeys {
    std::map<TagNamespace, std::vector<std::string>> by_ns;
};

const std::map<CardField, OracleKeys>& oracle_table()
{
    static const std::map<CardField, OracleKeys> table{
        {CardField::Title,
         {{{TagNamespace::TwitterCard, {"twitter:title"}},
           {TagNamespace::OpenGraph, {"og:title"}},
           {TagNamespace::HtmlFallback, {"html:title"}}}}},
        {CardField::Description,
         {{{TagNamespace::TwitterCard, {"twitter:description"}},
           {TagNamespace::OpenGraph, {"og:description"}},
           {TagNamespace::HtmlFallback, {"html:description"}}}}},
        {CardField::Image,
         {{{TagNamespace::TwitterCard, {"twitter:image", "twitter:image:src"}},
           {TagNamespace::OpenGraph, {"og:image", "og:image:url", "og:image:secure_url"}}}}},
        {CardField::CardType,
         {{{TagNamespace::TwitterCard, {"twitter:card"}}, {TagNamespace::OpenGraph, {"og:type"}}}}},
        {CardField::Canonical, {{{TagNamespace::OpenGraph, {"og:url"}}}}},
    };
    return table;
}

struct Expected {
    const std::string* value = nullptr;
    std::optional<TagNamespace> ns;
};

Expected oracle_pick(const TagBag& bag, const std::vector<TagNamespace>& precedence, CardField field)
{
    const auto& keys = oracle_table().at(field).by_ns;
    for (auto ns : precedence) {
        auto it = keys.find(ns);
        if (it == keys.end())
            continue;
        for (const auto& k : it->second) {
            if (const auto* v = bag.find(k))
                return {&v->value, ns};
        }
    }
    return {};
}

const std::vector<std::string> kAllKeys{
    "twitter:title", "og:title",         "html:title",   "twitter:description", "og:description",
    "html:description", "twitter:image", "twitter:image:src", "og:image", "og:image:url",
    "og:image:secure_url", "twitter:card", "og:type",    "og:url",              "og:site_name",
    "twitter:site",  "og:locale",
};

std::string html_page(const std::string& title, const std::string& description, const std::string& body)
{
    return "<!doctype html>\n<html><head><title>" + title + "</title>\n<meta property=\"og:title\" content=\"" + title
           + "\">\n<meta property=\"og:description\" content=\"" + description + "\">\n</head>\n<body>\n<p>" + body
           + "</p>\n</body></html>\n";
}

struct Pair {
    const char* id;
    bool matched;
    const char* title;
    const char* description;
    const char* body;
};

// Labeled card/page pairs. Matched pages talk about what their card claims;
// mismatched ones serve unrelated content under a plausible card.
const Pair kPairs[] = {
    {"m01", true, "Spring Garden Festival", "Flowers, food trucks and live music in the city park.",
     "The spring garden festival returns to the city park this weekend. Expect flowers from local growers, food "
     "trucks along the lake path and live music on two stages from noon until dusk."},
    {"m02", true, "Annual Tax Return Guide", "How to file your annual tax return online before the deadline.",
     "This guide explains how to file your annual tax return online. Gather your income statements, check the "
     "deadline for your region and submit the return through the official portal."},
    {"m03", true, "Benign Login Portal", "Sign in to the benign portal",
     "Sign in to the benign portal now with your staff account."},
    {"m04", true, "Weekend Weather Outlook", "Sunny skies on Saturday, rain expected Sunday evening.",
     "Our weekend weather outlook: sunny skies and mild temperatures on Saturday. Clouds build on Sunday with rain "
     "expected by the evening, so plan outdoor trips early."},
    {"m05", true, "Homemade Sourdough Bread", "A simple recipe for crusty sourdough bread at home.",
     "Making sourdough bread at home takes patience. This simple recipe walks you through feeding the starter, "
     "shaping the loaf and baking a crusty bread in a covered pot."},
    {"m06", true, "City Marathon Road Closures", "Streets closed downtown during Sunday's marathon.",
     "Several downtown streets will be closed on Sunday for the city marathon. Road closures begin at six and the "
     "marathon route reopens to traffic by early afternoon."},
    {"m07", true, "Quarterly Earnings Report", "Revenue grew eight percent in the third quarter.",
     "The company published its quarterly earnings report today. Revenue grew eight percent in the third quarter, "
     "driven by strong demand for cloud services."},
    {"m08", true, "Library Summer Reading Program", "Join the summer reading program for kids and adults.",
     "The library summer reading program is open to kids and adults. Join online or at any branch, log your books "
     "and collect prizes through August."},
    {"m09", true, "Password Reset Instructions", "Reset your account password in three steps.",
     "To reset your account password, open the settings page, choose reset password and follow the three steps sent "
     "to your email address."},
    {"m10", true, "Community Blood Drive", "Donate blood at the community center on Friday.",
     "A community blood drive takes place at the community center on Friday. Donors should eat beforehand and bring "
     "photo identification. Every donation helps local hospitals."},
    {"m11", true, "New Bike Lanes Approved", "Council approves protected bike lanes on Main Street.",
     "The city council has approved protected bike lanes on Main Street. Construction of the new lanes starts next "
     "month."},
    {"m12", true, "Museum Free Entry Day", "Free entry to the history museum this Sunday.",
     "Free entry day at the history museum is this Sunday. Visitors can explore every gallery without tickets."},
    {"x01", false, "Official Bank Security Update", "Confirm your online banking details to keep your account safe.",
     "Cheap replica watches and handbags. Best prices on luxury goods, free shipping worldwide."},
    {"x02", false, "Library Summer Reading Program", "Join the summer reading program for kids and adults.",
     "Congratulations! You have been selected to receive a crypto giveaway. Connect your wallet to claim 5000 "
     "tokens before the offer ends."},
    {"x03", false, "Quarterly Earnings Report", "Revenue grew eight percent in the third quarter.",
     "Hot singles in your area are waiting to chat. Create a free profile and start messaging tonight."},
    {"x04", false, "Password Reset Instructions", "Reset your account password in three steps.",
     "Download the latest movies and series in full HD. No registration, unlimited streaming, new releases every "
     "day."},
    {"x05", false, "Weekend Weather Outlook", "Sunny skies on Saturday, rain expected Sunday evening.",
     "Buy followers and likes for your social media profiles. Instant delivery, cheap packages, money back "
     "guarantee."},
    {"x06", false, "Community Blood Drive", "Donate blood at the community center on Friday.",
     "Your computer is infected with a virus. Call the support number now and install our cleaning tool to remove "
     "the threat."},
    {"x07", false, "Museum Free Entry Day", "Free entry to the history museum this Sunday.",
     "Casino bonus spins with no deposit required. Play slots, roulette and poker with instant withdrawals."},
    {"x08", false, "City Marathon Road Closures", "Streets closed downtown during Sunday's marathon.",
     "Lose weight fast with this miracle pill. Doctors hate this one trick, order a trial pack today."},
    {"x09", false, "Homemade Sourdough Bread", "A simple recipe for crusty sourdough bread at home.",
     "Work from home and earn thousands every week. No experience needed, sign up with your bank card to start."},
    {"x10", false, "New Bike Lanes Approved", "Council approves protected bike lanes on Main Street.",
     "Verify your parcel delivery. A package is held at customs, pay the small release fee with a credit card."},
    {"x11", false, "Annual Tax Return Guide", "How to file your annual tax return online before the deadline.",
     "Exclusive discount on designer sneakers. Limited stock, order now and get a second pair half price."},
    {"x12", false, "Spring Garden Festival", "Flowers, food trucks and live music in the city park.",
     "Unlock premium accounts for games and streaming for free. Enter your login details to generate access."},
};

}  // namespace

std::string fixture_dir()
{
    return SHARECARD_FIXTURE_DIR;
}

Outcome corpus_goldens()
{
    Outcome o;
    auto dir = fixture_dir() + "/html/";
    auto manifest = json::parse(read_all(dir + "manifest.json"));
    auto base_text = manifest.at("base").get<std::string>();
    auto base = Url::parse(base_text);
    for (const auto& doc : manifest.at("docs")) {
        ++o.cases;
        auto file = doc.at("file").get<std::string>();
        auto bytes = read_all(dir + file);
        auto tags = extract_tags(bytes, base);

        TagBag want;
        for (const auto& [k, v] : doc.at("tags").items()) {
            bool truncated = v.is_object() && v.value("truncated", false);
            want.set(k, TagValue{golden_string(v), truncated});
        }
        if (!(tags == want)) {
            std::string got_keys;
            for (const auto& [k, v] : tags)
                got_keys += k + "='" + short_text(v.value) + "'" + (v.truncated ? "(cut) " : " ");
            o.failures.push_back(file + ": tag bag mismatch, got " + (got_keys.empty() ? "<empty>" : got_keys));
        }
        for (const auto& v : tags) {
            // Nothing extracted may be absent from the input (URL values resolve, so check those loosely).
            if (v.first.ends_with("url") || v.first.find("image") != std::string::npos)
                continue;
            if (bytes.find(v.second.value) == std::string::npos && html::decode_entities(bytes).find(v.second.value)
                                                                      == std::string::npos)
                o.failures.push_back(file + ": value for " + v.first + " does not occur in the input");
        }

        auto card = resolve_card(tags, PlatformProfile::twitter_like(), base);
        for (auto& f : compare_card(file, "twitter-like", doc.at("card"), card, base_text))
            o.failures.push_back(std::move(f));
        if (doc.contains("card_og_generic")) {
            auto og = resolve_card(tags, PlatformProfile::og_generic(), base);
            for (auto& f : compare_card(file, "og-generic", doc.at("card_og_generic"), og, base_text))
                o.failures.push_back(std::move(f));
        }
        auto reparsed = parse_card_record(render_card(card).record);
        if (!(reparsed == card))
            o.failures.push_back(file + ": render/parse round trip changed the card");
    }
    return o;
}

Outcome precedence_property(std::size_t n, std::uint64_t seed)
{
    Outcome o;
    std::mt19937_64 rng(seed);
    const std::vector<TagNamespace> all{TagNamespace::TwitterCard, TagNamespace::OpenGraph,
                                        TagNamespace::HtmlFallback};
    const auto fetch_url = Url::parse("http://prop.test/page");
    for (std::size_t i = 0; i < n; ++i) {
        ++o.cases;
        TagBag bag;
        for (const auto& k : kAllKeys) {
            if (rng() % 3 == 0)
                bag.set(k, TagValue{k + "#" + std::to_string(rng() % 1000), rng() % 17 == 0});
        }
        PlatformProfile profile;
        profile.name = "random";
        profile.crawler_user_agent = "PropBot/1.0";
        profile.tag_precedence = all;
        std::shuffle(profile.tag_precedence.begin(), profile.tag_precedence.end(), rng);
        profile.tag_precedence.resize(1 + rng() % 3);

        auto card = resolve_card(bag, profile, fetch_url);
        auto title = oracle_pick(bag, profile.tag_precedence, CardField::Title);
        auto desc = oracle_pick(bag, profile.tag_precedence, CardField::Description);
        auto image = oracle_pick(bag, profile.tag_precedence, CardField::Image);
        auto type = oracle_pick(bag, profile.tag_precedence, CardField::CardType);
        auto canon = oracle_pick(bag, profile.tag_precedence, CardField::Canonical);

        std::string why;
        bool any = title.value || desc.value || image.value || type.value || canon.value;
        if (card.is_empty() != !any)
            why += " emptiness";
        if (any) {
            if (card.title != (title.value ? *title.value : ""))
                why += " title";
            if (card.description != (desc.value ? *desc.value : ""))
                why += " description";
            if (card.image_url != (image.value ? std::optional(*image.value) : std::nullopt))
                why += " image";
            if (card.card_type != (type.value ? std::optional(*type.value) : std::nullopt))
                why += " card_type";
            if (card.canonical_url != (canon.value ? *canon.value : fetch_url.str()))
                why += " canonical";
            if (card.source != (title.ns ? title.ns : std::optional(TagNamespace::HtmlFallback)))
                why += " namespace";
            bool want_truncated = false;
            for (const auto* e : {&title, &desc, &image, &type, &canon}) {
                if (e->value && bag.find(std::string_view(e->value->substr(0, e->value->find('#'))))->truncated)
                    want_truncated = true;
            }
            if (card.truncated != want_truncated)
                why += " truncated";
        } else if (card.canonical_url != fetch_url.str()) {
            why += " empty-canonical";
        }
        if (!why.empty())
            o.failures.push_back("case " + std::to_string(i) + ":" + why);
    }
    return o;
}

CalibrationResult audit_calibration(const Thresholds& thresholds)
{
    lab::ServerSpec server{"audit.local", {}};
    for (const auto& p : kPairs)
        server.routes.push_back({std::string("/") + p.id, std::nullopt,
                                 lab::ServeBody{200, html_page(p.title, p.description, p.body)}});
    lab::Scenario scenario{"audit-calibration", {server}};
    auto running = lab::Lab::start(scenario);
    auto fetcher = testsupport::fetcher_for(running);

    CalibrationResult r;
    for (const auto& p : kPairs) {
        auto url = testsupport::lab_url("audit.local", std::string("/") + p.id);
        auto fetched = fetcher.fetch(url, Persona::twitterbot());
        auto card = resolve_card(extract_tags(fetched.body, url), PlatformProfile::twitter_like(), url);
        auto audit = consistency_audit(card, html::visible_text(fetched.body));
        bool predicted_match = !audit.insufficient_data && audit.score >= thresholds.t_card;
        if (p.matched) {
            ++r.matched;
            r.min_matched = std::min(r.min_matched, audit.score);
        } else {
            ++r.mismatched;
            r.max_mismatched = std::max(r.max_mismatched, audit.score);
        }
        if (predicted_match != p.matched)
            r.misclassified.push_back(std::string(p.id) + " score " + std::to_string(audit.score));
    }
    return r;
}

Outcome chain_invariants(std::size_t n, std::uint64_t seed)
{
    Outcome o;
    std::mt19937_64 rng(seed);
    const std::vector<std::string> hosts{"h0.local", "h1.local", "h2.local", "h3.local"};
    const int statuses[] = {301, 302, 303, 307, 308};

    struct Planned {
        std::vector<std::string> urls;
        std::vector<int> status;
        std::vector<HopKind> kinds;
        int max_hops = 1;
    };

    constexpr std::size_t kBatch = 50;
    for (std::size_t done = 0; done < n;) {
        std::size_t batch = std::min(kBatch, n - done);
        std::map<std::string, lab::ServerSpec> servers;
        for (const auto& h : hosts)
            servers[h] = lab::ServerSpec{h, {}};
        std::vector<Planned> plans;
        for (std::size_t c = 0; c < batch; ++c) {
            Planned p;
            int hop_count = 1 + static_cast<int>(rng() % 12);
            p.max_hops = 1 + static_cast<int>(rng() % 12);
            std::vector<std::string> hop_hosts, hop_paths;
            for (int k = 0; k < hop_count; ++k) {
                hop_hosts.push_back(hosts[rng() % hosts.size()]);
                hop_paths.push_back("/c" + std::to_string(done + c) + "/s" + std::to_string(k));
                p.urls.push_back(lab::Lab::url(hop_hosts.back(), hop_paths.back()));
            }
            for (int k = 0; k < hop_count; ++k) {
                auto& routes = servers[hop_hosts[k]].routes;
                if (k + 1 == hop_count) {
                    routes.push_back({hop_paths[k], std::nullopt,
                                      lab::ServeBody{200, "<html><body>end of chain " + p.urls[k] + "</body></html>"}});
                    p.status.push_back(200);
                    p.kinds.push_back(HopKind::Final);
                    continue;
                }
                bool same_host = hop_hosts[k] == hop_hosts[k + 1];
                std::string target = same_host && rng() % 2 ? hop_paths[k + 1] : p.urls[k + 1];
                if (rng() % 4 == 0) {
                    routes.push_back({hop_paths[k], std::nullopt,
                                      lab::ServeBody{200, "<html><head><meta http-equiv=\"refresh\" content=\"0; url="
                                                              + target + "\"></head></html>"}});
                    p.status.push_back(200);
                    p.kinds.push_back(HopKind::MetaRefresh);
                } else {
                    int status = statuses[rng() % 5];
                    routes.push_back({hop_paths[k], std::nullopt, lab::Redirect{status, target}});
                    p.status.push_back(status);
                    p.kinds.push_back(HopKind::Http3xx);
                }
            }
            plans.push_back(std::move(p));
        }
        lab::Scenario scenario{"random-chains", {}};
        for (auto& [_, s] : servers)
            scenario.servers.push_back(std::move(s));
        auto running = lab::Lab::start(scenario);
        auto fetcher = testsupport::fetcher_for(running);

        for (std::size_t c = 0; c < plans.size(); ++c) {
            ++o.cases;
            const auto& p = plans[c];
            auto id = "case " + std::to_string(done + c) + " (" + std::to_string(p.urls.size()) + " hops, max "
                      + std::to_string(p.max_hops) + ")";
            RedirectChain chain;
            try {
                chain = fetcher.trace_redirects(Url::parse(p.urls.front()), Persona::twitterbot(), p.max_hops);
            } catch (const std::exception& e) {
                o.failures.push_back(id + ": " + e.what());
                continue;
            }
            std::string why;
            std::size_t want_hops = std::min<std::size_t>(p.urls.size(), static_cast<std::size_t>(p.max_hops));
            bool want_truncated = p.urls.size() > static_cast<std::size_t>(p.max_hops);
            if (chain.hops.size() != want_hops)
                why += " hop-count " + std::to_string(chain.hops.size());
            if (chain.truncated != want_truncated)
                why += " truncated-flag";
            if (!chain.well_formed())
                why += " not-well-formed";
            for (std::size_t k = 0; k < chain.hops.size(); ++k) {
                const auto& h = chain.hops[k];
                bool last = k + 1 == chain.hops.size();
                if (k < p.urls.size() && (h.url != p.urls[k] || h.status != p.status[k] || h.kind != p.kinds[k]))
                    why += " hop" + std::to_string(k) + "-shape";
                if (!last && (!h.location || *h.location != chain.hops[k + 1].url))
                    why += " link" + std::to_string(k);
                if ((h.kind == HopKind::Final) != (last && !chain.truncated))
                    why += " final" + std::to_string(k);
            }
            if (!why.empty())
                o.failures.push_back(id + ":" + why);
        }
        done += batch;
    }
    return o;
}

}  // namespace checks
