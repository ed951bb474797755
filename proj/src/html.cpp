#include "sharecard/html.hpp"

#include "sharecard/url.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <regex>

namespace sharecard::html {

namespace {

bool is_space(char c)
{
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f';
}

bool is_alpha(char c)
{
    return std::isalpha(static_cast<unsigned char>(c)) != 0;
}

bool is_raw_text_element(std::string_view name)
{
    return name == "script" || name == "style" || name == "title" || name == "textarea" || name == "xmp";
}

bool iequals_at(std::string_view hay, std::size_t pos, std::string_view needle)
{
    if (pos + needle.size() > hay.size())
        return false;
    for (std::size_t i = 0; i < needle.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(hay[pos + i])) != needle[i])
            return false;
    }
    return true;
}

std::size_t ifind(std::string_view hay, std::string_view needle, std::size_t from)
{
    if (needle.empty())
        return from;
    for (std::size_t i = from; i + needle.size() <= hay.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(hay[i])) == needle[0] && iequals_at(hay, i, needle))
            return i;
    }
    return std::string_view::npos;
}

void append_utf8(std::string& out, char32_t cp)
{
    if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
        cp = 0xFFFD;
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

struct NamedEntity {
    std::string_view name;
    char32_t cp;
};

constexpr std::array kEntities{
    NamedEntity{"amp", U'&'},      NamedEntity{"lt", U'<'},       NamedEntity{"gt", U'>'},
    NamedEntity{"quot", U'"'},     NamedEntity{"apos", U'\''},    NamedEntity{"nbsp", 0xA0},
    NamedEntity{"copy", 0xA9},     NamedEntity{"reg", 0xAE},      NamedEntity{"trade", 0x2122},
    NamedEntity{"hellip", 0x2026}, NamedEntity{"mdash", 0x2014},  NamedEntity{"ndash", 0x2013},
    NamedEntity{"laquo", 0xAB},    NamedEntity{"raquo", 0xBB},    NamedEntity{"lsquo", 0x2018},
    NamedEntity{"rsquo", 0x2019},  NamedEntity{"ldquo", 0x201C},  NamedEntity{"rdquo", 0x201D},
    NamedEntity{"middot", 0xB7},   NamedEntity{"euro", 0x20AC},
};

std::string collapse_whitespace(std::string_view s)
{
    std::string out;
    bool pending_space = false;
    for (char c : s) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space)
            out += ' ';
        pending_space = false;
        out += c;
    }
    return out;
}

}  // namespace

const std::string* Token::attr(std::string_view attr_name) const
{
    for (const auto& a : attributes) {
        if (a.name == attr_name)
            return &a.value;
    }
    return nullptr;
}

void Tokenizer::skip_ws()
{
    while (pos_ < in_.size() && is_space(in_[pos_]))
        ++pos_;
}

std::optional<Token> Tokenizer::next()
{
    while (pos_ < in_.size()) {
        if (!pending_raw_end_.empty()) {
            auto end = ifind(in_, "</" + pending_raw_end_, pos_);
            if (end == std::string_view::npos)
                end = in_.size();
            Token t;
            t.kind = TokenKind::Text;
            t.raw_text = true;
            t.name = pending_raw_end_;
            t.text = in_.substr(pos_, end - pos_);
            pos_ = end;
            pending_raw_end_.clear();
            if (!t.text.empty())
                return t;
            continue;
        }

        if (in_[pos_] != '<') {
            auto end = in_.find('<', pos_);
            if (end == std::string_view::npos)
                end = in_.size();
            Token t;
            t.text = in_.substr(pos_, end - pos_);
            pos_ = end;
            return t;
        }

        if (in_.substr(pos_).starts_with("<!--")) {
            auto end = in_.find("-->", pos_ + 4);
            Token t;
            t.kind = TokenKind::Comment;
            t.text = in_.substr(pos_ + 4, end == std::string_view::npos ? std::string_view::npos : end - pos_ - 4);
            pos_ = end == std::string_view::npos ? in_.size() : end + 3;
            return t;
        }

        char next = pos_ + 1 < in_.size() ? in_[pos_ + 1] : '\0';
        if (next == '!' || next == '?') {
            auto end = in_.find('>', pos_);
            Token t;
            t.kind = TokenKind::Comment;
            t.text = in_.substr(pos_ + 2, end == std::string_view::npos ? std::string_view::npos : end - pos_ - 2);
            pos_ = end == std::string_view::npos ? in_.size() : end + 1;
            return t;
        }
        if (next == '/' && pos_ + 2 < in_.size() && is_alpha(in_[pos_ + 2])) {
            std::size_t p = pos_ + 2;
            std::size_t start = p;
            while (p < in_.size() && !is_space(in_[p]) && in_[p] != '>' && in_[p] != '/')
                ++p;
            Token t;
            t.kind = TokenKind::EndTag;
            t.name = to_lower(in_.substr(start, p - start));
            auto end = in_.find('>', p);
            pos_ = end == std::string_view::npos ? in_.size() : end + 1;
            return t;
        }
        if (is_alpha(next)) {
            if (auto t = read_tag())
                return t;
            continue;
        }

        // A lone '<' is text.
        auto end = in_.find('<', pos_ + 1);
        if (end == std::string_view::npos)
            end = in_.size();
        Token t;
        t.text = in_.substr(pos_, end - pos_);
        pos_ = end;
        return t;
    }
    return std::nullopt;
}

std::optional<Token> Tokenizer::read_tag()
{
    bool closed = false;
    Token t;
    t.kind = TokenKind::StartTag;
    ++pos_;
    std::size_t start = pos_;
    while (pos_ < in_.size() && !is_space(in_[pos_]) && in_[pos_] != '>' && in_[pos_] != '/')
        ++pos_;
    t.name = to_lower(in_.substr(start, pos_ - start));

    while (pos_ < in_.size()) {
        skip_ws();
        while (pos_ < in_.size() && in_[pos_] == '/')
            ++pos_;
        skip_ws();
        if (pos_ >= in_.size())
            break;
        if (in_[pos_] == '>') {
            ++pos_;
            closed = true;
            break;
        }
        std::size_t name_start = pos_;
        while (pos_ < in_.size() && !is_space(in_[pos_]) && in_[pos_] != '=' && in_[pos_] != '>'
               && in_[pos_] != '/')
            ++pos_;
        if (pos_ == name_start) {  // stray '=' or similar
            ++pos_;
            continue;
        }
        Attribute a;
        a.name = to_lower(in_.substr(name_start, pos_ - name_start));
        skip_ws();
        if (pos_ < in_.size() && in_[pos_] == '=') {
            ++pos_;
            skip_ws();
            if (pos_ < in_.size() && (in_[pos_] == '"' || in_[pos_] == '\'')) {
                char quote = in_[pos_++];
                auto close = in_.find(quote, pos_);
                if (close == std::string_view::npos)
                    close = in_.size();
                a.value = decode_entities(in_.substr(pos_, close - pos_));
                pos_ = std::min(close + 1, in_.size());
            } else {
                std::size_t v = pos_;
                while (pos_ < in_.size() && !is_space(in_[pos_]) && in_[pos_] != '>')
                    ++pos_;
                a.value = decode_entities(in_.substr(v, pos_ - v));
            }
        }
        if (!t.attr(a.name))
            t.attributes.push_back(std::move(a));
    }
    // Unterminated tag at end of input is dropped.
    if (!closed)
        return std::nullopt;
    if (is_raw_text_element(t.name))
        pending_raw_end_ = t.name;
    return t;
}

std::string decode_entities(std::string_view text)
{
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] != '&') {
            out += text[i++];
            continue;
        }
        auto semi = text.find(';', i + 1);
        if (semi == std::string_view::npos || semi - i > 12) {
            out += text[i++];
            continue;
        }
        auto body = text.substr(i + 1, semi - i - 1);
        bool decoded = false;
        if (body.size() > 1 && body[0] == '#') {
            bool hex = body[1] == 'x' || body[1] == 'X';
            auto digits = body.substr(hex ? 2 : 1);
            std::uint32_t cp = 0;
            auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), cp, hex ? 16 : 10);
            if (!digits.empty() && ec == std::errc{} && ptr == digits.data() + digits.size()) {
                append_utf8(out, static_cast<char32_t>(cp));
                decoded = true;
            }
        } else {
            for (const auto& e : kEntities) {
                if (e.name == body) {
                    append_utf8(out, e.cp);
                    decoded = true;
                    break;
                }
            }
        }
        if (decoded) {
            i = semi + 1;
        } else {
            out += text[i++];
        }
    }
    return out;
}

bool looks_like_html(std::string_view bytes)
{
    auto head = bytes.substr(0, 1024);
    if (head.find('\0') != std::string_view::npos)
        return false;
    constexpr std::array<std::string_view, 5> magic{"\x89PNG", "GIF8", "\xFF\xD8\xFF", "%PDF-", "PK\x03\x04"};
    return std::none_of(magic.begin(), magic.end(), [&](auto m) { return head.starts_with(m); });
}

std::string visible_text(std::string_view html)
{
    if (!looks_like_html(html))
        return {};
    std::string text;
    int head_depth = 0;
    int hidden_depth = 0;
    Tokenizer tok(html);
    while (auto t = tok.next()) {
        switch (t->kind) {
        case TokenKind::StartTag:
            if (t->name == "head")
                ++head_depth;
            else if (t->name == "body")
                head_depth = 0;
            else if (t->name == "noscript" || t->name == "template")
                ++hidden_depth;
            text += ' ';
            break;
        case TokenKind::EndTag:
            if (t->name == "head")
                head_depth = std::max(0, head_depth - 1);
            else if (t->name == "noscript" || t->name == "template")
                hidden_depth = std::max(0, hidden_depth - 1);
            text += ' ';
            break;
        case TokenKind::Text:
            if (t->raw_text && t->name != "textarea")
                break;
            if (head_depth == 0 && hidden_depth == 0)
                text += decode_entities(t->text);
            break;
        case TokenKind::Comment:
            break;
        }
    }
    return collapse_whitespace(text);
}

std::optional<std::string> meta_refresh_target(std::string_view html)
{
    if (!looks_like_html(html))
        return std::nullopt;
    Tokenizer tok(html);
    while (auto t = tok.next()) {
        if (t->kind != TokenKind::StartTag || t->name != "meta")
            continue;
        const auto* equiv = t->attr("http-equiv");
        const auto* content = t->attr("content");
        if (!equiv || !content || to_lower(*equiv) != "refresh")
            continue;
        // content = "<delay>[;,] url=<target>" ; the "url=" prefix is optional.
        std::string_view c = *content;
        auto sep = c.find_first_of(";,");
        if (sep == std::string_view::npos)
            return std::nullopt;
        auto rest = c.substr(sep + 1);
        while (!rest.empty() && is_space(rest.front()))
            rest.remove_prefix(1);
        if (iequals_at(rest, 0, "url")) {
            auto after = rest.substr(3);
            while (!after.empty() && is_space(after.front()))
                after.remove_prefix(1);
            if (!after.empty() && after.front() == '=') {
                after.remove_prefix(1);
                rest = after;
            }
        }
        while (!rest.empty() && is_space(rest.front()))
            rest.remove_prefix(1);
        while (!rest.empty() && is_space(rest.back()))
            rest.remove_suffix(1);
        if (rest.size() >= 2 && (rest.front() == '\'' || rest.front() == '"') && rest.back() == rest.front())
            rest = rest.substr(1, rest.size() - 2);
        if (rest.empty())
            return std::nullopt;
        return std::string(rest);
    }
    return std::nullopt;
}

bool has_script_redirect(std::string_view html)
{
    static const std::regex pattern(
        R"((window\.|document\.|top\.|self\.)?location(\.href)?\s*=[^=]|location\.(replace|assign)\s*\()",
        std::regex::icase | std::regex::optimize);
    Tokenizer tok(html);
    while (auto t = tok.next()) {
        if (t->kind == TokenKind::Text && t->raw_text && t->name == "script") {
            if (std::regex_search(t->text.begin(), t->text.end(), pattern))
                return true;
        }
        if (t->kind == TokenKind::StartTag) {
            for (const auto& a : t->attributes) {
                if (a.name.starts_with("on") && std::regex_search(a.value, pattern))
                    return true;
            }
        }
    }
    return false;
}

}  // namespace sharecard::html
