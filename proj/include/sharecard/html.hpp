#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Streaming, forgiving HTML tokenizer. No tree is built and nothing is
// executed; it only recovers tags, attributes and text runs in order.
namespace sharecard::html {

struct Attribute {
    std::string name;  // lowercase
    std::string value; // entity-decoded
};

enum class TokenKind { StartTag, EndTag, Text, Comment };

struct Token {
    TokenKind kind = TokenKind::Text;
    std::string name;  // lowercase tag name for StartTag/EndTag
    std::vector<Attribute> attributes;
    std::string_view text;  // raw text for Text/Comment
    bool raw_text = false;  // contents of script/style/title/textarea

    const std::string* attr(std::string_view attr_name) const;
};

class Tokenizer {
public:
    explicit Tokenizer(std::string_view input) : in_(input) {}

    std::optional<Token> next();

private:
    std::optional<Token> read_tag();
    void skip_ws();

    std::string_view in_;
    std::size_t pos_ = 0;
    std::string pending_raw_end_;  // set after a raw-text element start tag
};

std::string decode_entities(std::string_view text);

/// Cheap sniff: NUL bytes or a binary magic number in the first KiB.
bool looks_like_html(std::string_view bytes);

/// Visible text: tags stripped, head/title/script/style/noscript/template
/// dropped, entities decoded, whitespace collapsed to single spaces.
std::string visible_text(std::string_view html);

/// Target of a `<meta http-equiv="refresh" content="N; url=...">`, raw
/// (unresolved). Absent when there is no refresh or it has no URL.
std::optional<std::string> meta_refresh_target(std::string_view html);

/// Lexical scan for script-driven navigation (location.href = ..., etc.).
bool has_script_redirect(std::string_view html);

}  // namespace sharecard::html
