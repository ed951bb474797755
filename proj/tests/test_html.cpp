#include <doctest.h>

#include "sharecard/html.hpp"

using namespace sharecard::html;

TEST_SUITE("html") {

TEST_CASE("tokenizer yields tags, attributes and text in order")
{
    Tokenizer tok(R"(<p class="a" ID=x>hi</p><!-- c --><br/>)");
    auto t = tok.next();
    REQUIRE(t);
    CHECK(t->kind == TokenKind::StartTag);
    CHECK(t->name == "p");
    REQUIRE(t->attr("class"));
    CHECK(*t->attr("class") == "a");
    CHECK(*t->attr("id") == "x");
    t = tok.next();
    CHECK(t->kind == TokenKind::Text);
    CHECK(t->text == "hi");
    t = tok.next();
    CHECK(t->kind == TokenKind::EndTag);
    CHECK(t->name == "p");
    t = tok.next();
    CHECK(t->kind == TokenKind::Comment);
    CHECK(t->text == " c ");
    t = tok.next();
    CHECK(t->kind == TokenKind::StartTag);
    CHECK(t->name == "br");
    CHECK_FALSE(tok.next());
}

TEST_CASE("raw text elements swallow markup")
{
    Tokenizer tok("<script>if (a<b) x = '<meta>';</script><p>");
    CHECK(tok.next()->name == "script");
    auto body = tok.next();
    CHECK(body->raw_text);
    CHECK(body->text == "if (a<b) x = '<meta>';");
    CHECK(tok.next()->kind == TokenKind::EndTag);
    CHECK(tok.next()->name == "p");
}

TEST_CASE("unterminated tag at end of input is dropped")
{
    Tokenizer tok("<a href=\"x\">text<meta content=\"open");
    CHECK(tok.next()->name == "a");
    CHECK(tok.next()->text == "text");
    CHECK_FALSE(tok.next());
}

TEST_CASE("entity decoding")
{
    CHECK(decode_entities("a &amp; b") == "a & b");
    CHECK(decode_entities("&lt;&gt;&quot;&apos;") == "<>\"'");
    CHECK(decode_entities("&#65;&#x42;&#X43;") == "ABC");
    CHECK(decode_entities("&#x1F600;") == "\xF0\x9F\x98\x80");
    CHECK(decode_entities("&unknown; & &amp") == "&unknown; & &amp");
    CHECK(decode_entities("&#0;") == "\xEF\xBF\xBD");
}

TEST_CASE("non-HTML sniffing")
{
    CHECK(looks_like_html("<html></html>"));
    CHECK(looks_like_html(""));
    CHECK_FALSE(looks_like_html(std::string_view("\x89PNG\r\n", 6)));
    CHECK_FALSE(looks_like_html("%PDF-1.7"));
    CHECK_FALSE(looks_like_html(std::string("ab\0cd", 5)));
}

TEST_CASE("visible text drops head, scripts and hidden elements")
{
    auto text = visible_text(R"(<html><head><title>T</title><style>p{}</style></head>
<body><h1>Hello</h1>  <p>big&nbsp;world</p><script>var x;</script><noscript>nojs</noscript>
<template>tpl</template><p>end</p></body></html>)");
    CHECK(text == "Hello big\xC2\xA0world end");
}

TEST_CASE("meta refresh target")
{
    CHECK(meta_refresh_target(R"(<meta http-equiv="refresh" content="0; url=/next">)") == "/next");
    CHECK(meta_refresh_target(R"(<meta http-equiv="Refresh" content="5;URL='http://x.test/'">)") == "http://x.test/");
    CHECK(meta_refresh_target(R"(<meta http-equiv="refresh" content="0, /alt">)") == "/alt");
    CHECK_FALSE(meta_refresh_target(R"(<meta http-equiv="refresh" content="30">)"));
    CHECK_FALSE(meta_refresh_target("<p>nothing</p>"));
}

TEST_CASE("script redirect detection is lexical")
{
    CHECK(has_script_redirect("<script>window.location.href = '/x';</script>"));
    CHECK(has_script_redirect("<script>location.replace('/y')</script>"));
    CHECK(has_script_redirect(R"(<body onload="document.location='z'">)"));
    CHECK_FALSE(has_script_redirect("<script>if (location == x) {}</script>"));
    CHECK_FALSE(has_script_redirect("<p>location.href = nothing, not a script</p>"));
}

}
