#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <stdexcept>
#include <string>

#include "sharecard/card.hpp"
#include "sharecard/clock.hpp"
#include "sharecard/fetcher.hpp"
#include "sharecard/public_suffix.hpp"

// Platform side of a share-SDK flow: app registration with a secure-domain
// list, access tokens, page config checks, and card creation. Flawed mode
// trusts the jump link's host; Mitigated mode follows it first.
namespace sharecard::sdk {

class SdkError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class InvalidDomain : public SdkError {
public:
    using SdkError::SdkError;
};
class AuthFailed : public SdkError {
public:
    using SdkError::SdkError;
};
class TokenExpired : public SdkError {
public:
    using SdkError::SdkError;
};
class UnknownApp : public SdkError {
public:
    using SdkError::SdkError;
};

struct AppRegistration {
    std::string app_id;
    std::string app_secret;
    std::set<std::string> registered_domains;
};

struct AccessToken {
    std::string token;
    std::string app_id;
    TimePoint expires_at;
};

struct SdkCardRequest {
    std::string token;
    std::string title;
    std::string description;
    std::optional<std::string> image_url;
    std::string jump_link;
};

enum class ValidationMode { Flawed, Mitigated };
std::string_view to_string(ValidationMode m);
ValidationMode parse_validation_mode(std::string_view text);

struct SdkDecision {
    bool accepted = false;
    ValidationMode mode = ValidationMode::Flawed;
    std::string reason;
    std::optional<std::string> resolved_final_host;  // Mitigated only
};

struct CardOutcome {
    SdkDecision decision;
    std::optional<CardMetadata> card;  // present iff accepted
};

struct SdkOptions {
    std::chrono::seconds token_lifetime{7200};
    /// Match registered domains by registrable suffix instead of exact host.
    bool registrable_matching = false;
    Persona resolver_persona = Persona::desktop_browser();
    FetchLimits limits;
};

/// Registration and token stores behind one reader/writer lock.
class SdkPlatform {
public:
    SdkPlatform(const Clock& clock, SdkOptions options = {});

    /// Throws InvalidDomain on an empty set or a malformed hostname.
    AppRegistration register_app(const std::set<std::string>& registered_domains);
    /// Throws AuthFailed. Every issued token stays valid until it expires.
    AccessToken issue_token(const std::string& app_id, const std::string& app_secret);
    /// Host membership of `page_url`; throws UnknownApp.
    bool validate_config(const std::string& app_id, const Url& page_url) const;

    /// Throws AuthFailed for an unknown token, TokenExpired for an expired one, UnknownApp if
    /// its app vanished. Mitigated-mode network failures reject instead of throwing.
    CardOutcome create_card(const SdkCardRequest& req, ValidationMode mode, const Fetcher& fetcher) const;

    const SdkOptions& options() const { return options_; }

private:
    bool host_registered(const AppRegistration& app, std::string_view host) const;

    const Clock& clock_;
    SdkOptions options_;
    mutable std::shared_mutex mu_;
    std::map<std::string, AppRegistration> apps_;
    std::map<std::string, AccessToken> tokens_;
};

/// 128 random bits, hex encoded.
std::string random_hex_128();

}  // namespace sharecard::sdk
