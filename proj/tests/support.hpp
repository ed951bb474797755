#pragma once

#include "sharecard/attack_lab.hpp"
#include "sharecard/fetcher.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace testsupport {

inline sharecard::Fetcher fetcher_for(const sharecard::lab::Lab& lab)
{
    sharecard::FetcherOptions opts;
    opts.host_overrides = lab.host_overrides();
    return sharecard::Fetcher(opts);
}

inline sharecard::Url lab_url(const std::string& alias, const std::string& path = "/")
{
    return sharecard::Url::parse(sharecard::lab::Lab::url(alias, path));
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir()
    {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("sharecard-test-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace testsupport
