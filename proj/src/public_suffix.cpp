#include "sharecard/public_suffix.hpp"

#include "sharecard/url.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace sharecard {

extern const char* const kBundledPublicSuffixList;

namespace {

std::vector<std::string_view> split_labels(std::string_view host)
{
    std::vector<std::string_view> labels;
    std::size_t start = 0;
    while (start <= host.size()) {
        auto dot = host.find('.', start);
        if (dot == std::string_view::npos) {
            labels.push_back(host.substr(start));
            break;
        }
        labels.push_back(host.substr(start, dot - start));
        start = dot + 1;
    }
    return labels;
}

std::string join_from(const std::vector<std::string_view>& labels, std::size_t from)
{
    std::string out;
    for (std::size_t i = from; i < labels.size(); ++i) {
        if (!out.empty())
            out += '.';
        out += labels[i];
    }
    return out;
}

}  // namespace

PublicSuffixList PublicSuffixList::parse(std::istream& in)
{
    PublicSuffixList psl;
    std::string line;
    while (std::getline(in, line)) {
        auto end = line.find_first_of(" \t\r");
        std::string rule = to_lower(line.substr(0, end));
        if (rule.empty() || rule.starts_with("//"))
            continue;
        if (rule.starts_with('!'))
            psl.rules_["!" + rule.substr(1)] = RuleKind::Exception;
        else if (rule.starts_with("*."))
            psl.rules_["*" + rule.substr(2)] = RuleKind::Wildcard;
        else
            psl.rules_[rule] = RuleKind::Normal;
    }
    return psl;
}

PublicSuffixList PublicSuffixList::parse(std::string_view text)
{
    std::istringstream in{std::string(text)};
    return parse(in);
}

PublicSuffixList PublicSuffixList::load_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open public suffix file: " + path);
    return parse(in);
}

const PublicSuffixList& PublicSuffixList::bundled()
{
    static const PublicSuffixList psl = parse(std::string_view(kBundledPublicSuffixList));
    return psl;
}

std::string PublicSuffixList::public_suffix(std::string_view raw_host) const
{
    std::string host = to_lower(raw_host);
    while (!host.empty() && host.back() == '.')
        host.pop_back();
    if (host.empty() || is_ip_literal(host))
        return host;
    auto labels = split_labels(host);
    const auto n = labels.size();

    for (std::size_t i = 0; i < n; ++i) {
        if (rules_.count("!" + join_from(labels, i)))
            return join_from(labels, i + 1);
    }
    for (std::size_t i = 0; i < n; ++i) {
        auto candidate = join_from(labels, i);
        if (auto it = rules_.find(candidate); it != rules_.end() && it->second == RuleKind::Normal)
            return candidate;
        if (i + 1 < n && rules_.count("*" + join_from(labels, i + 1)))
            return candidate;
    }
    return std::string(labels.back());
}

std::string PublicSuffixList::registrable_domain(std::string_view raw_host) const
{
    std::string host = to_lower(raw_host);
    while (!host.empty() && host.back() == '.')
        host.pop_back();
    if (host.empty() || is_ip_literal(host))
        return host;
    auto suffix = public_suffix(host);
    if (suffix.size() >= host.size())
        return host;
    auto head = std::string_view(host).substr(0, host.size() - suffix.size() - 1);
    auto dot = head.rfind('.');
    auto label = dot == std::string_view::npos ? head : head.substr(dot + 1);
    return std::string(label) + "." + suffix;
}

std::string site_of(std::string_view host, HostComparison mode, const PublicSuffixList& psl)
{
    if (mode == HostComparison::Exact)
        return to_lower(host);
    return psl.registrable_domain(host);
}

bool same_site(std::string_view a, std::string_view b, HostComparison mode, const PublicSuffixList& psl)
{
    return site_of(a, mode, psl) == site_of(b, mode, psl);
}

}  // namespace sharecard
