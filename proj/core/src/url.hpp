#pragma once

#include <string>

#include "feedtriage/errors.hpp"

namespace feedtriage::detail {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;    // always starts with '/'
};

inline SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("URL without scheme: " + url);
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw ConfigError("unsupported URL scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace feedtriage::detail
