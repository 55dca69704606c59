#pragma once

#include <chrono>
#include <string>
#include <string_view>

#include "pescourse/error.hpp"

namespace pescourse::detail {

struct HttpEndpoint {
    std::string scheme_host_port;  // "http://host:port"
    std::string base_path;         // "" or "/prefix" without trailing slash
};

inline HttpEndpoint parse_endpoint(std::string_view url) {
    auto scheme = url.find("://");
    if (scheme == std::string_view::npos) throw Error("endpoint must be an http:// URL: " + std::string(url));
    auto path = url.find('/', scheme + 3);
    HttpEndpoint ep;
    ep.scheme_host_port = std::string(url.substr(0, path));
    if (path != std::string_view::npos) {
        ep.base_path = std::string(url.substr(path));
        while (!ep.base_path.empty() && ep.base_path.back() == '/') ep.base_path.pop_back();
    }
    return ep;
}

/// POSTs a JSON body and returns the response body; throws Error on
/// transport failure or a non-2xx status.
std::string http_post_json(const HttpEndpoint& ep, const std::string& path, const std::string& body,
                           std::chrono::milliseconds timeout);

}  // namespace pescourse::detail
