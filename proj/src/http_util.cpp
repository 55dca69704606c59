#include "http_util.hpp"

#include <httplib.h>

namespace pescourse::detail {

std::string http_post_json(const HttpEndpoint& ep, const std::string& path, const std::string& body,
                           std::chrono::milliseconds timeout) {
    httplib::Client client(ep.scheme_host_port);
    const auto secs = static_cast<time_t>(timeout.count() / 1000);
    const auto usecs = static_cast<time_t>((timeout.count() % 1000) * 1000);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    auto res = client.Post(ep.base_path + path, body, "application/json");
    if (!res) {
        throw Error("request to " + ep.scheme_host_port + ep.base_path + path + " failed: " +
                    httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw Error("request to " + ep.scheme_host_port + ep.base_path + path + " returned HTTP " +
                    std::to_string(res->status));
    }
    return res->body;
}

}  // namespace pescourse::detail
