#include "moreforge/transport.hpp"

#include <httplib.h>

#include "moreforge/error.hpp"

namespace moreforge {

std::string http_post_json(const std::string& url, const std::string& body, int timeout_s)
{
    const std::string scheme = "http://";
    if (url.rfind(scheme, 0) != 0) {
        throw Error(ErrorKind::Transport, "only http:// endpoints are supported: " + url);
    }
    const auto slash = url.find('/', scheme.size());
    const std::string host = url.substr(0, slash);
    const std::string path = slash == std::string::npos ? "/" : url.substr(slash);

    httplib::Client client(host);
    client.set_connection_timeout(timeout_s, 0);
    client.set_read_timeout(timeout_s, 0);
    client.set_write_timeout(timeout_s, 0);
    auto res = client.Post(path, body, "application/json");
    if (!res) {
        throw Error(ErrorKind::Transport, "request to " + url + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw Error(ErrorKind::Transport, "endpoint " + url + " answered HTTP " + std::to_string(res->status));
    }
    return res->body;
}

} // namespace moreforge
