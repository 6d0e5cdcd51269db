#pragma once

#include <string>

namespace moreforge {

inline constexpr int kTransportTimeoutSeconds = 10;

/// POSTs a JSON body to an http:// URL and returns the response body.
/// Throws TransportError on connection failure, timeout or non-2xx status.
std::string http_post_json(const std::string& url, const std::string& body,
                           int timeout_s = kTransportTimeoutSeconds);

} // namespace moreforge
