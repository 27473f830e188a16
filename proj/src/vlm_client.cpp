#include "tsagent/vlm_client.hpp"

#include "tsagent/errors.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <thread>

namespace tsa {

using nlohmann::json;

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
    static const char* alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 3 <= bytes.size()) {
        std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out.push_back(alphabet[(v >> 6) & 63]);
        out.push_back(alphabet[v & 63]);
        i += 3;
    }
    std::size_t rem = bytes.size() - i;
    if (rem == 1) {
        std::uint32_t v = bytes[i] << 16;
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out.push_back('=');
        out.push_back('=');
    } else if (rem == 2) {
        std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out.push_back(alphabet[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

std::string build_chat_payload(const VlmRequest& req) {
    json user_content = json::array();
    user_content.push_back({{"type", "text"}, {"text", req.user_text}});
    if (!req.image_png_b64.empty()) {
        user_content.push_back(
            {{"type", "image_url"},
             {"image_url", {{"url", "data:image/png;base64," + req.image_png_b64}}}});
    }
    json payload = {
        {"model", req.model_id},
        {"messages",
         json::array({json{{"role", "system"}, {"content", req.system_text}},
                      json{{"role", "user"}, {"content", user_content}}})},
    };
    return payload.dump();
}

namespace {

struct ParsedUrl {
    std::string scheme_host_port;  // httplib client target
    std::string path;
};

ParsedUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw EndpointError("endpoint URL must include a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    ParsedUrl p;
    if (path_start == std::string::npos) {
        p.scheme_host_port = url;
        p.path = "/";
    } else {
        p.scheme_host_port = url.substr(0, path_start);
        p.path = url.substr(path_start);
    }
    return p;
}

std::string extract_assistant_text(const std::string& body) {
    json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded()) throw EndpointError("endpoint returned non-JSON body");
    if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty())
        throw EndpointError("endpoint response has no choices");
    const auto& msg = doc["choices"][0].contains("message") ? doc["choices"][0]["message"] : json();
    if (msg.contains("content")) {
        const auto& content = msg["content"];
        if (content.is_string()) return content.get<std::string>();
        if (content.is_array()) {
            std::string text;
            for (const auto& part : content)
                if (part.contains("text") && part["text"].is_string()) text += part["text"].get<std::string>();
            return text;
        }
    }
    throw EndpointError("endpoint response has no assistant content");
}

} // namespace

std::string query_vlm(const VlmRequest& req) {
    if (req.endpoint.empty()) throw EndpointError("no VLM endpoint configured");
    ParsedUrl url = split_url(req.endpoint);
    std::string payload = build_chat_payload(req);

    std::string last_error;
    for (int attempt = 0; attempt <= req.max_retries; ++attempt) {
        if (attempt > 0) {
            int delay = req.backoff_ms * (1 << (attempt - 1));
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
        httplib::Client client(url.scheme_host_port);
        client.set_connection_timeout(0, req.timeout_ms * 1000LL);
        client.set_read_timeout(req.timeout_ms / 1000, (req.timeout_ms % 1000) * 1000);
        httplib::Headers headers;
        if (!req.api_key.empty()) headers.emplace("Authorization", "Bearer " + req.api_key);

        auto res = client.Post(url.path, headers, payload, "application/json");
        if (!res) {
            last_error = "connection failed: " + httplib::to_string(res.error());
            continue;  // transient
        }
        if (res->status >= 200 && res->status < 300) return extract_assistant_text(res->body);
        if (res->status >= 400 && res->status < 500)
            throw EndpointError("endpoint rejected request with status " + std::to_string(res->status) +
                                ": " + res->body);
        last_error = "status " + std::to_string(res->status);
    }
    throw TransportError("VLM endpoint unreachable after " + std::to_string(req.max_retries + 1) +
                         " attempts (" + last_error + ")");
}

} // namespace tsa
