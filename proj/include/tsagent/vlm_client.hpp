#ifndef TSAGENT_VLM_CLIENT_HPP
#define TSAGENT_VLM_CLIENT_HPP

#include "tsagent/prompts.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace tsa {

std::string base64_encode(const std::vector<std::uint8_t>& bytes);

// POSTs a chat-completion payload {model, messages:[system, user(text+image)]}
// to req.endpoint and returns the assistant message text. Transient failures
// (connect errors, timeouts, 5xx) are retried with exponential backoff up to
// req.max_retries; 4xx responses raise EndpointError immediately.
std::string query_vlm(const VlmRequest& req);

// Payload builder, exposed for tests.
std::string build_chat_payload(const VlmRequest& req);

} // namespace tsa

#endif // TSAGENT_VLM_CLIENT_HPP
