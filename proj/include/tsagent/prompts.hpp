#ifndef TSAGENT_PROMPTS_HPP
#define TSAGENT_PROMPTS_HPP

#include "tsagent/anchors.hpp"
#include "tsagent/dataset.hpp"
#include "tsagent/priors.hpp"

#include <cstdint>
#include <string>
#include <utility>

namespace tsa {

struct VlmRequest {
    std::string system_text;
    std::string user_text;
    std::string image_png_b64;
    std::string endpoint;
    std::string model_id = "Qwen3-VL-235B-Instruct";
    std::string api_key;
    int timeout_ms = 30000;
    int max_retries = 3;
    int backoff_ms = 250;
};

// Suggested anchor-count ranges per task.
std::pair<int, int> default_anchor_range(Task task);

// Fills the task template with window/bundle statistics. Every placeholder
// must be substituted; a leftover one is a ContractError. Imputation with an
// empty mask is a ContractError.
VlmRequest build_prompt(Task task, const TimeSeriesWindow& window, const PriorBundle& bundle,
                        std::pair<int, int> anchor_range);

// True when the text still contains an unsubstituted {placeholder} token.
bool has_unfilled_placeholder(const std::string& text);

} // namespace tsa

#endif // TSAGENT_PROMPTS_HPP
