#include "tsagent/prompts.hpp"

#include <cctype>
#include <cstdio>
#include <sstream>

namespace tsa {

namespace {

const char* kSystemForecast =
    "You are a senior time-series forecasting expert. Analyze the time series plot and provide "
    "predictions in strict JSON format. Always include a confidence score (0.00-1.00) based on "
    "pattern consistency.";

const char* kUserForecast =
    "Analyze this time series plot for FORECASTING task (predict {pred_len} future steps).\n"
    "Input sequence: {seq_len} steps (t=0 to {seq_len-1}), last value={last_value}\n"
    "Historical stats: range=[{history_min}, {history_max}], std={history_std}\n"
    "Requirements:\n"
    "1. Output ONLY {min_anchors}-{max_anchors} key anchor points (peaks/valleys/inflections) for "
    "the PREDICTION WINDOW\n"
    "2. Anchor types: 'start', 'peak', 'valley', 'inflection', 'end'\n"
    "3. All values MUST stay within reasonable bounds\n"
    "4. Confidence score reflects pattern continuity\n"
    "Output JSON:\n"
    "{\n"
    "  \"confidence\": 0.85,\n"
    "  \"anchors\": [\n"
    "    {\"t\": 96, \"v\": 0.342, \"type\": \"start\"},\n"
    "    {\"t\": 120, \"v\": 0.456, \"type\": \"peak\"},\n"
    "    ...\n"
    "  ]\n"
    "}";

const char* kSystemClassify =
    "You are a senior time-series classification expert. Analyze the time series plot and classify "
    "the sequence pattern. Provide strict JSON with confidence score.";

const char* kUserClassify =
    "Analyze this time series plot for CLASSIFICATION (input length={seq_len}).\n"
    "Input stats: range=[{history_min}, {history_max}], mean={history_mean}\n"
    "Requirements:\n"
    "1. Identify the dominant pattern type (periodic, trending, stationary, etc.)\n"
    "2. Key anchors: {min_anchors}-{max_anchors} points that define the class signature\n"
    "3. Confidence score reflects pattern uniqueness\n"
    "Output JSON:\n"
    "{\n"
    "  \"confidence\": 0.78,\n"
    "  \"pattern_type\": \"periodic\",\n"
    "  \"key_anchors\": [\n"
    "    {\"t\": 12, \"v\": 0.89, \"type\": \"period_peak\"},\n"
    "    {\"t\": 36, \"v\": -0.45, \"type\": \"period_valley\"}\n"
    "  ]\n"
    "}";

const char* kSystemImpute =
    "You are a senior time-series imputation expert. Analyze the time series plot and impute "
    "MISSING VALUES in the INPUT sequence. Provide JSON with confidence score.";

const char* kUserImpute =
    "Analyze this time series plot for IMPUTATION (input length={seq_len}).\n"
    "Missing values: marked at positions {missing_positions}\n"
    "Input stats: range=[{history_min}, {history_max}], mean={history_mean}\n"
    "Requirements:\n"
    "1. Impute ONLY marked missing positions\n"
    "2. Specify reasoning: 'interpolation' or 'extrapolation'\n"
    "3. Key anchors: {min_anchors}-{max_anchors} critical points guiding imputation\n"
    "Output JSON:\n"
    "{\n"
    "  \"confidence\": 0.88,\n"
    "  \"imputed_values\": [\n"
    "    {\"t\": 25, \"v\": 0.34, \"reason\": \"interpolation\"},\n"
    "  ],\n"
    "  \"key_anchors\": [\n"
    "    {\"t\": 20, \"v\": 0.28, \"type\": \"observed\"},\n"
    "  ]\n"
    "}";

const char* kSystemDetect =
    "You are a senior time-series anomaly detection expert. Analyze the time series plot and "
    "identify anomalous time steps in the INPUT sequence. Provide strict JSON with confidence "
    "scores.";

const char* kUserDetect =
    "Analyze this time series plot for ANOMALY DETECTION (input length={seq_len}).\n"
    "Input stats: range=[{history_min}, {history_max}], mean={history_mean}, std={history_std}\n"
    "Requirements:\n"
    "1. Focus ONLY on INPUT SEQUENCE (t=0 to {seq_len-1})\n"
    "2. Anomaly scores: 0.0-1.0 (higher = more anomalous)\n"
    "3. For consecutive anomalies, report ONLY the most significant one\n"
    "4. Key anchors: {min_anchors}-{max_anchors} points including normal patterns as reference\n"
    "Output JSON:\n"
    "{\n"
    "  \"confidence\": 0.82,\n"
    "  \"anomaly_scores\": [\n"
    "    {\"t\": 45, \"score\": 0.91, \"reason\": \"spike\"},\n"
    "    {\"t\": 78, \"score\": 0.85, \"reason\": \"level_shift\"}\n"
    "  ],\n"
    "  \"key_anchors\": [\n"
    "    {\"t\": 10, \"v\": 0.23, \"type\": \"normal\"},\n"
    "    {\"t\": 45, \"v\": 1.82, \"type\": \"anomaly\"}\n"
    "  ]\n"
    "}";

std::string fmt_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

void replace_all(std::string& text, const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    while ((pos = text.find(key, pos)) != std::string::npos) {
        text.replace(pos, key.size(), value);
        pos += value.size();
    }
}

} // namespace

std::pair<int, int> default_anchor_range(Task task) {
    switch (task) {
        case Task::Forecast: return {8, 15};
        case Task::Detect: return {8, 12};
        case Task::Classify: return {5, 8};
        case Task::Impute: return {5, 7};
    }
    return {5, 8};
}

bool has_unfilled_placeholder(const std::string& text) {
    for (std::size_t i = 0; i + 1 < text.size(); ++i) {
        if (text[i] != '{') continue;
        char c = text[i + 1];
        if (!std::isalpha(static_cast<unsigned char>(c)) && c != '_') continue;
        std::size_t j = i + 1;
        while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) ||
                                   text[j] == '_' || text[j] == '-'))
            ++j;
        if (j < text.size() && text[j] == '}') return true;
    }
    return false;
}

VlmRequest build_prompt(Task task, const TimeSeriesWindow& window, const PriorBundle& bundle,
                        std::pair<int, int> anchor_range) {
    VlmRequest req;
    std::string user;
    switch (task) {
        case Task::Forecast:
            req.system_text = kSystemForecast;
            user = kUserForecast;
            break;
        case Task::Classify:
            req.system_text = kSystemClassify;
            user = kUserClassify;
            break;
        case Task::Impute:
            req.system_text = kSystemImpute;
            user = kUserImpute;
            break;
        case Task::Detect:
            req.system_text = kSystemDetect;
            user = kUserDetect;
            break;
    }

    if (task == Task::Impute) {
        if (!window.mask || window.masked_count() == 0)
            throw ContractError("imputation prompt requires a non-empty mask");
        std::ostringstream pos;
        pos << "[";
        bool first = true;
        for (int t = 0; t < window.length(); ++t) {
            bool any = false;
            for (int d = 0; d < window.channels(); ++d) any = any || window.is_masked(t, d);
            if (!any) continue;
            if (!first) pos << ", ";
            pos << t;
            first = false;
        }
        pos << "]";
        replace_all(user, "{missing_positions}", pos.str());
    }

    replace_all(user, "{pred_len}", std::to_string(window.horizon));
    replace_all(user, "{seq_len-1}", std::to_string(window.length() - 1));
    replace_all(user, "{seq_len}", std::to_string(window.length()));
    replace_all(user, "{last_value}", fmt_number(bundle.last_value));
    replace_all(user, "{history_min}", fmt_number(bundle.history_min));
    replace_all(user, "{history_max}", fmt_number(bundle.history_max));
    replace_all(user, "{history_mean}", fmt_number(bundle.history_mean));
    replace_all(user, "{history_std}", fmt_number(bundle.history_std));
    replace_all(user, "{min_anchors}", std::to_string(anchor_range.first));
    replace_all(user, "{max_anchors}", std::to_string(anchor_range.second));

    if (has_unfilled_placeholder(user))
        throw ContractError("prompt template has an unsubstituted placeholder");
    req.user_text = std::move(user);
    return req;
}

} // namespace tsa
