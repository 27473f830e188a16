#include "tsagent/anchor_parse.hpp"

#include <json.hpp>

#include <cmath>

namespace tsa {

using nlohmann::json;

namespace {

// Removes ellipsis placeholder tokens ("...") and trailing commas that models
// commonly emit inside otherwise-valid JSON, skipping string contents.
std::string relax_json(const std::string& in) {
    std::string out;
    out.reserve(in.size());
    bool in_string = false;
    for (std::size_t i = 0; i < in.size(); ++i) {
        char c = in[i];
        if (in_string) {
            out.push_back(c);
            if (c == '\\' && i + 1 < in.size()) {
                out.push_back(in[++i]);
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
            out.push_back(c);
            continue;
        }
        if (c == '.' && i + 2 < in.size() && in[i + 1] == '.' && in[i + 2] == '.') {
            i += 2;
            // also swallow a comma left dangling before the ellipsis
            while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
            if (!out.empty() && out.back() == ',') out.pop_back();
            continue;
        }
        if (c == ',') {
            std::size_t j = i + 1;
            while (j < in.size() && std::isspace(static_cast<unsigned char>(in[j]))) ++j;
            if (j < in.size() && (in[j] == ']' || in[j] == '}')) continue;  // trailing comma
        }
        out.push_back(c);
    }
    return out;
}

double require_number(const json& obj, const char* field, const char* where) {
    if (!obj.contains(field) || !obj[field].is_number())
        throw SchemaError(std::string("missing or non-numeric field '") + field + "' in " + where);
    return obj[field].get<double>();
}

int require_int(const json& obj, const char* field, const char* where) {
    if (!obj.contains(field) || !obj[field].is_number())
        throw SchemaError(std::string("missing or non-numeric field '") + field + "' in " + where);
    double v = obj[field].get<double>();
    return static_cast<int>(std::llround(v));
}

const json& require_array(const json& obj, const char* field) {
    if (!obj.contains(field) || !obj[field].is_array())
        throw SchemaError(std::string("missing or non-array field '") + field + "'");
    return obj[field];
}

std::vector<Anchor> parse_anchor_array(const json& arr, const char* where) {
    std::vector<Anchor> out;
    for (const auto& e : arr) {
        if (!e.is_object()) throw SchemaError(std::string("non-object entry in ") + where);
        Anchor a;
        a.t = require_int(e, "t", where);
        a.v = require_number(e, "v", where);
        if (e.contains("type") && e["type"].is_string()) a.label = e["type"].get<std::string>();
        a.tau = tau_from_label(a.label);
        out.push_back(std::move(a));
    }
    return out;
}

} // namespace

std::string extract_json_object(const std::string& raw) {
    bool in_string = false;
    int depth = 0;
    std::size_t start = std::string::npos;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        char c = raw[i];
        if (in_string) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"' && depth > 0) {
            in_string = true;
        } else if (c == '{') {
            if (depth == 0) start = i;
            ++depth;
        } else if (c == '}') {
            if (depth > 0 && --depth == 0) return raw.substr(start, i - start + 1);
        }
    }
    throw ParseError("no balanced JSON object found in response");
}

AnchorSet parse_anchor_response(const std::string& raw, Task task, const WindowContext& ctx,
                                const AnchorLimits& lim) {
    std::string body = relax_json(extract_json_object(raw));
    json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded()) throw ParseError("response JSON does not parse");
    if (!doc.is_object()) throw ParseError("response JSON is not an object");

    AnchorSet s;
    s.task = task;
    s.confidence = require_number(doc, "confidence", "response");

    switch (task) {
        case Task::Forecast:
            s.anchors = parse_anchor_array(require_array(doc, "anchors"), "anchors");
            break;
        case Task::Classify: {
            if (!doc.contains("pattern_type") || !doc["pattern_type"].is_string())
                throw SchemaError("missing or non-string field 'pattern_type'");
            s.pattern_type = doc["pattern_type"].get<std::string>();
            s.anchors = parse_anchor_array(require_array(doc, "key_anchors"), "key_anchors");
            break;
        }
        case Task::Impute: {
            for (const auto& e : require_array(doc, "imputed_values")) {
                if (!e.is_object()) throw SchemaError("non-object entry in imputed_values");
                ImputedValueEntry iv;
                iv.t = require_int(e, "t", "imputed_values");
                iv.v = require_number(e, "v", "imputed_values");
                if (!e.contains("reason") || !e["reason"].is_string())
                    throw SchemaError("missing or non-string field 'reason' in imputed_values");
                iv.reason = e["reason"].get<std::string>();
                if (iv.reason != "interpolation" && iv.reason != "extrapolation")
                    throw SchemaError("field 'reason' must be 'interpolation' or 'extrapolation'");
                s.imputed_values.push_back(std::move(iv));
            }
            if (doc.contains("key_anchors"))
                s.anchors = parse_anchor_array(require_array(doc, "key_anchors"), "key_anchors");
            break;
        }
        case Task::Detect: {
            for (const auto& e : require_array(doc, "anomaly_scores")) {
                if (!e.is_object()) throw SchemaError("non-object entry in anomaly_scores");
                AnomalyScoreEntry as;
                as.t = require_int(e, "t", "anomaly_scores");
                as.score = require_number(e, "score", "anomaly_scores");
                if (e.contains("reason") && e["reason"].is_string()) as.reason = e["reason"].get<std::string>();
                s.anomaly_scores.push_back(std::move(as));
            }
            if (doc.contains("key_anchors"))
                s.anchors = parse_anchor_array(require_array(doc, "key_anchors"), "key_anchors");
            break;
        }
    }

    s = enforce_anchor_invariants(std::move(s), ctx, lim);
    if (s.confidence < lim.confidence_threshold)
        throw LowConfidenceError("anchor confidence " + std::to_string(s.confidence) +
                                 " below threshold " + std::to_string(lim.confidence_threshold));
    return s;
}

std::string serialize_anchor_set(const AnchorSet& s) {
    json doc;
    doc["confidence"] = s.confidence;
    auto anchors_json = [&] {
        json arr = json::array();
        for (const auto& a : s.anchors) arr.push_back({{"t", a.t}, {"v", a.v}, {"type", a.label}});
        return arr;
    };
    switch (s.task) {
        case Task::Forecast:
            doc["anchors"] = anchors_json();
            break;
        case Task::Classify:
            doc["pattern_type"] = s.pattern_type;
            doc["key_anchors"] = anchors_json();
            break;
        case Task::Impute: {
            json arr = json::array();
            for (const auto& e : s.imputed_values)
                arr.push_back({{"t", e.t}, {"v", e.v}, {"reason", e.reason}});
            doc["imputed_values"] = arr;
            doc["key_anchors"] = anchors_json();
            break;
        }
        case Task::Detect: {
            json arr = json::array();
            for (const auto& e : s.anomaly_scores)
                arr.push_back({{"t", e.t}, {"score", e.score}, {"reason", e.reason}});
            doc["anomaly_scores"] = arr;
            doc["key_anchors"] = anchors_json();
            break;
        }
    }
    return doc.dump();
}

} // namespace tsa
