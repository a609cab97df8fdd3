// SPDX-License-Identifier: Apache-2.0
#include "voltail/io/schema.hpp"

#include <cmath>
#include <sstream>

namespace voltail::io {

namespace detail {
extern const char* const kConfigSchemaText;
}

namespace {

using nlohmann::json;

bool has_type(const json& v, const std::string& t) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "boolean") return v.is_boolean();
    if (t == "null") return v.is_null();
    if (t == "number") return v.is_number();
    if (t == "integer") {
        if (v.is_number_integer()) return true;
        // 1e7 is an integer value written as a float.
        return v.is_number_float() && std::isfinite(v.get<double>()) &&
               std::floor(v.get<double>()) == v.get<double>();
    }
    return false;
}

std::string escape_token(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '~') out += "~0";
        else if (c == '/') out += "~1";
        else out += c;
    }
    return out;
}

class Validator {
public:
    explicit Validator(const json& root) : root_(root) {}

    void check(const json& v, const json& s, const std::string& ptr) {
        if (s.contains("$ref")) {
            const auto ref = s["$ref"].get<std::string>();
            if (ref.rfind("#/", 0) != 0) {
                issue(ptr, "unsupported schema reference " + ref);
                return;
            }
            check(v, root_.at(json::json_pointer(ref.substr(1))), ptr);
            return;
        }
        if (s.contains("type")) {
            const auto t = s["type"].get<std::string>();
            if (!has_type(v, t)) {
                issue(ptr, "expected " + t + ", got " + std::string(v.type_name()));
                return;
            }
        }
        if (s.contains("enum")) {
            bool found = false;
            for (const auto& e : s["enum"]) found = found || e == v;
            if (!found) issue(ptr, "value " + v.dump() + " not in " + s["enum"].dump());
        }
        if (v.is_number()) {
            const double x = v.get<double>();
            if (s.contains("minimum") && x < s["minimum"].get<double>())
                issue(ptr, v.dump() + " is below the minimum " + s["minimum"].dump());
            if (s.contains("maximum") && x > s["maximum"].get<double>())
                issue(ptr, v.dump() + " is above the maximum " + s["maximum"].dump());
            if (s.contains("exclusiveMinimum") && !(x > s["exclusiveMinimum"].get<double>()))
                issue(ptr, v.dump() + " must exceed " + s["exclusiveMinimum"].dump());
        }
        if (v.is_array()) {
            if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>())
                issue(ptr, "needs at least " + s["minItems"].dump() + " items");
            if (s.contains("items")) {
                for (std::size_t i = 0; i < v.size(); ++i) check(v[i], s["items"], ptr + "/" + std::to_string(i));
            }
        }
        if (v.is_object()) {
            const json empty = json::object();
            const json& props = s.contains("properties") ? s["properties"] : empty;
            if (s.contains("required")) {
                for (const auto& r : s["required"]) {
                    if (!v.contains(r.get<std::string>())) issue(ptr, "missing required key \"" + r.get<std::string>() + "\"");
                }
            }
            const bool closed = s.contains("additionalProperties") && s["additionalProperties"] == false;
            for (const auto& [key, val] : v.items()) {
                const auto child = ptr + "/" + escape_token(key);
                if (props.contains(key)) check(val, props[key], child);
                else if (closed) issue(child, "unknown key \"" + key + "\"");
            }
        }
    }

    std::vector<SchemaIssue> issues;

private:
    void issue(const std::string& ptr, std::string msg) { issues.push_back({ptr, std::move(msg)}); }
    const json& root_;
};

}  // namespace

std::vector<SchemaIssue> validate_schema(const nlohmann::json& instance, const nlohmann::json& schema) {
    Validator v(schema);
    v.check(instance, schema, "");
    return std::move(v.issues);
}

const nlohmann::json& config_schema() {
    static const nlohmann::json schema = nlohmann::json::parse(detail::kConfigSchemaText);
    return schema;
}

}  // namespace voltail::io
