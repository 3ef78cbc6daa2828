#include "gradsel/json_writer.hpp"

#include <cmath>
#include <cstdio>

#include "gradsel/errors.hpp"

namespace gradsel {

Json Json::object() {
    Json j;
    j.type_ = Type::kObject;
    return j;
}

Json Json::array() {
    Json j;
    j.type_ = Type::kArray;
    return j;
}

Json Json::str(std::string s) {
    Json j;
    j.type_ = Type::kString;
    j.string_ = std::move(s);
    return j;
}

Json Json::num(double v) {
    if (!std::isfinite(v)) fail("json", "non-finite number in output");
    Json j;
    j.type_ = Type::kDouble;
    j.double_ = v;
    return j;
}

Json Json::integer(std::int64_t v) {
    Json j;
    j.type_ = Type::kInt;
    j.int_ = v;
    return j;
}

Json Json::boolean(bool v) {
    Json j;
    j.type_ = Type::kBool;
    j.bool_ = v;
    return j;
}

Json Json::null() { return Json(); }

Json& Json::set(const std::string& key, Json v) {
    if (type_ != Type::kObject) fail("json", "set() on non-object");
    members_.emplace_back(key, std::move(v));
    return *this;
}

Json& Json::push(Json v) {
    if (type_ != Type::kArray) fail("json", "push() on non-array");
    items_.push_back(std::move(v));
    return *this;
}

std::string Json::format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void Json::escape_to(const std::string& s, std::string& out) {
    out += '"';
    for (unsigned char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\b': out += "\\b"; break;
            case '\f': out += "\\f"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (c < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += static_cast<char>(c);
                }
        }
    }
    out += '"';
}

// Objects are written one member per line; arrays are written inline.  Large
// numeric arrays stay compact while the overall file remains diffable.
void Json::write(std::string& out, int depth) const {
    auto indent = [&out](int d) { out.append(static_cast<std::size_t>(d) * 2, ' '); };
    switch (type_) {
        case Type::kNull: out += "null"; break;
        case Type::kBool: out += bool_ ? "true" : "false"; break;
        case Type::kInt: out += std::to_string(int_); break;
        case Type::kDouble: out += format_double(double_); break;
        case Type::kString: escape_to(string_, out); break;
        case Type::kArray: {
            out += '[';
            for (std::size_t i = 0; i < items_.size(); ++i) {
                if (i) out += ',';
                items_[i].write(out, depth);
            }
            out += ']';
            break;
        }
        case Type::kObject: {
            if (members_.empty()) {
                out += "{}";
                break;
            }
            out += "{\n";
            for (std::size_t i = 0; i < members_.size(); ++i) {
                indent(depth + 1);
                escape_to(members_[i].first, out);
                out += ": ";
                members_[i].second.write(out, depth + 1);
                if (i + 1 < members_.size()) out += ',';
                out += '\n';
            }
            indent(depth);
            out += '}';
            break;
        }
    }
}

std::string Json::dump() const {
    std::string out;
    write(out);
    out += '\n';
    return out;
}

}  // namespace gradsel
