#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace gradsel {

// Minimal JSON document builder whose serialization is byte-stable: object
// keys are emitted in insertion order and doubles are printed with %.17g so
// that reloading reproduces the exact bit pattern.  Non-finite numbers are
// rejected because no output of this project is allowed to contain them.
class Json {
public:
    static Json object();
    static Json array();
    static Json str(std::string s);
    static Json num(double v);
    static Json integer(std::int64_t v);
    static Json boolean(bool v);
    static Json null();

    // Object member; returns *this for chaining.  Keys must be unique.
    Json& set(const std::string& key, Json v);
    // Array element.
    Json& push(Json v);

    std::string dump() const;
    void write(std::string& out, int depth = 0) const;

    static std::string format_double(double v);

private:
    enum class Type { kNull, kBool, kInt, kDouble, kString, kArray, kObject };

    Type type_ = Type::kNull;
    bool bool_ = false;
    std::int64_t int_ = 0;
    double double_ = 0.0;
    std::string string_;
    std::vector<Json> items_;
    std::vector<std::pair<std::string, Json>> members_;

    static void escape_to(const std::string& s, std::string& out);
};

}  // namespace gradsel
