#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace rivm {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand from a different ring, unknown tracked attribute, or value/kind mismatch.
class RingError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), message_(what), line_(line) {}
    std::size_t line() const noexcept { return line_; }
    /// The message without the line prefix.
    const std::string& message() const noexcept { return message_; }

private:
    std::string message_;
    std::size_t line_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

using AttrId = std::uint32_t;

/// Interned string value. Compares by id, i.e. by first-seen order.
struct Category {
    std::uint32_t id = 0;
    auto operator<=>(const Category&) const = default;
};

/// A single attribute value. Ordering is by alternative first, then by value.
using Value = std::variant<std::int64_t, double, Category>;
using KeyTuple = std::vector<Value>;

enum class ValueType { Int, Float, String };
enum class AttrKind { Continuous, Categorical };

struct ValueHash {
    std::size_t operator()(const Value& v) const noexcept;
};

struct KeyHash {
    std::size_t operator()(const KeyTuple& k) const noexcept;
};

/// Numeric view of an int or float value; throws RingError for categories.
double to_double(const Value& v);

bool is_numeric(const Value& v) noexcept;

class Interner {
public:
    Category intern(std::string_view s);
    std::optional<Category> find(std::string_view s) const;
    const std::string& name(Category c) const { return names_.at(c.id); }
    std::size_t size() const noexcept { return names_.size(); }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::uint32_t> ids_;
};

struct AttributeInfo {
    std::string name;
    ValueType type = ValueType::Float;
    AttrKind kind = AttrKind::Continuous;
};

/// Registry of attribute names, their value types and kinds, plus the string interner.
/// Attribute ids are dense and assigned in registration order.
class Catalog {
public:
    /// Registers a new attribute or returns the id of an identical existing one.
    /// Throws ValidationError when the name exists with a different type or kind.
    AttrId add(const std::string& name, ValueType type, AttrKind kind);

    std::optional<AttrId> find(std::string_view name) const;
    AttrId id(std::string_view name) const;
    const AttributeInfo& at(AttrId id) const { return attrs_.at(id); }
    const std::string& name(AttrId id) const { return attrs_.at(id).name; }
    std::size_t size() const noexcept { return attrs_.size(); }

    Interner& strings() noexcept { return strings_; }
    const Interner& strings() const noexcept { return strings_; }

private:
    std::vector<AttributeInfo> attrs_;
    std::unordered_map<std::string, AttrId> ids_;
    Interner strings_;
};

/// Parses one CSV field. Strings are interned; numeric fields reject NaN and trailing junk.
Value parse_value(std::string_view field, ValueType type, Interner& strings);

std::string format_value(const Value& v, const Interner& strings);

std::string_view trim(std::string_view s) noexcept;

/// Splits on commas. No quoting.
std::vector<std::string_view> split_fields(std::string_view line);

}  // namespace rivm
