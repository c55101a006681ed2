#include "ringivm/value.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <sstream>

namespace rivm {

namespace {

inline std::size_t mix(std::size_t h, std::size_t v) noexcept {
    // boost::hash_combine constant, widened for 64-bit
    return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 12) + (h >> 4));
}

}  // namespace

std::size_t ValueHash::operator()(const Value& v) const noexcept {
    std::size_t payload = 0;
    switch (v.index()) {
        case 0: payload = std::hash<std::int64_t>{}(std::get<0>(v)); break;
        case 1: {
            double d = std::get<1>(v);
            if (d == 0.0) d = 0.0;  // -0.0 == 0.0
            std::uint64_t bits;
            std::memcpy(&bits, &d, sizeof bits);
            payload = std::hash<std::uint64_t>{}(bits);
            break;
        }
        default: payload = std::hash<std::uint32_t>{}(std::get<2>(v).id); break;
    }
    return mix(v.index(), payload);
}

std::size_t KeyHash::operator()(const KeyTuple& k) const noexcept {
    std::size_t h = k.size();
    ValueHash vh;
    for (const auto& v : k) h = mix(h, vh(v));
    return h;
}

double to_double(const Value& v) {
    if (auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    if (auto* d = std::get_if<double>(&v)) return *d;
    throw RingError("categorical value where a numeric value is required");
}

bool is_numeric(const Value& v) noexcept { return !std::holds_alternative<Category>(v); }

Category Interner::intern(std::string_view s) {
    auto it = ids_.find(std::string(s));
    if (it != ids_.end()) return Category{it->second};
    auto id = static_cast<std::uint32_t>(names_.size());
    names_.emplace_back(s);
    ids_.emplace(names_.back(), id);
    return Category{id};
}

std::optional<Category> Interner::find(std::string_view s) const {
    auto it = ids_.find(std::string(s));
    if (it == ids_.end()) return std::nullopt;
    return Category{it->second};
}

AttrId Catalog::add(const std::string& name, ValueType type, AttrKind kind) {
    if (auto it = ids_.find(name); it != ids_.end()) {
        const auto& info = attrs_[it->second];
        if (info.type != type || info.kind != kind)
            throw ValidationError("attribute '" + name + "' declared twice with different type or kind");
        return it->second;
    }
    auto id = static_cast<AttrId>(attrs_.size());
    attrs_.push_back({name, type, kind});
    ids_.emplace(name, id);
    return id;
}

std::optional<AttrId> Catalog::find(std::string_view name) const {
    auto it = ids_.find(std::string(name));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
}

AttrId Catalog::id(std::string_view name) const {
    auto found = find(name);
    if (!found) throw ValidationError("unknown attribute '" + std::string(name) + "'");
    return *found;
}

std::string_view trim(std::string_view s) noexcept {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

Value parse_value(std::string_view field, ValueType type, Interner& strings) {
    switch (type) {
        case ValueType::String: return strings.intern(field);
        case ValueType::Int: {
            std::int64_t v = 0;
            if (!field.empty() && field.front() == '+') field.remove_prefix(1);
            auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
            if (ec != std::errc{} || p != field.data() + field.size() || field.empty())
                throw ParseError("not an integer: '" + std::string(field) + "'", 0);
            return v;
        }
        case ValueType::Float: {
            double v = 0;
            if (!field.empty() && field.front() == '+') field.remove_prefix(1);
            auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
            if (ec != std::errc{} || p != field.data() + field.size() || field.empty() || std::isnan(v))
                throw ParseError("not a number: '" + std::string(field) + "'", 0);
            return v;
        }
    }
    throw ParseError("unknown value type", 0);
}

std::string format_value(const Value& v, const Interner& strings) {
    switch (v.index()) {
        case 0: return std::to_string(std::get<0>(v));
        case 1: {
            std::ostringstream os;
            os.precision(17);
            os << std::get<1>(v);
            return os.str();
        }
        default: return strings.name(std::get<2>(v));
    }
}

}  // namespace rivm
