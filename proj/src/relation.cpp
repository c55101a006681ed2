#include "ringivm/relation.hpp"

#include <charconv>

namespace rivm {

namespace {

KeyTuple parse_tuple(std::span<const std::string_view> fields, const RelationSchema& schema, Catalog& catalog,
                     std::size_t line) {
    if (fields.size() != schema.attrs.size())
        throw ParseError("relation " + schema.name + " expects " + std::to_string(schema.attrs.size()) +
                             " values, got " + std::to_string(fields.size()),
                         line);
    KeyTuple t;
    t.reserve(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
        try {
            t.push_back(parse_value(fields[i], catalog.at(schema.attrs[i]).type, catalog.strings()));
        } catch (const ParseError& e) {
            throw ParseError(e.message(), line);
        }
    }
    return t;
}

bool skippable(std::string_view line) {
    line = trim(line);
    return line.empty() || line.front() == '#';
}

}  // namespace

BaseRelation load_csv(std::istream& in, const RelationSchema& schema, Catalog& catalog) {
    BaseRelation rel(schema.attrs);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto fields = split_fields(line);
        rel.apply_delta(parse_tuple(fields, schema, catalog, lineno), 1);
    }
    return rel;
}

BaseRelation load_csv(const std::string& path, const RelationSchema& schema, Catalog& catalog) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path, 0);
    try {
        return load_csv(in, schema, catalog);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.message(), e.line());
    }
}

Delta parse_update_line(std::string_view text, const std::vector<RelationSchema>& relations, Catalog& catalog) {
    auto fields = split_fields(text);
    if (fields.size() < 2) throw ParseError("malformed update line", 0);
    std::size_t rel = relations.size();
    for (std::size_t i = 0; i < relations.size(); ++i)
        if (relations[i].name == fields[0]) rel = i;
    if (rel == relations.size()) throw ParseError("unknown relation '" + std::string(fields[0]) + "'", 0);

    std::string_view m = fields[1];
    if (!m.empty() && m.front() == '+') m.remove_prefix(1);
    std::int64_t mult = 0;
    auto [p, ec] = std::from_chars(m.data(), m.data() + m.size(), mult);
    if (m.empty() || ec != std::errc{} || p != m.data() + m.size())
        throw ParseError("bad multiplicity '" + std::string(fields[1]) + "'", 0);
    if (mult == 0) throw ParseError("zero multiplicity", 0);

    Delta d;
    d.relation = rel;
    d.multiplicity = mult;
    d.tuple = parse_tuple(std::span(fields).subspan(2), relations[rel], catalog, 0);
    return d;
}

UpdateStreamReader::UpdateStreamReader(std::istream& in, const std::vector<RelationSchema>& relations,
                                       Catalog& catalog)
    : in_(&in), relations_(relations), catalog_(catalog) {}

UpdateStreamReader::UpdateStreamReader(const std::string& path, const std::vector<RelationSchema>& relations,
                                       Catalog& catalog)
    : owned_(std::make_unique<std::ifstream>(path)), in_(owned_.get()), relations_(relations), catalog_(catalog) {
    if (!*owned_) throw ParseError("cannot open " + path, 0);
}

std::optional<Delta> UpdateStreamReader::next() {
    std::string text;
    while (std::getline(*in_, text)) {
        ++line_;
        if (skippable(text)) continue;
        try {
            return parse_update_line(text, relations_, catalog_);
        } catch (const ParseError& e) {
            throw ParseError(e.message(), line_);
        }
    }
    return std::nullopt;
}

std::vector<Delta> UpdateStreamReader::next_batch(std::size_t n) {
    std::vector<Delta> out;
    out.reserve(n);
    while (out.size() < n) {
        auto d = next();
        if (!d) break;
        out.push_back(std::move(*d));
    }
    return out;
}

std::vector<UpdateBatch> group_by_relation(std::span<const Delta> deltas, std::size_t relation_count) {
    std::vector<UpdateBatch> per(relation_count);
    for (std::size_t i = 0; i < relation_count; ++i) per[i].relation = i;
    for (const auto& d : deltas) {
        if (d.relation >= relation_count) throw ValidationError("delta targets unknown relation");
        per[d.relation].deltas.push_back({d.tuple, d.multiplicity});
    }
    std::vector<UpdateBatch> out;
    for (auto& b : per)
        if (!b.deltas.empty()) out.push_back(std::move(b));
    return out;
}

}  // namespace rivm
