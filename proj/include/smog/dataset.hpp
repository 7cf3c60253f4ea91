// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "smog/error.hpp"
#include "smog/tee.hpp"

namespace smog {

struct AttributePair {
    AttributeSpec source;
    AttributeSpec target;
    std::optional<bool> gold_label;
};

/// `source_table.source_attr|target_table.target_attr`
inline std::string pair_key(const AttributePair& p)
{
    return p.source.table_name + "." + p.source.attribute_name + "|" + p.target.table_name + "." +
           p.target.attribute_name;
}

struct CsvRecord {
    std::size_t line = 0;  // physical line the record starts on
    std::vector<std::string> fields;
};

/// RFC 4180 reader: quoted fields may hold commas, doubled quotes and line
/// breaks. CRLF and LF both end a record.
inline std::vector<CsvRecord> read_csv(std::istream& in)
{
    std::vector<CsvRecord> out;
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (data.starts_with("\xEF\xBB\xBF")) data.erase(0, 3);

    std::size_t line = 1, i = 0;
    while (i < data.size()) {
        CsvRecord rec;
        rec.line = line;
        std::string field;
        bool end_of_record = false;
        while (!end_of_record) {
            field.clear();
            if (i < data.size() && data[i] == '"') {
                const auto open_line = line;
                ++i;
                for (;;) {
                    if (i >= data.size()) throw DataError("unterminated quoted field", open_line);
                    char c = data[i++];
                    if (c == '"') {
                        if (i < data.size() && data[i] == '"') {
                            field += '"';
                            ++i;
                            continue;
                        }
                        break;
                    }
                    if (c == '\n') ++line;
                    field += c;
                }
                if (i < data.size() && data[i] != ',' && data[i] != '\n' && data[i] != '\r')
                    throw DataError("unexpected character after closing quote", line);
            } else {
                while (i < data.size() && data[i] != ',' && data[i] != '\n' && data[i] != '\r') {
                    if (data[i] == '"') throw DataError("quote inside unquoted field", line);
                    field += data[i++];
                }
            }
            rec.fields.push_back(field);
            if (i >= data.size()) {
                end_of_record = true;
            } else if (data[i] == ',') {
                ++i;
            } else {
                if (data[i] == '\r') ++i;
                if (i < data.size() && data[i] == '\n') ++i;
                ++line;
                end_of_record = true;
            }
        }
        if (rec.fields.size() == 1 && rec.fields[0].empty()) continue;  // blank line
        out.push_back(std::move(rec));
    }
    return out;
}

/// Column names of a pair file.
struct PairColumns {
    std::string source_table = "source_table";
    std::string source_attr = "source_attr";
    std::string source_desc = "source_desc";
    std::string target_table = "target_table";
    std::string target_attr = "target_attr";
    std::string target_desc = "target_desc";
    std::string label = "label";

    bool operator==(const PairColumns&) const = default;
};

/// Pairs from CSV with a header row. A label column is required when
/// `require_label` is set; its values must be 0 or 1.
inline std::vector<AttributePair> parse_pairs(std::istream& in, const PairColumns& cols = {},
                                              bool require_label = true)
{
    auto records = read_csv(in);
    if (records.empty()) return {};
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < records[0].fields.size(); ++i) index.emplace(records[0].fields[i], i);
    auto column = [&](const std::string& name, bool required) -> std::optional<std::size_t> {
        auto it = index.find(name);
        if (it != index.end()) return it->second;
        if (required) throw DataError("missing column '" + name + "'", records[0].line);
        return std::nullopt;
    };
    const auto st = *column(cols.source_table, true), sa = *column(cols.source_attr, true),
               sd = *column(cols.source_desc, true), tt = *column(cols.target_table, true),
               ta = *column(cols.target_attr, true), td = *column(cols.target_desc, true);
    const auto lb = column(cols.label, require_label);

    std::vector<AttributePair> out;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.fields.size() != records[0].fields.size())
            throw DataError("expected " + std::to_string(records[0].fields.size()) + " fields, got " +
                                std::to_string(rec.fields.size()),
                            rec.line);
        AttributePair p;
        p.source = {SchemaSide::Source, rec.fields[st], rec.fields[sa], rec.fields[sd]};
        p.target = {SchemaSide::Target, rec.fields[tt], rec.fields[ta], rec.fields[td]};
        if (p.source.attribute_name.empty() || p.target.attribute_name.empty())
            throw DataError("empty attribute name", rec.line);
        if (lb) {
            const auto v = detail::trim(rec.fields[*lb]);
            if (v == "1")
                p.gold_label = true;
            else if (v == "0")
                p.gold_label = false;
            else
                throw DataError("label must be 0 or 1, got '" + rec.fields[*lb] + "'", rec.line);
        }
        out.push_back(std::move(p));
    }
    return out;
}

inline std::vector<AttributePair> load_pairs(const std::filesystem::path& path,
                                             const PairColumns& cols = {}, bool require_label = true)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read pair file " + path.string());
    return parse_pairs(in, cols, require_label);
}

inline std::string csv_escape(const std::string& s)
{
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

inline void write_pairs(std::ostream& out, const std::vector<AttributePair>& pairs,
                        const PairColumns& cols = {})
{
    out << cols.source_table << ',' << cols.source_attr << ',' << cols.source_desc << ','
        << cols.target_table << ',' << cols.target_attr << ',' << cols.target_desc << ',' << cols.label
        << '\n';
    for (const auto& p : pairs) {
        out << csv_escape(p.source.table_name) << ',' << csv_escape(p.source.attribute_name) << ','
            << csv_escape(p.source.description) << ',' << csv_escape(p.target.table_name) << ','
            << csv_escape(p.target.attribute_name) << ',' << csv_escape(p.target.description) << ','
            << (p.gold_label ? (*p.gold_label ? "1" : "0") : "") << '\n';
    }
}

}  // namespace smog
