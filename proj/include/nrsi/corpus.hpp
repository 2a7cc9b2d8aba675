#pragma once

#include <array>
#include <cctype>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nrsi/errors.hpp"
#include "nrsi/sparse_tensor.hpp"

namespace nrsi {

// One observed tuple: (subject, relation, object, 0..2 further arguments).
struct TupleRecord {
    std::string subject;
    std::string relation;
    std::string object;
    std::vector<std::string> others;
    std::int64_t count = 1;
};

// Four symbol tables mapping noun phrases / relations to contiguous indices,
// assigned in first-appearance order.
class Vocabulary {
public:
    enum class Table { subject = 0, object = 1, other = 2, relation = 3 };

    std::size_t intern(Table t, const std::string& s) {
        auto& lookup = lookups_[static_cast<std::size_t>(t)];
        auto& surfaces = surfaces_[static_cast<std::size_t>(t)];
        auto it = lookup.find(s);
        if (it != lookup.end()) return it->second;
        const std::size_t idx = surfaces.size();
        surfaces.push_back(s);
        lookup.emplace(s, idx);
        return idx;
    }

    std::optional<std::size_t> find(Table t, const std::string& s) const {
        const auto& lookup = lookups_[static_cast<std::size_t>(t)];
        auto it = lookup.find(s);
        if (it == lookup.end()) return std::nullopt;
        return it->second;
    }

    const std::string& surface(Table t, std::size_t idx) const {
        return surfaces_[static_cast<std::size_t>(t)].at(idx);
    }

    const std::vector<std::string>& surfaces(Table t) const {
        return surfaces_[static_cast<std::size_t>(t)];
    }

    std::size_t size(Table t) const { return surfaces_[static_cast<std::size_t>(t)].size(); }

    std::size_t n_subjects() const { return size(Table::subject); }
    std::size_t n_objects() const { return size(Table::object); }
    std::size_t n_others() const { return size(Table::other); }
    std::size_t n_relations() const { return size(Table::relation); }

    bool operator==(const Vocabulary& o) const { return surfaces_ == o.surfaces_; }

private:
    std::array<std::vector<std::string>, 4> surfaces_;
    std::array<std::unordered_map<std::string, std::size_t>, 4> lookups_;
};

// The three marginal count tensors plus the vocabulary they are indexed by.
//   obj_oth  : object  x other  x relation (subject summed out)
//   subj_oth : subject x other  x relation (object summed out)
//   subj_obj : subject x object x relation (other summed out)
struct BackoffTensors {
    SparseTensor3 obj_oth;
    SparseTensor3 subj_oth;
    SparseTensor3 subj_obj;
    Vocabulary vocab;
    std::int64_t total_mass = 0;
};

struct ParseOptions {
    char delimiter = '\t';
    bool case_fold = false;
    bool strict = false;
    // With 5 fields, treat a trailing positive integer as a count rather than
    // a second `other` argument.
    bool count_heuristic = true;
};

struct ParseIssue {
    std::size_t line_no;
    std::string reason;
};

struct ParseResult {
    std::vector<TupleRecord> records;
    std::vector<ParseIssue> issues;
    std::size_t lines_read = 0;
};

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline std::string fold_case(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

inline std::optional<std::int64_t> parse_count(const std::string& s) {
    if (s.empty() || s.size() > 18) return std::nullopt;
    std::int64_t v = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return std::nullopt;
        v = v * 10 + (c - '0');
    }
    if (v < 1) return std::nullopt;
    return v;
}

}  // namespace detail

// Parses tab-separated tuple lines:
//   subject <TAB> relation <TAB> object [<TAB> other1 [<TAB> other2]] [<TAB> count]
// Accepted field counts are 3..6; a trailing count is recognized on 6-field
// lines always, and on 5-field lines when it parses as a positive integer
// (disable via ParseOptions::count_heuristic).  Lines whose first character
// is '#' and blank lines are ignored.  Malformed lines are reported with
// their line numbers and skipped; in strict mode the first one aborts.
inline ParseResult parse_tuples(std::istream& in, const ParseOptions& opt = {}) {
    if (in.bad() || (in.fail() && !in.eof()))
        throw io_error("parse_tuples: unreadable input stream");
    ParseResult result;
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& reason) {
        if (opt.strict)
            throw data_error("line " + std::to_string(line_no) + ": " + reason);
        result.issues.push_back({line_no, reason});
    };
    while (std::getline(in, line)) {
        ++line_no;
        ++result.lines_read;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;

        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t pos = line.find(opt.delimiter, start);
            fields.push_back(detail::trim(
                std::string_view(line).substr(start, pos == std::string::npos ? pos : pos - start)));
            if (pos == std::string::npos) break;
            start = pos + 1;
        }
        if (fields.size() < 3) {
            fail("expected at least 3 tab-separated fields, got " + std::to_string(fields.size()));
            continue;
        }
        if (fields.size() > 6) {
            fail("expected at most 6 tab-separated fields, got " + std::to_string(fields.size()));
            continue;
        }

        TupleRecord rec;
        std::size_t text_fields = fields.size();
        if (fields.size() == 6) {
            const auto count = detail::parse_count(fields[5]);
            if (!count) {
                fail("field 6 must be a positive integer count, got '" + fields[5] + "'");
                continue;
            }
            rec.count = *count;
            text_fields = 5;
        } else if (fields.size() == 5 && opt.count_heuristic) {
            if (const auto count = detail::parse_count(fields[4])) {
                rec.count = *count;
                text_fields = 4;
            }
        }

        bool bad = false;
        for (std::size_t f = 0; f < text_fields; ++f) {
            if (fields[f].empty()) {
                fail("field " + std::to_string(f + 1) + " is empty");
                bad = true;
                break;
            }
        }
        if (bad) continue;

        rec.subject = fields[0];
        rec.relation = fields[1];
        rec.object = fields[2];
        for (std::size_t f = 3; f < text_fields; ++f) rec.others.push_back(fields[f]);
        if (opt.case_fold) {
            rec.subject = detail::fold_case(rec.subject);
            rec.relation = detail::fold_case(rec.relation);
            rec.object = detail::fold_case(rec.object);
            for (auto& o : rec.others) o = detail::fold_case(o);
        }
        result.records.push_back(std::move(rec));
    }
    if (in.bad()) throw io_error("parse_tuples: read failure at line " + std::to_string(line_no));
    return result;
}

struct SplitResult {
    std::vector<TupleRecord> records;
    std::size_t dropped_no_other = 0;
};

// Splits 5-tuples into two 4-tuples, each keeping the original count.
// Records with exactly one `other` pass through; records with none cannot
// index the third tensor argument and are dropped (counted for the caller
// to warn about).
inline SplitResult split_five_tuples(const std::vector<TupleRecord>& records) {
    SplitResult out;
    out.records.reserve(records.size());
    for (const TupleRecord& r : records) {
        if (r.others.size() > 2)
            throw data_error("tuple for relation '" + r.relation + "' has " +
                             std::to_string(r.others.size()) + " other arguments (max 2)");
        if (r.others.empty()) {
            ++out.dropped_no_other;
            continue;
        }
        for (const std::string& o : r.others) {
            TupleRecord split = r;
            split.others = {o};
            out.records.push_back(std::move(split));
        }
    }
    return out;
}

// Keeps records whose relation is among the k highest by total count mass;
// ties at the boundary go to the lexicographically smaller relation name.
inline std::vector<TupleRecord> filter_top_relations(const std::vector<TupleRecord>& records,
                                                     std::size_t k) {
    if (k < 1) throw config_error("filter_top_relations: k must be >= 1");
    std::map<std::string, std::int64_t> mass;
    for (const TupleRecord& r : records) mass[r.relation] += r.count;
    std::vector<std::pair<std::string, std::int64_t>> ranked(mass.begin(), mass.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (ranked.size() > k) ranked.resize(k);
    std::unordered_map<std::string, bool> keep;
    for (const auto& [name, m] : ranked) keep.emplace(name, true);
    std::vector<TupleRecord> out;
    out.reserve(records.size());
    for (const TupleRecord& r : records)
        if (keep.count(r.relation)) out.push_back(r);
    return out;
}

// Builds the three back-off tensors from split 4-tuples.  Cell values are
// summed integer counts; vocabulary indices follow first appearance in the
// record stream, so identical input yields identical tensors.
inline BackoffTensors build_backoff_tensors(const std::vector<TupleRecord>& records) {
    if (records.empty()) throw data_error("empty corpus: no tuple records");
    BackoffTensors out;
    using Key = std::array<std::size_t, 3>;
    std::map<Key, std::int64_t> obj_oth, subj_oth, subj_obj;
    for (const TupleRecord& r : records) {
        if (r.others.size() != 1)
            throw data_error("build_backoff_tensors: records must be split to exactly one other");
        if (r.count < 1) throw data_error("build_backoff_tensors: count must be >= 1");
        const std::size_t si = out.vocab.intern(Vocabulary::Table::subject, r.subject);
        const std::size_t oj = out.vocab.intern(Vocabulary::Table::object, r.object);
        const std::size_t ck = out.vocab.intern(Vocabulary::Table::other, r.others[0]);
        const std::size_t rp = out.vocab.intern(Vocabulary::Table::relation, r.relation);
        obj_oth[{oj, ck, rp}] += r.count;
        subj_oth[{si, ck, rp}] += r.count;
        subj_obj[{si, oj, rp}] += r.count;
        out.total_mass += r.count;
    }
    const std::size_t n1 = out.vocab.n_subjects();
    const std::size_t n2 = out.vocab.n_objects();
    const std::size_t n3 = out.vocab.n_others();
    const std::size_t m = out.vocab.n_relations();
    auto to_tensor = [](const std::map<Key, std::int64_t>& cells,
                        std::array<std::size_t, 3> shape) {
        std::vector<SparseTensor3::Entry> entries;
        entries.reserve(cells.size());
        for (const auto& [key, mass] : cells)
            entries.push_back({key[0], key[1], key[2], static_cast<double>(mass)});
        return SparseTensor3(shape, std::move(entries));
    };
    out.obj_oth = to_tensor(obj_oth, {n2, n3, m});
    out.subj_oth = to_tensor(subj_oth, {n1, n3, m});
    out.subj_obj = to_tensor(subj_obj, {n1, n2, m});
    return out;
}

// Diagnostic 4-mode count tensor (subject x object x other x relation).
struct Mode4Tensor {
    struct Entry {
        std::size_t i, j, k, p;
        double value;
    };
    std::array<std::size_t, 4> shape{0, 0, 0, 0};
    std::vector<Entry> entries;
    Vocabulary vocab;
    std::int64_t total_mass = 0;

    double sparsity_ratio() const {
        const double cells = static_cast<double>(shape[0]) * static_cast<double>(shape[1]) *
                             static_cast<double>(shape[2]) * static_cast<double>(shape[3]);
        return cells > 0.0 ? static_cast<double>(entries.size()) / cells : 0.0;
    }
};

inline Mode4Tensor build_4mode_tensor(const std::vector<TupleRecord>& records) {
    if (records.empty()) throw data_error("empty corpus: no tuple records");
    Mode4Tensor out;
    using Key = std::array<std::size_t, 4>;
    std::map<Key, std::int64_t> cells;
    for (const TupleRecord& r : records) {
        if (r.others.size() != 1)
            throw data_error("build_4mode_tensor: records must be split to exactly one other");
        const std::size_t si = out.vocab.intern(Vocabulary::Table::subject, r.subject);
        const std::size_t oj = out.vocab.intern(Vocabulary::Table::object, r.object);
        const std::size_t ck = out.vocab.intern(Vocabulary::Table::other, r.others[0]);
        const std::size_t rp = out.vocab.intern(Vocabulary::Table::relation, r.relation);
        cells[{si, oj, ck, rp}] += r.count;
        out.total_mass += r.count;
    }
    out.shape = {out.vocab.n_subjects(), out.vocab.n_objects(), out.vocab.n_others(),
                 out.vocab.n_relations()};
    out.entries.reserve(cells.size());
    for (const auto& [key, mass] : cells)
        out.entries.push_back({key[0], key[1], key[2], key[3], static_cast<double>(mass)});
    return out;
}

// Sums one NP mode out of the 4-mode tensor (mode in {1,2,3}: subject,
// object, other), giving the corresponding back-off tensor.
inline SparseTensor3 sum_out_mode(const Mode4Tensor& t, int mode) {
    if (mode < 1 || mode > 3) throw config_error("sum_out_mode: mode must be 1, 2, or 3");
    std::map<std::array<std::size_t, 3>, double> cells;
    std::array<std::size_t, 3> shape{};
    for (const auto& e : t.entries) {
        switch (mode) {
            case 1: cells[{e.j, e.k, e.p}] += e.value; break;
            case 2: cells[{e.i, e.k, e.p}] += e.value; break;
            default: cells[{e.i, e.j, e.p}] += e.value; break;
        }
    }
    switch (mode) {
        case 1: shape = {t.shape[1], t.shape[2], t.shape[3]}; break;
        case 2: shape = {t.shape[0], t.shape[2], t.shape[3]}; break;
        default: shape = {t.shape[0], t.shape[1], t.shape[3]}; break;
    }
    std::vector<SparseTensor3::Entry> entries;
    entries.reserve(cells.size());
    for (const auto& [key, v] : cells) entries.push_back({key[0], key[1], key[2], v});
    return SparseTensor3(shape, std::move(entries));
}

}  // namespace nrsi
