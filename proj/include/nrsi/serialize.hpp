#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nrsi/corpus.hpp"
#include "nrsi/errors.hpp"
#include "nrsi/factorization.hpp"
#include "nrsi/hardclust.hpp"
#include "nrsi/model_selection.hpp"
#include "nrsi/numeric.hpp"
#include "nrsi/schema_miner.hpp"
#include "nrsi/synthetic.hpp"

namespace nrsi {

using ordered_json = nlohmann::ordered_json;

// All artifact writes go through a temp file followed by a rename, so a
// failed run never leaves a partially written artifact behind.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw io_error("failed writing " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw io_error("failed to move " + tmp.string() + " into place: " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw io_error("failed reading " + path.string());
    return buf.str();
}

namespace detail {

inline ordered_json parse_json(const std::string& text, const std::string& what) {
    ordered_json j = ordered_json::parse(text, nullptr, false);
    if (j.is_discarded()) throw data_error(what + ": invalid JSON");
    return j;
}

inline const char* table_name(Vocabulary::Table t) {
    switch (t) {
        case Vocabulary::Table::subject: return "subject";
        case Vocabulary::Table::object: return "object";
        case Vocabulary::Table::other: return "other";
        default: return "relation";
    }
}

}  // namespace detail

// --- vocabulary: JSON lines, one {"table","index","surface"} per symbol ------

inline void save_vocab_jsonl(const std::filesystem::path& path, const Vocabulary& vocab) {
    std::ostringstream out;
    for (auto table : {Vocabulary::Table::subject, Vocabulary::Table::object,
                       Vocabulary::Table::other, Vocabulary::Table::relation}) {
        const auto& surfaces = vocab.surfaces(table);
        for (std::size_t i = 0; i < surfaces.size(); ++i) {
            ordered_json line;
            line["table"] = detail::table_name(table);
            line["index"] = i;
            line["surface"] = surfaces[i];
            out << line.dump() << '\n';
        }
    }
    write_file_atomic(path, out.str());
}

inline Vocabulary load_vocab_jsonl(const std::filesystem::path& path) {
    Vocabulary vocab;
    std::istringstream in(read_file(path));
    std::string line;
    std::size_t line_no = 0;
    try {
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            const ordered_json j =
                detail::parse_json(line, path.string() + ":" + std::to_string(line_no));
            const std::string table = j.at("table").get<std::string>();
            const std::size_t index = j.at("index").get<std::size_t>();
            const std::string surface = j.at("surface").get<std::string>();
            Vocabulary::Table t;
            if (table == "subject") t = Vocabulary::Table::subject;
            else if (table == "object") t = Vocabulary::Table::object;
            else if (table == "other") t = Vocabulary::Table::other;
            else if (table == "relation") t = Vocabulary::Table::relation;
            else throw data_error(path.string() + ": unknown vocabulary table '" + table + "'");
            if (vocab.intern(t, surface) != index)
                throw data_error(path.string() + ": vocabulary indices are not contiguous at line " +
                                 std::to_string(line_no));
        }
    } catch (const nlohmann::json::exception& e) {
        throw data_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    return vocab;
}

// --- back-off tensors: JSON lines, header then one line per stored entry -----

inline void save_tensors_jsonl(const std::filesystem::path& path, const BackoffTensors& t) {
    std::ostringstream out;
    ordered_json header;
    header["kind"] = "nrsi.tensors";
    header["version"] = 1;
    header["subjects"] = t.vocab.n_subjects();
    header["objects"] = t.vocab.n_objects();
    header["others"] = t.vocab.n_others();
    header["relations"] = t.vocab.n_relations();
    header["total_mass"] = t.total_mass;
    out << header.dump() << '\n';
    auto dump_tensor = [&](const char* name, const SparseTensor3& tensor) {
        for (const auto& e : tensor.entries()) {
            ordered_json line;
            line["t"] = name;
            line["i"] = e.i;
            line["j"] = e.j;
            line["k"] = e.k;
            line["v"] = e.value;
            out << line.dump() << '\n';
        }
    };
    dump_tensor("obj_oth", t.obj_oth);
    dump_tensor("subj_oth", t.subj_oth);
    dump_tensor("subj_obj", t.subj_obj);
    write_file_atomic(path, out.str());
}

inline BackoffTensors load_tensors_jsonl(const std::filesystem::path& path,
                                         const Vocabulary& vocab) {
    try {
        std::istringstream in(read_file(path));
        std::string line;
        if (!std::getline(in, line)) throw data_error(path.string() + ": empty tensor file");
        const ordered_json header = detail::parse_json(line, path.string());
        if (header.value("kind", "") != std::string("nrsi.tensors"))
            throw data_error(path.string() + ": not a tensor artifact");
        const std::size_t n1 = header.at("subjects").get<std::size_t>();
        const std::size_t n2 = header.at("objects").get<std::size_t>();
        const std::size_t n3 = header.at("others").get<std::size_t>();
        const std::size_t m = header.at("relations").get<std::size_t>();
        if (n1 != vocab.n_subjects() || n2 != vocab.n_objects() || n3 != vocab.n_others() ||
            m != vocab.n_relations())
            throw shape_error(path.string() + ": tensor shapes do not match the vocabulary");
        std::vector<SparseTensor3::Entry> obj_oth, subj_oth, subj_obj;
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            const ordered_json j =
                detail::parse_json(line, path.string() + ":" + std::to_string(line_no));
            const std::string t = j.at("t").get<std::string>();
            SparseTensor3::Entry e{j.at("i").get<std::size_t>(), j.at("j").get<std::size_t>(),
                                   j.at("k").get<std::size_t>(), j.at("v").get<double>()};
            if (t == "obj_oth") obj_oth.push_back(e);
            else if (t == "subj_oth") subj_oth.push_back(e);
            else if (t == "subj_obj") subj_obj.push_back(e);
            else throw data_error(path.string() + ": unknown tensor '" + t + "'");
        }
        BackoffTensors out;
        out.vocab = vocab;
        out.total_mass = header.at("total_mass").get<std::int64_t>();
        out.obj_oth = SparseTensor3({n2, n3, m}, std::move(obj_oth));
        out.subj_oth = SparseTensor3({n1, n3, m}, std::move(subj_oth));
        out.subj_obj = SparseTensor3({n1, n2, m}, std::move(subj_obj));
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw data_error(path.string() + ": " + e.what());
    }
}

// --- factor sets: JSON container, optional little-endian binary sidecar ------

namespace detail {

inline void store_u64_le(std::string& out, std::uint64_t v) {
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

inline void store_f64_le(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    store_u64_le(out, bits);
}

inline std::uint64_t load_u64_le(const std::string& data, std::size_t& pos) {
    if (pos + 8 > data.size()) throw data_error("binary factor sidecar is truncated");
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[pos + b])) << (8 * b);
    pos += 8;
    return v;
}

inline double load_f64_le(const std::string& data, std::size_t& pos) {
    const std::uint64_t bits = load_u64_le(data, pos);
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

inline ordered_json matrix_header(const DenseMatrix& m, bool with_values) {
    ordered_json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    if (with_values) j["values"] = m.values();
    return j;
}

inline ordered_json tensor_header(const DenseTensor3& t, bool with_values) {
    ordered_json j;
    j["shape"] = t.shape();
    if (with_values) j["values"] = t.values();
    return j;
}

}  // namespace detail

inline constexpr char kFactorBinaryMagic[9] = "NRSIFB01";

// Writes the factor set to `path`.  With `binary_sidecar`, the value arrays
// move to `<stem>.bin`: eight magic bytes, then for each of the six items in
// fixed order (subjects, objects, others, core_obj_oth, core_subj_oth,
// core_subj_obj) a u64 rank, u64 dimensions, and the row-major f64 payload,
// all little-endian.
inline void save_factors(const std::filesystem::path& path, const FactorSet& f,
                         bool binary_sidecar = false) {
    ordered_json j;
    j["kind"] = "nrsi.factors";
    j["version"] = 1;
    const bool inline_values = !binary_sidecar;
    j["subjects"] = detail::matrix_header(f.subjects, inline_values);
    j["objects"] = detail::matrix_header(f.objects, inline_values);
    j["others"] = detail::matrix_header(f.others, inline_values);
    j["core_obj_oth"] = detail::tensor_header(f.core_obj_oth, inline_values);
    j["core_subj_oth"] = detail::tensor_header(f.core_subj_oth, inline_values);
    j["core_subj_obj"] = detail::tensor_header(f.core_subj_obj, inline_values);
    if (binary_sidecar) {
        std::filesystem::path bin = path;
        bin.replace_extension(".bin");
        j["binary"] = bin.filename().string();
        std::string blob(kFactorBinaryMagic, 8);
        auto put_matrix = [&](const DenseMatrix& m) {
            detail::store_u64_le(blob, 2);
            detail::store_u64_le(blob, m.rows());
            detail::store_u64_le(blob, m.cols());
            for (double v : m.values()) detail::store_f64_le(blob, v);
        };
        auto put_tensor = [&](const DenseTensor3& t) {
            detail::store_u64_le(blob, 3);
            for (std::size_t d : t.shape()) detail::store_u64_le(blob, d);
            for (double v : t.values()) detail::store_f64_le(blob, v);
        };
        put_matrix(f.subjects);
        put_matrix(f.objects);
        put_matrix(f.others);
        put_tensor(f.core_obj_oth);
        put_tensor(f.core_subj_oth);
        put_tensor(f.core_subj_obj);
        write_file_atomic(bin, blob);
    }
    write_file_atomic(path, j.dump(2) + "\n");
}

inline FactorSet load_factors(const std::filesystem::path& path) {
  try {
    const ordered_json j = detail::parse_json(read_file(path), path.string());
    if (j.value("kind", "") != std::string("nrsi.factors"))
        throw data_error(path.string() + ": not a factor artifact");
    FactorSet f;
    auto matrix_shape = [&](const char* key) {
        const auto& h = j.at(key);
        return DenseMatrix(h.at("rows").get<std::size_t>(), h.at("cols").get<std::size_t>());
    };
    auto tensor_shape = [&](const char* key) {
        const auto& h = j.at(key);
        const auto shape = h.at("shape").get<std::array<std::size_t, 3>>();
        return DenseTensor3(shape);
    };
    f.subjects = matrix_shape("subjects");
    f.objects = matrix_shape("objects");
    f.others = matrix_shape("others");
    f.core_obj_oth = tensor_shape("core_obj_oth");
    f.core_subj_oth = tensor_shape("core_subj_oth");
    f.core_subj_obj = tensor_shape("core_subj_obj");
    if (j.contains("binary")) {
        const std::filesystem::path bin =
            path.parent_path() / j.at("binary").get<std::string>();
        const std::string blob = read_file(bin);
        if (blob.size() < 8 || std::memcmp(blob.data(), kFactorBinaryMagic, 8) != 0)
            throw data_error(bin.string() + ": bad factor sidecar magic");
        std::size_t pos = 8;
        auto get_matrix = [&](DenseMatrix& m) {
            if (detail::load_u64_le(blob, pos) != 2)
                throw data_error(bin.string() + ": expected a matrix record");
            const std::uint64_t rows = detail::load_u64_le(blob, pos);
            const std::uint64_t cols = detail::load_u64_le(blob, pos);
            if (rows != m.rows() || cols != m.cols())
                throw shape_error(bin.string() + ": sidecar shape mismatch");
            for (double& v : m.values()) v = detail::load_f64_le(blob, pos);
        };
        auto get_tensor = [&](DenseTensor3& t) {
            if (detail::load_u64_le(blob, pos) != 3)
                throw data_error(bin.string() + ": expected a tensor record");
            for (std::size_t d : t.shape())
                if (detail::load_u64_le(blob, pos) != d)
                    throw shape_error(bin.string() + ": sidecar shape mismatch");
            for (double& v : t.values()) v = detail::load_f64_le(blob, pos);
        };
        get_matrix(f.subjects);
        get_matrix(f.objects);
        get_matrix(f.others);
        get_tensor(f.core_obj_oth);
        get_tensor(f.core_subj_oth);
        get_tensor(f.core_subj_obj);
    } else {
        auto fill_matrix = [&](const char* key, DenseMatrix& m) {
            m.values() = j.at(key).at("values").get<std::vector<double>>();
            if (m.values().size() != m.rows() * m.cols())
                throw shape_error(path.string() + ": value array size mismatch for " + key);
        };
        auto fill_tensor = [&](const char* key, DenseTensor3& t) {
            const auto values = j.at(key).at("values").get<std::vector<double>>();
            if (values.size() != t.size())
                throw shape_error(path.string() + ": value array size mismatch for " + key);
            t.values() = values;
        };
        fill_matrix("subjects", f.subjects);
        fill_matrix("objects", f.objects);
        fill_matrix("others", f.others);
        fill_tensor("core_obj_oth", f.core_obj_oth);
        fill_tensor("core_subj_oth", f.core_subj_oth);
        fill_tensor("core_subj_obj", f.core_subj_obj);
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw data_error(path.string() + ": " + e.what());
  }
}

inline ordered_json fit_report_json(const FitReport& r) {
    ordered_json j;
    j["fit_obj_oth"] = r.fit_obj_oth;
    j["fit_subj_oth"] = r.fit_subj_oth;
    j["fit_subj_obj"] = r.fit_subj_obj;
    j["avg_fit"] = r.avg_fit;
    j["objective"] = r.objective;
    j["iterations_run"] = r.iterations_run;
    return j;
}

// --- schemata: JSON lines, one schema per line --------------------------------

namespace detail {

inline ordered_json labels_json(const std::vector<ColumnLabel>& labels) {
    ordered_json arr = ordered_json::array();
    for (const ColumnLabel& l : labels) arr.push_back(ordered_json::array({l.np, l.weight}));
    return arr;
}

}  // namespace detail

inline void save_schemas_jsonl(const std::filesystem::path& path,
                               const std::vector<InducedSchema>& schemas) {
    std::ostringstream out;
    for (const InducedSchema& s : schemas) {
        ordered_json j;
        j["method"] = "factorization";
        j["relation"] = s.relation_surface;
        j["relation_index"] = s.relation;
        j["a_col"] = s.a_col;
        j["b_col"] = s.b_col;
        j["c_cols"] = s.c_cols;
        j["score"] = s.score;
        ordered_json labels;
        labels["a"] = detail::labels_json(s.a_labels);
        labels["b"] = detail::labels_json(s.b_labels);
        ordered_json c_arr = ordered_json::array();
        for (const auto& cl : s.c_labels) c_arr.push_back(detail::labels_json(cl));
        labels["c"] = c_arr;
        j["labels"] = labels;
        out << j.dump() << '\n';
    }
    write_file_atomic(path, out.str());
}

inline void save_hardclust_jsonl(const std::filesystem::path& path,
                                 const std::vector<HardClustSchema>& schemas) {
    std::ostringstream out;
    for (const HardClustSchema& s : schemas) {
        ordered_json j;
        j["method"] = "hardclust";
        j["relation"] = s.relation_surface;
        j["relation_index"] = s.relation;
        j["score"] = static_cast<double>(s.total_mass);
        ordered_json labels;
        labels["a"] = detail::labels_json(s.subject_reps);
        labels["b"] = detail::labels_json(s.object_reps);
        labels["c"] = ordered_json::array({detail::labels_json(s.other_reps)});
        j["labels"] = labels;
        out << j.dump() << '\n';
    }
    write_file_atomic(path, out.str());
}

inline std::vector<ordered_json> load_schemas_jsonl(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::vector<ordered_json> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        out.push_back(detail::parse_json(line, path.string() + ":" + std::to_string(line_no)));
    }
    return out;
}

// --- grid search: CSV dump -----------------------------------------------------

inline void save_grid_csv(const std::filesystem::path& path, const GridResult& grid) {
    std::ostringstream out;
    out << "r_subjects,r_objects,r_others,lambda_subjects,lambda_objects,lambda_others,"
           "fit_obj_oth,fit_subj_oth,fit_subj_obj,avg_fit,iterations,seed,status,wall_time_ms\n";
    for (const GridCell& cell : grid.cells) {
        out << cell.ranks.subjects << ',' << cell.ranks.objects << ',' << cell.ranks.others << ','
            << to_roundtrip_string(cell.reg.lambda_subjects) << ','
            << to_roundtrip_string(cell.reg.lambda_objects) << ','
            << to_roundtrip_string(cell.reg.lambda_others) << ',';
        if (cell.skipped) {
            out << ",,,,," << cell.seed << ",skipped:" << cell.note << ',';
        } else {
            out << to_roundtrip_string(cell.fit.fit_obj_oth) << ','
                << to_roundtrip_string(cell.fit.fit_subj_oth) << ','
                << to_roundtrip_string(cell.fit.fit_subj_obj) << ','
                << to_roundtrip_string(cell.fit.avg_fit) << ',' << cell.fit.iterations_run << ','
                << cell.seed << ",ok,";
        }
        out << to_roundtrip_string(cell.wall_seconds * 1000.0) << '\n';
    }
    write_file_atomic(path, out.str());
}

// --- synthetic corpora ----------------------------------------------------------

inline SyntheticSpec synthetic_spec_from_json(const ordered_json& j) {
    SyntheticSpec spec;
    try {
        spec.vocab_sizes = j.at("vocab_sizes").get<std::array<std::size_t, 3>>();
        spec.relations = j.at("relations").get<std::size_t>();
        spec.blocks = j.at("blocks").get<std::array<std::size_t, 3>>();
        spec.noise_rate = j.value("noise_rate", 0.0);
        spec.seed = j.value("seed", std::uint64_t{0});
        for (const auto& s : j.at("schemata")) {
            PlantedSchema p;
            p.relation = s.at("relation").get<std::size_t>();
            p.a_block = s.at("a_block").get<std::size_t>();
            p.b_block = s.at("b_block").get<std::size_t>();
            p.c_blocks = s.at("c_blocks").get<std::vector<std::size_t>>();
            p.weight = s.at("weight").get<std::size_t>();
            spec.schemata.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("synthetic spec: ") + e.what());
    }
    validate(spec);
    return spec;
}

inline ordered_json synthetic_spec_to_json(const SyntheticSpec& spec) {
    ordered_json j;
    j["vocab_sizes"] = spec.vocab_sizes;
    j["relations"] = spec.relations;
    j["blocks"] = spec.blocks;
    j["noise_rate"] = spec.noise_rate;
    j["seed"] = spec.seed;
    ordered_json arr = ordered_json::array();
    for (const PlantedSchema& s : spec.schemata) {
        ordered_json p;
        p["relation"] = s.relation;
        p["a_block"] = s.a_block;
        p["b_block"] = s.b_block;
        p["c_blocks"] = s.c_blocks;
        p["weight"] = s.weight;
        arr.push_back(std::move(p));
    }
    j["schemata"] = arr;
    return j;
}

inline SyntheticSpec load_synthetic_spec(const std::filesystem::path& path) {
    return synthetic_spec_from_json(detail::parse_json(read_file(path), path.string()));
}

// Ground-truth sidecar: the spec plus the explicit vocabulary membership of
// every block, so downstream checks never re-derive the partition.
inline void save_truth_json(const std::filesystem::path& path, const SyntheticSpec& spec) {
    ordered_json j;
    j["spec"] = synthetic_spec_to_json(spec);
    auto members = [&](std::size_t axis, auto surface) {
        ordered_json blocks = ordered_json::array();
        for (std::size_t b = 0; b < spec.blocks[axis]; ++b) {
            const auto [first, last] = block_range(spec.vocab_sizes[axis], spec.blocks[axis], b);
            ordered_json arr = ordered_json::array();
            for (std::size_t i = first; i < last; ++i) arr.push_back(surface(i));
            blocks.push_back(std::move(arr));
        }
        return blocks;
    };
    j["block_members"]["subjects"] = members(0, subject_surface);
    j["block_members"]["objects"] = members(1, object_surface);
    j["block_members"]["others"] = members(2, other_surface);
    ordered_json rels = ordered_json::array();
    for (std::size_t r = 0; r < spec.relations; ++r) rels.push_back(relation_surface(r));
    j["relations"] = rels;
    write_file_atomic(path, j.dump(2) + "\n");
}

inline void save_tuples_tsv(const std::filesystem::path& path,
                            const std::vector<TupleRecord>& records) {
    std::ostringstream out;
    for (const TupleRecord& r : records) {
        out << r.subject << '\t' << r.relation << '\t' << r.object;
        for (const std::string& o : r.others) out << '\t' << o;
        if (r.count != 1) out << '\t' << r.count;
        out << '\n';
    }
    write_file_atomic(path, out.str());
}

}  // namespace nrsi
