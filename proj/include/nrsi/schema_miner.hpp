#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "nrsi/corpus.hpp"
#include "nrsi/dense.hpp"
#include "nrsi/errors.hpp"
#include "nrsi/factorization.hpp"
#include "nrsi/numeric.hpp"

namespace nrsi {

// Which core a binary schema came from, i.e. which pair of factor matrices
// its two columns index.
enum class CoreSide {
    obj_oth = 1,   // columns of (objects, others)
    subj_oth = 2,  // columns of (subjects, others)
    subj_obj = 3,  // columns of (subjects, objects)
};

// One top-n cell of a per-relation core slice: an edge of the tripartite
// graph between two latent categories.
struct BinarySchema {
    std::size_t relation = 0;
    CoreSide side = CoreSide::subj_obj;
    std::size_t left_col = 0;
    std::size_t right_col = 0;
    double weight = 0.0;
};

struct WeightedEdge {
    std::size_t u = 0;
    std::size_t v = 0;
    double weight = 0.0;
};

// Per-relation graph over factor columns.  Vertex classes are the columns of
// the subject, object, and other factors; edges come from the top-n cells of
// the matching core slices.
struct TripartiteGraph {
    std::size_t relation = 0;
    std::size_t subject_cols = 0;
    std::size_t object_cols = 0;
    std::size_t other_cols = 0;
    std::vector<WeightedEdge> subj_obj;  // (subject col, object col)
    std::vector<WeightedEdge> subj_oth;  // (subject col, other col)
    std::vector<WeightedEdge> obj_oth;   // (object col, other col)
};

struct Triangle {
    std::size_t a = 0;  // subject column
    std::size_t b = 0;  // object column
    std::size_t c = 0;  // other column
    bool operator==(const Triangle& o) const { return a == o.a && b == o.b && c == o.c; }
};

struct ColumnLabel {
    std::string np;
    double weight = 0.0;
    bool operator==(const ColumnLabel& o) const { return np == o.np && weight == o.weight; }
};

// A mined constrained clique: one subject column, one object column, one or
// more other columns, with representative noun phrases per column.
struct InducedSchema {
    std::size_t relation = 0;
    std::string relation_surface;
    std::size_t a_col = 0;
    std::size_t b_col = 0;
    std::vector<std::size_t> c_cols;  // strictly increasing
    double score = 0.0;
    std::vector<ColumnLabel> a_labels;
    std::vector<ColumnLabel> b_labels;
    std::vector<std::vector<ColumnLabel>> c_labels;  // parallel to c_cols
};

struct MinerOptions {
    std::size_t top_cells = 5;     // edges kept per core slice
    std::size_t label_k = 3;       // representative NPs per column
    std::size_t top_schemata = 50; // global ranking cutoff
};

// The n highest strictly positive cells of a core slice (fewer if the slice
// has fewer), ties broken by (row, col).
inline std::vector<BinarySchema> top_n_cells(const DenseMatrix& slice, std::size_t n,
                                             std::size_t relation, CoreSide side) {
    if (n < 1) throw config_error("top_n_cells: n must be >= 1");
    std::vector<BinarySchema> cells;
    for (std::size_t i = 0; i < slice.rows(); ++i)
        for (std::size_t j = 0; j < slice.cols(); ++j)
            if (slice(i, j) > 0.0) cells.push_back({relation, side, i, j, slice(i, j)});
    std::sort(cells.begin(), cells.end(), [](const BinarySchema& x, const BinarySchema& y) {
        if (x.weight != y.weight) return x.weight > y.weight;
        return std::tie(x.left_col, x.right_col) < std::tie(y.left_col, y.right_col);
    });
    if (cells.size() > n) cells.resize(n);
    return cells;
}

inline TripartiteGraph build_graph(const FactorSet& f, std::size_t relation, std::size_t n) {
    const std::size_t m = f.core_subj_obj.shape()[2];
    if (relation >= m) throw shape_error("build_graph: relation index out of range");
    TripartiteGraph g;
    g.relation = relation;
    g.subject_cols = f.subjects.cols();
    g.object_cols = f.objects.cols();
    g.other_cols = f.others.cols();
    auto edges_from = [&](const DenseTensor3& core, CoreSide side) {
        std::vector<WeightedEdge> edges;
        for (const BinarySchema& s : top_n_cells(slice_mode3(core, relation), n, relation, side))
            edges.push_back({s.left_col, s.right_col, s.weight});
        std::sort(edges.begin(), edges.end(), [](const WeightedEdge& x, const WeightedEdge& y) {
            return std::tie(x.u, x.v) < std::tie(y.u, y.v);
        });
        return edges;
    };
    g.subj_obj = edges_from(f.core_subj_obj, CoreSide::subj_obj);
    g.subj_oth = edges_from(f.core_subj_oth, CoreSide::subj_oth);
    g.obj_oth = edges_from(f.core_obj_oth, CoreSide::obj_oth);
    return g;
}

// All (a, b, c) with (a,b), (a,c), (b,c) present, in lexicographic order.
inline std::vector<Triangle> mine_triangles(const TripartiteGraph& g) {
    std::vector<std::vector<char>> subj_oth_adj(g.subject_cols,
                                                std::vector<char>(g.other_cols, 0));
    std::vector<std::vector<char>> obj_oth_adj(g.object_cols,
                                               std::vector<char>(g.other_cols, 0));
    for (const auto& e : g.subj_oth) subj_oth_adj[e.u][e.v] = 1;
    for (const auto& e : g.obj_oth) obj_oth_adj[e.u][e.v] = 1;
    std::vector<Triangle> triangles;
    for (const auto& e : g.subj_obj)
        for (std::size_t c = 0; c < g.other_cols; ++c)
            if (subj_oth_adj[e.u][c] && obj_oth_adj[e.v][c]) triangles.push_back({e.u, e.v, c});
    std::sort(triangles.begin(), triangles.end(), [](const Triangle& x, const Triangle& y) {
        return std::tie(x.a, x.b, x.c) < std::tie(y.a, y.b, y.c);
    });
    return triangles;
}

// Groups triangles sharing the (subject, object) edge into one maximal
// schema carrying all their other-columns; a lone triangle stays 3-ary.
inline std::vector<InducedSchema> merge_cliques(const std::vector<Triangle>& triangles,
                                                std::size_t relation) {
    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> groups;
    for (const Triangle& t : triangles) groups[{t.a, t.b}].push_back(t.c);
    std::vector<InducedSchema> out;
    out.reserve(groups.size());
    for (auto& [ab, cs] : groups) {
        std::sort(cs.begin(), cs.end());
        cs.erase(std::unique(cs.begin(), cs.end()), cs.end());
        InducedSchema s;
        s.relation = relation;
        s.a_col = ab.first;
        s.b_col = ab.second;
        s.c_cols = std::move(cs);
        out.push_back(std::move(s));
    }
    return out;
}

// Sum of the weights of every constituent edge; the shared (subject, object)
// edge is counted once.
inline double score_schema(const InducedSchema& s, const TripartiteGraph& g) {
    auto weight_of = [](const std::vector<WeightedEdge>& edges, std::size_t u, std::size_t v) {
        for (const auto& e : edges)
            if (e.u == u && e.v == v) return e.weight;
        throw std::logic_error("score_schema: schema references an edge missing from the graph");
    };
    Accumulator acc;
    acc.add(weight_of(g.subj_obj, s.a_col, s.b_col));
    for (std::size_t c : s.c_cols) {
        acc.add(weight_of(g.subj_oth, s.a_col, c));
        acc.add(weight_of(g.obj_oth, s.b_col, c));
    }
    return acc.value();
}

// Top-k rows of one factor column by weight, ties by row index.
inline std::vector<ColumnLabel> label_column(const DenseMatrix& factor, std::size_t col,
                                             const std::vector<std::string>& names,
                                             std::size_t k) {
    if (k < 1) throw config_error("label_column: k must be >= 1");
    if (col >= factor.cols()) throw shape_error("label_column: column out of range");
    if (names.size() != factor.rows())
        throw shape_error("label_column: name table does not match factor rows");
    std::vector<std::size_t> order(factor.rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        if (factor(x, col) != factor(y, col)) return factor(x, col) > factor(y, col);
        return x < y;
    });
    if (order.size() > k) order.resize(k);
    std::vector<ColumnLabel> labels;
    labels.reserve(order.size());
    for (std::size_t i : order) labels.push_back({names[i], factor(i, col)});
    return labels;
}

// Full mining pass: per relation build the graph, enumerate triangles, merge
// them into constrained cliques, then rank everything globally by score
// (ties by relation, subject column, object column) and attach labels.
inline std::vector<InducedSchema> induce_schemata(const FactorSet& f, const Vocabulary& vocab,
                                                  const MinerOptions& opt = {}) {
    for (const auto* mat : {&f.subjects, &f.objects, &f.others})
        for (double v : mat->values())
            if (!std::isfinite(v)) throw numeric_error("induce_schemata: non-finite factor");
    for (const auto* core : {&f.core_obj_oth, &f.core_subj_oth, &f.core_subj_obj})
        for (double v : core->values())
            if (!std::isfinite(v)) throw numeric_error("induce_schemata: non-finite core");
    if (f.subjects.rows() != vocab.n_subjects() || f.objects.rows() != vocab.n_objects() ||
        f.others.rows() != vocab.n_others() || f.core_subj_obj.shape()[2] != vocab.n_relations())
        throw shape_error("induce_schemata: factor set does not match the vocabulary");

    const std::size_t m = vocab.n_relations();
    std::vector<InducedSchema> all;
    for (std::size_t rel = 0; rel < m; ++rel) {
        const TripartiteGraph g = build_graph(f, rel, opt.top_cells);
        for (InducedSchema& s : merge_cliques(mine_triangles(g), rel)) {
            s.score = score_schema(s, g);
            all.push_back(std::move(s));
        }
    }
    std::sort(all.begin(), all.end(), [](const InducedSchema& x, const InducedSchema& y) {
        if (x.score != y.score) return x.score > y.score;
        return std::tie(x.relation, x.a_col, x.b_col) < std::tie(y.relation, y.a_col, y.b_col);
    });
    if (all.size() > opt.top_schemata) all.resize(opt.top_schemata);

    const auto& subject_names = vocab.surfaces(Vocabulary::Table::subject);
    const auto& object_names = vocab.surfaces(Vocabulary::Table::object);
    const auto& other_names = vocab.surfaces(Vocabulary::Table::other);
    for (InducedSchema& s : all) {
        s.relation_surface = vocab.surface(Vocabulary::Table::relation, s.relation);
        s.a_labels = label_column(f.subjects, s.a_col, subject_names, opt.label_k);
        s.b_labels = label_column(f.objects, s.b_col, object_names, opt.label_k);
        for (std::size_t c : s.c_cols)
            s.c_labels.push_back(label_column(f.others, c, other_names, opt.label_k));
    }
    return all;
}

}  // namespace nrsi
