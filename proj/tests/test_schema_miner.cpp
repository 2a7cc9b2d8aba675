#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "nrsi/schema_miner.hpp"
#include "oracle.hpp"

using namespace nrsi;

namespace {

// Independent reference: for every (a, b) edge, the maximal constrained
// clique is {a, b} plus all common other-neighbors, when any exist.
struct RefSchema {
    std::size_t a, b;
    std::vector<std::size_t> cs;
    bool operator==(const RefSchema& o) const { return a == o.a && b == o.b && cs == o.cs; }
    bool operator<(const RefSchema& o) const {
        return std::tie(a, b, cs) < std::tie(o.a, o.b, o.cs);
    }
};

std::vector<RefSchema> reference_cliques(const TripartiteGraph& g) {
    std::vector<RefSchema> out;
    for (const auto& ab : g.subj_obj) {
        std::vector<std::size_t> cs;
        for (std::size_t c = 0; c < g.other_cols; ++c) {
            bool ac = false, bc = false;
            for (const auto& e : g.subj_oth)
                if (e.u == ab.u && e.v == c) ac = true;
            for (const auto& e : g.obj_oth)
                if (e.u == ab.v && e.v == c) bc = true;
            if (ac && bc) cs.push_back(c);
        }
        if (!cs.empty()) out.push_back({ab.u, ab.v, cs});
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Triangle> reference_triangles(const TripartiteGraph& g) {
    std::vector<Triangle> out;
    for (std::size_t a = 0; a < g.subject_cols; ++a)
        for (std::size_t b = 0; b < g.object_cols; ++b)
            for (std::size_t c = 0; c < g.other_cols; ++c) {
                bool ab = false, ac = false, bc = false;
                for (const auto& e : g.subj_obj)
                    if (e.u == a && e.v == b) ab = true;
                for (const auto& e : g.subj_oth)
                    if (e.u == a && e.v == c) ac = true;
                for (const auto& e : g.obj_oth)
                    if (e.u == b && e.v == c) bc = true;
                if (ab && ac && bc) out.push_back({a, b, c});
            }
    return out;
}

TripartiteGraph random_graph(std::size_t na, std::size_t nb, std::size_t nc,
                             std::size_t edges_per_side, std::mt19937_64& rng) {
    TripartiteGraph g;
    g.subject_cols = na;
    g.object_cols = nb;
    g.other_cols = nc;
    auto fill = [&](std::vector<WeightedEdge>& edges, std::size_t nu, std::size_t nv) {
        std::set<std::pair<std::size_t, std::size_t>> seen;
        for (std::size_t e = 0; e < edges_per_side; ++e) {
            const std::size_t u = uniform_index(rng, nu);
            const std::size_t v = uniform_index(rng, nv);
            if (seen.insert({u, v}).second) edges.push_back({u, v, uniform_positive(rng)});
        }
        std::sort(edges.begin(), edges.end(), [](const WeightedEdge& x, const WeightedEdge& y) {
            return std::tie(x.u, x.v) < std::tie(y.u, y.v);
        });
    };
    fill(g.subj_obj, na, nb);
    fill(g.subj_oth, na, nc);
    fill(g.obj_oth, nb, nc);
    return g;
}

// Factor set whose cores carry exactly one designed triangle per relation.
FactorSet designed_factors(std::size_t m) {
    FactorSet f;
    const std::size_t r1 = 4, r2 = 4, r3 = 6;
    f.subjects = DenseMatrix::identity(r1);
    f.objects = DenseMatrix::identity(r2);
    f.others = DenseMatrix::identity(r3);
    f.core_obj_oth = DenseTensor3({r2, r3, m});
    f.core_subj_oth = DenseTensor3({r1, r3, m});
    f.core_subj_obj = DenseTensor3({r1, r2, m});
    return f;
}

}  // namespace

TEST_CASE("top_n_cells") {
    SECTION("fewer positive cells than n") {
        DenseMatrix slice(3, 3);
        slice(0, 1) = 2.0;
        slice(1, 2) = 1.0;
        slice(2, 0) = 3.0;
        const auto cells = top_n_cells(slice, 5, 0, CoreSide::subj_obj);
        REQUIRE(cells.size() == 3);
        CHECK(cells[0].weight == 3.0);
        CHECK(cells[0].left_col == 2);
        CHECK(cells[0].right_col == 0);
    }
    SECTION("n = 1 picks the unique maximum") {
        DenseMatrix slice(2, 2);
        slice(0, 0) = 1.0;
        slice(1, 1) = 9.0;
        const auto cells = top_n_cells(slice, 1, 3, CoreSide::obj_oth);
        REQUIRE(cells.size() == 1);
        CHECK(cells[0].left_col == 1);
        CHECK(cells[0].relation == 3);
        CHECK(cells[0].side == CoreSide::obj_oth);
    }
    SECTION("ties break by row then column") {
        DenseMatrix slice(2, 2, 5.0);
        const auto cells = top_n_cells(slice, 3, 0, CoreSide::subj_obj);
        REQUIRE(cells.size() == 3);
        CHECK(cells[0].left_col == 0);
        CHECK(cells[0].right_col == 0);
        CHECK(cells[1].right_col == 1);
        CHECK(cells[2].left_col == 1);
    }
    SECTION("matches a full-sort reference on random slices") {
        std::mt19937_64 rng(808);
        for (int trial = 0; trial < 25; ++trial) {
            DenseMatrix slice(6, 7);
            for (double& v : slice.values())
                v = uniform01(rng) < 0.5 ? 0.0 : uniform_positive(rng);
            const auto cells = top_n_cells(slice, 5, 0, CoreSide::subj_obj);
            std::vector<std::tuple<double, std::size_t, std::size_t>> ref;
            for (std::size_t i = 0; i < 6; ++i)
                for (std::size_t j = 0; j < 7; ++j)
                    if (slice(i, j) > 0.0) ref.emplace_back(-slice(i, j), i, j);
            std::sort(ref.begin(), ref.end());
            REQUIRE(cells.size() == std::min<std::size_t>(5, ref.size()));
            for (std::size_t i = 0; i < cells.size(); ++i) {
                CHECK(cells[i].weight == -std::get<0>(ref[i]));
                CHECK(cells[i].left_col == std::get<1>(ref[i]));
                CHECK(cells[i].right_col == std::get<2>(ref[i]));
            }
        }
    }
    SECTION("n of zero is rejected") {
        REQUIRE_THROWS_AS(top_n_cells(DenseMatrix(2, 2), 0, 0, CoreSide::subj_obj), config_error);
    }
}

TEST_CASE("build_graph") {
    SECTION("all-zero slices give an empty graph") {
        const FactorSet f = designed_factors(2);
        const TripartiteGraph g = build_graph(f, 0, 5);
        CHECK(g.subj_obj.empty());
        CHECK(g.subj_oth.empty());
        CHECK(g.obj_oth.empty());
    }
    SECTION("one positive cell per core gives exactly three edges") {
        FactorSet f = designed_factors(2);
        f.core_subj_obj(1, 2, 0) = 4.0;
        f.core_subj_oth(1, 3, 0) = 2.0;
        f.core_obj_oth(2, 3, 0) = 1.5;
        const TripartiteGraph g = build_graph(f, 0, 5);
        REQUIRE(g.subj_obj.size() == 1);
        REQUIRE(g.subj_oth.size() == 1);
        REQUIRE(g.obj_oth.size() == 1);
        CHECK(g.subj_obj[0].u == 1);
        CHECK(g.subj_obj[0].v == 2);
        CHECK(g.subj_obj[0].weight == 4.0);
    }
    SECTION("edge multiset equals the per-slice top-n reference") {
        std::mt19937_64 rng(909);
        auto inst = oracle::random_instance(6, 6, 6, 3, 4, 4, 5, 0.5, rng);
        const TripartiteGraph g = build_graph(inst.factors, 1, 5);
        const auto expected =
            top_n_cells(slice_mode3(inst.factors.core_subj_obj, 1), 5, 1, CoreSide::subj_obj);
        REQUIRE(g.subj_obj.size() == expected.size());
        std::set<std::tuple<std::size_t, std::size_t, double>> got, want;
        for (const auto& e : g.subj_obj) got.insert({e.u, e.v, e.weight});
        for (const auto& c : expected) want.insert({c.left_col, c.right_col, c.weight});
        CHECK(got == want);
    }
    SECTION("relation out of range throws") {
        const FactorSet f = designed_factors(2);
        REQUIRE_THROWS_AS(build_graph(f, 2, 5), shape_error);
    }
}

TEST_CASE("mine_triangles") {
    SECTION("a closed triple is one triangle") {
        TripartiteGraph g;
        g.subject_cols = g.object_cols = g.other_cols = 3;
        g.subj_obj = {{1, 1, 1.0}};
        g.subj_oth = {{1, 2, 1.0}};
        g.obj_oth = {{1, 2, 1.0}};
        const auto tris = mine_triangles(g);
        REQUIRE(tris.size() == 1);
        CHECK(tris[0] == Triangle{1, 1, 2});
    }
    SECTION("a missing object-other edge closes no triangle") {
        TripartiteGraph g;
        g.subject_cols = g.object_cols = g.other_cols = 3;
        g.subj_obj = {{1, 1, 1.0}};
        g.subj_oth = {{1, 2, 1.0}};
        const auto tris = mine_triangles(g);
        CHECK(tris.empty());
    }
    SECTION("equals brute-force enumeration on random graphs") {
        std::mt19937_64 rng(1010);
        for (int trial = 0; trial < 40; ++trial) {
            const auto g = random_graph(5, 6, 4, 15, rng);
            auto got = mine_triangles(g);
            auto want = reference_triangles(g);
            auto key = [](const Triangle& t) { return std::tie(t.a, t.b, t.c); };
            std::sort(want.begin(), want.end(),
                      [&](const Triangle& x, const Triangle& y) { return key(x) < key(y); });
            REQUIRE(got.size() == want.size());
            for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == want[i]);
        }
    }
}

TEST_CASE("merge_cliques") {
    SECTION("worked merge example") {
        const std::vector<Triangle> tris = {{2, 4, 10}, {2, 4, 8}};
        const auto schemas = merge_cliques(tris, 0);
        REQUIRE(schemas.size() == 1);
        CHECK(schemas[0].a_col == 2);
        CHECK(schemas[0].b_col == 4);
        CHECK(schemas[0].c_cols == std::vector<std::size_t>{8, 10});
    }
    SECTION("a single triangle stays 3-ary") {
        const auto schemas = merge_cliques({{1, 2, 3}}, 0);
        REQUIRE(schemas.size() == 1);
        CHECK(schemas[0].c_cols == std::vector<std::size_t>{3});
    }
    SECTION("different object columns are separate schemata") {
        const auto schemas = merge_cliques({{1, 1, 1}, {1, 2, 1}}, 0);
        REQUIRE(schemas.size() == 2);
    }
    SECTION("merging then splitting back recovers the triangle set") {
        std::mt19937_64 rng(1111);
        for (int trial = 0; trial < 30; ++trial) {
            const auto g = random_graph(6, 6, 6, 12, rng);
            const auto tris = mine_triangles(g);
            const auto schemas = merge_cliques(tris, 0);
            std::vector<Triangle> rebuilt;
            for (const auto& s : schemas)
                for (std::size_t c : s.c_cols) rebuilt.push_back({s.a_col, s.b_col, c});
            std::sort(rebuilt.begin(), rebuilt.end(), [](const Triangle& x, const Triangle& y) {
                return std::tie(x.a, x.b, x.c) < std::tie(y.a, y.b, y.c);
            });
            REQUIRE(rebuilt.size() == tris.size());
            for (std::size_t i = 0; i < tris.size(); ++i) CHECK(rebuilt[i] == tris[i]);
            // idempotence: merging the rebuilt triangles gives the same schemas
            const auto again = merge_cliques(rebuilt, 0);
            REQUIRE(again.size() == schemas.size());
            for (std::size_t i = 0; i < schemas.size(); ++i) {
                CHECK(again[i].a_col == schemas[i].a_col);
                CHECK(again[i].b_col == schemas[i].b_col);
                CHECK(again[i].c_cols == schemas[i].c_cols);
            }
        }
    }
    SECTION("output equals the constrained-maximal-clique reference") {
        std::mt19937_64 rng(1212);
        for (int trial = 0; trial < 40; ++trial) {
            const auto g = random_graph(8, 8, 8, 18, rng);
            const auto schemas = merge_cliques(mine_triangles(g), 0);
            std::vector<RefSchema> got;
            for (const auto& s : schemas) got.push_back({s.a_col, s.b_col, s.c_cols});
            std::sort(got.begin(), got.end());
            const auto want = reference_cliques(g);
            REQUIRE(got.size() == want.size());
            for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == want[i]);
        }
    }
}

TEST_CASE("score_schema") {
    TripartiteGraph g;
    g.subject_cols = g.object_cols = g.other_cols = 8;
    g.subj_obj = {{1, 2, 1.0}, {1, 4, 4.0}};
    g.subj_oth = {{1, 3, 2.0}, {1, 5, 4.0}};
    g.obj_oth = {{2, 3, 3.0}, {4, 5, 5.0}, {2, 5, 0.5}};
    SECTION("triangle with weights 1, 2, 3 scores 6") {
        InducedSchema s;
        s.a_col = 1;
        s.b_col = 2;
        s.c_cols = {3};
        CHECK(score_schema(s, g) == 6.0);
    }
    SECTION("merged 4-ary counts the shared edge once") {
        TripartiteGraph gm;
        gm.subject_cols = gm.object_cols = gm.other_cols = 8;
        gm.subj_obj = {{0, 0, 1.0}};
        gm.subj_oth = {{0, 1, 2.0}, {0, 4, 4.0}};
        gm.obj_oth = {{0, 1, 3.0}, {0, 4, 5.0}};
        InducedSchema s;
        s.a_col = 0;
        s.b_col = 0;
        s.c_cols = {1, 4};
        CHECK(score_schema(s, gm) == 15.0);
    }
    SECTION("recomputation from edges matches on random graphs") {
        std::mt19937_64 rng(1313);
        for (int trial = 0; trial < 20; ++trial) {
            const auto rg = random_graph(6, 6, 6, 14, rng);
            for (const auto& s : merge_cliques(mine_triangles(rg), 0)) {
                double expected = 0.0;
                for (const auto& e : rg.subj_obj)
                    if (e.u == s.a_col && e.v == s.b_col) expected += e.weight;
                for (std::size_t c : s.c_cols) {
                    for (const auto& e : rg.subj_oth)
                        if (e.u == s.a_col && e.v == c) expected += e.weight;
                    for (const auto& e : rg.obj_oth)
                        if (e.u == s.b_col && e.v == c) expected += e.weight;
                }
                REQUIRE_THAT(score_schema(s, rg), Catch::Matchers::WithinRel(expected, 1e-12));
            }
        }
    }
    SECTION("missing edge is a contract violation") {
        InducedSchema s;
        s.a_col = 7;
        s.b_col = 7;
        s.c_cols = {7};
        REQUIRE_THROWS_AS(score_schema(s, g), std::logic_error);
    }
}

TEST_CASE("label_column") {
    const std::vector<std::string> names = {"np0", "np1", "np2", "np3"};
    SECTION("one-hot column labels the single NP") {
        DenseMatrix m(4, 2);
        m(2, 1) = 1.0;
        const auto labels = label_column(m, 1, names, 3);
        REQUIRE(labels.size() == 3);
        CHECK(labels[0].np == "np2");
        CHECK(labels[0].weight == 1.0);
    }
    SECTION("k larger than rows returns all NPs sorted") {
        DenseMatrix m(4, 1);
        m(0, 0) = 0.5;
        m(1, 0) = 0.9;
        m(2, 0) = 0.1;
        m(3, 0) = 0.7;
        const auto labels = label_column(m, 0, names, 10);
        REQUIRE(labels.size() == 4);
        CHECK(labels[0].np == "np1");
        CHECK(labels[1].np == "np3");
        CHECK(labels[2].np == "np0");
        CHECK(labels[3].np == "np2");
    }
    SECTION("matches a full-sort reference on random matrices") {
        std::mt19937_64 rng(1414);
        for (int trial = 0; trial < 20; ++trial) {
            DenseMatrix m(4, 3);
            for (double& v : m.values()) v = uniform01(rng);
            const std::size_t col = uniform_index(rng, 3);
            const auto labels = label_column(m, col, names, 2);
            std::vector<std::pair<double, std::size_t>> ref;
            for (std::size_t i = 0; i < 4; ++i) ref.emplace_back(-m(i, col), i);
            std::sort(ref.begin(), ref.end());
            REQUIRE(labels.size() == 2);
            for (std::size_t i = 0; i < labels.size(); ++i)
                CHECK(labels[i].np == names[ref[i].second]);
        }
    }
}

TEST_CASE("induce_schemata") {
    SECTION("planted block-diagonal factors recover one designed schema per relation") {
        const std::size_t m = 3;
        FactorSet f = designed_factors(m);
        const nrsi::Vocabulary vocab = oracle::stub_vocab(4, 4, 6, m);
        // relation r gets triangle (r, r, r) with descending designed weights
        const double weights[] = {9.0, 6.0, 3.0};
        for (std::size_t r = 0; r < m; ++r) {
            f.core_subj_obj(r, r, r) = weights[r];
            f.core_subj_oth(r, r, r) = weights[r];
            f.core_obj_oth(r, r, r) = weights[r];
        }
        const auto schemas = induce_schemata(f, vocab);
        REQUIRE(schemas.size() == m);
        for (std::size_t i = 0; i < m; ++i) {
            CHECK(schemas[i].relation == i);  // planted weights decay with the relation id
            CHECK(schemas[i].a_col == i);
            CHECK(schemas[i].b_col == i);
            CHECK(schemas[i].c_cols == std::vector<std::size_t>{i});
            CHECK(schemas[i].score == 3.0 * weights[i]);
        }
    }
    SECTION("zero cores give an empty list") {
        const FactorSet f = designed_factors(2);
        const auto schemas = induce_schemata(f, oracle::stub_vocab(4, 4, 6, 2));
        CHECK(schemas.empty());
    }
    SECTION("merged 4-ary output carries labels per column in presentation form") {
        const std::size_t m = 1;
        FactorSet f = designed_factors(m);
        nrsi::Vocabulary vocab;
        const char* subjects[] = {"police", "officers", "huntsville police", "crowd"};
        const char* objects[] = {"man", "victims", "four victims", "cars"};
        const char* others[] = {"x0", "x1", "x2", "x3", "sunday", "apartment"};
        for (const char* s : subjects) vocab.intern(Vocabulary::Table::subject, s);
        for (const char* o : objects) vocab.intern(Vocabulary::Table::object, o);
        for (const char* c : others) vocab.intern(Vocabulary::Table::other, c);
        vocab.intern(Vocabulary::Table::relation, "identify");
        // two triangles sharing (A1, B1), closing over C4 and C5
        f.core_subj_obj(1, 1, 0) = 5.0;
        f.core_subj_oth(1, 4, 0) = 4.0;
        f.core_subj_oth(1, 5, 0) = 3.0;
        f.core_obj_oth(1, 4, 0) = 2.0;
        f.core_obj_oth(1, 5, 0) = 1.0;
        f.subjects(0, 1) = 2.0;  // strongest subject NP for column 1 is "police"
        f.objects(0, 1) = 1.8;   // likewise "man"
        const auto schemas = induce_schemata(f, vocab, {5, 3, 50});
        REQUIRE(schemas.size() == 1);
        const InducedSchema& s = schemas[0];
        CHECK(s.relation_surface == "identify");
        CHECK(s.a_col == 1);
        CHECK(s.b_col == 1);
        CHECK(s.c_cols == std::vector<std::size_t>{4, 5});
        REQUIRE(s.c_labels.size() == 2);
        CHECK(s.a_labels[0].np == "police");
        CHECK(s.b_labels[0].np == "man");
        CHECK(s.c_labels[0][0].np == "sunday");
        CHECK(s.c_labels[1][0].np == "apartment");
        CHECK(s.score == 15.0);
    }
    SECTION("every output schema is a set of graph triangles") {
        std::mt19937_64 rng(1515);
        auto inst = oracle::random_instance(6, 6, 6, 4, 4, 4, 5, 0.5, rng);
        const auto schemas = induce_schemata(inst.factors, inst.tensors.vocab, {3, 2, 50});
        for (const auto& s : schemas) {
            const TripartiteGraph g = build_graph(inst.factors, s.relation, 3);
            const auto tris = mine_triangles(g);
            for (std::size_t c : s.c_cols) {
                const Triangle t{s.a_col, s.b_col, c};
                CHECK(std::find(tris.begin(), tris.end(), t) != tris.end());
            }
        }
    }
    SECTION("non-finite factors are rejected") {
        FactorSet f = designed_factors(2);
        f.subjects(0, 0) = std::numeric_limits<double>::quiet_NaN();
        REQUIRE_THROWS_AS(induce_schemata(f, oracle::stub_vocab(4, 4, 6, 2)), numeric_error);
    }
}
