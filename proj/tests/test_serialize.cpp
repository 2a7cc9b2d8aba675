#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "nrsi/report.hpp"
#include "nrsi/run_config.hpp"
#include "nrsi/serialize.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace nrsi;

TEST_CASE("vocabulary round trip") {
    support::TmpDir dir("vocab");
    Vocabulary vocab;
    vocab.intern(Vocabulary::Table::subject, "Federer");
    vocab.intern(Vocabulary::Table::subject, "Nadal");
    vocab.intern(Vocabulary::Table::object, "Nadal");
    vocab.intern(Vocabulary::Table::other, "Wimbledon");
    vocab.intern(Vocabulary::Table::relation, "win");
    const auto path = dir / "vocab.jsonl";
    save_vocab_jsonl(path, vocab);
    const Vocabulary loaded = load_vocab_jsonl(path);
    REQUIRE(loaded == vocab);
    CHECK(loaded.surface(Vocabulary::Table::subject, 1) == "Nadal");
    // identical bytes on re-save
    const std::string first = support::read_file(path);
    save_vocab_jsonl(path, loaded);
    CHECK(support::read_file(path) == first);
}

TEST_CASE("tensor round trip preserves every value bitwise") {
    support::TmpDir dir("tensors");
    std::mt19937_64 rng(21);
    auto inst = oracle::random_instance(5, 4, 3, 2, 2, 2, 2, 0.5, rng);
    inst.tensors.total_mass = 77;
    const auto vocab_path = dir / "vocab.jsonl";
    const auto tensor_path = dir / "tensors.jsonl";
    save_vocab_jsonl(vocab_path, inst.tensors.vocab);
    save_tensors_jsonl(tensor_path, inst.tensors);
    const Vocabulary vocab = load_vocab_jsonl(vocab_path);
    const BackoffTensors loaded = load_tensors_jsonl(tensor_path, vocab);
    REQUIRE(loaded.obj_oth.nnz() == inst.tensors.obj_oth.nnz());
    REQUIRE(loaded.subj_obj.nnz() == inst.tensors.subj_obj.nnz());
    CHECK(loaded.total_mass == 77);
    for (std::size_t i = 0; i < loaded.obj_oth.nnz(); ++i) {
        CHECK(loaded.obj_oth.entries()[i].i == inst.tensors.obj_oth.entries()[i].i);
        CHECK(loaded.obj_oth.entries()[i].value == inst.tensors.obj_oth.entries()[i].value);
    }
    SECTION("shape mismatch against the vocabulary is rejected") {
        Vocabulary other = vocab;
        other.intern(Vocabulary::Table::subject, "extra");
        REQUIRE_THROWS_AS(load_tensors_jsonl(tensor_path, other), shape_error);
    }
}

TEST_CASE("factor set round trips") {
    support::TmpDir dir("factors");
    std::mt19937_64 rng(23);
    const auto inst = oracle::random_instance(5, 4, 3, 2, 3, 2, 2, 0.5, rng);
    SECTION("inline JSON values") {
        const auto path = dir / "factors.json";
        save_factors(path, inst.factors, false);
        const FactorSet loaded = load_factors(path);
        CHECK(loaded.subjects.values() == inst.factors.subjects.values());
        CHECK(loaded.objects.values() == inst.factors.objects.values());
        CHECK(loaded.others.values() == inst.factors.others.values());
        CHECK(loaded.core_obj_oth.values() == inst.factors.core_obj_oth.values());
        CHECK(loaded.core_subj_oth.values() == inst.factors.core_subj_oth.values());
        CHECK(loaded.core_subj_obj.values() == inst.factors.core_subj_obj.values());
    }
    SECTION("binary sidecar") {
        const auto path = dir / "factors.json";
        save_factors(path, inst.factors, true);
        REQUIRE(std::filesystem::exists(dir / "factors.bin"));
        const FactorSet loaded = load_factors(path);
        CHECK(loaded.subjects.values() == inst.factors.subjects.values());
        CHECK(loaded.core_subj_obj.values() == inst.factors.core_subj_obj.values());
        CHECK(loaded.core_subj_obj.shape() == inst.factors.core_subj_obj.shape());
    }
    SECTION("corrupt sidecar magic is rejected") {
        const auto path = dir / "factors.json";
        save_factors(path, inst.factors, true);
        support::write_file(dir / "factors.bin", "XXXXXXXXgarbage");
        REQUIRE_THROWS_AS(load_factors(path), data_error);
    }
}

TEST_CASE("schema JSONL") {
    support::TmpDir dir("schemas");
    InducedSchema s;
    s.relation = 2;
    s.relation_surface = "identify";
    s.a_col = 1;
    s.b_col = 1;
    s.c_cols = {5, 6};
    s.score = 12.5;
    s.a_labels = {{"police", 0.9}, {"officers", 0.5}};
    s.b_labels = {{"man", 0.8}};
    s.c_labels = {{{"sunday", 0.7}}, {{"apartment", 0.6}}};
    const auto path = dir / "schemas.jsonl";
    save_schemas_jsonl(path, {s});
    const auto lines = load_schemas_jsonl(path);
    REQUIRE(lines.size() == 1);
    CHECK(lines[0].at("method") == "factorization");
    CHECK(lines[0].at("relation") == "identify");
    CHECK(lines[0].at("a_col") == 1);
    CHECK(lines[0].at("c_cols").get<std::vector<std::size_t>>() == std::vector<std::size_t>{5, 6});
    CHECK(lines[0].at("score") == 12.5);
    CHECK(lines[0].at("labels").at("a")[0][0] == "police");

    SECTION("the table renderer prints the signature in presentation form") {
        const std::string table = render_schema_table(lines);
        CHECK(table.find("identify<A1,B1,C5,C6>") != std::string::npos);
        CHECK(table.find("A1: police, officers") != std::string::npos);
        CHECK(table.find("C6: apartment") != std::string::npos);
    }
    SECTION("hardclust lines share the format with a method tag") {
        HardClustSchema h;
        h.relation = 0;
        h.relation_surface = "win";
        h.subject_reps = {{"s1", 3.0}};
        h.object_reps = {{"o1", 4.0}};
        h.other_reps = {{"c1", 3.0}, {"c2", 1.0}};
        h.total_mass = 4;
        const auto hpath = dir / "hardclust.jsonl";
        save_hardclust_jsonl(hpath, {h});
        const auto hlines = load_schemas_jsonl(hpath);
        REQUIRE(hlines.size() == 1);
        CHECK(hlines[0].at("method") == "hardclust");
        CHECK(hlines[0].at("labels").at("c")[0][1][0] == "c2");
        CHECK(hlines[0].at("score") == 4.0);
    }
}

TEST_CASE("grid CSV dump") {
    support::TmpDir dir("grid");
    GridResult grid;
    GridCell ok;
    ok.ranks = {3, 4, 5};
    ok.reg = {0.1, 0.2, 0.3};
    ok.fit.fit_obj_oth = 0.5;
    ok.fit.fit_subj_oth = 0.25;
    ok.fit.fit_subj_obj = 0.75;
    ok.fit.avg_fit = 0.5;
    ok.fit.iterations_run = 17;
    ok.seed = 99;
    ok.wall_seconds = 0.25;
    GridCell skipped;
    skipped.ranks = {50, 4, 5};
    skipped.skipped = true;
    skipped.note = "rank exceeds vocabulary size";
    grid.cells = {ok, skipped};
    grid.winner = 0;
    const auto path = dir / "grid_results.csv";
    save_grid_csv(path, grid);
    const std::string text = support::read_file(path);
    const auto lines = [&] {
        std::vector<std::string> out;
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) out.push_back(line);
        return out;
    }();
    REQUIRE(lines.size() == 3);
    CHECK(lines[0].rfind("r_subjects,r_objects,r_others", 0) == 0);
    CHECK(lines[1].find("3,4,5,0.1,0.2,0.3,0.5,0.25,0.75,0.5,17,99,ok,") != std::string::npos);
    CHECK(lines[2].find("skipped:rank exceeds vocabulary size") != std::string::npos);
}

TEST_CASE("synthetic spec JSON round trip") {
    support::TmpDir dir("synth");
    SyntheticSpec spec;
    spec.vocab_sizes = {12, 12, 10};
    spec.relations = 3;
    spec.blocks = {3, 3, 5};
    spec.noise_rate = 0.25;
    spec.seed = 42;
    spec.schemata = {{0, 0, 0, {0, 2}, 40}, {2, 1, 2, {3}, 10}};
    const auto path = dir / "spec.json";
    write_file_atomic(path, synthetic_spec_to_json(spec).dump(2));
    const SyntheticSpec loaded = load_synthetic_spec(path);
    CHECK(loaded.vocab_sizes == spec.vocab_sizes);
    CHECK(loaded.relations == spec.relations);
    CHECK(loaded.blocks == spec.blocks);
    CHECK(loaded.noise_rate == spec.noise_rate);
    CHECK(loaded.seed == spec.seed);
    REQUIRE(loaded.schemata.size() == 2);
    CHECK(loaded.schemata[0].c_blocks == std::vector<std::size_t>{0, 2});
    SECTION("truth sidecar lists block members") {
        const auto tpath = dir / "truth.json";
        save_truth_json(tpath, spec);
        const auto j = detail::parse_json(support::read_file(tpath), "truth");
        CHECK(j.at("block_members").at("subjects").size() == 3);
        CHECK(j.at("block_members").at("subjects")[0][0] == "s0");
        CHECK(j.at("relations").size() == 3);
    }
}

TEST_CASE("run config") {
    support::TmpDir dir("config");
    SECTION("JSON fields load and unknown keys fail") {
        const std::string good = R"({
            "input": "tuples.tsv", "top_relations": 10,
            "ranks": [3, 4, 5], "lambdas": [0.1, 0.2, 0.3],
            "solver": {"max_iters": 25, "seed": 7},
            "miner": {"top_cells": 4}
        })";
        support::write_file(dir / "good.json", good);
        const RunConfig cfg = load_run_config(dir / "good.json");
        CHECK(cfg.input == "tuples.tsv");
        CHECK(cfg.top_relations == 10);
        REQUIRE(cfg.ranks.has_value());
        CHECK(cfg.ranks->objects == 4);
        CHECK(cfg.lambdas.lambda_others == 0.3);
        CHECK(cfg.solver.max_iters == 25);
        CHECK(cfg.solver.seed == 7);
        CHECK(cfg.miner.top_cells == 4);
        CHECK(cfg.miner.label_k == 3);  // untouched default

        support::write_file(dir / "bad.json", R"({"rnaks": [1,2,3]})");
        REQUIRE_THROWS_AS(load_run_config(dir / "bad.json"), config_error);
    }
    SECTION("grid and fixed ranks are mutually exclusive") {
        support::write_file(dir / "conflict.json",
                            R"({"ranks": [3,4,5], "grid": {"ranks": [3,4]}})");
        const RunConfig cfg = load_run_config(dir / "conflict.json");
        REQUIRE_THROWS_AS(validate_mode_exclusivity(cfg), config_error);
    }
    SECTION("config hash is stable and sensitive") {
        RunConfig a;
        a.solver.seed = 1;
        RunConfig b = a;
        CHECK(config_hash(a) == config_hash(b));
        b.solver.seed = 2;
        CHECK(config_hash(a) != config_hash(b));
    }
}

TEST_CASE("atomic write leaves no temp file") {
    support::TmpDir dir("atomic");
    const auto path = dir / "artifact.json";
    write_file_atomic(path, "{}\n");
    CHECK(support::read_file(path) == "{}\n");
    CHECK_FALSE(std::filesystem::exists(dir / "artifact.json.tmp"));
}
