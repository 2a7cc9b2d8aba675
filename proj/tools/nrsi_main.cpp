// Command-line driver: ingest -> factorize/gridsearch -> mine -> report,
// plus the hardclust baseline and the synthetic corpus generator.
//
// Exit codes: 0 success, 2 configuration error, 3 data/IO error,
// 4 numeric failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nrsi/corpus.hpp"
#include "nrsi/errors.hpp"
#include "nrsi/factorization.hpp"
#include "nrsi/hardclust.hpp"
#include "nrsi/model_selection.hpp"
#include "nrsi/report.hpp"
#include "nrsi/run_config.hpp"
#include "nrsi/schema_miner.hpp"
#include "nrsi/serialize.hpp"
#include "nrsi/synthetic.hpp"

namespace fs = std::filesystem;
using nrsi::ordered_json;

namespace {

struct ParsedCorpus {
    std::vector<nrsi::TupleRecord> records;
    std::size_t lines_read = 0;
    std::size_t malformed = 0;
    std::size_t dropped_no_other = 0;
};

ParsedCorpus read_corpus(const nrsi::RunConfig& cfg) {
    if (cfg.input.empty()) throw nrsi::config_error("--input is required");
    std::ifstream in(cfg.input, std::ios::binary);
    if (!in) throw nrsi::io_error("cannot open " + cfg.input);
    nrsi::ParseOptions opt;
    opt.case_fold = cfg.case_fold;
    opt.strict = cfg.strict;
    opt.count_heuristic = cfg.count_heuristic;
    const nrsi::ParseResult parsed = nrsi::parse_tuples(in, opt);
    for (const nrsi::ParseIssue& issue : parsed.issues)
        std::cerr << "warning: " << cfg.input << ":" << issue.line_no << ": " << issue.reason
                  << " (line skipped)\n";
    nrsi::SplitResult split = nrsi::split_five_tuples(parsed.records);
    if (split.dropped_no_other > 0)
        std::cerr << "warning: dropped " << split.dropped_no_other
                  << " tuple(s) without an `other` argument\n";
    ParsedCorpus out;
    out.lines_read = parsed.lines_read;
    out.malformed = parsed.issues.size();
    out.dropped_no_other = split.dropped_no_other;
    if (split.records.empty()) throw nrsi::data_error("empty corpus: no usable tuples in " + cfg.input);
    out.records = nrsi::filter_top_relations(split.records, cfg.top_relations);
    if (out.records.empty()) throw nrsi::data_error("empty corpus after relation filtering");
    return out;
}

fs::path ensure_out_dir(const nrsi::RunConfig& cfg) {
    if (cfg.out.empty()) throw nrsi::config_error("--out is required");
    fs::path dir(cfg.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw nrsi::io_error("cannot create output directory " + dir.string());
    return dir;
}

nrsi::BackoffTensors load_tensor_dir(const nrsi::RunConfig& cfg) {
    if (cfg.tensors.empty()) throw nrsi::config_error("--tensors is required");
    const fs::path dir(cfg.tensors);
    const nrsi::Vocabulary vocab = nrsi::load_vocab_jsonl(dir / "vocab.jsonl");
    return nrsi::load_tensors_jsonl(dir / "tensors.jsonl", vocab);
}

int run_ingest(const nrsi::RunConfig& cfg) {
    const ParsedCorpus corpus = read_corpus(cfg);
    const nrsi::BackoffTensors tensors = nrsi::build_backoff_tensors(corpus.records);
    const nrsi::Mode4Tensor four_mode = nrsi::build_4mode_tensor(corpus.records);
    const fs::path dir = ensure_out_dir(cfg);

    nrsi::save_vocab_jsonl(dir / "vocab.jsonl", tensors.vocab);
    nrsi::save_tensors_jsonl(dir / "tensors.jsonl", tensors);

    ordered_json report;
    report["shapes"]["obj_oth"] = tensors.obj_oth.shape();
    report["shapes"]["subj_oth"] = tensors.subj_oth.shape();
    report["shapes"]["subj_obj"] = tensors.subj_obj.shape();
    report["nnz"]["obj_oth"] = tensors.obj_oth.nnz();
    report["nnz"]["subj_oth"] = tensors.subj_oth.nnz();
    report["nnz"]["subj_obj"] = tensors.subj_obj.nnz();
    report["total_mass"] = tensors.total_mass;
    report["four_mode"]["shape"] = four_mode.shape;
    report["four_mode"]["nnz"] = four_mode.entries.size();
    report["four_mode"]["sparsity_ratio"] = four_mode.sparsity_ratio();
    report["parse"]["lines_read"] = corpus.lines_read;
    report["parse"]["malformed"] = corpus.malformed;
    report["parse"]["dropped_no_other"] = corpus.dropped_no_other;
    report["parse"]["records"] = corpus.records.size();
    report["top_relations"] = cfg.top_relations;
    nrsi::write_file_atomic(dir / "ingest_report.json", report.dump(2) + "\n");
    nrsi::save_manifest(dir / "run_manifest.json", "ingest", cfg,
                        {"vocab.jsonl", "tensors.jsonl", "ingest_report.json"});

    std::cout << "tensors: obj_oth " << nrsi::shape_string(tensors.obj_oth.shape())
              << ", subj_oth " << nrsi::shape_string(tensors.subj_oth.shape())
              << ", subj_obj " << nrsi::shape_string(tensors.subj_obj.shape())
              << "; total mass " << tensors.total_mass << "\n";
    std::cout << "4-mode diagnostic: " << four_mode.entries.size() << " stored entries, sparsity ratio "
              << nrsi::to_roundtrip_string(four_mode.sparsity_ratio()) << "\n";
    return 0;
}

int run_factorize(const nrsi::RunConfig& cfg) {
    if (!cfg.ranks) throw nrsi::config_error("factorize requires --ranks (or 'ranks' in the config)");
    const nrsi::BackoffTensors tensors = load_tensor_dir(cfg);
    nrsi::validate_ranks(tensors, *cfg.ranks);
    auto [factors, fit] = nrsi::factorize(tensors, *cfg.ranks, cfg.lambdas, cfg.solver);
    const fs::path dir = ensure_out_dir(cfg);
    nrsi::save_factors(dir / "factors.json", factors, cfg.binary_factors);
    nrsi::write_file_atomic(dir / "fit_report.json", nrsi::fit_report_json(fit).dump(2) + "\n");
    std::vector<std::string> outputs = {"factors.json", "fit_report.json"};
    if (cfg.binary_factors) outputs.push_back("factors.bin");
    nrsi::save_manifest(dir / "run_manifest.json", "factorize", cfg, outputs);
    std::cout << "avg_fit " << nrsi::to_roundtrip_string(fit.avg_fit) << " after "
              << fit.iterations_run << " sweep(s); objective "
              << nrsi::to_roundtrip_string(fit.objective) << "\n";
    return 0;
}

int run_gridsearch(const nrsi::RunConfig& cfg) {
    if (cfg.ranks)
        throw nrsi::config_error("gridsearch runs in grid mode; fixed 'ranks' are not allowed");
    const nrsi::BackoffTensors tensors = load_tensor_dir(cfg);
    const nrsi::GridSpec spec = cfg.grid ? *cfg.grid : nrsi::GridSpec{};
    const nrsi::GridResult grid = nrsi::grid_search(tensors, spec, cfg.solver, cfg.threads);
    const fs::path dir = ensure_out_dir(cfg);
    nrsi::save_grid_csv(dir / "grid_results.csv", grid);
    const nrsi::GridCell& best = grid.cells[grid.winner];
    ordered_json winner;
    winner["cell_index"] = grid.winner;
    winner["ranks"] = {best.ranks.subjects, best.ranks.objects, best.ranks.others};
    winner["lambdas"] = {best.reg.lambda_subjects, best.reg.lambda_objects,
                         best.reg.lambda_others};
    winner["seed"] = best.seed;
    winner["fit"] = nrsi::fit_report_json(best.fit);
    nrsi::write_file_atomic(dir / "winner.json", winner.dump(2) + "\n");
    nrsi::save_manifest(dir / "run_manifest.json", "gridsearch", cfg,
                        {"grid_results.csv", "winner.json"});
    std::cout << "winner: ranks (" << best.ranks.subjects << "," << best.ranks.objects << ","
              << best.ranks.others << ") lambdas ("
              << nrsi::to_roundtrip_string(best.reg.lambda_subjects) << ","
              << nrsi::to_roundtrip_string(best.reg.lambda_objects) << ","
              << nrsi::to_roundtrip_string(best.reg.lambda_others) << ") avg_fit "
              << nrsi::to_roundtrip_string(best.fit.avg_fit) << "\n";
    return 0;
}

int run_mine(const nrsi::RunConfig& cfg) {
    if (cfg.factors.empty()) throw nrsi::config_error("--factors is required");
    if (cfg.vocab.empty()) throw nrsi::config_error("--vocab is required");
    const nrsi::Vocabulary vocab = nrsi::load_vocab_jsonl(cfg.vocab);
    const nrsi::FactorSet factors = nrsi::load_factors(cfg.factors);
    const std::vector<nrsi::InducedSchema> schemas =
        nrsi::induce_schemata(factors, vocab, cfg.miner);
    const fs::path dir = ensure_out_dir(cfg);
    nrsi::save_schemas_jsonl(dir / "schemas.jsonl", schemas);
    nrsi::save_manifest(dir / "run_manifest.json", "mine", cfg, {"schemas.jsonl"});
    std::cout << "induced " << schemas.size() << " schema(ta)\n";
    return 0;
}

int run_hardclust(const nrsi::RunConfig& cfg) {
    const ParsedCorpus corpus = read_corpus(cfg);
    const std::vector<nrsi::HardClustSchema> schemas =
        nrsi::hardclust(corpus.records, cfg.miner.label_k);
    const fs::path dir = ensure_out_dir(cfg);
    nrsi::save_hardclust_jsonl(dir / "schemas.jsonl", schemas);
    nrsi::save_manifest(dir / "run_manifest.json", "hardclust", cfg, {"schemas.jsonl"});
    std::cout << "hardclust produced " << schemas.size() << " schema(ta)\n";
    return 0;
}

int run_synth(nrsi::RunConfig cfg) {
    if (cfg.synth_spec.empty()) throw nrsi::config_error("--spec is required");
    const nrsi::SyntheticSpec spec = nrsi::load_synthetic_spec(cfg.synth_spec);
    const nrsi::SyntheticCorpus corpus = nrsi::generate_corpus(spec);
    const fs::path dir = ensure_out_dir(cfg);
    cfg.solver.seed = spec.seed;  // manifest reflects the generator seed
    nrsi::save_tuples_tsv(dir / "tuples.tsv", corpus.records);
    nrsi::save_truth_json(dir / "truth.json", spec);
    nrsi::save_manifest(dir / "run_manifest.json", "synth", cfg, {"tuples.tsv", "truth.json"});
    std::cout << "generated " << corpus.planted_tuples << " planted + " << corpus.noise_tuples
              << " noise tuples\n";
    return 0;
}

int run_report(const nrsi::RunConfig& cfg) {
    if (cfg.schemas.empty()) throw nrsi::config_error("--schemas is required");
    const std::string table = nrsi::render_schema_table(nrsi::load_schemas_jsonl(cfg.schemas));
    if (cfg.out.empty()) {
        std::cout << table;
    } else {
        nrsi::write_file_atomic(cfg.out, table);
    }
    return 0;
}

// Per-subcommand flag set; values only override the config file when the
// flag was actually given.
struct CommandFlags {
    CLI::App* app = nullptr;
    std::string config_path;
    std::string input, out, tensors, factors, vocab, schemas, synth_spec;
    std::size_t top_relations = 0;
    bool case_fold = false, strict = false, no_count_heuristic = false, binary_factors = false;
    std::vector<std::size_t> ranks;
    std::vector<double> lambdas;
    std::vector<std::size_t> rank_grid, subject_rank_grid, object_rank_grid, other_rank_grid;
    std::vector<double> lambda_grid, lambda_subject_grid, lambda_object_grid, lambda_other_grid;
    std::size_t max_iters = 0, init_iters = 0, init_restarts = 0, threads = 0;
    double tol = 0.0;
    std::uint64_t seed = 0;
    std::size_t top_cells = 0, label_k = 0, top_schemata = 0;

    bool given(const std::string& name) const {
        const CLI::Option* opt = app->get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
    }

    nrsi::RunConfig resolve() const {
        nrsi::RunConfig cfg;
        if (!config_path.empty()) cfg = nrsi::load_run_config(config_path);
        if (given("--input")) cfg.input = input;
        if (given("--out")) cfg.out = out;
        if (given("--tensors")) cfg.tensors = tensors;
        if (given("--factors")) cfg.factors = factors;
        if (given("--vocab")) cfg.vocab = vocab;
        if (given("--schemas")) cfg.schemas = schemas;
        if (given("--spec")) cfg.synth_spec = synth_spec;
        if (given("--top-relations")) cfg.top_relations = top_relations;
        if (given("--case-fold")) cfg.case_fold = true;
        if (given("--strict")) cfg.strict = true;
        if (given("--no-count-heuristic")) cfg.count_heuristic = false;
        if (given("--binary-factors")) cfg.binary_factors = true;
        if (given("--ranks")) {
            if (ranks.size() != 3) throw nrsi::config_error("--ranks needs three values");
            cfg.ranks = nrsi::Ranks{ranks[0], ranks[1], ranks[2]};
        }
        if (given("--lambdas")) {
            if (lambdas.size() != 3) throw nrsi::config_error("--lambdas needs three values");
            cfg.lambdas = nrsi::Regularizers{lambdas[0], lambdas[1], lambdas[2]};
        }
        const bool any_grid_flag = given("--rank-grid") || given("--lambda-grid") ||
                                   given("--subject-rank-grid") || given("--object-rank-grid") ||
                                   given("--other-rank-grid") || given("--lambda-subject-grid") ||
                                   given("--lambda-object-grid") || given("--lambda-other-grid");
        if (any_grid_flag) {
            nrsi::GridSpec g = cfg.grid ? *cfg.grid : nrsi::GridSpec{};
            if (given("--rank-grid")) g.rank_values = rank_grid;
            if (given("--lambda-grid")) g.lambda_values = lambda_grid;
            if (given("--subject-rank-grid")) g.subject_rank_values = subject_rank_grid;
            if (given("--object-rank-grid")) g.object_rank_values = object_rank_grid;
            if (given("--other-rank-grid")) g.other_rank_values = other_rank_grid;
            if (given("--lambda-subject-grid")) g.lambda_subject_values = lambda_subject_grid;
            if (given("--lambda-object-grid")) g.lambda_object_values = lambda_object_grid;
            if (given("--lambda-other-grid")) g.lambda_other_values = lambda_other_grid;
            cfg.grid = g;
        }
        if (given("--max-iters")) cfg.solver.max_iters = max_iters;
        if (given("--tol")) cfg.solver.tol = tol;
        if (given("--seed")) cfg.solver.seed = seed;
        if (given("--init-iters")) cfg.solver.init_iters = init_iters;
        if (given("--init-restarts")) cfg.solver.init_restarts = init_restarts;
        if (given("--threads")) cfg.threads = threads;
        if (given("--top-cells")) cfg.miner.top_cells = top_cells;
        if (given("--label-k")) cfg.miner.label_k = label_k;
        if (given("--top-schemata")) cfg.miner.top_schemata = top_schemata;
        nrsi::validate_mode_exclusivity(cfg);
        return cfg;
    }
};

void add_common(CommandFlags& f, CLI::App* sub) {
    f.app = sub;
    sub->add_option("--config", f.config_path, "JSON config file; flags override its fields");
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--threads", f.threads, "parallelism cap for grid cells");
}

void add_corpus_flags(CommandFlags& f) {
    f.app->add_option("--input", f.input, "tuple TSV file");
    f.app->add_option("--top-relations", f.top_relations, "keep the k most frequent relations");
    f.app->add_flag("--case-fold", f.case_fold, "lowercase all text fields");
    f.app->add_flag("--strict", f.strict, "abort on the first malformed line");
    f.app->add_flag("--no-count-heuristic", f.no_count_heuristic,
                    "never treat a trailing integer on 5-field lines as a count");
}

void add_solver_flags(CommandFlags& f) {
    f.app->add_option("--max-iters", f.max_iters, "maximum full sweeps");
    f.app->add_option("--tol", f.tol, "relative objective-decrease stopping tolerance");
    f.app->add_option("--seed", f.seed, "random seed");
    f.app->add_option("--init-iters", f.init_iters, "multiplicative iterations per warm-start run");
    f.app->add_option("--init-restarts", f.init_restarts, "independent warm-start runs per tensor");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"n-ary relation schema induction from OpenIE-style tuples"};
    app.require_subcommand(1);

    CommandFlags ingest_flags, factorize_flags, grid_flags, mine_flags, hard_flags, synth_flags,
        report_flags;

    CLI::App* c_ingest = app.add_subcommand("ingest", "build back-off tensors from a tuple file");
    add_common(ingest_flags, c_ingest);
    add_corpus_flags(ingest_flags);

    CLI::App* c_fact = app.add_subcommand("factorize", "coupled factorization at fixed ranks");
    add_common(factorize_flags, c_fact);
    c_fact->add_option("--tensors", factorize_flags.tensors, "directory produced by ingest");
    c_fact->add_option("--ranks", factorize_flags.ranks, "latent ranks r_subjects,r_objects,r_others")
        ->delimiter(',');
    c_fact->add_option("--lambdas", factorize_flags.lambdas, "regularizers for the three factors")
        ->delimiter(',');
    c_fact->add_flag("--binary-factors", factorize_flags.binary_factors,
                     "write factor values to a binary sidecar");
    add_solver_flags(factorize_flags);

    CLI::App* c_grid = app.add_subcommand("gridsearch", "grid search over ranks and lambdas");
    add_common(grid_flags, c_grid);
    c_grid->add_option("--tensors", grid_flags.tensors, "directory produced by ingest");
    c_grid->add_option("--rank-grid", grid_flags.rank_grid, "rank values for all three axes")
        ->delimiter(',');
    c_grid->add_option("--lambda-grid", grid_flags.lambda_grid, "lambda values for all three axes")
        ->delimiter(',');
    c_grid->add_option("--subject-rank-grid", grid_flags.subject_rank_grid, "subject-axis ranks")
        ->delimiter(',');
    c_grid->add_option("--object-rank-grid", grid_flags.object_rank_grid, "object-axis ranks")
        ->delimiter(',');
    c_grid->add_option("--other-rank-grid", grid_flags.other_rank_grid, "other-axis ranks")
        ->delimiter(',');
    c_grid->add_option("--lambda-subject-grid", grid_flags.lambda_subject_grid, "subject lambdas")
        ->delimiter(',');
    c_grid->add_option("--lambda-object-grid", grid_flags.lambda_object_grid, "object lambdas")
        ->delimiter(',');
    c_grid->add_option("--lambda-other-grid", grid_flags.lambda_other_grid, "other lambdas")
        ->delimiter(',');
    add_solver_flags(grid_flags);

    CLI::App* c_mine = app.add_subcommand("mine", "mine n-ary schemata from a factor set");
    add_common(mine_flags, c_mine);
    c_mine->add_option("--factors", mine_flags.factors, "factors.json from factorize");
    c_mine->add_option("--vocab", mine_flags.vocab, "vocab.jsonl from ingest");
    c_mine->add_option("--top-cells", mine_flags.top_cells, "edges kept per core slice");
    c_mine->add_option("--label-k", mine_flags.label_k, "representative NPs per column");
    c_mine->add_option("--top-schemata", mine_flags.top_schemata, "global ranking cutoff");

    CLI::App* c_hard = app.add_subcommand("hardclust", "frequency baseline, one schema per relation");
    add_common(hard_flags, c_hard);
    add_corpus_flags(hard_flags);
    c_hard->add_option("--label-k", hard_flags.label_k, "representative NPs per cluster");

    CLI::App* c_synth = app.add_subcommand("synth", "generate a synthetic planted corpus");
    add_common(synth_flags, c_synth);
    c_synth->add_option("--spec", synth_flags.synth_spec, "synthetic spec JSON");

    CLI::App* c_report = app.add_subcommand("report", "render schemas.jsonl as a text table");
    add_common(report_flags, c_report);
    c_report->add_option("--schemas", report_flags.schemas, "schemas.jsonl to render");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (c_ingest->parsed()) return run_ingest(ingest_flags.resolve());
        if (c_fact->parsed()) return run_factorize(factorize_flags.resolve());
        if (c_grid->parsed()) return run_gridsearch(grid_flags.resolve());
        if (c_mine->parsed()) return run_mine(mine_flags.resolve());
        if (c_hard->parsed()) return run_hardclust(hard_flags.resolve());
        if (c_synth->parsed()) return run_synth(synth_flags.resolve());
        if (c_report->parsed()) return run_report(report_flags.resolve());
    } catch (const nrsi::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const nrsi::shape_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const nrsi::numeric_error& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 4;
    } catch (const nrsi::data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const nrsi::io_error& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
