#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nrsi/corpus.hpp"
#include "nrsi/errors.hpp"
#include "nrsi/factorization.hpp"
#include "nrsi/model_selection.hpp"
#include "nrsi/schema_miner.hpp"
#include "nrsi/serialize.hpp"

namespace nrsi {

inline constexpr const char* kVersion = "0.1.0";

// Everything a pipeline command can be configured with.  A JSON config file
// supplies defaults; command-line flags override individual fields.
struct RunConfig {
    std::string input;        // tuple TSV (ingest, hardclust)
    std::string out;          // output directory
    std::string tensors;      // directory with vocab.jsonl + tensors.jsonl
    std::string factors;      // factors.json (mine)
    std::string vocab;        // vocab.jsonl (mine)
    std::string synth_spec;   // synthetic spec JSON (synth)
    std::string schemas;      // schemas.jsonl (report)

    std::size_t top_relations = 50;
    bool case_fold = false;
    bool strict = false;
    bool count_heuristic = true;

    std::optional<Ranks> ranks;
    Regularizers lambdas;
    std::optional<GridSpec> grid;
    SolveOptions solver;
    MinerOptions miner;

    std::size_t threads = 1;
    bool binary_factors = false;
};

namespace detail {

template <typename T>
inline void maybe_get(const ordered_json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

inline void ranks_from_json(const ordered_json& arr, Ranks& r) {
    if (!arr.is_array() || arr.size() != 3)
        throw config_error("config: 'ranks' must be a 3-element array");
    r.subjects = arr[0].get<std::size_t>();
    r.objects = arr[1].get<std::size_t>();
    r.others = arr[2].get<std::size_t>();
}

inline void lambdas_from_json(const ordered_json& arr, Regularizers& reg) {
    if (!arr.is_array() || arr.size() != 3)
        throw config_error("config: 'lambdas' must be a 3-element array");
    reg.lambda_subjects = arr[0].get<double>();
    reg.lambda_objects = arr[1].get<double>();
    reg.lambda_others = arr[2].get<double>();
}

inline GridSpec grid_from_json(const ordered_json& j) {
    GridSpec g;
    maybe_get(j, "ranks", g.rank_values);
    maybe_get(j, "lambdas", g.lambda_values);
    maybe_get(j, "subject_ranks", g.subject_rank_values);
    maybe_get(j, "object_ranks", g.object_rank_values);
    maybe_get(j, "other_ranks", g.other_rank_values);
    maybe_get(j, "lambda_subjects", g.lambda_subject_values);
    maybe_get(j, "lambda_objects", g.lambda_object_values);
    maybe_get(j, "lambda_others", g.lambda_other_values);
    return g;
}

}  // namespace detail

// Applies a JSON config file on top of the defaults.  Unknown keys are
// rejected so typos fail loudly instead of being ignored.
inline void apply_config_json(RunConfig& cfg, const ordered_json& j,
                              const std::string& where) {
    static const std::vector<std::string> known = {
        "input",  "out",           "tensors",  "factors",        "vocab",
        "schemas", "synth_spec",   "top_relations", "case_fold", "strict",
        "count_heuristic", "ranks", "lambdas",  "grid",           "solver",
        "miner",  "threads",       "binary_factors"};
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw config_error(where + ": unknown config key '" + key + "'");
    }
    try {
        detail::maybe_get(j, "input", cfg.input);
        detail::maybe_get(j, "out", cfg.out);
        detail::maybe_get(j, "tensors", cfg.tensors);
        detail::maybe_get(j, "factors", cfg.factors);
        detail::maybe_get(j, "vocab", cfg.vocab);
        detail::maybe_get(j, "schemas", cfg.schemas);
        detail::maybe_get(j, "synth_spec", cfg.synth_spec);
        detail::maybe_get(j, "top_relations", cfg.top_relations);
        detail::maybe_get(j, "case_fold", cfg.case_fold);
        detail::maybe_get(j, "strict", cfg.strict);
        detail::maybe_get(j, "count_heuristic", cfg.count_heuristic);
        if (j.contains("ranks")) {
            Ranks r;
            detail::ranks_from_json(j.at("ranks"), r);
            cfg.ranks = r;
        }
        if (j.contains("lambdas")) detail::lambdas_from_json(j.at("lambdas"), cfg.lambdas);
        if (j.contains("grid")) cfg.grid = detail::grid_from_json(j.at("grid"));
        if (j.contains("solver")) {
            const auto& s = j.at("solver");
            detail::maybe_get(s, "max_iters", cfg.solver.max_iters);
            detail::maybe_get(s, "tol", cfg.solver.tol);
            detail::maybe_get(s, "seed", cfg.solver.seed);
            detail::maybe_get(s, "init_iters", cfg.solver.init_iters);
            detail::maybe_get(s, "init_restarts", cfg.solver.init_restarts);
        }
        if (j.contains("miner")) {
            const auto& m = j.at("miner");
            detail::maybe_get(m, "top_cells", cfg.miner.top_cells);
            detail::maybe_get(m, "label_k", cfg.miner.label_k);
            detail::maybe_get(m, "top_schemata", cfg.miner.top_schemata);
        }
        detail::maybe_get(j, "threads", cfg.threads);
        detail::maybe_get(j, "binary_factors", cfg.binary_factors);
    } catch (const nlohmann::json::exception& e) {
        throw config_error(where + ": " + e.what());
    }
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    RunConfig cfg;
    apply_config_json(cfg, detail::parse_json(read_file(path), path.string()), path.string());
    return cfg;
}

// Grid mode and fixed-rank mode cannot be combined in one config.
inline void validate_mode_exclusivity(const RunConfig& cfg) {
    if (cfg.ranks && cfg.grid)
        throw config_error("config: 'ranks' and 'grid' are mutually exclusive");
}

// Canonical serialization of the semantic configuration: everything that
// shapes the computation, deliberately excluding filesystem locations, so an
// identical run relocated to another directory hashes identically.
inline ordered_json run_config_to_json(const RunConfig& cfg) {
    ordered_json j;
    j["top_relations"] = cfg.top_relations;
    j["case_fold"] = cfg.case_fold;
    j["strict"] = cfg.strict;
    j["count_heuristic"] = cfg.count_heuristic;
    if (cfg.ranks)
        j["ranks"] = {cfg.ranks->subjects, cfg.ranks->objects, cfg.ranks->others};
    j["lambdas"] = {cfg.lambdas.lambda_subjects, cfg.lambdas.lambda_objects,
                    cfg.lambdas.lambda_others};
    if (cfg.grid) {
        ordered_json g;
        g["ranks"] = cfg.grid->rank_values;
        g["lambdas"] = cfg.grid->lambda_values;
        g["subject_ranks"] = cfg.grid->subject_rank_values;
        g["object_ranks"] = cfg.grid->object_rank_values;
        g["other_ranks"] = cfg.grid->other_rank_values;
        g["lambda_subjects"] = cfg.grid->lambda_subject_values;
        g["lambda_objects"] = cfg.grid->lambda_object_values;
        g["lambda_others"] = cfg.grid->lambda_other_values;
        j["grid"] = g;
    }
    j["solver"] = {{"max_iters", cfg.solver.max_iters},
                   {"tol", cfg.solver.tol},
                   {"seed", cfg.solver.seed},
                   {"init_iters", cfg.solver.init_iters},
                   {"init_restarts", cfg.solver.init_restarts}};
    j["miner"] = {{"top_cells", cfg.miner.top_cells},
                  {"label_k", cfg.miner.label_k},
                  {"top_schemata", cfg.miner.top_schemata}};
    j["threads"] = cfg.threads;
    j["binary_factors"] = cfg.binary_factors;
    return j;
}

inline std::string config_hash(const RunConfig& cfg) {
    const std::string text = run_config_to_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a 64
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf, 16);
}

// Run manifest written next to every command's outputs.  Deliberately free
// of timestamps and absolute paths (inputs are recorded by basename), so
// identical runs leave byte-identical manifests wherever they are placed.
inline void save_manifest(const std::filesystem::path& path, const std::string& command,
                          const RunConfig& cfg, const std::vector<std::string>& outputs) {
    ordered_json j;
    j["command"] = command;
    j["version"] = kVersion;
    j["seed"] = cfg.solver.seed;
    j["config_hash"] = config_hash(cfg);
    j["config"] = run_config_to_json(cfg);
    ordered_json inputs;
    auto record = [&](const char* key, const std::string& value) {
        if (!value.empty()) inputs[key] = std::filesystem::path(value).filename().string();
    };
    record("input", cfg.input);
    record("tensors", cfg.tensors);
    record("factors", cfg.factors);
    record("vocab", cfg.vocab);
    record("schemas", cfg.schemas);
    record("synth_spec", cfg.synth_spec);
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace nrsi
