#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "nrsi/corpus.hpp"
#include "nrsi/errors.hpp"
#include "nrsi/numeric.hpp"

namespace nrsi {

// One planted n-ary schema: every sampled tuple draws its subject from block
// a_block, its object from b_block, and its other argument from one of the
// c_blocks, so the latent column structure of the corpus is known exactly.
struct PlantedSchema {
    std::size_t relation = 0;
    std::size_t a_block = 0;
    std::size_t b_block = 0;
    std::vector<std::size_t> c_blocks;
    std::size_t weight = 1;  // number of tuples sampled for this schema
};

struct SyntheticSpec {
    std::array<std::size_t, 3> vocab_sizes{0, 0, 0};  // subjects, objects, others
    std::size_t relations = 0;
    std::array<std::size_t, 3> blocks{1, 1, 1};       // latent blocks per mode
    std::vector<PlantedSchema> schemata;
    double noise_rate = 0.0;  // noise tuples as a fraction of planted tuples
    std::uint64_t seed = 0;
};

struct SyntheticCorpus {
    std::vector<TupleRecord> records;  // planted first, then noise
    std::size_t planted_tuples = 0;
    std::size_t noise_tuples = 0;
};

// Vocabulary index range [first, last) of one block; sizes differ by at most
// one when the vocabulary does not divide evenly.
inline std::pair<std::size_t, std::size_t> block_range(std::size_t vocab_size,
                                                       std::size_t n_blocks, std::size_t block) {
    const std::size_t base = vocab_size / n_blocks;
    const std::size_t rem = vocab_size % n_blocks;
    const std::size_t first = block * base + std::min(block, rem);
    const std::size_t width = base + (block < rem ? 1 : 0);
    return {first, first + width};
}

inline std::size_t block_of(std::size_t vocab_size, std::size_t n_blocks, std::size_t index) {
    for (std::size_t b = 0; b < n_blocks; ++b) {
        const auto [first, last] = block_range(vocab_size, n_blocks, b);
        if (index >= first && index < last) return b;
    }
    throw shape_error("block_of: index outside vocabulary");
}

inline void validate(const SyntheticSpec& spec) {
    for (int axis = 0; axis < 3; ++axis) {
        if (spec.vocab_sizes[axis] < 1) throw config_error("synthetic vocabulary sizes must be >= 1");
        if (spec.blocks[axis] < 1 || spec.blocks[axis] > spec.vocab_sizes[axis])
            throw config_error("synthetic block counts must be in [1, vocab size]");
    }
    if (spec.relations < 1) throw config_error("synthetic spec needs at least one relation");
    if (!(spec.noise_rate >= 0.0)) throw config_error("noise rate must be >= 0");
    for (const PlantedSchema& s : spec.schemata) {
        if (s.relation >= spec.relations) throw config_error("planted schema relation out of range");
        if (s.a_block >= spec.blocks[0] || s.b_block >= spec.blocks[1])
            throw config_error("planted schema block out of range");
        if (s.c_blocks.empty()) throw config_error("planted schema needs at least one c block");
        for (std::size_t c : s.c_blocks)
            if (c >= spec.blocks[2]) throw config_error("planted schema block out of range");
        if (s.weight < 1) throw config_error("planted schema weight must be >= 1");
    }
}

inline std::string subject_surface(std::size_t i) { return "s" + std::to_string(i); }
inline std::string object_surface(std::size_t i) { return "o" + std::to_string(i); }
inline std::string other_surface(std::size_t i) { return "c" + std::to_string(i); }
inline std::string relation_surface(std::size_t i) { return "r" + std::to_string(i); }

// Samples the corpus: `weight` tuples per planted schema (uniform within
// blocks, uniform over the schema's c blocks), then noise tuples drawn
// uniformly over the full vocabularies at the configured rate.
inline SyntheticCorpus generate_corpus(const SyntheticSpec& spec) {
    validate(spec);
    std::mt19937_64 rng(spec.seed);
    SyntheticCorpus corpus;
    auto draw_in_block = [&](std::size_t vocab_size, std::size_t n_blocks, std::size_t block) {
        const auto [first, last] = block_range(vocab_size, n_blocks, block);
        return first + uniform_index(rng, last - first);
    };
    for (const PlantedSchema& s : spec.schemata) {
        for (std::size_t n = 0; n < s.weight; ++n) {
            TupleRecord rec;
            rec.subject = subject_surface(draw_in_block(spec.vocab_sizes[0], spec.blocks[0], s.a_block));
            rec.relation = relation_surface(s.relation);
            rec.object = object_surface(draw_in_block(spec.vocab_sizes[1], spec.blocks[1], s.b_block));
            const std::size_t c_block = s.c_blocks[uniform_index(rng, s.c_blocks.size())];
            rec.others = {other_surface(draw_in_block(spec.vocab_sizes[2], spec.blocks[2], c_block))};
            rec.count = 1;
            corpus.records.push_back(std::move(rec));
            ++corpus.planted_tuples;
        }
    }
    const std::size_t noise =
        static_cast<std::size_t>(std::llround(spec.noise_rate * static_cast<double>(corpus.planted_tuples)));
    for (std::size_t n = 0; n < noise; ++n) {
        TupleRecord rec;
        rec.subject = subject_surface(uniform_index(rng, spec.vocab_sizes[0]));
        rec.relation = relation_surface(uniform_index(rng, spec.relations));
        rec.object = object_surface(uniform_index(rng, spec.vocab_sizes[1]));
        rec.others = {other_surface(uniform_index(rng, spec.vocab_sizes[2]))};
        rec.count = 1;
        corpus.records.push_back(std::move(rec));
        ++corpus.noise_tuples;
    }
    return corpus;
}

}  // namespace nrsi
