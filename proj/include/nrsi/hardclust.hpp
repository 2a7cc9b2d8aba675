#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nrsi/corpus.hpp"
#include "nrsi/errors.hpp"
#include "nrsi/schema_miner.hpp"

namespace nrsi {

// Frequency baseline: per relation, the NPs seen in each argument position
// form one cluster, represented by their top-k most frequent members.
struct HardClustSchema {
    std::size_t relation = 0;
    std::string relation_surface;
    std::vector<ColumnLabel> subject_reps;
    std::vector<ColumnLabel> object_reps;
    std::vector<ColumnLabel> other_reps;
    std::int64_t total_mass = 0;
};

// Exactly one schema per distinct relation, in first-appearance order.
// Frequencies are mass-weighted by the tuple count field; representative
// lists are ordered by descending frequency, ties by NP.
inline std::vector<HardClustSchema> hardclust(const std::vector<TupleRecord>& records,
                                              std::size_t k = 3) {
    if (k < 1) throw config_error("hardclust: k must be >= 1");
    struct Clusters {
        std::map<std::string, std::int64_t> subjects, objects, others;
        std::int64_t mass = 0;
    };
    std::vector<std::string> relation_order;
    std::map<std::string, Clusters> by_relation;
    for (const TupleRecord& r : records) {
        if (r.others.size() != 1)
            throw data_error("hardclust: records must be split to exactly one other");
        auto it = by_relation.find(r.relation);
        if (it == by_relation.end()) {
            relation_order.push_back(r.relation);
            it = by_relation.emplace(r.relation, Clusters{}).first;
        }
        it->second.subjects[r.subject] += r.count;
        it->second.objects[r.object] += r.count;
        it->second.others[r.others[0]] += r.count;
        it->second.mass += r.count;
    }
    auto representatives = [k](const std::map<std::string, std::int64_t>& freq) {
        std::vector<std::pair<std::string, std::int64_t>> ranked(freq.begin(), freq.end());
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        if (ranked.size() > k) ranked.resize(k);
        std::vector<ColumnLabel> out;
        out.reserve(ranked.size());
        for (const auto& [np, mass] : ranked)
            out.push_back({np, static_cast<double>(mass)});
        return out;
    };
    std::vector<HardClustSchema> out;
    out.reserve(relation_order.size());
    for (std::size_t rel = 0; rel < relation_order.size(); ++rel) {
        const Clusters& c = by_relation.at(relation_order[rel]);
        HardClustSchema s;
        s.relation = rel;
        s.relation_surface = relation_order[rel];
        s.subject_reps = representatives(c.subjects);
        s.object_reps = representatives(c.objects);
        s.other_reps = representatives(c.others);
        s.total_mass = c.mass;
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace nrsi
