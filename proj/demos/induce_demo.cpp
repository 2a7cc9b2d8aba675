// End-to-end library walkthrough: plant a tiny corpus, factorize it, and
// print the induced schemata next to the hardclust baseline.

#include <iostream>

#include "nrsi/corpus.hpp"
#include "nrsi/factorization.hpp"
#include "nrsi/hardclust.hpp"
#include "nrsi/schema_miner.hpp"
#include "nrsi/synthetic.hpp"

int main() {
    nrsi::SyntheticSpec spec;
    spec.vocab_sizes = {12, 12, 12};
    spec.relations = 3;
    spec.blocks = {3, 3, 4};
    spec.noise_rate = 0.05;
    spec.seed = 7;
    spec.schemata = {
        {0, 0, 0, {0}, 200},
        {1, 1, 1, {1, 2}, 200},  // 4-ary: two other-categories
        {2, 2, 2, {3}, 200},
    };

    const nrsi::SyntheticCorpus corpus = nrsi::generate_corpus(spec);
    const nrsi::BackoffTensors tensors = nrsi::build_backoff_tensors(corpus.records);
    std::cout << "corpus: " << corpus.records.size() << " tuples, tensors "
              << nrsi::shape_string(tensors.obj_oth.shape()) << " / "
              << nrsi::shape_string(tensors.subj_oth.shape()) << " / "
              << nrsi::shape_string(tensors.subj_obj.shape()) << "\n\n";

    nrsi::SolveOptions options;
    options.max_iters = 300;
    options.seed = 1;
    const auto [factors, fit] =
        nrsi::factorize(tensors, nrsi::Ranks{3, 3, 4}, nrsi::Regularizers{}, options);
    std::cout << "avg_fit " << fit.avg_fit << " after " << fit.iterations_run << " sweeps\n\n";

    for (const nrsi::InducedSchema& s : nrsi::induce_schemata(factors, tensors.vocab)) {
        std::cout << s.relation_surface << "<A" << s.a_col << ",B" << s.b_col;
        for (std::size_t c : s.c_cols) std::cout << ",C" << c;
        std::cout << ">  score " << s.score << "\n";
        auto print_labels = [](const char* tag, const std::vector<nrsi::ColumnLabel>& labels) {
            std::cout << "  " << tag << ":";
            for (const auto& l : labels) std::cout << ' ' << l.np;
            std::cout << '\n';
        };
        print_labels("subjects", s.a_labels);
        print_labels("objects", s.b_labels);
        for (const auto& cl : s.c_labels) print_labels("others", cl);
    }

    std::cout << "\nhardclust baseline:\n";
    for (const nrsi::HardClustSchema& s : nrsi::hardclust(corpus.records)) {
        std::cout << "  " << s.relation_surface << ":";
        for (const auto& l : s.subject_reps) std::cout << ' ' << l.np;
        std::cout << " |";
        for (const auto& l : s.object_reps) std::cout << ' ' << l.np;
        std::cout << " |";
        for (const auto& l : s.other_reps) std::cout << ' ' << l.np;
        std::cout << '\n';
    }
    return 0;
}
