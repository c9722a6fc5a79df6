// Planted attention with a strong positional bias toward one distractor.
// Raw attention puts the distractor first; subtracting the "N/A" pass
// recovers the planted target.

#include <iostream>
#include <string>
#include <vector>

#include "icr/icr.hpp"

namespace {

void show(const char* label, const icr::QueryResult& r, const std::string& target) {
    std::cout << label << ":";
    for (const auto& e : r.scored.ranking.entries)
        std::cout << ' ' << e.doc_id << (e.doc_id == target ? "*" : "");
    std::cout << '\n';
}

}  // namespace

int main() {
    icr::QueryInput input{"q1", {"which passage is relevant", icr::QueryStyle::IE}, {}};
    for (int i = 1; i <= 5; ++i)
        input.docs.push_back({"p" + std::to_string(i), std::nullopt, "alpha beta gamma delta epsilon zeta"});

    // Retriever rank 3 is the target. Reversed presentation puts p5 first,
    // which receives the bias.
    icr::PlantTemplate plant;
    plant.target_rank = 3;
    plant.boost = 2.0;
    plant.position_bias = {3.0, 0.0, 0.0, 0.0, 0.0};
    icr::PlantedBackend backend(2, 2, plant);
    const auto target = backend.target_for(std::vector<std::string>{"p1", "p2", "p3", "p4", "p5"});

    icr::RerankOptions opt;
    opt.mode = icr::ScoringMode::no_calibration;
    show("uncalibrated", icr::rerank_query(backend, input, opt), target);
    opt.mode = icr::ScoringMode::full;
    show("calibrated  ", icr::rerank_query(backend, input, opt), target);
    std::cout << "(* = planted target)\n";
}
