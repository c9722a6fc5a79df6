// Re-rank four short passages for one question with the toy transformer and
// print the resulting order.

#include <iostream>
#include <vector>

#include "icr/icr.hpp"

int main() {
    const std::vector<icr::Document> docs = {
        {"d1", "Bakeries", "Sourdough starters need regular feeding with flour and water."},
        {"d2", "Rivers", "The Danube flows through ten countries before reaching the Black Sea."},
        {"d3", std::nullopt, "Mount Everest sits on the border of Nepal and China."},
        {"d4", "Geography", "The Nile is often cited as the longest river on Earth."},
    };
    icr::QueryInput input{"q1", {"Which river is the longest?", icr::QueryStyle::QA}, docs};

    icr::ToyBackend backend(icr::ToyConfig{});
    const auto result = icr::rerank_query(backend, input, icr::RerankOptions{});

    std::cout << "prompt tokens: " << result.layout.total_len() << " (calibration reused "
              << result.reused_prefix_tokens << ")\n";
    std::size_t pos = 0;
    for (const auto& e : result.scored.ranking.entries)
        std::cout << ++pos << ". " << e.doc_id << "  score=" << e.score << "  retriever rank=" << e.retriever_rank
                  << '\n';
    std::cout << "forward passes: " << backend.acquisitions() << '\n';
}
