#include "sshash/evaluate.hpp"

namespace sshash {

std::vector<BitCode> hash_rows(const ModelBundle& model, const LabeledDataset& data,
                               std::span<const std::size_t> rows) {
    if (data.dim() != model.input_dim())
        throw InvalidInput("dataset has " + std::to_string(data.dim()) +
                           " features, model expects " + std::to_string(model.input_dim()));
    return hash_features(model, data.features.gather_rows(rows));
}

HashIndex build_index(const ModelBundle& model, const LabeledDataset& data,
                      std::span<const std::size_t> rows) {
    const auto codes = hash_rows(model, data, rows);
    std::vector<std::uint64_t> ids(rows.begin(), rows.end());
    std::vector<LabelSet> labels;
    if (data.has_labels()) {
        labels.reserve(rows.size());
        for (auto r : rows) labels.push_back(data.labels[r]);
    }
    return HashIndex(model.bits, codes, std::move(ids), std::move(labels));
}

EvalReport evaluate(const ModelBundle& model, const LabeledDataset& data,
                    std::span<const std::size_t> query_rows, const HashIndex& index, std::size_t k,
                    MapDefinition map_definition) {
    if (!data.has_labels()) throw InvalidInput("evaluation needs labelled queries");
    if (index.bits() != model.bits)
        throw InvalidInput("index holds " + std::to_string(index.bits()) +
                           "-bit codes, model emits " + std::to_string(model.bits));
    const auto codes = hash_rows(model, data, query_rows);
    std::vector<LabelSet> labels;
    labels.reserve(query_rows.size());
    for (auto r : query_rows) labels.push_back(data.labels[r]);
    const std::vector<std::uint64_t> ids(query_rows.begin(), query_rows.end());
    return evaluate_codes(codes, labels, index, k, ids, map_definition);
}

EvalReport evaluate_split(const ModelBundle& model, const LabeledDataset& data, Split query_split,
                          std::size_t k, MapDefinition map_definition) {
    const auto train_rows = data.rows_in(Split::train);
    const auto query_rows = data.rows_in(query_split);
    if (query_rows.empty()) throw InvalidInput("query split is empty");
    const HashIndex index = build_index(model, data, train_rows);
    return evaluate(model, data, query_rows, index, k, map_definition);
}

}  // namespace sshash
