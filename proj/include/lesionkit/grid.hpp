#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lesionkit/train.hpp"

namespace lesionkit {

struct GridSpec {
    std::vector<int> batch_sizes;
    std::vector<int> epoch_counts;
    std::vector<double> learning_rates;
    int runs_per_cell = 1;

    void validate() const;  // throws ConfigError when a list is empty
    std::size_t cell_count() const {
        return batch_sizes.size() * epoch_counts.size() * learning_rates.size();
    }
};

struct GridCellResult {
    std::size_t cell_index = 0;
    TrainConfig config;
    std::vector<double> run_accuracies;
    double mean_val_accuracy = 0.0;
};

struct GridSearchResult {
    TrainConfig best;
    std::size_t best_cell = 0;
    std::vector<GridCellResult> cells;  // in grid order

    std::string to_csv() const;
};

// Evaluates a training configuration once and reports its final validation
// accuracy. The run seed is already folded into the config.
using CellEvaluator = std::function<double(const TrainConfig&)>;

// Walks cells in lexicographic list order (batch sizes, then epoch counts,
// then learning rates), runs `runs_per_cell` seeded evaluations per cell,
// and picks the cell with the highest mean validation accuracy. Ties keep
// the earliest cell. Evaluator failures abort with the cell coordinates.
GridSearchResult grid_search(const GridSpec& grid, const TrainConfig& base,
                             const CellEvaluator& evaluate_cell);

// Grid search over freshly initialized models trained on the given sets.
GridSearchResult grid_search_train(const GridSpec& grid,
                                   const CnnArchitecture& arch,
                                   const LabeledSet& train_set,
                                   const LabeledSet& val_set,
                                   const TrainConfig& base);

}  // namespace lesionkit
