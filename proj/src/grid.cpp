#include "lesionkit/grid.hpp"

#include <sstream>
#include <stdexcept>

#include "lesionkit/errors.hpp"
#include "lesionkit/rng.hpp"

namespace lesionkit {

void GridSpec::validate() const {
    if (batch_sizes.empty() || epoch_counts.empty() || learning_rates.empty()) {
        throw ConfigError("grid lists must all be nonempty");
    }
    if (runs_per_cell < 1) throw ConfigError("runs per cell must be ≥ 1");
}

std::string GridSearchResult::to_csv() const {
    std::ostringstream out;
    out.precision(10);
    out << "cell,batch_size,epochs,learning_rate,mean_val_accuracy,best\n";
    for (const auto& cell : cells) {
        out << cell.cell_index << ',' << cell.config.batch_size << ','
            << cell.config.epochs << ',' << cell.config.learning_rate << ','
            << cell.mean_val_accuracy << ','
            << (cell.cell_index == best_cell ? 1 : 0) << '\n';
    }
    return out.str();
}

GridSearchResult grid_search(const GridSpec& grid, const TrainConfig& base,
                             const CellEvaluator& evaluate_cell) {
    grid.validate();

    GridSearchResult result;
    std::size_t cell_index = 0;
    double best_acc = -1.0;

    for (int batch_size : grid.batch_sizes) {
        for (int epochs : grid.epoch_counts) {
            for (double lr : grid.learning_rates) {
                GridCellResult cell;
                cell.cell_index = cell_index;
                cell.config = base;
                cell.config.batch_size = batch_size;
                cell.config.epochs = epochs;
                cell.config.learning_rate = lr;

                for (int run = 0; run < grid.runs_per_cell; ++run) {
                    TrainConfig run_config = cell.config;
                    run_config.seed = mix_seed(
                        base.seed, cell_index * static_cast<std::size_t>(
                                                    grid.runs_per_cell) +
                                       run);
                    double acc = 0.0;
                    try {
                        acc = evaluate_cell(run_config);
                    } catch (const std::exception& e) {
                        throw NumericError(
                            "grid cell (batch=" + std::to_string(batch_size) +
                            ", epochs=" + std::to_string(epochs) +
                            ", lr=" + std::to_string(lr) + ") failed: " + e.what());
                    }
                    cell.run_accuracies.push_back(acc);
                    cell.mean_val_accuracy += acc;
                }
                cell.mean_val_accuracy /= grid.runs_per_cell;

                if (cell.mean_val_accuracy > best_acc) {
                    best_acc = cell.mean_val_accuracy;
                    result.best = cell.config;
                    result.best_cell = cell_index;
                }
                result.cells.push_back(std::move(cell));
                ++cell_index;
            }
        }
    }
    return result;
}

GridSearchResult grid_search_train(const GridSpec& grid,
                                   const CnnArchitecture& arch,
                                   const LabeledSet& train_set,
                                   const LabeledSet& val_set,
                                   const TrainConfig& base) {
    return grid_search(grid, base, [&](const TrainConfig& config) {
        ReferenceCnn model = ReferenceCnn::initialized(arch, config.seed);
        const TrainingHistory history =
            train(model, train_set, val_set, config);
        return history.epochs.back().val_accuracy;
    });
}

}  // namespace lesionkit
