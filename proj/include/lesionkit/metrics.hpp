#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lesionkit {

// K×K counts, rows = true class, columns = predicted class.
struct ConfusionMatrix {
    std::vector<std::vector<std::uint64_t>> counts;
    std::vector<std::string> class_names;
    int positive_class = 0;  // index used for the binary Tp/Tn/Fp/Fn view

    std::size_t num_classes() const { return class_names.size(); }
    std::uint64_t total() const;
    std::uint64_t row_sum(std::size_t i) const;
    std::uint64_t col_sum(std::size_t j) const;

    // One-vs-rest view of the positive class.
    std::uint64_t tp() const;
    std::uint64_t tn() const;
    std::uint64_t fp() const;
    std::uint64_t fn() const;

    std::string to_csv() const;  // header row/column of class names
};

ConfusionMatrix confusion(const std::vector<int>& predictions,
                          const std::vector<int>& labels,
                          const std::vector<std::string>& class_names,
                          int positive_class = 0);

enum class Averaging { positive_class, weighted };

struct MetricsReport {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double sensitivity = 0.0;  // recall of the positive class
    double specificity = 0.0;  // recall of everything else
    Averaging averaging = Averaging::weighted;
    std::vector<std::string> class_names;
    std::vector<std::uint64_t> support;       // per-class true counts
    std::vector<double> per_class_precision;  // 0/0 cells are 0
    std::vector<double> per_class_recall;
    std::vector<double> per_class_f1;

    std::string to_csv() const;
};

// Accuracy is trace/total; precision/recall/F1 are per class with 0/0
// defined as 0, then either support-weighted or taken from the positive
// class. Throws NumericError when the matrix is empty.
MetricsReport metrics_report(const ConfusionMatrix& cm,
                             Averaging averaging = Averaging::weighted);

enum class IntervalMethod { wilson, wald };

struct ConfidenceInterval {
    double lower = 0.0;
    double upper = 0.0;
    IntervalMethod method = IntervalMethod::wilson;
    double alpha = 0.05;
    std::uint64_t successes = 0;
    std::uint64_t trials = 0;

    double point_estimate() const {
        return static_cast<double>(successes) / static_cast<double>(trials);
    }
};

// Wilson score interval, clamped to [0,1]. z is the standard-normal
// quantile at 1−alpha/2.
ConfidenceInterval wilson_interval(std::uint64_t successes,
                                   std::uint64_t trials, double alpha = 0.05);

// Wald (normal-approximation) interval p̂ ± z·sqrt(p̂(1−p̂)/n), clamped.
ConfidenceInterval wald_interval(std::uint64_t successes, std::uint64_t trials,
                                 double alpha = 0.05);

// Standard-normal quantile. Exact constant for the common α=0.05 case,
// rational approximation elsewhere.
double normal_quantile(double p);

std::string interval_table_csv(const std::vector<ConfidenceInterval>& rows,
                               const std::vector<std::string>& labels);

}  // namespace lesionkit
