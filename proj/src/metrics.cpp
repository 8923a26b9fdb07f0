#include "lesionkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "lesionkit/errors.hpp"

namespace lesionkit {

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t t = 0;
    for (const auto& row : counts)
        for (std::uint64_t v : row) t += v;
    return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t i) const {
    std::uint64_t t = 0;
    for (std::uint64_t v : counts[i]) t += v;
    return t;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t j) const {
    std::uint64_t t = 0;
    for (const auto& row : counts) t += row[j];
    return t;
}

std::uint64_t ConfusionMatrix::tp() const {
    return counts[positive_class][positive_class];
}
std::uint64_t ConfusionMatrix::fn() const {
    return row_sum(positive_class) - tp();
}
std::uint64_t ConfusionMatrix::fp() const {
    return col_sum(positive_class) - tp();
}
std::uint64_t ConfusionMatrix::tn() const {
    return total() - tp() - fp() - fn();
}

std::string ConfusionMatrix::to_csv() const {
    std::ostringstream out;
    for (const auto& name : class_names) out << ',' << name;
    out << '\n';
    for (std::size_t i = 0; i < counts.size(); ++i) {
        out << class_names[i];
        for (std::uint64_t v : counts[i]) out << ',' << v;
        out << '\n';
    }
    return out.str();
}

ConfusionMatrix confusion(const std::vector<int>& predictions,
                          const std::vector<int>& labels,
                          const std::vector<std::string>& class_names,
                          int positive_class) {
    if (predictions.size() != labels.size()) {
        throw std::invalid_argument("confusion: prediction/label length mismatch");
    }
    if (predictions.empty()) {
        throw std::invalid_argument("confusion: no samples");
    }
    const int k = static_cast<int>(class_names.size());
    if (positive_class < 0 || positive_class >= k) {
        throw std::invalid_argument("confusion: positive class out of range");
    }
    ConfusionMatrix cm;
    cm.class_names = class_names;
    cm.positive_class = positive_class;
    cm.counts.assign(k, std::vector<std::uint64_t>(k, 0));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= k || predictions[i] < 0 ||
            predictions[i] >= k) {
            throw std::invalid_argument("confusion: class index out of range");
        }
        cm.counts[labels[i]][predictions[i]] += 1;
    }
    return cm;
}

namespace {

double ratio0(std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double f1_of(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

}  // namespace

MetricsReport metrics_report(const ConfusionMatrix& cm, Averaging averaging) {
    const std::uint64_t total = cm.total();
    if (total == 0) throw NumericError("metrics on an empty confusion matrix");

    const std::size_t k = cm.num_classes();
    MetricsReport rep;
    rep.averaging = averaging;
    rep.class_names = cm.class_names;

    std::uint64_t trace = 0;
    for (std::size_t c = 0; c < k; ++c) {
        trace += cm.counts[c][c];
        rep.support.push_back(cm.row_sum(c));
        rep.per_class_precision.push_back(ratio0(cm.counts[c][c], cm.col_sum(c)));
        rep.per_class_recall.push_back(ratio0(cm.counts[c][c], cm.row_sum(c)));
        rep.per_class_f1.push_back(
            f1_of(rep.per_class_precision[c], rep.per_class_recall[c]));
    }
    rep.accuracy = static_cast<double>(trace) / static_cast<double>(total);

    if (averaging == Averaging::weighted) {
        for (std::size_t c = 0; c < k; ++c) {
            const double w =
                static_cast<double>(rep.support[c]) / static_cast<double>(total);
            rep.precision += w * rep.per_class_precision[c];
            rep.recall += w * rep.per_class_recall[c];
            rep.f1 += w * rep.per_class_f1[c];
        }
    } else {
        rep.precision = rep.per_class_precision[cm.positive_class];
        rep.recall = rep.per_class_recall[cm.positive_class];
        rep.f1 = rep.per_class_f1[cm.positive_class];
    }

    rep.sensitivity = ratio0(cm.tp(), cm.tp() + cm.fn());
    rep.specificity = ratio0(cm.tn(), cm.tn() + cm.fp());
    return rep;
}

std::string MetricsReport::to_csv() const {
    std::ostringstream out;
    out << "accuracy,precision,recall,f1,sensitivity,specificity\n";
    out.precision(10);
    out << accuracy << ',' << precision << ',' << recall << ',' << f1 << ','
        << sensitivity << ',' << specificity << '\n';
    return out.str();
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::invalid_argument("normal quantile needs p in (0,1)");
    }
    if (p == 0.975) return 1.959963984540054;

    // Acklam's rational approximation (~1e-9 absolute error).
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double q, r;
    if (p < plow) {
        q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
                c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) {
        q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
                 c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
           q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

namespace {

void check_kn(std::uint64_t k, std::uint64_t n) {
    if (n == 0 || k > n) {
        throw std::invalid_argument("interval needs 0 ≤ k ≤ n, n ≥ 1");
    }
}

// Clamp to [0,1] and make sure the interval contains the point estimate,
// which floating-point rounding can otherwise violate at the k=0 / k=n
// boundaries.
void finalize(ConfidenceInterval& ci) {
    ci.lower = std::clamp(ci.lower, 0.0, 1.0);
    ci.upper = std::clamp(ci.upper, 0.0, 1.0);
    const double p = ci.point_estimate();
    ci.lower = std::min(ci.lower, p);
    ci.upper = std::max(ci.upper, p);
}

}  // namespace

ConfidenceInterval wilson_interval(std::uint64_t k, std::uint64_t n,
                                   double alpha) {
    check_kn(k, n);
    const double z = normal_quantile(1.0 - alpha / 2.0);
    const double z2 = z * z;
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;

    const double denom = 1.0 + z2 / nn;
    const double center = (p + z2 / (2.0 * nn)) / denom;
    const double half =
        z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;

    ConfidenceInterval ci{center - half, center + half, IntervalMethod::wilson,
                          alpha, k, n};
    finalize(ci);
    return ci;
}

ConfidenceInterval wald_interval(std::uint64_t k, std::uint64_t n,
                                 double alpha) {
    check_kn(k, n);
    const double z = normal_quantile(1.0 - alpha / 2.0);
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double half = z * std::sqrt(p * (1.0 - p) / nn);

    ConfidenceInterval ci{p - half, p + half, IntervalMethod::wald, alpha, k, n};
    finalize(ci);
    return ci;
}

std::string interval_table_csv(const std::vector<ConfidenceInterval>& rows,
                               const std::vector<std::string>& labels) {
    if (rows.size() != labels.size()) {
        throw std::invalid_argument("interval table: label count mismatch");
    }
    std::ostringstream out;
    out << "label,method,alpha,successes,trials,lower,upper\n";
    out.precision(10);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& ci = rows[i];
        out << labels[i] << ','
            << (ci.method == IntervalMethod::wilson ? "wilson" : "wald") << ','
            << ci.alpha << ',' << ci.successes << ',' << ci.trials << ','
            << ci.lower << ',' << ci.upper << '\n';
    }
    return out.str();
}

}  // namespace lesionkit
