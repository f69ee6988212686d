#include "geoling/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "geoling/error.hpp"

namespace geoling {

double pearson(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
    if (y_true.size() != y_pred.size()) throw FatalError("pearson: length mismatch");
    if (y_true.size() < 3) throw FatalError("pearson: need at least 3 points");
    const Eigen::VectorXd dt = y_true.array() - y_true.mean();
    const Eigen::VectorXd dp = y_pred.array() - y_pred.mean();
    const double st = dt.squaredNorm();
    const double sp = dp.squaredNorm();
    if (st == 0.0 || sp == 0.0) throw FatalError("degenerate series: zero variance");
    return dt.dot(dp) / std::sqrt(st * sp);
}

double mae(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
    if (y_true.size() != y_pred.size()) throw FatalError("mae: length mismatch");
    if (y_true.size() == 0) throw FatalError("mae: empty input");
    return (y_true - y_pred).array().abs().mean();
}

std::vector<int> quantile_bins(const Eigen::VectorXd& values, int c) {
    const auto n = static_cast<std::size_t>(values.size());
    if (c < 2) throw FatalError("quantile count must be at least 2");
    if (n < static_cast<std::size_t>(c))
        throw FatalError("quantile binning needs at least " + std::to_string(c) + " values");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&values](std::size_t a, std::size_t b) {
        return values[static_cast<Eigen::Index>(a)] < values[static_cast<Eigen::Index>(b)];
    });

    std::vector<int> bins(n);
    for (std::size_t rank = 0; rank < n; ++rank)
        bins[order[rank]] = static_cast<int>(rank * static_cast<std::size_t>(c) / n);
    return bins;
}

ConfusionResult confusion(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred, int c) {
    if (y_true.size() != y_pred.size()) throw FatalError("confusion: length mismatch");
    const std::vector<int> true_bins = quantile_bins(y_true, c);
    const std::vector<int> pred_bins = quantile_bins(y_pred, c);

    ConfusionResult result;
    result.matrix.assign(static_cast<std::size_t>(c),
                         std::vector<long>(static_cast<std::size_t>(c), 0));
    long diagonal = 0;
    for (std::size_t i = 0; i < true_bins.size(); ++i) {
        result.matrix[static_cast<std::size_t>(true_bins[i])]
                     [static_cast<std::size_t>(pred_bins[i])] += 1;
        if (true_bins[i] == pred_bins[i]) ++diagonal;
    }
    result.accuracy = static_cast<double>(diagonal) / static_cast<double>(true_bins.size());
    return result;
}

EvaluationReport evaluate_predictions(const Eigen::VectorXd& y_true,
                                      const Eigen::VectorXd& y_pred, int quantiles) {
    EvaluationReport report;
    report.pearson = pearson(y_true, y_pred);
    report.mae = mae(y_true, y_pred);
    report.quantiles = quantiles;
    const ConfusionResult conf = confusion(y_true, y_pred, quantiles);
    report.bin_accuracy = conf.accuracy;
    report.confusion = conf.matrix;
    report.n = static_cast<long>(y_true.size());
    return report;
}

nlohmann::json EvaluationReport::to_json() const {
    return nlohmann::json{{"pearson", pearson},         {"mae", mae},
                          {"quantiles", quantiles},     {"bin_accuracy", bin_accuracy},
                          {"confusion", confusion},     {"n", n}};
}

EvaluationReport EvaluationReport::from_json(const nlohmann::json& j) {
    EvaluationReport report;
    report.pearson = j.at("pearson").get<double>();
    report.mae = j.at("mae").get<double>();
    report.quantiles = j.at("quantiles").get<int>();
    report.bin_accuracy = j.at("bin_accuracy").get<double>();
    report.confusion = j.at("confusion").get<std::vector<std::vector<long>>>();
    report.n = j.at("n").get<long>();
    return report;
}

void EvaluationReport::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw FatalError("cannot write evaluation report: " + path);
    out << to_json().dump(2) << '\n';
}

void EvaluationReport::save_confusion_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw FatalError("cannot write confusion matrix: " + path);
    for (const auto& row : confusion) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j > 0) out << ',';
            out << row[j];
        }
        out << '\n';
    }
}

} // namespace geoling
