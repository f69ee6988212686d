#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace geoling {

/// Sample Pearson correlation; needs length >= 3 and nonzero variance on both
/// sides, otherwise fatal.
double pearson(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred);

/// Mean absolute error.
double mae(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred);

/// Rank-based quantile binning: element of rank r (sorted by value, ties by
/// original index) gets bin floor(r*C/n). Bin sizes differ by at most one.
std::vector<int> quantile_bins(const Eigen::VectorXd& values, int c);

struct ConfusionResult {
    std::vector<std::vector<long>> matrix; // [true bin][predicted bin]
    double accuracy = 0.0;
};

/// True and predicted values are binned independently; entry (i,j) counts
/// elements with true bin i and predicted bin j.
ConfusionResult confusion(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred, int c);

struct EvaluationReport {
    double pearson = 0.0;
    double mae = 0.0;
    int quantiles = 0;
    double bin_accuracy = 0.0;
    std::vector<std::vector<long>> confusion;
    long n = 0;

    nlohmann::json to_json() const;
    static EvaluationReport from_json(const nlohmann::json& j);
    void save(const std::string& path) const;
    void save_confusion_csv(const std::string& path) const;
};

EvaluationReport evaluate_predictions(const Eigen::VectorXd& y_true,
                                      const Eigen::VectorXd& y_pred, int quantiles);

} // namespace geoling
