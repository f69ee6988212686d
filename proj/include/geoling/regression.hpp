#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "geoling/aggregate.hpp"
#include "geoling/types.hpp"

namespace geoling {

/// Disjoint, covering split of the communities into K folds whose sizes
/// differ by at most one. Fold ids run 1..K.
struct FoldPlan {
    int k = 0;
    std::uint64_t seed = 0;
    std::map<CommunityId, int> assignments;

    int fold_of(const CommunityId& id) const;
};

/// Deterministic split: sort ids, seeded shuffle, round-robin assignment.
FoldPlan make_folds(const std::vector<CommunityId>& communities, int k, std::uint64_t seed);

/// Minimizer of (1/(2N)) sum_i (y_i - x_i'w)^2 + lambda ||w||^2, i.e. the
/// solution of (X'X + 2 N lambda I) w = X'y, via Cholesky (the system is
/// positive definite for lambda > 0). Inputs are expected standardized.
Eigen::VectorXd fit_ridge(const Eigen::MatrixXd& x_train, const Eigen::VectorXd& y_train,
                          double lambda);

/// Grid value maximizing the pooled out-of-fold Pearson correlation of an
/// inner cross-validation on the training rows. Exact score ties go to the
/// larger lambda.
double tune_lambda(const Eigen::MatrixXd& x_train, const Eigen::VectorXd& y_train,
                   const std::vector<double>& grid, int inner_folds, std::uint64_t seed);

struct RidgeFold {
    double lambda = 0.0;
    Eigen::VectorXd weights; // in the fold's standardized feature space
    std::vector<CommunityId> train_communities;
};

/// Cross-validated ridge model. Weights live in standardized feature space;
/// the standardization record and intercept stored here are per-fold training
/// statistics averaged over folds, so prediction is self-contained.
struct RidgeModel {
    std::string target_name;
    int dimension = 0;
    int k = 0;
    std::uint64_t seed = 0;
    std::vector<RidgeFold> folds;
    Eigen::VectorXd averaged_weights;
    Eigen::VectorXd std_mean;
    Eigen::VectorXd std_scale;
    double intercept = 0.0;

    nlohmann::json to_json() const;
    static RidgeModel from_json(const nlohmann::json& j);
    void save(const std::string& path) const;
    static RidgeModel load(const std::string& path);
};

/// Predictions assembled fold by fold; entry i was produced by the one fold
/// whose training set excludes communities[i].
struct OutOfFoldPredictions {
    std::vector<CommunityId> communities;
    std::vector<int> fold;
    Eigen::VectorXd y_true;
    Eigen::VectorXd y_pred;
};

struct CrossValidationResult {
    RidgeModel model;
    OutOfFoldPredictions predictions;
};

struct RidgeOptions {
    std::vector<double> lambda_grid; // empty -> default_lambda_grid()
    int inner_folds = 5;
};

std::vector<double> default_lambda_grid();

/// Per fold: standardize on the training communities, tune lambda by inner
/// CV, fit, predict the held-out fold. Weights and training statistics are
/// averaged over folds into the final model.
CrossValidationResult cross_validated_fit(const CommunityFeatures& features,
                                          const TargetTable& targets, const FoldPlan& plan,
                                          const RidgeOptions& options = {});

/// Applies the model's standardization to a raw embedding, then the averaged
/// weights plus intercept.
double predict_sentence(const EmbeddingVector& x, const RidgeModel& model);

} // namespace geoling
