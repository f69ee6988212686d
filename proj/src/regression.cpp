#include "geoling/regression.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <Eigen/Cholesky>
#include <nlohmann/json.hpp>

#include "geoling/error.hpp"
#include "geoling/rng.hpp"

namespace geoling {

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd from_std(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double pearson_or(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double fallback) {
    const double ma = a.mean();
    const double mb = b.mean();
    const Eigen::VectorXd da = a.array() - ma;
    const Eigen::VectorXd db = b.array() - mb;
    const double denom = std::sqrt(da.squaredNorm() * db.squaredNorm());
    if (denom <= 0.0) return fallback;
    return da.dot(db) / denom;
}

} // namespace

int FoldPlan::fold_of(const CommunityId& id) const {
    const auto it = assignments.find(id);
    if (it == assignments.end()) throw FatalError("community not in fold plan: " + id.code());
    return it->second;
}

FoldPlan make_folds(const std::vector<CommunityId>& communities, int k, std::uint64_t seed) {
    if (k < 2) throw FatalError("fold count must be at least 2");
    if (static_cast<std::size_t>(k) > communities.size())
        throw FatalError("fold count " + std::to_string(k) + " exceeds community count " +
                         std::to_string(communities.size()));

    std::vector<CommunityId> order(communities);
    std::sort(order.begin(), order.end());
    order.erase(std::unique(order.begin(), order.end()), order.end());
    if (static_cast<std::size_t>(k) > order.size())
        throw FatalError("fold count exceeds distinct community count");

    SplitMix64 rng(seed);
    rng.shuffle(order);

    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    for (std::size_t i = 0; i < order.size(); ++i)
        plan.assignments[order[i]] = static_cast<int>(i % static_cast<std::size_t>(k)) + 1;
    return plan;
}

Eigen::VectorXd fit_ridge(const Eigen::MatrixXd& x_train, const Eigen::VectorXd& y_train,
                          double lambda) {
    if (lambda <= 0.0) throw FatalError("ridge lambda must be positive");
    if (x_train.rows() == 0) throw FatalError("ridge training set is empty");
    if (x_train.rows() != y_train.size())
        throw FatalError("ridge training rows and targets disagree");
    if (!all_finite(x_train) || !all_finite(y_train))
        throw FatalError("ridge training data is not finite");

    const double n = static_cast<double>(x_train.rows());
    Eigen::MatrixXd gram = x_train.transpose() * x_train;
    gram.diagonal().array() += 2.0 * n * lambda;
    const Eigen::VectorXd xty = x_train.transpose() * y_train;
    return Eigen::LLT<Eigen::MatrixXd>(gram).solve(xty);
}

double tune_lambda(const Eigen::MatrixXd& x_train, const Eigen::VectorXd& y_train,
                   const std::vector<double>& grid, int inner_folds, std::uint64_t seed) {
    if (grid.empty()) throw FatalError("lambda grid is empty");
    for (const double g : grid) {
        if (!(g > 0.0)) throw FatalError("lambda grid values must be positive");
    }
    if (inner_folds < 2) throw FatalError("inner fold count must be at least 2");
    const Eigen::Index n = x_train.rows();
    if (n != y_train.size()) throw FatalError("tune_lambda rows and targets disagree");

    const double y_mean = y_train.mean();
    if ((y_train.array() - y_mean).abs().maxCoeff() == 0.0)
        throw FatalError("constant target: cannot tune lambda");

    const double largest = *std::max_element(grid.begin(), grid.end());
    const int folds = std::min<int>(inner_folds, static_cast<int>(n));
    if (folds < 2) return largest;

    // Deterministic inner split: seeded shuffle of row indices, round-robin.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    SplitMix64 rng(seed);
    rng.shuffle(order);
    std::vector<int> fold_of(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < order.size(); ++i)
        fold_of[static_cast<std::size_t>(order[i])] = static_cast<int>(i % folds);

    double best_lambda = 0.0;
    double best_score = -2.0;
    bool have_best = false;
    for (const double lambda : grid) {
        Eigen::VectorXd pooled(n);
        for (int f = 0; f < folds; ++f) {
            std::vector<Eigen::Index> train_rows, test_rows;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (fold_of[static_cast<std::size_t>(i)] == f) test_rows.push_back(i);
                else train_rows.push_back(i);
            }
            Eigen::MatrixXd x_tr(train_rows.size(), x_train.cols());
            Eigen::VectorXd y_tr(train_rows.size());
            for (std::size_t i = 0; i < train_rows.size(); ++i) {
                x_tr.row(static_cast<Eigen::Index>(i)) = x_train.row(train_rows[i]);
                y_tr[static_cast<Eigen::Index>(i)] = y_train[train_rows[i]];
            }
            const double m = y_tr.mean();
            const Eigen::VectorXd w = fit_ridge(x_tr, y_tr.array() - m, lambda);
            for (const auto i : test_rows) pooled[i] = x_train.row(i).dot(w) + m;
        }
        // A degenerate (constant) prediction carries no ranking signal; score
        // it below any real correlation.
        const double score = pearson_or(pooled, y_train, -2.0);
        if (!have_best || score > best_score ||
            (score == best_score && lambda > best_lambda)) {
            have_best = true;
            best_score = score;
            best_lambda = lambda;
        }
    }
    return best_lambda;
}

std::vector<double> default_lambda_grid() {
    // 10 logarithmically spaced values in [1e-4, 1e4].
    std::vector<double> grid;
    grid.reserve(10);
    for (int i = 0; i < 10; ++i)
        grid.push_back(std::pow(10.0, -4.0 + 8.0 * static_cast<double>(i) / 9.0));
    return grid;
}

CrossValidationResult cross_validated_fit(const CommunityFeatures& features,
                                          const TargetTable& targets, const FoldPlan& plan,
                                          const RidgeOptions& options) {
    const std::size_t a = features.communities.size();
    if (a == 0) throw FatalError("no communities to fit");
    if (targets.entries.size() != a)
        throw FatalError("features and targets cover different communities");
    for (const auto& id : features.communities) {
        if (!targets.entries.contains(id))
            throw FatalError("community " + id.code() + " has features but no target");
    }
    if (plan.assignments.size() != a)
        throw FatalError("fold plan does not cover the feature communities");

    const std::vector<double> grid =
        options.lambda_grid.empty() ? default_lambda_grid() : options.lambda_grid;
    const Eigen::Index d = features.matrix.cols();
    const int k = plan.k;

    // Test index lists per fold, ascending FIPS within each fold.
    std::vector<std::vector<std::size_t>> test_idx(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < a; ++i) {
        const int fold = plan.fold_of(features.communities[i]);
        test_idx[static_cast<std::size_t>(fold - 1)].push_back(i);
    }

    RidgeModel model;
    model.target_name = targets.target_name;
    model.dimension = static_cast<int>(d);
    model.k = k;
    model.seed = plan.seed;
    model.averaged_weights = Eigen::VectorXd::Zero(d);
    model.std_mean = Eigen::VectorXd::Zero(d);
    model.std_scale = Eigen::VectorXd::Zero(d);
    model.intercept = 0.0;

    OutOfFoldPredictions oof;
    oof.y_true.resize(static_cast<Eigen::Index>(a));
    oof.y_pred.resize(static_cast<Eigen::Index>(a));
    Eigen::Index out_row = 0;

    for (int fold = 1; fold <= k; ++fold) {
        const auto& test = test_idx[static_cast<std::size_t>(fold - 1)];
        std::vector<std::size_t> train;
        train.reserve(a - test.size());
        for (std::size_t i = 0; i < a; ++i) {
            if (plan.fold_of(features.communities[i]) != fold) train.push_back(i);
        }
        if (train.empty()) throw FatalError("fold " + std::to_string(fold) + " has no training data");

        Eigen::MatrixXd x_tr(train.size(), d);
        Eigen::VectorXd y_tr(train.size());
        for (std::size_t i = 0; i < train.size(); ++i) {
            x_tr.row(static_cast<Eigen::Index>(i)) =
                features.matrix.row(static_cast<Eigen::Index>(train[i]));
            y_tr[static_cast<Eigen::Index>(i)] =
                targets.entries.at(features.communities[train[i]]);
        }

        // Column standardization on the training communities only; constant
        // columns get scale 1 so they standardize to zero.
        const Eigen::RowVectorXd col_mean = x_tr.colwise().mean();
        Eigen::MatrixXd x_std = x_tr.rowwise() - col_mean;
        Eigen::RowVectorXd col_scale =
            (x_std.array().square().colwise().mean()).sqrt();
        for (Eigen::Index j = 0; j < d; ++j) {
            if (col_scale[j] < 1e-12) col_scale[j] = 1.0;
        }
        x_std.array().rowwise() /= col_scale.array();

        const double y_mean = y_tr.mean();
        const Eigen::VectorXd y_centered = y_tr.array() - y_mean;

        const std::uint64_t tune_seed = mix_seed(plan.seed, static_cast<std::uint64_t>(fold));
        const double lambda =
            tune_lambda(x_std, y_centered, grid, options.inner_folds, tune_seed);
        const Eigen::VectorXd weights = fit_ridge(x_std, y_centered, lambda);

        RidgeFold fold_record;
        fold_record.lambda = lambda;
        fold_record.weights = weights;
        for (const auto i : train) fold_record.train_communities.push_back(features.communities[i]);
        model.folds.push_back(std::move(fold_record));

        model.averaged_weights += weights;
        model.std_mean += col_mean.transpose();
        model.std_scale += col_scale.transpose();
        model.intercept += y_mean;

        for (const auto i : test) {
            const Eigen::RowVectorXd x_test_std =
                (features.matrix.row(static_cast<Eigen::Index>(i)) - col_mean).array() /
                col_scale.array();
            oof.communities.push_back(features.communities[i]);
            oof.fold.push_back(fold);
            oof.y_true[out_row] = targets.entries.at(features.communities[i]);
            oof.y_pred[out_row] = x_test_std.dot(weights) + y_mean;
            ++out_row;
        }
    }

    const double kd = static_cast<double>(k);
    model.averaged_weights /= kd;
    model.std_mean /= kd;
    model.std_scale /= kd;
    model.intercept /= kd;

    return CrossValidationResult{std::move(model), std::move(oof)};
}

double predict_sentence(const EmbeddingVector& x, const RidgeModel& model) {
    if (x.size() != model.dimension)
        throw FatalError("embedding dimension " + std::to_string(x.size()) +
                         " does not match model dimension " + std::to_string(model.dimension));
    const Eigen::ArrayXd standardized =
        (x.array() - model.std_mean.array()) / model.std_scale.array();
    return standardized.matrix().dot(model.averaged_weights) + model.intercept;
}

nlohmann::json RidgeModel::to_json() const {
    nlohmann::json per_fold = nlohmann::json::array();
    for (std::size_t i = 0; i < folds.size(); ++i) {
        std::vector<std::string> train;
        train.reserve(folds[i].train_communities.size());
        for (const auto& id : folds[i].train_communities) train.push_back(id.code());
        per_fold.push_back({{"fold", i + 1},
                            {"lambda", folds[i].lambda},
                            {"weights", to_std(folds[i].weights)},
                            {"train_communities", train}});
    }
    return nlohmann::json{{"target_name", target_name},
                          {"dimension", dimension},
                          {"k", k},
                          {"seed", seed},
                          {"per_fold", per_fold},
                          {"averaged_weights", to_std(averaged_weights)},
                          {"standardization",
                           {{"mean", to_std(std_mean)}, {"scale", to_std(std_scale)}}},
                          {"intercept", intercept}};
}

RidgeModel RidgeModel::from_json(const nlohmann::json& j) {
    RidgeModel model;
    model.target_name = j.at("target_name").get<std::string>();
    model.dimension = j.at("dimension").get<int>();
    model.k = j.at("k").get<int>();
    model.seed = j.at("seed").get<std::uint64_t>();
    model.averaged_weights = from_std(j.at("averaged_weights").get<std::vector<double>>());
    model.std_mean = from_std(j.at("standardization").at("mean").get<std::vector<double>>());
    model.std_scale = from_std(j.at("standardization").at("scale").get<std::vector<double>>());
    model.intercept = j.at("intercept").get<double>();
    for (const auto& f : j.at("per_fold")) {
        RidgeFold fold;
        fold.lambda = f.at("lambda").get<double>();
        fold.weights = from_std(f.at("weights").get<std::vector<double>>());
        for (const auto& id : f.at("train_communities"))
            fold.train_communities.push_back(CommunityId::parse(id.get<std::string>()));
        model.folds.push_back(std::move(fold));
    }
    if (static_cast<int>(model.folds.size()) != model.k)
        throw FatalError("model file fold count does not match k");
    if (model.averaged_weights.size() != model.dimension ||
        model.std_mean.size() != model.dimension || model.std_scale.size() != model.dimension)
        throw FatalError("model file dimension mismatch");
    return model;
}

void RidgeModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw FatalError("cannot write model file: " + path);
    out << to_json().dump(2) << '\n';
}

RidgeModel RidgeModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FatalError("cannot read model file: " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
}

} // namespace geoling
