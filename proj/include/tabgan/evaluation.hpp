#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tabgan/table.hpp"

namespace tabgan {

enum class MleTask { classification, regression };

// Downstream-utility report: learners trained on synthetic data, scored on
// held-out real data. Classification scores are F1, regression scores R^2.
struct MleReport {
  MleTask task = MleTask::classification;
  std::map<std::string, double> per_learner;  // learner -> mean score across seeds
  double best = 0.0;                          // max over per_learner
  std::vector<uint64_t> seeds_used;
  double mean_of_best = 0.0;  // mean over seeds of that seed's best learner
  std::vector<std::map<std::string, double>> per_seed;  // aligned with seeds_used
};

// Trains each learner on a seed-keyed bootstrap resample of `synthetic`
// (class-stratified for classification) and scores it on `real_test`.
// Learners: "logistic" (one-vs-rest beyond two classes) and "boosted_trees"
// for classification; "ridge" and "boosted_trees" for regression. Binary F1
// treats the second schema category as positive; more classes use macro-F1.
// Throws InvalidArgument on schema mismatch, a missing target column, empty
// inputs or seeds, a single-class or zero-variance target, or a target whose
// column kind does not fit the task.
MleReport mle(const Table& synthetic, const Table& real_test, MleTask task,
              const std::vector<uint64_t>& seeds);

// F1 of the positive class (labels 1 in `predicted`/`actual`); 0 when
// precision and recall are both undefined or zero.
double binary_f1(const std::vector<int>& actual, const std::vector<int>& predicted);

// Unweighted mean of per-class F1 over classes present in actual or
// predicted labels; absent classes are skipped, not zero-filled.
double macro_f1(const std::vector<int>& actual, const std::vector<int>& predicted,
                int n_classes);

// 1 - SS_res/SS_tot with the mean taken as sum/n, so predicting that mean
// scores exactly 0.0. May be negative. Throws on zero-variance actuals.
double r_squared(const std::vector<double>& actual, const std::vector<double>& predicted);

// Linear-interpolated quantile at rank h = (n-1)q over the sorted values.
// q must lie in [0, 1]; throws InvalidArgument on empty input.
double linear_quantile(std::vector<double> values, double q);

struct DcrQuantiles {
  double q25 = 0.0;
  double q50 = 0.0;
  double q75 = 0.0;
};

struct DcrReport {
  std::vector<double> distances_to_train;
  std::vector<double> distances_to_holdout;
  DcrQuantiles train_quantiles;
  DcrQuantiles holdout_quantiles;
};

// Distance to the closest record: for each synthetic row, the exact minimum
// l1 distance over all reference rows in the encoder's feature space
// (numerics min-max normalized on the fit table, categoricals one-hot, so a
// category mismatch contributes 2). Throws InvalidArgument on an empty
// reference or synthetic table.
std::vector<double> dcr(const Table& synthetic, const Table& reference,
                        const FeatureEncoder& encoder);

// Distances from each synthetic row to the train and holdout sets plus
// their (q25, q50, q75); a copy-heavy generator shows near-zero train
// distances with larger holdout ones.
DcrReport dcr_report(const Table& synthetic, const Table& train, const Table& holdout,
                     const FeatureEncoder& encoder);

std::string mle_report_to_json(const MleReport& report);
// One row per learner and seed: seed,learner,score.
std::string mle_report_to_csv(const MleReport& report);

std::string dcr_report_to_json(const DcrReport& report);
// One row per synthetic record: index,distance_to_train,distance_to_holdout.
std::string dcr_report_to_csv(const DcrReport& report);

}  // namespace tabgan
