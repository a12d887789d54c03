#pragma once

#include <cstdint>
#include <vector>

#include "tep/classify.hpp"
#include "tep/types.hpp"

// Leave-one-subject-out evaluation. AD is the positive class. Per-fold
// forest seeds derive from the run seed and fold index, and run seeds derive
// from the master seed and run index, so reports are reproducible and
// independent of fold/run scheduling.

namespace tep::evaluate {

// accuracy    = (TP + TN) / (FP + FN + TP + TN)
// sensitivity = TP / (TP + FN)
// specificity = TN / (TN + FP)
// precision   = TP / (TP + FP)
// f1          = 2 * precision * sensitivity / (precision + sensitivity)
// A 0/0 denominator yields 0 and appends the metric name to flags.
Metrics compute_metrics(const ConfusionCounts& counts);

// One LOSO pass in manifest order: subject i is predicted by a model trained
// on all the others.
ConfusionCounts loso_run(const std::vector<SubjectFeatures>& subjects,
                         const classify::ClassifierSpec& spec, std::uint64_t seed);

// runs repetitions with seeds derive_seed(master_seed, run); averaged
// metrics are the arithmetic mean of the per-run metrics.
EvaluationReport repeated_evaluation(const std::vector<SubjectFeatures>& subjects,
                                     const classify::ClassifierSpec& spec, int runs,
                                     std::uint64_t master_seed, int n_threads = 1);

}  // namespace tep::evaluate
