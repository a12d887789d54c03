#include "tep/evaluate.hpp"

#include <stdexcept>

#include "tep/parallel.hpp"
#include "tep/rng.hpp"

namespace tep::evaluate {

Metrics compute_metrics(const ConfusionCounts& c) {
  if (c.total() == 0) throw std::runtime_error("metrics need at least one prediction");
  const auto tp = static_cast<double>(c.tp);
  const auto tn = static_cast<double>(c.tn);
  const auto fp = static_cast<double>(c.fp);
  const auto fn = static_cast<double>(c.fn);
  Metrics m;
  m.accuracy = (tp + tn) / (fp + fn + tp + tn);
  const auto ratio = [&m](double num, double denom, const char* name) {
    if (denom == 0.0) {
      m.flags.push_back(name);
      return 0.0;
    }
    return num / denom;
  };
  m.sensitivity = ratio(tp, tp + fn, "sensitivity");
  m.specificity = ratio(tn, tn + fp, "specificity");
  m.precision = ratio(tp, tp + fp, "precision");
  m.f1 = ratio(2.0 * m.precision * m.sensitivity, m.precision + m.sensitivity, "f1");
  return m;
}

ConfusionCounts loso_run(const std::vector<SubjectFeatures>& subjects,
                         const classify::ClassifierSpec& spec, std::uint64_t seed) {
  if (subjects.size() < 2) throw std::runtime_error("LOSO needs at least 2 subjects");
  bool has_ad = false, has_hc = false;
  for (const auto& s : subjects) (s.label == Label::AD ? has_ad : has_hc) = true;
  if (!has_ad || !has_hc)
    throw std::runtime_error("LOSO needs both classes in the dataset");

  ConfusionCounts counts;
  std::vector<classify::Sample> train;
  train.reserve(subjects.size() - 1);
  for (std::size_t fold = 0; fold < subjects.size(); ++fold) {
    train.clear();
    for (std::size_t j = 0; j < subjects.size(); ++j) {
      if (j == fold) continue;
      classify::Sample s;
      s.x.assign(subjects[j].values.begin(), subjects[j].values.end());
      s.y = static_cast<int>(subjects[j].label);
      train.push_back(std::move(s));
    }
    const std::vector<double> query(subjects[fold].values.begin(),
                                    subjects[fold].values.end());
    const int predicted =
        spec.train_predict(train, query, derive_seed(seed, fold));
    const int actual = static_cast<int>(subjects[fold].label);
    if (actual == 1)
      (predicted == 1 ? counts.tp : counts.fn)++;
    else
      (predicted == 0 ? counts.tn : counts.fp)++;
  }
  return counts;
}

EvaluationReport repeated_evaluation(const std::vector<SubjectFeatures>& subjects,
                                     const classify::ClassifierSpec& spec, int runs,
                                     std::uint64_t master_seed, int n_threads) {
  if (runs < 1) throw std::runtime_error("runs must be >= 1");
  EvaluationReport report;
  report.runs.resize(static_cast<std::size_t>(runs));
  parallel_for(static_cast<std::size_t>(runs), n_threads, [&](std::size_t r) {
    RunResult& run = report.runs[r];
    run.run_index = static_cast<int>(r);
    run.seed = derive_seed(master_seed, r);
    run.counts = loso_run(subjects, spec, run.seed);
    run.metrics = compute_metrics(run.counts);
  });
  Metrics& avg = report.averaged;
  for (const auto& run : report.runs) {
    avg.accuracy += run.metrics.accuracy;
    avg.sensitivity += run.metrics.sensitivity;
    avg.specificity += run.metrics.specificity;
    avg.precision += run.metrics.precision;
    avg.f1 += run.metrics.f1;
  }
  const auto n = static_cast<double>(runs);
  avg.accuracy /= n;
  avg.sensitivity /= n;
  avg.specificity /= n;
  avg.precision /= n;
  avg.f1 /= n;
  return report;
}

}  // namespace tep::evaluate
