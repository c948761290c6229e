#include "contentious/pipeline.hpp"

#include <numeric>

#include "contentious/errors.hpp"
#include "contentious/hash.hpp"
#include "contentious/parallel.hpp"

namespace contentious {

using nlohmann::json;

void ExperimentConfig::validate() const {
  features.validate();
  if (folds < 2) throw ConfigError("folds must be >= 2");
  if (!std::isfinite(l2)) throw ConfigError("l2 must be finite");
}

json ExperimentConfig::to_json() const {
  return json{{"feature_groups", to_string(features.enabled_groups)},
              {"prefix_fraction", features.prefix_fraction},
              {"max_df", features.max_df},
              {"location_top_k", features.location_top_k},
              {"standardize", features.standardize},
              {"l2", l2 < 0.0 ? json("1/n") : json(l2)},
              {"seed", seed},
              {"folds", folds}};
}

std::vector<int> labels_of(std::span<const Example> examples) {
  std::vector<int> y;
  y.reserve(examples.size());
  for (const auto& e : examples) y.push_back(e.label());
  return y;
}

std::vector<int> fold_assignment(std::span<const Example> examples, const ExperimentConfig& config) {
  return stratified_folds(labels_of(examples), config.folds, derive_seed(config.seed, "folds"));
}

std::vector<FeatureMap> feature_rows(std::span<const Example> examples, std::span<const std::size_t> which,
                                     const FeatureResources& resources, const ExperimentConfig& config,
                                     const FittedVocabularies& vocab, double fraction) {
  FeatureConfig fc = config.features;
  fc.prefix_fraction = fraction;
  std::vector<FeatureMap> rows(which.size());
  for (std::size_t k = 0; k < which.size(); ++k) {
    const auto& e = examples[which[k]];
    rows[k] = assemble(e.item.conversation, e.annotations, resources, fc, vocab).flatten();
  }
  return rows;
}

FoldFit fit_on(std::span<const Example> examples, std::vector<std::size_t> train, std::vector<std::size_t> test,
               const FeatureResources& resources, const ExperimentConfig& config) {
  FoldFit fit;
  fit.train = std::move(train);
  fit.test = std::move(test);
  std::vector<const Conversation*> convs;
  std::vector<int> y;
  for (auto i : fit.train) {
    convs.push_back(&examples[i].item.conversation);
    y.push_back(examples[i].label());
  }
  fit.vocab = fit_vocabularies(convs, resources, config.features);
  const auto rows = feature_rows(examples, fit.train, resources, config, fit.vocab, 1.0);
  TrainOptions opts;
  opts.l2 = config.l2;
  opts.seed = config.seed;
  opts.standardize = config.features.standardize;
  fit.model = contentious::train(std::span<const FeatureMap>(rows), y, opts);
  return fit;
}

Metrics evaluate_fold(const FoldFit& fit, std::span<const Example> examples, const FeatureResources& resources,
                      const ExperimentConfig& config, double fraction) {
  const auto rows = feature_rows(examples, fit.test, resources, config, fit.vocab, fraction);
  std::vector<int> truth, pred;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    truth.push_back(examples[fit.test[k]].label());
    pred.push_back(predict_class(predict_proba(fit.model, rows[k])));
  }
  return metrics(truth, pred);
}

CvRun cross_validate(std::span<const Example> examples, const FeatureResources& resources,
                     const ExperimentConfig& config) {
  config.validate();
  CvRun run;
  run.report.fold_assignment = fold_assignment(examples, config);
  run.report.config = config.to_json();
  const auto k = static_cast<std::size_t>(config.folds);
  run.fits.resize(k);
  run.report.folds.resize(k);
  parallel_for(k, config.threads, [&](std::size_t f) {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < examples.size(); ++i)
      (static_cast<std::size_t>(run.report.fold_assignment[i]) == f ? test : train).push_back(i);
    run.fits[f] = fit_on(examples, std::move(train), std::move(test), resources, config);
    run.report.folds[f] = evaluate_fold(run.fits[f], examples, resources, config, config.features.prefix_fraction);
  });
  run.report.mean = CvReport::average(run.report.folds);
  return run;
}

FoldFit fit_full(std::span<const Example> examples, const FeatureResources& resources,
                 const ExperimentConfig& config) {
  config.validate();
  std::vector<std::size_t> all(examples.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return fit_on(examples, std::move(all), {}, resources, config);
}

}  // namespace contentious
