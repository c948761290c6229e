#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "contentious/corpus.hpp"
#include "contentious/featurize.hpp"
#include "contentious/model.hpp"

namespace contentious {

/// A labeled conversation with its precomputed annotations.
struct Example {
  LabeledConversation item;
  ConversationAnnotations annotations;

  int label() const { return static_cast<int>(item.label); }
};

struct ExperimentConfig {
  FeatureConfig features;
  double l2 = -1.0;  // < 0 selects 1/n_train
  std::uint64_t seed = 0;
  int folds = 10;
  unsigned threads = 0;  // 0 = hardware concurrency

  void validate() const;
  nlohmann::json to_json() const;
};

struct FoldFit {
  FittedVocabularies vocab;
  TrainedModel model;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

struct CvRun {
  CvReport report;
  std::vector<FoldFit> fits;
};

std::vector<int> labels_of(std::span<const Example> examples);

/// Stratified folds seeded from the stage seed "folds".
std::vector<int> fold_assignment(std::span<const Example> examples, const ExperimentConfig& config);

/// Features for the given examples at `fraction` of their comments.
std::vector<FeatureMap> feature_rows(std::span<const Example> examples, std::span<const std::size_t> which,
                                     const FeatureResources& resources, const ExperimentConfig& config,
                                     const FittedVocabularies& vocab, double fraction);

/// Fits vocabularies, standardization and model on full training
/// conversations.
FoldFit fit_on(std::span<const Example> examples, std::vector<std::size_t> train, std::vector<std::size_t> test,
               const FeatureResources& resources, const ExperimentConfig& config);

Metrics evaluate_fold(const FoldFit& fit, std::span<const Example> examples, const FeatureResources& resources,
                      const ExperimentConfig& config, double fraction);

/// Folds are trained in parallel and merged in fold order. The held-out
/// folds are evaluated at config.features.prefix_fraction.
CvRun cross_validate(std::span<const Example> examples, const FeatureResources& resources,
                     const ExperimentConfig& config);

/// Model trained on every example.
FoldFit fit_full(std::span<const Example> examples, const FeatureResources& resources,
                 const ExperimentConfig& config);

}  // namespace contentious
