#pragma once

#include <vector>

#include "contentious/corpus.hpp"
#include "contentious/discourse.hpp"
#include "contentious/pipeline.hpp"
#include "contentious/synthetic.hpp"

namespace contentious::testing {

/// Labels a corpus and attaches rule-based acts and zero toxicity.
inline std::vector<Example> make_examples(const std::vector<Conversation>& convs) {
  std::vector<Example> out;
  for (auto& lc : label(convs).labeled) {
    Example e;
    e.annotations.acts = tag_conversation(lc.conversation);
    e.annotations.toxicity.comment_toxicities.assign(lc.conversation.comments.size(), 0.0);
    e.item = std::move(lc);
    out.push_back(std::move(e));
  }
  return out;
}

inline std::vector<Example> synthetic_examples(const SyntheticSpec& spec) {
  return make_examples(synthetic_corpus(spec));
}

inline ExperimentConfig tfidf_config(std::uint64_t seed = 0) {
  ExperimentConfig c;
  c.features.enabled_groups = {FeatureGroup::Tfidf};
  c.seed = seed;
  c.folds = 10;
  return c;
}

}  // namespace contentious::testing
