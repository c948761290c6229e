#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "contentious/corpus.hpp"

namespace contentious {

enum class SignalPlacement { Post, LastComment };

/// Generated corpus with a planted token. The first half of the
/// conversations share the lowest upvote ratio, so labeling marks exactly
/// that half contentious.
struct SyntheticSpec {
  std::size_t n_conversations = 400;
  std::size_t comments_per_conversation = 10;
  double contentious_rate = 0.9;      // share of contentious conversations carrying the token
  double non_contentious_rate = 0.1;  // share of non-contentious conversations carrying the token
  SignalPlacement placement = SignalPlacement::Post;
  std::string token = "zyx";
  std::uint64_t seed = 1;
};

std::vector<Conversation> synthetic_corpus(const SyntheticSpec& spec);

}  // namespace contentious
