#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "contentious/corpus.hpp"
#include "contentious/errors.hpp"

using namespace contentious;

namespace {

Conversation conv(std::string id, double ratio, std::string title = "a post") {
  Conversation c;
  c.id = std::move(id);
  c.title = std::move(title);
  c.upvote_ratio = ratio;
  return c;
}

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("ingest well-formed records") {
    std::istringstream in(
        R"({"id":"a","title":"t1","upvote_ratio":0.9}
{"id":"b","title":"t2","upvote_ratio":0.6,"selftext":"body","subreddit":"news"}
{"id":"c","title":"t3","upvote_ratio":0.5,"author":null}
)");
    const auto r = ingest(in, DumpSchema::ConversationJsonl);
    CHECK(r.conversations.size() == 3);
    CHECK(r.rejects.empty());
    CHECK(r.conversations[2].author == kDeletedAuthor);
  }

  TEST_CASE("missing upvote ratio is rejected with its line number") {
    std::istringstream in("{\"id\":\"a\",\"title\":\"t\",\"upvote_ratio\":0.7}\n{\"id\":\"b\",\"title\":\"t\"}\nnot json\n");
    const auto r = ingest(in, DumpSchema::ConversationJsonl);
    CHECK(r.conversations.size() == 1);
    REQUIRE(r.rejects.size() == 2);
    CHECK(r.rejects[0].line_no == 2);
    CHECK(r.rejects[0].reason.find("upvote_ratio") != std::string::npos);
    CHECK(r.rejects[1].line_no == 3);
  }

  TEST_CASE("ratio outside the unit interval is rejected") {
    std::istringstream in("{\"id\":\"a\",\"title\":\"t\",\"upvote_ratio\":1.2}\n");
    CHECK(ingest(in, DumpSchema::ConversationJsonl).rejects.size() == 1);
  }

  TEST_CASE("comments are sorted by timestamp then id") {
    std::istringstream in(R"({"id":"p","title":"t","upvote_ratio":0.7,"comments":[)"
                          R"({"id":"x","body":"30","created_utc":30},{"id":"y","body":"10","created_utc":10},)"
                          R"({"id":"b","body":"20b","created_utc":20},{"id":"a","body":"20a","created_utc":"20"}]})"
                          "\n");
    const auto r = ingest(in, DumpSchema::ConversationJsonl);
    REQUIRE(r.conversations.size() == 1);
    std::vector<std::string> bodies;
    for (const auto& c : r.conversations[0].comments) bodies.push_back(c.body);
    CHECK(bodies == std::vector<std::string>{"10", "20a", "20b", "30"});
  }

  TEST_CASE("unreadable dump is an IO error") {
    CHECK_THROWS_AS(ingest(std::filesystem::path("/nonexistent/dump.jsonl"), DumpSchema::ConversationJsonl), IoError);
  }

  TEST_CASE("json round trip") {
    std::istringstream in(R"({"id":"p","title":"t","selftext":"s","upvote_ratio":0.7,"subreddit":"r","created_utc":5,)"
                          R"("comments":[{"id":"c","author":"u","body":"b","created_utc":6,"parent_id":"t3_p"}]})"
                          "\n");
    const auto c = ingest(in, DumpSchema::ConversationJsonl).conversations.at(0);
    const auto back = conversation_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
  }

  TEST_CASE("topic filter is case-insensitive and respects token boundaries") {
    const auto topic = TopicSpec::make("abortion", {"Pro-Life"});
    CHECK(topic.keywords == std::vector<std::string>{"pro-life"});
    CHECK(matches_topic(conv("1", 0.7, "New PRO-LIFE rally"), topic));
    CHECK_FALSE(matches_topic(conv("2", 0.7, "prolific poster"), topic));
    CHECK_FALSE(matches_topic(conv("3", 0.7, "anti-pro-lifers"), topic));
  }

  TEST_CASE("topic filter looks at comments and multi-word phrases") {
    const auto topic = TopicSpec::make("guns", {"gun control"});
    auto a = conv("a", 0.7, "weather today");
    auto b = conv("b", 0.7, "sports");
    Comment cm;
    cm.id = "c1";
    cm.body = "What about GUN\n  control laws?";
    b.comments.push_back(cm);
    auto c = conv("c", 0.7, "gun collection");
    const auto kept = filter_topic({a, b, c}, topic);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].id == "b");
    CHECK(filter_topic(kept, topic).size() == 1);
  }

  TEST_CASE("empty keyword list is a configuration error") {
    CHECK_THROWS_AS(TopicSpec::make("x", {}), ConfigError);
    CHECK_THROWS_AS(TopicSpec::make("x", {"  "}), ConfigError);
    TopicSpec raw{"x", {}};
    CHECK_THROWS_AS(filter_topic({conv("a", 0.7)}, raw), ConfigError);
  }

  TEST_CASE("nearest-rank quartile labels") {
    const auto r = label({conv("a", 0.5), conv("b", 0.6), conv("c", 0.7), conv("d", 0.8)});
    CHECK(r.threshold == 0.5);
    REQUIRE(r.contentious_count() == 1);
    CHECK(r.labeled[0].label == Label::Contentious);
  }

  TEST_CASE("ratios below one half are excluded before the quartile") {
    const auto r = label({conv("x", 0.4), conv("a", 0.6), conv("b", 0.7), conv("c", 0.8), conv("d", 0.9)});
    CHECK(r.n_discarded == 1);
    CHECK(r.labeled.size() == 4);
    CHECK(r.threshold == 0.6);
    for (const auto& lc : r.labeled) CHECK(lc.conversation.upvote_ratio >= 0.5);
  }

  TEST_CASE("ties at the threshold are contentious") {
    const auto r = label({conv("a", 0.6), conv("b", 0.6), conv("c", 0.6), conv("d", 0.9)});
    CHECK(r.contentious_count() == 3);
  }

  TEST_CASE("distinct ratios give ceil(n/4) contentious") {
    std::mt19937_64 rng(11);
    for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 7u, 13u, 100u, 101u}) {
      std::vector<Conversation> convs;
      for (std::size_t i = 0; i < n; ++i) convs.push_back(conv(std::to_string(i), 0.5 + 0.4 * (i + 0.5) / n));
      std::shuffle(convs.begin(), convs.end(), rng);
      CHECK(label(convs).contentious_count() == (n + 3) / 4);
    }
  }

  TEST_CASE("no eligible conversation is a data error") {
    CHECK_THROWS_AS(label({conv("a", 0.2)}), DataError);
    CHECK_THROWS_AS(label({}), DataError);
  }

  TEST_CASE("labeling is idempotent") {
    std::vector<Conversation> convs;
    for (int i = 0; i < 40; ++i) convs.push_back(conv(std::to_string(i), 0.3 + 0.017 * i));
    const auto first = label(convs);
    std::vector<Conversation> again;
    for (const auto& lc : first.labeled) again.push_back(lc.conversation);
    const auto second = label(again);
    REQUIRE(second.labeled.size() == first.labeled.size());
    CHECK(second.threshold == first.threshold);
    for (std::size_t i = 0; i < first.labeled.size(); ++i) CHECK(second.labeled[i].label == first.labeled[i].label);
  }

  TEST_CASE("global and per-topic scopes") {
    std::vector<Conversation> low{conv("a", 0.5), conv("b", 0.55), conv("c", 0.6), conv("d", 0.65)};
    std::vector<Conversation> high{conv("e", 0.9), conv("f", 0.91), conv("g", 0.92), conv("h", 0.93)};
    const auto per = label_groups({low, high}, LabelScope::PerTopic);
    CHECK(per[0].contentious_count() == 1);
    CHECK(per[1].contentious_count() == 1);
    const auto global = label_groups({low, high}, LabelScope::Global);
    CHECK(global[0].threshold == 0.55);
    CHECK(global[0].contentious_count() == 2);
    CHECK(global[1].contentious_count() == 0);
    CHECK(parse_label_scope("per-topic") == LabelScope::PerTopic);
    CHECK_THROWS_AS(parse_label_scope("weird"), ConfigError);
  }

  TEST_CASE("labeled json keeps the label") {
    const auto r = label({conv("a", 0.5), conv("b", 0.9)});
    for (const auto& lc : r.labeled) {
      const auto back = labeled_from_json(to_json(lc));
      CHECK(back.label == lc.label);
      CHECK(back.quartile_threshold == lc.quartile_threshold);
    }
  }
}
