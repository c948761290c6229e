#include <doctest.h>

#include <sstream>

#include "contentious/errors.hpp"
#include "contentious/userfactors.hpp"

using namespace contentious;

namespace {

UserHistory history(std::vector<std::string> bodies, std::optional<std::int64_t> created = std::nullopt) {
  UserHistory h;
  h.author = "u";
  h.account_created_utc = created;
  for (auto& b : bodies) h.posts.push_back({std::move(b), 0});
  return h;
}

GenderedNouns nouns() {
  std::istringstream in("father\tmale\nman\tmale\nmom\tfemale\nwoman\tfemale\nenby\tnonbinary\n");
  return parse_gendered_nouns(in);
}

Gazetteer gazetteer() {
  std::istringstream in("aurora, colorado\taurora, colorado, us\naurora\taurora, illinois, us\nboston\tboston, massachusetts, us\n");
  return parse_gazetteer(in);
}

UserProfile profile(std::string author, Gender g, std::vector<std::string> locs = {}, std::int64_t posts = 0,
                    std::optional<std::int64_t> created = std::nullopt) {
  UserProfile p;
  p.author = std::move(author);
  p.gender = g;
  p.locations = std::move(locs);
  p.topic_post_count = posts;
  p.account_created_utc = created;
  return p;
}

Conversation thread(std::string op, std::vector<std::string> commenters, std::int64_t created = 0) {
  Conversation c;
  c.id = "p";
  c.title = "t";
  c.author = std::move(op);
  c.created_utc = created;
  for (std::size_t i = 0; i < commenters.size(); ++i) {
    Comment cm;
    cm.id = "c" + std::to_string(i);
    cm.author = commenters[i];
    cm.body = "x";
    c.comments.push_back(cm);
  }
  return c;
}

}  // namespace

TEST_SUITE("userfactors") {
  TEST_CASE("gender from a copula and a gendered head noun") {
    CHECK(extract_gender(history({"I am a father of two"}), nouns()) == Gender::Male);
    CHECK(extract_gender(history({"I am an engineer"}), nouns()) == Gender::Unknown);
    CHECK(extract_gender(history({"i'm a mom", "I am a man"}), nouns()) == Gender::Unknown);
    CHECK(extract_gender(history({"im a mom", "i'm a proud mom.", "I am a man"}), nouns()) == Gender::Female);
    CHECK(extract_gender(history({}), nouns()) == Gender::Unknown);
  }

  TEST_CASE("gender needs the noun within four tokens of the copula") {
    CHECK(extract_gender(history({"I am a very proud father"}), nouns()) == Gender::Male);
    CHECK(extract_gender(history({"I am not sure what my father thinks"}), nouns()) == Gender::Unknown);
  }

  TEST_CASE("excluded markers never vote") {
    const auto n = nouns();
    CHECK(n.is_excluded("enby"));
    CHECK_FALSE(n.is_excluded("man"));
    CHECK(extract_gender(history({"I am enby", "I am a man"}), n) == Gender::Male);
  }

  TEST_CASE("locations are geocoded by longest match") {
    CHECK(extract_locations(history({"I live in Aurora, Colorado"}), gazetteer()) ==
          std::vector<std::string>{"aurora, colorado, us"});
    CHECK(extract_locations(history({"I'm from the moon base"}), gazetteer()) ==
          std::vector<std::string>{"the moon base"});
    CHECK(extract_locations(history({"Nothing to see here"}), gazetteer()).empty());
  }

  TEST_CASE("locations are deduplicated in first-seen order") {
    const auto locs = extract_locations(
        history({"I am in Boston. Later: I live in Aurora, Colorado!", "i'm from boston"}), gazetteer());
    CHECK(locs == std::vector<std::string>{"boston, massachusetts, us", "aurora, colorado, us"});
  }

  TEST_CASE("prolificity uses strict inequality") {
    CHECK(prolificity(30) == std::array<bool, 3>{true, false, false});
    CHECK(prolificity(25) == std::array<bool, 3>{false, false, false});
    CHECK(prolificity(150) == std::array<bool, 3>{true, true, true});
    CHECK(prolificity(0) == std::array<bool, 3>{false, false, false});
  }

  TEST_CASE("prolificity flags are monotone") {
    for (std::int64_t n = 0; n <= 200; ++n) {
      const auto f = prolificity(n);
      if (f[2]) CHECK(f[1]);
      if (f[1]) CHECK(f[0]);
    }
  }

  TEST_CASE("gender fractions over distinct participants") {
    std::map<std::string, UserProfile> profiles{{"a", profile("a", Gender::Female)},
                                                {"b", profile("b", Gender::Male)},
                                                {"c", profile("c", Gender::Male)},
                                                {"d", profile("d", Gender::Unknown)}};
    const auto agg = aggregate_conversation_users(thread("a", {"b", "c", "d", "b", std::string(kDeletedAuthor)}), profiles);
    CHECK(agg.gender.at("frac_female") == 0.25);
    CHECK(agg.gender.at("frac_male") == 0.5);
    CHECK(agg.gender.at("frac_unknown_gender") == 0.25);
  }

  TEST_CASE("missing profiles count as unknown") {
    const auto agg = aggregate_conversation_users(thread("x", {"y", "z"}), {});
    CHECK(agg.gender.at("frac_unknown_gender") == 1.0);
    CHECK(agg.gender.at("frac_female") == 0.0);
    CHECK(agg.location.empty());
    CHECK(agg.prolific.at("frac_prolific_25") == 0.0);
  }

  TEST_CASE("location counts participants") {
    std::map<std::string, UserProfile> profiles{
        {"a", profile("a", Gender::Female, {"aurora, colorado, us"})},
        {"b", profile("b", Gender::Male, {"aurora, colorado, us", "boston, massachusetts, us"})}};
    const auto agg = aggregate_conversation_users(thread("a", {"b"}), profiles);
    CHECK(agg.location.at("aurora, colorado, us") == 2.0);
    CHECK(agg.location.at("boston, massachusetts, us") == 1.0);
  }

  TEST_CASE("prolific fractions and account ages") {
    const std::int64_t day = 86400;
    std::map<std::string, UserProfile> profiles{{"a", profile("a", Gender::Male, {}, 30, 0)},
                                                {"b", profile("b", Gender::Male, {}, 120, 10 * day)}};
    const auto agg = aggregate_conversation_users(thread("a", {"b"}, 20 * day), profiles);
    CHECK(agg.prolific.at("frac_prolific_25") == 1.0);
    CHECK(agg.prolific.at("frac_prolific_50") == 0.5);
    CHECK(agg.prolific.at("frac_prolific_100") == 0.5);
    CHECK(agg.prolific.at("mean_account_age_days") == 15.0);
    CHECK(agg.prolific.at("max_account_age_days") == 20.0);
  }

  TEST_CASE("account ages are invariant to a common time shift") {
    const std::int64_t shift = 123456789;
    std::map<std::string, UserProfile> p1{{"a", profile("a", Gender::Male, {}, 0, 1000)}};
    std::map<std::string, UserProfile> p2{{"a", profile("a", Gender::Male, {}, 0, 1000 + shift)}};
    const auto a1 = aggregate_conversation_users(thread("a", {}, 500000), p1);
    const auto a2 = aggregate_conversation_users(thread("a", {}, 500000 + shift), p2);
    CHECK(a1.prolific == a2.prolific);
    CHECK(profile("a", Gender::Male, {}, 0, 100).account_age_days_at(50) == 0.0);
    CHECK_FALSE(profile("a", Gender::Male).account_age_days_at(50).has_value());
  }

  TEST_CASE("gender fractions sum to one") {
    std::map<std::string, UserProfile> profiles{{"a", profile("a", Gender::Female)}, {"b", profile("b", Gender::Male)}};
    for (const auto& c : {thread("a", {}), thread("a", {"b", "q"}), thread("q", {"r"})}) {
      const auto g = aggregate_conversation_users(c, profiles).gender;
      CHECK(g.at("frac_female") + g.at("frac_male") + g.at("frac_unknown_gender") == doctest::Approx(1.0));
    }
  }

  TEST_CASE("topic post counts skip deleted authors") {
    auto c = thread("a", {"b", "a", std::string(kDeletedAuthor)});
    const auto counts = topic_post_counts({c, c});
    CHECK(counts.at("a") == 4);
    CHECK(counts.at("b") == 2);
    CHECK_FALSE(counts.count(std::string(kDeletedAuthor)));
  }

  TEST_CASE("profiles from histories") {
    std::istringstream in(
        "{\"author\":\"a\",\"account_created_utc\":5,\"posts\":[{\"body\":\"I am a mom. I live in Boston\",\"created_utc\":9}]}\n");
    const auto hs = parse_user_histories(in);
    REQUIRE(hs.size() == 1);
    const auto profiles = build_profiles(hs, {{"a", 3}, {"z", 1}}, nouns(), gazetteer());
    CHECK(profiles.at("a").gender == Gender::Female);
    CHECK(profiles.at("a").locations == std::vector<std::string>{"boston, massachusetts, us"});
    CHECK(profiles.at("a").topic_post_count == 3);
    CHECK(profiles.at("z").gender == Gender::Unknown);
  }

  TEST_CASE("malformed history line is a format error") {
    std::istringstream in("{\"author\":\"a\",\"posts\":[]}\nnot json\n");
    CHECK_THROWS_AS(parse_user_histories(in), FormatError);
  }
}
