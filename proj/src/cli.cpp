#include "contentious/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "contentious/corpus.hpp"
#include "contentious/discourse.hpp"
#include "contentious/errors.hpp"
#include "contentious/explain.hpp"
#include "contentious/featurize.hpp"
#include "contentious/hash.hpp"
#include "contentious/model.hpp"
#include "contentious/pipeline.hpp"
#include "contentious/synthetic.hpp"
#include "contentious/toxicity.hpp"
#include "contentious/userfactors.hpp"
#include "text_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace contentious {

namespace {

const std::map<std::string, std::string>& defaults() {
  static const std::map<std::string, std::string> d = {
      {"dump", ""},
      {"dump_schema", "conversation-jsonl"},
      {"topic", ""},  // comma-separated topic spec files
      {"label_scope", "per-topic"},
      {"histories", ""},
      {"sentiment_lexicon", ""},
      {"category_lexicon", ""},
      {"gendered_nouns", ""},
      {"gazetteer", ""},
      {"stopwords", ""},
      {"toxicity_lexicon", ""},
      {"acts_sidecar", ""},
      {"embedding_sidecar", ""},
      {"output_dir", "out"},
      {"groups", "tfidf"},
      {"baseline_groups", ""},
      {"l2", "-1"},
      {"seed", "0"},
      {"folds", "10"},
      {"fractions", "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0"},
      {"prefix_fraction", "1.0"},
      {"max_df", "0.95"},
      {"location_top_k", "200"},
      {"standardize", "true"},
      {"top_k", "10"},
      {"threads", "0"},
      {"toxicity_mode", "offline"},
      {"toxicity_endpoint", ""},
      {"toxicity_max_rps", "1"},
      {"toxicity_max_in_flight", "4"},
      {"toxicity_retry_limit", "3"},
      {"toxicity_fallback", "true"},
      {"toxicity_cache", ""},
  };
  return d;
}

const std::set<std::string> kPathKeys = {"dump",           "topic",       "histories",        "sentiment_lexicon",
                                         "category_lexicon", "gendered_nouns", "gazetteer",     "stopwords",
                                         "toxicity_lexicon", "acts_sidecar", "embedding_sidecar", "output_dir",
                                         "toxicity_cache"};

// Settings that never change artifact bytes.
const std::set<std::string> kUnhashedKeys = {"output_dir", "threads", "toxicity_cache"};

std::string unquote(std::string_view v) {
  v = detail::trim(v);
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) v = v.substr(1, v.size() - 2);
  return std::string(v);
}

}  // namespace

RunConfig::RunConfig() : values_(defaults()) {}

const std::vector<std::string>& RunConfig::known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [key, v] : defaults()) k.push_back(key);
    return k;
  }();
  return keys;
}

void RunConfig::set(const std::string& key, const std::string& value, const fs::path& base_dir) {
  if (!defaults().contains(key)) throw ConfigError("unknown config key '" + key + "'");
  if (key == "toxicity_api_key") throw ConfigError("the API key is read from $" + std::string(kToxicityApiKeyEnv));
  std::string v;
  if (kPathKeys.contains(key)) {
    for (auto part : detail::split(value, key == "topic" ? ',' : '\0')) {
      std::string one(detail::trim(part));
      if (one.empty()) continue;
      if (fs::path(one).is_relative()) one = (base_dir / one).lexically_normal().string();
      v += (v.empty() ? "" : ",") + one;
    }
  } else {
    v = value;
  }
  values_[key] = v;
}

void RunConfig::merge_stream(std::istream& in, const fs::path& base_dir) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const auto body = detail::trim(std::string_view(line).substr(0, hash));
    if (body.empty() || body.front() == '[') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw FormatError("config: expected key = value", line_no);
    const std::string key(detail::trim(body.substr(0, eq)));
    try {
      set(key, unquote(body.substr(eq + 1)), base_dir);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(e.what()) + " (config line " + std::to_string(line_no) + ")");
    }
  }
}

void RunConfig::merge_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  merge_stream(in, fs::absolute(path).parent_path());
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

std::optional<fs::path> RunConfig::path(const std::string& key) const {
  const auto& v = get(key);
  if (v.empty()) return std::nullopt;
  return fs::path(v);
}

double RunConfig::real(const std::string& key) const {
  const auto& v = get(key);
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
    return d;
  } catch (const std::logic_error&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

std::int64_t RunConfig::integer(const std::string& key) const {
  const auto& v = get(key);
  try {
    std::size_t used = 0;
    const auto n = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::logic_error&) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
}

bool RunConfig::flag(const std::string& key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::uint64_t RunConfig::seed() const {
  const auto& v = get("seed");
  try {
    std::size_t used = 0;
    const auto n = std::stoull(v, &used);
    if (used != v.size() || v.front() == '-') throw std::invalid_argument(v);
    return n;
  } catch (const std::logic_error&) {
    throw ConfigError("seed: expected a non-negative integer, got '" + v + "'");
  }
}

void RunConfig::validate() const {
  for (const auto& key : kPathKeys) {
    if (key == "output_dir" || key == "toxicity_cache") continue;
    for (auto part : detail::split(get(key), ','))
      if (!part.empty() && !fs::exists(fs::path(part))) throw ConfigError(key + ": no such file " + std::string(part));
  }
  parse_label_scope(get("label_scope"));
  if (!has("output_dir")) throw ConfigError("output_dir: must be set");
  parse_dump_schema(get("dump_schema"));
  parse_feature_groups(get("groups"));
  if (has("baseline_groups")) parse_feature_groups(get("baseline_groups"));
  seed();
  if (integer("folds") < 2) throw ConfigError("folds: must be >= 2");
  if (const double l2 = real("l2"); l2 < 0.0 && l2 != -1.0) throw ConfigError("l2: must be >= 0 (or -1 for 1/n)");
  if (const double f = real("prefix_fraction"); !(f > 0.0 && f <= 1.0)) throw ConfigError("prefix_fraction: must be in (0, 1]");
  if (const double m = real("max_df"); !(m > 0.0 && m <= 1.0)) throw ConfigError("max_df: must be in (0, 1]");
  if (integer("location_top_k") < 1) throw ConfigError("location_top_k: must be >= 1");
  if (integer("top_k") < 1) throw ConfigError("top_k: must be >= 1");
  if (integer("threads") < 0) throw ConfigError("threads: must be >= 0");
  for (auto f : detail::split(get("fractions"), ',')) {
    const std::string s(detail::trim(f));
    double v = 0;
    try {
      v = std::stod(s);
    } catch (const std::logic_error&) {
      throw ConfigError("fractions: bad value '" + s + "'");
    }
    if (!(v > 0.0 && v <= 1.0)) throw ConfigError("fractions: values must be in (0, 1]");
  }
  flag("standardize");
  flag("toxicity_fallback");
  parse_toxicity_mode(get("toxicity_mode"));
  if (!(real("toxicity_max_rps") > 0.0)) throw ConfigError("toxicity_max_rps: must be > 0");
  if (integer("toxicity_max_in_flight") < 1) throw ConfigError("toxicity_max_in_flight: must be >= 1");
  if (integer("toxicity_retry_limit") < 0) throw ConfigError("toxicity_retry_limit: must be >= 0");
}

std::string RunConfig::hash() const {
  // Paths are hashed by content so a moved checkout keeps its hash.
  std::string canon;
  for (const auto& [key, value] : values_) {
    if (kUnhashedKeys.contains(key)) continue;
    std::string v;
    if (kPathKeys.contains(key)) {
      for (auto part : detail::split(value, ',')) {
        const std::string one(part);
        if (!v.empty()) v += ",";
        v += fs::is_regular_file(one) ? "sha256:" + sha256_file(one) : one;
      }
    } else {
      v = value;
    }
    canon += key + "=" + v + "\n";
  }
  return sha256_hex(canon);
}

// ---------------------------------------------------------------------------

namespace {

struct Stage {
  const RunConfig& config;
  fs::path input_dir;   // where earlier stages left their artifacts
  fs::path output_dir;  // where this run writes
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;

  json meta() const { return json{{"config_hash", config.hash()}, {"seed", config.seed()}}; }
  std::string csv_meta() const {
    return "# config_hash=" + config.hash() + ",seed=" + std::to_string(config.seed()) + "\n";
  }

  fs::path in(const std::string& name) {
    const auto p = input_dir / name;
    if (!fs::exists(p)) throw ConfigError("missing input " + p.string() + " (run the earlier stage first)");
    inputs.push_back(p);
    return p;
  }
  fs::path resource(const std::string& key) {
    const auto p = config.path(key);
    if (!p) throw ConfigError(key + ": required for this stage");
    inputs.push_back(*p);
    return *p;
  }

  void write(const std::string& name, const std::string& content) {
    fs::create_directories(output_dir);
    const auto target = output_dir / name;
    const auto tmp = output_dir / (name + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot write " + tmp.string());
      out << content;
      if (!out) throw IoError("write failed for " + tmp.string());
    }
    fs::rename(tmp, target);
    outputs.push_back(target);
  }
  void write_json(const std::string& name, json j) {
    j["_meta"] = meta();
    write(name, j.dump(2) + "\n");
  }
  void write_jsonl(const std::string& name, const std::vector<json>& rows) {
    std::string s = json{{"_meta", meta()}}.dump() + "\n";
    for (const auto& r : rows) s += r.dump() + "\n";
    write(name, s);
  }
};

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<json> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(path.string() + ": " + e.what(), line_no);
    }
    if (j.is_object() && j.contains("_meta")) continue;
    rows.push_back(std::move(j));
  }
  return rows;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<LabeledConversation> read_labeled(Stage& st) {
  std::vector<LabeledConversation> out;
  for (const auto& j : read_jsonl(st.in("labeled.jsonl"))) out.push_back(labeled_from_json(j));
  return out;
}

std::vector<double> fractions_of(const RunConfig& cfg) {
  std::vector<double> out;
  for (auto f : detail::split(cfg.get("fractions"), ',')) out.push_back(std::stod(std::string(detail::trim(f))));
  return out;
}

ExperimentConfig experiment_config(const RunConfig& cfg, const std::string& groups_key) {
  ExperimentConfig e;
  e.features.enabled_groups = parse_feature_groups(cfg.get(groups_key));
  e.features.prefix_fraction = cfg.real("prefix_fraction");
  e.features.max_df = cfg.real("max_df");
  e.features.location_top_k = static_cast<std::size_t>(cfg.integer("location_top_k"));
  e.features.standardize = cfg.flag("standardize");
  e.l2 = cfg.real("l2");
  e.seed = cfg.seed();
  e.folds = static_cast<int>(cfg.integer("folds"));
  e.threads = static_cast<unsigned>(cfg.integer("threads"));
  return e;
}

bool needs_users(const std::set<FeatureGroup>& g) {
  return g.contains(FeatureGroup::Gender) || g.contains(FeatureGroup::Location) || g.contains(FeatureGroup::Prolific);
}

FeatureResources load_resources(Stage& st, const std::set<FeatureGroup>& groups,
                                const std::vector<LabeledConversation>& labeled) {
  FeatureResources r{SentimentLexicon{}, CategoryLexicon(std::vector<std::string>{}), {}, {}, {}};
  if (st.config.has("stopwords")) r.stopwords = load_stopwords(st.resource("stopwords"));
  if (groups.contains(FeatureGroup::Sentiment)) r.sentiment = load_sentiment_lexicon(st.resource("sentiment_lexicon"));
  if (groups.contains(FeatureGroup::Liwc)) r.categories = load_category_lexicon(st.resource("category_lexicon"));
  if (needs_users(groups)) {
    const auto histories = load_user_histories(st.resource("histories"));
    const auto nouns = load_gendered_nouns(st.resource("gendered_nouns"));
    const auto gaz = load_gazetteer(st.resource("gazetteer"));
    std::vector<Conversation> convs;
    for (const auto& lc : labeled) convs.push_back(lc.conversation);
    r.profiles = build_profiles(histories, topic_post_counts(convs), nouns, gaz);
  }
  if (groups.contains(FeatureGroup::Embedding)) r.embeddings = load_embedding_sidecar(st.resource("embedding_sidecar"));
  return r;
}

std::vector<Example> load_examples(Stage& st, const std::vector<LabeledConversation>& labeled,
                                   const std::set<FeatureGroup>& groups) {
  std::map<std::string, ConversationAnnotations> ann;
  if (groups.contains(FeatureGroup::Discourse) || groups.contains(FeatureGroup::Toxicity)) {
    for (const auto& j : read_jsonl(st.in("annotations.jsonl"))) {
      ConversationAnnotations a;
      for (const auto& name : j.at("acts")) {
        const auto act = parse_act(name.get<std::string>());
        if (!act) throw FormatError("annotations: unknown act '" + name.get<std::string>() + "'");
        a.acts.push_back(*act);
      }
      a.toxicity = toxicity_from_json(j.at("toxicity"));
      ann[j.at("id").get<std::string>()] = std::move(a);
    }
  }
  std::vector<Example> out;
  for (const auto& lc : labeled) {
    Example e{lc, {}};
    if (!ann.empty()) {
      const auto it = ann.find(lc.conversation.id);
      if (it == ann.end()) throw DataError("no annotations for conversation '" + lc.conversation.id + "'");
      e.annotations = it->second;
    }
    out.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<TopicSpec> load_topics(Stage& st) {
  std::vector<TopicSpec> topics;
  for (auto part : detail::split(st.config.get("topic"), ',')) {
    if (part.empty()) continue;
    const fs::path p{std::string(part)};
    st.inputs.push_back(p);
    topics.push_back(load_topic_spec(p));
  }
  return topics;
}

// With several topics, a conversation joins the first topic (in config
// order) whose keywords it matches.
void stage_ingest(Stage& st) {
  const auto schema = parse_dump_schema(st.config.get("dump_schema"));
  const auto result = ingest(st.resource("dump"), schema);
  const auto topics = load_topics(st);
  std::vector<json> rows;
  for (const auto& c : result.conversations) {
    std::string topic;
    if (!topics.empty()) {
      const auto it = std::find_if(topics.begin(), topics.end(), [&](const TopicSpec& t) { return matches_topic(c, t); });
      if (it == topics.end()) continue;
      topic = it->name;
    }
    json j = to_json(c);
    j["topic"] = topic;
    rows.push_back(std::move(j));
  }
  st.write_jsonl("corpus.jsonl", rows);
  std::vector<json> rejects;
  for (const auto& r : result.rejects) rejects.push_back({{"line_no", r.line_no}, {"reason", r.reason}});
  st.write_jsonl("rejects.jsonl", rejects);
  std::cerr << "ingest: " << result.conversations.size() << " parsed, " << result.rejects.size() << " rejected, "
            << rows.size() << " on topic\n";
}

void stage_label(Stage& st) {
  std::map<std::string, std::vector<Conversation>> by_topic;
  for (const auto& j : read_jsonl(st.in("corpus.jsonl")))
    by_topic[j.value("topic", std::string())].push_back(conversation_from_json(j));
  std::vector<std::string> names;
  std::vector<std::vector<Conversation>> groups;
  for (auto& [name, convs] : by_topic) {
    names.push_back(name);
    groups.push_back(std::move(convs));
  }
  if (groups.empty()) throw DataError("corpus is empty");
  const auto scope = parse_label_scope(st.config.get("label_scope"));
  const auto results = label_groups(groups, scope);

  std::vector<json> rows;
  json contentious_ids = json::array(), per_topic = json::array();
  std::size_t n_labeled = 0, n_contentious = 0, n_discarded = 0;
  for (std::size_t g = 0; g < results.size(); ++g) {
    const auto& r = results[g];
    for (const auto& lc : r.labeled) {
      json j = to_json(lc);
      j["topic"] = names[g];
      rows.push_back(std::move(j));
      if (lc.label == Label::Contentious) contentious_ids.push_back(lc.conversation.id);
    }
    per_topic.push_back({{"topic", names[g]},
                         {"threshold", r.threshold},
                         {"n_labeled", r.labeled.size()},
                         {"n_contentious", r.contentious_count()},
                         {"n_discarded", r.n_discarded}});
    n_labeled += r.labeled.size();
    n_contentious += r.contentious_count();
    n_discarded += r.n_discarded;
    std::cerr << "label: " << (names[g].empty() ? "corpus" : names[g]) << " threshold " << r.threshold << ", "
              << r.contentious_count() << " of " << r.labeled.size() << " contentious\n";
  }
  st.write_jsonl("labeled.jsonl", rows);
  st.write_json("label_report.json", {{"rule", "upvote_ratio <= bottom-quartile threshold among ratios >= 0.5"},
                                      {"scope", scope == LabelScope::PerTopic ? "per-topic" : "global"},
                                      {"topics", per_topic},
                                      {"n_labeled", n_labeled},
                                      {"n_contentious", n_contentious},
                                      {"n_non_contentious", n_labeled - n_contentious},
                                      {"n_discarded", n_discarded},
                                      {"contentious_ids", contentious_ids}});
}

void stage_annotate(Stage& st) {
  const auto labeled = read_labeled(st);
  std::vector<Conversation> convs;
  for (const auto& lc : labeled) convs.push_back(lc.conversation);

  SidecarActs sidecar;
  if (st.config.has("acts_sidecar")) sidecar = read_sidecar_acts(st.resource("acts_sidecar"));

  ToxicityClientConfig tc;
  tc.mode = parse_toxicity_mode(st.config.get("toxicity_mode"));
  tc.endpoint_url = st.config.get("toxicity_endpoint");
  if (const char* key = std::getenv(kToxicityApiKeyEnv)) tc.api_key = key;
  tc.max_requests_per_second = st.config.real("toxicity_max_rps");
  tc.max_in_flight = static_cast<int>(st.config.integer("toxicity_max_in_flight"));
  tc.retry_limit = static_cast<int>(st.config.integer("toxicity_retry_limit"));
  tc.allow_offline_fallback = st.config.flag("toxicity_fallback");
  tc.validate();
  const auto lexicon = load_toxicity_lexicon(st.resource("toxicity_lexicon"));
  std::optional<ScoreCache> cache;
  if (tc.mode == ToxicityMode::Remote) {
    const auto cache_path = st.config.path("toxicity_cache").value_or(st.input_dir / "toxicity_cache.tsv");
    fs::create_directories(cache_path.parent_path());
    cache.emplace(cache_path);
  }
  ToxicityScorer scorer(tc, lexicon, cache ? &*cache : nullptr);
  const auto tox = scorer.score_all(convs);

  std::vector<json> rows;
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < convs.size(); ++i) {
    json acts = json::array();
    for (auto a : tag_conversation(convs[i], sidecar, DiscourseRules::defaults())) acts.push_back(to_string(a));
    if (!tox[i].fallback_texts.empty()) ++flagged;
    rows.push_back({{"id", convs[i].id}, {"acts", acts}, {"toxicity", to_json(tox[i])}});
  }
  st.write_jsonl("annotations.jsonl", rows);
  const auto s = scorer.stats();
  std::cerr << "annotate: " << convs.size() << " conversations, " << s.texts << " texts, " << s.requests
            << " requests, " << s.cache_hits << " cache hits, " << s.fallbacks << " offline fallbacks in " << flagged
            << " conversations\n";
}

void stage_featurize(Stage& st) {
  const auto cfg = experiment_config(st.config, "groups");
  const auto labeled = read_labeled(st);
  const auto examples = load_examples(st, labeled, cfg.features.enabled_groups);
  const auto resources = load_resources(st, cfg.features.enabled_groups, labeled);
  std::vector<const Conversation*> convs;
  for (const auto& e : examples) convs.push_back(&e.item.conversation);
  const auto vocab = fit_vocabularies(convs, resources, cfg.features);
  std::vector<FeatureVector> rows;
  std::vector<std::string> ids;
  for (const auto& e : examples) {
    rows.push_back(assemble(e.item.conversation, e.annotations, resources, cfg.features, vocab));
    ids.push_back(e.item.conversation.id);
  }
  std::ostringstream features, labels;
  features << st.csv_meta();
  write_feature_matrix(features, rows);
  labels << st.csv_meta();
  write_label_file(labels, ids, labels_of(examples));
  st.write("features.csv", features.str());
  st.write("labels.csv", labels.str());
}

void stage_train(Stage& st) {
  const auto cfg = experiment_config(st.config, "groups");
  const auto labeled = read_labeled(st);
  const auto examples = load_examples(st, labeled, cfg.features.enabled_groups);
  const auto resources = load_resources(st, cfg.features.enabled_groups, labeled);
  const auto fit = fit_full(examples, resources, cfg);
  json j = to_json(fit.model);
  j["feature_groups"] = to_string(cfg.features.enabled_groups);
  st.write_json("model.json", j);
  std::cerr << "train: " << fit.model.feature_names.size() << " features, " << fit.model.iterations
            << " iterations" << (fit.model.converged ? "" : " (iteration cap reached)") << "\n";
}

json report_json(const CvReport& r) { return to_json(r); }

void stage_evaluate(Stage& st) {
  const auto cfg = experiment_config(st.config, "groups");
  const bool with_baseline = st.config.has("baseline_groups");
  auto groups = cfg.features.enabled_groups;
  std::optional<ExperimentConfig> base_cfg;
  if (with_baseline) {
    base_cfg = experiment_config(st.config, "baseline_groups");
    groups.insert(base_cfg->features.enabled_groups.begin(), base_cfg->features.enabled_groups.end());
  }
  const auto labeled = read_labeled(st);
  const auto examples = load_examples(st, labeled, groups);
  const auto resources = load_resources(st, groups, labeled);

  const auto run = cross_validate(examples, resources, cfg);
  st.write_json("cv_report.json", report_json(run.report));
  std::ostringstream csv;
  csv << st.csv_meta();
  write_cv_csv(csv, run.report);
  st.write("cv_report.csv", csv.str());
  std::cerr << "evaluate: mean accuracy " << run.report.mean.accuracy << ", F1 " << run.report.mean.f1 << "\n";

  if (base_cfg) {
    const auto base = cross_validate(examples, resources, *base_cfg);
    st.write_json("baseline_cv_report.json", report_json(base.report));
    json sig = json::array();
    for (const char* metric : {"accuracy", "precision", "recall", "f1"})
      sig.push_back(to_json(paired_significance(run.report, base.report, metric)));
    st.write_json("significance.json", {{"test", "two-sided paired t-test over folds"},
                                        {"alpha", 0.05},
                                        {"groups", to_string(cfg.features.enabled_groups)},
                                        {"baseline_groups", to_string(base_cfg->features.enabled_groups)},
                                        {"results", sig}});
  }
}

void stage_early_curve(Stage& st) {
  const auto cfg = experiment_config(st.config, "groups");
  const auto labeled = read_labeled(st);
  const auto examples = load_examples(st, labeled, cfg.features.enabled_groups);
  const auto resources = load_resources(st, cfg.features.enabled_groups, labeled);
  const auto run = cross_validate(examples, resources, cfg);
  const auto curve = early_curve(run, examples, resources, cfg, fractions_of(st.config));
  std::ostringstream csv;
  csv << st.csv_meta();
  write_early_curve_csv(csv, curve);
  st.write("early_curve.csv", csv.str());
}

void stage_explain(Stage& st) {
  const auto model = model_from_json(read_json(st.in("model.json")));
  const auto report = odds_ratios(model);
  const auto k = static_cast<std::size_t>(st.config.integer("top_k"));
  std::ostringstream csv;
  csv << st.csv_meta();
  write_odds_ratio_csv(csv, report);
  st.write("odds_ratios.csv", csv.str());
  st.write_json("odds_ratios_top.json", to_json(top_bottom(report, k), k));
}

void stage_ks(Stage& st) {
  const auto labeled = read_labeled(st);
  st.write_json("subreddit_ks.json", to_json(subreddit_ks(labeled)));
}

using StageFn = void (*)(Stage&);

const std::vector<std::pair<std::string, StageFn>>& stages() {
  static const std::vector<std::pair<std::string, StageFn>> s = {
      {"ingest", stage_ingest},   {"label", stage_label},         {"annotate", stage_annotate},
      {"featurize", stage_featurize}, {"train", stage_train},     {"evaluate", stage_evaluate},
      {"early-curve", stage_early_curve}, {"explain", stage_explain}, {"ks", stage_ks},
  };
  return s;
}

StageFn stage_fn(const std::string& name) {
  for (const auto& [n, fn] : stages())
    if (n == name) return fn;
  throw Error("no stage '" + name + "'");
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_manifest(const Stage& st, const std::string& name, double wall_time) {
  json inputs = json::object();
  for (const auto& p : st.inputs)
    if (fs::is_regular_file(p)) inputs[p.string()] = sha256_file(p);
  json outputs = json::array();
  for (const auto& p : st.outputs) outputs.push_back(p.string());
  const json manifest{{"config_hash", st.config.hash()}, {"seed", st.config.seed()}, {"stage", name},
                      {"input_hashes", inputs},          {"output_files", outputs},   {"wall_time", wall_time}};
  std::ofstream out(st.output_dir / ("manifest_" + name + ".json"));
  out << manifest.dump(2) << "\n";
}

// Runs a stage into the output directory and records a manifest. With
// verify, the stage runs again into a scratch directory and every artifact
// is compared byte for byte.
int run_stage(const RunConfig& cfg, const std::string& name, bool verify) {
  const fs::path out_dir = *cfg.path("output_dir");
  fs::create_directories(out_dir);
  Stage st{cfg, out_dir, out_dir, {}, {}};
  const auto t0 = std::chrono::steady_clock::now();
  stage_fn(name)(st);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(st, name, wall);
  if (!verify) return kExitOk;

  const fs::path scratch = fs::temp_directory_path() / ("contentious-verify-" + cfg.hash().substr(0, 12) + "-" + name);
  fs::remove_all(scratch);
  Stage again{cfg, out_dir, scratch, {}, {}};
  stage_fn(name)(again);
  int status = kExitOk;
  for (const auto& p : st.outputs) {
    const auto twin = scratch / p.filename();
    if (!fs::exists(twin) || read_file(p) != read_file(twin)) {
      std::cerr << "verify: " << p.filename().string() << " differs on rerun\n";
      status = kExitValidation;
    }
  }
  fs::remove_all(scratch);
  if (status == kExitOk) std::cerr << "verify: " << st.outputs.size() << " artifacts reproduced byte for byte\n";
  return status;
}

void write_synthetic(const fs::path& out, const SyntheticSpec& spec) {
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + out.string());
  for (const auto& c : synthetic_corpus(spec)) f << to_json(c).dump() << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Contentious conversation prediction pipeline", "contentious"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all");

  std::string config_path, output_dir, seed, groups, baseline, dump, topic;
  std::vector<std::string> overrides;
  bool verify = false;
  app.add_option("-c,--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  app.add_option("-o,--output-dir", output_dir, "artifact directory");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--groups", groups, "feature groups, comma separated");
  app.add_option("--baseline-groups", baseline, "groups for the significance baseline");
  app.add_option("--dump", dump, "raw dump for ingest");
  app.add_option("--topic", topic, "topic spec JSON for ingest");
  app.add_option("--set", overrides, "override any config key: key=value")->take_all();
  app.add_flag("--verify", verify, "rerun the stage and compare artifacts byte for byte");

  std::vector<CLI::App*> stage_cmds;
  for (const auto& [name, fn] : stages()) stage_cmds.push_back(app.add_subcommand(name, "run the " + name + " stage"));
  auto* pipeline = app.add_subcommand("pipeline", "run every stage in order");
  auto* synth = app.add_subcommand("synth", "write a synthetic conversation dump");
  std::string synth_out, placement = "post";
  std::size_t synth_n = 400, synth_comments = 10;
  double synth_pos = 0.9, synth_neg = 0.1;
  std::uint64_t synth_seed = 1;
  synth->add_option("--out", synth_out, "output JSONL")->required();
  synth->add_option("-n", synth_n, "conversations");
  synth->add_option("--comments", synth_comments, "comments per conversation");
  synth->add_option("--placement", placement, "post or last-comment")->check(CLI::IsMember({"post", "last-comment"}));
  synth->add_option("--contentious-rate", synth_pos, "token rate in contentious conversations");
  synth->add_option("--non-contentious-rate", synth_neg, "token rate in other conversations");
  synth->add_option("--synth-seed", synth_seed, "generator seed");
  auto* keys = app.add_subcommand("keys", "list config keys and defaults");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (keys->parsed()) {
      for (const auto& [k, v] : defaults()) std::cout << k << " = " << v << "\n";
      return kExitOk;
    }
    if (synth->parsed()) {
      SyntheticSpec spec;
      spec.n_conversations = synth_n;
      spec.comments_per_conversation = synth_comments;
      spec.contentious_rate = synth_pos;
      spec.non_contentious_rate = synth_neg;
      spec.placement = placement == "post" ? SignalPlacement::Post : SignalPlacement::LastComment;
      spec.seed = synth_seed;
      write_synthetic(synth_out, spec);
      return kExitOk;
    }

    RunConfig cfg;
    if (!config_path.empty()) cfg.merge_file(config_path);
    const auto cwd = fs::current_path();
    if (!output_dir.empty()) cfg.set("output_dir", output_dir, cwd);
    if (!seed.empty()) cfg.set("seed", seed, cwd);
    if (!groups.empty()) cfg.set("groups", groups, cwd);
    if (!baseline.empty()) cfg.set("baseline_groups", baseline, cwd);
    if (!dump.empty()) cfg.set("dump", dump, cwd);
    if (!topic.empty()) cfg.set("topic", topic, cwd);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      cfg.set(std::string(detail::trim(std::string_view(kv).substr(0, eq))), kv.substr(eq + 1), cwd);
    }
    cfg.validate();

    if (pipeline->parsed()) {
      for (const auto& [name, fn] : stages()) {
        if (name == "ingest" && !cfg.has("dump")) continue;
        if (const int rc = run_stage(cfg, name, verify); rc != kExitOk) return rc;
      }
      return kExitOk;
    }
    for (auto* cmd : stage_cmds)
      if (cmd->parsed()) return run_stage(cfg, cmd->get_name(), verify);
    return kExitUsage;
  } catch (const ServiceError& e) {
    std::cerr << "service error: " << e.what() << "\n";
    return kExitService;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const json::exception& e) {
    std::cerr << "error: malformed artifact: " << e.what() << "\n";
    return kExitValidation;
  }
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

}  // namespace contentious
