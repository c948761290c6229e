#include "contentious/featurize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "contentious/errors.hpp"
#include "text_util.hpp"

namespace contentious {

namespace {

constexpr std::array<std::string_view, 10> kGroupNames = {
    "tfidf", "discourse", "gender", "liwc", "location", "prolific", "sentiment", "toxicity", "subreddit", "embedding",
};

void add_scaled(SparseVector& acc, const SparseVector& v, double scale) {
  for (const auto& [i, x] : v) acc[i] += scale * x;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_value(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string_view to_string(FeatureGroup g) { return kGroupNames.at(static_cast<std::size_t>(g)); }

FeatureGroup parse_feature_group(std::string_view s) {
  for (std::size_t i = 0; i < kGroupNames.size(); ++i)
    if (kGroupNames[i] == s) return kAllFeatureGroups[i];
  throw ConfigError("unknown feature group '" + std::string(s) + "'");
}

std::set<FeatureGroup> parse_feature_groups(std::string_view csv) {
  std::set<FeatureGroup> out;
  for (auto part : detail::split(csv, ',')) {
    const auto name = detail::trim(part);
    if (name.empty()) continue;
    if (name == "all") {
      for (auto g : kAllFeatureGroups)
        if (g != FeatureGroup::Embedding) out.insert(g);
    } else {
      out.insert(parse_feature_group(name));
    }
  }
  if (out.empty()) throw ConfigError("no feature groups enabled");
  return out;
}

std::string to_string(const std::set<FeatureGroup>& groups) {
  std::string out;
  for (auto g : groups) {
    if (!out.empty()) out += ',';
    out += to_string(g);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::optional<std::size_t> TfidfVocabulary::index_of(std::string_view term) const {
  if (index_.empty() && !terms.empty()) {
    const auto it = std::lower_bound(terms.begin(), terms.end(), term);
    if (it != terms.end() && *it == term) return static_cast<std::size_t>(it - terms.begin());
    return std::nullopt;
  }
  const auto it = index_.find(std::string(term));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double TfidfVocabulary::idf(std::size_t i) const {
  return std::log((1.0 + static_cast<double>(n_docs)) / (1.0 + static_cast<double>(doc_freq.at(i)))) + 1.0;
}

TfidfVocabulary tfidf_fit(const std::vector<std::vector<std::string>>& docs, double max_df,
                          const std::set<std::string>& stopwords) {
  if (docs.empty()) throw DataError("tf-idf fit on an empty corpus");
  if (!(max_df > 0.0 && max_df <= 1.0)) throw ConfigError("max_df must be in (0, 1]");
  std::map<std::string, std::int64_t> df;
  for (const auto& doc : docs) {
    std::set<std::string_view> seen(doc.begin(), doc.end());
    for (auto t : seen) ++df[std::string(t)];
  }
  TfidfVocabulary vocab;
  vocab.n_docs = static_cast<std::int64_t>(docs.size());
  vocab.max_df = max_df;
  vocab.stopwords = stopwords;
  const double n = static_cast<double>(docs.size());
  for (const auto& [term, count] : df) {  // std::map keeps terms sorted
    if (static_cast<double>(count) / n > max_df || stopwords.contains(term)) continue;
    vocab.index_.emplace(term, vocab.terms.size());
    vocab.terms.push_back(term);
    vocab.doc_freq.push_back(count);
  }
  return vocab;
}

SparseVector tfidf_transform(std::span<const std::string> doc, const TfidfVocabulary& vocab) {
  SparseVector v;
  for (const auto& t : doc)
    if (const auto i = vocab.index_of(t)) v[*i] += 1.0;
  double norm2 = 0.0;
  for (auto& [i, x] : v) {
    x *= vocab.idf(i);
    norm2 += x * x;
  }
  if (norm2 > 0.0) {
    const double norm = std::sqrt(norm2);
    for (auto& [i, x] : v) x /= norm;
  }
  return v;
}

std::vector<std::vector<std::string>> conversation_documents(const Conversation& conv) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(conv.comments.size() + 1);
  docs.push_back(tokenize_words(conv.post_text()));
  for (const auto& c : conv.comments) docs.push_back(tokenize_words(c.body));
  return docs;
}

SparseVector conversation_text_vector(const Conversation& conv, const TfidfVocabulary& vocab) {
  SparseVector out = tfidf_transform(tokenize_words(conv.post_text()), vocab);
  if (conv.comments.empty()) return out;
  const double w = 1.0 / static_cast<double>(conv.comments.size());
  SparseVector mean;
  for (const auto& c : conv.comments) add_scaled(mean, tfidf_transform(tokenize_words(c.body), vocab), w);
  add_scaled(out, mean, 1.0);
  return out;
}

// ---------------------------------------------------------------------------

FeatureMap sentiment_features(const Conversation& conv, const SentimentLexicon& lex) {
  FeatureMap f;
  const auto post = sentence_scores(tokenize(conv.post_text()), lex);
  f["max_post_sentiment"] = post.empty() ? 0.0 : *std::max_element(post.begin(), post.end());
  f["min_post_sentiment"] = post.empty() ? 0.0 : *std::min_element(post.begin(), post.end());

  double mx = 0.0, mn = 0.0, pos = 0.0, neg = 0.0;
  for (std::size_t i = 0; i < conv.comments.size(); ++i) {
    const auto s = sentence_scores(tokenize(conv.comments[i].body), lex);
    double score = 0.0;
    for (double x : s) score += x;
    if (!s.empty()) score /= static_cast<double>(s.size());
    mx = i == 0 ? score : std::max(mx, score);
    mn = i == 0 ? score : std::min(mn, score);
    pos += std::max(score, 0.0);
    neg += std::min(score, 0.0);
  }
  const double n = static_cast<double>(conv.comments.size());
  f["max_comment_sentiment"] = mx;
  f["min_comment_sentiment"] = mn;
  f["avg_comment_positive"] = n > 0 ? pos / n : 0.0;
  f["avg_comment_negative"] = n > 0 ? neg / n : 0.0;
  return f;
}

FeatureMap liwc_features(const Conversation& conv, const CategoryLexicon& lex) {
  std::vector<std::int64_t> total(lex.dimension(), 0);
  for (const auto& doc : conversation_documents(conv)) {
    const auto counts = category_counts(doc, lex);
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += counts[i];
  }
  FeatureMap f;
  for (std::size_t i = 0; i < total.size(); ++i)
    if (total[i] != 0) f[lex.categories()[i]] = static_cast<double>(total[i]);
  return f;
}

EmbeddingTable load_embedding_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding sidecar " + path.string());
  EmbeddingTable table;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = detail::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto fields = detail::split(trimmed, ',');
    if (!header) {
      if (fields.size() < 2) throw FormatError("embedding header needs conversation_id and at least one column", line_no);
      table.dimension = fields.size() - 1;
      header = true;
      continue;
    }
    if (fields.size() != table.dimension + 1)
      throw FormatError("expected " + std::to_string(table.dimension + 1) + " columns", line_no);
    std::vector<double> row;
    row.reserve(table.dimension);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      const std::string cell(detail::trim(fields[i]));
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size() || !std::isfinite(v)) throw std::invalid_argument(cell);
        row.push_back(v);
      } catch (const std::logic_error&) {
        throw FormatError("bad embedding value '" + cell + "'", line_no);
      }
    }
    const std::string id(detail::trim(fields[0]));
    if (!table.rows.emplace(id, std::move(row)).second)
      throw FormatError("duplicate embedding row for '" + id + "'", line_no);
  }
  if (!header) throw FormatError("embedding sidecar " + path.string() + " is empty");
  return table;
}

// ---------------------------------------------------------------------------

std::size_t prefix_length(std::size_t n_comments, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("prefix fraction must be in (0, 1]");
  if (fraction == 1.0) return n_comments;
  // The small offset keeps products such as 0.3 * 10 from rounding up to 4.
  const double k = std::ceil(fraction * static_cast<double>(n_comments) - 1e-9);
  return std::min(n_comments, static_cast<std::size_t>(std::max(0.0, k)));
}

Conversation prefix_truncate(const Conversation& conv, double fraction) {
  Conversation out = conv;
  out.comments.resize(prefix_length(conv.comments.size(), fraction));
  return out;
}

ConversationAnnotations ConversationAnnotations::prefix(std::size_t n_comments) const {
  ConversationAnnotations out;
  out.acts.assign(acts.begin(), acts.begin() + static_cast<std::ptrdiff_t>(std::min(acts.size(), n_comments + 1)));
  out.toxicity = toxicity.prefix(n_comments);
  return out;
}

void FeatureConfig::validate() const {
  if (enabled_groups.empty()) throw ConfigError("no feature groups enabled");
  if (!(prefix_fraction > 0.0 && prefix_fraction <= 1.0)) throw ConfigError("prefix_fraction must be in (0, 1]");
  if (!(max_df > 0.0 && max_df <= 1.0)) throw ConfigError("max_df must be in (0, 1]");
  if (location_top_k == 0) throw ConfigError("location_top_k must be >= 1");
}

FittedVocabularies fit_vocabularies(std::span<const Conversation* const> train, const FeatureResources& resources,
                                    const FeatureConfig& config) {
  config.validate();
  if (train.empty()) throw DataError("cannot fit vocabularies on an empty training set");
  FittedVocabularies out;
  const auto& g = config.enabled_groups;
  if (g.contains(FeatureGroup::Tfidf)) {
    std::vector<std::vector<std::string>> docs;
    for (const auto* c : train)
      for (auto& d : conversation_documents(*c)) docs.push_back(std::move(d));
    out.tfidf = tfidf_fit(docs, config.max_df, resources.stopwords);
  }
  if (g.contains(FeatureGroup::Subreddit)) {
    std::set<std::string> subs;
    for (const auto* c : train) subs.insert(c->subreddit);
    out.subreddits.assign(subs.begin(), subs.end());
  }
  if (g.contains(FeatureGroup::Location)) {
    std::map<std::string, double> freq;
    for (const auto* c : train)
      for (const auto& [loc, n] : aggregate_conversation_users(*c, resources.profiles).location) freq[loc] += n;
    std::vector<std::pair<std::string, double>> ranked(freq.begin(), freq.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() > config.location_top_k) ranked.resize(config.location_top_k);
    for (auto& [loc, n] : ranked) out.locations.push_back(loc);
    std::sort(out.locations.begin(), out.locations.end());
  }
  return out;
}

FeatureMap FeatureVector::flatten() const {
  FeatureMap out;
  for (const auto& [group, features] : groups) {
    const std::string prefix = std::string(to_string(group)) + "/";
    for (const auto& [name, value] : features) {
      if (!out.emplace(prefix + name, value).second) throw Error("duplicate feature name '" + prefix + name + "'");
    }
  }
  return out;
}

FeatureVector assemble(const Conversation& full_conv, const ConversationAnnotations& full_annotations,
                       const FeatureResources& resources, const FeatureConfig& config,
                       const FittedVocabularies& vocab) {
  config.validate();
  const Conversation conv = prefix_truncate(full_conv, config.prefix_fraction);
  const ConversationAnnotations annotations = full_annotations.prefix(conv.comments.size());
  const auto& enabled = config.enabled_groups;

  FeatureVector fv;
  fv.conversation_id = conv.id;

  if (enabled.contains(FeatureGroup::Tfidf)) {
    auto& out = fv.groups[FeatureGroup::Tfidf];
    for (const auto& [i, x] : conversation_text_vector(conv, vocab.tfidf))
      if (x != 0.0) out[vocab.tfidf.terms[i]] = x;
  }
  if (enabled.contains(FeatureGroup::Discourse)) {
    if (annotations.acts.size() != conv.comments.size() + 1)
      throw DataError("discourse acts for '" + conv.id + "' do not cover the conversation");
    fv.groups[FeatureGroup::Discourse] = act_ngrams(annotations.acts).features();
  }
  if (enabled.contains(FeatureGroup::Gender) || enabled.contains(FeatureGroup::Location) ||
      enabled.contains(FeatureGroup::Prolific)) {
    auto agg = aggregate_conversation_users(conv, resources.profiles);
    if (enabled.contains(FeatureGroup::Gender)) fv.groups[FeatureGroup::Gender] = std::move(agg.gender);
    if (enabled.contains(FeatureGroup::Prolific)) fv.groups[FeatureGroup::Prolific] = std::move(agg.prolific);
    if (enabled.contains(FeatureGroup::Location)) {
      auto& out = fv.groups[FeatureGroup::Location];
      double other = 0.0;
      for (const auto& [loc, n] : agg.location) {
        if (std::binary_search(vocab.locations.begin(), vocab.locations.end(), loc))
          out[loc] = n;
        else
          other += n;
      }
      if (other != 0.0) out["other"] = other;
    }
  }
  if (enabled.contains(FeatureGroup::Liwc)) fv.groups[FeatureGroup::Liwc] = liwc_features(conv, resources.categories);
  if (enabled.contains(FeatureGroup::Sentiment))
    fv.groups[FeatureGroup::Sentiment] = sentiment_features(conv, resources.sentiment);
  if (enabled.contains(FeatureGroup::Toxicity)) {
    if (annotations.toxicity.comment_toxicities.size() != conv.comments.size())
      throw DataError("toxicity scores for '" + conv.id + "' do not cover the conversation");
    fv.groups[FeatureGroup::Toxicity] = toxicity_features(annotations.toxicity);
  }
  if (enabled.contains(FeatureGroup::Subreddit)) {
    auto& out = fv.groups[FeatureGroup::Subreddit];
    for (const auto& s : vocab.subreddits) out[s] = s == conv.subreddit ? 1.0 : 0.0;
  }
  if (enabled.contains(FeatureGroup::Embedding)) {
    if (!resources.embeddings) throw ConfigError("embedding group enabled without an embedding sidecar");
    const auto it = resources.embeddings->rows.find(conv.id);
    if (it == resources.embeddings->rows.end()) throw DataError("no embedding row for '" + conv.id + "'");
    auto& out = fv.groups[FeatureGroup::Embedding];
    for (std::size_t i = 0; i < it->second.size(); ++i) out["v" + std::to_string(i + 1)] = it->second[i];
  }

  for (const auto& [group, features] : fv.groups)
    for (const auto& [name, value] : features)
      if (!std::isfinite(value))
        throw DataError("non-finite feature " + std::string(to_string(group)) + "/" + name + " for '" + conv.id + "'");
  return fv;
}

std::set<std::string> load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open stopword list " + path.string());
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    out.insert(to_lower_utf8(t));
  }
  return out;
}

void write_feature_matrix(std::ostream& out, const std::vector<FeatureVector>& rows) {
  out << "conversation_id,feature_name,value\n";
  for (const auto& fv : rows)
    for (const auto& [name, value] : fv.flatten())
      if (value != 0.0) out << csv_field(fv.conversation_id) << ',' << csv_field(name) << ',' << format_value(value) << '\n';
}

void write_label_file(std::ostream& out, const std::vector<std::string>& ids, const std::vector<int>& labels) {
  if (ids.size() != labels.size()) throw Error("label file: id and label counts differ");
  out << "conversation_id,label\n";
  for (std::size_t i = 0; i < ids.size(); ++i) out << csv_field(ids[i]) << ',' << labels[i] << '\n';
}

}  // namespace contentious
