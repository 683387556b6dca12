#include "icf/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <map>
#include <set>
#include <zlib.h>

#include "icf/error.hpp"
#include "icf/hash.hpp"
#include "icf/text.hpp"

namespace icf {

std::string normalize_token(std::string_view token) {
  std::string out;
  out.reserve(token.size());
  for (const char ch : token) {
    const unsigned char u = static_cast<unsigned char>(ch);
    if (std::ispunct(u)) continue;
    if (std::isdigit(u)) {
      out.push_back('0');
    } else {
      out.push_back(static_cast<char>(std::tolower(u)));
    }
  }
  return out;
}

const char* to_string(UnigramMode m) {
  switch (m) {
    case UnigramMode::none: return "none";
    case UnigramMode::binary: return "binary";
    case UnigramMode::tfidf: return "tfidf";
  }
  return "?";
}

const char* to_string(EmbeddingMode m) {
  switch (m) {
    case EmbeddingMode::none: return "none";
    case EmbeddingMode::static_table: return "static";
    case EmbeddingMode::contextual: return "contextual";
  }
  return "?";
}

// ---- Vocabulary -------------------------------------------------------------

std::uint64_t Vocabulary::fingerprint() const {
  std::uint64_t h = fnv1a("vocab");
  for (int i = 0; i < size(); ++i) {
    h = fnv1a(words[static_cast<std::size_t>(i)], h);
    h = fnv1a_u64(static_cast<std::uint64_t>(document_frequency[static_cast<std::size_t>(i)]), h);
  }
  return fnv1a_u64(static_cast<std::uint64_t>(n_documents), h);
}

Vocabulary build_vocabulary(const std::vector<const ActivityReport*>& train_reports) {
  if (train_reports.empty()) throw DataError("build_vocabulary: empty training set");

  std::map<std::string, int> df;  // ordered: fixes word indices
  std::set<std::string> in_report;
  for (const ActivityReport* r : train_reports) {
    in_report.clear();
    for (const auto& t : r->tokens) {
      const std::string w = normalize_token(t);
      if (!w.empty()) in_report.insert(w);
    }
    for (const auto& w : in_report) ++df[w];
  }

  Vocabulary v;
  v.n_documents = static_cast<int>(train_reports.size());
  v.words.reserve(df.size());
  v.document_frequency.reserve(df.size());
  for (const auto& [w, count] : df) {
    v.index.emplace(w, static_cast<int>(v.words.size()));
    v.words.push_back(w);
    v.document_frequency.push_back(count);
  }
  return v;
}

FeatureVector unigram_vector(const ActivityReport& report, const Vocabulary& vocab,
                             UnigramMode mode) {
  if (mode == UnigramMode::none) throw DataError("unigram_vector: mode none");
  FeatureVector out;
  out.values.assign(static_cast<std::size_t>(vocab.size()), 0.0);
  for (const auto& t : report.tokens) {
    const std::string w = normalize_token(t);
    if (w.empty()) continue;
    const auto it = vocab.index.find(w);
    if (it == vocab.index.end()) continue;  // OOV ignored
    out.values[static_cast<std::size_t>(it->second)] += 1.0;
  }
  if (mode == UnigramMode::binary) {
    for (auto& x : out.values) x = x > 0.0 ? 1.0 : 0.0;
  } else {
    for (int i = 0; i < vocab.size(); ++i) {
      auto& x = out.values[static_cast<std::size_t>(i)];
      if (x > 0.0)
        x *= std::log(static_cast<double>(vocab.n_documents) /
                      vocab.document_frequency[static_cast<std::size_t>(i)]);
    }
  }
  out.config_fingerprint =
      fnv1a_u64(vocab.fingerprint(), fnv1a(std::string("unigram|") + to_string(mode)));
  return out;
}

// ---- EmbeddingTable ----------------------------------------------------------

namespace {

// Reads one line from a gz stream (handles plain files transparently).
bool gz_readline(gzFile f, std::string& line) {
  line.clear();
  char buf[4096];
  while (true) {
    if (gzgets(f, buf, sizeof(buf)) == nullptr) return !line.empty();
    line += buf;
    if (!line.empty() && line.back() == '\n') {
      line.pop_back();
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return true;
    }
  }
}

}  // namespace

EmbeddingTable EmbeddingTable::load(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw DataError("cannot open embeddings: " + path);

  EmbeddingTable t;
  std::string line;
  int lineno = 0;
  try {
    if (!gz_readline(f, line)) throw DataError(path + ": empty embeddings file");
    ++lineno;
    char* end = nullptr;
    const long v_hint = std::strtol(line.c_str(), &end, 10);
    const long dim = std::strtol(end, &end, 10);
    if (v_hint <= 0 || dim <= 0)
      throw DataError(path + ":1: malformed word2vec header (expected 'V D')");
    t.dim_ = static_cast<int>(dim);
    t.words_.reserve(static_cast<std::size_t>(v_hint));

    while (gz_readline(f, line)) {
      ++lineno;
      if (line.empty()) continue;
      const char* p = line.c_str();
      const char* sp = std::strchr(p, ' ');
      if (!sp)
        throw DataError(path + ":" + std::to_string(lineno) + ": missing vector values");
      std::string word(p, sp);
      std::vector<double> vals;
      vals.reserve(static_cast<std::size_t>(t.dim_));
      const char* cur = sp;
      while (*cur) {
        char* next = nullptr;
        const double x = std::strtod(cur, &next);
        if (next == cur) break;
        if (!std::isfinite(x))
          throw DataError(path + ":" + std::to_string(lineno) + ": non-finite value");
        vals.push_back(x);
        cur = next;
      }
      if (static_cast<int>(vals.size()) != t.dim_)
        throw DataError(path + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(t.dim_) + " values, found " +
                        std::to_string(vals.size()));
      if (t.index_.count(word)) continue;  // duplicate rows: first wins
      t.index_.emplace(word, static_cast<int>(t.words_.size()));
      t.words_.push_back(std::move(word));
      t.values_.insert(t.values_.end(), vals.begin(), vals.end());
    }
  } catch (...) {
    gzclose(f);
    throw;
  }
  gzclose(f);

  if (t.words_.empty()) throw DataError(path + ": no embedding rows");

  std::uint64_t h = fnv1a("table");
  h = fnv1a_u64(static_cast<std::uint64_t>(t.dim_), h);
  for (std::size_t i = 0; i < t.words_.size(); ++i) {
    h = fnv1a(t.words_[i], h);
    for (int d = 0; d < t.dim_; ++d) {
      std::uint64_t bits;
      const double val = t.values_[i * static_cast<std::size_t>(t.dim_) + static_cast<std::size_t>(d)];
      std::memcpy(&bits, &val, sizeof(bits));
      h = fnv1a_u64(bits, h);
    }
  }
  t.fingerprint_ = h;
  return t;
}

const double* EmbeddingTable::find(const std::string& word) const {
  const auto it = index_.find(word);
  if (it == index_.end()) return nullptr;
  return values_.data() + static_cast<std::size_t>(it->second) * static_cast<std::size_t>(dim_);
}

// ---- Report embeddings --------------------------------------------------------

namespace {

// Mean of the table vectors of tokens[i] for i in [begin, end) with
// normalized forms present in the table; zero vector if none contribute.
std::vector<double> static_mean(const ActivityReport& r, const EmbeddingTable& table,
                                int begin, int end, bool inside_span_only,
                                bool outside_span_only) {
  std::vector<double> mean(static_cast<std::size_t>(table.dim()), 0.0);
  int contributing = 0;
  const int s = r.action_span ? r.action_span->first : 0;
  const int e = r.action_span ? r.action_span->second : 0;
  for (int i = begin; i < end; ++i) {
    const bool inside = r.action_span && i >= s && i < e;
    if (inside_span_only && !inside) continue;
    if (outside_span_only && inside) continue;
    const std::string w = normalize_token(r.tokens[static_cast<std::size_t>(i)]);
    if (w.empty()) continue;
    const double* v = table.find(w);
    if (!v) continue;
    for (int d = 0; d < table.dim(); ++d) mean[static_cast<std::size_t>(d)] += v[d];
    ++contributing;
  }
  if (contributing > 0)
    for (auto& x : mean) x /= contributing;
  return mean;
}

std::vector<double> contextual_mean(const ActivityReport& r, bool action_only) {
  const std::size_t dim = r.contextual_vectors.front().size();
  std::vector<double> mean(dim, 0.0);
  int contributing = 0;
  const int s = r.action_span ? r.action_span->first : 0;
  const int e = r.action_span ? r.action_span->second : 0;
  for (std::size_t i = 0; i < r.contextual_vectors.size(); ++i) {
    if (action_only) {
      const int idx = static_cast<int>(i);
      if (!(idx >= s && idx < e)) continue;
    }
    for (std::size_t d = 0; d < dim; ++d) mean[d] += r.contextual_vectors[i][d];
    ++contributing;
  }
  if (contributing > 0)
    for (auto& x : mean) x /= contributing;
  return mean;
}

}  // namespace

FeatureVector embed_report(const ActivityReport& report, const EmbeddingTable* table,
                           const FeatureConfig& config) {
  if (config.embedding_mode == EmbeddingMode::none)
    throw DataError("embed_report: embedding mode none");
  if (config.action_oracle && !report.has_action_span())
    throw DataError("embed_report: action oracle requested but report " + report.id +
                    " has no action span");

  FeatureVector out;
  const int n = static_cast<int>(report.tokens.size());

  if (config.embedding_mode == EmbeddingMode::static_table) {
    if (!table) throw DataError("embed_report: static embeddings requested without a table");
    if (config.action_oracle) {
      // concat(mean of context = non-action tokens, mean of action tokens)
      std::vector<double> ctx = static_mean(report, *table, 0, n, false, true);
      std::vector<double> act = static_mean(report, *table, 0, n, true, false);
      out.values = std::move(ctx);
      out.values.insert(out.values.end(), act.begin(), act.end());
    } else {
      out.values = static_mean(report, *table, 0, n, false, false);
    }
    out.config_fingerprint = fnv1a_u64(
        table->fingerprint(),
        fnv1a(std::string("embed|static|oracle=") + (config.action_oracle ? "1" : "0")));
    return out;
  }

  // contextual
  if (!report.has_contextual())
    throw DataError("embed_report: contextual embeddings requested but report " + report.id +
                    " carries no vectors");
  out.values = contextual_mean(report, config.action_oracle);
  out.config_fingerprint = fnv1a_u64(
      static_cast<std::uint64_t>(report.contextual_vectors.front().size()),
      fnv1a(std::string("embed|contextual|oracle=") + (config.action_oracle ? "1" : "0")));
  return out;
}

FeatureVector hybrid_vector(const FeatureVector& embedding_part,
                            const FeatureVector& unigram_part) {
  if (embedding_part.config_fingerprint != unigram_part.config_fingerprint)
    throw DataError("hybrid_vector: fingerprint mismatch between parts");
  FeatureVector out;
  out.values = embedding_part.values;
  out.values.insert(out.values.end(), unigram_part.values.begin(), unigram_part.values.end());
  out.config_fingerprint = embedding_part.config_fingerprint;
  return out;
}

FeatureVector embed_definition(const CodeDefinition& def, const EmbeddingTable& table,
                               bool extended, bool duplicated) {
  auto mean_of_text = [&table](const std::string& text, int* contributing) {
    std::vector<double> mean(static_cast<std::size_t>(table.dim()), 0.0);
    int n = 0;
    for (const auto& raw : tokenize_words(text)) {
      const std::string w = normalize_token(raw);
      if (w.empty()) continue;
      const double* v = table.find(w);
      if (!v) continue;
      for (int d = 0; d < table.dim(); ++d) mean[static_cast<std::size_t>(d)] += v[d];
      ++n;
    }
    if (n > 0)
      for (auto& x : mean) x /= n;
    *contributing = n;
    return mean;
  };

  if (tokenize_words(def.primary_definition).empty())
    throw DataError("embed_definition: empty definition after normalization for " + def.code);

  int n_primary = 0;
  std::vector<double> v = mean_of_text(def.primary_definition, &n_primary);

  if (extended && !def.child_definitions.empty()) {
    std::string pooled;
    for (const auto& ch : def.child_definitions) {
      pooled += ch.definition;
      pooled += ' ';
    }
    int n_child = 0;
    const std::vector<double> ext = mean_of_text(pooled, &n_child);
    if (n_child > 0) {
      for (std::size_t d = 0; d < v.size(); ++d) v[d] = (v[d] + 0.5 * ext[d]) / 1.5;
    }
  }

  FeatureVector out;
  out.values = v;
  if (duplicated) out.values.insert(out.values.end(), v.begin(), v.end());
  out.config_fingerprint =
      fnv1a_u64(table.fingerprint(),
                fnv1a(std::string("def|ext=") + (extended ? "1" : "0") +
                      "|dup=" + (duplicated ? "1" : "0")));
  return out;
}

// ---- FeaturePipeline -----------------------------------------------------------

void FeaturePipeline::finish_build() {
  if (config_.unigram_mode == UnigramMode::none &&
      config_.embedding_mode == EmbeddingMode::none)
    throw DataError("feature config: no active feature family");
  if (config_.concatenate_hybrid &&
      (config_.unigram_mode == UnigramMode::none ||
       config_.embedding_mode == EmbeddingMode::none))
    throw DataError("feature config: hybrid requires both unigram and embedding modes");
  if (!config_.concatenate_hybrid && config_.unigram_mode != UnigramMode::none &&
      config_.embedding_mode != EmbeddingMode::none)
    throw DataError("feature config: both families active but hybrid flag off");
  if (config_.embedding_mode == EmbeddingMode::static_table && !table_)
    throw DataError("feature config: static embeddings requested without a table");

  int emb_dim = 0;
  if (config_.embedding_mode == EmbeddingMode::static_table)
    emb_dim = table_->dim() * (config_.action_oracle ? 2 : 1);
  else if (config_.embedding_mode == EmbeddingMode::contextual)
    emb_dim = contextual_dim_;

  dim_ = emb_dim + (vocab_ ? vocab_->size() : 0);

  std::uint64_t h = fnv1a(std::string("pipeline|u=") + to_string(config_.unigram_mode) +
                          "|e=" + to_string(config_.embedding_mode) +
                          "|o=" + (config_.action_oracle ? "1" : "0") +
                          "|h=" + (config_.concatenate_hybrid ? "1" : "0"));
  if (vocab_) h = fnv1a_u64(vocab_->fingerprint(), h);
  if (config_.embedding_mode == EmbeddingMode::static_table)
    h = fnv1a_u64(table_->fingerprint(), h);
  if (config_.embedding_mode == EmbeddingMode::contextual)
    h = fnv1a_u64(static_cast<std::uint64_t>(contextual_dim_), h);
  fingerprint_ = h;
}

FeaturePipeline FeaturePipeline::build(const std::vector<const ActivityReport*>& train_reports,
                                       const FeatureConfig& config,
                                       const EmbeddingTable* table) {
  FeaturePipeline p;
  p.config_ = config;
  p.table_ = table;

  if (config.unigram_mode != UnigramMode::none) p.vocab_ = build_vocabulary(train_reports);

  if (config.embedding_mode == EmbeddingMode::contextual) {
    if (train_reports.empty()) throw DataError("FeaturePipeline: empty training set");
    for (const ActivityReport* r : train_reports) {
      if (!r->has_contextual())
        throw DataError("FeaturePipeline: contextual mode but report " + r->id +
                        " carries no vectors");
      const int d = static_cast<int>(r->contextual_vectors.front().size());
      if (p.contextual_dim_ == 0)
        p.contextual_dim_ = d;
      else if (p.contextual_dim_ != d)
        throw DataError("FeaturePipeline: inconsistent contextual dimensions (" +
                        std::to_string(p.contextual_dim_) + " vs " + std::to_string(d) +
                        " at report " + r->id + ")");
    }
  }

  if (config.action_oracle) {
    for (const ActivityReport* r : train_reports)
      if (!r->has_action_span())
        throw DataError("FeaturePipeline: action oracle but report " + r->id + " has no span");
  }

  p.finish_build();
  return p;
}

FeaturePipeline FeaturePipeline::restore(const FeatureConfig& config,
                                         std::optional<Vocabulary> vocab,
                                         const EmbeddingTable* table, int contextual_dim) {
  FeaturePipeline p;
  p.config_ = config;
  p.vocab_ = std::move(vocab);
  p.table_ = table;
  p.contextual_dim_ = contextual_dim;
  p.finish_build();
  return p;
}

FeatureVector FeaturePipeline::vectorize(const ActivityReport& report) const {
  FeatureVector out;
  if (config_.embedding_mode != EmbeddingMode::none) {
    if (config_.embedding_mode == EmbeddingMode::contextual && report.has_contextual()) {
      const int d = static_cast<int>(report.contextual_vectors.front().size());
      if (d != contextual_dim_)
        throw DataError("vectorize: contextual dimension mismatch at report " + report.id);
    }
    out = embed_report(report, table_, config_);
    if (config_.concatenate_hybrid)
      out.values.reserve(static_cast<std::size_t>(dim_));
  }
  if (config_.unigram_mode != UnigramMode::none) {
    FeatureVector uni = unigram_vector(report, *vocab_, config_.unigram_mode);
    if (config_.embedding_mode != EmbeddingMode::none) {
      out.values.insert(out.values.end(), uni.values.begin(), uni.values.end());
    } else {
      out = std::move(uni);
    }
  }
  out.config_fingerprint = fingerprint_;
  if (out.dim() != dim_)
    throw DataError("vectorize: produced dimension " + std::to_string(out.dim()) +
                    " != pipeline dimension " + std::to_string(dim_) + " (report " +
                    report.id + ")");
  return out;
}

}  // namespace icf
