#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "icf/corpus.hpp"

namespace icf {

// Lowercases, strips punctuation, and maps every decimal digit to '0'.
// May return an empty string; callers skip empties.
std::string normalize_token(std::string_view token);

// Unigram vocabulary over normalized training tokens.  Words are stored
// sorted so indices are reproducible; df counts one per report containing
// the word.
struct Vocabulary {
  std::vector<std::string> words;
  std::unordered_map<std::string, int> index;
  std::vector<int> document_frequency;
  int n_documents = 0;

  int size() const { return static_cast<int>(words.size()); }
  std::uint64_t fingerprint() const;
};

Vocabulary build_vocabulary(const std::vector<const ActivityReport*>& train_reports);

// Pretrained word vectors in word2vec text format (plain or gzip).
class EmbeddingTable {
 public:
  static EmbeddingTable load(const std::string& path);

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(words_.size()); }
  // Vector for `word`, or nullptr if absent.
  const double* find(const std::string& word) const;
  const std::vector<std::string>& words() const { return words_; }
  std::uint64_t fingerprint() const { return fingerprint_; }

 private:
  int dim_ = 0;
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
  std::vector<double> values_;  // row-major, aligned with words_
  std::uint64_t fingerprint_ = 0;
};

inline EmbeddingTable load_embeddings(const std::string& path) {
  return EmbeddingTable::load(path);
}

enum class UnigramMode { none, binary, tfidf };
enum class EmbeddingMode { none, static_table, contextual };

struct FeatureConfig {
  UnigramMode unigram_mode = UnigramMode::none;
  EmbeddingMode embedding_mode = EmbeddingMode::none;
  bool action_oracle = false;
  bool concatenate_hybrid = false;
};

const char* to_string(UnigramMode m);
const char* to_string(EmbeddingMode m);

struct FeatureVector {
  std::vector<double> values;
  std::uint64_t config_fingerprint = 0;

  int dim() const { return static_cast<int>(values.size()); }
};

// Raw feature builders.  Each stamps a fingerprint derived from its own
// inputs; FeaturePipeline overrides the stamp with one pipeline-wide value.
FeatureVector unigram_vector(const ActivityReport& report, const Vocabulary& vocab,
                             UnigramMode mode);

// static, no oracle: mean of in-table normalized-token vectors (dim D).
// static + oracle: concat(mean(context tokens), mean(action tokens)), dim 2D.
// contextual, no oracle: mean of the precomputed per-token vectors.
// contextual + oracle: mean of action-token vectors only.
// A mean with zero contributing tokens is the zero vector.
FeatureVector embed_report(const ActivityReport& report, const EmbeddingTable* table,
                           const FeatureConfig& config);

// Concatenation [embedding ; unigram].  Both parts must carry the same
// fingerprint (i.e., come from the same pipeline pass).
FeatureVector hybrid_vector(const FeatureVector& embedding_part,
                            const FeatureVector& unigram_part);

// Mean embedding of a definition text's normalized words; OOV words skipped;
// all-OOV yields the zero vector.  With `extended`, child definitions are
// pooled into one auxiliary mean down-weighted 50%:
//   v = (v_primary + 0.5 * v_children) / 1.5
// A code with no children falls back to v_primary alone.  With `duplicated`
// (action-oracle + static reports have dim 2D), the vector is concat(v, v).
FeatureVector embed_definition(const CodeDefinition& def, const EmbeddingTable& table,
                               bool extended, bool duplicated);

// Per-fold feature builder: owns the train-only vocabulary, points at the
// shared embedding table, and stamps every produced vector with one
// fingerprint so models can detect train/test pipeline mismatches.
class FeaturePipeline {
 public:
  static FeaturePipeline build(const std::vector<const ActivityReport*>& train_reports,
                               const FeatureConfig& config, const EmbeddingTable* table);

  FeatureVector vectorize(const ActivityReport& report) const;

  const FeatureConfig& config() const { return config_; }
  const std::optional<Vocabulary>& vocabulary() const { return vocab_; }
  const EmbeddingTable* table() const { return table_; }
  int contextual_dim() const { return contextual_dim_; }
  int dim() const { return dim_; }
  std::uint64_t fingerprint() const { return fingerprint_; }

  // Rebuilds a pipeline from persisted state (model artifacts).
  static FeaturePipeline restore(const FeatureConfig& config, std::optional<Vocabulary> vocab,
                                 const EmbeddingTable* table, int contextual_dim);

 private:
  FeatureConfig config_;
  std::optional<Vocabulary> vocab_;
  const EmbeddingTable* table_ = nullptr;
  int contextual_dim_ = 0;
  int dim_ = 0;
  std::uint64_t fingerprint_ = 0;

  void finish_build();
};

}  // namespace icf
