#include "icf/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>
#include <zlib.h>

#include <json.hpp>

#include "icf/error.hpp"
#include "icf/ioutil.hpp"
#include "icf/porter.hpp"
#include "icf/rng.hpp"
#include "icf/text.hpp"

namespace icf {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// ---- LabelSet --------------------------------------------------------------

bool LabelSet::contains(const std::string& label) const {
  return std::find(codes.begin(), codes.end(), label) != codes.end();
}

int LabelSet::index_of(const std::string& label) const {
  const auto it = std::find(codes.begin(), codes.end(), label);
  if (it == codes.end()) throw DataError("label not in label set: " + label);
  return static_cast<int>(it - codes.begin());
}

std::vector<std::string> LabelSet::icf_codes() const {
  std::vector<std::string> out;
  for (const auto& c : codes)
    if (c != other_label) out.push_back(c);
  return out;
}

static void validate_label_set(const LabelSet& ls) {
  if (ls.codes.empty()) throw DataError("label set: empty code list");
  std::set<std::string> seen;
  for (const auto& c : ls.codes) {
    if (c.empty()) throw DataError("label set: empty code");
    if (!seen.insert(c).second) throw DataError("label set: duplicate code " + c);
  }
  if (!ls.contains(ls.other_label))
    throw DataError("label set: catch-all label '" + ls.other_label + "' not among codes");
}

LabelSet load_label_set(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file_bytes(path));
  } catch (const json::exception& e) {
    throw DataError(path + ": invalid JSON: " + e.what());
  }
  if (!j.is_object() || !j.contains("codes") || !j.contains("other"))
    throw DataError(path + ": expected object with 'codes' and 'other'");
  LabelSet ls;
  for (const auto& c : j.at("codes")) ls.codes.push_back(c.get<std::string>());
  ls.other_label = j.at("other").get<std::string>();
  if (!ls.contains(ls.other_label)) ls.codes.push_back(ls.other_label);
  validate_label_set(ls);
  return ls;
}

// ---- Dataset I/O -----------------------------------------------------------

static ActivityReport parse_report_line(const json& j, const LabelSet& labels,
                                         const std::string& where) {
  ActivityReport r;
  if (!j.is_object()) throw DataError(where + ": record is not an object");
  try {
    r.id = j.at("id").get<std::string>();
    for (const auto& t : j.at("tokens")) r.tokens.push_back(t.get<std::string>());
    r.gold_label = j.at("label").get<std::string>();
    if (j.contains("action_span") && !j.at("action_span").is_null()) {
      const auto& s = j.at("action_span");
      if (!s.is_array() || s.size() != 2)
        throw DataError(where + ": action_span must be [start, end)");
      r.action_span = std::make_pair(s[0].get<int>(), s[1].get<int>());
    }
    if (j.contains("contextual_vectors") && !j.at("contextual_vectors").is_null()) {
      for (const auto& v : j.at("contextual_vectors"))
        r.contextual_vectors.push_back(v.get<std::vector<double>>());
    }
  } catch (const json::exception& e) {
    throw DataError(where + ": " + e.what());
  }

  if (r.id.empty()) throw DataError(where + ": empty id");
  if (r.tokens.empty()) throw DataError(where + ": empty token list (id " + r.id + ")");
  if (!labels.contains(r.gold_label))
    throw DataError(where + ": unknown label '" + r.gold_label + "' (id " + r.id + ")");
  if (r.action_span) {
    const auto [s, e] = *r.action_span;
    if (s < 0 || s >= e || e > static_cast<int>(r.tokens.size()))
      throw DataError(where + ": action_span out of range (id " + r.id + ")");
  }
  if (!r.contextual_vectors.empty()) {
    if (r.contextual_vectors.size() != r.tokens.size())
      throw DataError(where + ": contextual_vectors count != token count (id " + r.id + ")");
    const std::size_t dim = r.contextual_vectors.front().size();
    if (dim == 0) throw DataError(where + ": zero-dimensional contextual vector (id " + r.id + ")");
    for (const auto& v : r.contextual_vectors)
      if (v.size() != dim)
        throw DataError(where + ": ragged contextual vectors (id " + r.id + ")");
  }
  return r;
}

Dataset load_dataset(const std::string& path, const LabelSet& labels) {
  validate_label_set(labels);
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset: " + path);

  Dataset ds;
  ds.labels = labels;
  std::unordered_set<std::string> ids;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(where + ": invalid JSON: " + e.what());
    }
    ActivityReport r = parse_report_line(j, labels, where);
    if (!ids.insert(r.id).second) throw DataError(where + ": duplicate id " + r.id);
    ds.reports.push_back(std::move(r));
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ostringstream out;
  for (const auto& r : ds.reports) {
    ordered_json j;
    j["id"] = r.id;
    j["tokens"] = r.tokens;
    if (r.action_span)
      j["action_span"] = {r.action_span->first, r.action_span->second};
    else
      j["action_span"] = nullptr;
    j["label"] = r.gold_label;
    if (!r.contextual_vectors.empty()) j["contextual_vectors"] = r.contextual_vectors;
    out << j.dump() << '\n';
  }
  atomic_write_file(path, out.str());
}

// ---- Definitions -----------------------------------------------------------

DefinitionMap load_definitions(const std::string& path, const LabelSet& labels) {
  json j;
  try {
    j = json::parse(read_file_bytes(path));
  } catch (const json::exception& e) {
    throw DataError(path + ": invalid JSON: " + e.what());
  }
  if (!j.is_array()) throw DataError(path + ": expected a top-level array");

  DefinitionMap defs;
  try {
    for (const auto& d : j) {
      CodeDefinition cd;
      cd.code = d.at("code").get<std::string>();
      cd.name = d.at("name").get<std::string>();
      cd.primary_definition = d.at("definition").get<std::string>();
      if (d.contains("children")) {
        for (const auto& c : d.at("children")) {
          ChildDefinition ch;
          ch.code = c.at("code").get<std::string>();
          ch.name = c.at("name").get<std::string>();
          ch.definition = c.at("definition").get<std::string>();
          cd.child_definitions.push_back(std::move(ch));
        }
      }
      if (cd.primary_definition.empty())
        throw DataError(path + ": empty definition for " + cd.code);
      if (!defs.emplace(cd.code, cd).second)
        throw DataError(path + ": duplicate definition for " + cd.code);
    }
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }

  for (const auto& code : labels.icf_codes())
    if (!defs.count(code))
      throw DataError(path + ": missing definition for label-set code " + code);
  return defs;
}

// ---- Folds -----------------------------------------------------------------

std::vector<int> FoldPlan::test_indices(int fold) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < fold_of_report.size(); ++i)
    if (fold_of_report[i] == fold) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> FoldPlan::dev_indices(int fold) const {
  return test_indices((fold + 1) % k);
}

std::vector<int> FoldPlan::train_indices(int fold) const {
  const int dev = (fold + 1) % k;
  std::vector<int> out;
  for (std::size_t i = 0; i < fold_of_report.size(); ++i)
    if (fold_of_report[i] != fold && fold_of_report[i] != dev)
      out.push_back(static_cast<int>(i));
  return out;
}

FoldPlan split_folds(const Dataset& ds, int k, std::uint64_t seed) {
  const int n = static_cast<int>(ds.reports.size());
  if (k < 2) throw DataError("split_folds: k must be >= 2");
  if (k > n) throw DataError("split_folds: k exceeds dataset size");

  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  rng.shuffle(order);

  FoldPlan plan;
  plan.k = k;
  plan.fold_of_report.assign(static_cast<std::size_t>(n), 0);
  for (int pos = 0; pos < n; ++pos)
    plan.fold_of_report[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = pos % k;
  return plan;
}

// ---- Bundled mobility inventory ---------------------------------------------

LabelSet mobility_label_set() {
  LabelSet ls;
  ls.codes = {"d410", "d415", "d420", "d430", "d435", "d440",
              "d445", "d450", "d455", "d460", "d470", "d475", "Other"};
  ls.other_label = "Other";
  return ls;
}

const std::map<std::string, int>& default_mobility_counts() {
  static const std::map<std::string, int> kCounts = {
      {"d410", 838}, {"d415", 612}, {"d420", 522}, {"d430", 44},
      {"d435", 2},   {"d440", 10},  {"d445", 66},  {"d450", 1603},
      {"d455", 378}, {"d460", 176}, {"d470", 38},  {"d475", 77},
      {"Other", 161}};
  return kCounts;
}

std::map<std::string, double> default_mobility_skew() {
  const auto& counts = default_mobility_counts();
  double total = 0.0;
  for (const auto& [code, c] : counts) total += c;
  std::map<std::string, double> skew;
  for (const auto& [code, c] : counts) skew[code] = c / total;
  return skew;
}

// ---- Synthetic generator ----------------------------------------------------

namespace {

// Stemmed content words of a text (stopwords and words shorter than three
// characters dropped).
std::set<std::string> content_stems(const std::string& text) {
  std::set<std::string> out;
  const auto& stop = english_stopwords();
  for (const auto& w : tokenize_words(text))
    if (w.size() >= 3 && !stop.count(w)) out.insert(porter_stem(w));
  return out;
}

std::string full_definition_text(const CodeDefinition& def) {
  std::string text = def.name + " " + def.primary_definition;
  for (const auto& ch : def.child_definitions) text += " " + ch.name + " " + ch.definition;
  return text;
}

bool has_digit(const std::string& w) {
  for (const char c : w)
    if (c >= '0' && c <= '9') return true;
  return false;
}

}  // namespace

std::map<std::string, std::vector<std::string>> synthetic_trigger_pools(
    const DefinitionMap& defs, const LabelSet& labels) {
  // Stems of every code's full text, used to rule out cross-code collisions.
  std::map<std::string, std::set<std::string>> all_stems;
  for (const auto& code : labels.icf_codes()) {
    const auto it = defs.find(code);
    if (it == defs.end()) throw DataError("synthetic generator: no definition for " + code);
    all_stems[code] = content_stems(full_definition_text(it->second));
  }

  std::map<std::string, std::vector<std::string>> pools;
  const auto& stop = english_stopwords();
  for (const auto& code : labels.icf_codes()) {
    std::vector<std::string> pool;
    std::set<std::string> seen;
    for (const auto& w : tokenize_words(defs.at(code).primary_definition)) {
      if (w.size() < 3 || stop.count(w) || has_digit(w)) continue;
      if (!seen.insert(w).second) continue;
      const std::string stem = porter_stem(w);
      bool unique = true;
      for (const auto& [other_code, stems] : all_stems) {
        if (other_code == code) continue;
        if (stems.count(stem)) {
          unique = false;
          break;
        }
      }
      if (unique) pool.push_back(w);
    }
    if (pool.empty())
      throw DataError("synthetic generator: definition for " + code +
                      " has no distinctive content words");
    pools[code] = std::move(pool);
  }
  return pools;
}

std::vector<std::string> synthetic_noise_vocabulary(const DefinitionMap& defs) {
  // Clinical-note filler.  Filtered against every definition stem so noise
  // never overlaps a definition profile.
  static const std::vector<std::string> kCandidates = {
      "patient",  "pt",       "session",  "today",    "morning",  "afternoon",
      "tolerated", "denies",  "states",   "notes",    "nurse",    "therapist",
      "plan",     "goal",     "visit",    "alert",    "oriented", "fatigue",
      "pain",     "vitals",   "stable",   "min",      "mod",      "max",
      "cues",     "verbal",   "daily",    "routine",  "breaks",   "rest"};

  std::set<std::string> def_stems;
  for (const auto& [code, def] : defs) {
    const auto stems = content_stems(full_definition_text(def));
    def_stems.insert(stems.begin(), stems.end());
  }

  std::vector<std::string> out;
  const auto& stop = english_stopwords();
  for (const auto& w : kCandidates) {
    if (stop.count(w)) continue;
    if (def_stems.count(porter_stem(w))) continue;
    out.push_back(w);
  }
  if (out.size() < 8)
    throw DataError("synthetic generator: noise vocabulary nearly exhausted by definition overlap");
  return out;
}

Dataset generate_synthetic(const DefinitionMap& defs, const LabelSet& labels,
                           const SynthOptions& opt) {
  validate_label_set(labels);
  if (opt.n <= 0) throw DataError("generate_synthetic: n must be positive");
  if (opt.min_triggers < 1 || opt.max_triggers < opt.min_triggers)
    throw DataError("generate_synthetic: bad trigger count range");
  if (opt.min_noise < 0 || opt.max_noise < opt.min_noise)
    throw DataError("generate_synthetic: bad noise count range");

  double sum = 0.0;
  for (const auto& [label, p] : opt.skew) {
    if (!labels.contains(label))
      throw DataError("generate_synthetic: skew entry for unknown label " + label);
    if (p < 0.0) throw DataError("generate_synthetic: negative skew for " + label);
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw DataError("generate_synthetic: skew must sum to 1");

  // Largest-remainder quota so label counts match n * skew exactly.
  struct Quota {
    std::string label;
    int base;
    double frac;
    int order;
  };
  std::vector<Quota> quotas;
  int assigned = 0;
  int order = 0;
  for (const auto& label : labels.codes) {
    const auto it = opt.skew.find(label);
    const double target = (it == opt.skew.end() ? 0.0 : it->second) * opt.n;
    Quota q{label, static_cast<int>(std::floor(target)), target - std::floor(target), order++};
    assigned += q.base;
    quotas.push_back(q);
  }
  std::vector<int> by_frac(quotas.size());
  for (std::size_t i = 0; i < quotas.size(); ++i) by_frac[i] = static_cast<int>(i);
  std::stable_sort(by_frac.begin(), by_frac.end(), [&](int a, int b) {
    const auto& qa = quotas[static_cast<std::size_t>(a)];
    const auto& qb = quotas[static_cast<std::size_t>(b)];
    if (qa.frac != qb.frac) return qa.frac > qb.frac;
    return qa.order < qb.order;
  });
  for (int i = 0; i < opt.n - assigned; ++i)
    ++quotas[static_cast<std::size_t>(by_frac[static_cast<std::size_t>(i) % by_frac.size()])].base;

  std::vector<std::string> label_seq;
  label_seq.reserve(static_cast<std::size_t>(opt.n));
  for (const auto& q : quotas)
    for (int i = 0; i < q.base; ++i) label_seq.push_back(q.label);
  if (static_cast<int>(label_seq.size()) != opt.n)
    throw DataError("generate_synthetic: internal quota mismatch");

  Rng rng(opt.seed);
  rng.shuffle(label_seq);

  const auto pools = synthetic_trigger_pools(defs, labels);
  const auto noise = synthetic_noise_vocabulary(defs);

  Dataset ds;
  ds.labels = labels;
  ds.reports.reserve(label_seq.size());
  char idbuf[32];
  for (int i = 0; i < opt.n; ++i) {
    const std::string& label = label_seq[static_cast<std::size_t>(i)];
    ActivityReport r;
    std::snprintf(idbuf, sizeof(idbuf), "synth-%06d", i);
    r.id = idbuf;
    r.gold_label = label;

    const int t = static_cast<int>(rng.int_range(opt.min_triggers, opt.max_triggers));
    const int m = static_cast<int>(rng.int_range(opt.min_noise, opt.max_noise));
    const int pre = m > 0 ? static_cast<int>(rng.int_range(0, m)) : 0;

    const std::vector<std::string>& content_pool =
        label == labels.other_label ? noise : pools.at(label);

    for (int p = 0; p < pre; ++p) r.tokens.push_back(noise[rng.index(noise.size())]);
    for (int c = 0; c < t; ++c) r.tokens.push_back(content_pool[rng.index(content_pool.size())]);
    for (int p = pre; p < m; ++p) r.tokens.push_back(noise[rng.index(noise.size())]);
    r.action_span = std::make_pair(pre, pre + t);
    ds.reports.push_back(std::move(r));
  }
  return ds;
}

void write_synthetic_embeddings(const Dataset& ds, const DefinitionMap& defs,
                                const std::string& path, int dim,
                                std::uint64_t seed, double jitter) {
  if (dim < 2) throw DataError("write_synthetic_embeddings: dim must be >= 2");

  const auto pools = synthetic_trigger_pools(defs, ds.labels);
  const auto noise = synthetic_noise_vocabulary(defs);

  // Vocabulary: every report token plus every definition word.
  std::set<std::string> vocab;
  for (const auto& r : ds.reports)
    for (const auto& t : r.tokens) vocab.insert(t);
  for (const auto& [code, def] : defs)
    for (const auto& w : tokenize_words(full_definition_text(def))) vocab.insert(w);

  std::map<std::string, int> word_cluster;  // word -> cluster id
  int cluster_count = 0;
  for (const auto& code : ds.labels.icf_codes()) {
    const auto it = pools.find(code);
    for (const auto& w : it->second) word_cluster[w] = cluster_count;
    ++cluster_count;
  }
  const int noise_cluster = cluster_count++;
  for (const auto& w : noise)
    if (!word_cluster.count(w)) word_cluster[w] = noise_cluster;

  Rng rng(seed);
  auto unit_gaussian = [&](std::vector<double>& v) {
    double norm = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      v[0] = 1.0;
      norm = 1.0;
    }
    for (auto& x : v) x /= norm;
  };

  std::vector<std::vector<double>> centers(static_cast<std::size_t>(cluster_count),
                                           std::vector<double>(static_cast<std::size_t>(dim)));
  for (auto& c : centers) unit_gaussian(c);

  std::ostringstream out;
  out << vocab.size() << ' ' << dim << '\n';
  char num[40];
  std::vector<double> v(static_cast<std::size_t>(dim));
  for (const auto& w : vocab) {
    const auto it = word_cluster.find(w);
    if (it != word_cluster.end()) {
      std::vector<double> eps(static_cast<std::size_t>(dim));
      unit_gaussian(eps);
      double norm = 0.0;
      const auto& c = centers[static_cast<std::size_t>(it->second)];
      for (int d = 0; d < dim; ++d) {
        v[static_cast<std::size_t>(d)] =
            c[static_cast<std::size_t>(d)] + jitter * eps[static_cast<std::size_t>(d)];
        norm += v[static_cast<std::size_t>(d)] * v[static_cast<std::size_t>(d)];
      }
      norm = std::sqrt(norm);
      for (auto& x : v) x /= norm;
    } else {
      unit_gaussian(v);
    }
    out << w;
    for (const double x : v) {
      std::snprintf(num, sizeof(num), " %.17g", x);
      out << num;
    }
    out << '\n';
  }

  if (path.size() > 3 && path.substr(path.size() - 3) == ".gz") {
    ensure_parent_directory(path);
    gzFile gz = gzopen(path.c_str(), "wb");
    if (!gz) throw DataError("cannot open for writing: " + path);
    const std::string bytes = out.str();
    if (gzwrite(gz, bytes.data(), static_cast<unsigned>(bytes.size())) !=
        static_cast<int>(bytes.size())) {
      gzclose(gz);
      throw DataError("gzip write failure: " + path);
    }
    gzclose(gz);
  } else {
    atomic_write_file(path, out.str());
  }
}

}  // namespace icf
