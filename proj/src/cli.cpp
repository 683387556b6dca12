#include "icf/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "icf/config.hpp"
#include "icf/corpus.hpp"
#include "icf/error.hpp"
#include "icf/eval.hpp"
#include "icf/features.hpp"
#include "icf/hash.hpp"
#include "icf/ioutil.hpp"
#include "icf/rng.hpp"
#include "icf/text.hpp"

namespace fs = std::filesystem;

namespace icf {
namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string fmt_f17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fp_hex(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return std::string("fnv1a64:") + buf;
}

std::uint64_t fp_parse(const std::string& s, const std::string& what) {
  const std::string prefix = "fnv1a64:";
  if (s.rfind(prefix, 0) != 0 || s.size() != prefix.size() + 16)
    throw DataError(what + ": malformed fingerprint '" + s + "'");
  return std::stoull(s.substr(prefix.size()), nullptr, 16);
}

ConfigFile require_config(const CliFlags& flags) {
  if (flags.config_path.empty())
    throw DataError("--config is required for this command");
  return ConfigFile::parse_file(flags.config_path);
}

void require_key(const std::string& value, const std::string& key) {
  if (value.empty())
    throw DataError("this command needs the config key '" + key + "'");
}

// ---- JSON (de)serialization of model pieces -------------------------------------

json matrix_to_json(const kern::Matrix& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows; ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols; ++c) row.push_back(m.at(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

kern::Matrix matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty())
    throw DataError(what + ": expected a non-empty 2-d numeric array");
  kern::Matrix m(static_cast<int>(j.size()), static_cast<int>(j[0].size()));
  for (int r = 0; r < m.rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<int>(row.size()) != m.cols)
      throw DataError(what + ": ragged rows");
    for (int c = 0; c < m.cols; ++c) {
      const auto& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw DataError(what + ": non-numeric entry");
      m.at(r, c) = v.get<double>();
    }
  }
  return m;
}

std::vector<double> dvec_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw DataError(what + ": expected a numeric array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw DataError(what + ": non-numeric entry");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<std::string> svec_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw DataError(what + ": expected a string array");
  std::vector<std::string> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_string()) throw DataError(what + ": non-string entry");
    out.push_back(v.get<std::string>());
  }
  return out;
}

UnigramMode unigram_mode_from(const std::string& v, const std::string& what) {
  if (v == "none") return UnigramMode::none;
  if (v == "binary") return UnigramMode::binary;
  if (v == "tfidf") return UnigramMode::tfidf;
  throw DataError(what + ": unknown unigram mode '" + v + "'");
}

EmbeddingMode embedding_mode_from(const std::string& v, const std::string& what) {
  if (v == "none") return EmbeddingMode::none;
  if (v == "static") return EmbeddingMode::static_table;
  if (v == "contextual") return EmbeddingMode::contextual;
  throw DataError(what + ": unknown embedding mode '" + v + "'");
}

ScoreMode score_mode_from(const std::string& v, const std::string& what) {
  if (v == "combined") return ScoreMode::combined;
  if (v == "cosine") return ScoreMode::cosine;
  throw DataError(what + ": unknown score mode '" + v + "'");
}

ordered_json features_to_json(const FeatureConfig& c) {
  ordered_json j;
  j["unigram"] = to_string(c.unigram_mode);
  j["embedding"] = to_string(c.embedding_mode);
  j["oracle"] = c.action_oracle;
  j["hybrid"] = c.concatenate_hybrid;
  return j;
}

FeatureConfig features_from_json(const json& j) {
  FeatureConfig c;
  c.unigram_mode = unigram_mode_from(j.at("unigram").get<std::string>(), "model artifact");
  c.embedding_mode =
      embedding_mode_from(j.at("embedding").get<std::string>(), "model artifact");
  c.action_oracle = j.at("oracle").get<bool>();
  c.concatenate_hybrid = j.at("hybrid").get<bool>();
  return c;
}

ordered_json hyper_to_json(const SystemHyper& h, ModelKind kind) {
  ordered_json j;
  switch (kind) {
    case ModelKind::knn:
      j["k"] = h.knn_k;
      break;
    case ModelKind::svm:
      j["c"] = h.svm_c;
      j["epochs"] = h.svm_epochs;
      break;
    case ModelKind::mlp:
      j["hidden"] = h.mlp_hidden;
      j["l2"] = h.mlp_l2;
      j["epochs"] = h.mlp_max_epochs;
      break;
    case ModelKind::lesk:
      j["extended"] = h.extended_definitions;
      break;
    case ModelKind::cosine:
      j["extended"] = h.extended_definitions;
      j["duplicated"] = h.duplicated_definitions;
      break;
    case ModelKind::projection:
      j["hidden_layers"] = h.proj_hidden_layers;
      j["epochs"] = h.proj_epochs;
      j["batch"] = h.proj_batch;
      j["score"] = to_string(h.proj_score);
      j["extended"] = h.extended_definitions;
      break;
  }
  return j;
}

SystemHyper hyper_from_json(const json& j, ModelKind kind) {
  SystemHyper h;
  switch (kind) {
    case ModelKind::knn:
      h.knn_k = j.at("k").get<int>();
      break;
    case ModelKind::svm:
      h.svm_c = j.at("c").get<double>();
      h.svm_epochs = j.at("epochs").get<int>();
      break;
    case ModelKind::mlp:
      h.mlp_hidden = j.at("hidden").get<int>();
      h.mlp_l2 = j.at("l2").get<double>();
      h.mlp_max_epochs = j.at("epochs").get<int>();
      break;
    case ModelKind::lesk:
      h.extended_definitions = j.at("extended").get<bool>();
      break;
    case ModelKind::cosine:
      h.extended_definitions = j.at("extended").get<bool>();
      h.duplicated_definitions = j.at("duplicated").get<bool>();
      break;
    case ModelKind::projection:
      h.proj_hidden_layers = j.at("hidden_layers").get<int>();
      h.proj_epochs = j.at("epochs").get<int>();
      h.proj_batch = j.at("batch").get<int>();
      h.proj_score = score_mode_from(j.at("score").get<std::string>(), "model artifact");
      h.extended_definitions = j.at("extended").get<bool>();
      break;
  }
  return h;
}

ordered_json pipeline_to_json(const FeaturePipeline& p) {
  ordered_json j;
  j["fingerprint"] = fp_hex(p.fingerprint());
  j["dim"] = p.dim();
  j["contextual_dim"] = p.contextual_dim();
  if (p.vocabulary()) {
    ordered_json v;
    v["words"] = p.vocabulary()->words;
    v["df"] = p.vocabulary()->document_frequency;
    v["n_documents"] = p.vocabulary()->n_documents;
    j["vocabulary"] = std::move(v);
  } else {
    j["vocabulary"] = nullptr;
  }
  if (p.table()) {
    ordered_json t;
    t["fingerprint"] = fp_hex(p.table()->fingerprint());
    t["dim"] = p.table()->dim();
    j["table"] = std::move(t);
  } else {
    j["table"] = nullptr;
  }
  return j;
}

FeaturePipeline pipeline_from_json(const json& j, const FeatureConfig& config,
                                   const EmbeddingTable* table) {
  std::optional<Vocabulary> vocab;
  if (!j.at("vocabulary").is_null()) {
    const json& v = j.at("vocabulary");
    Vocabulary voc;
    voc.words = svec_from_json(v.at("words"), "model artifact vocabulary");
    voc.document_frequency.reserve(v.at("df").size());
    for (const auto& d : v.at("df")) voc.document_frequency.push_back(d.get<int>());
    voc.n_documents = v.at("n_documents").get<int>();
    if (voc.words.size() != voc.document_frequency.size())
      throw DataError("model artifact: vocabulary words/df size mismatch");
    for (int i = 0; i < voc.size(); ++i) voc.index.emplace(voc.words[static_cast<std::size_t>(i)], i);
    vocab = std::move(voc);
  }
  if (!j.at("table").is_null()) {
    if (!table)
      throw DataError(
          "model artifact was trained with an embedding table; set embeddings= in the config");
    const std::uint64_t want =
        fp_parse(j.at("table").at("fingerprint").get<std::string>(), "model artifact");
    if (table->fingerprint() != want)
      throw DataError("embedding table does not match the model artifact (fingerprint " +
                      fp_hex(table->fingerprint()) + ", artifact wants " + fp_hex(want) + ")");
  } else {
    table = nullptr;
  }
  FeaturePipeline p = FeaturePipeline::restore(config, std::move(vocab), table,
                                               j.at("contextual_dim").get<int>());
  const std::uint64_t want = fp_parse(j.at("fingerprint").get<std::string>(), "model artifact");
  if (p.fingerprint() != want)
    throw DataError("model artifact: restored feature pipeline fingerprint mismatch");
  if (p.dim() != j.at("dim").get<int>())
    throw DataError("model artifact: restored feature dimension mismatch");
  return p;
}

ordered_json code_set_to_json(const CodeEmbeddingSet& s) {
  ordered_json j;
  j["codes"] = s.codes;
  j["vectors"] = matrix_to_json(s.vectors);
  j["extended"] = s.extended;
  j["duplicated"] = s.duplicated;
  j["fingerprint"] = fp_hex(s.fingerprint);
  return j;
}

CodeEmbeddingSet code_set_from_json(const json& j) {
  CodeEmbeddingSet s;
  s.codes = svec_from_json(j.at("codes"), "model artifact code set");
  s.vectors = matrix_from_json(j.at("vectors"), "model artifact code vectors");
  s.extended = j.at("extended").get<bool>();
  s.duplicated = j.at("duplicated").get<bool>();
  s.fingerprint = fp_parse(j.at("fingerprint").get<std::string>(), "model artifact code set");
  if (static_cast<int>(s.codes.size()) != s.vectors.rows)
    throw DataError("model artifact: code list does not match vector rows");
  return s;
}

ordered_json params_to_json(const TrainedSystem& ts) {
  ordered_json p;
  switch (ts.model) {
    case ModelKind::knn:
      p["k"] = ts.knn->k;
      p["label_order"] = ts.knn->label_order;
      p["point_labels"] = ts.knn->point_labels;
      p["points"] = matrix_to_json(ts.knn->points);
      p["feature_fingerprint"] = fp_hex(ts.knn->feature_fingerprint);
      break;
    case ModelKind::svm:
      p["label_order"] = ts.svm->label_order;
      p["weights"] = matrix_to_json(ts.svm->weights);
      p["bias"] = ts.svm->bias;
      p["feature_fingerprint"] = fp_hex(ts.svm->feature_fingerprint);
      break;
    case ModelKind::mlp:
      p["label_order"] = ts.mlp->label_order;
      p["w1"] = matrix_to_json(ts.mlp->w1);
      p["b1"] = ts.mlp->b1;
      p["w2"] = matrix_to_json(ts.mlp->w2);
      p["b2"] = ts.mlp->b2;
      p["feature_fingerprint"] = fp_hex(ts.mlp->feature_fingerprint);
      break;
    case ModelKind::lesk: {
      p["fallback"] = ts.lesk_fallback;
      p["codes"] = ts.lesk->codes;
      std::vector<std::string> vocab(ts.lesk->vocabulary.size());
      for (const auto& [word, idx] : ts.lesk->vocabulary)
        vocab[static_cast<std::size_t>(idx)] = word;
      p["vocabulary"] = vocab;
      json rows = json::array();
      for (const auto& row : ts.lesk->rows) {
        json r = json::array();
        for (const auto bit : row) r.push_back(static_cast<int>(bit));
        rows.push_back(std::move(r));
      }
      p["rows"] = std::move(rows);
      p["extended"] = ts.lesk->extended;
      break;
    }
    case ModelKind::cosine:
      p["codes"] = code_set_to_json(*ts.codes);
      break;
    case ModelKind::projection: {
      p["codes"] = code_set_to_json(*ts.codes);
      p["code_dim"] = ts.projection->code_dim;
      p["code_order"] = ts.projection->code_order;
      json ws = json::array();
      for (const auto& w : ts.projection->weights) ws.push_back(matrix_to_json(w));
      p["weights"] = std::move(ws);
      p["biases"] = ts.projection->biases;
      p["codes_fingerprint"] = fp_hex(ts.projection->codes_fingerprint);
      p["feature_fingerprint"] = fp_hex(ts.projection->feature_fingerprint);
      break;
    }
  }
  return p;
}

ordered_json artifact_from_system(const TrainedSystem& ts) {
  ordered_json a;
  a["format"] = "icfcoder-model";
  a["version"] = 1;
  a["system_id"] = ts.system_id;
  a["model"] = to_string(ts.model);
  a["paradigm"] = to_string(paradigm_of(ts.model));
  ordered_json labels;
  labels["codes"] = ts.labels.codes;
  labels["other"] = ts.labels.other_label;
  a["labels"] = std::move(labels);
  a["hyper"] = hyper_to_json(ts.hyper, ts.model);
  a["hyper_summary"] = ts.hyper.describe(ts.model);
  if (ts.pipeline) {
    a["features"] = features_to_json(ts.pipeline->config());
    a["pipeline"] = pipeline_to_json(*ts.pipeline);
  } else {
    a["features"] = nullptr;
    a["pipeline"] = nullptr;
  }
  a["params"] = params_to_json(ts);
  return a;
}

bool artifact_needs_table(const json& a) {
  return !a.at("pipeline").is_null() && !a.at("pipeline").at("table").is_null();
}

TrainedSystem system_from_artifact(const json& a, const EmbeddingTable* table) {
  if (!a.is_object() || a.value("format", "") != std::string("icfcoder-model"))
    throw DataError("model artifact: unrecognized format");
  if (a.at("version").get<int>() != 1)
    throw DataError("model artifact: unsupported version");

  TrainedSystem ts;
  ts.system_id = a.at("system_id").get<std::string>();
  ts.model = model_kind_from(a.at("model").get<std::string>());
  ts.labels.codes = svec_from_json(a.at("labels").at("codes"), "model artifact labels");
  ts.labels.other_label = a.at("labels").at("other").get<std::string>();
  ts.hyper = hyper_from_json(a.at("hyper"), ts.model);

  if (!a.at("pipeline").is_null())
    ts.pipeline = pipeline_from_json(a.at("pipeline"),
                                     features_from_json(a.at("features")), table);

  const json& p = a.at("params");
  const auto check_fp = [&](std::uint64_t model_fp) {
    if (!ts.pipeline || ts.pipeline->fingerprint() != model_fp)
      throw DataError("model artifact: model/pipeline fingerprint mismatch");
  };
  switch (ts.model) {
    case ModelKind::knn: {
      KnnModel m;
      m.k = p.at("k").get<int>();
      m.label_order = svec_from_json(p.at("label_order"), "model artifact");
      m.points = matrix_from_json(p.at("points"), "model artifact knn points");
      for (const auto& v : p.at("point_labels")) m.point_labels.push_back(v.get<int>());
      m.feature_fingerprint = fp_parse(p.at("feature_fingerprint").get<std::string>(),
                                       "model artifact");
      check_fp(m.feature_fingerprint);
      if (static_cast<int>(m.point_labels.size()) != m.points.rows)
        throw DataError("model artifact: knn labels do not match points");
      ts.knn = std::move(m);
      break;
    }
    case ModelKind::svm: {
      LinearSvmModel m;
      m.label_order = svec_from_json(p.at("label_order"), "model artifact");
      m.weights = matrix_from_json(p.at("weights"), "model artifact svm weights");
      m.bias = dvec_from_json(p.at("bias"), "model artifact svm bias");
      m.feature_fingerprint = fp_parse(p.at("feature_fingerprint").get<std::string>(),
                                       "model artifact");
      check_fp(m.feature_fingerprint);
      if (m.bias.size() != m.label_order.size() ||
          static_cast<int>(m.label_order.size()) != m.weights.rows)
        throw DataError("model artifact: svm shapes inconsistent");
      ts.svm = std::move(m);
      break;
    }
    case ModelKind::mlp: {
      MlpModel m;
      m.label_order = svec_from_json(p.at("label_order"), "model artifact");
      m.w1 = matrix_from_json(p.at("w1"), "model artifact mlp w1");
      m.b1 = dvec_from_json(p.at("b1"), "model artifact mlp b1");
      m.w2 = matrix_from_json(p.at("w2"), "model artifact mlp w2");
      m.b2 = dvec_from_json(p.at("b2"), "model artifact mlp b2");
      m.feature_fingerprint = fp_parse(p.at("feature_fingerprint").get<std::string>(),
                                       "model artifact");
      check_fp(m.feature_fingerprint);
      if (m.w1.cols != static_cast<int>(m.b1.size()) || m.w2.rows != m.w1.cols ||
          m.w2.cols != static_cast<int>(m.b2.size()) ||
          m.b2.size() != m.label_order.size())
        throw DataError("model artifact: mlp shapes inconsistent");
      ts.mlp = std::move(m);
      break;
    }
    case ModelKind::lesk: {
      LeskProfiles prof;
      prof.codes = svec_from_json(p.at("codes"), "model artifact lesk codes");
      const std::vector<std::string> vocab =
          svec_from_json(p.at("vocabulary"), "model artifact lesk vocabulary");
      for (int i = 0; i < static_cast<int>(vocab.size()); ++i)
        prof.vocabulary.emplace(vocab[static_cast<std::size_t>(i)], i);
      for (const auto& row : p.at("rows")) {
        std::vector<std::uint8_t> r;
        r.reserve(row.size());
        for (const auto& bit : row) r.push_back(static_cast<std::uint8_t>(bit.get<int>()));
        if (r.size() != vocab.size())
          throw DataError("model artifact: lesk profile row length mismatch");
        prof.rows.push_back(std::move(r));
      }
      if (prof.rows.size() != prof.codes.size())
        throw DataError("model artifact: lesk profile count mismatch");
      prof.extended = p.at("extended").get<bool>();
      ts.lesk = std::move(prof);
      ts.lesk_fallback = p.at("fallback").get<std::string>();
      break;
    }
    case ModelKind::cosine:
      ts.codes = code_set_from_json(p.at("codes"));
      if (ts.pipeline && ts.pipeline->dim() != ts.codes->dim())
        throw DataError("model artifact: feature/code dimension mismatch");
      break;
    case ModelKind::projection: {
      ts.codes = code_set_from_json(p.at("codes"));
      ProjectionModel m;
      m.code_dim = p.at("code_dim").get<int>();
      m.code_order = svec_from_json(p.at("code_order"), "model artifact");
      for (const auto& w : p.at("weights"))
        m.weights.push_back(matrix_from_json(w, "model artifact projection weights"));
      for (const auto& b : p.at("biases"))
        m.biases.push_back(dvec_from_json(b, "model artifact projection biases"));
      m.codes_fingerprint = fp_parse(p.at("codes_fingerprint").get<std::string>(),
                                     "model artifact");
      m.feature_fingerprint = fp_parse(p.at("feature_fingerprint").get<std::string>(),
                                       "model artifact");
      check_fp(m.feature_fingerprint);
      if (m.codes_fingerprint != ts.codes->fingerprint)
        throw DataError("model artifact: projection/code-set fingerprint mismatch");
      if (m.weights.size() != m.biases.size() || m.weights.empty())
        throw DataError("model artifact: projection layer shapes inconsistent");
      ts.projection = std::move(m);
      break;
    }
  }
  return ts;
}

// ---- CSV/metric writers ----------------------------------------------------------

std::string predictions_csv(const std::vector<PredictionRecord>& preds) {
  std::ostringstream out;
  out << "id,gold,predicted,fold,system\n";
  for (const auto& p : preds)
    out << p.report_id << ',' << p.gold << ',' << p.predicted << ',' << p.fold << ','
        << p.system_id << '\n';
  return out.str();
}

std::string folds_csv(const CvResult& res, const SystemConfig& sys) {
  std::ostringstream out;
  out << "fold,grid_choice,hyper,dev_macro_f1,test_macro_f1_all_labels,test_macro_f1_icf_only\n";
  for (const auto& f : res.folds)
    out << f.fold << ',' << f.grid_choice << ','
        << sys.grid[static_cast<std::size_t>(f.grid_choice)].describe(sys.model) << ','
        << fmt_f17(f.dev_macro_f1) << ',' << fmt_f17(f.test_all.macro_f1) << ','
        << fmt_f17(f.test_icf.macro_f1) << '\n';
  return out.str();
}

std::string per_label_csv(const MetricsReport& rep) {
  std::ostringstream out;
  out << "label,precision,recall,f1,support,predicted,tp\n";
  for (std::size_t i = 0; i < rep.labels.size(); ++i) {
    const auto& m = rep.per_label[i];
    out << rep.labels[i] << ',' << fmt_f17(m.precision) << ',' << fmt_f17(m.recall) << ','
        << fmt_f17(m.f1) << ',' << m.support << ',' << m.predicted << ',' << m.tp << '\n';
  }
  return out.str();
}

std::string confusion_csv(const MetricsReport& rep) {
  std::ostringstream out;
  out << "gold\\predicted";
  for (const auto& l : rep.labels) out << ',' << l;
  out << '\n';
  for (std::size_t g = 0; g < rep.labels.size(); ++g) {
    out << rep.labels[g];
    for (std::size_t p = 0; p < rep.labels.size(); ++p) out << ',' << rep.confusion[g][p];
    out << '\n';
  }
  return out.str();
}

ordered_json metrics_to_json(const MetricsReport& rep, const std::string& system_id) {
  ordered_json j;
  j["system"] = system_id;
  j["mode"] = to_string(rep.mode);
  j["macro_f1"] = rep.macro_f1;
  j["n_scored"] = rep.n_scored;
  j["n_in_matrix"] = rep.n_in_matrix;
  ordered_json per = ordered_json::array();
  for (std::size_t i = 0; i < rep.labels.size(); ++i) {
    const auto& m = rep.per_label[i];
    ordered_json e;
    e["label"] = rep.labels[i];
    e["precision"] = m.precision;
    e["recall"] = m.recall;
    e["f1"] = m.f1;
    e["support"] = m.support;
    e["predicted"] = m.predicted;
    e["tp"] = m.tp;
    per.push_back(std::move(e));
  }
  j["per_label"] = std::move(per);
  return j;
}

std::string dump_json(const ordered_json& j) { return j.dump(2) + "\n"; }

// Loads shared inputs for commands that fit or apply systems.
struct LoadedInputs {
  LabelSet labels;
  Dataset dataset;
  std::optional<DefinitionMap> defs;
  std::optional<EmbeddingTable> table;
};

bool system_needs_table(const SystemConfig& sys) {
  return sys.features.embedding_mode == EmbeddingMode::static_table ||
         sys.model == ModelKind::cosine || sys.model == ModelKind::projection;
}

LoadedInputs load_inputs(const RunConfig& rc, bool need_defs, bool need_table) {
  LoadedInputs in;
  require_key(rc.labels_path, "labels");
  require_key(rc.dataset_path, "dataset");
  in.labels = load_label_set(rc.labels_path);
  in.dataset = load_dataset(rc.dataset_path, in.labels);
  if (need_defs) {
    require_key(rc.definitions_path, "definitions");
    in.defs = load_definitions(rc.definitions_path, in.labels);
  }
  if (need_table) {
    require_key(rc.embeddings_path, "embeddings");
    in.table = load_embeddings(rc.embeddings_path);
  }
  return in;
}

}  // namespace

// ---- Commands ---------------------------------------------------------------------

int cmd_synth(const CliFlags& flags) {
  const ConfigFile cf = require_config(flags);
  RunConfig rc = load_run_config(cf, flags.seed);
  if (!rc.seed_provided)
    throw DataError("synth needs a seed: set seed= in the config or pass --seed");
  if (flags.n) rc.synth.n = *flags.n;
  if (rc.synth.n < 1) throw DataError("synth: n must be at least 1");
  const std::string out = !flags.out.empty() ? flags.out : rc.synth_out;
  if (out.empty()) throw DataError("synth: set synth.out in the config or pass --out");
  require_key(rc.labels_path, "labels");
  require_key(rc.definitions_path, "definitions");

  const LabelSet labels = load_label_set(rc.labels_path);
  const DefinitionMap defs = load_definitions(rc.definitions_path, labels);
  const Dataset ds = generate_synthetic(defs, labels, rc.synth);
  save_dataset(ds, out);
  std::cout << "wrote " << out << " (" << ds.reports.size() << " reports)\n";

  ordered_json manifest;
  manifest["command"] = "synth";
  manifest["seed"] = rc.synth.seed;
  manifest["n"] = rc.synth.n;
  manifest["skew"] = rc.synth.skew;
  manifest["triggers"] = {rc.synth.min_triggers, rc.synth.max_triggers};
  manifest["noise"] = {rc.synth.min_noise, rc.synth.max_noise};
  manifest["stopwords"] = kStopwordsVersion;
  ordered_json outputs;
  outputs[out] = file_content_hash(out);

  if (!rc.synth_embeddings_out.empty()) {
    write_synthetic_embeddings(ds, defs, rc.synth_embeddings_out, rc.synth_embedding_dim,
                               mix_seed(rc.seed, 0x656d6264ull), rc.synth_jitter);
    manifest["embedding_dim"] = rc.synth_embedding_dim;
    manifest["embedding_jitter"] = rc.synth_jitter;
    outputs[rc.synth_embeddings_out] = file_content_hash(rc.synth_embeddings_out);
    std::cout << "wrote " << rc.synth_embeddings_out << " (dim " << rc.synth_embedding_dim
              << ")\n";
  }
  ordered_json inputs;
  inputs[rc.labels_path] = file_content_hash(rc.labels_path);
  inputs[rc.definitions_path] = file_content_hash(rc.definitions_path);
  manifest["inputs"] = std::move(inputs);
  manifest["outputs"] = std::move(outputs);
  atomic_write_file(out + ".manifest.json", dump_json(manifest));
  return 0;
}

int cmd_prep(const CliFlags& flags) {
  const ConfigFile cf = require_config(flags);
  const RunConfig rc = load_run_config(cf, flags.seed);
  const LoadedInputs in = load_inputs(rc, !rc.definitions_path.empty(),
                                      !rc.embeddings_path.empty());

  ordered_json stats;
  stats["dataset"] = rc.dataset_path;
  stats["reports"] = in.dataset.reports.size();
  ordered_json label_counts;
  std::map<std::string, int> counts;
  for (const auto& r : in.dataset.reports) ++counts[r.gold_label];
  for (const auto& l : in.labels.codes) label_counts[l] = counts.count(l) ? counts[l] : 0;
  stats["label_counts"] = std::move(label_counts);

  int with_span = 0, with_ctx = 0;
  std::size_t min_tokens = 0, max_tokens = 0, total_tokens = 0;
  std::set<std::string> distinct;
  for (std::size_t i = 0; i < in.dataset.reports.size(); ++i) {
    const auto& r = in.dataset.reports[i];
    if (r.has_action_span()) ++with_span;
    if (r.has_contextual()) ++with_ctx;
    const std::size_t n = r.tokens.size();
    min_tokens = i == 0 ? n : std::min(min_tokens, n);
    max_tokens = std::max(max_tokens, n);
    total_tokens += n;
    for (const auto& t : r.tokens) distinct.insert(normalize_token(t));
  }
  distinct.erase("");
  stats["with_action_span"] = with_span;
  stats["with_contextual_vectors"] = with_ctx;
  ordered_json tok;
  tok["min"] = min_tokens;
  tok["max"] = max_tokens;
  tok["mean"] = in.dataset.reports.empty()
                    ? 0.0
                    : static_cast<double>(total_tokens) / in.dataset.reports.size();
  stats["tokens_per_report"] = std::move(tok);
  stats["distinct_normalized_tokens"] = distinct.size();

  if (in.table) {
    int covered = 0;
    for (const auto& w : distinct)
      if (in.table->find(w)) ++covered;
    stats["embedding_coverage"] =
        distinct.empty() ? 0.0 : static_cast<double>(covered) / distinct.size();
    stats["embedding_dim"] = in.table->dim();
  }
  if (in.defs) stats["definitions"] = rc.definitions_path;

  const std::string text = dump_json(stats);
  if (flags.out.empty())
    std::cout << text;
  else
    atomic_write_file(flags.out, text);
  return 0;
}

int cmd_cv(const CliFlags& flags) {
  const ConfigFile cf = require_config(flags);
  const RunConfig rc = load_run_config(cf, flags.seed);
  if (!rc.seed_provided)
    throw DataError("cv needs a seed: set seed= in the config or pass --seed");
  if (rc.systems.empty()) throw DataError("cv: no systems configured (set systems=)");
  const std::string out_dir = !flags.out.empty() ? flags.out : rc.out_dir;
  if (out_dir.empty()) throw DataError("cv: set out_dir in the config or pass --out");

  bool need_defs = false, need_table = false;
  for (const auto& sys : rc.systems) {
    need_defs = need_defs || paradigm_of(sys.model) == Paradigm::selection;
    need_table = need_table || system_needs_table(sys);
  }
  const LoadedInputs in = load_inputs(rc, need_defs, need_table);
  const FoldPlan plan = split_folds(in.dataset, rc.folds, rc.seed);
  fs::create_directories(out_dir);

  std::vector<std::string> artifacts;
  const auto emit = [&](const std::string& name, const std::string& content) {
    atomic_write_file(out_dir + "/" + name, content);
    artifacts.push_back(name);
  };

  std::map<std::string, std::vector<PredictionRecord>> preds_by_system;
  for (const auto& sys : rc.systems) {
    const CvResult res = run_cv(in.dataset, in.labels, in.defs ? &*in.defs : nullptr,
                                in.table ? &*in.table : nullptr, plan, sys);
    emit("predictions_" + sys.id + ".csv", predictions_csv(res.predictions));
    emit("folds_" + sys.id + ".csv", folds_csv(res, sys));
    std::cout << "system " << sys.id << " (" << to_string(sys.model) << "):";
    for (const EvalMode mode : rc.modes) {
      const MetricsReport rep = compute_metrics(res.predictions, in.labels, mode);
      const std::string suffix = sys.id + "_" + to_string(mode);
      emit("metrics_" + suffix + ".json", dump_json(metrics_to_json(rep, sys.id)));
      emit("per_label_" + suffix + ".csv", per_label_csv(rep));
      emit("confusion_" + suffix + ".csv", confusion_csv(rep));
      std::cout << "  macro_f1[" << to_string(mode) << "]=" << rep.macro_f1;
    }
    std::cout << "\n";
    preds_by_system.emplace(sys.id, std::move(res.predictions));
  }

  ordered_json significance = ordered_json::array();
  for (const auto& [id_a, id_b] : rc.pairings) {
    for (const EvalMode mode : rc.modes) {
      const auto& pa = preds_by_system.at(id_a);
      const auto& pb = preds_by_system.at(id_b);
      const double ma = compute_metrics(pa, in.labels, mode).macro_f1;
      const double mb = compute_metrics(pb, in.labels, mode).macro_f1;
      const bool swap = mb > ma;
      const auto& better = swap ? pb : pa;
      const auto& worse = swap ? pa : pb;
      const SignificanceResult sig =
          bootstrap_test(better, worse, in.labels, mode, rc.replicates, rc.seed);
      ordered_json e;
      e["pair"] = id_a + ":" + id_b;
      e["mode"] = to_string(mode);
      e["better"] = sig.system_a;
      e["worse"] = sig.system_b;
      e["macro_f1_better"] = swap ? mb : ma;
      e["macro_f1_worse"] = swap ? ma : mb;
      e["delta_observed"] = sig.delta_observed;
      e["p_value"] = sig.p_value;
      e["replicates"] = sig.replicates;
      e["seed"] = sig.seed;
      significance.push_back(std::move(e));
    }
  }
  emit("significance.json", dump_json(significance));

  ordered_json manifest;
  manifest["command"] = "cv";
  manifest["seed"] = rc.seed;
  manifest["folds"] = rc.folds;
  manifest["replicates"] = rc.replicates;
  manifest["stopwords"] = kStopwordsVersion;
  ordered_json modes = ordered_json::array();
  for (const EvalMode m : rc.modes) modes.push_back(to_string(m));
  manifest["modes"] = std::move(modes);
  ordered_json systems = ordered_json::array();
  for (const auto& sys : rc.systems) systems.push_back(sys.id);
  manifest["systems"] = std::move(systems);
  manifest["config"] = cf.entries();
  ordered_json inputs;
  inputs[flags.config_path] = file_content_hash(flags.config_path);
  inputs[rc.dataset_path] = file_content_hash(rc.dataset_path);
  inputs[rc.labels_path] = file_content_hash(rc.labels_path);
  if (need_defs) inputs[rc.definitions_path] = file_content_hash(rc.definitions_path);
  if (need_table) inputs[rc.embeddings_path] = file_content_hash(rc.embeddings_path);
  manifest["inputs"] = std::move(inputs);
  manifest["artifacts"] = artifacts;
  atomic_write_file(out_dir + "/manifest.json", dump_json(manifest));
  std::cout << "wrote " << artifacts.size() + 1 << " artifacts to " << out_dir << "\n";
  return 0;
}

int cmd_train(const CliFlags& flags) {
  const ConfigFile cf = require_config(flags);
  const RunConfig rc = load_run_config(cf, flags.seed);
  if (flags.out.empty()) throw DataError("train: pass --out for the model artifact path");
  if (rc.systems.empty()) throw DataError("train: no systems configured (set systems=)");

  const SystemConfig* sys = nullptr;
  if (!rc.train_system_id.empty()) {
    sys = &rc.system_by_id(rc.train_system_id);
  } else if (rc.systems.size() == 1) {
    sys = &rc.systems.front();
  } else {
    throw DataError("train: several systems configured; pick one with train.system=");
  }
  if (sys->grid.size() != 1)
    throw DataError("train: system '" + sys->id + "' has a grid of " +
                    std::to_string(sys->grid.size()) +
                    " points; training an artifact needs exactly one");

  const LoadedInputs in = load_inputs(rc, paradigm_of(sys->model) == Paradigm::selection,
                                      system_needs_table(*sys));
  std::vector<const ActivityReport*> train;
  train.reserve(in.dataset.reports.size());
  for (const auto& r : in.dataset.reports) train.push_back(&r);

  const TrainedSystem ts =
      train_system(*sys, sys->grid.front(), train, in.labels,
                   in.defs ? &*in.defs : nullptr, in.table ? &*in.table : nullptr, sys->seed);
  atomic_write_file(flags.out, dump_json(artifact_from_system(ts)));
  std::cout << "wrote " << flags.out << "\n";
  return 0;
}

int cmd_predict(const CliFlags& flags) {
  const ConfigFile cf = require_config(flags);
  const RunConfig rc = load_run_config(cf, flags.seed);
  if (flags.out.empty()) throw DataError("predict: pass --out for the predictions path");
  require_key(rc.model_path, "predict.model");

  json artifact;
  try {
    artifact = json::parse(read_file_bytes(rc.model_path));
  } catch (const json::exception& e) {
    throw DataError(rc.model_path + ": invalid model artifact: " + e.what());
  }

  std::optional<EmbeddingTable> table;
  if (artifact_needs_table(artifact)) {
    require_key(rc.embeddings_path, "embeddings");
    table = load_embeddings(rc.embeddings_path);
  }
  const TrainedSystem ts = system_from_artifact(artifact, table ? &*table : nullptr);

  require_key(rc.labels_path, "labels");
  require_key(rc.dataset_path, "dataset");
  const LabelSet labels = load_label_set(rc.labels_path);
  if (ts.labels.codes != labels.codes || ts.labels.other_label != labels.other_label)
    throw DataError("predict: label set does not match the model artifact");
  const Dataset ds = load_dataset(rc.dataset_path, labels);

  if (flags.scores && paradigm_of(ts.model) == Paradigm::classification)
    throw DataError("predict: scores unavailable for classification systems");

  std::vector<PredictionRecord> preds;
  preds.reserve(ds.reports.size());
  for (const auto& r : ds.reports)
    preds.push_back({r.id, r.gold_label, predict_system(ts, r), -1, ts.system_id});
  atomic_write_file(flags.out, predictions_csv(preds));
  std::cout << "wrote " << flags.out << " (" << preds.size() << " predictions)\n";

  if (flags.scores) {
    std::ostringstream out;
    out << "id";
    for (const auto& c : labels.icf_codes()) out << ',' << c;
    out << '\n';
    for (const auto& r : ds.reports) {
      const std::vector<double> scores = selection_scores(ts, r);
      out << r.id;
      for (const double s : scores) out << ',' << fmt_f17(s);
      out << '\n';
    }
    atomic_write_file(flags.out + ".scores.csv", out.str());
    std::cout << "wrote " << flags.out << ".scores.csv\n";
  }
  return 0;
}

int cmd_report(const CliFlags& flags) {
  const ConfigFile cf = require_config(flags);
  const RunConfig rc = load_run_config(cf, flags.seed);
  const std::string out_dir = rc.out_dir;
  if (out_dir.empty()) throw DataError("report: set out_dir in the config");
  if (rc.systems.empty()) throw DataError("report: no systems configured (set systems=)");

  std::vector<EvalMode> modes = rc.modes;
  if (!flags.mode.empty()) modes = {eval_mode_from(flags.mode)};

  const auto read_json = [](const std::string& path) {
    try {
      return json::parse(read_file_bytes(path));
    } catch (const json::exception& e) {
      throw DataError(path + ": invalid JSON: " + e.what());
    }
  };

  std::ostringstream md;
  md << "# Cross-validation report\n\n";
  md << "Artifacts: `" << out_dir << "` (run `cv` first if files are missing).\n\n";

  md << "## Macro-averaged F1\n\n| system |";
  for (const EvalMode m : modes) md << ' ' << to_string(m) << " |";
  md << "\n|---|";
  for (std::size_t i = 0; i < modes.size(); ++i) md << "---|";
  md << "\n";
  std::map<std::pair<std::string, std::string>, json> metric_cache;
  for (const auto& sys : rc.systems) {
    md << "| " << sys.id << " |";
    for (const EvalMode m : modes) {
      const std::string path =
          out_dir + "/metrics_" + sys.id + "_" + to_string(m) + ".json";
      const json rep = read_json(path);
      metric_cache[{sys.id, to_string(m)}] = rep;
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4f", rep.at("macro_f1").get<double>());
      md << ' ' << buf << " |";
    }
    md << "\n";
  }

  for (const EvalMode m : modes) {
    md << "\n## Per-label F1 (" << to_string(m) << ")\n\n| label |";
    for (const auto& sys : rc.systems) md << ' ' << sys.id << " |";
    md << "\n|---|";
    for (std::size_t i = 0; i < rc.systems.size(); ++i) md << "---|";
    md << "\n";
    const json& first = metric_cache.at({rc.systems.front().id, to_string(m)});
    for (std::size_t li = 0; li < first.at("per_label").size(); ++li) {
      md << "| " << first.at("per_label")[li].at("label").get<std::string>() << " |";
      for (const auto& sys : rc.systems) {
        const json& rep = metric_cache.at({sys.id, to_string(m)});
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f",
                      rep.at("per_label")[li].at("f1").get<double>());
        md << ' ' << buf << " |";
      }
      md << "\n";
    }
  }

  const std::string sig_path = out_dir + "/significance.json";
  if (fs::exists(sig_path)) {
    const json sig = read_json(sig_path);
    if (!sig.empty()) {
      md << "\n## Paired bootstrap significance\n\n"
         << "| better | worse | mode | delta | p |\n|---|---|---|---|---|\n";
      for (const auto& e : sig) {
        char dbuf[32], pbuf[32];
        std::snprintf(dbuf, sizeof dbuf, "%.4f", e.at("delta_observed").get<double>());
        std::snprintf(pbuf, sizeof pbuf, "%.4f", e.at("p_value").get<double>());
        md << "| " << e.at("better").get<std::string>() << " | "
           << e.at("worse").get<std::string>() << " | " << e.at("mode").get<std::string>()
           << " | " << dbuf << " | " << pbuf << " |\n";
      }
    }
  }

  const std::string text = md.str();
  if (flags.out.empty())
    std::cout << text;
  else
    atomic_write_file(flags.out, text);
  return 0;
}

int run_cli(const std::string& command, const CliFlags& flags) {
  try {
    if (command == "synth") return cmd_synth(flags);
    if (command == "prep") return cmd_prep(flags);
    if (command == "cv") return cmd_cv(flags);
    if (command == "train") return cmd_train(flags);
    if (command == "predict") return cmd_predict(flags);
    if (command == "report") return cmd_report(flags);
    std::cerr << "unknown command: " << command << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace icf
