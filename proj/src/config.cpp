#include "icf/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <sstream>

#include "icf/error.hpp"
#include "icf/ioutil.hpp"

namespace icf {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

ConfigFile ConfigFile::parse_string(const std::string& text, const std::string& origin) {
  ConfigFile cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw DataError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw DataError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (!cfg.entries_.emplace(key, value).second)
      throw DataError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return cfg;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
  return parse_string(read_file_bytes(path), path);
}

bool ConfigFile::has(const std::string& key) const { return entries_.count(key) > 0; }

const std::string& ConfigFile::get_string(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end())
    throw DataError(origin_ + ": missing required key '" + key + "'");
  return it->second;
}

std::string ConfigFile::get_or(const std::string& key, const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

long long ConfigFile::get_int(const std::string& key) const {
  const std::string& v = get_string(key);
  try {
    std::size_t pos = 0;
    const long long out = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw DataError(origin_ + ": key '" + key + "' is not an integer: '" + v + "'");
  }
}

long long ConfigFile::int_or(const std::string& key, long long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

double ConfigFile::get_double(const std::string& key) const {
  const std::string& v = get_string(key);
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw DataError(origin_ + ": key '" + key + "' is not a number: '" + v + "'");
  }
}

double ConfigFile::double_or(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

bool ConfigFile::get_bool(const std::string& key) const {
  std::string v = get_string(key);
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw DataError(origin_ + ": key '" + key + "' is not a boolean: '" + v + "'");
}

bool ConfigFile::bool_or(const std::string& key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}

std::vector<std::string> ConfigFile::get_list(const std::string& key) const {
  const std::string& v = get_string(key);
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    const std::string t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

// ---- RunConfig ------------------------------------------------------------------

const SystemConfig& RunConfig::system_by_id(const std::string& id) const {
  for (const auto& s : systems)
    if (s.id == id) return s;
  throw DataError("no system named '" + id + "' in the configuration");
}

namespace {

const std::set<std::string>& grid_params_for(ModelKind kind) {
  static const std::set<std::string> knn{"k"};
  static const std::set<std::string> svm{"c", "epochs"};
  static const std::set<std::string> mlp{"hidden", "l2", "epochs"};
  static const std::set<std::string> lesk{"extended"};
  static const std::set<std::string> cosine{"extended", "duplicated"};
  static const std::set<std::string> projection{"hidden_layers", "epochs", "batch", "score",
                                                "extended", "duplicated"};
  switch (kind) {
    case ModelKind::knn: return knn;
    case ModelKind::svm: return svm;
    case ModelKind::mlp: return mlp;
    case ModelKind::lesk: return lesk;
    case ModelKind::cosine: return cosine;
    case ModelKind::projection: return projection;
  }
  throw DataError("grid_params_for: unknown model kind");
}

long long parse_int_value(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long out = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw DataError("key '" + key + "': grid value '" + v + "' is not an integer");
  }
}

double parse_double_value(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw DataError("key '" + key + "': grid value '" + v + "' is not a number");
  }
}

bool parse_bool_value(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw DataError("key '" + key + "': grid value '" + v + "' is not a boolean");
}

void apply_grid_param(SystemHyper& h, ModelKind kind, const std::string& param,
                      const std::string& value, const std::string& key) {
  switch (kind) {
    case ModelKind::knn:
      if (param == "k") {
        h.knn_k = static_cast<int>(parse_int_value(key, value));
        return;
      }
      break;
    case ModelKind::svm:
      if (param == "c") {
        h.svm_c = parse_double_value(key, value);
        return;
      }
      if (param == "epochs") {
        h.svm_epochs = static_cast<int>(parse_int_value(key, value));
        return;
      }
      break;
    case ModelKind::mlp:
      if (param == "hidden") {
        h.mlp_hidden = static_cast<int>(parse_int_value(key, value));
        return;
      }
      if (param == "l2") {
        h.mlp_l2 = parse_double_value(key, value);
        return;
      }
      if (param == "epochs") {
        h.mlp_max_epochs = static_cast<int>(parse_int_value(key, value));
        return;
      }
      break;
    case ModelKind::lesk:
      if (param == "extended") {
        h.extended_definitions = parse_bool_value(key, value);
        return;
      }
      break;
    case ModelKind::cosine:
      if (param == "extended") {
        h.extended_definitions = parse_bool_value(key, value);
        return;
      }
      if (param == "duplicated") {
        h.duplicated_definitions = parse_bool_value(key, value);
        return;
      }
      break;
    case ModelKind::projection:
      if (param == "hidden_layers") {
        h.proj_hidden_layers = static_cast<int>(parse_int_value(key, value));
        return;
      }
      if (param == "epochs") {
        h.proj_epochs = static_cast<int>(parse_int_value(key, value));
        return;
      }
      if (param == "batch") {
        h.proj_batch = static_cast<int>(parse_int_value(key, value));
        return;
      }
      if (param == "score") {
        if (value == "combined")
          h.proj_score = ScoreMode::combined;
        else if (value == "cosine")
          h.proj_score = ScoreMode::cosine;
        else
          throw DataError("key '" + key + "': grid value '" + value +
                          "' is not a score mode (combined or cosine)");
        return;
      }
      if (param == "extended") {
        h.extended_definitions = parse_bool_value(key, value);
        return;
      }
      if (param == "duplicated") {
        h.duplicated_definitions = parse_bool_value(key, value);
        return;
      }
      break;
  }
  throw DataError("key '" + key + "': parameter '" + param + "' is not tunable for model '" +
                  to_string(kind) + "'");
}

UnigramMode parse_unigram_mode(const std::string& v, const std::string& key) {
  if (v == "none") return UnigramMode::none;
  if (v == "binary") return UnigramMode::binary;
  if (v == "tfidf") return UnigramMode::tfidf;
  throw DataError("key '" + key + "': unknown unigram mode '" + v +
                  "' (expected none, binary, or tfidf)");
}

EmbeddingMode parse_embedding_mode(const std::string& v, const std::string& key) {
  if (v == "none") return EmbeddingMode::none;
  if (v == "static") return EmbeddingMode::static_table;
  if (v == "contextual") return EmbeddingMode::contextual;
  throw DataError("key '" + key + "': unknown embedding mode '" + v +
                  "' (expected none, static, or contextual)");
}

void check_path_exists(const std::string& path, const std::string& key) {
  if (!std::filesystem::exists(path))
    throw DataError("key '" + key + "': file does not exist: " + path);
}

SystemConfig build_system(const ConfigFile& file, const std::string& id,
                          std::optional<std::uint64_t> global_seed) {
  const std::string prefix = "system." + id + ".";
  SystemConfig sys;
  sys.id = id;
  sys.model = model_kind_from(file.get_string(prefix + "model"));

  sys.features.unigram_mode =
      parse_unigram_mode(file.get_or(prefix + "features.unigram", "none"),
                         prefix + "features.unigram");
  sys.features.embedding_mode =
      parse_embedding_mode(file.get_or(prefix + "features.embedding", "none"),
                           prefix + "features.embedding");
  sys.features.action_oracle = file.bool_or(prefix + "features.oracle", false);
  sys.features.concatenate_hybrid = file.bool_or(prefix + "features.hybrid", false);

  if (file.has(prefix + "seed")) {
    sys.seed = static_cast<std::uint64_t>(file.get_int(prefix + "seed"));
  } else if (global_seed) {
    sys.seed = *global_seed;
  } else {
    throw DataError("system '" + id +
                    "' has no seed: set seed= in the config, pass --seed, or set " + prefix +
                    "seed");
  }

  // Cartesian product over the grid.* comma lists, keys in sorted order so
  // "first grid entry" is well defined.
  const std::set<std::string>& allowed = grid_params_for(sys.model);
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  const std::string grid_prefix = prefix + "grid.";
  for (const auto& [key, value] : file.entries()) {
    if (key.rfind(grid_prefix, 0) != 0) continue;
    const std::string param = key.substr(grid_prefix.size());
    if (!allowed.count(param))
      throw DataError("key '" + key + "': parameter '" + param +
                      "' is not tunable for model '" + to_string(sys.model) + "'");
    std::vector<std::string> values = file.get_list(key);
    if (values.empty()) throw DataError("key '" + key + "': empty value list");
    (void)value;
    axes.emplace_back(param, std::move(values));
  }

  sys.grid.assign(1, SystemHyper{});
  for (const auto& [param, values] : axes) {
    std::vector<SystemHyper> expanded;
    expanded.reserve(sys.grid.size() * values.size());
    for (const auto& base : sys.grid)
      for (const auto& v : values) {
        SystemHyper h = base;
        apply_grid_param(h, sys.model, param, v, grid_prefix + param);
        expanded.push_back(h);
      }
    sys.grid = std::move(expanded);
  }
  return sys;
}

bool key_known(const std::string& key, const std::vector<std::string>& system_ids) {
  static const std::set<std::string> globals{
      "dataset",      "labels",          "definitions",     "embeddings",
      "out_dir",      "seed",            "folds",           "replicates",
      "modes",        "systems",         "pairings",        "synth.out",
      "synth.n",      "synth.min_triggers", "synth.max_triggers", "synth.min_noise",
      "synth.max_noise", "synth.embeddings", "synth.dim",    "synth.jitter",
      "predict.model", "train.system"};
  if (globals.count(key)) return true;
  if (key.rfind("system.", 0) != 0) return false;
  for (const auto& id : system_ids) {
    const std::string prefix = "system." + id + ".";
    if (key.rfind(prefix, 0) != 0) continue;
    const std::string suffix = key.substr(prefix.size());
    if (suffix == "model" || suffix == "seed" || suffix == "features.unigram" ||
        suffix == "features.embedding" || suffix == "features.oracle" ||
        suffix == "features.hybrid" || suffix.rfind("grid.", 0) == 0)
      return true;
  }
  return false;
}

}  // namespace

RunConfig load_run_config(const ConfigFile& file, std::optional<std::uint64_t> seed_override) {
  RunConfig rc;

  std::vector<std::string> system_ids =
      file.has("systems") ? file.get_list("systems") : std::vector<std::string>{};
  if (file.has("train.system")) {
    const std::string t = file.get_string("train.system");
    if (std::find(system_ids.begin(), system_ids.end(), t) == system_ids.end())
      system_ids.push_back(t);
  }
  for (const auto& [key, value] : file.entries()) {
    (void)value;
    if (!key_known(key, system_ids))
      throw DataError(file.origin() + ": unknown key '" + key + "'");
  }

  rc.dataset_path = file.get_or("dataset", "");
  rc.labels_path = file.get_or("labels", "");
  rc.definitions_path = file.get_or("definitions", "");
  rc.embeddings_path = file.get_or("embeddings", "");
  rc.out_dir = file.get_or("out_dir", "");
  rc.model_path = file.get_or("predict.model", "");
  rc.train_system_id = file.get_or("train.system", "");

  const std::pair<const char*, const std::string*> path_keys[] = {
      {"dataset", &rc.dataset_path},         {"labels", &rc.labels_path},
      {"definitions", &rc.definitions_path}, {"embeddings", &rc.embeddings_path},
      {"predict.model", &rc.model_path}};
  for (const auto& [key, path] : path_keys)
    if (!path->empty()) check_path_exists(*path, key);

  std::optional<std::uint64_t> seed;
  if (seed_override)
    seed = *seed_override;
  else if (file.has("seed"))
    seed = static_cast<std::uint64_t>(file.get_int("seed"));
  if (seed) rc.seed = *seed;
  rc.seed_provided = seed.has_value();

  rc.folds = static_cast<int>(file.int_or("folds", 10));
  if (rc.folds < 2) throw DataError("key 'folds': must be at least 2");
  rc.replicates = static_cast<int>(file.int_or("replicates", 1000));
  if (rc.replicates < 1) throw DataError("key 'replicates': must be at least 1");

  if (file.has("modes")) {
    for (const auto& m : file.get_list("modes")) rc.modes.push_back(eval_mode_from(m));
    if (rc.modes.empty()) throw DataError("key 'modes': empty list");
  } else {
    rc.modes = {EvalMode::all_labels, EvalMode::icf_only};
  }

  std::set<std::string> seen_ids;
  for (const auto& id : system_ids) {
    if (!seen_ids.insert(id).second)
      throw DataError("key 'systems': duplicate system id '" + id + "'");
    rc.systems.push_back(build_system(file, id, seed));
  }

  if (file.has("pairings")) {
    for (const auto& p : file.get_list("pairings")) {
      const std::size_t colon = p.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == p.size())
        throw DataError("key 'pairings': expected 'system_a:system_b', got '" + p + "'");
      const std::string a = p.substr(0, colon);
      const std::string b = p.substr(colon + 1);
      if (!seen_ids.count(a) || !seen_ids.count(b))
        throw DataError("key 'pairings': unknown system id in '" + p + "'");
      if (a == b) throw DataError("key 'pairings': cannot pair '" + a + "' with itself");
      rc.pairings.emplace_back(a, b);
    }
  }

  // Synthetic-generation settings.
  rc.synth.n = static_cast<int>(file.int_or("synth.n", 4527));
  rc.synth.min_triggers = static_cast<int>(file.int_or("synth.min_triggers", 3));
  rc.synth.max_triggers = static_cast<int>(file.int_or("synth.max_triggers", 6));
  rc.synth.min_noise = static_cast<int>(file.int_or("synth.min_noise", 0));
  rc.synth.max_noise = static_cast<int>(file.int_or("synth.max_noise", 0));
  rc.synth_out = file.get_or("synth.out", "");
  rc.synth_embeddings_out = file.get_or("synth.embeddings", "");
  rc.synth_embedding_dim = static_cast<int>(file.int_or("synth.dim", 24));
  rc.synth_jitter = file.double_or("synth.jitter", 0.15);
  rc.synth.skew = default_mobility_skew();  // generator targets the bundled label set
  if (seed) rc.synth.seed = *seed;

  if (!rc.train_system_id.empty() && !seen_ids.count(rc.train_system_id))
    throw DataError("key 'train.system': unknown system id '" + rc.train_system_id + "'");

  return rc;
}

}  // namespace icf
