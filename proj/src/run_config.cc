#include "abusenet/run_config.h"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>

#include "abusenet/error.h"

#ifndef ABUSENET_DATA_DIR
#define ABUSENET_DATA_DIR "data"
#endif

namespace abusenet {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void reject_unknown(const json& j, const std::string& section,
                    std::initializer_list<const char*> known) {
  if (!j.is_object()) throw ConfigError("'" + section + "' must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
      throw ConfigError("unknown key '" + (section.empty() ? key : section + "." + key) + "'");
  }
}

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute() || base.empty()) return p;
  return (fs::path(base) / p).lexically_normal().string();
}

}  // namespace

std::string bundled_data_dir() {
  if (const char* env = std::getenv("ABUSENET_DATA_DIR"); env && *env) return env;
  return ABUSENET_DATA_DIR;
}

ordered_json to_json(const PreprocessSettings& s) {
  ordered_json j;
  ordered_json stop = ordered_json::object();
  for (const auto& [lang, path] : s.text.stopword_files) stop[std::string(to_string(lang))] = path;
  j["stopwords"] = stop;
  if (!s.emoji_ranges_file.empty()) j["emoji_ranges"] = s.emoji_ranges_file;
  j["strip_urls"] = s.text.strip_urls;
  j["strip_mentions"] = s.text.strip_mentions;
  j["strip_html"] = s.text.strip_html;
  j["strip_hashmark"] = s.text.strip_hashmark;
  j["lowercase_latin"] = s.text.lowercase_latin;
  j["min_frequency"] = s.min_frequency;
  j["random_missing"] = s.random_missing;
  return j;
}

PreprocessSettings preprocess_settings_from_json(const json& j, const std::string& base_dir) {
  reject_unknown(j, "preprocess",
                 {"stopwords", "emoji_ranges", "strip_urls", "strip_mentions", "strip_html",
                  "strip_hashmark", "lowercase_latin", "min_frequency", "random_missing"});
  PreprocessSettings s;
  try {
    if (j.contains("stopwords")) {
      const json& stop = j.at("stopwords");
      if (!stop.is_object()) throw ConfigError("'preprocess.stopwords' must map language to path");
      for (const auto& [lang, path] : stop.items())
        s.text.stopword_files[parse_language(lang)] = resolve(base_dir, path.get<std::string>());
    }
    if (j.contains("emoji_ranges")) {
      s.emoji_ranges_file = resolve(base_dir, j.at("emoji_ranges").get<std::string>());
      s.text.emoji_ranges = load_emoji_ranges(s.emoji_ranges_file);
    }
    s.text.strip_urls = j.value("strip_urls", s.text.strip_urls);
    s.text.strip_mentions = j.value("strip_mentions", s.text.strip_mentions);
    s.text.strip_html = j.value("strip_html", s.text.strip_html);
    s.text.strip_hashmark = j.value("strip_hashmark", s.text.strip_hashmark);
    s.text.lowercase_latin = j.value("lowercase_latin", s.text.lowercase_latin);
    s.min_frequency = j.value("min_frequency", s.min_frequency);
    s.random_missing = j.value("random_missing", s.random_missing);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("preprocess section: ") + e.what());
  }
  if (s.min_frequency == 0) throw ConfigError("preprocess.min_frequency must be at least 1");
  return s;
}

RunConfigFile parse_run_config(const json& j, const std::string& base_dir) {
  reject_unknown(j, "", {"data", "preprocess", "model", "train", "output_dir"});
  RunConfigFile c;
  try {
    if (!j.contains("data")) throw ConfigError("run config needs a 'data' section");
    const json& data = j.at("data");
    reject_unknown(data, "data", {"prepared", "embeddings", "embeddings_cache"});
    if (!data.contains("prepared") || !data.contains("embeddings"))
      throw ConfigError("'data' needs 'prepared' and 'embeddings'");
    c.data.prepared = resolve(base_dir, data.at("prepared").get<std::string>());
    c.data.embeddings = resolve(base_dir, data.at("embeddings").get<std::string>());
    if (data.contains("embeddings_cache"))
      c.data.embeddings_cache = resolve(base_dir, data.at("embeddings_cache").get<std::string>());
    if (j.contains("preprocess"))
      c.preprocess = preprocess_settings_from_json(j.at("preprocess"), base_dir);
    if (j.contains("model")) {
      c.model = model_config_from_json(j.at("model"));
      c.model_heads_given = j.at("model").contains("num_heads");
    }
    if (j.contains("train")) {
      c.train = j.at("train");
      if (!c.train.is_object()) throw ConfigError("'train' must be a JSON object");
      // Validate keys and values early; task/language are reconciled later.
      train_config_from_json(c.train);
    }
    if (j.contains("output_dir"))
      c.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  return c;
}

RunConfigFile load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_run_config(j, fs::absolute(path).parent_path().string());
}

TrainConfig resolve_train_config(const RunConfigFile& config, int task, Language language) {
  json t = config.train;
  if (t.contains("task") && t.at("task").get<int>() != task)
    throw ConfigError("train.task " + t.at("task").dump() +
                      " does not match the prepared dataset (task " + std::to_string(task) + ")");
  if (t.contains("language") && parse_language(t.at("language").get<std::string>()) != language)
    throw ConfigError("train.language does not match the prepared dataset (" +
                      std::string(to_string(language)) + ")");
  t["task"] = task;
  t["language"] = std::string(to_string(language));
  return train_config_from_json(t);
}

}  // namespace abusenet
