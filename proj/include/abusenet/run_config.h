#ifndef ABUSENET_RUN_CONFIG_H_
#define ABUSENET_RUN_CONFIG_H_

#include <cstddef>
#include <string>

#include <json.hpp>

#include "abusenet/corpus.h"
#include "abusenet/model.h"
#include "abusenet/text.h"
#include "abusenet/training.h"

namespace abusenet {

struct DataPaths {
  std::string prepared;          // directory written by `prepare`
  std::string embeddings;        // word-vector text file
  std::string embeddings_cache;  // optional binary cache
};

struct PreprocessSettings {
  PreprocessConfig text;
  std::string emoji_ranges_file;  // empty: built-in ranges
  std::size_t min_frequency = 1;
  bool random_missing = false;
};

// JSON run configuration:
//   { "data": {...}, "preprocess": {...}, "model": {...}, "train": {...},
//     "output_dir": "..." }
// Unknown keys anywhere are rejected. Relative paths are resolved against the
// directory holding the config file.
struct RunConfigFile {
  DataPaths data;
  PreprocessSettings preprocess;
  ModelConfig model;
  bool model_heads_given = false;
  // Kept raw: task and language default to those of the prepared dataset.
  nlohmann::json train = nlohmann::json::object();
  std::string output_dir;
};

RunConfigFile parse_run_config(const nlohmann::json& j, const std::string& base_dir);
RunConfigFile load_run_config(const std::string& path);

// Train settings with task/language filled from the prepared dataset; a
// conflicting explicit value raises ConfigError.
TrainConfig resolve_train_config(const RunConfigFile& config, int task, Language language);

// Directory of the bundled data files (stopword lists, emoji ranges).
std::string bundled_data_dir();

nlohmann::ordered_json to_json(const PreprocessSettings& settings);
PreprocessSettings preprocess_settings_from_json(const nlohmann::json& j,
                                                 const std::string& base_dir);

}  // namespace abusenet

#endif  // ABUSENET_RUN_CONFIG_H_
