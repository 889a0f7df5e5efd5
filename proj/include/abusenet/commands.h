#ifndef ABUSENET_COMMANDS_H_
#define ABUSENET_COMMANDS_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace abusenet {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;    // usage, config, schema or data errors
inline constexpr int kExitNumeric = 3;  // NaN/Inf during training

struct PrepareOptions {
  std::string input;
  std::string language;
  int task = 1;
  std::vector<std::string> external;  // "macd:PATH" or "multilate:PATH"
  std::string out;
  std::uint64_t seed = 42;
  double ratio = 0.8;
  bool stratified = false;
};

struct TrainOptions {
  std::string config;
  std::string out_dir;   // overrides output_dir from the config
  std::string prepared;  // overrides data.prepared from the config
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  bool quiet = false;  // suppress per-epoch progress
};

struct PredictOptions {
  std::string run_dir;
  std::string input;
  std::string out;
};

struct EvaluateOptions {
  std::string gold;
  std::string pred;
};

struct InspectOptions {
  std::string file;
  std::string vocab;  // optional
};

// Each command writes human-readable output to `out`, diagnostics to `err`,
// and returns an exit code. Errors are reported, never thrown.
int cmd_prepare(const PrepareOptions& opts, std::ostream& out, std::ostream& err);
int cmd_train(const TrainOptions& opts, std::ostream& out, std::ostream& err);
int cmd_predict(const PredictOptions& opts, std::ostream& out, std::ostream& err);
int cmd_evaluate(const EvaluateOptions& opts, std::ostream& out, std::ostream& err);
int cmd_inspect_embeddings(const InspectOptions& opts, std::ostream& out, std::ostream& err);

// Runs `body`, mapping exceptions to exit codes with a message on `err`.
int run_guarded(const std::function<void()>& body, std::ostream& err);

}  // namespace abusenet

#endif  // ABUSENET_COMMANDS_H_
