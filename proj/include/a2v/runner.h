#ifndef A2V_RUNNER_H_
#define A2V_RUNNER_H_

#include <cstdint>
#include <string>

#include "a2v/config.h"
#include "a2v/corpus.h"
#include "a2v/finetune.h"
#include "a2v/frontend.h"
#include "a2v/network.h"
#include "a2v/pretrain.h"

namespace a2v {

struct RunOptions {
  std::string config_path;
  std::string out_dir;
  uint64_t seed = 0;
  std::string checkpoint;       // input checkpoint (finetune/evaluate/attention/cfr)
  std::string resume;           // resume checkpoint (pretrain/finetune)
  std::string wav;              // attention input
  std::string manifest_override;  // evaluate on an explicit manifest
  double labels_fraction = 1.0;
  int fold = 0;
};

// Batch subcommands; each returns a process exit code and writes its outputs
// under out_dir. Every emitted file embeds the config hash and seed.
int run_pretrain(const RunOptions& options);
int run_finetune(const RunOptions& options);
int run_evaluate(const RunOptions& options);
int run_mask_stats(const RunOptions& options);
int run_cfr(const RunOptions& options);
int run_attention(const RunOptions& options);
int run_synth(const RunOptions& options);

// Config -> typed builders (shared with the test suites).
FrontendConfig frontend_config_from(const Config& config);
NetworkConfig network_config_from(const Config& config, int n_classes);
PretrainConfig pretrain_config_from(const Config& config);
FinetuneConfig finetune_config_from(const Config& config);

// A2V_WORKERS environment variable (0 = fully deterministic data path).
int data_workers();

}  // namespace a2v

#endif  // A2V_RUNNER_H_
