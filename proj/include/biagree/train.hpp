#pragma once

#include "biagree/agreement.hpp"
#include "biagree/trainlog.hpp"

namespace biagree {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment accumulators aligned with the parameter store.
struct AdamState {
  GradMap m;
  GradMap v;
  long t = 0;
};

// One gradient-ascent Adam update.
void adam_step(ParamStore& params, AdamState& state, const AdamConfig& cfg,
               const GradMap& ascent_grad);

struct Checkpoint {
  int version = 1;
  DirectionalModel model;
  Vocab vocab;
  AdamConfig opt_config;
  AdamState opt_state;
  std::string rng_state;
  long step = 0;
};

// Versioned binary format: magic "BIAGREE1", a length-prefixed UTF-8 header,
// then little-endian 64-bit-float blocks in header-declared order.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

struct TrainConfig {
  int steps = 2000;
  int batch_size = 16;
  AdamConfig adam;
  unsigned long long seed = 1;
  DecodeConfig dev_decode;  // beam 8, length penalty 1.0
  int log_every = 100;
};

struct JointTrainConfig {
  int max_iterations = 3;
  int steps_per_phase = 2000;
  int kl_probe_sources = 0;   // > 0: oracle symmetric-KL probe over dev prefix
  int kl_probe_max_len = 3;
};

Checkpoint init_checkpoint(Direction direction, const ModelConfig& config,
                           const Vocab& vocab, const AdamConfig& adam,
                           unsigned long long seed);

// One training phase: minibatch updates of the checkpointed model, with the
// helper frozen. helper == nullptr (or lambda == 0) runs the plain MLE path,
// consuming the identical rng stream.
void train_phase(Checkpoint& ckpt, const Checkpoint* helper,
                 const std::vector<SentencePair>& pairs,
                 const RegularizerConfig& reg, int steps, int batch_size,
                 TrainLog& log, int log_every = 100);

double dev_bleu(const Checkpoint& ckpt, const std::vector<SentencePair>& dev,
                const DecodeConfig& decode_cfg);

Checkpoint pretrain_mle(Direction direction, const ModelConfig& config,
                        const Corpus& corpus, const TrainConfig& tc,
                        TrainLog& log);

Checkpoint train_direction_with_helper(const Checkpoint& self_ckpt,
                                       const Checkpoint& helper_ckpt,
                                       const Corpus& corpus,
                                       const RegularizerConfig& reg,
                                       const TrainConfig& tc, TrainLog& log);

struct JointResult {
  Checkpoint l2r;
  Checkpoint r2l;
  TrainLog log;
};

// Alternating joint training: per iteration, update L2R against the frozen
// iteration-start R2L, then R2L against the frozen iteration-start L2R.
// Stops when neither direction's dev BLEU increases, or at max_iterations.
JointResult joint_train(Checkpoint l2r, Checkpoint r2l, const Corpus& corpus,
                        const JointTrainConfig& jc, const RegularizerConfig& reg,
                        const TrainConfig& tc);

// Pairs each monolingual target with a synthetic source decoded by the
// target-to-source model; synthetic pairs are tagged and appended.
std::vector<SentencePair> back_translate_augment(
    const Checkpoint& target_to_source,
    const std::vector<TokenSequence>& monolingual_targets,
    std::vector<SentencePair> corpus, const DecodeConfig& decode_cfg);

}  // namespace biagree
