// Copyright 2026 The Adaparse Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// The domain-aware coarse-to-fine parser.
//
// Coarse stage: enc1 reads the utterance into U^c, dec1 generates the
// sketch. Fine stage: enc2 reads the utterance into U^f, enc3 reads the
// sketch into S^f, dec2 generates the logical form. Each decoder step runs
// an LSTM, attends over the utterance twice (plain and prior-weighted), and
// in the fine stage also over S^f; a two-layer tanh network maps
// [d; c; c_pri (; c_sketch)] to the output distribution.
//
// A pooled utterance vector per stage feeds a sigmoid source-vs-target
// discriminator: adversarial (confusion) in the coarse stage, conventional
// in the fine stage.
//
// Parameter names: emb.{utt,sketch,lf}, enc{1,2,3}.{fw,bw}.{W,b},
// dec{1,2}.{init,out1,out2}.{W,b}, dec{1,2}.lstm.{W,b}, dec2.switch.W,
// disc_{c,f}.{w_ae,w_d,b_d}.

#ifndef ADAPARSE_MODEL_H_
#define ADAPARSE_MODEL_H_

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adaparse/corpus.h"
#include "adaparse/graph.h"
#include "adaparse/lstm.h"
#include "adaparse/params.h"
#include "adaparse/relevance.h"
#include "adaparse/sketch.h"

namespace adaparse {

enum class Strategy {
  kDamp,
  kSeq2Seq,
  kCoarse2FineMix,
  kPretrainFinetune,
  kParamShare,
  kGradReversal,
};

std::string_view StrategyName(Strategy s);
// Throws UsageError for unknown names.
Strategy ParseStrategy(std::string_view name);

struct Hyperparams {
  int embed_dim = 300;
  // Total Bi-LSTM output width, split evenly between directions, unless
  // hidden_per_direction is set.
  int encoder_hidden = 300;
  bool hidden_per_direction = false;
  double r_coarse = 60.0;
  double r_fine = 2.0;
  double lambda_coarse = 0.4;
  double lambda_fine = 0.2;
  double dropout = 0.6;
  double l2 = 1e-5;
  int batch_size = 64;
  double learning_rate = 1e-3;
  double rmsprop_decay = 0.9;
  double rmsprop_epsilon = 1e-8;
  double clip_norm = 0.0;
  int beam_size = 3;
  int relevant_k = 2;
  double max_len_factor = 1.5;
  double init_range = 0.08;
  // Train the coarse discriminator head on plain NLL and reverse its
  // gradient into the encoder instead of ascending on the head too.
  bool reverse_grad_discriminator = false;
  bool constrained_fine_decoding = true;

  int PerDirection() const;
  int EncoderWidth() const { return 2 * PerDirection(); }
  // Throws UsageError on invalid values.
  void Validate() const;
};

enum class Adversary {
  kNone,
  kConfusion,       // ascend on the discriminator log-likelihood
  kDiscrimination,  // descend on the discriminator NLL
  kReversal,        // NLL through a gradient reversal layer
};

struct Architecture {
  bool two_stage = true;
  bool prior_attention = true;
  // Fine stage reuses U^c instead of running enc2.
  bool shared_encoder = false;
  Adversary coarse_adversary = Adversary::kConfusion;
  Adversary fine_adversary = Adversary::kDiscrimination;
};

Architecture ArchitectureFor(Strategy strategy, const Hyperparams &hp);

struct ModelDims {
  int utterance_vocab = 0;
  int sketch_vocab = 0;
  int lf_vocab = 0;
};

// One element of a sketch, resolved against the logical-form vocabulary:
// plain token (slots == 0), head@k (token >= 0, slots == k) or hole@k
// (token == -1, slots == k).
struct SketchItem {
  int token = -1;
  int slots = 0;
};

std::vector<SketchItem> MakeSketchPlan(std::span<const std::string> sketch,
                                       const Vocabulary &lf_vocab);

// Walks a sketch while logical-form tokens are emitted and decides the next
// decoder input: the sketch encoding s_k when the emitted token corresponds
// to sketch token a_k, the token embedding when it fills a placeholder slot.
class SketchCursor {
 public:
  explicit SketchCursor(const std::vector<SketchItem> *plan);

  // Token the sketch dictates next (EOS once it is exhausted); nullopt while
  // inside a placeholder slot or after the cursor derailed.
  std::optional<int> ForcedToken() const;
  // Consumes `token`; returns the sketch row to feed next, or -1 to feed the
  // token's embedding.
  int Advance(int token);

  bool derailed() const { return derailed_; }
  bool exhausted() const;

 private:
  void Normalize();

  const std::vector<SketchItem> *plan_;
  int index_ = 0;
  int slots_left_ = 0;
  bool derailed_ = false;
};

// A corpus instance prepared for the model.
struct Example {
  int domain = 0;
  bool is_source = true;
  TokenSeq utterance;
  TokenSeq sketch;
  TokenSeq logical_form;
  std::vector<int> utterance_ids;
  std::vector<int> sketch_ids;  // sketch vocabulary
  std::vector<int> lf_ids;      // logical-form vocabulary
  std::vector<SketchItem> plan;
  Alignment alignment;
  std::vector<int> relevant_positions;
  PriorVector coarse_prior;  // empty q when priors are disabled
  PriorVector fine_prior;
};

// Which input feeds the next decoder step.
struct StepInput {
  int embedding_id = -1;
  int sketch_row = -1;

  static StepInput Embedding(int id) { return {id, -1}; }
  static StepInput SketchRow(int row) { return {-1, row}; }
};

struct Attention {
  Var weights;        // alpha_t
  Var context;        // c_t
  Var prior_weights;  // alpha_t^pri
  Var prior_context;  // c_t^pri
};

// e = U d; alpha = softmax(e); c = U^T alpha;
// alpha_pri = softmax(e * q); c_pri = U^T alpha_pri.
// With `prior` null this is plain attention and the prior outputs alias the
// plain ones. `utterance_t` is U^T.
Attention PriorAttention(Var utterance, Var utterance_t, Var query,
                         const std::vector<double> *prior);

struct Pooled {
  Var vector;       // u
  Var probability;  // p
};

// alpha = softmax(U w_ae); u = U^T alpha; p = sigmoid(w_d u + b_d).
Pooled PoolAndDiscriminate(Var states, Var pool_weight, Var classifier_weight,
                           Var classifier_bias);

// (1/N)(sum_source log p + sum_target log(1 - p)). Ascending-direction loss.
double DomainConfusionLoss(std::span<const double> probs, const std::vector<bool> &is_source);
// -(1/N)(sum_source log p + sum_target log(1 - p)).
double DomainDiscriminationLoss(std::span<const double> probs,
                                const std::vector<bool> &is_source);
// Per-instance log-likelihood term: log p (source) or log(1 - p) (target).
Var DomainLogLikelihood(Var probability, bool is_source);

struct DecoderState {
  Var hidden;
  Var cell;
};

struct DecoderContext {
  Var utterance;
  Var utterance_t;
  const std::vector<double> *prior = nullptr;
  Var sketch;    // invalid in the coarse stage
  Var sketch_t;
};

struct StepOutput {
  Var distribution;
  DecoderState state;
  Attention utterance_attention;
  Var sketch_weights;  // invalid unless the context has a sketch
};

struct LossOptions {
  bool include_coarse = true;
  bool include_fine = true;
  // Null disables dropout.
  std::mt19937_64 *dropout_rng = nullptr;
};

struct InstanceLosses {
  Var total;
  double coarse_ce = 0.0;
  double coarse_domain = 0.0;
  double fine_ce = 0.0;
  double fine_domain = 0.0;
  bool has_coarse = false;
  bool has_fine = false;
};

// Frozen decoder state for inference.
struct FrozenState {
  Tensor hidden;
  Tensor cell;
};

struct FrozenStep {
  Tensor distribution;
  FrozenState state;
  Tensor weights;
  Tensor prior_weights;
  Tensor sketch_weights;  // empty in the coarse stage
};

class DampModel;

// Per-utterance decoder runner over frozen parameters. Each Step() builds a
// small forward-only graph.
class StageDecoder {
 public:
  StageDecoder(const DampModel &model, Stage stage, Tensor utterance_states,
               std::vector<double> prior, std::optional<Tensor> sketch_states,
               FrozenState initial);

  const FrozenState &initial() const { return initial_; }
  FrozenStep Step(const FrozenState &state, StepInput input) const;
  int vocab_size() const;
  int sketch_length() const { return sketch_ ? sketch_->rows() : 0; }

 private:
  const DampModel *model_;
  Stage stage_;
  Tensor utterance_;
  Tensor utterance_t_;
  std::vector<double> prior_;
  std::optional<Tensor> sketch_;
  std::optional<Tensor> sketch_t_;
  FrozenState initial_;
};

class DampModel {
 public:
  // Fresh parameters drawn from `seed`.
  DampModel(const Architecture &arch, const ModelDims &dims, const Hyperparams &hp,
            std::uint64_t seed);
  // Parameters copied from `loaded`; throws ModelError when names or shapes
  // disagree with what `arch` and `dims` require.
  DampModel(const Architecture &arch, const ModelDims &dims, const Hyperparams &hp,
            const ParameterStore &loaded);

  DampModel(const DampModel &) = delete;
  DampModel &operator=(const DampModel &) = delete;

  const Architecture &architecture() const { return arch_; }
  const ModelDims &dims() const { return dims_; }
  const Hyperparams &hyperparams() const { return hp_; }
  ParameterStore &store() { return store_; }
  const ParameterStore &store() const { return store_; }

  // Overwrites an embedding parameter ("emb.utt", "emb.sketch", "emb.lf")
  // with pretrained rows.
  void SetEmbeddings(const std::string &name, const EmbeddingTable &table);
  // Parameters belonging to the fine stage (enc2, enc3, dec2, disc_f, emb.lf).
  bool IsFineStageParameter(const std::string &name) const;

  // Graph builders.
  BiLstmOutput Encode(Graph &g, int encoder, std::span<const int> ids,
                      std::mt19937_64 *dropout_rng) const;
  DecoderState InitialState(Graph &g, Stage stage, const BiLstmOutput &encoded) const;
  StepOutput DecodeStep(Graph &g, Stage stage, const DecoderContext &context,
                        const DecoderState &state, StepInput input,
                        std::mt19937_64 *dropout_rng) const;
  // Invalid probability when the stage has no discriminator head.
  Pooled Discriminate(Graph &g, Stage stage, Var states) const;
  bool HasDiscriminator(Stage stage) const;

  InstanceLosses BuildLosses(Graph &g, const Example &example,
                             const LossOptions &options) const;

  // Inference helpers over frozen parameters.
  struct EncodedUtterance {
    Tensor coarse_states;
    FrozenState coarse_init;
    Tensor fine_states;
    FrozenState fine_init;
  };
  EncodedUtterance EncodeUtterance(std::span<const int> ids) const;
  Tensor EncodeSketch(std::span<const int> sketch_ids) const;
  // Pooled u of a stage; mean pooling for stages without a discriminator.
  Tensor PooledRepresentation(Stage stage, std::span<const int> ids) const;

 private:
  friend class StageDecoder;

  struct DecoderParams {
    std::string prefix;
    Parameter *embedding = nullptr;
    Parameter *init_w = nullptr;
    Parameter *init_b = nullptr;
    LstmParams lstm;
    Parameter *out1_w = nullptr;
    Parameter *out1_b = nullptr;
    Parameter *out2_w = nullptr;
    Parameter *out2_b = nullptr;
    Parameter *switch_w = nullptr;  // fine stage, embed_dim != encoder width
  };
  struct EncoderParams {
    Parameter *embedding = nullptr;
    LstmParams forward;
    LstmParams backward;
  };
  struct HeadParams {
    Parameter *pool = nullptr;
    Parameter *weight = nullptr;
    Parameter *bias = nullptr;
  };

  void CreateParameters(std::mt19937_64 &rng);
  void Bind();
  const DecoderParams &decoder(Stage stage) const;
  // Utterance encoder used by a stage (1, 2) and the sketch encoder (3).
  int UtteranceEncoder(Stage stage) const;

  Var TeacherForcedCoarse(Graph &g, const Example &ex, const BiLstmOutput &enc,
                          Var states_t, std::mt19937_64 *rng) const;
  Var TeacherForcedFine(Graph &g, const Example &ex, const BiLstmOutput &utt,
                        Var states_t, const BiLstmOutput *sketch,
                        std::mt19937_64 *rng) const;
  Var DomainTerm(Graph &g, Stage stage, Var states, bool is_source, Adversary adversary) const;

  Architecture arch_;
  ModelDims dims_;
  Hyperparams hp_;
  ParameterStore store_;
  EncoderParams encoders_[4];
  DecoderParams coarse_;
  DecoderParams fine_;
  HeadParams coarse_head_;
  HeadParams fine_head_;
};

}  // namespace adaparse

#endif  // ADAPARSE_MODEL_H_
