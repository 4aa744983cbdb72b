// asem/network.h

// Copyright 2026  The asem authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ASEM_NETWORK_H_
#define ASEM_NETWORK_H_

// The three trainable functions of the adversarial speaker-embedding model:
//
//   E  embedding function / generator:
//        per-frame encoder (FC + BN + ELU layers, then residual blocks
//        y = x + FC(ELU(BN(FC(x)))))  ->  attentive statistics pooling
//        ->  FC+BN+ELU  ->  FC+BN+ELU  ->  FC+BN  ("fc3", the embedding)
//   C  cosine classifier: cos(f, w_j) for each speaker column w_j of W
//   D  domain discriminator: FC+ELU layers -> one raw domain score, plus an
//        optional auxiliary speaker head on the last hidden layer
//
// Parameter tensors live in ModelState; the functions below bind them as
// graph leaves so the trainer can choose which group receives gradients.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "asem/autodiff.h"
#include "asem/tensor.h"

namespace asem {

struct NetworkConfig {
  std::size_t frame_dim = 8;
  std::vector<std::size_t> encoder_hidden{64, 64};
  std::size_t residual_blocks = 2;
  std::vector<std::size_t> post_pool_widths{512, 512};
  std::size_t embedding_dim = 64;
  std::size_t num_speakers = 2;
  std::vector<std::size_t> disc_widths{256, 256};
  std::size_t attention_hidden = 64;
  bool use_batchnorm = true;
  bool aux_head = false;

  /// Throws a usage error on any invariant violation.
  void Validate() const;
  bool operator==(const NetworkConfig &) const = default;
};

/// Compact single-line text form (JSON) used inside checkpoints.
std::string NetworkConfigToText(const NetworkConfig &config);
NetworkConfig NetworkConfigFromText(const std::string &text);

struct ModelState {
  NetworkConfig config;
  TensorMap embed;       // E
  TensorMap classifier;  // C: "W" [embedding_dim, num_speakers]
  TensorMap discrim;     // D
  TensorMap bn_running;  // "<layer>.bn.mean" / "<layer>.bn.var" for E
  bool operator==(const ModelState &) const = default;
};

ModelState InitModel(const NetworkConfig &config, std::uint64_t seed);

enum class Mode { kTrain, kEval };

constexpr double kBatchNormEps = 1e-5;
constexpr double kBatchNormMomentum = 0.1;
constexpr double kPoolingStdFloor = 1e-6;

enum class Domain : std::uint8_t { kSource = 0, kTarget = 1 };

struct SpeakerBatch {
  Tensor frames;                    // [batch, time, frame_dim]
  std::vector<int> speaker_labels;  // ignored for TARGET batches
  Domain domain = Domain::kSource;
};

struct PooledStats {
  ad::Var pooled;   // [batch, 2d] = concat(mean, std)
  ad::Var weights;  // [batch, time], rows sum to one
};

/// Attention-weighted mean and standard deviation over time.  `attn` holds
/// "attn.fc1.W" [d, hidden], "attn.fc1.b", "attn.fc2.W" [hidden, 1],
/// "attn.fc2.b" [1].
PooledStats AttentiveStatsPool(const ad::Var &frame_features,
                               const ad::VarMap &attn);

/// Runs E on frames [batch, time, frame_dim] and returns [batch,
/// embedding_dim].  In TRAIN mode batch statistics are used and, when
/// `running_update` is given, running statistics are moved towards them with
/// momentum kBatchNormMomentum.  In EVAL mode `running` is used.
ad::Var EncodeGraph(const ad::Var &frames, const NetworkConfig &config,
                    const ad::VarMap &embed, Mode mode,
                    const TensorMap &running, TensorMap *running_update);

/// Graph-free EVAL-mode embedding of frames [batch, time, frame_dim].
Tensor Encode(const ModelState &model, const Tensor &frames,
              Mode mode = Mode::kEval);

/// Raw cosines between embeddings [batch, E] and the columns of C's W.
ad::Var Classify(const ad::Var &embeddings, const ad::VarMap &classifier);

struct DiscriminatorOutput {
  ad::Var raw_score;                  // [batch], pre-activation
  std::optional<ad::Var> aux_logits;  // [batch, num_speakers]
};

DiscriminatorOutput Discriminate(const ad::Var &embeddings,
                                 const NetworkConfig &config,
                                 const ad::VarMap &discrim);

/// Checkpoint image: "ASEM", u32 version, u32 record count, records of
/// (u32 name length, name, u32 rank, u32 extents, f32 LE payload) in sorted
/// name order, then the config as a length-prefixed UTF-8 text block.
std::string SerializeModel(const ModelState &model);
ModelState DeserializeModel(const std::string &bytes,
                            const std::string &source = "<memory>");
void SaveModel(const ModelState &model, const std::string &path);
ModelState LoadModel(const std::string &path);

}  // namespace asem

#endif  // ASEM_NETWORK_H_
