// asem/synthdata.h

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

#ifndef ASEM_SYNTHDATA_H_
#define ASEM_SYNTHDATA_H_

// Synthetic speaker corpora with a controllable source/target covariate
// shift.  Each speaker has a latent mean ~ N(0, speaker_scatter^2 I); a
// recording is
//
//   x_t = mean + w_t + n_t,   w_t = 0.9 w_{t-1} + e_t,   n_t ~ N(0, noise^2 I)
//
// with the AR(1) wander scaled to a stationary std of 0.3 * noise.  Target
// recordings are then mapped through x -> R x + offset * u, where R rotates
// coordinates (0, 1) by the shift angle and u is a fixed unit vector
// (alternating signs).  The map does not depend on the seed, so corpora
// generated with different seeds share the same shift.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "asem/network.h"
#include "asem/tensor.h"

namespace asem {

struct SynthSpec {
  std::size_t num_source_speakers = 8;
  std::size_t num_target_speakers = 6;
  std::size_t recordings_per_speaker = 6;
  std::size_t frames_min = 100;
  std::size_t frames_max = 160;
  std::size_t frame_dim = 8;
  double speaker_scatter = 1.0;
  double channel_noise = 2.0;
  double shift_rotation_angle = 0.6;
  double shift_offset_scale = 4.0;
  std::uint64_t seed = 1;

  void Validate() const;
  bool operator==(const SynthSpec &) const = default;
};

struct Recording {
  std::string id;
  std::uint32_t speaker = 0;
  Domain domain = Domain::kSource;
  Tensor frames;  // [time, frame_dim]
  bool operator==(const Recording &) const = default;
};

struct Corpus {
  std::vector<Recording> recordings;
  bool operator==(const Corpus &) const = default;
  std::size_t size() const { return recordings.size(); }
  /// Throws on duplicate ids, non-finite frames, or mixed frame widths.
  void Validate() const;
};

/// Source and target corpora.  Source speakers are numbered 0..S-1 and target
/// speakers S..S+T-1.  Frame values are rounded to float precision so that a
/// file round trip is exact.
std::pair<Corpus, Corpus> Generate(const SynthSpec &spec);

/// Applies the fixed target-domain map to one frame matrix [time, dim].
Tensor ApplyDomainShift(const Tensor &frames, double angle, double offset_scale);

/// Corpus file: "ASEC", u32 version, u32 record count, then per record
/// (length-prefixed id, u32 speaker, u8 domain, u32 time, u32 dim,
/// f32 LE frames row-major).
std::string SerializeCorpus(const Corpus &corpus);
Corpus DeserializeCorpus(const std::string &bytes,
                         const std::string &source = "<memory>");
void WriteCorpus(const Corpus &corpus, const std::string &path);
Corpus ReadCorpus(const std::string &path);

/// Per-recording mean frame, [recordings, frame_dim].
Tensor PooledFrames(const Corpus &corpus);

}  // namespace asem

#endif  // ASEM_SYNTHDATA_H_
