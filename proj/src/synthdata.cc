// src/synthdata.cc

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

#include "asem/synthdata.h"

#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include "asem/error.h"
#include "binary-io.h"

namespace asem {

void SynthSpec::Validate() const {
  if (num_source_speakers < 1 || num_target_speakers < 1)
    Fail(ErrorKind::kUsage, "synth: need at least one speaker per domain");
  if (recordings_per_speaker < 1)
    Fail(ErrorKind::kUsage, "synth: recordings_per_speaker must be >= 1");
  if (frames_min < 1 || frames_min > frames_max)
    Fail(ErrorKind::kUsage, "synth: need 1 <= frames_min <= frames_max");
  if (frame_dim < 1) Fail(ErrorKind::kUsage, "synth: frame_dim must be >= 1");
  if (frame_dim < 2 && shift_rotation_angle != 0.0)
    Fail(ErrorKind::kUsage, "synth: rotation needs frame_dim >= 2");
  if (!(speaker_scatter > 0.0) || !(channel_noise > 0.0))
    Fail(ErrorKind::kUsage, "synth: speaker_scatter and channel_noise must be > 0");
  if (!std::isfinite(shift_rotation_angle) || !std::isfinite(shift_offset_scale))
    Fail(ErrorKind::kUsage, "synth: shift parameters must be finite");
}

void Corpus::Validate() const {
  std::set<std::string> ids;
  std::size_t dim = 0;
  for (const Recording &r : recordings) {
    if (!ids.insert(r.id).second)
      Fail(ErrorKind::kData, "corpus: duplicate recording id ", r.id);
    if (r.frames.rank() != 2)
      Fail(ErrorKind::kData, "corpus: recording ", r.id, " frames must be [time, dim]");
    if (dim == 0) dim = r.frames.dim(1);
    if (r.frames.dim(1) != dim)
      Fail(ErrorKind::kData, "corpus: recording ", r.id, " has frame dim ",
           r.frames.dim(1), ", expected ", dim);
    if (!r.frames.AllFinite())
      Fail(ErrorKind::kData, "corpus: recording ", r.id, " has non-finite frames");
  }
}

Tensor ApplyDomainShift(const Tensor &frames, double angle, double offset_scale) {
  const std::size_t t = frames.dim(0), d = frames.dim(1);
  if (d < 2 && angle != 0.0)
    Fail(ErrorKind::kUsage, "domain shift: rotation needs frame_dim >= 2");
  Tensor out = frames;
  const double c = std::cos(angle), s = std::sin(angle);
  const double u_scale = offset_scale / std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < t; ++i) {
    if (d >= 2) {
      const double x0 = frames.at(i, 0), x1 = frames.at(i, 1);
      out.at(i, 0) = c * x0 - s * x1;
      out.at(i, 1) = s * x0 + c * x1;
    }
    for (std::size_t k = 0; k < d; ++k)
      out.at(i, k) += (k % 2 == 0 ? u_scale : -u_scale);
  }
  return out;
}

namespace {

std::string RecordingId(Domain domain, std::size_t speaker, std::size_t rec) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s-spk%03zu-rec%02zu",
                domain == Domain::kSource ? "src" : "tgt", speaker, rec);
  return buf;
}

std::vector<double> SpeakerMean(const SynthSpec &spec, std::size_t speaker) {
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed),
                    static_cast<std::uint32_t>(spec.seed >> 32), 1u,
                    static_cast<std::uint32_t>(speaker)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, spec.speaker_scatter);
  std::vector<double> mean(spec.frame_dim);
  for (double &v : mean) v = normal(rng);
  return mean;
}

Tensor RecordingFrames(const SynthSpec &spec, const std::vector<double> &mean,
                       std::size_t speaker, std::size_t rec) {
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed),
                    static_cast<std::uint32_t>(spec.seed >> 32), 2u,
                    static_cast<std::uint32_t>(speaker),
                    static_cast<std::uint32_t>(rec)};
  std::mt19937_64 rng(seq);
  std::uniform_int_distribution<std::size_t> length(spec.frames_min, spec.frames_max);
  const std::size_t t = length(rng), d = spec.frame_dim;
  constexpr double kWanderCoef = 0.9;
  const double wander_std = 0.3 * spec.channel_noise;
  const double innovation_std = wander_std * std::sqrt(1.0 - kWanderCoef * kWanderCoef);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<double> wander(d);
  for (double &w : wander) w = wander_std * unit(rng);
  Tensor frames({t, d});
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t k = 0; k < d; ++k) {
      if (i > 0) wander[k] = kWanderCoef * wander[k] + innovation_std * unit(rng);
      frames.at(i, k) = mean[k] + wander[k] + spec.channel_noise * unit(rng);
    }
  return frames;
}

void RoundToFloat(Tensor &t) {
  for (double &v : t.data()) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace

std::pair<Corpus, Corpus> Generate(const SynthSpec &spec) {
  spec.Validate();
  Corpus source, target;
  const std::size_t total = spec.num_source_speakers + spec.num_target_speakers;
  for (std::size_t spk = 0; spk < total; ++spk) {
    const bool is_source = spk < spec.num_source_speakers;
    const Domain domain = is_source ? Domain::kSource : Domain::kTarget;
    const std::vector<double> mean = SpeakerMean(spec, spk);
    for (std::size_t rec = 0; rec < spec.recordings_per_speaker; ++rec) {
      Recording r;
      r.id = RecordingId(domain, spk, rec);
      r.speaker = static_cast<std::uint32_t>(spk);
      r.domain = domain;
      r.frames = RecordingFrames(spec, mean, spk, rec);
      if (!is_source)
        r.frames = ApplyDomainShift(r.frames, spec.shift_rotation_angle,
                                    spec.shift_offset_scale);
      RoundToFloat(r.frames);
      (is_source ? source : target).recordings.push_back(std::move(r));
    }
  }
  return {std::move(source), std::move(target)};
}

namespace {

constexpr char kCorpusMagic[] = "ASEC";
constexpr std::uint32_t kCorpusVersion = 1;

}  // namespace

std::string SerializeCorpus(const Corpus &corpus) {
  std::string out(kCorpusMagic, 4);
  internal::PutU32(out, kCorpusVersion);
  internal::PutU32(out, static_cast<std::uint32_t>(corpus.size()));
  for (const Recording &r : corpus.recordings) {
    internal::PutString(out, r.id);
    internal::PutU32(out, r.speaker);
    internal::PutU8(out, static_cast<std::uint8_t>(r.domain));
    internal::PutU32(out, static_cast<std::uint32_t>(r.frames.dim(0)));
    internal::PutU32(out, static_cast<std::uint32_t>(r.frames.dim(1)));
    for (double v : r.frames.data()) internal::PutF32(out, static_cast<float>(v));
  }
  return out;
}

Corpus DeserializeCorpus(const std::string &bytes, const std::string &source) {
  internal::ByteReader r(bytes, source);
  if (r.Take(4, "magic") != std::string_view(kCorpusMagic, 4))
    r.Malformed("bad magic, expected ASEC");
  const std::uint32_t version = r.U32("version");
  if (version != kCorpusVersion)
    r.Malformed("unsupported version " + std::to_string(version));
  const std::uint32_t count = r.U32("record count");
  Corpus corpus;
  std::set<std::string> ids;
  for (std::uint32_t i = 0; i < count; ++i) {
    Recording rec;
    rec.id = r.String("recording id");
    if (!ids.insert(rec.id).second) r.Malformed("duplicate recording id " + rec.id);
    rec.speaker = r.U32("speaker id");
    const std::uint8_t domain = r.U8("domain");
    if (domain > 1) r.Malformed("domain byte must be 0 or 1");
    rec.domain = static_cast<Domain>(domain);
    const std::uint32_t t = r.U32("time"), d = r.U32("dim");
    if (t == 0) r.Malformed("recording " + rec.id + " has zero frames");
    if (d == 0) r.Malformed("recording " + rec.id + " has zero frame dim");
    const std::size_t n = static_cast<std::size_t>(t) * d;
    if (n > (bytes.size() - r.offset()) / 4) r.Malformed("frame payload truncated");
    std::vector<double> data(n);
    for (std::size_t k = 0; k < n; ++k) {
      data[k] = r.F32("frames");
      if (!std::isfinite(data[k])) r.Malformed("non-finite frame value");
    }
    rec.frames = Tensor({t, d}, std::move(data));
    corpus.recordings.push_back(std::move(rec));
  }
  if (!r.AtEnd()) r.Malformed("trailing bytes after last record");
  corpus.Validate();
  return corpus;
}

void WriteCorpus(const Corpus &corpus, const std::string &path) {
  internal::WriteFileBytes(path, SerializeCorpus(corpus));
}

Corpus ReadCorpus(const std::string &path) {
  return DeserializeCorpus(internal::ReadFileBytes(path), path);
}

Tensor PooledFrames(const Corpus &corpus) {
  if (corpus.recordings.empty())
    Fail(ErrorKind::kData, "pooled frames: empty corpus");
  const std::size_t d = corpus.recordings[0].frames.dim(1);
  Tensor out({corpus.size(), d});
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Tensor &f = corpus.recordings[i].frames;
    for (std::size_t t = 0; t < f.dim(0); ++t)
      for (std::size_t k = 0; k < d; ++k) out.at(i, k) += f.at(t, k);
    for (std::size_t k = 0; k < d; ++k) out.at(i, k) /= static_cast<double>(f.dim(0));
  }
  return out;
}

}  // namespace asem
