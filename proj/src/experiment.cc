// src/experiment.cc

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

#include "asem/experiment.h"

#include <json.hpp>

#include <set>

#include "asem/error.h"

namespace asem {

RunConfig::RunConfig() {
  network.encoder_hidden = {32, 32};
  network.residual_blocks = 1;
  network.post_pool_widths = {64, 64};
  network.embedding_dim = 32;
  network.disc_widths = {64, 64};
  network.attention_hidden = 16;
  network.aux_head = true;
  trainer.batch_size = 16;
  trainer.adv_lr = 0.01;
  trainer.max_epochs = 6;
  trainer.patience = 2;
  Resolve();
}

void RunConfig::Resolve() {
  synth.seed = seed;
  trainer.seed = seed;
  probe.seed = seed;
  network.frame_dim = synth.frame_dim;
  network.num_speakers = synth.num_source_speakers;
}

void RunConfig::Validate() const {
  synth.Validate();
  network.Validate();
  trainer.Validate();
  if (probe.hidden < 1 || probe.epochs < 1 || !(probe.lr > 0.0) ||
      !(probe.train_fraction > 0.0 && probe.train_fraction < 1.0))
    Fail(ErrorKind::kUsage, "probe: need hidden >= 1, epochs >= 1, lr > 0 and "
                            "0 < train_fraction < 1");
}

namespace {

using Json = nlohmann::ordered_json;

// Each section lists its keys once; the same visitor reads and writes.
template <typename F>
void VisitSynth(SynthSpec &s, F &&f) {
  f("num_source_speakers", s.num_source_speakers);
  f("num_target_speakers", s.num_target_speakers);
  f("recordings_per_speaker", s.recordings_per_speaker);
  f("frames_min", s.frames_min);
  f("frames_max", s.frames_max);
  f("frame_dim", s.frame_dim);
  f("speaker_scatter", s.speaker_scatter);
  f("channel_noise", s.channel_noise);
  f("shift_rotation_angle", s.shift_rotation_angle);
  f("shift_offset_scale", s.shift_offset_scale);
}

template <typename F>
void VisitNetwork(NetworkConfig &n, F &&f) {
  f("encoder_hidden", n.encoder_hidden);
  f("residual_blocks", n.residual_blocks);
  f("post_pool_widths", n.post_pool_widths);
  f("embedding_dim", n.embedding_dim);
  f("disc_widths", n.disc_widths);
  f("attention_hidden", n.attention_hidden);
  f("use_batchnorm", n.use_batchnorm);
  f("aux_head", n.aux_head);
}

template <typename F>
void VisitTrainer(TrainerConfig &t, F &&f) {
  f("pretrain_lr", t.pretrain_lr);
  f("classifier_lr", t.classifier_lr);
  f("embed_lr", t.embed_lr);
  f("adv_lr", t.adv_lr);
  f("rms_rho", t.rms_rho);
  f("rms_eps", t.rms_eps);
  f("batch_size", t.batch_size);
  f("chunk_frames_min", t.chunk_frames_min);
  f("chunk_frames_max", t.chunk_frames_max);
  f("samples_per_recording", t.samples_per_recording);
  f("pretrain_epochs", t.pretrain_epochs);
  f("max_epochs", t.max_epochs);
  f("patience", t.patience);
  f("am_scale", t.am_cfg.s);
  f("am_margin", t.am_cfg.m);
  f("pretrain_margin", t.pretrain_margin);
}

template <typename F>
void VisitProbe(ProbeConfig &p, F &&f) {
  f("hidden", p.hidden);
  f("epochs", p.epochs);
  f("lr", p.lr);
  f("train_fraction", p.train_fraction);
}

struct Writer {
  Json *section;
  template <typename T>
  void operator()(const char *key, const T &value) { (*section)[key] = value; }
};

class Reader {
 public:
  Reader(const Json &section, const std::string &where)
      : section_(section), where_(where) {}

  void operator()(const char *key, std::size_t &value) {
    if (const Json *v = Take(key)) value = Unsigned(*v, key);
  }
  void operator()(const char *key, double &value) {
    if (const Json *v = Take(key)) {
      if (!v->is_number()) Bad(key, "a number");
      value = v->get<double>();
    }
  }
  void operator()(const char *key, bool &value) {
    if (const Json *v = Take(key)) {
      if (!v->is_boolean()) Bad(key, "true or false");
      value = v->get<bool>();
    }
  }
  void operator()(const char *key, std::vector<std::size_t> &value) {
    if (const Json *v = Take(key)) {
      if (!v->is_array()) Bad(key, "an array of non-negative integers");
      value.clear();
      for (const Json &e : *v) value.push_back(Unsigned(e, key));
    }
  }

  /// Throws if the section held a key no visitor asked for.
  void Finish() const {
    for (const auto &item : section_.items())
      if (!seen_.count(item.key()))
        Fail(ErrorKind::kData, where_, ": unknown key \"", item.key(), "\"");
  }

 private:
  const Json *Take(const char *key) {
    seen_.insert(key);
    auto it = section_.find(key);
    return it == section_.end() ? nullptr : &*it;
  }
  std::size_t Unsigned(const Json &v, const char *key) const {
    if (!v.is_number_unsigned()) Bad(key, "a non-negative integer");
    return v.get<std::size_t>();
  }
  [[noreturn]] void Bad(const char *key, const char *expected) const {
    Fail(ErrorKind::kData, where_, ".", key, ": expected ", expected);
  }

  const Json &section_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace

std::string RunConfigToJson(const RunConfig &config) {
  RunConfig c = config;
  c.Resolve();
  Json root, synth, network, trainer, probe;
  root["seed"] = c.seed;
  VisitSynth(c.synth, Writer{&synth});
  VisitNetwork(c.network, Writer{&network});
  VisitTrainer(c.trainer, Writer{&trainer});
  VisitProbe(c.probe, Writer{&probe});
  root["synth"] = synth;
  root["network"] = network;
  root["trainer"] = trainer;
  root["probe"] = probe;
  return root.dump(2) + "\n";
}

RunConfig RunConfigFromJson(const std::string &text, const std::string &source) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::parse_error &e) {
    Fail(ErrorKind::kData, source, ": invalid JSON: ", e.what());
  }
  if (!root.is_object()) Fail(ErrorKind::kData, source, ": expected a JSON object");
  RunConfig config;
  for (const auto &item : root.items()) {
    const std::string &key = item.key();
    const Json &value = item.value();
    if (key == "seed") {
      if (!value.is_number_unsigned())
        Fail(ErrorKind::kData, source, ": seed must be a non-negative integer");
      config.seed = value.get<std::uint64_t>();
      continue;
    }
    if (key != "synth" && key != "network" && key != "trainer" && key != "probe")
      Fail(ErrorKind::kData, source, ": unknown key \"", key, "\"");
    if (!value.is_object())
      Fail(ErrorKind::kData, source, ": section \"", key, "\" must be an object");
    Reader reader(value, source + ": " + key);
    if (key == "synth") VisitSynth(config.synth, reader);
    if (key == "network") VisitNetwork(config.network, reader);
    if (key == "trainer") VisitTrainer(config.trainer, reader);
    if (key == "probe") VisitProbe(config.probe, reader);
    reader.Finish();
  }
  config.Resolve();
  try {
    config.Validate();
  } catch (const Error &e) {
    Fail(ErrorKind::kData, source, ": ", e.what());
  }
  return config;
}

namespace {

Corpus Join(const Corpus &a, const Corpus &b) {
  Corpus c = a;
  c.recordings.insert(c.recordings.end(), b.recordings.begin(), b.recordings.end());
  return c;
}

void Append(TrialList &to, const TrialList &from) {
  to.trials.insert(to.trials.end(), from.trials.begin(), from.trials.end());
}

std::vector<std::string> Ids(const Corpus &corpus) {
  std::vector<std::string> ids;
  for (const Recording &r : corpus.recordings) ids.push_back(r.id);
  return ids;
}

}  // namespace

ExperimentData BuildExperimentData(const SynthSpec &spec) {
  ExperimentData data;
  std::tie(data.source, data.target) = Generate(spec);

  SynthSpec valid = spec;
  valid.seed = spec.seed + 1000;
  auto [valid_source, valid_target] = Generate(valid);
  data.validation.corpus = Join(valid_source, valid_target);
  data.validation.trials = MakeTrials(valid_source);
  Append(data.validation.trials, MakeTrials(valid_target));

  SynthSpec test = spec;
  test.seed = spec.seed + 2000;
  test.num_source_speakers = 16;
  test.num_target_speakers = 16;
  test.recordings_per_speaker = 8;
  std::tie(data.test_source, data.test_target) = Generate(test);
  data.source_trials = MakeTrials(data.test_source);
  data.target_trials = MakeTrials(data.test_target);

  SynthSpec probe = spec;
  probe.seed = spec.seed + 3000;
  probe.num_source_speakers = 200;
  probe.num_target_speakers = 200;
  probe.recordings_per_speaker = 1;
  std::tie(data.probe_source, data.probe_target) = Generate(probe);
  return data;
}

TrialList PooledTrials(const ExperimentData &data) {
  TrialList pooled = data.source_trials;
  Append(pooled, data.target_trials);
  return pooled;
}

Corpus PooledTestCorpus(const ExperimentData &data) {
  return Join(data.test_source, data.test_target);
}

double EmbeddingProbe(const ModelState &model, const Corpus &probe_source,
                      const Corpus &probe_target, const ProbeConfig &config) {
  const Tensor source = EmbeddingMatrix(Extract(probe_source, model), Ids(probe_source));
  const Tensor target = EmbeddingMatrix(Extract(probe_target, model), Ids(probe_target));
  return DomainProbe(source, target, config);
}

Evaluation Evaluate(const ModelState &model, const ExperimentData &data,
                    const ProbeConfig &probe) {
  Evaluation ev;
  const EmbeddingTable table = Extract(PooledTestCorpus(data), model);
  const TrialList pooled = PooledTrials(data);
  ev.source_scores = ScoreTrials(data.source_trials, table);
  ev.target_scores = ScoreTrials(data.target_trials, table);
  ev.pooled_scores = ScoreTrials(pooled, table);
  ev.source_eer = ComputeEer(ev.source_scores, data.source_trials);
  ev.target_eer = ComputeEer(ev.target_scores, data.target_trials);
  ev.pooled_eer = ComputeEer(ev.pooled_scores, pooled);
  ev.probe = EmbeddingProbe(model, data.probe_source, data.probe_target, probe);
  return ev;
}

std::vector<GanVariant> AllVariants() {
  std::vector<GanVariant> out;
  for (GanKind kind : {GanKind::kSgan, GanKind::kLsgan, GanKind::kRelgan,
                       GanKind::kGradrev})
    for (bool aux : {false, true}) out.push_back({kind, aux});
  return out;
}

}  // namespace asem
