// src/network.cc

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

#include "asem/network.h"

#include <cmath>
#include <random>

#include "asem/error.h"
#include "binary-io.h"
#include "json.hpp"

namespace asem {

using ad::Var;
using ad::VarMap;

void NetworkConfig::Validate() const {
  auto positive = [](const std::vector<std::size_t> &widths, const char *what) {
    for (std::size_t w : widths)
      if (w < 1) Fail(ErrorKind::kUsage, "network: ", what, " widths must be >= 1");
  };
  if (frame_dim < 1) Fail(ErrorKind::kUsage, "network: frame_dim must be >= 1");
  if (encoder_hidden.empty())
    Fail(ErrorKind::kUsage, "network: encoder_hidden needs at least one width");
  positive(encoder_hidden, "encoder_hidden");
  if (post_pool_widths.size() != 2)
    Fail(ErrorKind::kUsage, "network: post_pool_widths needs exactly 2 entries, got ",
         post_pool_widths.size());
  positive(post_pool_widths, "post_pool");
  if (disc_widths.empty())
    Fail(ErrorKind::kUsage, "network: disc_widths needs at least one width");
  positive(disc_widths, "disc");
  if (embedding_dim < 2) Fail(ErrorKind::kUsage, "network: embedding_dim must be >= 2");
  if (num_speakers < 2) Fail(ErrorKind::kUsage, "network: num_speakers must be >= 2");
  if (attention_hidden < 1)
    Fail(ErrorKind::kUsage, "network: attention_hidden must be >= 1");
}

std::string NetworkConfigToText(const NetworkConfig &c) {
  nlohmann::json j;
  j["frame_dim"] = c.frame_dim;
  j["encoder_hidden"] = c.encoder_hidden;
  j["residual_blocks"] = c.residual_blocks;
  j["post_pool_widths"] = c.post_pool_widths;
  j["embedding_dim"] = c.embedding_dim;
  j["num_speakers"] = c.num_speakers;
  j["disc_widths"] = c.disc_widths;
  j["attention_hidden"] = c.attention_hidden;
  j["use_batchnorm"] = c.use_batchnorm;
  j["aux_head"] = c.aux_head;
  return j.dump();
}

NetworkConfig NetworkConfigFromText(const std::string &text) {
  NetworkConfig c;
  try {
    nlohmann::json j = nlohmann::json::parse(text);
    c.frame_dim = j.at("frame_dim").get<std::size_t>();
    c.encoder_hidden = j.at("encoder_hidden").get<std::vector<std::size_t>>();
    c.residual_blocks = j.at("residual_blocks").get<std::size_t>();
    c.post_pool_widths = j.at("post_pool_widths").get<std::vector<std::size_t>>();
    c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
    c.num_speakers = j.at("num_speakers").get<std::size_t>();
    c.disc_widths = j.at("disc_widths").get<std::vector<std::size_t>>();
    c.attention_hidden = j.at("attention_hidden").get<std::size_t>();
    c.use_batchnorm = j.at("use_batchnorm").get<bool>();
    c.aux_head = j.at("aux_head").get<bool>();
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorKind::kData, "network config block: ", e.what());
  }
  c.Validate();
  return c;
}

namespace {

// Glorot-uniform weights, zero bias.
void AddLinear(TensorMap &params, const std::string &name, std::size_t in,
               std::size_t out, std::mt19937_64 &rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor w({in, out});
  for (double &v : w.data()) v = dist(rng);
  params[name + ".W"] = std::move(w);
  params[name + ".b"] = Tensor({out});
}

void AddBatchNorm(TensorMap &params, TensorMap &running, const std::string &name,
                  std::size_t width) {
  params[name + ".bn.gamma"] = Tensor({width}, 1.0);
  params[name + ".bn.beta"] = Tensor({width}, 0.0);
  running[name + ".bn.mean"] = Tensor({width}, 0.0);
  running[name + ".bn.var"] = Tensor({width}, 1.0);
}

const Var &Get(const VarMap &params, const std::string &name) {
  auto it = params.find(name);
  if (it == params.end()) Fail(ErrorKind::kState, "missing parameter ", name);
  return it->second;
}

Var Linear(const Var &x, const VarMap &params, const std::string &name) {
  return ad::AddBias(ad::MatMul(x, Get(params, name + ".W")),
                     Get(params, name + ".b"));
}

Var BatchNorm(const Var &x, const VarMap &params, const std::string &name,
              Mode mode, const TensorMap &running, TensorMap *running_update) {
  const Var &gamma = Get(params, name + ".bn.gamma");
  const Var &beta = Get(params, name + ".bn.beta");
  const std::string mean_key = name + ".bn.mean", var_key = name + ".bn.var";
  if (mode == Mode::kEval) {
    auto m = running.find(mean_key), v = running.find(var_key);
    if (m == running.end() || v == running.end())
      Fail(ErrorKind::kState, "missing running statistics for ", name);
    return ad::BatchNormInfer(x, gamma, beta, m->second, v->second,
                              kBatchNormEps);
  }
  Tensor batch_mean, batch_var;
  Var out = ad::BatchNormTrain(x, gamma, beta, kBatchNormEps, &batch_mean,
                               &batch_var);
  if (running_update) {
    Tensor &rm = (*running_update)[mean_key];
    Tensor &rv = (*running_update)[var_key];
    if (rm.shape() != batch_mean.shape()) rm = Tensor(batch_mean.shape(), 0.0);
    if (rv.shape() != batch_var.shape()) rv = Tensor(batch_var.shape(), 1.0);
    for (std::size_t i = 0; i < rm.size(); ++i) {
      rm[i] = (1.0 - kBatchNormMomentum) * rm[i] + kBatchNormMomentum * batch_mean[i];
      rv[i] = (1.0 - kBatchNormMomentum) * rv[i] + kBatchNormMomentum * batch_var[i];
    }
  }
  return out;
}

}  // namespace

ModelState InitModel(const NetworkConfig &config, std::uint64_t seed) {
  config.Validate();
  ModelState m;
  m.config = config;
  std::mt19937_64 rng(seed);

  std::size_t width = config.frame_dim;
  for (std::size_t i = 0; i < config.encoder_hidden.size(); ++i) {
    const std::string name = "enc" + std::to_string(i);
    AddLinear(m.embed, name, width, config.encoder_hidden[i], rng);
    if (config.use_batchnorm)
      AddBatchNorm(m.embed, m.bn_running, name, config.encoder_hidden[i]);
    width = config.encoder_hidden[i];
  }
  for (std::size_t r = 0; r < config.residual_blocks; ++r) {
    const std::string name = "res" + std::to_string(r);
    AddLinear(m.embed, name + ".fc1", width, width, rng);
    if (config.use_batchnorm) AddBatchNorm(m.embed, m.bn_running, name, width);
    AddLinear(m.embed, name + ".fc2", width, width, rng);
  }
  AddLinear(m.embed, "attn.fc1", width, config.attention_hidden, rng);
  AddLinear(m.embed, "attn.fc2", config.attention_hidden, 1, rng);
  width *= 2;
  for (std::size_t i = 0; i < 2; ++i) {
    const std::string name = "post" + std::to_string(i);
    AddLinear(m.embed, name, width, config.post_pool_widths[i], rng);
    if (config.use_batchnorm)
      AddBatchNorm(m.embed, m.bn_running, name, config.post_pool_widths[i]);
    width = config.post_pool_widths[i];
  }
  AddLinear(m.embed, "emb", width, config.embedding_dim, rng);
  if (config.use_batchnorm)
    AddBatchNorm(m.embed, m.bn_running, "emb", config.embedding_dim);

  {
    const double limit = std::sqrt(
        6.0 / static_cast<double>(config.embedding_dim + config.num_speakers));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Tensor w({config.embedding_dim, config.num_speakers});
    for (double &v : w.data()) v = dist(rng);
    m.classifier["W"] = std::move(w);
  }

  width = config.embedding_dim;
  for (std::size_t i = 0; i < config.disc_widths.size(); ++i) {
    AddLinear(m.discrim, "fc" + std::to_string(i), width, config.disc_widths[i],
              rng);
    width = config.disc_widths[i];
  }
  AddLinear(m.discrim, "out", width, 1, rng);
  if (config.aux_head) AddLinear(m.discrim, "aux", width, config.num_speakers, rng);
  return m;
}

PooledStats AttentiveStatsPool(const Var &h, const VarMap &attn) {
  if (h.value().rank() != 3)
    Fail(ErrorKind::kShape, "attentive_stats_pool: expected [batch, time, d], got ",
         ShapeString(h.shape()));
  const std::size_t b = h.shape()[0], t = h.shape()[1], d = h.shape()[2];
  Var flat = ad::Reshape(h, {b * t, d});
  Var hidden = ad::Elu(Linear(flat, attn, "attn.fc1"));
  Var scores = ad::Reshape(Linear(hidden, attn, "attn.fc2"), {b, t});
  Var weights = ad::Softmax(scores, 1);
  Var w = ad::ExpandLast(weights, d);  // [b, t, d]
  Var mean = ad::SumAxis(ad::Mul(w, h), 1);
  Var second = ad::SumAxis(ad::Mul(w, ad::Square(h)), 1);
  Var var = ad::AddScalar(ad::Sub(second, ad::Square(mean)), kPoolingStdFloor);
  Var std = ad::Sqrt(var);
  return {ad::Concat({mean, std}, 1), weights};
}

Var EncodeGraph(const Var &frames, const NetworkConfig &config,
                const VarMap &embed, Mode mode, const TensorMap &running,
                TensorMap *running_update) {
  const Shape &s = frames.shape();
  if (s.size() != 3)
    Fail(ErrorKind::kShape, "encode: frames must be [batch, time, frame_dim], got ",
         ShapeString(s));
  if (s[2] != config.frame_dim)
    Fail(ErrorKind::kShape, "encode: frame_dim ", s[2], " does not match config ",
         config.frame_dim);
  const std::size_t b = s[0], t = s[1];
  if (t < 1) Fail(ErrorKind::kShape, "encode: time must be >= 1");
  TensorMap *update = mode == Mode::kTrain ? running_update : nullptr;

  Var x = ad::Reshape(frames, {b * t, config.frame_dim});
  for (std::size_t i = 0; i < config.encoder_hidden.size(); ++i) {
    const std::string name = "enc" + std::to_string(i);
    x = Linear(x, embed, name);
    if (config.use_batchnorm) x = BatchNorm(x, embed, name, mode, running, update);
    x = ad::Elu(x);
  }
  for (std::size_t r = 0; r < config.residual_blocks; ++r) {
    const std::string name = "res" + std::to_string(r);
    Var y = Linear(x, embed, name + ".fc1");
    if (config.use_batchnorm) y = BatchNorm(y, embed, name, mode, running, update);
    y = Linear(ad::Elu(y), embed, name + ".fc2");
    x = ad::Add(x, y);
  }
  const std::size_t width = config.encoder_hidden.back();
  Var pooled = AttentiveStatsPool(ad::Reshape(x, {b, t, width}), embed).pooled;
  for (std::size_t i = 0; i < 2; ++i) {
    const std::string name = "post" + std::to_string(i);
    pooled = Linear(pooled, embed, name);
    if (config.use_batchnorm)
      pooled = BatchNorm(pooled, embed, name, mode, running, update);
    pooled = ad::Elu(pooled);
  }
  Var emb = Linear(pooled, embed, "emb");
  if (config.use_batchnorm) emb = BatchNorm(emb, embed, "emb", mode, running, update);
  return emb;
}

Tensor Encode(const ModelState &model, const Tensor &frames, Mode mode) {
  VarMap embed = ad::Bind(model.embed, false);
  return EncodeGraph(ad::Constant(frames), model.config, embed, mode,
                     model.bn_running, nullptr)
      .value();
}

Var Classify(const Var &embeddings, const VarMap &classifier) {
  const Var &w = Get(classifier, "W");
  if (embeddings.value().rank() != 2 || w.value().rank() != 2 ||
      embeddings.shape()[1] != w.shape()[0])
    Fail(ErrorKind::kShape, "classify: embeddings ", ShapeString(embeddings.shape()),
         " do not match W ", ShapeString(w.shape()));
  return ad::MatMul(ad::L2Normalize(embeddings, 1), ad::L2Normalize(w, 0));
}

DiscriminatorOutput Discriminate(const Var &embeddings, const NetworkConfig &config,
                                 const VarMap &discrim) {
  if (embeddings.value().rank() != 2 ||
      embeddings.shape()[1] != config.embedding_dim)
    Fail(ErrorKind::kShape, "discriminate: expected [batch, ", config.embedding_dim,
         "], got ", ShapeString(embeddings.shape()));
  const std::size_t b = embeddings.shape()[0];
  Var h = embeddings;
  for (std::size_t i = 0; i < config.disc_widths.size(); ++i)
    h = ad::Elu(Linear(h, discrim, "fc" + std::to_string(i)));
  DiscriminatorOutput out;
  out.raw_score = ad::Reshape(Linear(h, discrim, "out"), {b});
  if (config.aux_head) out.aux_logits = Linear(h, discrim, "aux");
  return out;
}

namespace {

constexpr char kModelMagic[] = "ASEM";
constexpr std::uint32_t kModelVersion = 1;

void PutGroup(std::map<std::string, const Tensor *> &all, const TensorMap &group,
              const std::string &prefix) {
  for (const auto &[name, t] : group) all[prefix + name] = &t;
}

}  // namespace

std::string SerializeModel(const ModelState &model) {
  std::map<std::string, const Tensor *> all;
  PutGroup(all, model.classifier, "C/");
  PutGroup(all, model.discrim, "D/");
  PutGroup(all, model.embed, "E/");
  PutGroup(all, model.bn_running, "S/");
  std::string out(kModelMagic, 4);
  internal::PutU32(out, kModelVersion);
  internal::PutU32(out, static_cast<std::uint32_t>(all.size()));
  for (const auto &[name, t] : all) {
    internal::PutString(out, name);
    internal::PutU32(out, static_cast<std::uint32_t>(t->rank()));
    for (std::size_t e : t->shape())
      internal::PutU32(out, static_cast<std::uint32_t>(e));
    for (double v : t->data()) internal::PutF32(out, static_cast<float>(v));
  }
  internal::PutString(out, NetworkConfigToText(model.config));
  return out;
}

ModelState DeserializeModel(const std::string &bytes, const std::string &source) {
  internal::ByteReader r(bytes, source);
  if (r.Take(4, "magic") != std::string_view(kModelMagic, 4))
    r.Malformed("bad magic, expected ASEM");
  const std::uint32_t version = r.U32("version");
  if (version != kModelVersion)
    r.Malformed("unsupported version " + std::to_string(version));
  const std::uint32_t count = r.U32("record count");
  ModelState m;
  std::string prev;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.String("tensor name");
    if (i > 0 && name <= prev) r.Malformed("tensor names not in sorted order");
    prev = name;
    const std::uint32_t rank = r.U32("rank");
    if (rank > 8) r.Malformed("implausible rank");
    Shape shape;
    for (std::uint32_t k = 0; k < rank; ++k) {
      std::uint32_t e = r.U32("extent");
      if (e == 0) r.Malformed("zero extent");
      shape.push_back(e);
    }
    const std::size_t n = ShapeSize(shape);
    if (n > (bytes.size() - r.offset()) / 4) r.Malformed("payload truncated");
    std::vector<double> data(n);
    for (std::size_t k = 0; k < n; ++k) data[k] = r.F32("payload");
    Tensor t(shape, std::move(data));
    if (!t.AllFinite()) r.Malformed("non-finite value in " + name);
    TensorMap *group = nullptr;
    if (name.rfind("C/", 0) == 0) group = &m.classifier;
    else if (name.rfind("D/", 0) == 0) group = &m.discrim;
    else if (name.rfind("E/", 0) == 0) group = &m.embed;
    else if (name.rfind("S/", 0) == 0) group = &m.bn_running;
    else r.Malformed("unknown parameter group in " + name);
    (*group)[name.substr(2)] = std::move(t);
  }
  m.config = NetworkConfigFromText(r.String("config block"));
  if (!r.AtEnd()) r.Malformed("trailing bytes");
  // Shape check against a fresh model with the same config.
  ModelState ref = InitModel(m.config, 0);
  auto same_layout = [](const TensorMap &a, const TensorMap &b) {
    if (a.size() != b.size()) return false;
    for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib)
      if (ia->first != ib->first || ia->second.shape() != ib->second.shape())
        return false;
    return true;
  };
  if (!same_layout(m.embed, ref.embed) || !same_layout(m.classifier, ref.classifier) ||
      !same_layout(m.discrim, ref.discrim) || !same_layout(m.bn_running, ref.bn_running))
    Fail(ErrorKind::kData, source, ": parameters do not match the stored network config");
  return m;
}

void SaveModel(const ModelState &model, const std::string &path) {
  internal::WriteFileBytes(path, SerializeModel(model));
}

ModelState LoadModel(const std::string &path) {
  return DeserializeModel(internal::ReadFileBytes(path), path);
}

}  // namespace asem
