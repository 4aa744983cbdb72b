// src/cli.cc

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

#include "asem/cli.h"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>

#include "asem/experiment.h"
#include "asem/format.h"

namespace asem {

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage:
      return kExitUsage;
    case ErrorKind::kNumeric:
      return kExitNumeric;
    case ErrorKind::kData:
    case ErrorKind::kShape:
    case ErrorKind::kState:
      break;
  }
  return kExitData;
}

namespace {

namespace fs = std::filesystem;

// File names inside a data directory written by gen-data.
constexpr const char *kTrainSource = "train-source.asec";
constexpr const char *kTrainTarget = "train-target.asec";
constexpr const char *kValid = "valid.asec";
constexpr const char *kValidTrials = "valid.trials";
constexpr const char *kTestSource = "test-source.asec";
constexpr const char *kTestTarget = "test-target.asec";
constexpr const char *kSourceTrials = "test-source.trials";
constexpr const char *kTargetTrials = "test-target.trials";
constexpr const char *kPooledTrials = "test-pooled.trials";
constexpr const char *kProbeSource = "probe-source.asec";
constexpr const char *kProbeTarget = "probe-target.asec";

// Settings shared by the commands that read a run config.
struct ConfigArgs {
  std::string path;
  std::optional<std::uint64_t> seed;

  void Add(CLI::App *cmd) {
    cmd->add_option("--config", path,
                    "JSON run config; omitted keys take the built-in defaults");
    cmd->add_option("--seed", seed, "Overrides the config seed (default 1)");
  }

  RunConfig Load() const {
    RunConfig config;
    if (!path.empty()) config = RunConfigFromJson(ReadTextFile(path), path);
    if (seed) config.seed = *seed;
    config.Resolve();
    config.Validate();
    return config;
  }
};

std::string Join(const fs::path &dir, const char *name) {
  return (dir / name).string();
}

void MakeOutputDir(const std::string &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) Fail(ErrorKind::kData, "cannot create directory ", dir, ": ", ec.message());
}

ExperimentData LoadData(const std::string &dir) {
  ExperimentData data;
  data.source = ReadCorpus(Join(dir, kTrainSource));
  data.target = ReadCorpus(Join(dir, kTrainTarget));
  data.validation.corpus = ReadCorpus(Join(dir, kValid));
  data.validation.trials =
      TrialsFromText(ReadTextFile(Join(dir, kValidTrials)), Join(dir, kValidTrials));
  data.test_source = ReadCorpus(Join(dir, kTestSource));
  data.test_target = ReadCorpus(Join(dir, kTestTarget));
  data.source_trials =
      TrialsFromText(ReadTextFile(Join(dir, kSourceTrials)), Join(dir, kSourceTrials));
  data.target_trials =
      TrialsFromText(ReadTextFile(Join(dir, kTargetTrials)), Join(dir, kTargetTrials));
  data.probe_source = ReadCorpus(Join(dir, kProbeSource));
  data.probe_target = ReadCorpus(Join(dir, kProbeTarget));
  return data;
}

TrialList ReadTrials(const std::string &path) {
  return TrialsFromText(ReadTextFile(path), path);
}

ScoreSet ReadScores(const std::string &path) {
  return ScoresFromText(ReadTextFile(path), path);
}

std::string FormatEer(double eer) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", eer);
  return buf;
}

// Splits "name=value"; both parts must be non-empty.
std::pair<std::string, std::string> NameValue(const std::string &arg,
                                              const char *flag) {
  const std::size_t eq = arg.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size())
    Fail(ErrorKind::kUsage, flag, " expects NAME=VALUE, got \"", arg, "\"");
  return {arg.substr(0, eq), arg.substr(eq + 1)};
}

void GenData(const ConfigArgs &cfg, const std::string &out_dir, std::ostream &out) {
  const RunConfig config = cfg.Load();
  const ExperimentData data = BuildExperimentData(config.synth);
  MakeOutputDir(out_dir);
  const fs::path dir(out_dir);
  WriteTextFile(Join(dir, "config.json"), RunConfigToJson(config));
  WriteCorpus(data.source, Join(dir, kTrainSource));
  WriteCorpus(data.target, Join(dir, kTrainTarget));
  WriteCorpus(data.validation.corpus, Join(dir, kValid));
  WriteTextFile(Join(dir, kValidTrials), TrialsToText(data.validation.trials));
  WriteCorpus(data.test_source, Join(dir, kTestSource));
  WriteCorpus(data.test_target, Join(dir, kTestTarget));
  WriteTextFile(Join(dir, kSourceTrials), TrialsToText(data.source_trials));
  WriteTextFile(Join(dir, kTargetTrials), TrialsToText(data.target_trials));
  WriteTextFile(Join(dir, kPooledTrials), TrialsToText(PooledTrials(data)));
  WriteCorpus(data.probe_source, Join(dir, kProbeSource));
  WriteCorpus(data.probe_target, Join(dir, kProbeTarget));
  out << "wrote " << data.source.size() << " source and " << data.target.size()
      << " target training recordings to " << out_dir << "\n";
}

void PretrainCommand(const ConfigArgs &cfg, const std::string &data_dir,
                     const std::string &out_dir, std::ostream &out) {
  const RunConfig config = cfg.Load();
  const Corpus source = ReadCorpus(Join(data_dir, kTrainSource));
  ModelState model = InitModel(config.network, config.seed);
  const TrainHistory history = Pretrain(model, source, config.trainer);
  MakeOutputDir(out_dir);
  const fs::path dir(out_dir);
  WriteTextFile(Join(dir, "config.json"), RunConfigToJson(config));
  SaveModel(model, Join(dir, "model.asem"));
  WriteTextFile(Join(dir, "history.txt"), TrainHistoryToText(history));
  out << "pretrained " << history.steps.size() << " steps";
  if (!history.steps.empty()) out << ", final task loss " << history.steps.back().task;
  out << "\n";
}

void TrainCommand(const ConfigArgs &cfg, const std::string &data_dir,
                  const std::string &init, const std::string &variant, bool aux,
                  const std::string &out_dir, std::ostream &out) {
  RunConfig config = cfg.Load();
  config.trainer.variant = {ParseGanKind(variant), aux};
  const ModelState model = LoadModel(init);
  const ExperimentData data = LoadData(data_dir);
  const TrainResult result =
      Train(model, data.source, data.target, data.validation, config.trainer);
  MakeOutputDir(out_dir);
  const fs::path dir(out_dir);
  WriteTextFile(Join(dir, "config.json"), RunConfigToJson(config));
  WriteTextFile(Join(dir, "variant.txt"), VariantName(config.trainer.variant) + "\n");
  SaveModel(result.best, Join(dir, "model.asem"));
  WriteTextFile(Join(dir, "history.txt"), TrainHistoryToText(result.history));
  out << VariantName(config.trainer.variant) << ": " << result.history.epochs.size()
      << " epochs, best epoch " << result.best_epoch << ", validation EER "
      << FormatEer(result.best_val_eer) << "\n";
}

void ExtractCommand(const std::string &model_path,
                    const std::vector<std::string> &corpora,
                    const std::string &out_path) {
  const ModelState model = LoadModel(model_path);
  Corpus all;
  for (const std::string &path : corpora) {
    Corpus c = ReadCorpus(path);
    all.recordings.insert(all.recordings.end(), c.recordings.begin(),
                          c.recordings.end());
  }
  all.Validate();
  WriteTextFile(out_path, EmbeddingsToText(Extract(all, model)));
}

void ScoreCommand(const std::string &trials_path, const std::string &emb_path,
                  const std::string &out_path) {
  const TrialList trials = ReadTrials(trials_path);
  const EmbeddingTable table = EmbeddingsFromText(ReadTextFile(emb_path), emb_path);
  WriteTextFile(out_path, ScoresToText(ScoreTrials(trials, table)));
}

void FuseCommand(const std::vector<std::string> &inputs, const std::string &out_path) {
  std::vector<ScoreSet> sets;
  for (const std::string &path : inputs) sets.push_back(ReadScores(path));
  WriteTextFile(out_path, ScoresToText(Fuse(sets)));
}

double ProbeCommand(const ConfigArgs &cfg, const std::string &source_path,
                    const std::string &target_path) {
  const RunConfig config = cfg.Load();
  const EmbeddingTable source =
      EmbeddingsFromText(ReadTextFile(source_path), source_path);
  const EmbeddingTable target =
      EmbeddingsFromText(ReadTextFile(target_path), target_path);
  auto matrix = [](const EmbeddingTable &t) {
    std::vector<std::string> ids;
    for (const auto &entry : t.entries()) ids.push_back(entry.first);
    return EmbeddingMatrix(t, ids);
  };
  return DomainProbe(matrix(source), matrix(target), config.probe);
}

struct ReportRow {
  std::string name;
  ScoreSet conditions[3];
  double eer[3] = {0.0, 0.0, 0.0};
  std::optional<double> probe;
};

void ReportCommand(const ConfigArgs &cfg, const std::string &data_dir,
                   const std::vector<std::string> &models,
                   const std::vector<std::string> &fusions,
                   const std::string &out_dir, std::ostream &out) {
  static const char *kConditions[3] = {"source", "target", "pooled"};
  const RunConfig config = cfg.Load();
  if (models.empty()) Fail(ErrorKind::kUsage, "report needs at least one --model");
  const ExperimentData data = LoadData(data_dir);
  const TrialList trials[3] = {data.source_trials, data.target_trials,
                               PooledTrials(data)};
  std::vector<ReportRow> rows;
  std::map<std::string, std::size_t> by_name;
  auto add_row = [&](ReportRow row) {
    if (!by_name.emplace(row.name, rows.size()).second)
      Fail(ErrorKind::kUsage, "duplicate report entry name \"", row.name, "\"");
    for (int c = 0; c < 3; ++c) row.eer[c] = ComputeEer(row.conditions[c], trials[c]);
    rows.push_back(std::move(row));
  };
  // Parse every entry before the (slow) scoring starts.
  std::vector<std::pair<std::string, ModelState>> loaded;
  for (const std::string &arg : models) {
    auto [name, path] = NameValue(arg, "--model");
    loaded.emplace_back(name, LoadModel(path));
  }
  std::vector<std::pair<std::string, std::vector<std::string>>> fuse_specs;
  for (const std::string &arg : fusions) {
    auto [name, list] = NameValue(arg, "--fuse");
    std::vector<std::string> members;
    for (std::string_view m : SplitOn(list, ',')) members.emplace_back(m);
    fuse_specs.emplace_back(name, members);
  }
  const Corpus test = PooledTestCorpus(data);
  for (const auto &[name, model] : loaded) {
    // Through the embedding-file format, so that the scores equal those of
    // extract followed by score.
    const EmbeddingTable table =
        EmbeddingsFromText(EmbeddingsToText(Extract(test, model)), name);
    ReportRow row;
    row.name = name;
    for (int c = 0; c < 3; ++c) row.conditions[c] = ScoreTrials(trials[c], table);
    row.probe = EmbeddingProbe(model, data.probe_source, data.probe_target, config.probe);
    add_row(std::move(row));
  }
  for (const auto &[name, members] : fuse_specs) {
    ReportRow row;
    row.name = name;
    for (int c = 0; c < 3; ++c) {
      std::vector<ScoreSet> sets;
      for (const std::string &m : members) {
        auto it = by_name.find(m);
        if (it == by_name.end())
          Fail(ErrorKind::kUsage, "--fuse ", name, ": unknown entry \"", m, "\"");
        sets.push_back(rows[it->second].conditions[c]);
      }
      row.conditions[c] = Fuse(sets);
    }
    add_row(std::move(row));
  }

  std::string text = "model\tclassifier\tsource_eer\ttarget_eer\tpooled_eer\tprobe\n";
  std::string csv = "model,classifier,source_eer,target_eer,pooled_eer,probe\n";
  for (const ReportRow &row : rows) {
    const std::string probe = row.probe ? FormatEer(*row.probe) : "-";
    text += row.name + "\tCOSINE";
    csv += row.name + ",COSINE";
    for (double e : row.eer) {
      text += "\t" + FormatEer(e);
      csv += "," + FormatEer(e);
    }
    text += "\t" + probe + "\n";
    csv += "," + (row.probe ? probe : std::string()) + "\n";
  }
  MakeOutputDir(out_dir);
  const fs::path dir(out_dir);
  WriteTextFile(Join(dir, "config.json"), RunConfigToJson(config));
  for (const ReportRow &row : rows)
    for (int c = 0; c < 3; ++c)
      WriteTextFile((dir / (row.name + "." + kConditions[c] + ".scores")).string(),
                    ScoresToText(row.conditions[c]));
  WriteTextFile(Join(dir, "report.txt"), text);
  WriteTextFile(Join(dir, "report.csv"), csv);
  out << text;
}

}  // namespace

int RunCli(const std::vector<std::string> &args, std::ostream &out,
           std::ostream &err) {
  CLI::App app{"Adversarial speaker-embedding toolkit on synthetic domain-shift data",
               "asem"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");

  ConfigArgs cfg;
  std::string data_dir, out_dir, out_path, init, model_path, trials_path, emb_path,
      scores_path, variant, source_path, target_path;
  std::vector<std::string> corpora, inputs, models, fusions;
  bool aux = false;

  CLI::App *gen = app.add_subcommand("gen-data", "Generate the synthetic corpora and trial lists");
  cfg.Add(gen);
  gen->add_option("--out", out_dir, "Output data directory")->required();

  CLI::App *pre = app.add_subcommand("pretrain", "Pretrain encoder and classifier on source data");
  cfg.Add(pre);
  pre->add_option("--data", data_dir, "Data directory from gen-data")->required();
  pre->add_option("--out", out_dir, "Output run directory")->required();

  CLI::App *train = app.add_subcommand("train", "Adversarial training from a pretrained model");
  cfg.Add(train);
  train->add_option("--data", data_dir, "Data directory from gen-data")->required();
  train->add_option("--init", init, "Pretrained checkpoint (.asem)")->required();
  train->add_option("--variant", variant, "GAN variant")
      ->required()
      ->check(CLI::IsMember({"sgan", "lsgan", "relgan", "gradrev"}));
  train->add_flag("--aux", aux, "Add the auxiliary speaker classifier loss");
  train->add_option("--out", out_dir, "Output run directory")->required();

  CLI::App *ext = app.add_subcommand("extract", "Write L2-normalized embeddings");
  ext->add_option("--model", model_path, "Checkpoint (.asem)")->required();
  ext->add_option("--corpus", corpora, "Corpus file (.asec); repeatable")->required();
  ext->add_option("--out", out_path, "Output embedding file")->required();

  CLI::App *score = app.add_subcommand("score", "Cosine-score a trial list");
  score->add_option("--trials", trials_path, "Trial file")->required();
  score->add_option("--embeddings", emb_path, "Embedding file")->required();
  score->add_option("--out", out_path, "Output score file")->required();

  CLI::App *eer = app.add_subcommand("eer", "Print the equal error rate of a score file");
  eer->add_option("--trials", trials_path, "Trial file with target labels")->required();
  eer->add_option("--scores", scores_path, "Score file")->required();

  CLI::App *fuse = app.add_subcommand("fuse", "Average aligned score files");
  fuse->add_option("inputs", inputs, "Score files")->required();
  fuse->add_option("--out", out_path, "Output score file")->required();

  CLI::App *probe = app.add_subcommand("probe", "Domain-probe accuracy on two embedding files");
  cfg.Add(probe);
  probe->add_option("--source", source_path, "Source-domain embedding file")->required();
  probe->add_option("--target", target_path, "Target-domain embedding file")->required();

  CLI::App *report = app.add_subcommand("report", "EER table per condition plus probe accuracy");
  cfg.Add(report);
  report->add_option("--data", data_dir, "Data directory from gen-data")->required();
  report->add_option("--model", models, "NAME=checkpoint; repeatable")->required();
  report->add_option("--fuse", fusions, "NAME=A,B,... fused from earlier entries; repeatable");
  report->add_option("--out", out_dir, "Output directory")->required();

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  CLI::App *cmd = app.get_subcommands().front();
  try {
    if (cmd == gen) {
      GenData(cfg, out_dir, out);
    } else if (cmd == pre) {
      PretrainCommand(cfg, data_dir, out_dir, out);
    } else if (cmd == train) {
      TrainCommand(cfg, data_dir, init, variant, aux, out_dir, out);
    } else if (cmd == ext) {
      ExtractCommand(model_path, corpora, out_path);
    } else if (cmd == score) {
      ScoreCommand(trials_path, emb_path, out_path);
    } else if (cmd == eer) {
      out << FormatEer(ComputeEer(ReadScores(scores_path), ReadTrials(trials_path)))
          << "\n";
    } else if (cmd == fuse) {
      FuseCommand(inputs, out_path);
    } else if (cmd == probe) {
      out << FormatEer(ProbeCommand(cfg, source_path, target_path)) << "\n";
    } else if (cmd == report) {
      ReportCommand(cfg, data_dir, models, fusions, out_dir, out);
    }
  } catch (const Error &e) {
    err << "asem " << cmd->get_name() << ": " << e.what() << "\n";
    return ExitCodeFor(e.kind());
  } catch (const std::exception &e) {
    err << "asem " << cmd->get_name() << ": " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace asem
