// stegowave: hide speech inside speech with a learned encoder/decoder pair.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>

#include "stegowave/cli/commands.hpp"

namespace {

using namespace stegowave;
using namespace stegowave::cli;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::vector<std::string> set;  // extra key=value overrides
};

RunConfig resolve(const Globals& g) {
  RunConfig cfg;
  if (!g.config.empty()) cfg = load_config_file(g.config);
  for (const auto& kv : g.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, stegowave::detail::trim(kv.substr(0, eq)), stegowave::detail::trim(kv.substr(eq + 1)));
  }
  if (g.seed) {
    cfg.train.seed = *g.seed;
    cfg.dataset.split_seed = *g.seed;
    cfg.eval.seed = *g.seed;
    cfg.security.seed = *g.seed;
  }
  validate(cfg);
  return cfg;
}

std::filesystem::path under(const Globals& g, const std::string& p, const std::string& fallback) {
  const std::filesystem::path path = p.empty() ? fallback : p;
  return path.is_absolute() ? path : std::filesystem::path(g.out) / path;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stegowave: audio-in-audio steganography with an adversarially trained encoder/decoder"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "key = value run configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "seed for splitting, training and evaluation");
  app.add_option("--out", g.out, "directory for relative output paths")->capture_default_str();
  app.add_option("--set", g.set, "override a config key (key=value), repeatable");

  // prepare
  auto* prepare = app.add_subcommand("prepare", "segment a WAV directory and write a split manifest");
  PrepareOptions prep;
  std::string prep_manifest;
  std::optional<std::size_t> max_items;
  prepare->add_option("data_dir", prep.data_dir, "directory of .wav files")->required();
  prepare->add_option("--manifest", prep_manifest, "manifest path (default <out>/manifest.tsv)");
  prepare->add_option("--max-items", max_items, "cap on the number of segments");

  // train
  auto* train = app.add_subcommand("train", "train encoder, decoder and steganalyzer");
  TrainOptions tr;
  std::string tr_ckpt, tr_csv;
  std::optional<std::size_t> epochs, batch, steps, width;
  std::optional<double> lr, la, lb, lc;
  std::string setting, noise;
  bool channel = false;
  train->add_option("--manifest", tr.manifest, "corpus manifest")->required()->check(CLI::ExistingFile);
  train->add_option("--checkpoint", tr_ckpt, "checkpoint path (default <out>/model.ckpt)");
  train->add_option("--loss-csv", tr_csv, "loss history (default <out>/losses.csv)");
  train->add_flag("--resume", tr.resume, "continue from an existing checkpoint");
  train->add_option("--epochs", epochs);
  train->add_option("--batch-size", batch);
  train->add_option("--steps-per-epoch", steps);
  train->add_option("--learning-rate", lr);
  train->add_option("--lambda-a", la);
  train->add_option("--lambda-b", lb);
  train->add_option("--lambda-c", lc);
  train->add_option("--width-divisor", width);
  train->add_option("--setting", setting, "steganalyzer first-layer init")->check(CLI::IsMember({"RAN", "HPF"}));
  train->add_option("--noise", noise, "carrier noise during training")->check(CLI::IsMember({"NOR", "AN"}));
  train->add_flag("--channel-consistency", channel, "decoder sees re-analyzed stego audio during training");

  // embed
  auto* embed = app.add_subcommand("embed", "hide a secret WAV inside a carrier WAV");
  EmbedOptions em;
  std::string em_dump, em_format = "pcm16";
  embed->add_option("--checkpoint", em.checkpoint)->required()->check(CLI::ExistingFile);
  embed->add_option("--carrier", em.carrier)->required();
  embed->add_option("--secret", em.secret)->required();
  embed->add_option("--output", em.output)->required();
  embed->add_option("--segment", em.carrier_segment, "carrier segment index");
  embed->add_option("--secret-segment", em.secret_segment, "secret segment index");
  embed->add_flag("--all-segments", em.all_segments, "embed every carrier segment into <output>_segK");
  embed->add_option("--dump-spectrogram", em_dump, "also save the stego spectrogram tensor");
  embed->add_option("--format", em_format)->check(CLI::IsMember({"pcm16", "float32"}));

  // extract
  auto* extract = app.add_subcommand("extract", "recover the secret from stego audio");
  ExtractOptions ex;
  std::string ex_format = "pcm16";
  extract->add_option("--checkpoint", ex.checkpoint)->required()->check(CLI::ExistingFile);
  extract->add_option("--stego", ex.stego)->required();
  extract->add_option("--output", ex.output)->required();
  extract->add_option("--format", ex_format)->check(CLI::IsMember({"pcm16", "float32"}));

  // detect
  auto* detect = app.add_subcommand("detect", "print the steganalyzer's stego probability");
  DetectOptions de;
  detect->add_option("--checkpoint", de.checkpoint)->required()->check(CLI::ExistingFile);
  detect->add_option("audio", de.audio)->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "fidelity, robustness or security report");
  EvaluateOptions ev;
  std::string ev_mode = "fidelity", ev_report;
  evaluate->add_option("--checkpoint", ev.checkpoint)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--manifest", ev.manifest)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--mode", ev_mode)->check(CLI::IsMember({"fidelity", "robustness", "security"}));
  evaluate->add_option("--snr-db", ev.snr_db, "channel SNR for robustness mode")->capture_default_str();
  evaluate->add_option("--n-stego", ev.n_stego, "stego items for security mode");
  evaluate->add_flag("--shuffle-labels", ev.shuffle_labels, "sanity control: permute detector training labels");
  evaluate->add_option("--report", ev_report, "report path prefix (default <out>/report_<mode>)");

  // plot-spectrogram
  auto* plot = app.add_subcommand("plot-spectrogram", "write a time-frequency power heat map (PPM)");
  PlotOptions pl;
  plot->add_option("input", pl.input, "WAV file or saved spectrogram")->required();
  plot->add_option("--output", pl.output)->required();
  plot->add_option("--segment", pl.segment);
  plot->add_option("--floor-db", pl.plot.floor_db)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = resolve(g);
    if (*prepare) {
      if (max_items) cfg.dataset.max_items = *max_items;
      prep.manifest = under(g, prep_manifest, "manifest.tsv");
      cmd_prepare(cfg, prep, std::cout);
    } else if (*train) {
      if (epochs) cfg.train.epochs = *epochs;
      if (batch) cfg.train.batch_size = *batch;
      if (steps) cfg.train.steps_per_epoch = *steps;
      if (lr) cfg.train.learning_rate = *lr;
      if (la) cfg.train.lambda_a = *la;
      if (lb) cfg.train.lambda_b = *lb;
      if (lc) cfg.train.lambda_c = *lc;
      if (width) cfg.train.model.width_divisor = *width;
      if (!setting.empty()) set_config_value(cfg, "init", setting);
      if (!noise.empty()) set_config_value(cfg, "noise_setting", noise);
      if (channel) cfg.train.channel_consistency = true;
      validate(cfg);
      tr.checkpoint = under(g, tr_ckpt, "model.ckpt");
      tr.loss_csv = under(g, tr_csv, "losses.csv");
      cmd_train(cfg, tr, std::cout);
    } else if (*embed) {
      em.format = em_format == "float32" ? SampleFormat::float32 : SampleFormat::pcm16;
      if (!em_dump.empty()) em.dump_spectrogram = em_dump;
      for (const auto& p : cmd_embed(cfg, em)) std::cout << p.string() << "\n";
    } else if (*extract) {
      ex.format = ex_format == "float32" ? SampleFormat::float32 : SampleFormat::pcm16;
      cmd_extract(cfg, ex);
    } else if (*detect) {
      std::printf("%.6f\n", cmd_detect(cfg, de));
    } else if (*evaluate) {
      static const std::map<std::string, EvalMode> modes{
          {"fidelity", EvalMode::fidelity}, {"robustness", EvalMode::robustness}, {"security", EvalMode::security}};
      ev.mode = modes.at(ev_mode);
      ev.report_prefix = under(g, ev_report, "report_" + ev_mode);
      std::cout << cmd_evaluate(cfg, ev).table;
    } else if (*plot) {
      cmd_plot(cfg, pl);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
