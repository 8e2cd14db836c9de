#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "support/helpers.hpp"
#include "support/synthetic_corpus.hpp"

namespace sw = stegowave;
namespace cli = stegowave::cli;
using sw::testing::temp_dir;

namespace {

sw::RunConfig small_run() {
  return sw::parse_config_text(
      "n_fft = 64\nhop = 32\nsegment_length = 1024\n"
      "width_divisor = 16\nhpf_filters = 6\nfc1 = 16\nfc2 = 8\n"
      "epochs = 1\nbatch_size = 2\nsteps_per_epoch = 2\nlearning_rate = 0.001\n"
      "n_stego = 6\ncnn_epochs = 1\nlinear_iterations = 20\n");
}

}  // namespace

TEST(RunConfig, TextRoundTrip) {
  auto c = small_run();
  sw::set_config_value(c, "lambda_b", "0.25");
  sw::set_config_value(c, "init", "HPF");
  sw::set_config_value(c, "noise_setting", "AN");
  sw::set_config_value(c, "channel_consistency", "true");
  const auto text = sw::config_text(c);
  const auto r = sw::parse_config_text(text);
  EXPECT_EQ(sw::config_text(r), text);
  EXPECT_EQ(r.train.lambda_b, 0.25);
  EXPECT_EQ(r.train.model.init, sw::InitSetting::hpf);
  EXPECT_EQ(r.train.noise_setting, sw::NoiseSetting::an);
  EXPECT_TRUE(r.train.channel_consistency);
  EXPECT_EQ(r.spectral, c.spectral);
}

TEST(RunConfig, DefaultsMatchReferenceSetup) {
  const sw::RunConfig c;
  EXPECT_EQ(c.spectral.n_fft, 512);
  EXPECT_EQ(c.spectral.hop, 220);
  EXPECT_EQ(c.spectral.sample_rate, 22050);
  EXPECT_EQ(c.train.lambda_a, 0.6);
  EXPECT_EQ(c.train.lambda_b, 0.8);
  EXPECT_EQ(c.train.lambda_c, 1.0);
  EXPECT_EQ(c.train.learning_rate, 1e-4);
  EXPECT_EQ(c.dataset.test_fraction, 0.25);
}

TEST(RunConfig, RejectsBadInput) {
  sw::RunConfig c;
  EXPECT_THROW(sw::set_config_value(c, "no_such_key", "1"), sw::ConfigError);
  EXPECT_THROW(sw::set_config_value(c, "epochs", "many"), sw::ConfigError);
  EXPECT_THROW(sw::set_config_value(c, "init", "XYZ"), sw::ConfigError);
  EXPECT_THROW(sw::parse_config_text("epochs 3\n"), sw::ConfigError);
  EXPECT_THROW(sw::parse_config_text("learning_rate = -1\n"), sw::ConfigError);
  EXPECT_THROW(sw::parse_config_text("test_fraction = 1.5\n"), sw::ConfigError);
  EXPECT_NO_THROW(sw::parse_config_text("# comment only\n\nepochs = 3  # trailing\n"));
  EXPECT_THROW(sw::load_config_file("/nonexistent/x.cfg"), sw::IoError);
}

TEST(Commands, EndToEndPipeline) {
  const auto dir = temp_dir();
  sw::testing::write_synthetic_corpus(dir / "audio", 6, 0.2, 7);
  const auto cfg = small_run();
  std::ostringstream log;

  const auto corpus = cli::cmd_prepare(cfg, {dir / "audio", dir / "m.tsv"}, log);
  EXPECT_EQ(corpus.size(), 24u);
  EXPECT_NE(log.str().find("items 24"), std::string::npos);

  cli::cmd_train(cfg, {dir / "m.tsv", dir / "model.ckpt", dir / "loss.csv", false}, log);
  std::ifstream csv(dir / "loss.csv");
  std::string header, row;
  std::getline(csv, header);
  EXPECT_EQ(header, sw::kLossCsvHeader);
  std::size_t rows = 0;
  while (std::getline(csv, row)) ++rows;
  EXPECT_EQ(rows, 2u);

  // Resuming with more epochs appends and continues.
  auto more = cfg;
  more.train.epochs = 2;
  cli::cmd_train(more, {dir / "m.tsv", dir / "model.ckpt", dir / "loss.csv", true}, log);
  std::ifstream csv2(dir / "loss.csv");
  rows = 0;
  while (std::getline(csv2, row)) ++rows;
  EXPECT_EQ(rows, 5u);
  EXPECT_EQ(sw::load_checkpoint(dir / "model.ckpt").epoch, 2u);

  const auto carrier = dir / "audio" / "utt_00000.wav";
  const auto secret = dir / "audio" / "utt_00001.wav";
  cli::EmbedOptions eo;
  eo.checkpoint = dir / "model.ckpt";
  eo.carrier = carrier;
  eo.secret = secret;
  eo.output = dir / "out" / "stego.wav";
  eo.format = sw::SampleFormat::float32;
  cli::cmd_embed(cfg, eo);
  const auto stego = sw::read_wav(eo.output);
  EXPECT_EQ(stego.length(), 1024u);
  EXPECT_EQ(stego.sample_rate, 22050);

  cli::ExtractOptions xo{dir / "model.ckpt", eo.output, dir / "out" / "revealed.wav", sw::SampleFormat::float32};
  cli::cmd_extract(cfg, xo);
  const auto revealed = sw::read_wav(xo.output);
  EXPECT_EQ(revealed.length(), 1024u);

  // The CLI path equals the library path.
  auto loaded = cli::load_model(dir / "model.ckpt", cfg);
  const auto c0 = sw::fix_length(sw::load_wav(carrier), 1024)[0];
  const auto s0 = sw::fix_length(sw::load_wav(secret), 1024)[0];
  const auto lib_stego = sw::embed(loaded.models, loaded.engine, c0, s0);
  for (std::size_t i = 0; i < 1024; ++i) ASSERT_NEAR(stego.samples[i], lib_stego.samples[i], 1e-6);
  const auto lib_rev = sw::extract(loaded.models, loaded.engine, stego);
  for (std::size_t i = 0; i < 1024; ++i) ASSERT_NEAR(revealed.samples[i], lib_rev.samples[i], 1e-6);

  eo.all_segments = true;
  eo.output = dir / "out" / "all.wav";
  const auto written = cli::cmd_embed(cfg, eo);
  EXPECT_EQ(written.size(), 4u);
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "all_seg3.wav"));

  const double p = cli::cmd_detect(cfg, {dir / "model.ckpt", eo.output.parent_path() / "stego.wav"});
  EXPECT_GE(p, 0.0);
  EXPECT_LE(p, 1.0);

  cli::EvaluateOptions ev;
  ev.checkpoint = dir / "model.ckpt";
  ev.manifest = dir / "m.tsv";
  ev.report_prefix = dir / "reports" / "fid";
  const auto fid = cli::cmd_evaluate(cfg, ev);
  ASSERT_TRUE(fid.metrics);
  EXPECT_TRUE(fid.metrics->valid());
  EXPECT_TRUE(std::filesystem::exists(dir / "reports" / "fid_pairs.csv"));
  ev.mode = cli::EvalMode::security;
  ev.report_prefix = dir / "reports" / "sec";
  const auto sec = cli::cmd_evaluate(cfg, ev);
  EXPECT_EQ(sec.detectors.size(), 2u);
  EXPECT_TRUE(std::filesystem::exists(dir / "reports" / "sec.csv"));

  cli::PlotOptions po;
  po.input = carrier;
  po.output = dir / "plots" / "c.ppm";
  cli::cmd_plot(cfg, po);
  EXPECT_TRUE(std::filesystem::exists(po.output));
}

TEST(Commands, ErrorCases) {
  const auto dir = temp_dir();
  const auto cfg = small_run();
  std::ostringstream log;
  EXPECT_THROW(cli::cmd_prepare(cfg, {dir / "missing", dir / "m.tsv"}, log), sw::IoError);

  sw::testing::write_synthetic_corpus(dir / "audio", 4, 0.2, 9);
  cli::cmd_prepare(cfg, {dir / "audio", dir / "m.tsv"}, log);
  cli::cmd_train(cfg, {dir / "m.tsv", dir / "model.ckpt", dir / "loss.csv", false}, log);

  // A checkpoint from one spectral configuration is refused under another.
  auto other = cfg;
  other.spectral.hop = 16;
  EXPECT_THROW(cli::load_model(dir / "model.ckpt", other), sw::ConfigError);

  sw::write_wav(dir / "short.wav", sw::testing::sine_waveform(500, 300, 22050));
  cli::EmbedOptions eo;
  eo.checkpoint = dir / "model.ckpt";
  eo.carrier = dir / "short.wav";
  eo.secret = dir / "audio" / "utt_00000.wav";
  eo.output = dir / "x.wav";
  EXPECT_THROW(cli::cmd_embed(cfg, eo), sw::Error);

  sw::write_wav(dir / "long.wav", sw::testing::sine_waveform(3000, 300, 22050));
  EXPECT_THROW(cli::cmd_extract(cfg, {dir / "model.ckpt", dir / "long.wav", dir / "r.wav"}), sw::Error);
}
