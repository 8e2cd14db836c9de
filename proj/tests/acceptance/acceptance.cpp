// Acceptance suite. One test per criterion; the listener prints a single
// "criterion N PASS|FAIL|SKIP" line for each after the run.
//
// Criteria 4, 6, 7 and 9 share one desk-scale training run (500 synthetic
// speech-like items, 10 epochs, batch 8, width divisor 8), performed once
// through the same command implementation the CLI uses.

#include <gtest/gtest.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "stegowave/stegowave.hpp"
#include "support/synthetic_corpus.hpp"

namespace sw = stegowave;
namespace cli = stegowave::cli;
namespace fs = std::filesystem;
using sw::nn::Mode;
using sw::nn::Tensor;

namespace {

std::map<int, std::string> g_notes;

void note(int criterion, const std::string& text) {
  auto& n = g_notes[criterion];
  n += (n.empty() ? "" : "; ") + text;
  std::printf("  [criterion %d] %s\n", criterion, text.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path tmp_root() { return fs::path(STEGOWAVE_TEST_TMP); }

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

/// Runs the stegowave binary; returns its exit status.
int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = quote(STEGOWAVE_CLI) + " " + args + " >> " + quote(log) + " 2>&1";
  return std::system(cmd.c_str());
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct EpochMeans {
  double encoder = 0, decoder = 0, steganalyzer = 0, carrier_mse = 0;
  std::size_t steps = 0;
};

/// Epoch means from a loss CSV (epoch,step,L_e,L_d,L_s,carrier_mse).
std::map<std::size_t, EpochMeans> epoch_means(const fs::path& csv) {
  std::ifstream is(csv);
  std::string line;
  std::getline(is, line);
  std::map<std::size_t, EpochMeans> out;
  while (std::getline(is, line)) {
    std::size_t epoch = 0, step = 0;
    double le = 0, ld = 0, ls = 0, cm = 0;
    if (std::sscanf(line.c_str(), "%zu,%zu,%lf,%lf,%lf,%lf", &epoch, &step, &le, &ld, &ls, &cm) != 6) continue;
    auto& m = out[epoch];
    m.encoder += le;
    m.decoder += ld;
    m.steganalyzer += ls;
    m.carrier_mse += cm;
    ++m.steps;
  }
  for (auto& [e, m] : out) {
    m.encoder /= m.steps;
    m.decoder /= m.steps;
    m.steganalyzer /= m.steps;
    m.carrier_mse /= m.steps;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shared desk-scale run.

constexpr std::size_t kDeskItems = 500;
constexpr std::size_t kSecurityItems = 1000;
constexpr double kClipSeconds = 2.0;  // one canonical segment per file

struct DeskRun {
  fs::path root, audio, manifest, manifest_security, checkpoint, loss_csv;
  sw::RunConfig cfg;
  double train_seconds = 0;
};

sw::RunConfig desk_config() {
  sw::RunConfig c;
  c.train.model.width_divisor = 8;
  c.train.epochs = 10;
  c.train.batch_size = 8;
  c.train.seed = 1;
  c.dataset.max_items = kDeskItems;
  return c;
}

fs::path synthetic_audio_dir() {
  const auto dir = tmp_root() / "audio";
  sw::testing::write_synthetic_corpus(dir, kSecurityItems, kClipSeconds, 2024);
  return dir;
}

const DeskRun& desk() {
  static const DeskRun run = [] {
    DeskRun r;
    r.root = tmp_root() / "desk";
    fs::remove_all(r.root);
    fs::create_directories(r.root);
    r.audio = synthetic_audio_dir();
    r.cfg = desk_config();
    r.manifest = r.root / "manifest.tsv";
    r.manifest_security = r.root / "manifest_security.tsv";
    r.checkpoint = r.root / "model.ckpt";
    r.loss_csv = r.root / "losses.csv";
    std::ostringstream log;
    cli::cmd_prepare(r.cfg, {r.audio, r.manifest}, log);
    auto sec = r.cfg;
    sec.dataset.max_items = kSecurityItems;
    cli::cmd_prepare(sec, {r.audio, r.manifest_security}, log);
    std::printf("  [desk] %s", log.str().c_str());
    std::fflush(stdout);
    const auto t0 = std::chrono::steady_clock::now();
    std::ostringstream train_log;
    cli::cmd_train(r.cfg, {r.manifest, r.checkpoint, r.loss_csv, false}, train_log);
    r.train_seconds = seconds_since(t0);
    std::printf("%s", train_log.str().c_str());
    std::printf("  [desk] training wall time %.1f s\n", r.train_seconds);
    std::fflush(stdout);
    return r;
  }();
  return run;
}

// ---------------------------------------------------------------------------
// Finite-difference support for criterion 2.

struct Probe {
  sw::nn::Param<double>* param;
  std::size_t index;
};

std::vector<Probe> sample_coordinates(const sw::nn::ParamList<double>& params, std::size_t count, sw::Rng& rng) {
  std::vector<std::pair<sw::nn::Param<double>*, std::size_t>> flat;
  for (auto* p : params)
    for (std::size_t i = 0; i < p->size(); ++i) flat.emplace_back(p, i);
  std::vector<Probe> out;
  for (std::size_t k = 0; k < count; ++k) {
    const auto& [p, i] = flat[rng.below(flat.size())];
    out.push_back({p, i});
  }
  return out;
}

Tensor<double> random_input(std::size_t n, std::size_t h, std::size_t w, std::uint64_t seed) {
  Tensor<double> t(n, 2, h, w);
  sw::Rng rng(seed);
  for (auto& v : t.values()) v = rng.normal();
  return t;
}

}  // namespace

// ---------------------------------------------------------------------------

TEST(Acceptance, Criterion1_StftRoundTrip) {
  const sw::StftEngine engine;
  const std::size_t margin = static_cast<std::size_t>(engine.config().n_fft);
  double worst = std::numeric_limits<double>::infinity();
  const auto t0 = std::chrono::steady_clock::now();
  for (std::uint64_t k = 0; k < 100; ++k) {
    sw::Rng rng(1000 + k);
    sw::Waveform w;
    w.samples.resize(sw::kSegmentLength);
    for (auto& v : w.samples) v = static_cast<float>(2.0 * rng.uniform() - 1.0);
    const auto r = engine.istft(engine.stft(w));
    double sig = 0, err = 0;
    for (std::size_t i = margin; i + margin < w.length(); ++i) {
      sig += double(w.samples[i]) * w.samples[i];
      err += (double(w.samples[i]) - r.samples[i]) * (double(w.samples[i]) - r.samples[i]);
    }
    worst = std::min(worst, 10 * std::log10(sig / err));
  }
  const double elapsed = seconds_since(t0);
  note(1, "worst interior SNR " + fmt("%.2f", worst) + " dB over 100 waveforms (need >= 40), " + fmt("%.2f", elapsed) +
              " s (need < 10)");
  EXPECT_GE(worst, 40.0);
  EXPECT_LT(elapsed, 10.0);
}

TEST(Acceptance, Criterion2_GradientCorrectness) {
  sw::ModelConfig toy;
  toy.width_divisor = 64;
  toy.hpf_filters = 4;
  toy.fc1 = 4;
  toy.fc2 = 4;
  toy.seed = 3;
  sw::ModelSet<double> m(toy);
  const std::size_t n_params = sw::parameter_count(m.all_params());
  ASSERT_LE(n_params, 1000u);

  sw::TrainConfig cfg;
  const auto carrier = random_input(2, 12, 10, 1), secret = random_input(2, 12, 10, 2);
  const Tensor<double> stego = m.encoder.forward(carrier, secret, Mode::train);

  for (auto* p : m.all_params()) p->zero_grad();
  sw::steganalyzer_pass(m, carrier, stego, true);
  sw::generator_pass(m, carrier, secret, cfg, true);

  sw::Rng rng(77);
  struct Group {
    const char* loss;
    std::vector<Probe> probes;
    std::function<double()> f;
  };
  std::vector<Group> groups;
  groups.push_back({"L_s", sample_coordinates(m.steganalyzer_params(), 34, rng),
                    [&] { return sw::steganalyzer_pass(m, carrier, stego, false); }});
  groups.push_back({"L_d", sample_coordinates(m.decoder_params(), 33, rng),
                    [&] { return sw::generator_pass(m, carrier, secret, cfg, false).decoder; }});
  groups.push_back({"L_e", sample_coordinates(m.encoder_params(), 33, rng),
                    [&] { return sw::generator_pass(m, carrier, secret, cfg, false).encoder; }});

  // Central differences at a step small enough to avoid ReLU kinks. A
  // gradient that is exactly zero (a bias feeding batch norm) has no defined
  // relative error, so the denominator is floored at the level the difference
  // quotient can resolve to 1e-4: its round-off bound divided by 1e-4.
  constexpr double h = 1e-6, tol = 1e-4;
  constexpr double eps = std::numeric_limits<double>::epsilon();
  double worst = 0;
  std::size_t checked = 0, failed = 0, unresolved = 0;
  for (auto& g : groups) {
    for (const auto& pr : g.probes) {
      double& x = pr.param->value[pr.index];
      const double x0 = x;
      x = x0 + h;
      const double up = g.f();
      x = x0 - h;
      const double down = g.f();
      x = x0;
      const double numeric = (up - down) / (2 * h);
      const double analytic = pr.param->grad[pr.index];
      const double roundoff = 4 * eps * (std::abs(up) + std::abs(down)) / (2 * h);
      const double floor = roundoff / tol;
      if (std::max(std::abs(analytic), std::abs(numeric)) < floor) ++unresolved;
      const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
      const double rel = std::abs(analytic - numeric) / scale;
      worst = std::max(worst, rel);
      ++checked;
      if (rel > tol) {
        ++failed;
        ADD_FAILURE() << g.loss << " " << pr.param->name << "[" << pr.index << "] analytic " << analytic << " numeric "
                      << numeric << " rel " << rel;
      }
    }
  }
  note(2, std::to_string(checked) + " coordinates on a " + std::to_string(n_params) + "-parameter model, worst relative error " +
              fmt("%.2e", worst) + " (need <= 1e-4), " + std::to_string(failed) + " failures, " + std::to_string(unresolved) +
              " below the round-off floor");
  EXPECT_EQ(checked, 100u);
}

TEST(Acceptance, Criterion3_SrmKernelProperties) {
  for (auto variant : {sw::K3Variant::corrected}) {
    const auto k = sw::build_srm_kernels(variant);
    for (float c : {0.0f, 0.1f, -3.7f, 1234.5f, 1e-30f, 0.3333333f}) {
      const std::vector<float> plane(12 * 9, c);
      std::size_t r = 0, cols = 0;
      for (double v : sw::apply_kernel(std::span(plane), 12, 9, k.k3_taps, k.k3_divisor, r, cols)) ASSERT_EQ(v, 0.0) << "K3 " << c;
      for (double v : sw::apply_kernel(std::span(plane), 12, 9, k.k5_taps, k.k5_divisor, r, cols)) ASSERT_EQ(v, 0.0) << "K5 " << c;
    }
  }
  // The misprinted variant does not annihilate constants, so the check has teeth.
  const auto printed = sw::build_srm_kernels(sw::K3Variant::printed);
  const std::vector<float> ones(9 * 9, 1.0f);
  std::size_t r = 0, c = 0;
  EXPECT_NE(sw::apply_kernel(std::span(ones), 9, 9, printed.k3_taps, printed.k3_divisor, r, c)[0], 0.0);

  // channels x kernels x directions x (2T+1)^order
  const std::size_t expected = 2 * 2 * 2 * (5 * 5 * 5 * 5);
  sw::Spectrogram s(257, 147);
  sw::Rng rng(4);
  for (auto& v : s.data) v = static_cast<float>(rng.normal());
  const auto f = sw::srm_features(s);
  note(3, "constant-input K3/K5 residuals exactly zero; feature dimension " + std::to_string(f.size()) + " (expected " +
              std::to_string(expected) + ")");
  EXPECT_EQ(f.size(), expected);
  EXPECT_EQ(sw::SrmFeatureConfig{}.dimension(), expected);
}

TEST(Acceptance, Criterion4_DeskScaleTraining) {
  const auto& run = desk();
  const auto means = epoch_means(run.loss_csv);
  ASSERT_EQ(means.size(), 10u);
  for (const auto& [e, m] : means) {
    std::printf("  [criterion 4] epoch %2zu  L_e %.5f  L_d %.5f  L_s %.5f  carrier_mse %.5f\n", e, m.encoder, m.decoder,
                m.steganalyzer, m.carrier_mse);
  }
  const auto& first = means.at(1);
  const auto& last = means.at(10);
  note(4, "L_e " + fmt("%.4f", first.encoder) + " -> " + fmt("%.4f", last.encoder) + " (need decrease)");
  note(4, "carrier MSE ratio " + fmt("%.3f", last.carrier_mse / first.carrier_mse) + " (need < 0.50)");
  note(4, "secret MSE ratio " + fmt("%.3f", last.decoder / first.decoder) + " (need < 0.75)");
  note(4, "training time " + fmt("%.0f", run.train_seconds) + " s (need < 1800)");
  EXPECT_LT(last.encoder, first.encoder);
  EXPECT_LT(last.carrier_mse, 0.5 * first.carrier_mse);
  EXPECT_LT(last.decoder, 0.75 * first.decoder);
  EXPECT_LT(run.train_seconds, 1800.0);
}

TEST(Acceptance, Criterion5_FullProtocolFidelity) {
  const char* dir = std::getenv("STEGOWAVE_FULL_CORPUS");
  if (dir == nullptr || *dir == '\0') {
    note(5, "optional long run not requested (set STEGOWAVE_FULL_CORPUS to a speech WAV directory)");
    GTEST_SKIP() << "STEGOWAVE_FULL_CORPUS not set";
  }
  sw::RunConfig cfg;
  cfg.train.epochs = 75;
  if (const char* w = std::getenv("STEGOWAVE_FULL_WIDTH_DIVISOR")) cfg.train.model.width_divisor = std::stoul(w);
  const auto root = tmp_root() / "full";
  fs::create_directories(root);
  std::ostringstream log;
  cli::cmd_prepare(cfg, {dir, root / "manifest.tsv"}, log);
  cli::cmd_train(cfg, {root / "manifest.tsv", root / "model.ckpt", root / "losses.csv", fs::exists(root / "model.ckpt")}, log);
  cli::EvaluateOptions ev;
  ev.checkpoint = root / "model.ckpt";
  ev.manifest = root / "manifest.tsv";
  ev.report_prefix = root / "fidelity";
  const auto r = cli::cmd_evaluate(cfg, ev);
  note(5, "carrier MSE " + fmt("%.3g", r.metrics->carrier_mse) + " (need <= 1e-3), secret MSE " +
              fmt("%.3g", r.metrics->secret_mse) + " (need <= 4e-3)");
  EXPECT_LE(r.metrics->carrier_mse, 1e-3);
  EXPECT_LE(r.metrics->secret_mse, 4e-3);
}

TEST(Acceptance, Criterion6_RobustnessConsistency) {
  const auto& run = desk();
  auto m = cli::load_model(run.checkpoint, run.cfg);
  ASSERT_EQ(m.config.train.noise_setting, sw::NoiseSetting::nor);
  const auto corpus = sw::load_corpus(run.manifest, run.cfg.spectral);
  const auto clean = sw::evaluate_fidelity(m.models, m.engine, corpus, run.cfg.eval);
  const auto near_clean = sw::evaluate_robustness(m.models, m.engine, corpus, 200.0, run.cfg.eval);
  const auto noisy = sw::evaluate_robustness(m.models, m.engine, corpus, 60.0, run.cfg.eval);
  const double d_csnr = std::abs(near_clean.carrier_snr_db - clean.carrier_snr_db);
  const double d_ssnr = std::abs(near_clean.secret_snr_db - clean.secret_snr_db);
  const double d_cmse = std::abs(near_clean.carrier_mse - clean.carrier_mse);
  const double d_smse = std::abs(near_clean.secret_mse - clean.secret_mse);
  note(6, "200 dB vs noiseless over " + std::to_string(clean.n_items) + " pairs: |dSNR| " + fmt("%.2e", std::max(d_csnr, d_ssnr)) +
              " dB, |dMSE| " + fmt("%.2e", std::max(d_cmse, d_smse)));
  note(6, "secret MSE noiseless " + fmt("%.6g", clean.secret_mse) + ", at 60 dB " + fmt("%.6g", noisy.secret_mse));
  EXPECT_LE(d_csnr, 0.1);
  EXPECT_LE(d_ssnr, 0.1);
  EXPECT_LE(d_cmse, 1e-6);
  EXPECT_LE(d_smse, 1e-6);
  EXPECT_GT(noisy.secret_mse, clean.secret_mse);
}

TEST(Acceptance, Criterion7_SecurityPipelineSanity) {
  const auto& run = desk();
  auto m = cli::load_model(run.checkpoint, run.cfg);
  const auto corpus = sw::load_corpus(run.manifest_security, run.cfg.spectral);
  sw::SecurityConfig sc = run.cfg.security;
  sc.n_stego = kSecurityItems;

  sc.shuffle_labels = true;
  const auto control = sw::security_eval(m.models, m.engine, corpus, sc, "shuffled");
  sc.shuffle_labels = false;
  const auto real = sw::security_eval(m.models, m.engine, corpus, sc, "stegowave");
  std::printf("%s", sw::format_detector_table(control).c_str());
  std::printf("%s", sw::format_detector_table(real).c_str());
  ASSERT_EQ(control.size(), 2u);
  ASSERT_EQ(real.size(), 2u);
  double best = 0;
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_GE(control[i].n_test, 1000u);
    note(7, control[i].kind + " shuffled " + fmt("%.4f", control[i].accuracy) + " (need 0.50 +/- 0.05), true labels " +
                fmt("%.4f", real[i].accuracy));
    EXPECT_NEAR(control[i].accuracy, 0.5, 0.05) << control[i].kind;
    best = std::max(best, real[i].accuracy);
  }
  note(7, "best true-label detector " + fmt("%.4f", best) + " (need >= 0.60)");
  EXPECT_GE(best, 0.60);
}

TEST(Acceptance, Criterion8_Determinism) {
  const auto root = tmp_root() / "determinism";
  fs::remove_all(root);
  const auto audio = root / "audio";
  sw::testing::write_synthetic_corpus(audio, 40, kClipSeconds, 77);
  const std::string common = "--set width_divisor=8 ";
  auto pipeline = [&](const std::string& name, int seed) {
    const auto out = root / name;
    fs::create_directories(out);
    const auto log = out / "log.txt";
    const std::string g = "--out " + quote(out) + " --seed " + std::to_string(seed) + " " + common;
    EXPECT_EQ(run_cli(g + "prepare " + quote(audio), log), 0);
    EXPECT_EQ(run_cli(g + "train --manifest " + quote(out / "manifest.tsv") + " --epochs 2 --batch-size 8", log), 0);
    EXPECT_EQ(run_cli(g + "evaluate --checkpoint " + quote(out / "model.ckpt") + " --manifest " +
                          quote(out / "manifest.tsv") + " --mode fidelity --report report",
                      log),
              0);
    return out;
  };
  const auto a = pipeline("a", 5), b = pipeline("b", 5), c = pipeline("c", 6);
  std::size_t identical = 0;
  const std::vector<std::string> files{"manifest.tsv", "losses.csv", "report.txt", "report.csv", "report_pairs.csv", "model.ckpt"};
  for (const auto& f : files) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    const bool same = slurp(a / f) == slurp(b / f);
    EXPECT_TRUE(same) << f;
    identical += same;
  }
  const auto rows = epoch_means(a / "losses.csv");
  EXPECT_EQ(rows.size(), 2u);
  const bool seed_matters = slurp(a / "losses.csv") != slurp(c / "losses.csv");
  note(8, std::to_string(identical) + "/" + std::to_string(files.size()) +
              " artifacts byte-identical across two seeded runs (loss CSV, reports, manifest, checkpoint)");
  note(8, std::string("a different seed changes the loss CSV: ") + (seed_matters ? "yes" : "no"));
  EXPECT_TRUE(seed_matters);
}

TEST(Acceptance, Criterion9_EmbedExtractSelfConsistency) {
  const auto& run = desk();
  auto m = cli::load_model(run.checkpoint, run.cfg);
  const auto corpus = sw::load_corpus(run.manifest, run.cfg.spectral);
  sw::EvalConfig ec = run.cfg.eval;
  ec.max_pairs = 50;
  const auto report = sw::evaluate_fidelity(m.models, m.engine, corpus, ec);
  ASSERT_EQ(report.pairs.size(), 50u);

  const auto dir = tmp_root() / "selfconsistency";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto log = dir / "log.txt";
  double worst = 0, sum_cli = 0, sum_mem = 0;
  for (std::size_t k = 0; k < report.pairs.size(); ++k) {
    const auto& p = report.pairs[k];
    const auto& carrier = corpus.items[p.carrier_id];
    const auto& secret = corpus.items[p.secret_id];
    // Each file holds exactly one segment, so the CLI sees the same audio.
    ASSERT_EQ(carrier.segment, 0u);
    ASSERT_EQ(secret.segment, 0u);
    const auto stego = dir / ("stego_" + std::to_string(k) + ".wav");
    const auto revealed = dir / ("revealed_" + std::to_string(k) + ".wav");
    const std::string ck = "--checkpoint " + quote(run.checkpoint);
    ASSERT_EQ(run_cli("embed " + ck + " --carrier " + quote(carrier.source) + " --secret " + quote(secret.source) +
                          " --output " + quote(stego),
                      log),
              0);
    ASSERT_EQ(run_cli("extract " + ck + " --stego " + quote(stego) + " --output " + quote(revealed), log), 0);
    const auto rev = sw::read_wav(revealed);
    const double cli_snr = sw::snr_db(corpus.waveforms[p.secret_id], rev).db;
    const double mem_snr = p.secret_snr.db;
    worst = std::max(worst, std::abs(cli_snr - mem_snr));
    sum_cli += cli_snr;
    sum_mem += mem_snr;
    EXPECT_NEAR(cli_snr, mem_snr, 1.0) << "pair " << k;
  }
  note(9, "50 pairs, worst |CLI - in-memory| secret SNR " + fmt("%.4f", worst) + " dB (need <= 1), mean CLI " +
              fmt("%.3f", sum_cli / 50) + " dB vs in-memory " + fmt("%.3f", sum_mem / 50) + " dB");
}

// ---------------------------------------------------------------------------

namespace {

class CriterionListener : public ::testing::EmptyTestEventListener {
 public:
  void OnTestEnd(const ::testing::TestInfo& info) override {
    int n = 0;
    if (std::sscanf(info.name(), "Criterion%d", &n) != 1) return;
    const auto* r = info.result();
    status_[n] = r->Skipped() ? "SKIP" : (r->Passed() ? "PASS" : "FAIL");
  }

  void print() const {
    std::printf("\n==== acceptance criteria ====\n");
    for (int n = 1; n <= 9; ++n) {
      const auto it = status_.find(n);
      const std::string s = it == status_.end() ? "NOT RUN" : it->second;
      const auto nt = g_notes.find(n);
      std::printf("criterion %d %s%s%s\n", n, s.c_str(), nt == g_notes.end() ? "" : " - ",
                  nt == g_notes.end() ? "" : nt->second.c_str());
    }
    std::fflush(stdout);
  }

 private:
  std::map<int, std::string> status_;
};

}  // namespace

int main(int argc, char** argv) {
  ::testing::InitGoogleTest(&argc, argv);
  auto* listener = new CriterionListener;
  ::testing::UnitTest::GetInstance()->listeners().Append(listener);
  const int rc = RUN_ALL_TESTS();
  listener->print();
  return rc;
}
