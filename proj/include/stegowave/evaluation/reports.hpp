#pragma once

// Human-readable tables and CSV for evaluation results. Numbers are printed
// with fixed formats so identical runs produce identical bytes.

#include <cstdio>
#include <span>
#include <string>

#include "stegowave/evaluation/fidelity.hpp"
#include "stegowave/evaluation/security.hpp"

namespace stegowave {

namespace detail {

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline std::string snr_cell(const SnrValue& s) { return s.exact ? "inf" : fmt("%.9g", s.db); }

}  // namespace detail

inline std::string setting_label(const MetricsReport& r) { return to_string(r.init) + "/" + to_string(r.noise); }

inline std::string format_metrics_table(const MetricsReport& r) {
  std::string out;
  out += r.mode == "robustness" ? "Extraction under channel noise (" + detail::fmt("%g", r.channel_snr_db.value_or(0)) + " dB)\n"
                                : "Fidelity of carrier and secret\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-10s %14s %16s %14s %16s %8s\n", "Setting", "Carrier MSE", "Carrier SNR(dB)",
                "Secret MSE", "Secret SNR(dB)", "Items");
  out += line;
  std::snprintf(line, sizeof line, "%-10s %14.6g %16.4f %14.6g %16.4f %8zu\n", setting_label(r).c_str(), r.carrier_mse,
                r.carrier_snr_db, r.secret_mse, r.secret_snr_db, r.n_items);
  out += line;
  return out;
}

inline constexpr const char* kMetricsCsvHeader =
    "mode,channel_snr_db,init,noise,n_items,carrier_mse,secret_mse,carrier_snr_db,secret_snr_db";

inline std::string metrics_csv(const MetricsReport& r) {
  std::string out = std::string(kMetricsCsvHeader) + "\n";
  out += r.mode + "," + (r.channel_snr_db ? detail::fmt("%.9g", *r.channel_snr_db) : std::string("none")) + "," +
         to_string(r.init) + "," + to_string(r.noise) + "," + std::to_string(r.n_items) + "," +
         detail::fmt("%.9g", r.carrier_mse) + "," + detail::fmt("%.9g", r.secret_mse) + "," +
         detail::fmt("%.9g", r.carrier_snr_db) + "," + detail::fmt("%.9g", r.secret_snr_db) + "\n";
  return out;
}

inline std::string pairs_csv(const MetricsReport& r) {
  std::string out = "carrier_id,secret_id,carrier_mse,secret_mse,carrier_snr_db,secret_snr_db\n";
  for (const auto& p : r.pairs) {
    out += std::to_string(p.carrier_id) + "," + std::to_string(p.secret_id) + "," + detail::fmt("%.9g", p.carrier_mse) +
           "," + detail::fmt("%.9g", p.secret_mse) + "," + detail::snr_cell(p.carrier_snr) + "," +
           detail::snr_cell(p.secret_snr) + "\n";
  }
  return out;
}

inline std::string format_detector_table(std::span<const DetectorReport> reports) {
  std::string out = "Detection accuracy of independent steganalyzers\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-20s %-12s %10s %8s %8s\n", "Method", "Detector", "Accuracy", "Train", "Test");
  out += line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-20s %-12s %10.4f %8zu %8zu\n", r.method.c_str(), r.kind.c_str(), r.accuracy,
                  r.n_train, r.n_test);
    out += line;
  }
  return out;
}

inline std::string detector_csv(std::span<const DetectorReport> reports) {
  std::string out = "method,detector,accuracy,n_train,n_test\n";
  for (const auto& r : reports) {
    out += r.method + "," + r.kind + "," + detail::fmt("%.9g", r.accuracy) + "," + std::to_string(r.n_train) + "," +
           std::to_string(r.n_test) + "\n";
  }
  return out;
}

}  // namespace stegowave
