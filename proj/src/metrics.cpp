// Copyright 2026 The discogan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "discogan/metrics.hpp"

#include <torch/torch.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "discogan/dsp.hpp"

namespace discogan {
namespace {

void check_pair(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) throw std::invalid_argument(std::string(what) + ": length mismatch");
  if (a.empty()) throw std::invalid_argument(std::string(what) + ": empty signal");
}

/// 10 log10(num / den) limited to +-cap, with the limits applying to the
/// degenerate num = 0 or den = 0 cases as well.
double capped_ratio_db(double num, double den) {
  if (den <= 0.0) return kRatioCapDb;
  if (num <= 0.0) return -kRatioCapDb;
  return std::clamp(10.0 * std::log10(num / den), -kRatioCapDb, kRatioCapDb);
}

double clamp_seg(double db) { return std::clamp(db, kSegSnrFloorDb, kSegSnrCeilDb); }

bool is_active(double energy, std::size_t n) {
  if (n == 0 || energy <= 0.0) return false;
  return 10.0 * std::log10(energy / static_cast<double>(n)) > kActiveFrameDbfs;
}

double mean_or_nan(double sum, std::size_t n) {
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

}  // namespace

double snr(std::span<const double> reference, std::span<const double> estimate) {
  check_pair(reference, estimate, "snr");
  double sig = 0.0, err = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    sig += reference[i] * reference[i];
    const double e = reference[i] - estimate[i];
    err += e * e;
  }
  if (sig <= 0.0) throw std::invalid_argument("snr: silent reference");
  return capped_ratio_db(sig, err);
}

double delta_snr(std::span<const double> reference, std::span<const double> noisy,
                 std::span<const double> estimate) {
  return snr(reference, estimate) - snr(reference, noisy);
}

double si_sdr(std::span<const double> reference, std::span<const double> estimate) {
  check_pair(reference, estimate, "si_sdr");
  double ref_energy = 0.0, dot = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    ref_energy += reference[i] * reference[i];
    dot += reference[i] * estimate[i];
  }
  if (ref_energy <= 0.0) throw std::invalid_argument("si_sdr: silent reference");
  const double alpha = dot / ref_energy;
  double target = 0.0, residual = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double t = alpha * reference[i];
    const double e = estimate[i] - t;
    target += t * t;
    residual += e * e;
  }
  if (target <= 0.0) return -kRatioCapDb;
  if (residual < 1e-12 * target) return kRatioCapDb;
  return capped_ratio_db(target, residual);
}

double seg_snr(std::span<const double> reference, std::span<const double> estimate, std::size_t frame) {
  check_pair(reference, estimate, "seg_snr");
  if (frame == 0) throw std::invalid_argument("seg_snr: frame must be positive");
  const std::size_t frames = std::max<std::size_t>(1, reference.size() / frame);
  const std::size_t len = std::min(frame, reference.size());
  double sum = 0.0;
  std::size_t active = 0;
  for (std::size_t f = 0; f < frames; ++f) {
    double sig = 0.0, err = 0.0;
    for (std::size_t i = f * len; i < (f + 1) * len; ++i) {
      sig += reference[i] * reference[i];
      const double e = reference[i] - estimate[i];
      err += e * e;
    }
    if (!is_active(sig, len)) continue;
    sum += err > 0.0 ? clamp_seg(10.0 * std::log10(sig / err)) : kSegSnrCeilDb;
    ++active;
  }
  if (active == 0) throw std::invalid_argument("seg_snr: no active reference frames");
  return sum / static_cast<double>(active);
}

double fw_seg_snr_frame(std::span<const double> reference_bands, std::span<const double> estimate_bands,
                        double weight_exponent) {
  check_pair(reference_bands, estimate_bands, "fw_seg_snr_frame");
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < reference_bands.size(); ++j) {
    const double ref = reference_bands[j];
    const double diff = ref - estimate_bands[j];
    double band_db;
    if (diff == 0.0) {
      band_db = kSegSnrCeilDb;
    } else if (ref == 0.0) {
      band_db = kSegSnrFloorDb;
    } else {
      band_db = clamp_seg(10.0 * std::log10((ref * ref) / (diff * diff)));
    }
    const double w = std::pow(ref, weight_exponent);
    num += w * band_db;
    den += w;
  }
  if (den <= 0.0) throw std::invalid_argument("fw_seg_snr_frame: all band weights are zero");
  return num / den;
}

double fw_seg_snr(std::span<const double> reference, std::span<const double> estimate,
                  const FwSegSnrConfig& cfg) {
  check_pair(reference, estimate, "fw_seg_snr");
  if (cfg.frame == 0 || cfg.hop == 0 || cfg.fft_size < cfg.frame)
    throw std::invalid_argument("fw_seg_snr: invalid framing");
  const std::size_t n = reference.size();
  const std::size_t frames = n <= cfg.frame ? 1 : 1 + (n - cfg.frame) / cfg.hop;

  auto opts = torch::TensorOptions().dtype(torch::kFloat64);
  auto ref = torch::zeros({static_cast<int64_t>(frames), static_cast<int64_t>(cfg.frame)}, opts);
  auto est = torch::zeros_like(ref);
  auto ra = ref.accessor<double, 2>();
  auto ea = est.accessor<double, 2>();
  std::vector<bool> active(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double energy = 0.0;
    std::size_t len = 0;
    for (std::size_t i = 0; i < cfg.frame && f * cfg.hop + i < n; ++i, ++len) {
      const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                            static_cast<double>(cfg.frame));
      const double r = reference[f * cfg.hop + i];
      energy += r * r;
      ra[f][i] = w * r;
      ea[f][i] = w * estimate[f * cfg.hop + i];
    }
    active[f] = is_active(energy, len);
  }
  auto fb_rows = mel_filterbank(cfg.bands, static_cast<int64_t>(cfg.fft_size), cfg.sample_rate);
  auto fb = torch::empty({cfg.bands, static_cast<int64_t>(cfg.fft_size / 2 + 1)}, opts);
  auto fa = fb.accessor<double, 2>();
  for (int64_t j = 0; j < fb.size(0); ++j)
    for (int64_t k = 0; k < fb.size(1); ++k) fa[j][k] = fb_rows[j][k];
  const auto fft_n = static_cast<int64_t>(cfg.fft_size);
  auto ref_bands = torch::matmul(torch::abs(torch::fft::rfft(ref, fft_n)), fb.t()).contiguous();
  auto est_bands = torch::matmul(torch::abs(torch::fft::rfft(est, fft_n)), fb.t()).contiguous();

  double sum = 0.0;
  std::size_t count = 0;
  const auto bands = static_cast<std::size_t>(cfg.bands);
  for (std::size_t f = 0; f < frames; ++f) {
    if (!active[f]) continue;
    std::span<const double> rb(ref_bands.data_ptr<double>() + f * bands, bands);
    std::span<const double> eb(est_bands.data_ptr<double>() + f * bands, bands);
    sum += fw_seg_snr_frame(rb, eb, cfg.weight_exponent);
    ++count;
  }
  if (count == 0) throw std::invalid_argument("fw_seg_snr: no active reference frames");
  return sum / static_cast<double>(count);
}

std::size_t MetricReport::failures() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const MetricRow& r) { return r.error.has_value(); }));
}

const BucketSummary& MetricReport::bucket(const std::string& label) const {
  for (const auto& b : buckets)
    if (b.bucket == label) return b;
  throw std::out_of_range("no bucket " + label);
}

MetricRow score_clip(const std::string& clip_id, double target_snr, std::span<const double> clean,
                     std::span<const double> noisy, std::span<const double> enhanced) {
  MetricRow row;
  row.clip_id = clip_id;
  row.input_snr = target_snr;
  row.bucket = bucket_of_snr(target_snr);
  row.snr_in = snr(clean, noisy);
  row.snr_out = snr(clean, enhanced);
  row.delta_snr = row.snr_out - row.snr_in;
  row.si_sdr = si_sdr(clean, enhanced);
  row.delta_si_sdr = row.si_sdr - si_sdr(clean, noisy);
  row.seg_snr = seg_snr(clean, enhanced);
  row.fw_seg_snr = fw_seg_snr(clean, enhanced);
  row.delta_fw_seg_snr = row.fw_seg_snr - fw_seg_snr(clean, noisy);
  return row;
}

std::vector<BucketSummary> summarize(const std::vector<MetricRow>& rows) {
  std::vector<BucketSummary> out;
  for (const auto& b : kEvalBuckets) {
    BucketSummary s;
    s.bucket = b.label;
    for (const auto& r : rows) {
      if (r.error || r.bucket != s.bucket) continue;
      ++s.count;
      s.delta_snr += r.delta_snr;
      s.si_sdr += r.si_sdr;
      s.delta_si_sdr += r.delta_si_sdr;
      s.seg_snr += r.seg_snr;
      s.fw_seg_snr += r.fw_seg_snr;
      s.delta_fw_seg_snr += r.delta_fw_seg_snr;
    }
    s.delta_snr = mean_or_nan(s.delta_snr, s.count);
    s.si_sdr = mean_or_nan(s.si_sdr, s.count);
    s.delta_si_sdr = mean_or_nan(s.delta_si_sdr, s.count);
    s.seg_snr = mean_or_nan(s.seg_snr, s.count);
    s.fw_seg_snr = mean_or_nan(s.fw_seg_snr, s.count);
    s.delta_fw_seg_snr = mean_or_nan(s.delta_fw_seg_snr, s.count);
    out.push_back(s);
  }
  return out;
}

MetricReport evaluate_dataset(const DatasetManifest& manifest, const std::filesystem::path& audio_dir,
                              const EnhanceFn& enhance, const std::optional<std::filesystem::path>& out_path) {
  if (manifest.split != Split::kEval) throw std::invalid_argument("evaluate_dataset: manifest is not an eval split");
  MetricReport report;
  for (const auto& spec : manifest.entries) {
    try {
      const AudioClip clean = read_wav(clean_path(audio_dir, spec.id));
      const AudioClip noisy = read_wav(noisy_path(audio_dir, spec.id));
      const AudioClip enhanced = enhance(spec.id, noisy);
      if (enhanced.size() != noisy.size()) throw std::runtime_error("enhanced length differs from input");
      report.rows.push_back(score_clip(spec.id, spec.target_snr, clean.view(), noisy.view(), enhanced.view()));
    } catch (const std::exception& e) {
      MetricRow row;
      row.clip_id = spec.id;
      row.input_snr = spec.target_snr;
      row.error = e.what();
      report.rows.push_back(std::move(row));
    }
  }
  report.buckets = summarize(report.rows);
  if (out_path) write_report(*out_path, report);
  return report;
}

void write_report(const std::filesystem::path& path, const MetricReport& report) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write report " + path.string());
  char buf[512];
  os << "clip_id\ttarget_snr\tbucket\tsnr_in\tsnr_out\tdelta_snr\tsi_sdr\tdelta_si_sdr\tseg_snr\tfw_seg_snr"
        "\tdelta_fw_seg_snr\terror\n";
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof(buf), "%s\t%.17g\t%s\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t",
                  r.clip_id.c_str(), r.input_snr, r.bucket.empty() ? "-" : r.bucket.c_str(), r.snr_in,
                  r.snr_out, r.delta_snr, r.si_sdr, r.delta_si_sdr, r.seg_snr, r.fw_seg_snr,
                  r.delta_fw_seg_snr);
    os << buf << (r.error ? *r.error : std::string("-")) << '\n';
  }
  os << "\n# buckets\n";
  os << "bucket\tcount\tdelta_snr\tsi_sdr\tdelta_si_sdr\tseg_snr\tfw_seg_snr\tdelta_fw_seg_snr\n";
  for (const auto& b : report.buckets) {
    std::snprintf(buf, sizeof(buf), "%s\t%zu\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\n", b.bucket.c_str(),
                  b.count, b.delta_snr, b.si_sdr, b.delta_si_sdr, b.seg_snr, b.fw_seg_snr, b.delta_fw_seg_snr);
    os << buf;
  }
  if (!os) throw std::runtime_error("failed writing report " + path.string());
}

std::string format_bucket_table(const MetricReport& report) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-10s %5s %9s %9s %9s %9s %9s\n", "bucket", "n", "dSNR", "SI-SDR", "dSI-SDR",
                "SegSNR", "dFWSeg");
  os << buf;
  for (const auto& b : report.buckets) {
    std::snprintf(buf, sizeof(buf), "%-10s %5zu %9.2f %9.2f %9.2f %9.2f %9.2f\n", b.bucket.c_str(), b.count,
                  b.delta_snr, b.si_sdr, b.delta_si_sdr, b.seg_snr, b.delta_fw_seg_snr);
    os << buf;
  }
  if (const auto failed = report.failures(); failed > 0) os << failed << " clip(s) failed\n";
  return os.str();
}

}  // namespace discogan
