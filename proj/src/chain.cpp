// Copyright 2026 The discogan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "discogan/chain.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "discogan/dsp.hpp"

namespace discogan {

std::string to_string(StageKind s) {
  switch (s) {
    case StageKind::kIdentity: return "identity";
    case StageKind::kDisc: return "disc";
    case StageKind::kGan: return "gan";
    case StageKind::kGanNoCond: return "gan_nocond";
  }
  return "identity";
}

StageKind parse_stage(const std::string& name) {
  if (name == "identity") return StageKind::kIdentity;
  if (name == "disc") return StageKind::kDisc;
  if (name == "gan") return StageKind::kGan;
  if (name == "gan_nocond") return StageKind::kGanNoCond;
  throw std::invalid_argument("unknown chain stage '" + name + "'");
}

ChainSpec ChainSpec::parse(const std::string& text) {
  ChainSpec spec;
  std::string token;
  for (char c : text + ",") {
    if (c == ',' || c == '+') {
      if (token.empty()) throw std::invalid_argument("empty stage in chain '" + text + "'");
      spec.stages.push_back(parse_stage(token));
      token.clear();
    } else if (c != ' ') {
      token += c;
    }
  }
  return spec;
}

std::string ChainSpec::name() const {
  std::string out;
  for (auto s : stages) out += (out.empty() ? "" : ",") + to_string(s);
  return out;
}

bool ChainSpec::uses(StageKind s) const {
  for (auto x : stages)
    if (x == s) return true;
  return false;
}

namespace {

const std::filesystem::path& require(const std::optional<std::filesystem::path>& p, const char* what) {
  if (!p) throw std::invalid_argument(std::string("chain needs a ") + what + " checkpoint");
  return *p;
}

}  // namespace

Enhancer::Enhancer(ChainSpec spec, const ChainCheckpoints& ckpts) : spec_(std::move(spec)) {
  if (spec_.stages.empty()) throw std::invalid_argument("chain has no stages");
  if (spec_.uses(StageKind::kDisc) || spec_.uses(StageKind::kGan))
    disc_.emplace(load_disc_model(require(ckpts.disc, "disc")));
  if (spec_.uses(StageKind::kGan)) {
    std::string fp;
    gan_ = load_generator(require(ckpts.gan, "gan"), &fp);
    if (!gan_->conditioned()) throw std::invalid_argument("gan checkpoint holds an unconditioned generator");
    if (fp != disc_->fingerprint())
      throw std::invalid_argument("gan checkpoint was trained against a different disc model");
    if (gan_->config().disc_latent_dim != disc_->config().latent_dim())
      throw std::invalid_argument("gan checkpoint latent width does not match the disc model");
    gan_->eval();
  }
  if (spec_.uses(StageKind::kGanNoCond)) {
    gan_nocond_ = load_generator(require(ckpts.gan_nocond, "gan_nocond"));
    if (gan_nocond_->conditioned())
      throw std::invalid_argument("gan_nocond checkpoint holds a conditioned generator");
    gan_nocond_->eval();
  }
}

torch::Tensor Enhancer::enhance(const torch::Tensor& noisy) const {
  torch::NoGradGuard no_grad;
  auto x = noisy;
  for (auto s : spec_.stages) {
    switch (s) {
      case StageKind::kIdentity: break;
      case StageKind::kDisc: x = disc_->forward(x).enhanced; break;
      case StageKind::kGan: x = gan_.ptr()->enhance(x, &*disc_); break;
      case StageKind::kGanNoCond: x = gan_nocond_.ptr()->enhance(x, nullptr); break;
    }
  }
  return x.reshape(noisy.sizes());
}

AudioClip Enhancer::enhance(const AudioClip& noisy) const {
  return to_clip(enhance(to_tensor(noisy)), noisy.sample_rate);
}

const std::vector<AblationEntry>& ablation_entries() {
  static const std::vector<AblationEntry> entries = {
      {"nocogan", ChainSpec::parse("gan_nocond")},
      {"disc+nocogan", ChainSpec::parse("disc,gan_nocond")},
      {"gan", ChainSpec::parse("gan")},
      {"disc+gan", ChainSpec::parse("disc,gan")},
      {"gan+disc", ChainSpec::parse("gan,disc")},
  };
  return entries;
}

AblationResult run_ablation(const DatasetManifest& manifest, const std::filesystem::path& audio_dir,
                            const ChainCheckpoints& ckpts, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  AblationResult result;
  for (const auto& entry : ablation_entries()) {
    std::optional<Enhancer> enhancer;
    try {
      enhancer.emplace(entry.chain, ckpts);
    } catch (const std::exception& e) {
      result.missing.push_back(entry.name + ": " + e.what());
      continue;
    }
    auto fn = [&](const std::string&, const AudioClip& noisy) { return enhancer->enhance(noisy); };
    result.reports.emplace_back(entry.name, evaluate_dataset(manifest, audio_dir, fn, out_dir / (entry.name + ".tsv")));
  }
  std::ofstream out(out_dir / "ablation.tsv");
  if (!out) throw std::runtime_error("cannot write " + (out_dir / "ablation.tsv").string());
  out << format_ablation_table(result);
  return result;
}

std::string format_ablation_table(const AblationResult& result) {
  std::ostringstream os;
  os << "config";
  for (const auto& b : kEvalBuckets)
    for (const char* m : {"delta_snr", "delta_si_sdr", "delta_fw_seg_snr"}) os << '\t' << m << '[' << b.label << ']';
  os << '\n';
  char buf[64];
  for (const auto& [name, report] : result.reports) {
    os << name;
    for (const auto& b : report.buckets) {
      for (double v : {b.delta_snr, b.delta_si_sdr, b.delta_fw_seg_snr}) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << '\t' << buf;
      }
    }
    os << '\n';
  }
  for (const auto& m : result.missing) os << "# missing " << m << '\n';
  return os.str();
}

}  // namespace discogan
