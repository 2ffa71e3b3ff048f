// Copyright 2026 The discogan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "discogan/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace discogan {
namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Split split) { return split == Split::kTrain ? "train" : "eval"; }

Split parse_split(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "eval") return Split::kEval;
  throw std::invalid_argument("unknown split '" + name + "'");
}

double scale_noise_for_snr(const AudioClip& clean, const AudioClip& noise, double target_snr) {
  const std::size_t n = std::min(clean.size(), noise.size());
  const double p_clean = mean_power(clean.view().first(n));
  const double p_noise = mean_power(noise.view().first(n));
  if (n == 0 || p_clean <= 0.0) throw std::invalid_argument("scale_noise_for_snr: silent clean signal");
  if (p_noise <= 0.0) throw std::invalid_argument("scale_noise_for_snr: silent noise signal");
  return std::sqrt(p_clean / (p_noise * std::pow(10.0, target_snr / 10.0)));
}

std::vector<double> convolve_truncated(std::span<const double> signal, std::span<const double> kernel,
                                       std::size_t length) {
  std::vector<double> out(length, 0.0);
  for (std::size_t n = 0; n < length; ++n) {
    double acc = 0.0;
    const std::size_t kmax = std::min(kernel.size(), n + 1);
    for (std::size_t k = 0; k < kmax; ++k) {
      const std::size_t i = n - k;
      if (i < signal.size()) acc += kernel[k] * signal[i];
    }
    out[n] = acc;
  }
  return out;
}

Mixture make_mixture(const MixtureSpec& spec, const AudioClip& clean, const AudioClip& noise,
                     const AudioClip* rir) {
  if (spec.duration <= 0.0) throw std::invalid_argument("make_mixture: duration must be positive");
  const auto n = static_cast<std::size_t>(std::llround(spec.duration * clean.sample_rate));
  if (clean.size() < n)
    throw std::invalid_argument("make_mixture: clean source '" + spec.clean_id + "' shorter than duration");
  if (noise.empty()) throw std::invalid_argument("make_mixture: empty noise source '" + spec.noise_id + "'");
  if (noise.sample_rate != clean.sample_rate || (rir && rir->sample_rate != clean.sample_rate))
    throw std::invalid_argument("make_mixture: sample rate mismatch between sources");

  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::size_t> clean_offset(0, clean.size() - n);
  const std::size_t c0 = clean_offset(rng);
  std::vector<double> dry(clean.samples.begin() + static_cast<std::ptrdiff_t>(c0),
                          clean.samples.begin() + static_cast<std::ptrdiff_t>(c0 + n));

  AudioClip noise_seg{std::vector<double>(n), clean.sample_rate};
  if (noise.size() >= n) {
    std::uniform_int_distribution<std::size_t> off(0, noise.size() - n);
    const std::size_t n0 = off(rng);
    std::copy_n(noise.samples.begin() + static_cast<std::ptrdiff_t>(n0), n, noise_seg.samples.begin());
  } else {
    std::uniform_int_distribution<std::size_t> off(0, noise.size() - 1);
    const std::size_t n0 = off(rng);
    for (std::size_t i = 0; i < n; ++i) noise_seg.samples[i] = noise.samples[(n0 + i) % noise.size()];
  }

  AudioClip speech{rir ? convolve_truncated(dry, rir->samples, n) : dry, clean.sample_rate};
  Mixture mix;
  mix.gain = scale_noise_for_snr(speech, noise_seg, spec.target_snr);
  mix.noisy.sample_rate = clean.sample_rate;
  mix.noisy.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) mix.noisy.samples[i] = speech.samples[i] + mix.gain * noise_seg.samples[i];
  mix.clean = spec.anechoic_target ? AudioClip{std::move(dry), clean.sample_rate} : std::move(speech);
  return mix;
}

std::string bucket_of_snr(double snr) {
  if (!(snr >= -20.0 && snr <= 0.0))
    throw std::out_of_range("bucket_of_snr: " + std::to_string(snr) + " dB outside [-20, 0]");
  if (snr < -15.0) return kEvalBuckets[0].label;
  if (snr < -10.0) return kEvalBuckets[1].label;
  if (snr < -5.0) return kEvalBuckets[2].label;
  return kEvalBuckets[3].label;
}

std::vector<std::string> list_wavs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::vector<std::string> ids;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav")
      ids.push_back(fs::relative(entry.path(), dir).generic_string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

DatasetManifest build_manifest(const fs::path& clean_dir, const fs::path& noise_dir,
                               const std::optional<fs::path>& rir_dir, const Recipe& recipe) {
  if (recipe.duration <= 0.0) throw std::invalid_argument("recipe: duration must be positive");
  if (recipe.snr_min > recipe.snr_max) throw std::invalid_argument("recipe: snr_min > snr_max");
  if (recipe.reverb_fraction < 0.0 || recipe.reverb_fraction > 1.0)
    throw std::invalid_argument("recipe: reverb_fraction outside [0, 1]");

  DatasetManifest manifest;
  manifest.split = recipe.split;
  const auto clean_ids = list_wavs(clean_dir);
  const auto noise_ids = list_wavs(noise_dir);
  if (clean_ids.empty()) throw std::runtime_error("no clean WAV files in " + clean_dir.string());
  if (noise_ids.empty()) throw std::runtime_error("no noise WAV files in " + noise_dir.string());

  const auto n_reverb =
      static_cast<std::size_t>(std::llround(recipe.reverb_fraction * static_cast<double>(recipe.count)));
  std::vector<std::string> rir_ids;
  if (n_reverb > 0) {
    if (!rir_dir) throw std::invalid_argument("recipe: reverb_fraction > 0 requires an RIR directory");
    rir_ids = list_wavs(*rir_dir);
    if (rir_ids.empty()) throw std::runtime_error("no RIR WAV files in " + rir_dir->string());
  }

  std::mt19937_64 rng(recipe.seed);
  std::vector<std::size_t> order(recipe.count);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> reverberant(recipe.count, false);
  for (std::size_t i = 0; i < n_reverb; ++i) reverberant[order[i]] = true;

  std::uniform_int_distribution<std::size_t> pick_clean(0, clean_ids.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_noise(0, noise_ids.size() - 1);
  std::uniform_real_distribution<double> pick_snr(recipe.snr_min, recipe.snr_max);
  for (std::size_t i = 0; i < recipe.count; ++i) {
    MixtureSpec spec;
    char id[32];
    std::snprintf(id, sizeof(id), "mix%06zu", i);
    spec.id = id;
    spec.clean_id = clean_ids[pick_clean(rng)];
    spec.noise_id = noise_ids[pick_noise(rng)];
    if (reverberant[i]) {
      std::uniform_int_distribution<std::size_t> pick_rir(0, rir_ids.size() - 1);
      spec.rir_id = rir_ids[pick_rir(rng)];
    }
    spec.target_snr = recipe.snr_min == recipe.snr_max ? recipe.snr_min : pick_snr(rng);
    spec.duration = recipe.duration;
    spec.seed = rng();
    spec.anechoic_target = recipe.anechoic_target;
    manifest.entries.push_back(std::move(spec));
  }
  return manifest;
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write manifest " + path.string());
  for (const auto& e : manifest.entries) {
    json rec = {{"id", e.id},
                {"split", to_string(manifest.split)},
                {"clean_id", e.clean_id},
                {"noise_id", e.noise_id},
                {"rir_id", e.rir_id ? json(*e.rir_id) : json(nullptr)},
                {"target_snr", e.target_snr},
                {"duration", e.duration},
                {"seed", e.seed},
                {"anechoic_target", e.anechoic_target}};
    os << rec.dump() << '\n';
  }
  if (!os) throw std::runtime_error("failed writing manifest " + path.string());
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read manifest " + path.string());
  DatasetManifest manifest;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto rec = json::parse(line);
      const Split split = parse_split(rec.at("split").get<std::string>());
      if (manifest.entries.empty()) {
        manifest.split = split;
      } else if (split != manifest.split) {
        throw std::runtime_error("mixed splits");
      }
      MixtureSpec e;
      e.id = rec.at("id").get<std::string>();
      e.clean_id = rec.at("clean_id").get<std::string>();
      e.noise_id = rec.at("noise_id").get<std::string>();
      if (!rec.at("rir_id").is_null()) e.rir_id = rec.at("rir_id").get<std::string>();
      e.target_snr = rec.at("target_snr").get<double>();
      e.duration = rec.at("duration").get<double>();
      e.seed = rec.at("seed").get<uint64_t>();
      e.anechoic_target = rec.value("anechoic_target", false);
      manifest.entries.push_back(std::move(e));
    } catch (const std::exception& ex) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return manifest;
}

fs::path noisy_path(const fs::path& audio_dir, const std::string& id) { return audio_dir / (id + "_noisy.wav"); }
fs::path clean_path(const fs::path& audio_dir, const std::string& id) { return audio_dir / (id + "_clean.wav"); }

void render_dataset(const DatasetManifest& manifest, const SourceDirs& sources, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::map<fs::path, AudioClip> cache;
  auto load = [&](const fs::path& p) -> const AudioClip& {
    auto it = cache.find(p);
    if (it == cache.end()) {
      AudioClip clip = read_wav(p);
      if (clip.sample_rate != kSampleRate)
        throw std::runtime_error(p.string() + ": sample rate " + std::to_string(clip.sample_rate) +
                                 " Hz, expected " + std::to_string(kSampleRate));
      it = cache.emplace(p, std::move(clip)).first;
    }
    return it->second;
  };
  for (const auto& spec : manifest.entries) {
    const AudioClip* rir = nullptr;
    if (spec.rir_id) {
      if (!sources.rir) throw std::runtime_error("entry " + spec.id + " needs an RIR directory");
      rir = &load(*sources.rir / *spec.rir_id);
    }
    const Mixture mix = make_mixture(spec, load(sources.clean / spec.clean_id),
                                     load(sources.noise / spec.noise_id), rir);
    write_wav(noisy_path(out_dir, spec.id), mix.noisy);
    write_wav(clean_path(out_dir, spec.id), mix.clean);
  }
}

}  // namespace discogan
