#include "tep/montage.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace tep::montage {

using ordered_json = nlohmann::ordered_json;

const std::vector<ChannelLabel>& canonical_channels() {
  static const std::vector<ChannelLabel> labels = {
      "Fp1", "Fp2",
      "AF7", "AF3", "AFz", "AF4", "AF8",
      "F7",  "F5",  "F3",  "F1",  "Fz",  "F2",  "F4",  "F6",  "F8",
      "FT9", "FT7", "FC5", "FC3", "FC1", "FCz", "FC2", "FC4", "FC6", "FT8", "FT10",
      "T7",  "C5",  "C3",  "C1",  "Cz",  "C2",  "C4",  "C6",  "T8",
      "TP7", "CP5", "CP3", "CP1", "CPz", "CP2", "CP4", "CP6", "TP8",
      "P7",  "P5",  "P3",  "P1",  "Pz",  "P2",  "P4",  "P6",  "P8",
      "PO7", "PO3", "POz", "PO4", "PO8",
      "O1",  "Oz",  "O2"};
  return labels;
}

const std::vector<ChannelLabel>& low_density_labels() {
  static const std::vector<ChannelLabel> labels = {
      "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "T7", "C3", "Cz",
      "C4",  "T8",  "P7", "P3", "Pz", "P4", "P8", "O1", "O2"};
  return labels;
}

const std::vector<ChannelLabel>& medium_density_labels() {
  static const std::vector<ChannelLabel> labels = [] {
    const auto& all = canonical_channels();
    std::vector<ChannelLabel> half;
    for (std::size_t i = 0; i < all.size(); i += 2) half.push_back(all[i]);
    return half;
  }();
  return labels;
}

namespace {

void require_subset(const std::vector<ChannelLabel>& wanted,
                    const std::vector<ChannelLabel>& available, const std::string& name) {
  const std::unordered_set<std::string> have(available.begin(), available.end());
  for (const auto& label : wanted)
    if (!have.count(label))
      throw std::runtime_error("montage \"" + name + "\": channel \"" + label +
                               "\" not present in the recording");
}

}  // namespace

Montage builtin_montage(Density density, const std::vector<ChannelLabel>& full_channel_list) {
  switch (density) {
    case Density::high:
      return {"high", full_channel_list};
    case Density::medium: {
      Montage m{"medium", medium_density_labels()};
      require_subset(m.labels, full_channel_list, m.name);
      return m;
    }
    case Density::low: {
      Montage m{"low", low_density_labels()};
      require_subset(m.labels, full_channel_list, m.name);
      return m;
    }
  }
  throw std::runtime_error("unknown montage density");
}

Density density_from_string(const std::string& s) {
  if (s == "low") return Density::low;
  if (s == "medium") return Density::medium;
  if (s == "high") return Density::high;
  throw std::runtime_error("unknown montage \"" + s + "\" (expected low|medium|high|@file)");
}

Montage load_montage(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path.string() + ": cannot open montage file");
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": montage parse error: " + e.what());
  }
  Montage m;
  try {
    m.name = j.at("name").get<std::string>();
    m.labels = j.at("labels").get<std::vector<std::string>>();
  } catch (const ordered_json::exception& e) {
    throw std::runtime_error(path.string() + ": montage field error: " + e.what());
  }
  if (m.labels.empty()) throw std::runtime_error(path.string() + ": montage has no labels");
  std::unordered_set<std::string> seen;
  for (const auto& label : m.labels)
    if (label.empty() || !seen.insert(label).second)
      throw std::runtime_error(path.string() + ": empty or duplicate montage label");
  return m;
}

void write_montage(const Montage& m, const std::filesystem::path& path) {
  ordered_json j;
  j["name"] = m.name;
  j["labels"] = m.labels;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << j.dump(2) << "\n";
}

EpochSet select_channels(const EpochSet& epochs, const Montage& m) {
  epochs.validate();
  if (m.labels.empty()) throw std::runtime_error("montage has no labels");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < epochs.channels.size(); ++c) index[epochs.channels[c]] = c;
  std::vector<std::size_t> picks;
  picks.reserve(m.labels.size());
  for (const auto& label : m.labels) {
    const auto it = index.find(label);
    if (it == index.end())
      throw std::runtime_error("montage \"" + m.name + "\": channel \"" + label +
                               "\" not present in the epochs");
    picks.push_back(it->second);
  }
  EpochSet out;
  out.channels = m.labels;
  out.fs_hz = epochs.fs_hz;
  out.t0_index = epochs.t0_index;
  out.n_trials = epochs.n_trials;
  out.n_samples = epochs.n_samples;
  out.data.resize(out.n_trials * picks.size() * out.n_samples);
  for (std::size_t t = 0; t < out.n_trials; ++t)
    for (std::size_t c = 0; c < picks.size(); ++c) {
      const float* src = epochs.trial_channel(t, picks[c]);
      std::copy(src, src + out.n_samples, out.trial_channel(t, c));
    }
  return out;
}

}  // namespace tep::montage
