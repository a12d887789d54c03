#include "tep/types.hpp"

#include <unordered_set>

namespace tep {

namespace {

void check_channels(const std::vector<ChannelLabel>& channels) {
  if (channels.empty()) throw std::runtime_error("no channels");
  std::unordered_set<std::string> seen;
  for (const auto& c : channels) {
    if (c.empty()) throw std::runtime_error("empty channel label");
    if (!seen.insert(c).second)
      throw std::runtime_error("duplicate channel label \"" + c + "\"");
  }
}

}  // namespace

void RawRecording::validate() const {
  check_channels(channels);
  if (fs_hz <= 0.0) throw std::runtime_error("fs_hz must be positive");
  if (data.size() != channels.size() * n_samples)
    throw std::runtime_error("recording payload length mismatch");
  std::uint64_t prev = 0;
  bool first = true;
  for (const auto p : pulse_samples) {
    if (p >= n_samples) throw std::runtime_error("pulse index out of range");
    if (!first && p <= prev) throw std::runtime_error("non-monotone pulse indices");
    prev = p;
    first = false;
  }
}

void EpochSet::validate() const {
  check_channels(channels);
  if (fs_hz <= 0.0) throw std::runtime_error("fs_hz must be positive");
  if (n_samples == 0) throw std::runtime_error("epochs need at least one sample");
  if (t0_index >= n_samples)
    throw std::runtime_error("t0_index out of range (t0_index " +
                             std::to_string(t0_index) + ", n_samples " +
                             std::to_string(n_samples) + ")");
  if (data.size() != n_trials * channels.size() * n_samples)
    throw std::runtime_error("epoch payload length mismatch");
}

}  // namespace tep
