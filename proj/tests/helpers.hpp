#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "tep/types.hpp"

namespace test {

// scratch directory, removed on destruction
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("tepkit_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline tep::RawRecording make_recording(std::size_t n_channels, std::size_t n_samples,
                                        double fs_hz,
                                        std::vector<std::uint64_t> pulses = {}) {
  tep::RawRecording rec;
  for (std::size_t c = 0; c < n_channels; ++c) rec.channels.push_back("CH" + std::to_string(c));
  rec.fs_hz = fs_hz;
  rec.n_samples = n_samples;
  rec.pulse_samples = std::move(pulses);
  rec.data.resize(n_channels * n_samples, 0.0f);
  return rec;
}

inline tep::EpochSet make_epochs(std::size_t n_trials, std::size_t n_channels,
                                 std::size_t n_samples, double fs_hz, std::size_t t0) {
  tep::EpochSet e;
  for (std::size_t c = 0; c < n_channels; ++c) e.channels.push_back("CH" + std::to_string(c));
  e.fs_hz = fs_hz;
  e.t0_index = t0;
  e.n_trials = n_trials;
  e.n_samples = n_samples;
  e.data.resize(n_trials * n_channels * n_samples, 0.0f);
  return e;
}

}  // namespace test
