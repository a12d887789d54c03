#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "tep/montage.hpp"
#include "tep/rng.hpp"

using namespace tep;
using namespace tep::montage;

TEST_CASE("the canonical cap has 62 unique labels") {
  const auto& all = canonical_channels();
  CHECK(all.size() == 62);
  CHECK(std::set<std::string>(all.begin(), all.end()).size() == 62);
}

TEST_CASE("high density keeps all available electrodes") {
  const Montage m = builtin_montage(Density::high, canonical_channels());
  CHECK(m.labels.size() == 62);
  CHECK(m.labels == canonical_channels());
  CHECK(m.name == "high");
}

TEST_CASE("low density is exactly the 10-20 set") {
  const Montage m = builtin_montage(Density::low, canonical_channels());
  // the published 19 10-20 scalp positions (modern T7/T8/P7/P8 naming)
  const std::vector<std::string> standard = {"Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8",
                                             "T7",  "C3",  "Cz", "C4", "T8", "P7", "P3",
                                             "Pz",  "P4",  "P8", "O1", "O2"};
  CHECK(m.labels == standard);
  const std::set<std::string> cap(canonical_channels().begin(), canonical_channels().end());
  for (const auto& label : m.labels) CHECK(cap.count(label) == 1);
}

TEST_CASE("medium density is half of the cap") {
  const Montage m = builtin_montage(Density::medium, canonical_channels());
  CHECK(m.labels.size() == 31);
  const std::set<std::string> cap(canonical_channels().begin(), canonical_channels().end());
  for (const auto& label : m.labels) CHECK(cap.count(label) == 1);
}

TEST_CASE("builtin montages reject caps missing a required label") {
  std::vector<ChannelLabel> missing = canonical_channels();
  missing.erase(std::find(missing.begin(), missing.end(), "Cz"));
  CHECK_THROWS_WITH_AS(builtin_montage(Density::low, missing), doctest::Contains("Cz"),
                       std::runtime_error);
}

TEST_CASE("shipped montage files match the builtin label sets") {
  const std::filesystem::path base = std::filesystem::path(TEPKIT_SOURCE_DIR) / "data" /
                                     "montages";
  CHECK(load_montage(base / "low_19.json").labels == low_density_labels());
  CHECK(load_montage(base / "medium_31.json").labels == medium_density_labels());
  CHECK(load_montage(base / "high_62.json").labels == canonical_channels());
}

namespace {

EpochSet tagged_epochs() {
  // sample value encodes (channel, sample) so selections are traceable
  auto e = test::make_epochs(2, 62, 10, 1000.0, 5);
  e.channels = canonical_channels();
  for (std::size_t t = 0; t < e.n_trials; ++t)
    for (std::size_t c = 0; c < 62; ++c)
      for (std::size_t i = 0; i < 10; ++i)
        e.trial_channel(t, c)[i] = static_cast<float>(1000 * (t + 1) + 10 * c + i);
  return e;
}

}  // namespace

TEST_CASE("selecting high returns the identical tensor") {
  const auto e = tagged_epochs();
  const auto out = select_channels(e, builtin_montage(Density::high, e.channels));
  CHECK(out.data == e.data);
  CHECK(out.channels == e.channels);
}

TEST_CASE("selecting a single label picks exactly that row") {
  const auto e = tagged_epochs();
  const auto out = select_channels(e, Montage{"cz_only", {"Cz"}});
  CHECK(out.n_channels() == 1);
  const auto cz_index = static_cast<std::size_t>(
      std::find(e.channels.begin(), e.channels.end(), "Cz") - e.channels.begin());
  for (std::size_t t = 0; t < e.n_trials; ++t)
    for (std::size_t i = 0; i < e.n_samples; ++i)
      CHECK(out.trial_channel(t, 0)[i] == e.trial_channel(t, cz_index)[i]);
}

TEST_CASE("selecting an absent label names it") {
  const auto e = tagged_epochs();
  CHECK_THROWS_WITH_AS(select_channels(e, Montage{"bad", {"Qz"}}), doctest::Contains("Qz"),
                       std::runtime_error);
}

TEST_CASE("subset selection composes") {
  const auto e = tagged_epochs();
  const auto high = builtin_montage(Density::high, e.channels);
  const auto low = builtin_montage(Density::low, e.channels);
  const auto direct = select_channels(e, low);
  const auto via_high = select_channels(select_channels(e, high), low);
  CHECK(direct.data == via_high.data);
  CHECK(direct.channels == via_high.channels);
}

TEST_CASE("montage selection preserves sample values") {
  const auto e = tagged_epochs();
  const auto out = select_channels(e, builtin_montage(Density::medium, e.channels));
  for (std::size_t t = 0; t < out.n_trials; ++t)
    for (std::size_t c = 0; c < out.n_channels(); ++c) {
      const auto orig = static_cast<std::size_t>(
          std::find(e.channels.begin(), e.channels.end(), out.channels[c]) -
          e.channels.begin());
      for (std::size_t i = 0; i < out.n_samples; ++i)
        CHECK(out.trial_channel(t, c)[i] == e.trial_channel(t, orig)[i]);
    }
}

TEST_CASE("montage files round-trip") {
  test::TempDir dir("montage");
  const Montage m{"custom", {"Cz", "Fz", "Pz"}};
  write_montage(m, dir.path() / "m.json");
  const Montage back = load_montage(dir.path() / "m.json");
  CHECK(back.name == m.name);
  CHECK(back.labels == m.labels);
}
