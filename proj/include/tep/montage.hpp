#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tep/types.hpp"

// Electrode-density sets. Selecting a montage never alters sample values,
// only channel membership and order.

namespace tep::montage {

struct Montage {
  std::string name;
  std::vector<ChannelLabel> labels;
};

enum class Density { low, medium, high };

// The canonical 62-label 10-10 cap this toolkit ships (front to back, left
// to right within each row). Supersets the 19 standard 10-20 positions.
const std::vector<ChannelLabel>& canonical_channels();

// The 19 standard 10-20 positions.
const std::vector<ChannelLabel>& low_density_labels();

// 31-label default: every second electrode of the canonical list, so
// coverage stays distributed over the whole scalp. Overridable via a montage
// file.
const std::vector<ChannelLabel>& medium_density_labels();

// high = the full channel list of the recording; low/medium = the shipped
// label sets, which must all be present in full_channel_list.
Montage builtin_montage(Density density, const std::vector<ChannelLabel>& full_channel_list);

Density density_from_string(const std::string& s);

// { "name": string, "labels": [string] }
Montage load_montage(const std::filesystem::path& path);
void write_montage(const Montage& m, const std::filesystem::path& path);

// Restricts epochs to m.labels, in montage order. Errors name the first
// missing label.
EpochSet select_channels(const EpochSet& epochs, const Montage& m);

}  // namespace tep::montage
