#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "moetrack/embed.hpp"

namespace moetrack {

/// Versioned binary parameter container.
///
/// Layout (all integers little-endian):
///   magic   "MTKP" (4 bytes)
///   u32     container version (1)
///   u32     channel width C
///   u32     encoder depth L
///   u32     common expert count
///   u32     specific expert count
///   u64     block count
/// then per block, in registry order:
///   u32     name length, name bytes
///   u32     rows, u32 cols
///   f64[rows*cols]  row-major little-endian values
std::vector<uint8_t> serialize_params(EncoderParams& enc, TrackerParams& trk);
void deserialize_params(const std::vector<uint8_t>& bytes, EncoderParams& enc,
                        TrackerParams& trk);

void save_params(const std::string& path, EncoderParams& enc, TrackerParams& trk);
void load_params(const std::string& path, EncoderParams& enc, TrackerParams& trk);

} // namespace moetrack
