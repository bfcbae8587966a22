// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "poslda/model.hpp"

namespace poslda {

// Snapshot layout (all integers little-endian):
//   "PLDASNAP" | u32 version | u64 payload length | payload | u32 CRC-32(payload)
// The payload holds the corpus, configuration, hyperparameters, class masks,
// transition mode, assignments, completed sweeps and the RNG state. Counts are
// rebuilt from the assignments on load.
inline constexpr std::uint32_t kSnapshotVersion = 1;

std::string save_snapshot(const ModelState& state);
// Throws SnapshotError on a bad magic, version, length or checksum.
ModelState load_snapshot(std::string_view bytes);

// Writes to a temporary sibling file and renames it over `path`.
void write_file_atomically(const std::filesystem::path& path, std::string_view contents);
std::string read_file_bytes(const std::filesystem::path& path);

void save_snapshot_file(const ModelState& state, const std::filesystem::path& path);
ModelState load_snapshot_file(const std::filesystem::path& path);

}  // namespace poslda
