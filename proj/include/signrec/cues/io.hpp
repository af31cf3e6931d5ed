#pragma once

#include <filesystem>
#include <string>

#include "signrec/cues/cues.hpp"
#include "signrec/cues/raster.hpp"

namespace signrec::cues {

// Binary PGM (P5), maxval 255, pixels 0 or 255.
std::string encode_pgm(const BinaryImage& img);
BinaryImage decode_pgm(const std::string& bytes);
void write_pgm(const std::filesystem::path& path, const BinaryImage& img);
BinaryImage read_pgm(const std::filesystem::path& path);

// Cue cache layout, all integers and floats little-endian:
//   "CUES" | u32 version | u32 T | u32 S
//   then for left, right: T*S*S image bytes (0/1), T*2 f32 displacement, T*3 f32 location
inline constexpr std::uint32_t kCueCacheVersion = 1;

std::string encode_cues(const CueSequences& cues);
CueSequences decode_cues(const std::string& bytes);
void save_cues(const std::filesystem::path& path, const CueSequences& cues);
CueSequences load_cues(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace signrec::cues
