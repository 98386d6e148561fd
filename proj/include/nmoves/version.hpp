#pragma once

namespace nmoves {

inline constexpr const char* kVersion = "0.1.0";

// Dataset partition binary format ("NMRE" + version byte)
inline constexpr char kDatasetMagic[4] = {'N', 'M', 'R', 'E'};
inline constexpr unsigned char kDatasetFormatVersion = 1;

// Model family binary format ("NMNN" + version byte)
inline constexpr char kModelMagic[4] = {'N', 'M', 'N', 'N'};
inline constexpr unsigned char kModelFormatVersion = 1;

}  // namespace nmoves
