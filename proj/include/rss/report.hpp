#pragma once

#include "rss/analysis.hpp"
#include "rss/data_model.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace rss {

/// `index,x,y,z,score,selected`, one row per voxel.
void write_voxel_csv(const VoxelMask& mask, const Vector& scores, const SupportSet& selected, std::ostream& out);

/// `S,count` for every overlap level.
void write_overlap_csv(const OverlapResult& r, std::ostream& out);

/// One binary PGM per z-slice, named <stem>_z<k>.pgm. Scores are scaled so
/// that max |score| maps to 255; voxels outside the mask are 0.
std::vector<std::filesystem::path> write_pgm_slices(const VoxelMask& mask, const Vector& scores,
                                                    const std::filesystem::path& dir, const std::string& stem);

}  // namespace rss
