#pragma once

#include <string>
#include <utility>
#include <vector>

#include "noddet/data/types.hpp"

namespace noddet::data {

// Synthetic chest-phantom stand-in for DeepLesion-format data: bright
// ellipsoidal nodules (annotated on their key slice) over a noisy lung-like
// background with vessel-like tubular distractors (unannotated).
std::vector<std::pair<Volume, std::vector<AnnotationRecord>>> generate_phantoms(
    const PhantomConfig& cfg);

// Volume raster files: ASCII header line "W H n_slices", then W*H*n_slices
// int16 little-endian HU values, slice-major row-major.
void save_volume(const std::string& path, const Volume& vol);
Volume load_volume(const std::string& path, const std::string& study_id);

}  // namespace noddet::data
