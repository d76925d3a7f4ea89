#pragma once

#include <map>
#include <string>
#include <vector>

#include "noddet/data/annotations.hpp"
#include "noddet/data/phantom.hpp"
#include "noddet/data/preprocess.hpp"
#include "noddet/data/types.hpp"

namespace noddet::data {

// On-disk dataset layout:
//   <dir>/volumes/<study_id>.hu16   raster volumes (see phantom.hpp)
//   <dir>/annotations.csv           DeepLesion-compatible annotation table
//   <dir>/dataset.json              generation metadata and summary counts
struct DatasetSummary {
    int n_volumes = 0;
    int n_annotations = 0;
    int n_key_slices = 0;
    int image_size = 0;
};

// Generates phantoms and writes the directory; refuses a non-empty existing
// directory unless force is set.
DatasetSummary write_phantom_dataset(const std::string& out_dir, const PhantomConfig& cfg,
                                     bool force);

// One training/evaluation sample: a normalized, resized 2.5D stack with its
// ground truth boxes. scan_id identifies the key slice.
struct Sample {
    SliceStack stack;
    std::string scan_id;
    std::string study_id;
    int key_slice = 0;
};

struct LoadedDataset {
    std::vector<Sample> samples;
    double p99 = 1.0;
    int native_size = 0;
    int input_size = 0;
};

// Loads volumes + annotations, normalizes by the dataset-wide percentile,
// stacks neighbors around each annotated key slice and resizes to input_size.
// Row errors in the CSV raise IngestError listing the offending lines.
LoadedDataset load_dataset(const std::string& dir, int input_size);

// Normalized stacks for every slice of one volume file (used by predict on
// un-annotated inputs). p99 is computed from that volume alone.
std::vector<Sample> stacks_from_volume(const std::string& volume_path,
                                       const std::string& study_id, int input_size);

}  // namespace noddet::data
