#pragma once

#include <string>
#include <vector>

#include "noddet/data/types.hpp"

namespace noddet::data {

// DeepLesion-compatible annotation CSV:
//   study_id,key_slice_id,x1,y1,x2,y2,lesion_type
// UTF-8, header row mandatory.
inline constexpr const char* kAnnotationCsvHeader =
    "study_id,key_slice_id,x1,y1,x2,y2,lesion_type";

struct RowError {
    int line = 0;  // 1-based line number in the file
    std::string message;
};

struct AnnotationLoadResult {
    std::vector<AnnotationRecord> records;
    std::vector<RowError> row_errors;  // malformed rows, skipped
};

// Missing file or header mismatch raise IngestError; malformed rows are
// skipped and reported with their line numbers.
AnnotationLoadResult load_annotations(const std::string& csv_path);

void save_annotations(const std::string& csv_path,
                      const std::vector<AnnotationRecord>& records);

}  // namespace noddet::data
