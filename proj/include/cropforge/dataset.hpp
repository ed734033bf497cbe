#ifndef CROPFORGE_DATASET_HPP
#define CROPFORGE_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cropforge/synthetic.hpp"

namespace cropforge {

// On-disk layout:
//   <dir>/images/<id>.png     8-bit grayscale or RGB
//   <dir>/saliency/<id>.png   8-bit grayscale mask
//   <dir>/crops.csv           id,x_min,y_min,x_max,y_max (pixels)
// The same layout accepts externally supplied datasets.

void write_dataset(const std::string& dir, const std::vector<SyntheticSample>& samples);

struct Dataset {
  std::vector<SyntheticSample> samples;   // ordered by id
  std::vector<std::string> missing_crops; // image ids without a crops.csv row
};

// `require_saliency` makes a missing mask an error (training needs masks;
// evaluation does not). Samples without a crop row are collected in
// missing_crops and excluded from `samples`.
Dataset load_dataset(const std::string& dir, bool require_saliency);

// FNV-1a over every file (relative path + contents) in sorted path order.
std::uint64_t dataset_checksum(const std::string& dir);

}  // namespace cropforge

#endif  // CROPFORGE_DATASET_HPP
