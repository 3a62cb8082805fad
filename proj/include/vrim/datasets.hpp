#ifndef VRIM_DATASETS_HPP
#define VRIM_DATASETS_HPP

#include <filesystem>
#include <string>

#include "vrim/targets.hpp"

namespace vrim {

// CSV with a header row, final column = response/label.  Known dataset names
// carry expected (N, d) counts that the loader checks, warning on mismatch.
// For the logistic sets d counts the intercept column the loader appends.
LogisticData load_logistic_csv(const std::filesystem::path& file,
                               bool standardize = true);
GpData load_gp_csv(const std::filesystem::path& file, bool standardize = true);

// Subsample the first n rows (chain runtime control for the GP sets).
GpData gp_head(const GpData& data, int n);

// Write the six bundled dataset files (synthetic stand-ins shaped like the
// classic benchmarks) into dir.
void write_standin_datasets(const std::filesystem::path& dir);

}  // namespace vrim

#endif
