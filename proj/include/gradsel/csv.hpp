#pragma once

#include <string>

#include "gradsel/dataset.hpp"

namespace gradsel {

struct LoadOptions {
    std::string label_column = "y";
    // Positive class for string-labeled files.  Empty means the labels must
    // be numeric (-1/1 as is, or 0/1 with 0 mapped to -1).
    std::string positive_label;
};

// Parses a comma-separated UTF-8 file with a header row.  Every non-label
// column must be numeric and becomes a standardized feature (mean 0,
// population sd 1); the label column maps to -1/+1.  Errors name data rows
// and file columns counting from 1.
Dataset load_csv(const std::string& path, const LoadOptions& options = {});

// Comma-separated text for the dataset: feature columns first (named from
// feature_names, or x1..xp), then the label column "y" with -1/1 values.
// Floats carry 17 significant digits so a reload reproduces them.
std::string render_csv(const Dataset& data);

// render_csv straight to a file.
void write_csv(const std::string& path, const Dataset& data);

}  // namespace gradsel
