#pragma once

#include <string>

#include "sonalyzer/common.hpp"

namespace sonalyzer {

/// Binary feature cache: header (rows: u32, cols: u64) followed by
/// rows*cols little-endian 32-bit floats in column-major order.
void write_feature_cache(const std::string& path, const Matf& m);
Matf read_feature_cache(const std::string& path);

}  // namespace sonalyzer
