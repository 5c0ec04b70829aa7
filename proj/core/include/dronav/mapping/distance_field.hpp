#pragma once

#include <vector>

namespace dronav::mapping {

/// Exact Euclidean distance (in cells) from every cell to the nearest cell
/// with `seeds[i] != 0`, row-major `width` x `height`. Infinity everywhere
/// when there are no seeds.
std::vector<double> distance_transform(const std::vector<char>& seeds, int width, int height);

}  // namespace dronav::mapping
