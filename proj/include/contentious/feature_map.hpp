#pragma once

#include <map>
#include <string>

namespace contentious {

/// Named sparse features; ordered so iteration (and any export) is stable.
using FeatureMap = std::map<std::string, double>;

}  // namespace contentious
