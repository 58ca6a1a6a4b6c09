#pragma once

#include <string>

#include "cubesort/box.hpp"

namespace cubesort {

inline constexpr const char* kDefect = "defect";
inline constexpr const char* kIntact = "intact";

/// One labelled object in one image; integer pixel box [xmin, xmax) x [ymin, ymax).
struct Annotation {
  std::string filename;
  int width = 0;
  int height = 0;
  std::string category;
  int xmin = 0;
  int ymin = 0;
  int xmax = 0;
  int ymax = 0;

  BoundingBox box() const noexcept {
    return {static_cast<double>(xmin), static_cast<double>(ymin), static_cast<double>(xmax),
            static_cast<double>(ymax)};
  }

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

}  // namespace cubesort
