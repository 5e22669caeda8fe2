#ifndef GRAINSPECT_SYNTHETIC_HPP
#define GRAINSPECT_SYNTHETIC_HPP

#include "grainspect/dataset.hpp"
#include "grainspect/image.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace grainspect {

/// Procedural wood boards: smooth ring grain with dark knots (sharp-edged dry,
/// soft-edged sound), thin shakes and unannotated specks. Each defect sits inside
/// one window so the window labels are unambiguous.
struct SyntheticOptions {
  int images = 200;
  int width = 240;
  int height = 180;
  int window = 60;
  std::uint64_t seed = 7;
  int max_defects = 3;  // per image, at least one
  int max_specks = 24;
  double strong_first = 0.75;  // chance that the first defect is a dry knot or shake
};

struct SyntheticImage {
  std::string id;
  ColorImage image;
  std::vector<DefectAnnotation> annotations;
};

/// Image `index` of the corpus; depends only on (options, index).
SyntheticImage render_synthetic(const SyntheticOptions& options, int index);

/// Writes images/<id>.png and labels.txt under `dir` and returns the manifest.
Manifest write_synthetic_corpus(const std::string& dir, const SyntheticOptions& options);

}  // namespace grainspect

#endif  // GRAINSPECT_SYNTHETIC_HPP
