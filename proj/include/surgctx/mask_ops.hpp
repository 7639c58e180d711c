#pragma once

// Raster <-> polygon conversion and mask-level measures.

#include <span>

#include "surgctx/geometry.hpp"
#include "surgctx/mask.hpp"

namespace surgctx {

inline constexpr int kDefaultMinComponentPx = 15;
inline constexpr double kDefaultMinPolygonArea = 15.0;

// Removes 8-connected foreground components with fewer than
// `min_component_px` pixels. Never adds pixels.
BinaryMask denoise(const BinaryMask& m, int min_component_px = kDefaultMinComponentPx);

// Outer boundary of every 8-connected component, traced along pixel edges.
// Vertices are pixel-corner coordinates and only direction changes are
// emitted, so an axis-aligned block yields 4 vertices and the polygon area
// equals the component's pixel count plus any enclosed holes.
PolygonSet extract_contours(const BinaryMask& m, ObjectClass cls = ObjectClass::LeftGrasper);

// Removes parts with area strictly below `min_area`.
PolygonSet drop_small(const PolygonSet& ps, double min_area = kDefaultMinPolygonArea);

// Pixel (x, y) is set when its center (x + 0.5, y + 0.5) lies inside some
// part under the even-odd rule. Geometry outside the raster is clipped.
BinaryMask rasterize(const PolygonSet& ps, int width, int height);

// Merges per-class masks into one label frame. Overlaps resolve front to
// back: Needle > Thread > Ring > LeftGrasper > RightGrasper > TissuePoints.
LabelFrame aggregate(std::span<const ClassMask> masks);

BinaryMask split_label(const LabelFrame& frame, ObjectClass cls);

// |pred & gt| / |pred | gt|; 1.0 when both are empty.
double mask_iou(const BinaryMask& pred, const BinaryMask& gt);

// Square structuring element of half-width `radius` (a 5x5 window for 2).
BinaryMask erode(const BinaryMask& m, int radius);

// Background pixels not 4-connected to the raster border.
std::size_t enclosed_area(const BinaryMask& m);

}  // namespace surgctx
