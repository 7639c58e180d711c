#include "surgctx/mask_ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "surgctx/error.hpp"

namespace surgctx {

namespace {

void require_same_dims(const BinaryMask& a, const BinaryMask& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw DimensionMismatchError(std::string(what) + ": " + std::to_string(a.width()) + "x" +
                                 std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
                                 "x" + std::to_string(b.height()));
  }
}

// 8-connected labelling. Returns per-pixel label (-1 background) and fills
// `sizes` with pixel counts; labels are assigned in raster order of each
// component's first pixel.
std::vector<int> label_components(const BinaryMask& m, std::vector<std::size_t>& sizes) {
  const int w = m.width();
  const int h = m.height();
  std::vector<int> labels(static_cast<std::size_t>(w) * h, -1);
  std::vector<int> stack;
  sizes.clear();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t start = static_cast<std::size_t>(y) * w + x;
      if (!m.at(x, y) || labels[start] >= 0) continue;
      const int label = static_cast<int>(sizes.size());
      std::size_t count = 0;
      labels[start] = label;
      stack.push_back(static_cast<int>(start));
      while (!stack.empty()) {
        const int idx = stack.back();
        stack.pop_back();
        ++count;
        const int cx = idx % w;
        const int cy = idx / w;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx;
            const int ny = cy + dy;
            if (!m.contains(nx, ny) || !m.at(nx, ny)) continue;
            const std::size_t n = static_cast<std::size_t>(ny) * w + nx;
            if (labels[n] >= 0) continue;
            labels[n] = label;
            stack.push_back(static_cast<int>(n));
          }
        }
      }
      sizes.push_back(count);
    }
  }
  return labels;
}

// Crack-following trace of the outer boundary starting at the top-left
// corner of (sx, sy), the first pixel of its component in raster order.
// Foreground stays on the right-hand side (image coordinates, y down).
std::vector<Point> trace_outer_boundary(const BinaryMask& m, int sx, int sy) {
  // Directions: 0 east, 1 south, 2 west, 3 north.
  static constexpr std::array<int, 4> kDx = {1, 0, -1, 0};
  static constexpr std::array<int, 4> kDy = {0, 1, 0, -1};
  auto fg = [&m](int x, int y) { return m.contains(x, y) && m.at(x, y); };
  // Pixels ahead-left / ahead-right of corner (x, y) when heading `d`.
  auto ahead = [&](int x, int y, int d, bool left) {
    switch (d) {
      case 0:
        return left ? fg(x, y - 1) : fg(x, y);
      case 1:
        return left ? fg(x, y) : fg(x - 1, y);
      case 2:
        return left ? fg(x - 1, y) : fg(x - 1, y - 1);
      default:
        return left ? fg(x - 1, y - 1) : fg(x, y - 1);
    }
  };

  std::vector<Point> ring;
  ring.push_back({static_cast<double>(sx), static_cast<double>(sy)});
  int x = sx;
  int y = sy;
  int d = 0;
  while (true) {
    x += kDx[d];
    y += kDy[d];
    int nd;
    if (ahead(x, y, d, /*left=*/true)) {
      nd = (d + 3) % 4;
    } else if (ahead(x, y, d, /*left=*/false)) {
      nd = d;
    } else {
      nd = (d + 1) % 4;
    }
    if (x == sx && y == sy && nd == 0) break;
    if (nd != d) ring.push_back({static_cast<double>(x), static_cast<double>(y)});
    d = nd;
  }
  return ring;
}

}  // namespace

BinaryMask denoise(const BinaryMask& m, int min_component_px) {
  std::vector<std::size_t> sizes;
  const std::vector<int> labels = label_components(m, sizes);
  BinaryMask out(m.width(), m.height());
  auto bits = out.bits();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0 && sizes[labels[i]] >= static_cast<std::size_t>(std::max(min_component_px, 0))) {
      bits[i] = 1;
    }
  }
  return out;
}

PolygonSet extract_contours(const BinaryMask& m, ObjectClass cls) {
  std::vector<std::size_t> sizes;
  const std::vector<int> labels = label_components(m, sizes);
  PolygonSet out(cls);
  int next = 0;
  for (int y = 0; y < m.height() && next < static_cast<int>(sizes.size()); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (labels[static_cast<std::size_t>(y) * m.width() + x] != next) continue;
      out.add(Polygon(trace_outer_boundary(m, x, y)));
      ++next;
    }
  }
  return out;
}

PolygonSet drop_small(const PolygonSet& ps, double min_area) {
  PolygonSet out(ps.object_class());
  for (const Polygon& p : ps.parts()) {
    if (!(polygon_area(p) < min_area)) out.add(p);
  }
  return out;
}

BinaryMask rasterize(const PolygonSet& ps, int width, int height) {
  BinaryMask out(width, height);
  auto bits = out.bits();
#pragma omp parallel for schedule(static)
  for (int y = 0; y < height; ++y) {
    const double yc = y + 0.5;
    std::vector<double> xs;
    for (const Polygon& poly : ps.parts()) {
      const auto v = poly.vertices();
      xs.clear();
      for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
        if ((v[i].y <= yc) != (v[j].y <= yc)) {
          xs.push_back(v[j].x + (yc - v[j].y) * (v[i].x - v[j].x) / (v[i].y - v[j].y));
        }
      }
      std::sort(xs.begin(), xs.end());
      for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
        // Centers x + 0.5 in [xs[k], xs[k+1]).
        const int x0 = std::max(0, static_cast<int>(std::ceil(xs[k] - 0.5)));
        const int x1 = std::min(width, static_cast<int>(std::ceil(xs[k + 1] - 0.5)));
        for (int x = x0; x < x1; ++x) bits[static_cast<std::size_t>(y) * width + x] = 1;
      }
    }
  }
  return out;
}

LabelFrame aggregate(std::span<const ClassMask> masks) {
  if (masks.empty()) throw DimensionMismatchError("aggregate: no masks given");
  const int w = masks.front().mask.width();
  const int h = masks.front().mask.height();
  for (const ClassMask& cm : masks) require_same_dims(masks.front().mask, cm.mask, "aggregate");

  // Lower rank wins.
  static constexpr std::array<int, kNumClasses> kRank = {
      /*LeftGrasper=*/3, /*RightGrasper=*/4, /*Needle=*/0,
      /*Thread=*/1,      /*Ring=*/2,         /*TissuePoints=*/5};

  LabelFrame out(w, h);
  std::vector<int> best(static_cast<std::size_t>(w) * h, kNumClasses);
  std::vector<std::uint8_t> labels(static_cast<std::size_t>(w) * h, 0);
  for (const ClassMask& cm : masks) {
    const int rank = kRank[index_of(cm.cls)];
    const auto bits = cm.mask.bits();
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i] && rank < best[i]) {
        best[i] = rank;
        labels[i] = label_of(cm.cls);
      }
    }
  }
  return LabelFrame(w, h, std::move(labels));
}

BinaryMask split_label(const LabelFrame& frame, ObjectClass cls) {
  const std::uint8_t want = label_of(cls);
  std::vector<std::uint8_t> bits(frame.labels().size());
  std::transform(frame.labels().begin(), frame.labels().end(), bits.begin(),
                 [want](std::uint8_t l) { return static_cast<std::uint8_t>(l == want); });
  return BinaryMask(frame.width(), frame.height(), std::move(bits));
}

double mask_iou(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_dims(pred, gt, "mask_iou");
  const auto a = pred.bits();
  const auto b = gt.bits();
  long long inter = 0;
  long long uni = 0;
  const long long n = static_cast<long long>(a.size());
#pragma omp parallel for reduction(+ : inter, uni) schedule(static)
  for (long long i = 0; i < n; ++i) {
    inter += a[i] & b[i];
    uni += a[i] | b[i];
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

BinaryMask erode(const BinaryMask& m, int radius) {
  if (radius <= 0) return m;
  const int w = m.width();
  const int h = m.height();
  // Separable: horizontal then vertical minimum. Outside the raster counts
  // as background.
  BinaryMask horiz(w, h);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool on = true;
      for (int dx = -radius; dx <= radius && on; ++dx) on = m.contains(x + dx, y) && m.at(x + dx, y);
      horiz.set(x, y, on);
    }
  }
  BinaryMask out(w, h);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool on = true;
      for (int dy = -radius; dy <= radius && on; ++dy) {
        on = horiz.contains(x, y + dy) && horiz.at(x, y + dy);
      }
      out.set(x, y, on);
    }
  }
  return out;
}

std::size_t enclosed_area(const BinaryMask& m) {
  const int w = m.width();
  const int h = m.height();
  std::vector<std::uint8_t> reached(static_cast<std::size_t>(w) * h, 0);
  std::vector<int> stack;
  auto seed = [&](int x, int y) {
    const std::size_t i = static_cast<std::size_t>(y) * w + x;
    if (!m.at(x, y) && !reached[i]) {
      reached[i] = 1;
      stack.push_back(static_cast<int>(i));
    }
  };
  for (int x = 0; x < w; ++x) {
    seed(x, 0);
    seed(x, h - 1);
  }
  for (int y = 0; y < h; ++y) {
    seed(0, y);
    seed(w - 1, y);
  }
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    const int x = i % w;
    const int y = i / w;
    if (x > 0) seed(x - 1, y);
    if (x + 1 < w) seed(x + 1, y);
    if (y > 0) seed(x, y - 1);
    if (y + 1 < h) seed(x, y + 1);
  }
  std::size_t enclosed = 0;
  for (std::size_t i = 0; i < reached.size(); ++i) {
    if (!m.bits()[i] && !reached[i]) ++enclosed;
  }
  return enclosed;
}

}  // namespace surgctx
