#ifndef SSGN_GEOMETRY_HPP
#define SSGN_GEOMETRY_HPP

#include <array>
#include <cmath>
#include <string>

namespace ssgn {

/// Axis-aligned rectangle in image pixel coordinates. Construction
/// canonicalizes swapped corners so x_tl <= x_br and y_tl <= y_br
/// always hold; detector output is noisy and corner order is not
/// trusted.
struct BoundingBox {
  double x_tl = 0.0;
  double y_tl = 0.0;
  double x_br = 0.0;
  double y_br = 0.0;

  BoundingBox() = default;
  BoundingBox(double x0, double y0, double x1, double y1)
      : x_tl(std::min(x0, x1)),
        y_tl(std::min(y0, y1)),
        x_br(std::max(x0, x1)),
        y_br(std::max(y0, y1)) {}

  double width() const { return x_br - x_tl; }
  double height() const { return y_br - y_tl; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x_tl + x_br); }
  double center_y() const { return 0.5 * (y_tl + y_br); }
  double diagonal() const { return std::hypot(width(), height()); }

  bool degenerate() const { return width() <= 0.0 || height() <= 0.0; }

  bool operator==(const BoundingBox& o) const {
    return x_tl == o.x_tl && y_tl == o.y_tl && x_br == o.x_br && y_br == o.y_br;
  }
};

enum class IouKind { IoU, GIoU, DIoU, CIoU };

IouKind iou_kind_from_string(const std::string& name);
std::string to_string(IouKind kind);

/// Relative-position encoding of `src` against reference box `ref`:
/// [(x_src^tl - x_ref^c)/w_ref, (y_src^tl - y_ref^c)/h_ref,
///  (x_src^br - x_ref^c)/w_ref, (y_src^br - y_ref^c)/h_ref,
///  area_src/area_ref]. Throws DataError if ref has zero width or height.
std::array<double, 5> edge_feature(const BoundingBox& src, const BoundingBox& ref);

/// Intersection area of two boxes (0 for touching or disjoint boxes).
double intersection_area(const BoundingBox& a, const BoundingBox& b);

/// IoU and its variants. IoU in [0,1]; GIoU/DIoU in (-1,1]; CIoU subtracts
/// an aspect-ratio penalty from DIoU. Both boxes must be non-degenerate.
double iou_family(IouKind kind, const BoundingBox& a, const BoundingBox& b);

/// Euclidean distance between box centers.
double center_distance(const BoundingBox& a, const BoundingBox& b);

/// Shortest distance between box boundaries; 0 when the rectangles
/// intersect or touch.
double gap_distance(const BoundingBox& a, const BoundingBox& b);

/// max(A_inter/A_a, A_inter/A_b). Both areas must be positive.
double overlap_ratio(const BoundingBox& a, const BoundingBox& b);

}  // namespace ssgn

#endif  // SSGN_GEOMETRY_HPP
