#include "ssgn/geometry.hpp"

#include <algorithm>
#include <numbers>

#include "ssgn/error.hpp"

namespace ssgn {

IouKind iou_kind_from_string(const std::string& name) {
  if (name == "iou") return IouKind::IoU;
  if (name == "giou") return IouKind::GIoU;
  if (name == "diou") return IouKind::DIoU;
  if (name == "ciou") return IouKind::CIoU;
  throw DataError("unknown IoU kind: " + name);
}

std::string to_string(IouKind kind) {
  switch (kind) {
    case IouKind::IoU: return "iou";
    case IouKind::GIoU: return "giou";
    case IouKind::DIoU: return "diou";
    case IouKind::CIoU: return "ciou";
  }
  return "?";
}

std::array<double, 5> edge_feature(const BoundingBox& src, const BoundingBox& ref) {
  if (ref.degenerate()) {
    throw DataError("edge_feature: degenerate reference box (w=" +
                    std::to_string(ref.width()) + ", h=" +
                    std::to_string(ref.height()) + ")");
  }
  const double w = ref.width();
  const double h = ref.height();
  const double xc = ref.center_x();
  const double yc = ref.center_y();
  return {(src.x_tl - xc) / w, (src.y_tl - yc) / h,
          (src.x_br - xc) / w, (src.y_br - yc) / h,
          (src.width() * src.height()) / (w * h)};
}

double intersection_area(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.x_br, b.x_br) - std::max(a.x_tl, b.x_tl);
  const double ih = std::min(a.y_br, b.y_br) - std::max(a.y_tl, b.y_tl);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

namespace {

BoundingBox enclosing(const BoundingBox& a, const BoundingBox& b) {
  return BoundingBox(std::min(a.x_tl, b.x_tl), std::min(a.y_tl, b.y_tl),
                     std::max(a.x_br, b.x_br), std::max(a.y_br, b.y_br));
}

}  // namespace

double iou_family(IouKind kind, const BoundingBox& a, const BoundingBox& b) {
  if (a.degenerate() || b.degenerate()) {
    throw DataError("iou_family: degenerate box");
  }
  if (a == b) return 1.0;  // every variant's limit for coincident boxes

  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  const double iou = inter / uni;
  if (kind == IouKind::IoU) return iou;

  const BoundingBox c = enclosing(a, b);
  if (kind == IouKind::GIoU) {
    return iou - (c.area() - uni) / c.area();
  }

  const double dx = a.center_x() - b.center_x();
  const double dy = a.center_y() - b.center_y();
  const double c2 = c.width() * c.width() + c.height() * c.height();
  const double diou = iou - (dx * dx + dy * dy) / c2;
  if (kind == IouKind::DIoU) return diou;

  // CIoU aspect-ratio term; alpha is 0 at the IoU=1, v=0 singularity.
  const double da = std::atan(a.width() / a.height());
  const double db = std::atan(b.width() / b.height());
  const double v = (4.0 / (std::numbers::pi * std::numbers::pi)) * (da - db) * (da - db);
  const double denom = (1.0 - iou) + v;
  const double alpha = denom > 0.0 ? v / denom : 0.0;
  return diou - alpha * v;
}

double center_distance(const BoundingBox& a, const BoundingBox& b) {
  return std::hypot(a.center_x() - b.center_x(), a.center_y() - b.center_y());
}

double gap_distance(const BoundingBox& a, const BoundingBox& b) {
  const double dx = std::max({0.0, b.x_tl - a.x_br, a.x_tl - b.x_br});
  const double dy = std::max({0.0, b.y_tl - a.y_br, a.y_tl - b.y_br});
  return std::hypot(dx, dy);
}

double overlap_ratio(const BoundingBox& a, const BoundingBox& b) {
  const double area_a = a.area();
  const double area_b = b.area();
  if (area_a <= 0.0 || area_b <= 0.0) {
    throw DataError("overlap_ratio: zero-area box");
  }
  const double inter = intersection_area(a, b);
  return std::max(inter / area_a, inter / area_b);
}

}  // namespace ssgn
