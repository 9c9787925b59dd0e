#ifndef VFC_GEOMETRY_HPP
#define VFC_GEOMETRY_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "json.hpp"

namespace vfc {

// Axis-aligned box, closed. Coordinates are the chart's (u, log|z|) plane.
struct Box {
  std::vector<double> lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }

  bool contains(const std::vector<double>& x, double pad = 0.0) const {
    for (int i = 0; i < dim(); ++i)
      if (x[i] < lo[i] - pad || x[i] > hi[i] + pad) return false;
    return true;
  }

  double diameter() const {
    double s = 0;
    for (int i = 0; i < dim(); ++i) s += (hi[i] - lo[i]) * (hi[i] - lo[i]);
    return std::sqrt(s);
  }

  // Euclidean distance from x to the box (0 inside).
  double distance(const std::vector<double>& x) const {
    double s = 0;
    for (int i = 0; i < dim(); ++i) {
      double d = std::max({lo[i] - x[i], x[i] - hi[i], 0.0});
      s += d * d;
    }
    return std::sqrt(s);
  }

  // Linear interpolation of bounds: t=0 gives this, t=1 gives other.
  // Requires matching dimensions; used by the shrink schedule.
  Box lerp_to(const Box& other, double t) const {
    Box b;
    b.lo.resize(lo.size());
    b.hi.resize(hi.size());
    for (std::size_t i = 0; i < lo.size(); ++i) {
      b.lo[i] = lo[i] + t * (other.lo[i] - lo[i]);
      b.hi[i] = hi[i] + t * (other.hi[i] - hi[i]);
    }
    return b;
  }

  Box inflate(double pad) const {
    Box b = *this;
    for (auto& v : b.lo) v -= pad;
    for (auto& v : b.hi) v += pad;
    return b;
  }

  bool inside(const Box& outer, double margin = 0.0) const {
    for (int i = 0; i < dim(); ++i)
      if (lo[i] < outer.lo[i] + margin || hi[i] > outer.hi[i] - margin) return false;
    return true;
  }

  std::vector<double> center() const {
    std::vector<double> c(lo.size());
    for (std::size_t i = 0; i < lo.size(); ++i) c[i] = 0.5 * (lo[i] + hi[i]);
    return c;
  }
};

// Finite union of boxes. Membership is exact, which keeps the shrink-schedule
// containment conditions checkable.
struct Region {
  std::vector<Box> boxes;

  bool empty() const { return boxes.empty(); }
  int dim() const { return boxes.empty() ? 0 : boxes[0].dim(); }

  bool contains(const std::vector<double>& x, double pad = 0.0) const {
    for (const auto& b : boxes)
      if (b.contains(x, pad)) return true;
    return false;
  }

  double distance(const std::vector<double>& x) const {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& b : boxes) d = std::min(d, b.distance(x));
    return d;
  }

  // Depth inside the union: 0 outside, otherwise the largest inradius margin
  // over member boxes.
  double depth(const std::vector<double>& x) const {
    double best = 0.0;
    for (const auto& b : boxes) {
      double m = std::numeric_limits<double>::infinity();
      for (int i = 0; i < b.dim(); ++i) m = std::min({m, x[i] - b.lo[i], b.hi[i] - x[i]});
      if (b.dim() == 0) m = std::numeric_limits<double>::infinity();
      best = std::max(best, std::max(0.0, std::min(m, 1e300)));
    }
    return best;
  }

  double diameter() const {
    if (boxes.empty()) return 0.0;
    Box hull = bounding_box();
    return hull.diameter();
  }

  Box bounding_box() const {
    if (boxes.empty()) throw std::logic_error("bounding box of empty region");
    Box b = boxes[0];
    for (const auto& bx : boxes)
      for (int i = 0; i < b.dim(); ++i) {
        b.lo[i] = std::min(b.lo[i], bx.lo[i]);
        b.hi[i] = std::max(b.hi[i], bx.hi[i]);
      }
    return b;
  }

  Region inflate(double pad) const {
    Region r;
    for (const auto& b : boxes) r.boxes.push_back(b.inflate(pad));
    return r;
  }

  // Pointwise containment proxy on a grid is avoided: box-in-box suffices for
  // the unions used here (each box of *this inside some box of outer).
  bool inside(const Region& outer, double margin = 0.0) const {
    for (const auto& b : boxes) {
      bool ok = false;
      for (const auto& ob : outer.boxes) ok = ok || b.inside(ob, margin);
      if (!ok) return false;
    }
    return true;
  }
};

inline nlohmann::json box_to_json(const Box& b) {
  return nlohmann::json{{"lo", b.lo}, {"hi", b.hi}};
}

inline Box box_from_json(const nlohmann::json& j) {
  Box b;
  b.lo = j.at("lo").get<std::vector<double>>();
  b.hi = j.at("hi").get<std::vector<double>>();
  if (b.lo.size() != b.hi.size()) throw std::invalid_argument("box lo/hi size mismatch");
  return b;
}

inline nlohmann::json region_to_json(const Region& r) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& b : r.boxes) j.push_back(box_to_json(b));
  return j;
}

inline Region region_from_json(const nlohmann::json& j) {
  Region r;
  for (const auto& jb : j) r.boxes.push_back(box_from_json(jb));
  return r;
}

// C^2 quintic step: 0 below 0, 1 above 1.
inline double smooth01(double t) {
  if (t <= 0) return 0.0;
  if (t >= 1) return 1.0;
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

// C^2 bump supported on the box, equal to 1 on the inner fraction `core` of
// each axis. Products of per-axis profiles.
inline double box_bump(const Box& b, const std::vector<double>& x, double core = 0.5) {
  double v = 1.0;
  for (int i = 0; i < b.dim(); ++i) {
    double half = 0.5 * (b.hi[i] - b.lo[i]);
    if (half <= 0) return 0.0;
    double t = std::abs(x[i] - 0.5 * (b.lo[i] + b.hi[i])) / half;  // 0 center, 1 edge
    if (t >= 1.0) return 0.0;
    if (t > core) v *= 1.0 - smooth01((t - core) / (1.0 - core));
  }
  return v;
}

}  // namespace vfc

#endif
