#pragma once
//
// Periodic spatial torus times a bounded time window, with the ultrastatic
// metric g = -dt^2 + h and h constant and diagonal.
//

#include <cmath>
#include <cstddef>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace plab {

/// Rectangular grid with a constant diagonal metric. Axis 0 is slowest in the
/// site ordering. Periodic axes wrap; non-periodic axes use zero extension.
struct Geometry {
  int dims = 0;
  std::vector<int> extent;
  std::vector<double> spacing;
  std::vector<double> metric;  // diagonal entries g_{mu mu}
  std::vector<bool> periodic;
  std::vector<long> stride;
  long sites = 0;
  int negatives = 0;  // number of negative metric entries (s)
  double sqrt_abs_det = 1.0;
  double cell_volume = 1.0;  // sqrt|det g| * product of spacings

  Geometry() = default;
  Geometry(std::vector<int> ext, std::vector<double> dx, std::vector<double> g,
           std::vector<bool> per)
      : dims(static_cast<int>(ext.size())),
        extent(std::move(ext)),
        spacing(std::move(dx)),
        metric(std::move(g)),
        periodic(std::move(per)) {
    stride.assign(dims, 1);
    for (int a = dims - 2; a >= 0; --a) stride[a] = stride[a + 1] * extent[a + 1];
    sites = 1;
    double det = 1.0;
    cell_volume = 1.0;
    for (int a = 0; a < dims; ++a) {
      sites *= extent[a];
      det *= metric[a];
      cell_volume *= spacing[a];
      if (metric[a] < 0) ++negatives;
    }
    sqrt_abs_det = std::sqrt(std::abs(det));
    cell_volume *= sqrt_abs_det;
  }

  int coord(long site, int axis) const {
    return static_cast<int>((site / stride[axis]) % extent[axis]);
  }

  /// Neighbour of `site` displaced by `step` along `axis`; -1 when it falls
  /// outside a non-periodic axis.
  long neighbor(long site, int axis, int step) const {
    int c = coord(site, axis);
    int nc = c + step;
    if (nc < 0 || nc >= extent[axis]) {
      if (!periodic[axis]) return -1;
      nc = ((nc % extent[axis]) + extent[axis]) % extent[axis];
    }
    return site + static_cast<long>(nc - c) * stride[axis];
  }

  bool operator==(const Geometry& o) const {
    return extent == o.extent && spacing == o.spacing && metric == o.metric &&
           periodic == o.periodic;
  }
  bool operator!=(const Geometry& o) const { return !(*this == o); }
};

struct SpacetimeConfig {
  int spatial_dims = 1;
  std::vector<int> extent;          // spatial point counts
  std::vector<double> dx;           // spatial spacings
  int steps = 0;                    // time levels
  double dt = 0.0;
  std::vector<double> metric_diag;  // h_ii, empty means flat
};

class LatticeSpacetime {
 public:
  int spatial_dims() const { return spatial_dims_; }
  int dimension() const { return spatial_dims_ + 1; }
  const std::vector<int>& spatial_extent() const { return extent_; }
  const std::vector<double>& spatial_spacing() const { return dx_; }
  const std::vector<double>& spatial_metric_diag() const { return h_; }
  int time_steps() const { return steps_; }
  double time_spacing() const { return dt_; }
  long spatial_sites() const { return slice_->sites; }

  /// dt / min_i(dx_i * sqrt(h_ii)).
  double cfl() const { return cfl_; }
  bool cfl_ok() const { return cfl_ <= 1.0; }

  /// Von Neumann number of the leapfrog Klein-Gordon update at mass m; the
  /// update is stable when this is < 1.
  double stability_number(double m = 0.0) const {
    double acc = m * m / 4.0;
    for (int i = 0; i < spatial_dims_; ++i) acc += 1.0 / (h_[i] * dx_[i] * dx_[i]);
    return std::sqrt(acc) * dt_;
  }

  double volume_element() const { return geom_->cell_volume; }
  double slice_volume_element() const { return slice_->cell_volume; }

  const std::shared_ptr<const Geometry>& geometry() const { return geom_; }
  const std::shared_ptr<const Geometry>& slice_geometry() const { return slice_; }

  bool operator==(const LatticeSpacetime& o) const { return *geom_ == *o.geom_; }

  friend LatticeSpacetime build_spacetime(const SpacetimeConfig& cfg);

 private:
  int spatial_dims_ = 1;
  std::vector<int> extent_;
  std::vector<double> dx_;
  std::vector<double> h_;
  int steps_ = 0;
  double dt_ = 0.0;
  double cfl_ = 0.0;
  std::shared_ptr<const Geometry> geom_;
  std::shared_ptr<const Geometry> slice_;
};

inline LatticeSpacetime build_spacetime(const SpacetimeConfig& cfg) {
  if (cfg.spatial_dims != 1 && cfg.spatial_dims != 3)
    throw std::invalid_argument("spatial_dims must be 1 or 3");
  const auto d = static_cast<std::size_t>(cfg.spatial_dims);
  if (cfg.extent.size() != d || cfg.dx.size() != d)
    throw std::invalid_argument("extent and dx need one entry per spatial axis");
  std::vector<double> h = cfg.metric_diag.empty() ? std::vector<double>(d, 1.0) : cfg.metric_diag;
  if (h.size() != d) throw std::invalid_argument("metric_diag needs one entry per spatial axis");
  for (std::size_t i = 0; i < d; ++i) {
    if (!(cfg.dx[i] > 0)) throw std::invalid_argument("spatial spacing must be positive");
    if (!(h[i] > 0)) throw std::invalid_argument("spatial metric entries must be positive");
    if (cfg.extent[i] < 4) throw std::invalid_argument("spatial extent must be at least 4");
  }
  if (!(cfg.dt > 0)) throw std::invalid_argument("time spacing must be positive");
  if (cfg.steps < 4) throw std::invalid_argument("time steps must be at least 4");

  LatticeSpacetime st;
  st.spatial_dims_ = cfg.spatial_dims;
  st.extent_ = cfg.extent;
  st.dx_ = cfg.dx;
  st.h_ = h;
  st.steps_ = cfg.steps;
  st.dt_ = cfg.dt;
  double min_len = cfg.dx[0] * std::sqrt(h[0]);
  for (std::size_t i = 1; i < d; ++i) min_len = std::min(min_len, cfg.dx[i] * std::sqrt(h[i]));
  st.cfl_ = cfg.dt / min_len;

  std::vector<int> ext{cfg.steps};
  std::vector<double> sp{cfg.dt};
  std::vector<double> g{-1.0};
  std::vector<bool> per{false};
  for (std::size_t i = 0; i < d; ++i) {
    ext.push_back(cfg.extent[i]);
    sp.push_back(cfg.dx[i]);
    g.push_back(h[i]);
    per.push_back(true);
  }
  st.geom_ = std::make_shared<const Geometry>(ext, sp, g, per);
  st.slice_ = std::make_shared<const Geometry>(cfg.extent, cfg.dx, h, std::vector<bool>(d, true));
  return st;
}

/// Convenience constructor for the uniform case.
inline LatticeSpacetime build_spacetime(int spatial_dims, int extent, double dx, int steps,
                                        double dt, std::vector<double> metric_diag = {}) {
  SpacetimeConfig cfg;
  cfg.spatial_dims = spatial_dims;
  cfg.extent.assign(spatial_dims, extent);
  cfg.dx.assign(spatial_dims, dx);
  cfg.steps = steps;
  cfg.dt = dt;
  cfg.metric_diag = std::move(metric_diag);
  return build_spacetime(cfg);
}

/// Constant-t slice of a lattice; inherits h and its volume element.
class CauchySlice {
 public:
  CauchySlice(LatticeSpacetime st, int t) : st_(std::move(st)), t_(t) {}
  const LatticeSpacetime& parent() const { return st_; }
  int time_index() const { return t_; }
  const std::shared_ptr<const Geometry>& geometry() const { return st_.slice_geometry(); }
  bool operator==(const CauchySlice& o) const { return t_ == o.t_ && st_ == o.st_; }
  bool operator!=(const CauchySlice& o) const { return !(*this == o); }

 private:
  LatticeSpacetime st_;
  int t_;
};

inline CauchySlice cauchy_slice(const LatticeSpacetime& st, int t) {
  if (t < 0 || t >= st.time_steps()) {
    std::ostringstream os;
    os << "slice index " << t << " outside [0, " << st.time_steps() << ")";
    throw std::out_of_range(os.str());
  }
  return CauchySlice(st, t);
}

}  // namespace plab
