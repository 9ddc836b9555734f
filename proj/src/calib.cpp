#include "bsforce/calib.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <stdexcept>

namespace bsforce {

namespace {

std::map<double, std::vector<const CalibrationSample*>> by_location(const CalibrationDataset& d) {
  std::map<double, std::vector<const CalibrationSample*>> out;
  for (const auto& s : d.samples) out[s.location_mm].push_back(&s);
  return out;
}

}  // namespace

double eval_cubic(const Cubic& c, double f) { return ((c[3] * f + c[2]) * f + c[1]) * f + c[0]; }

void CalibrationDataset::validate() const {
  const auto groups = by_location(*this);
  if (groups.size() < 2) throw std::invalid_argument("calibration needs at least 2 distinct locations");
  for (const auto& [loc, samples] : groups) {
    std::set<double> forces;
    for (const auto* s : samples) forces.insert(s->force_n);
    if (forces.size() < 4)
      throw std::invalid_argument("calibration needs at least 4 distinct forces per location");
  }
  for (const auto& s : samples)
    if (!std::isfinite(s.phi1) || !std::isfinite(s.phi2) || !std::isfinite(s.force_n) ||
        !std::isfinite(s.location_mm))
      throw std::invalid_argument("calibration sample is not finite");
}

CalibrationDataset generate_sweep(const std::vector<double>& locations_mm,
                                  const std::vector<double>& forces_n, const SensorGeometry& geom,
                                  const MechanicalParams& mech, double carrier_hz) {
  geom.validate();
  mech.validate(geom);
  CalibrationDataset d;
  d.carrier_hz = carrier_hz;
  d.no_touch = no_touch_phases(geom, carrier_hz);
  d.source = DatasetSource::simulated;
  for (double l : locations_mm)
    for (double f : forces_n) {
      const auto ph = port_phases(shorting_segment(Touch{f, l}, mech, geom), geom, carrier_hz);
      d.samples.push_back(CalibrationSample{f, l, ph.phi1, ph.phi2});
    }
  d.validate();
  return d;
}

SensorModel fit_model(const CalibrationDataset& data) {
  data.validate();
  SensorModel model;
  model.carrier_hz = data.carrier_hz;
  model.no_touch = data.no_touch;
  model.force_min_n = std::numeric_limits<double>::infinity();
  model.force_max_n = -std::numeric_limits<double>::infinity();

  for (const auto& [loc, samples] : by_location(data)) {
    const auto rows = static_cast<Eigen::Index>(samples.size());
    Eigen::MatrixXd design(rows, 4);
    Eigen::MatrixXd rhs(rows, 2);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const auto* s = samples[static_cast<std::size_t>(r)];
      const double f = s->force_n;
      design.row(r) << 1.0, f, f * f, f * f * f;
      rhs(r, 0) = s->phi1 - data.no_touch.phi1;
      rhs(r, 1) = s->phi2 - data.no_touch.phi2;
      model.force_min_n = std::min(model.force_min_n, f);
      model.force_max_n = std::max(model.force_max_n, f);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < 4) throw std::invalid_argument("rank-deficient cubic fit");
    const Eigen::MatrixXd coef = qr.solve(rhs);

    LocationFit fit;
    fit.location_mm = loc;
    for (int i = 0; i < 4; ++i) {
      fit.port1[static_cast<std::size_t>(i)] = coef(i, 0);
      fit.port2[static_cast<std::size_t>(i)] = coef(i, 1);
    }
    const Eigen::MatrixXd resid = design * coef - rhs;
    fit.rms_deg = std::sqrt(resid.squaredNorm() / static_cast<double>(resid.size())) * 180.0 / std::numbers::pi;
    model.fits.push_back(fit);
  }
  return model;
}

std::array<Cubic, 2> model_coefficients(const SensorModel& model, double location_mm) {
  if (model.fits.empty()) throw std::invalid_argument("empty sensor model");
  if (!(location_mm >= model.location_min() && location_mm <= model.location_max()))
    throw std::out_of_range("location outside the calibrated span");
  auto hi = std::lower_bound(model.fits.begin(), model.fits.end(), location_mm,
                             [](const LocationFit& f, double l) { return f.location_mm < l; });
  if (hi->location_mm == location_mm) return {hi->port1, hi->port2};
  auto lo = std::prev(hi);
  const double t = (location_mm - lo->location_mm) / (hi->location_mm - lo->location_mm);
  std::array<Cubic, 2> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    out[0][i] = (1.0 - t) * lo->port1[i] + t * hi->port1[i];
    out[1][i] = (1.0 - t) * lo->port2[i] + t * hi->port2[i];
  }
  return out;
}

ModelPhases model_forward(const SensorModel& model, double force_n, double location_mm) {
  const auto c = model_coefficients(model, location_mm);
  ModelPhases out;
  out.phi1 = eval_cubic(c[0], force_n);
  out.phi2 = eval_cubic(c[1], force_n);
  out.in_range = force_n >= model.force_min_n && force_n <= model.force_max_n;
  return out;
}

namespace {

struct Target {
  double d1, d2;
};

double misfit(const std::array<Cubic, 2>& c, double f, const Target& t) {
  const double e1 = wrap_angle(eval_cubic(c[0], f) - t.d1);
  const double e2 = wrap_angle(eval_cubic(c[1], f) - t.d2);
  return e1 * e1 + e2 * e2;
}

struct Point {
  double f, l, r;
};

// Coordinate search with step halving, clamped to the calibrated box.
Point refine(const SensorModel& m, Point p, const Target& t, const InvertOptions& o) {
  double sf = o.force_step_n, sl = o.location_step_mm;
  const double fmin = m.force_min_n, fmax = m.force_max_n;
  const double lmin = m.location_min(), lmax = m.location_max();
  for (int iter = 0; iter < 100000 && (sf >= o.tolerance || sl >= o.tolerance); ++iter) {
    Point best = p;
    const double moves[4][2] = {{sf, 0}, {-sf, 0}, {0, sl}, {0, -sl}};
    for (const auto& mv : moves) {
      const double f = std::clamp(p.f + mv[0], fmin, fmax);
      const double l = std::clamp(p.l + mv[1], lmin, lmax);
      const double r = misfit(model_coefficients(m, l), f, t);
      if (r < best.r) best = Point{f, l, r};
    }
    if (best.r < p.r) {
      p = best;
    } else {
      sf *= 0.5;
      sl *= 0.5;
    }
  }
  return p;
}

}  // namespace

Estimate invert(const SensorModel& model, double phi1, double phi2, const InvertOptions& opts) {
  if (model.fits.size() < 2) throw std::invalid_argument("sensor model needs at least two locations");
  const Target t{phi1 - model.no_touch.phi1, phi2 - model.no_touch.phi2};

  const double fmin = model.force_min_n, fmax = model.force_max_n;
  const double lmin = model.location_min(), lmax = model.location_max();
  const auto nf = static_cast<std::size_t>(std::floor((fmax - fmin) / opts.force_step_n + 1e-9)) + 1;
  const auto nl = static_cast<std::size_t>(std::floor((lmax - lmin) / opts.location_step_mm + 1e-9)) + 1;

  std::vector<Point> grid;
  grid.reserve(nf * nl);
  for (std::size_t j = 0; j < nl; ++j) {
    const double l = std::min(lmin + static_cast<double>(j) * opts.location_step_mm, lmax);
    const auto c = model_coefficients(model, l);
    for (std::size_t i = 0; i < nf; ++i) {
      const double f = std::min(fmin + static_cast<double>(i) * opts.force_step_n, fmax);
      grid.push_back(Point{f, l, misfit(c, f, t)});
    }
  }
  std::sort(grid.begin(), grid.end(), [](const Point& a, const Point& b) { return a.r < b.r; });

  // Seed refinement from the best grid points that sit in separate basins.
  std::vector<Point> seeds;
  const double sep_f = 5.0 * opts.force_step_n, sep_l = 5.0 * opts.location_step_mm;
  for (const auto& p : grid) {
    if (seeds.size() >= std::max<std::size_t>(opts.refine_candidates, 1)) break;
    bool far = true;
    for (const auto& s : seeds)
      if (std::abs(s.f - p.f) < sep_f && std::abs(s.l - p.l) < sep_l) far = false;
    if (far) seeds.push_back(p);
  }

  Point best{0, 0, std::numeric_limits<double>::infinity()};
  for (const auto& s : seeds) {
    const auto p = refine(model, s, t, opts);
    if (p.r < best.r) best = p;
  }
  Estimate e;
  e.force_n = best.f;
  e.location_mm = best.l;
  e.residual = best.r;
  e.in_range = best.r <= opts.residual_threshold;
  return e;
}

}  // namespace bsforce
