#include "logseg/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "logseg/error.hpp"

namespace logseg {
namespace {

constexpr double kPi = std::numbers::pi;

double poly2(const std::array<double, 3>& c, double x) noexcept { return c[0] + x * (c[1] + x * c[2]); }

// A fraction is the model's share of the finished cloud: 0.2 on 8000 surface
// points gives 2000 outliers.
std::size_t outlier_count(double fraction, std::size_t n_surface) {
  return static_cast<std::size_t>(std::llround(fraction / (1.0 - fraction) * static_cast<double>(n_surface)));
}

struct Bump {
  double x;
  double theta;
};

}  // namespace

double ellipse_factor(double theta, double ellipticity) noexcept {
  const double a = std::sqrt(ellipticity);
  const double b = 1.0 / a;
  return a * b / std::hypot(b * std::cos(theta), a * std::sin(theta));
}

void SyntheticLogSpec::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidSpec, what); };
  if (n_surface < 1) fail("n_surface must be positive");
  if (!(length > 0.0)) fail("length must be positive");
  if (!(base_radius > 0.0)) fail("base_radius must be positive");
  if (!(base_radius - taper_rate * length > 0.0)) {
    fail("radius must stay positive along the log (base_radius - taper_rate * length > 0)");
  }
  if (!(ellipticity >= 1.0)) fail("ellipticity must be >= 1");
  if (!(roughness_amp >= 0.0)) fail("roughness_amp must be >= 0");
  if (bump_count > 0 && !(bump_width > 0.0)) fail("bump_width must be positive");
  if (!(angular_coverage_deg > 0.0 && angular_coverage_deg <= 360.0)) {
    fail("angular_coverage_deg must be in (0, 360]");
  }
  for (const auto& a : ambient) {
    if (!(a.fraction >= 0.0 && a.fraction < 1.0)) fail("ambient fraction must be in [0, 1)");
    if (!(a.inflation >= 0.0)) fail("ambient inflation must be >= 0");
    if (!(a.min_radius_factor >= 1.0)) fail("ambient min_radius_factor must be >= 1");
  }
  for (const auto& r : railing) {
    if (!(r.period > 0.0)) fail("railing period must be positive");
    if (!(r.offset >= 0.0) || !(r.extent >= 0.0) || !(r.half_width >= 0.0)) {
      fail("railing offset, extent and half_width must be >= 0");
    }
  }
  for (const auto& s : near_surface) {
    if (!(s.fraction >= 0.0 && s.fraction < 1.0)) fail("near-surface fraction must be in [0, 1)");
    if (!(s.delta > 0.0)) fail("near-surface delta must be positive");
  }
}

SyntheticLog generate(const SyntheticLogSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double coverage = spec.angular_coverage_deg * kPi / 180.0;
  auto sample_theta = [&] { return kPi / 2.0 + (unit(rng) - 0.5) * coverage; };
  auto centre = [&](double x) { return Vec2{poly2(spec.centreline_y, x), poly2(spec.centreline_z, x)}; };
  // Clamped so extrapolation past the ends cannot flip the radius sign.
  auto radius = [&](double x, double theta) {
    const double xc = std::clamp(x, 0.0, spec.length);
    return spec.radius_at(xc) * ellipse_factor(theta, spec.ellipticity);
  };

  std::vector<Bump> bumps;
  for (std::size_t b = 0; b < spec.bump_count; ++b) {
    const double x = unit(rng) * spec.length;
    bumps.push_back({x, sample_theta()});
  }

  SyntheticLog out;
  out.cloud.id = spec.id;
  auto& pts = out.cloud.points;
  std::vector<bool> labels;
  auto emit = [&](double x, double theta, double r, bool inlier) {
    const Vec2 c = centre(x);
    pts.push_back({x, c.y + r * std::cos(theta), c.z + r * std::sin(theta)});
    labels.push_back(inlier);
    out.theta.push_back(inlier ? theta : std::numeric_limits<double>::quiet_NaN());
  };

  for (std::size_t i = 0; i < spec.n_surface; ++i) {
    const double x = unit(rng) * spec.length;
    const double theta = sample_theta();
    double r = radius(x, theta);
    if (spec.roughness_amp > 0.0) r += (2.0 * unit(rng) - 1.0) * spec.roughness_amp;
    for (const Bump& b : bumps) {
      double dtheta = std::remainder(theta - b.theta, 2.0 * kPi);
      const double dx = x - b.x;
      const double arc = spec.base_radius * dtheta;
      r += spec.bump_amp * std::exp(-(dx * dx + arc * arc) / (2.0 * spec.bump_width * spec.bump_width));
    }
    emit(x, theta, r, true);
  }

  double y_lo = std::numeric_limits<double>::infinity(), y_hi = -y_lo;
  double z_lo = y_lo, z_hi = -y_lo;
  for (const Vec3& p : pts) {
    y_lo = std::min(y_lo, p.y);
    y_hi = std::max(y_hi, p.y);
    z_lo = std::min(z_lo, p.z);
    z_hi = std::max(z_hi, p.z);
  }

  for (const AmbientOutliers& a : spec.ambient) {
    const std::size_t count = outlier_count(a.fraction, spec.n_surface);
    const double pad = a.inflation * spec.base_radius;
    std::size_t made = 0;
    std::size_t attempts = 0;
    while (made < count) {
      if (++attempts > 1000 * (count + 1)) {
        throw Error(ErrorKind::InvalidSpec, "ambient outliers: inflated box leaves no room beyond min_radius_factor");
      }
      const double x = -pad + unit(rng) * (spec.length + 2.0 * pad);
      const double y = y_lo - pad + unit(rng) * (y_hi - y_lo + 2.0 * pad);
      const double z = z_lo - pad + unit(rng) * (z_hi - z_lo + 2.0 * pad);
      const Vec2 c = centre(x);
      const double theta = std::atan2(z - c.z, y - c.y);
      const double dist = std::hypot(y - c.y, z - c.z);
      if (dist < a.min_radius_factor * radius(x, theta)) continue;
      pts.push_back({x, y, z});
      labels.push_back(false);
      out.theta.push_back(std::numeric_limits<double>::quiet_NaN());
      ++made;
    }
  }

  for (const RailingOutliers& rail : spec.railing) {
    for (double xc = 0.0; xc <= spec.length + 1e-12; xc += rail.period) {
      for (std::size_t j = 0; j < rail.cluster_size; ++j) {
        const double x = xc + (2.0 * unit(rng) - 1.0) * rail.half_width;
        const Vec2 c = centre(x);
        const double bottom = c.z - radius(x, -kPi / 2.0);
        pts.push_back({x, c.y + (2.0 * unit(rng) - 1.0) * rail.half_width,
                       bottom - rail.offset - unit(rng) * rail.extent});
        labels.push_back(false);
        out.theta.push_back(std::numeric_limits<double>::quiet_NaN());
      }
    }
  }

  for (const NearSurfaceOutliers& s : spec.near_surface) {
    const std::size_t count = outlier_count(s.fraction, spec.n_surface);
    for (std::size_t j = 0; j < count; ++j) {
      const double x = unit(rng) * spec.length;
      const double theta = sample_theta();
      emit(x, theta, radius(x, theta) * (1.0 + s.delta), false);
    }
  }

  out.cloud.labels = std::move(labels);
  out.centreline.degree = 2;
  out.centreline.coeffs_y.assign(spec.centreline_y.begin(), spec.centreline_y.end());
  out.centreline.coeffs_z.assign(spec.centreline_z.begin(), spec.centreline_z.end());
  return out;
}

const char* to_string(OutlierKind kind) noexcept {
  switch (kind) {
    case OutlierKind::None: return "none";
    case OutlierKind::Ambient: return "ambient";
    case OutlierKind::Railing: return "railing";
    case OutlierKind::NearSurface: return "near_surface";
  }
  return "?";
}

std::vector<SuiteEntry> default_suite(std::size_t n_surface) {
  std::vector<SuiteEntry> suite;
  for (int i = 0; i < 20; ++i) {
    SuiteEntry e;
    e.outliers = static_cast<OutlierKind>(i % 4);
    e.tapered = (i / 4) % 2 == 1;
    const bool elliptic = ((i % 4) + i / 4) % 2 == 1;
    e.curved = ((i / 8) + (i % 4 >= 2 ? 1 : 0)) % 2 == 1;

    SyntheticLogSpec& s = e.spec;
    s.id = "suite_" + std::string(i < 10 ? "0" : "") + std::to_string(i);
    s.seed = static_cast<std::uint64_t>(i);
    s.n_surface = n_surface;
    s.length = 4.0;
    s.base_radius = 1.0;
    s.taper_rate = e.tapered ? 0.1 : 0.0;
    s.ellipticity = elliptic ? 1.3 : 1.0;
    if (e.curved) {
      // Bow of 0.3 radii in y and 0.15 in z at mid-length.
      s.centreline_y = {0.0, -0.3, 0.075};
      s.centreline_z = {0.0, -0.15, 0.0375};
    }
    s.roughness_amp = 0.01;
    s.bump_count = 6;
    s.bump_amp = 0.03;
    s.bump_width = 0.15;
    switch (e.outliers) {
      case OutlierKind::None: break;
      case OutlierKind::Ambient: s.ambient.push_back({0.2, 1.5, 1.5}); break;
      case OutlierKind::Railing: s.railing.push_back({0.5, 0.5, 40, 0.3, 0.05}); break;
      case OutlierKind::NearSurface: s.near_surface.push_back({0.05, 0.05}); break;
    }
    suite.push_back(std::move(e));
  }
  return suite;
}

}  // namespace logseg
