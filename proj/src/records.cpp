#include "logseg/records.hpp"

#include <set>

#include "logseg/error.hpp"

namespace logseg {
namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorKind::ParseError, what); }

void require_object(const json& j, const char* what) {
  if (!j.is_object()) bad(std::string(what) + " must be a JSON object");
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* what) {
  const std::set<std::string> names(known.begin(), known.end());
  for (const auto& [key, value] : j.items()) {
    if (!names.count(key)) bad(std::string(what) + ": unknown key '" + key + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    bad(std::string("key '") + key + "': " + e.what());
  }
}

const char* to_string(ScaleMode m) { return m == ScaleMode::SharedRadial ? "shared_radial" : "single_global"; }

ScaleMode scale_mode_from(const std::string& s) {
  if (s == "shared_radial") return ScaleMode::SharedRadial;
  if (s == "single_global") return ScaleMode::SingleGlobal;
  bad("unknown scale mode '" + s + "'");
}

}  // namespace

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    bad(what + ": " + e.what());
  }
}

json to_json(const NormalizationRecord& r) {
  return {{"medians", r.medians},
          {"s_r", r.s_r},
          {"s_x", r.s_x},
          {"rotation", r.rotation},
          {"scale_mode", to_string(r.mode)}};
}

NormalizationRecord normalization_from_json(const json& j) {
  require_object(j, "normalization record");
  reject_unknown(j, {"medians", "s_r", "s_x", "rotation", "scale_mode"}, "normalization record");
  for (const char* key : {"medians", "s_r", "s_x", "rotation"}) {
    if (!j.contains(key)) throw Error(ErrorKind::MissingProperty, std::string("normalization record lacks '") + key + "'");
  }
  NormalizationRecord r;
  read(j, "medians", r.medians);
  read(j, "s_r", r.s_r);
  read(j, "s_x", r.s_x);
  read(j, "rotation", r.rotation);
  std::string mode = to_string(r.mode);
  read(j, "scale_mode", mode);
  r.mode = scale_mode_from(mode);
  return r;
}

json to_json(const LossWeights& w) {
  return {{"fit", w.fit},     {"rho", w.rho},       {"sigma", w.sigma},
          {"plane", w.plane}, {"normal", w.normal}, {"weights", w.weights}};
}

LossWeights loss_weights_from_json(const json& j, LossWeights base) {
  require_object(j, "loss weights");
  reject_unknown(j, {"fit", "rho", "sigma", "plane", "normal", "weights"}, "loss weights");
  read(j, "fit", base.fit);
  read(j, "rho", base.rho);
  read(j, "sigma", base.sigma);
  read(j, "plane", base.plane);
  read(j, "normal", base.normal);
  read(j, "weights", base.weights);
  return base;
}

json to_json(const OptimizerConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"max_steps", c.max_steps},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"adam_eps", c.adam_eps},
          {"convergence_window", c.convergence_window},
          {"convergence_tol", c.convergence_tol},
          {"subsample_fraction", c.subsample_fraction},
          {"batches_along_x", c.batches_along_x},
          {"seed", c.seed},
          {"threshold", c.threshold},
          {"degree", c.degree},
          {"k", c.k}};
}

OptimizerConfig optimizer_config_from_json(const json& j, OptimizerConfig c) {
  require_object(j, "optimizer config");
  reject_unknown(j,
                 {"learning_rate", "max_steps", "adam_beta1", "adam_beta2", "adam_eps", "convergence_window",
                  "convergence_tol", "subsample_fraction", "batches_along_x", "seed", "threshold", "degree", "k"},
                 "optimizer config");
  read(j, "learning_rate", c.learning_rate);
  read(j, "max_steps", c.max_steps);
  read(j, "adam_beta1", c.adam_beta1);
  read(j, "adam_beta2", c.adam_beta2);
  read(j, "adam_eps", c.adam_eps);
  read(j, "convergence_window", c.convergence_window);
  read(j, "convergence_tol", c.convergence_tol);
  read(j, "subsample_fraction", c.subsample_fraction);
  read(j, "batches_along_x", c.batches_along_x);
  read(j, "seed", c.seed);
  read(j, "threshold", c.threshold);
  read(j, "degree", c.degree);
  read(j, "k", c.k);
  return c;
}

json to_json(const BaselineConfig& c) {
  return {{"slice_width", c.slice_width},
          {"eps", c.eps},
          {"min_pts", c.min_pts},
          {"dist_threshold", c.dist_threshold},
          {"cluster", c.choice == ClusterChoice::Largest ? "largest" : "highest_core_density"}};
}

BaselineConfig baseline_config_from_json(const json& j, BaselineConfig c) {
  require_object(j, "baseline config");
  reject_unknown(j, {"slice_width", "eps", "min_pts", "dist_threshold", "cluster"}, "baseline config");
  read(j, "slice_width", c.slice_width);
  read(j, "eps", c.eps);
  read(j, "min_pts", c.min_pts);
  read(j, "dist_threshold", c.dist_threshold);
  if (j.contains("cluster")) {
    std::string s;
    read(j, "cluster", s);
    if (s == "largest") {
      c.choice = ClusterChoice::Largest;
    } else if (s == "highest_core_density") {
      c.choice = ClusterChoice::HighestCoreDensity;
    } else {
      bad("unknown cluster choice '" + s + "'");
    }
  }
  return c;
}

json to_json(const SyntheticLogSpec& s) {
  json ambient = json::array(), railing = json::array(), near = json::array();
  for (const auto& a : s.ambient) {
    ambient.push_back({{"fraction", a.fraction}, {"inflation", a.inflation}, {"min_radius_factor", a.min_radius_factor}});
  }
  for (const auto& r : s.railing) {
    railing.push_back({{"period", r.period},
                       {"offset", r.offset},
                       {"cluster_size", r.cluster_size},
                       {"extent", r.extent},
                       {"half_width", r.half_width}});
  }
  for (const auto& n : s.near_surface) near.push_back({{"fraction", n.fraction}, {"delta", n.delta}});
  return {{"id", s.id},
          {"n_surface", s.n_surface},
          {"length", s.length},
          {"base_radius", s.base_radius},
          {"taper_rate", s.taper_rate},
          {"centreline_y", s.centreline_y},
          {"centreline_z", s.centreline_z},
          {"ellipticity", s.ellipticity},
          {"roughness_amp", s.roughness_amp},
          {"bump_count", s.bump_count},
          {"bump_amp", s.bump_amp},
          {"bump_width", s.bump_width},
          {"angular_coverage_deg", s.angular_coverage_deg},
          {"outliers", {{"ambient", ambient}, {"railing", railing}, {"near_surface", near}}},
          {"seed", s.seed}};
}

SyntheticLogSpec synthetic_spec_from_json(const json& j) {
  require_object(j, "synthetic spec");
  reject_unknown(j,
                 {"id", "n_surface", "length", "base_radius", "taper_rate", "centreline_y", "centreline_z",
                  "ellipticity", "roughness_amp", "bump_count", "bump_amp", "bump_width", "angular_coverage_deg",
                  "outliers", "seed"},
                 "synthetic spec");
  SyntheticLogSpec s;
  read(j, "id", s.id);
  read(j, "n_surface", s.n_surface);
  read(j, "length", s.length);
  read(j, "base_radius", s.base_radius);
  read(j, "taper_rate", s.taper_rate);
  read(j, "centreline_y", s.centreline_y);
  read(j, "centreline_z", s.centreline_z);
  read(j, "ellipticity", s.ellipticity);
  read(j, "roughness_amp", s.roughness_amp);
  read(j, "bump_count", s.bump_count);
  read(j, "bump_amp", s.bump_amp);
  read(j, "bump_width", s.bump_width);
  read(j, "angular_coverage_deg", s.angular_coverage_deg);
  read(j, "seed", s.seed);
  if (j.contains("outliers")) {
    const json& o = j.at("outliers");
    require_object(o, "outliers");
    reject_unknown(o, {"ambient", "railing", "near_surface"}, "outliers");
    auto each = [&](const char* key, auto&& fn) {
      if (!o.contains(key)) return;
      if (!o.at(key).is_array()) bad(std::string("outliers.") + key + " must be an array");
      for (const json& m : o.at(key)) {
        require_object(m, key);
        fn(m);
      }
    };
    each("ambient", [&](const json& m) {
      reject_unknown(m, {"fraction", "inflation", "min_radius_factor"}, "ambient");
      AmbientOutliers a;
      read(m, "fraction", a.fraction);
      read(m, "inflation", a.inflation);
      read(m, "min_radius_factor", a.min_radius_factor);
      s.ambient.push_back(a);
    });
    each("railing", [&](const json& m) {
      reject_unknown(m, {"period", "offset", "cluster_size", "extent", "half_width"}, "railing");
      RailingOutliers r;
      read(m, "period", r.period);
      read(m, "offset", r.offset);
      read(m, "cluster_size", r.cluster_size);
      read(m, "extent", r.extent);
      read(m, "half_width", r.half_width);
      s.railing.push_back(r);
    });
    each("near_surface", [&](const json& m) {
      reject_unknown(m, {"fraction", "delta"}, "near_surface");
      NearSurfaceOutliers n;
      read(m, "fraction", n.fraction);
      read(m, "delta", n.delta);
      s.near_surface.push_back(n);
    });
  }
  return s;
}

json to_json(const Metrics& m) {
  return {{"tp", m.tp},
          {"fp", m.fp},
          {"fn", m.fn},
          {"tn", m.tn},
          {"precision", m.precision},
          {"recall", m.recall},
          {"iou", m.iou},
          {"precision_undefined", m.precision_undefined},
          {"recall_undefined", m.recall_undefined},
          {"iou_undefined", m.iou_undefined}};
}

namespace {

json mean_json(const MeanMetrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"iou", m.iou}, {"clouds", m.clouds}};
}

}  // namespace

json to_json(const EvalReport& r) {
  json clouds = json::array();
  for (const auto& c : r.per_cloud) {
    json e = to_json(c.metrics);
    e["id"] = c.id;
    e["group"] = c.group;
    clouds.push_back(e);
  }
  json groups = json::object();
  for (const auto& [name, mean] : r.by_group) groups[name] = mean_json(mean);
  return {{"overall", mean_json(r.overall)}, {"groups", groups}, {"clouds", clouds}};
}

json to_json(const std::vector<AblationRow>& rows) {
  json out = json::array();
  for (const auto& row : rows) {
    out.push_back({{"deviation", row.terms.deviation},
                   {"plane", row.terms.plane},
                   {"normal", row.terms.normal},
                   {"label", row.terms.label()},
                   {"mean", mean_json(row.mean)},
                   {"seconds", row.seconds}});
  }
  return out;
}

}  // namespace logseg
