#include "fcmurp/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace fcmurp::io {

using nlohmann::json;

namespace fs = std::filesystem;

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ArtifactError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw ArtifactError("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.size(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& rows) {
  Matrix m(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size()) throw ArtifactError("matrix is not square");
    for (std::size_t j = 0; j < rows.size(); ++j) m(i, j) = rows[i][j].get<double>();
  }
  return m;
}

json open_document(const char* kind) { return json{{"format_version", kFormatVersion}, {"kind", kind}}; }

json parse_document(const std::string& text, const char* kind) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ArtifactError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("kind", "") != kind) {
    throw ArtifactError(std::string("expected a '") + kind + "' document");
  }
  if (doc.value("format_version", 0) != kFormatVersion) throw ArtifactError("unsupported format_version");
  return doc;
}

/// Wraps json access errors as artifact errors.
template <class Fn>
auto guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw ArtifactError(std::string("invalid document: ") + e.what());
  }
}

json routes_to_json(const RouteSet& rs) { return json(rs.routes); }

RouteSet routes_from_json(const json& j) {
  RouteSet rs;
  rs.routes = j.get<std::vector<RouteSeq>>();
  return rs;
}

json estimate_to_json(const BoundEstimate& e, bool with_values) {
  json j{{"mean", e.mean},
         {"dispersion", e.dispersion},
         {"standard_error", e.standard_error},
         {"rigorous", e.rigorous},
         {"lambda_tag", e.lambda_tag},
         {"count", e.count}};
  if (with_values) j["values"] = e.values;
  return j;
}

BoundEstimate estimate_from_json(const json& j) {
  BoundEstimate e;
  e.mean = j.at("mean").get<double>();
  e.dispersion = j.at("dispersion").get<double>();
  e.standard_error = j.at("standard_error").get<double>();
  e.rigorous = j.at("rigorous").get<bool>();
  e.lambda_tag = j.at("lambda_tag").get<std::string>();
  e.count = j.at("count").get<std::size_t>();
  if (j.contains("values")) e.values = j.at("values").get<std::vector<double>>();
  return e;
}

template <class T>
void put_optional(json& doc, const char* key, const std::optional<T>& v) {
  if (v) {
    doc[key] = *v;
  } else {
    doc[key] = nullptr;
  }
}

template <class T>
std::optional<T> get_optional(const json& doc, const char* key) {
  if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
  return doc.at(key).get<T>();
}

}  // namespace

std::string instance_to_json(const Instance& instance) {
  const auto& d = instance.data();
  json doc = open_document("instance");
  doc["vehicles"] = d.vehicles;
  doc["fuel_capacity"] = d.fuel_capacity;
  doc["lambda"] = d.lambda;
  doc["home_depot"] = d.home_depot;
  doc["refuel_depots"] = d.refuel_depots;
  doc["targets"] = d.targets;
  json coords = json::array();
  for (const auto& p : d.coordinates) coords.push_back({p.x, p.y});
  doc["coordinates"] = std::move(coords);
  doc["cost"] = matrix_to_json(d.cost);
  doc["nominal_fuel"] = matrix_to_json(d.nominal_fuel);
  return doc.dump(1) + "\n";
}

Instance instance_from_json(const std::string& text) {
  const json doc = parse_document(text, "instance");
  return guarded([&] {
    InstanceData d;
    d.vehicles = doc.at("vehicles").get<std::size_t>();
    d.fuel_capacity = doc.at("fuel_capacity").get<double>();
    d.lambda = doc.at("lambda").get<double>();
    d.home_depot = doc.at("home_depot").get<VertexId>();
    d.refuel_depots = doc.at("refuel_depots").get<std::vector<VertexId>>();
    d.targets = doc.at("targets").get<std::vector<VertexId>>();
    for (const auto& p : doc.at("coordinates")) d.coordinates.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    d.cost = matrix_from_json(doc.at("cost"));
    d.nominal_fuel = matrix_from_json(doc.at("nominal_fuel"));
    try {
      return Instance(std::move(d));
    } catch (const StructuralError& e) {
      throw ArtifactError(e.what());
    }
  });
}

std::string quadrants_to_json(const QuadrantDocument& q) {
  json doc = open_document("quadrants");
  doc["grid"] = q.map.grid;
  json quads = json::array();
  for (auto l : q.map.quadrants) quads.push_back(to_string(l));
  doc["quadrants"] = std::move(quads);
  json labels = json::array();
  for (auto l : q.map.vertex_labels) labels.push_back(to_string(l));
  doc["vertex_labels"] = std::move(labels);
  doc["distribution"] = q.distribution.kind == FuelDistribution::Kind::gamma ? "gamma" : "point_mass";
  doc["gamma_shape"] = q.distribution.shape;
  doc["gamma_scale_ratio"] = q.distribution.scale_ratio;
  return doc.dump(1) + "\n";
}

QuadrantDocument quadrants_from_json(const std::string& text) {
  const json doc = parse_document(text, "quadrants");
  return guarded([&] {
    QuadrantDocument q;
    q.map.grid = doc.at("grid").get<double>();
    const auto& quads = doc.at("quadrants");
    if (quads.size() != 4) throw ArtifactError("expected four quadrant labels");
    try {
      for (std::size_t k = 0; k < 4; ++k) q.map.quadrants[k] = quadrant_label_from_string(quads[k].get<std::string>());
      for (const auto& l : doc.at("vertex_labels")) {
        q.map.vertex_labels.push_back(quadrant_label_from_string(l.get<std::string>()));
      }
    } catch (const std::invalid_argument& e) {
      throw ArtifactError(e.what());
    }
    const auto kind = doc.at("distribution").get<std::string>();
    if (kind != "gamma" && kind != "point_mass") throw ArtifactError("unknown distribution " + kind);
    q.distribution.kind = kind == "gamma" ? FuelDistribution::Kind::gamma : FuelDistribution::Kind::point_mass;
    q.distribution.shape = doc.at("gamma_shape").get<double>();
    q.distribution.scale_ratio = doc.at("gamma_scale_ratio").get<double>();
    return q;
  });
}

std::string scenarios_to_json(const ScenarioSet& set) {
  json doc = open_document("scenarios");
  doc["tag"] = set.tag;
  json list = json::array();
  for (const auto& s : set.scenarios) {
    list.push_back({{"id", s.id}, {"probability", s.probability}, {"fuel", matrix_to_json(s.fuel)}});
  }
  doc["scenarios"] = std::move(list);
  return doc.dump() + "\n";
}

ScenarioSet scenarios_from_json(const std::string& text) {
  const json doc = parse_document(text, "scenarios");
  return guarded([&] {
    ScenarioSet set;
    set.tag = doc.at("tag").get<std::string>();
    for (const auto& s : doc.at("scenarios")) {
      set.scenarios.push_back(
          {s.at("id").get<std::size_t>(), s.at("probability").get<double>(), matrix_from_json(s.at("fuel"))});
    }
    return set;
  });
}

std::string solution_to_json(const RouteSet& routes, double cost) {
  json doc = open_document("solution");
  doc["routes"] = routes_to_json(routes);
  doc["cost"] = cost;
  return doc.dump(1) + "\n";
}

RouteSet solution_from_json(const std::string& text) {
  const json doc = parse_document(text, "solution");
  return guarded([&] { return routes_from_json(doc.at("routes")); });
}

std::string report_to_json(const SaaReport& r) {
  json doc = open_document("report");
  doc["instance"] = r.instance_name;
  put_optional(doc, "EV", r.ev);
  auto put_est = [&](const char* key, const std::optional<BoundEstimate>& e, bool with_values) {
    if (e) {
      doc[key] = estimate_to_json(*e, with_values);
    } else {
      doc[key] = nullptr;
    }
  };
  put_est("EEV", r.eev, false);
  put_est("LB", r.lb, true);
  put_est("UB", r.ub, false);
  put_est("H", r.h, false);
  put_optional(doc, "VSS", r.vss);
  put_optional(doc, "VSS_pct", r.vss_pct);
  doc["evp_routes"] = r.evp_routes ? routes_to_json(*r.evp_routes) : json(nullptr);
  doc["x_star"] = r.x_star ? routes_to_json(*r.x_star) : json(nullptr);
  doc["lambda_tag"] = r.lambda_tag;
  doc["nu"] = r.nu;
  doc["penalized_scenarios"] = {{"EEV", r.eev_infeasible}, {"UB", r.ub_infeasible}, {"H", r.h_infeasible}};
  doc["heuristic_warnings"] = r.heuristic_warnings;
  return doc.dump(1) + "\n";
}

SaaReport report_from_json(const std::string& text) {
  const json doc = parse_document(text, "report");
  return guarded([&] {
    SaaReport r;
    r.instance_name = doc.at("instance").get<std::string>();
    r.ev = get_optional<double>(doc, "EV");
    auto get_est = [&](const char* key) -> std::optional<BoundEstimate> {
      if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
      return estimate_from_json(doc.at(key));
    };
    r.eev = get_est("EEV");
    r.lb = get_est("LB");
    r.ub = get_est("UB");
    r.h = get_est("H");
    r.vss = get_optional<double>(doc, "VSS");
    r.vss_pct = get_optional<double>(doc, "VSS_pct");
    if (!doc.at("evp_routes").is_null()) r.evp_routes = routes_from_json(doc.at("evp_routes"));
    if (!doc.at("x_star").is_null()) r.x_star = routes_from_json(doc.at("x_star"));
    r.lambda_tag = doc.at("lambda_tag").get<std::string>();
    r.nu = doc.at("nu").get<double>();
    const auto& pen = doc.at("penalized_scenarios");
    r.eev_infeasible = pen.at("EEV").get<std::size_t>();
    r.ub_infeasible = pen.at("UB").get<std::size_t>();
    r.h_infeasible = pen.at("H").get<std::size_t>();
    r.heuristic_warnings = doc.at("heuristic_warnings").get<std::size_t>();
    return r;
  });
}

SaaReport merge_reports(const SaaReport& base, const SaaReport& extra) {
  if (base.lambda_tag != extra.lambda_tag) throw ArtifactError("reports were evaluated on different samples");
  SaaReport out = base;
  if (!out.ev) out.ev = extra.ev;
  if (!out.eev) {
    out.eev = extra.eev;
    out.eev_infeasible = extra.eev_infeasible;
  }
  if (!out.evp_routes) out.evp_routes = extra.evp_routes;
  if (!out.lb) out.lb = extra.lb;
  if (!out.ub) {
    out.ub = extra.ub;
    out.ub_infeasible = extra.ub_infeasible;
  }
  if (!out.h) {
    out.h = extra.h;
    out.h_infeasible = extra.h_infeasible;
    out.heuristic_warnings += extra.heuristic_warnings;
  }
  if (extra.x_star) {
    const auto value_of = [](const SaaReport& r) {
      double v = std::numeric_limits<double>::infinity();
      if (r.ub) v = std::min(v, r.ub->mean);
      if (r.h) v = std::min(v, r.h->mean);
      return v;
    };
    if (!out.x_star || value_of(extra) < value_of(base)) out.x_star = extra.x_star;
  }
  if (out.eev && (out.ub || out.h)) {
    try {
      const auto v = compute_vss(out);
      out.vss = v.value;
      out.vss_pct = v.percent;
    } catch (const std::invalid_argument& e) {
      throw ArtifactError(e.what());
    }
  }
  return out;
}

namespace {

std::string num(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

std::string est_cols(const std::optional<BoundEstimate>& e) {
  if (!e) return ",";
  return num(e->mean) + "," + num(std::sqrt(e->dispersion));
}

std::string fixed2(double v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(2) << v;
  return ss.str();
}

std::string est_cell(const std::optional<BoundEstimate>& e) {
  if (!e) return "-";
  return fixed2(e->mean) + " (" + fixed2(std::sqrt(e->dispersion)) + ")";
}

}  // namespace

std::string csv_header() { return "instance,EV,EEV,EEV_sd,LB,LB_sd,UB,UB_sd,H,H_sd,VSS,VSS_pct"; }

std::string csv_row(const SaaReport& r) {
  return r.instance_name + "," + opt_num(r.ev) + "," + est_cols(r.eev) + "," + est_cols(r.lb) + "," +
         est_cols(r.ub) + "," + est_cols(r.h) + "," + opt_num(r.vss) + "," + opt_num(r.vss_pct);
}

std::string text_table(const std::vector<SaaReport>& reports) {
  std::vector<std::vector<std::string>> rows{{"instance", "EV", "EEV", "LB-SAA", "UB-SAA", "H", "VSS", "VSS%"}};
  for (const auto& r : reports) {
    rows.push_back({r.instance_name, r.ev ? fixed2(*r.ev) : "-", est_cell(r.eev), est_cell(r.lb), est_cell(r.ub),
                    est_cell(r.h), r.vss ? fixed2(*r.vss) : "-", r.vss_pct ? fixed2(*r.vss_pct) : "-"});
  }
  std::vector<std::size_t> width(rows[0].size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << "  ";
      out << std::setw(static_cast<int>(width[c])) << (c == 0 ? std::left : std::right) << row[c];
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace fcmurp::io
