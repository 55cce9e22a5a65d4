#include "vrbound/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "vrbound/concentration.hpp"
#include "vrbound/stats.hpp"

namespace vrbound {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void schema_error(const std::string& msg) {
  throw ExperimentError(ExitCode::Schema, msg);
}

void check_keys(const Json& obj, const std::string& where,
                const std::vector<std::string>& required,
                const std::vector<std::string>& optional = {}) {
  if (!obj.is_object()) schema_error(where + ": expected an object");
  for (const auto& k : required)
    if (!obj.contains(k)) schema_error(where + ": missing field '" + k + "'");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const bool known =
        std::find(required.begin(), required.end(), it.key()) != required.end() ||
        std::find(optional.begin(), optional.end(), it.key()) != optional.end();
    if (!known) schema_error(where + ": unknown field '" + it.key() + "'");
  }
}

double get_number(const Json& obj, const std::string& key, const std::string& where) {
  const Json& v = obj.at(key);
  if (!v.is_number()) schema_error(where + "." + key + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) schema_error(where + "." + key + ": must be finite");
  return x;
}

std::int64_t get_int(const Json& obj, const std::string& key, const std::string& where) {
  const Json& v = obj.at(key);
  if (!v.is_number_integer()) schema_error(where + "." + key + ": expected an integer");
  return v.get<std::int64_t>();
}

std::string get_string(const Json& obj, const std::string& key, const std::string& where) {
  const Json& v = obj.at(key);
  if (!v.is_string()) schema_error(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

Vec get_vector(const Json& obj, const std::string& key, const std::string& where) {
  const Json& v = obj.at(key);
  if (!v.is_array() || v.empty())
    schema_error(where + "." + key + ": expected a nonempty array of numbers");
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) schema_error(where + "." + key + ": expected numbers");
    out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  return out;
}

std::string fmt(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

// ---------------------------------------------------------------- csv

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::vector<double> column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::logic_error("no column " + name);
    const auto j = static_cast<std::size_t>(it - header.begin());
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(std::stod(r[j]));
    return out;
  }
};

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

void write_csv(const fs::path& path, const Table& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ExperimentError(ExitCode::Runtime, "cannot write " + path.string());
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << csv_cell(cells[i]);
    out << "\r\n";
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
}

// ---------------------------------------------------------------- svg

struct Series {
  std::string name;
  std::vector<double> x, y;
};

void write_line_plot(const fs::path& path, const std::string& title, const std::string& xlabel,
                     const std::string& ylabel, const std::vector<Series>& series, bool logx,
                     bool logy) {
  const double W = 640, H = 420, ml = 70, mr = 20, mt = 40, mb = 50;
  auto tx = [&](double v) { return logx ? std::log10(v) : v; };
  auto ty = [&](double v) { return logy ? std::log10(v) : v; };
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if ((logx && !(s.x[i] > 0)) || (logy && !(s.y[i] > 0))) continue;
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  if (!(x0 <= x1 && y0 <= y1)) return;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double v) { return ml + (tx(v) - x0) / (x1 - x0) * (W - ml - mr); };
  auto py = [&](double v) { return H - mb - (ty(v) - y0) / (y1 - y0) * (H - mt - mb); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"};
  std::ofstream out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\">" << title << "</text>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
      << H - mb << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
      << "\" stroke=\"black\"/>\n";
  auto label = [](double v, bool lg) {
    std::ostringstream s;
    s << std::setprecision(3) << (lg ? std::pow(10.0, v) : v);
    return s.str();
  };
  for (int k = 0; k <= 4; ++k) {
    const double fx = x0 + (x1 - x0) * k / 4.0, fy = y0 + (y1 - y0) * k / 4.0;
    const double sx = ml + (W - ml - mr) * k / 4.0, sy = H - mb - (H - mt - mb) * k / 4.0;
    out << "<text x=\"" << sx << "\" y=\"" << H - mb + 16 << "\" text-anchor=\"middle\">"
        << label(fx, logx) << "</text>\n";
    out << "<text x=\"" << ml - 6 << "\" y=\"" << sy + 4 << "\" text-anchor=\"end\">"
        << label(fy, logy) << "</text>\n";
  }
  out << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xlabel
      << "</text>\n";
  out << "<text x=\"16\" y=\"" << H / 2 << "\" transform=\"rotate(-90 16 " << H / 2
      << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    out << "<polyline fill=\"none\" stroke=\"" << colors[k % 5] << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if ((logx && !(s.x[i] > 0)) || (logy && !(s.y[i] > 0))) continue;
      out << px(s.x[i]) << "," << py(s.y[i]) << " ";
    }
    out << "\"/>\n";
    out << "<text x=\"" << W - mr - 4 << "\" y=\"" << mt + 14 * (k + 1)
        << "\" text-anchor=\"end\" fill=\"" << colors[k % 5] << "\">" << s.name << "</text>\n";
  }
  out << "</svg>\n";
}

void write_bar_plot(const fs::path& path, const std::string& title,
                    const std::vector<std::pair<std::string, double>>& bars) {
  const double W = 480, H = 320, ml = 60, mb = 50, mt = 40;
  double top = 0.0;
  for (const auto& b : bars) top = std::max(top, b.second);
  if (!(top > 0.0)) top = 1.0;
  std::ofstream out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\">" << title << "</text>\n";
  const double slot = (W - ml - 20) / std::max<std::size_t>(1, bars.size());
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double h = bars[i].second / top * (H - mt - mb);
    const double x = ml + slot * i + slot * 0.15;
    out << "<rect x=\"" << x << "\" y=\"" << H - mb - h << "\" width=\"" << slot * 0.7
        << "\" height=\"" << h << "\" fill=\"#1f77b4\"/>\n";
    out << "<text x=\"" << x + slot * 0.35 << "\" y=\"" << H - mb + 16
        << "\" text-anchor=\"middle\">" << bars[i].first << "</text>\n";
    out << "<text x=\"" << x + slot * 0.35 << "\" y=\"" << H - mb - h - 4
        << "\" text-anchor=\"middle\">" << std::setprecision(3) << bars[i].second << "</text>\n";
  }
  out << "</svg>\n";
}

// ---------------------------------------------------------------- config pieces

GeometrySpec parse_geometry(const Json& g, int d) {
  const std::string where = "problem.geometry";
  if (!g.is_object() || !g.contains("kind")) schema_error(where + ": missing field 'kind'");
  const std::string kind = get_string(g, "kind", where);
  if (kind == "euclidean_free") {
    check_keys(g, where, {"kind"});
    return GeometrySpec::euclidean_free(d);
  }
  if (kind == "euclidean_box") {
    check_keys(g, where, {"kind", "lower", "upper"});
    const double lo = get_number(g, "lower", where), hi = get_number(g, "upper", where);
    if (!(lo < hi)) schema_error(where + ": lower must be below upper");
    return GeometrySpec::box(d, lo, hi);
  }
  if (kind == "simplex") {
    check_keys(g, where, {"kind"});
    if (d < 2) schema_error(where + ": simplex needs dimension >= 2");
    return GeometrySpec::simplex(d);
  }
  schema_error(where + ".kind: unknown geometry '" + kind + "'");
}

double parse_radius(const Json& p, const GeometrySpec& g) {
  const Json& r = p.at("radius");
  if (r.is_string()) {
    if (r.get<std::string>() != "auto") schema_error("problem.radius: number or \"auto\"");
    if (g.kind == GeometryKind::EuclideanFree)
      schema_error("problem.radius: \"auto\" needs a bounded geometry");
    return max_l2_norm(g);
  }
  const double v = get_number(p, "radius", "problem");
  if (!(v > 0.0)) schema_error("problem.radius: must be positive");
  return v;
}

void check_problem_schema(const Json& p) {
  if (!p.is_object() || !p.contains("kind")) schema_error("problem: missing field 'kind'");
  const std::string kind = get_string(p, "kind", "problem");
  if (kind == "noisy_quadratic")
    check_keys(p, "problem",
               {"kind", "dimension", "geometry", "eigen_min", "eigen_max", "matrix_seed",
                "noise_std", "additive_std", "radius", "start", "delta_f"});
  else if (kind == "finite_sum")
    check_keys(p, "problem",
               {"kind", "dimension", "geometry", "components", "eigen_min", "eigen_max",
                "offset_scale", "matrix_seed", "radius", "start", "delta_f"});
  else if (kind == "linear_gaussian")
    check_keys(p, "problem", {"kind", "dimension", "geometry", "covariance_diag", "radius",
                              "start"});
  else if (kind == "constrained_linear")
    check_keys(p, "problem", {"kind", "dimension", "geometry", "c", "a", "b",
                              "value_noise_std", "subgradient_noise"});
  else
    schema_error("problem.kind: unknown problem '" + kind + "'");
  const std::int64_t d = get_int(p, "dimension", "problem");
  if (d < 1 || d > 4096) schema_error("problem.dimension: must lie in [1, 4096]");
}

void check_estimator_schema(const Json& e) {
  check_keys(e, "estimator", {"family", "case", "params"});
  try {
    family_from_string(get_string(e, "family", "estimator"));
  } catch (const EstimatorError&) {
    schema_error("estimator.family: unknown family");
  }
  const std::int64_t c = get_int(e, "case", "estimator");
  if (c < 1 || c > 3) schema_error("estimator.case: must be 1, 2 or 3");
  const Json& p = e.at("params");
  if (p.is_string()) {
    if (p.get<std::string>() != "from-table")
      schema_error("estimator.params: object or \"from-table\"");
    return;
  }
  const std::string where = "estimator.params";
  switch (c) {
    case 1: check_keys(p, where, {"eta", "beta", "batch_size"}); break;
    case 2: check_keys(p, where, {"eta", "p", "batch_size"}); break;
    case 3: check_keys(p, where, {"eta", "E", "batch_size"}); break;
  }
  get_number(p, "eta", where);
  get_int(p, "batch_size", where);
  if (c == 1) get_number(p, "beta", where);
  if (c == 2) get_number(p, "p", where);
  if (c == 3) get_int(p, "E", where);
}

void check_freedman_schema(const Json& f) {
  const std::string where = "freedman";
  check_keys(f, where, {"dimension", "geometry", "n", "schedule", "sigma0", "budget"});
  const std::int64_t d = get_int(f, "dimension", where);
  if (d < 1 || d > 4096) schema_error(where + ".dimension: must lie in [1, 4096]");
  const std::string g = get_string(f, "geometry", where);
  if (g != "euclidean" && g != "simplex")
    schema_error(where + ".geometry: \"euclidean\" or \"simplex\"");
  if (get_int(f, "n", where) < 1) schema_error(where + ".n: must be >= 1");
  try {
    proxy_schedule_from_string(get_string(f, "schedule", where));
  } catch (const std::invalid_argument&) {
    schema_error(where + ".schedule: unknown schedule");
  }
  if (!(get_number(f, "sigma0", where) > 0.0)) schema_error(where + ".sigma0: must be > 0");
  const Json& b = f.at("budget");
  if (b.is_string()) {
    if (b.get<std::string>() != "exact") schema_error(where + ".budget: number or \"exact\"");
  } else if (!(get_number(f, "budget", where) > 0.0)) {
    schema_error(where + ".budget: must be > 0");
  }
}

MartingaleSpec martingale_spec(const Json& f) {
  MartingaleSpec s;
  s.dimension = static_cast<int>(f.at("dimension").get<std::int64_t>());
  s.geometry = f.at("geometry").get<std::string>() == "simplex"
                   ? GeometrySpec::simplex(std::max(2, s.dimension))
                   : GeometrySpec::euclidean_free(s.dimension);
  s.n = static_cast<int>(f.at("n").get<std::int64_t>());
  s.schedule = proxy_schedule_from_string(f.at("schedule").get<std::string>());
  s.sigma0 = f.at("sigma0").get<double>();
  s.s_level = s.t_level = 0.0;
  return s;
}

double martingale_budget(const Json& f, const MartingaleSpec& s) {
  const Json& b = f.at("budget");
  if (b.is_number()) return b.get<double>();
  if (s.schedule == ProxySchedule::StateDependent)
    throw ExperimentError(ExitCode::Inadmissible,
                          "freedman.budget: \"exact\" needs a deterministic proxy schedule");
  double V = 0.0;
  for (int t = 1; t <= s.n; ++t) {
    const double p = proxy_at(s, t, Vec::Zero(s.dimension));
    V += p * p;
  }
  return V;
}

double envelope_kappa(const StochasticOracle& p) {
  return p.out_dim() == 1 ? 1.0 : p.geometry().kappa;
}

EnvelopeParams envelope_params(const ResolvedEstimator& r, int T) {
  EnvelopeParams p;
  p.beta = r.config.beta;
  p.p = r.config.schedule.p;
  p.E = r.config.schedule.E;
  p.eta = r.config.eta;
  p.B = r.config.batch_size;
  p.T = std::max(1, T);
  return p;
}

Json resolved_json(const ResolvedEstimator& r) {
  Json j;
  j["family"] = to_string(r.config.family);
  j["case"] = r.case_id;
  j["params"] = r.from_table ? "from-table" : "manual";
  j["eta"] = r.config.eta;
  if (r.case_id == 1) j["beta"] = r.config.beta;
  if (r.case_id == 2) j["p"] = r.config.schedule.p;
  if (r.case_id == 3) j["E"] = r.config.schedule.E;
  j["batch_size"] = r.config.batch_size;
  if (!r.instantiation.empty()) j["instantiation"] = r.instantiation;
  return j;
}

}  // namespace

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Estimate: return "estimate";
    case ExperimentKind::MirrorDescent: return "mirror-descent";
    case ExperimentKind::Sgm: return "sgm";
    case ExperimentKind::Freedman: return "freedman";
    case ExperimentKind::Sweep: return "sweep";
  }
  return "?";
}

ExperimentConfig parse_config(const Json& doc) {
  if (!doc.is_object()) schema_error("config: expected an object");
  if (!doc.contains("kind")) schema_error("config: missing field 'kind'");
  ExperimentConfig c;
  const std::string kind = get_string(doc, "kind", "config");
  std::vector<std::string> req = {"kind", "delta", "trials"};
  if (kind == "estimate") {
    c.kind = ExperimentKind::Estimate;
    req.insert(req.end(), {"T", "problem", "estimator"});
  } else if (kind == "mirror-descent") {
    c.kind = ExperimentKind::MirrorDescent;
    req.insert(req.end(), {"T", "problem", "estimator"});
  } else if (kind == "sgm") {
    c.kind = ExperimentKind::Sgm;
    req.insert(req.end(), {"T", "problem", "estimator"});
  } else if (kind == "freedman") {
    c.kind = ExperimentKind::Freedman;
    req.insert(req.end(), {"freedman"});
  } else if (kind == "sweep") {
    c.kind = ExperimentKind::Sweep;
    req.insert(req.end(), {"T_values", "problem", "estimator"});
  } else {
    schema_error("config.kind: unknown experiment '" + kind + "'");
  }
  check_keys(doc, "config", req, {"seed", "output"});
  c.delta = get_number(doc, "delta", "config");
  if (!(c.delta > 0.0 && c.delta < 1.0)) schema_error("config.delta: must lie in (0, 1)");
  c.trials = get_int(doc, "trials", "config");
  if (c.trials < 1) schema_error("config.trials: must be >= 1");
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned() && !(doc.at("seed").is_number_integer() &&
                                                  doc.at("seed").get<std::int64_t>() >= 0))
      schema_error("config.seed: expected a nonnegative integer");
    c.seed = doc.at("seed").get<std::uint64_t>();
  }
  if (doc.contains("output")) c.output = get_string(doc, "output", "config");
  if (doc.contains("T")) {
    const std::int64_t T = get_int(doc, "T", "config");
    if (T < 1 || T > 100000000) schema_error("config.T: must lie in [1, 1e8]");
    c.T = static_cast<int>(T);
  }
  if (doc.contains("T_values")) {
    const Json& v = doc.at("T_values");
    if (!v.is_array() || v.size() < 2) schema_error("config.T_values: at least two integers");
    for (const auto& x : v) {
      if (!x.is_number_integer() || x.get<std::int64_t>() < 2)
        schema_error("config.T_values: integers >= 2");
      c.sweep_T.push_back(static_cast<int>(x.get<std::int64_t>()));
    }
  }
  if (doc.contains("problem")) {
    check_problem_schema(doc.at("problem"));
    c.problem = doc.at("problem");
  }
  if (doc.contains("estimator")) {
    check_estimator_schema(doc.at("estimator"));
    c.estimator = doc.at("estimator");
  }
  if (doc.contains("freedman")) {
    check_freedman_schema(doc.at("freedman"));
    c.freedman = doc.at("freedman");
  }
  if (c.kind == ExperimentKind::Sgm && c.problem.at("kind") != "constrained_linear")
    schema_error("problem.kind: sgm runs need a constrained_linear problem");
  if ((c.kind == ExperimentKind::MirrorDescent || c.kind == ExperimentKind::Sweep) &&
      c.problem.at("kind") != "noisy_quadratic" && c.problem.at("kind") != "finite_sum")
    schema_error("problem.kind: mirror descent needs noisy_quadratic or finite_sum");
  if (c.kind == ExperimentKind::Sgm && c.T < 2) schema_error("config.T: sgm needs T >= 2");
  c.source = doc;
  c.source["seed"] = c.seed;
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) schema_error("cannot read config file " + path);
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    schema_error(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

std::unique_ptr<StochasticOracle> build_problem(const Json& p) {
  check_problem_schema(p);
  const std::string kind = p.at("kind").get<std::string>();
  const int d = static_cast<int>(p.at("dimension").get<std::int64_t>());
  const GeometrySpec g = parse_geometry(p.at("geometry"), d);
  std::unique_ptr<StochasticOracle> out;
  try {
    if (kind == "noisy_quadratic") {
      const double lo = get_number(p, "eigen_min", "problem");
      const double hi = get_number(p, "eigen_max", "problem");
      if (!(lo >= 0.0 && hi >= lo)) schema_error("problem: need 0 <= eigen_min <= eigen_max");
      Mat A = random_spd_matrix(d, lo, hi,
                                static_cast<std::uint64_t>(get_int(p, "matrix_seed", "problem")));
      out = std::make_unique<NoisyQuadratic>(g, A, get_number(p, "noise_std", "problem"),
                                             get_number(p, "additive_std", "problem"),
                                             parse_radius(p, g));
    } else if (kind == "finite_sum") {
      const std::int64_t n = get_int(p, "components", "problem");
      if (n < 1 || n > 100000) schema_error("problem.components: must lie in [1, 1e5]");
      const double lo = get_number(p, "eigen_min", "problem");
      const double hi = get_number(p, "eigen_max", "problem");
      if (!(lo >= 0.0 && hi >= lo)) schema_error("problem: need 0 <= eigen_min <= eigen_max");
      const double off = get_number(p, "offset_scale", "problem");
      const auto seed = static_cast<std::uint64_t>(get_int(p, "matrix_seed", "problem"));
      std::vector<Mat> As;
      std::vector<Vec> bs;
      for (std::int64_t i = 0; i < n; ++i) {
        As.push_back(random_spd_matrix(d, lo, hi, mix64(seed + static_cast<std::uint64_t>(i))));
        CounterEngine eng(counter_key(seed, 0, Domain::Problem, 1, static_cast<std::uint64_t>(i)));
        Vec b(d);
        for (int k = 0; k < d; ++k) b[k] = off * standard_normal(eng);
        bs.push_back(b);
      }
      out = std::make_unique<FiniteSum>(g, As, bs, parse_radius(p, g));
    } else if (kind == "linear_gaussian") {
      Vec diag = get_vector(p, "covariance_diag", "problem");
      if (diag.size() != d) schema_error("problem.covariance_diag: length must equal dimension");
      out = std::make_unique<LinearGaussian>(g, Mat(diag.asDiagonal()), parse_radius(p, g));
    } else {
      Vec c = get_vector(p, "c", "problem"), a = get_vector(p, "a", "problem");
      if (c.size() != d || a.size() != d) schema_error("problem: c and a need length dimension");
      out = std::make_unique<ConstrainedLinear>(g, c, a, get_number(p, "b", "problem"),
                                                get_number(p, "value_noise_std", "problem"),
                                                get_number(p, "subgradient_noise", "problem"));
    }
  } catch (const ExperimentError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    schema_error(std::string("problem: ") + e.what());
  }
  if (p.contains("delta_f")) {
    const Json& df = p.at("delta_f");
    double v = 0.0;
    if (df.is_string()) {
      if (df.get<std::string>() != "auto") schema_error("problem.delta_f: number or \"auto\"");
      try {
        v = out->objective(start_point(p, *out)) - out->objective_min();
      } catch (const std::invalid_argument&) {
        schema_error("problem.delta_f: \"auto\" needs a known minimum value");
      }
    } else {
      v = get_number(p, "delta_f", "problem");
    }
    if (!(v >= 0.0)) schema_error("problem.delta_f: must be nonnegative");
    out->set_delta_f(v);
  }
  return out;
}

Vec start_point(const Json& p, const StochasticOracle& problem) {
  if (!p.contains("start")) return center_point(problem.geometry());
  const Json& s = p.at("start");
  if (s.is_string()) {
    if (s.get<std::string>() != "center") schema_error("problem.start: array or \"center\"");
    return center_point(problem.geometry());
  }
  Vec w = get_vector(p, "start", "problem");
  if (w.size() != problem.dim()) schema_error("problem.start: length must equal dimension");
  if (!is_feasible(w, problem.geometry(), 1e-9))
    schema_error("problem.start: point is not feasible");
  return w;
}

ResolvedEstimator resolve_estimator(const ExperimentConfig& cfg,
                                    const StochasticOracle& problem, int T) {
  const Json& e = cfg.estimator;
  ResolvedEstimator r;
  const Family f = family_from_string(e.at("family").get<std::string>());
  r.case_id = static_cast<int>(e.at("case").get<std::int64_t>());
  if (f == Family::SecondOrder && !problem.has_jvp())
    schema_error("estimator.family: second_order needs a problem with Jacobian products");
  const Json& p = e.at("params");
  if (p.is_string()) {
    r.from_table = true;
    if (cfg.kind == ExperimentKind::Sgm) {
      const auto& cl = dynamic_cast<const ConstrainedLinear&>(problem);
      ConstrainedSetup setup = make_setup(cl);
      try {
        r.sgm = sgm_configure(r.case_id, f, setup, T, cfg.delta);
      } catch (const ConstrainedError& ex) {
        throw ExperimentError(ExitCode::Inadmissible, ex.what());
      }
      r.config = r.sgm->estimator;
      r.admissible = r.sgm->admissible;
      r.violated = r.sgm->violated;
      r.instantiation = "constrained corollary, Lambda_T = " + fmt(r.sgm->Lambda);
    } else {
      if (!(problem.constants().delta_f > 0.0))
        schema_error("estimator.params: from-table needs problem.delta_f > 0");
      try {
        TableConfig tc = configure_from_table(f, r.case_id, problem.constants(), T, cfg.delta,
                                              problem.geometry().kappa);
        r.config = tc.config;
        r.admissible = tc.selection.admissible;
        r.violated = tc.selection.violated;
        r.instantiation = tc.instantiation;
      } catch (const BoundsError& ex) {
        throw ExperimentError(ExitCode::Inadmissible, ex.what());
      }
    }
  } else {
    EstimatorConfig c;
    c.family = f;
    c.eta = p.at("eta").get<double>();
    c.batch_size = static_cast<int>(p.at("batch_size").get<std::int64_t>());
    c.horizon = T;
    switch (r.case_id) {
      case 1:
        c.beta = p.at("beta").get<double>();
        c.schedule = Schedule::never();
        if (!(c.beta >= 0.0 && c.beta < 1.0)) {
          r.admissible = false;
          r.violated = "0 <= beta < 1";
        }
        break;
      case 2: {
        const double pr = p.at("p").get<double>();
        c.beta = 1.0;
        c.schedule = Schedule::probabilistic(pr);
        if (!(pr > 0.0 && pr <= 1.0)) {
          r.admissible = false;
          r.violated = "0 < p <= 1";
        }
        break;
      }
      case 3: {
        const auto E = p.at("E").get<std::int64_t>();
        c.beta = 1.0;
        c.schedule = Schedule::periodic(static_cast<int>(std::max<std::int64_t>(E, 0)));
        if (E < 1) {
          r.admissible = false;
          r.violated = "E >= 1";
        }
        break;
      }
    }
    if (!(c.eta > 0.0)) {
      r.admissible = false;
      r.violated = "eta > 0";
    }
    if (c.batch_size < 1) {
      r.admissible = false;
      r.violated = "batch_size >= 1";
    }
    r.config = c;
  }
  r.config.horizon = T;
  return r;
}

namespace {

struct Prepared {
  std::unique_ptr<StochasticOracle> problem;
  Vec w0;
  ResolvedEstimator est;
  std::vector<ResolvedEstimator> sweep;
};

void require_admissible(const ResolvedEstimator& r, int T) {
  if (!r.admissible)
    throw ExperimentError(ExitCode::Inadmissible,
                          "inadmissible parameters at T = " + std::to_string(T) +
                              ": violated condition " + r.violated);
}

Prepared prepare(const ExperimentConfig& cfg) {
  Prepared p;
  if (cfg.kind == ExperimentKind::Freedman) return p;
  p.problem = build_problem(cfg.problem);
  p.w0 = start_point(cfg.problem, *p.problem);
  if (cfg.kind == ExperimentKind::Sweep) {
    for (int T : cfg.sweep_T) {
      p.sweep.push_back(resolve_estimator(cfg, *p.problem, T));
      require_admissible(p.sweep.back(), T);
    }
    p.est = p.sweep.back();
  } else {
    p.est = resolve_estimator(cfg, *p.problem, cfg.T);
    require_admissible(p.est, cfg.T);
  }
  try {
    p.est.config.validate();
    if (cfg.kind != ExperimentKind::Sgm)
      require_envelope(p.est.config.family, p.est.case_id, envelope_params(p.est, cfg.T),
                       p.problem->constants(), cfg.delta, envelope_kappa(*p.problem));
  } catch (const std::invalid_argument& e) {
    throw ExperimentError(ExitCode::Inadmissible, e.what());
  }
  return p;
}

Json resolved_block(const ExperimentConfig& cfg, const Prepared& p) {
  Json j;
  if (cfg.kind == ExperimentKind::Freedman) {
    MartingaleSpec s = martingale_spec(cfg.freedman);
    const double V = martingale_budget(cfg.freedman, s);
    const double gamma = std::sqrt(3.0 * std::log(1.0 / cfg.delta));
    j["gamma"] = gamma;
    j["V"] = V;
    j["kappa"] = s.geometry.kappa;
    j["threshold"] = (std::sqrt(s.geometry.kappa) + gamma) * std::sqrt(V);
    return j;
  }
  const ProblemConstants& k = p.problem->constants();
  Json c;
  c["sigma"] = k.sigma;
  c["L"] = k.L;
  c["ell"] = k.ell;
  c["gamma"] = k.gamma;
  c["alpha"] = k.alpha;
  c["G_update"] = k.G_update;
  c["delta_f"] = k.delta_f;
  j["constants"] = c;
  j["kappa"] = envelope_kappa(*p.problem);
  if (cfg.kind == ExperimentKind::Sweep) {
    Json arr = Json::array();
    for (std::size_t i = 0; i < p.sweep.size(); ++i) {
      Json e = resolved_json(p.sweep[i]);
      e["T"] = cfg.sweep_T[i];
      arr.push_back(e);
    }
    j["estimators"] = arr;
    return j;
  }
  j["estimator"] = resolved_json(p.est);
  if (cfg.kind == ExperimentKind::Sgm) {
    const auto& cl = dynamic_cast<const ConstrainedLinear&>(*p.problem);
    ConstrainedSetup setup = make_setup(cl);
    const double eta = p.est.config.eta;
    const double E = sgm_envelope(setup, p.est.config, p.est.case_id, eta, cfg.T, cfg.delta);
    const int t0 = p.est.case_id == 1 ? cfg.T / 2 : 0;
    j["R"] = setup.R;
    j["D"] = setup.D;
    j["G"] = setup.G;
    j["f_star"] = setup.f_star;
    j["envelope_E"] = E;
    j["epsilon"] = sgm_threshold(setup.R, eta, cfg.T - t0, setup.G, setup.D, cfg.delta, E);
    j["predicted_Q"] =
        sgm_predicted_bound(p.est.case_id, p.est.config.family, setup, cfg.T, cfg.delta);
  } else {
    BoundEnvelope env =
        require_envelope(p.est.config.family, p.est.case_id, envelope_params(p.est, cfg.T),
                         p.problem->constants(), cfg.delta, envelope_kappa(*p.problem));
    j["envelope_at_T"] = env(cfg.T);
  }
  return j;
}

Vec walk_direction(const RngStream& rng, int t, const StochasticOracle& prob) {
  CounterEngine eng = rng.engine(Domain::Path, static_cast<std::uint64_t>(t));
  Vec u(prob.dim());
  for (int i = 0; i < prob.dim(); ++i) u[i] = standard_normal(eng);
  const double n = dual_norm(u, prob.geometry());
  if (n > 0.0) u *= prob.constants().G_update / n;
  return u;
}

Json coverage_json(std::int64_t exceed, std::int64_t pairs, double max_ratio) {
  Json j;
  Interval ci = wilson_interval(exceed, pairs);
  j["pairs"] = pairs;
  j["exceedances"] = exceed;
  j["rate"] = static_cast<double>(exceed) / static_cast<double>(pairs);
  j["wilson_low"] = ci.low;
  j["wilson_high"] = ci.high;
  j["max_error_to_envelope"] = max_ratio;
  return j;
}

Json run_estimate(const ExperimentConfig& cfg, const Prepared& p, const RunOptions& opt,
                  Table& table, const fs::path& plots) {
  const StochasticOracle& prob = *p.problem;
  const int T = cfg.T;
  BoundEnvelope env =
      require_envelope(p.est.config.family, p.est.case_id, envelope_params(p.est, T),
                       prob.constants(), cfg.delta, envelope_kappa(prob));
  std::vector<double> envs(T);
  for (int t = 0; t < T; ++t) envs[t] = env(t);
  struct Trial {
    std::vector<double> err;
    std::vector<unsigned char> reset;
    std::int64_t calls = 0;
  };
  std::vector<Trial> out(static_cast<std::size_t>(cfg.trials));
  parallel_for(cfg.trials, opt.workers, [&](std::int64_t i) {
    RngStream rng{cfg.seed, static_cast<std::uint64_t>(i)};
    UnifiedEstimator est(prob, p.est.config, rng);
    Trial& tr = out[static_cast<std::size_t>(i)];
    tr.err.reserve(T);
    Vec w = p.w0;
    for (int t = 0; t < T; ++t) {
      StepRecord rec = t == 0 ? est.init(w) : est.step(w);
      tr.err.push_back(rec.error_norm);
      tr.reset.push_back(rec.reset ? 1 : 0);
      w = prox_step(w, walk_direction(rng, t, prob), p.est.config.eta, prob.geometry());
    }
    tr.calls = est.state().oracle_calls;
  });
  table.header = {"trial", "t", "reset", "error_norm", "envelope", "exceeds"};
  std::int64_t exceed = 0, pairs = 0;
  double max_ratio = 0.0, calls = 0.0;
  std::vector<double> mean_err(T, 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    calls += static_cast<double>(out[i].calls);
    for (int t = 0; t < T; ++t) {
      const double e = out[i].err[t];
      const bool x = e > envs[t];
      exceed += x;
      ++pairs;
      max_ratio = std::max(max_ratio, e / envs[t]);
      mean_err[t] += e / static_cast<double>(out.size());
      table.rows.push_back({std::to_string(i), std::to_string(t),
                            std::to_string(out[i].reset[t]), fmt(e), fmt(envs[t]),
                            x ? "1" : "0"});
    }
  }
  Json agg;
  agg["coverage"] = coverage_json(exceed, pairs, max_ratio);
  agg["delta"] = cfg.delta;
  agg["coverage_pass"] = wilson_interval(exceed, pairs).high <= cfg.delta;
  agg["mean_oracle_calls"] = calls / static_cast<double>(out.size());
  agg["envelope_sup"] = env.sup(0, T - 1);
  if (!plots.empty()) {
    Series a{"mean |e_t|", {}, mean_err}, b{"envelope", {}, envs};
    for (int t = 0; t < T; ++t) {
      a.x.push_back(t);
      b.x.push_back(t);
    }
    write_line_plot(plots / "error_vs_envelope.svg", "estimation error vs envelope", "t",
                    "norm", {a, b}, false, false);
  }
  return agg;
}

Json run_mirror_descent(const ExperimentConfig& cfg, const Prepared& p, const RunOptions& opt,
                        Table& table, const fs::path& plots) {
  const StochasticOracle& prob = *p.problem;
  const int T = cfg.T;
  BoundEnvelope env =
      require_envelope(p.est.config.family, p.est.case_id, envelope_params(p.est, T),
                       prob.constants(), cfg.delta, envelope_kappa(prob));
  std::vector<double> envs(T);
  for (int t = 0; t < T; ++t) envs[t] = env(t);
  std::vector<MirrorDescentRun> runs(static_cast<std::size_t>(cfg.trials));
  parallel_for(cfg.trials, opt.workers, [&](std::int64_t i) {
    runs[static_cast<std::size_t>(i)] = mirror_descent_run(
        prob, p.est.config, p.w0, RngStream{cfg.seed, static_cast<std::uint64_t>(i)}, true);
  });
  table.header = {"trial", "t", "f", "v_norm", "grad_norm", "witness",
                  "error_norm", "envelope", "step_norm", "reset"};
  std::vector<double> avg;
  std::int64_t exceed = 0, pairs = 0;
  double max_ratio = 0.0, max_step = 0.0, max_resid = -1e300, calls = 0.0;
  std::vector<double> mean_w(T, 0.0), mean_e(T, 0.0);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    avg.push_back(r.avg_witness);
    max_step = std::max(max_step, r.max_step);
    max_resid = std::max(max_resid, r.max_descent_residual);
    calls += static_cast<double>(r.oracle_calls);
    for (const auto& it : r.log) {
      const bool x = it.error_norm > envs[it.t];
      exceed += x;
      ++pairs;
      max_ratio = std::max(max_ratio, it.error_norm / envs[it.t]);
      mean_w[it.t] += it.witness / static_cast<double>(runs.size());
      mean_e[it.t] += it.error_norm / static_cast<double>(runs.size());
      table.rows.push_back({std::to_string(i), std::to_string(it.t), fmt(it.f),
                            fmt(it.v_norm), fmt(it.grad_norm), fmt(it.witness),
                            fmt(it.error_norm), fmt(envs[it.t]), fmt(it.step_norm),
                            it.reset ? "1" : "0"});
    }
  }
  Json agg;
  agg["avg_witness_mean"] = mean(avg);
  agg["avg_witness_std"] = avg.size() > 1 ? stddev(avg) : 0.0;
  agg["max_step"] = max_step;
  agg["step_bound"] = p.est.config.eta;
  agg["max_descent_residual"] = max_resid;
  agg["coverage"] = coverage_json(exceed, pairs, max_ratio);
  agg["mean_oracle_calls"] = calls / static_cast<double>(runs.size());
  if (!plots.empty()) {
    Series a{"mean witness", {}, mean_w}, e{"mean |e_t|", {}, mean_e}, b{"envelope", {}, envs};
    for (int t = 0; t < T; ++t) {
      a.x.push_back(t + 1);
      e.x.push_back(t + 1);
      b.x.push_back(t + 1);
    }
    write_line_plot(plots / "witness.svg", "stationarity witness", "t", "witness", {a}, true,
                    true);
    write_line_plot(plots / "error_vs_envelope.svg", "estimation error vs envelope", "t",
                    "norm", {e, b}, false, false);
  }
  return agg;
}

Json run_sweep(const ExperimentConfig& cfg, const Prepared& p, const RunOptions& opt,
               Table& table, const fs::path& plots) {
  const StochasticOracle& prob = *p.problem;
  table.header = {"T", "eta", "beta", "p", "E", "batch_size", "avg_witness_mean",
                  "avg_witness_std"};
  std::vector<double> Ts, Ws;
  for (std::size_t k = 0; k < cfg.sweep_T.size(); ++k) {
    const ResolvedEstimator& r = p.sweep[k];
    std::vector<double> avg(static_cast<std::size_t>(cfg.trials));
    parallel_for(cfg.trials, opt.workers, [&](std::int64_t i) {
      avg[static_cast<std::size_t>(i)] =
          mirror_descent_run(prob, r.config, p.w0,
                             RngStream{cfg.seed, static_cast<std::uint64_t>(i)})
              .avg_witness;
    });
    const double m = mean(avg);
    Ts.push_back(cfg.sweep_T[k]);
    Ws.push_back(m);
    table.rows.push_back({std::to_string(cfg.sweep_T[k]), fmt(r.config.eta),
                          fmt(r.config.beta), fmt(r.config.schedule.p),
                          std::to_string(r.config.schedule.E),
                          std::to_string(r.config.batch_size), fmt(m),
                          fmt(avg.size() > 1 ? stddev(avg) : 0.0)});
  }
  Json agg;
  agg["points"] = static_cast<std::int64_t>(Ts.size());
  bool positive = std::all_of(Ws.begin(), Ws.end(), [](double w) { return w > 0.0; });
  if (positive)
    agg["slope"] = loglog_slope(Ts, Ws);
  else
    agg["slope"] = nullptr;
  agg["spearman_rho"] = spearman_rho(Ts, Ws);
  if (!plots.empty())
    write_line_plot(plots / "witness_vs_T.svg", "average witness vs T", "T",
                    "average witness", {Series{"avg witness", Ts, Ws}}, true, true);
  return agg;
}

Json run_sgm(const ExperimentConfig& cfg, const Prepared& p, const RunOptions& opt,
             Table& table, const fs::path& plots) {
  const auto& cl = dynamic_cast<const ConstrainedLinear&>(*p.problem);
  ConstrainedSetup setup = make_setup(cl);
  SGMOptions so;
  so.case_id = p.est.case_id;
  std::vector<SGMResult> res(static_cast<std::size_t>(cfg.trials));
  parallel_for(cfg.trials, opt.workers, [&](std::int64_t i) {
    res[static_cast<std::size_t>(i)] =
        sgm_run(setup, p.est.config, p.est.config.eta, cfg.T, cfg.delta,
                RngStream{cfg.seed, static_cast<std::uint64_t>(i)}, so);
  });
  table.header = {"trial", "case", "family", "T", "epsilon", "E", "f_gap",
                  "h_value", "selected", "N", "success"};
  std::int64_t nonempty = 0, success = 0;
  double calls = 0.0;
  for (std::size_t i = 0; i < res.size(); ++i) {
    const auto& r = res[i];
    const bool ok = r.success && r.f_ok && r.h_ok;
    nonempty += r.success;
    success += ok;
    calls += static_cast<double>(r.oracle_calls);
    table.rows.push_back({std::to_string(i), std::to_string(p.est.case_id),
                          to_string(p.est.config.family), std::to_string(cfg.T),
                          fmt(r.epsilon), fmt(r.envelope_E),
                          r.success ? fmt(r.f_gap) : "nan", r.success ? fmt(r.h_value) : "nan",
                          std::to_string(r.selected.size()), std::to_string(r.oracle_calls),
                          ok ? "1" : "0"});
  }
  const double n = static_cast<double>(res.size());
  const int B = p.est.config.batch_size;
  double expected = cfg.T;
  if (p.est.case_id == 2) expected = (2.0 - 1.0 / B) * cfg.T;
  if (p.est.case_id == 3)
    expected = cfg.T + (B - 1.0) * std::floor(static_cast<double>(cfg.T) / B);
  Interval ci = wilson_interval(success, cfg.trials);
  Json agg;
  agg["runs"] = cfg.trials;
  agg["nonempty"] = nonempty;
  agg["success"] = success;
  agg["success_rate"] = success / n;
  agg["wilson_low"] = ci.low;
  agg["wilson_high"] = ci.high;
  agg["mean_oracle_calls"] = calls / n;
  agg["expected_oracle_calls"] = expected;
  agg["oracle_call_relative_error"] = std::abs(calls / n - expected) / expected;
  agg["init_calls"] = res.empty() ? 0 : res.front().init_calls;
  if (!plots.empty())
    write_bar_plot(plots / "sgm_outcomes.svg", "SGM outcomes",
                   {{"nonempty", nonempty / n}, {"success", success / n},
                    {"target", 1.0 - cfg.delta}});
  return agg;
}

Json run_freedman(const ExperimentConfig& cfg, const RunOptions& opt, Table& table,
                  const fs::path& plots) {
  MartingaleSpec s = martingale_spec(cfg.freedman);
  const double V = martingale_budget(cfg.freedman, s);
  const double gamma = std::sqrt(3.0 * std::log(1.0 / cfg.delta));
  FreedmanReport r = freedman_violation_rate(s, V, gamma, cfg.trials, cfg.seed, opt.workers);
  table.header = {"gamma", "bound", "V", "trials", "violations", "rate", "ci_low", "ci_high"};
  table.rows.push_back({fmt(r.gamma), fmt(r.bound), fmt(r.V), std::to_string(r.trials),
                        std::to_string(r.violations), fmt(r.rate), fmt(r.ci_low),
                        fmt(r.ci_high)});
  Json agg;
  agg["gamma"] = r.gamma;
  agg["bound"] = r.bound;
  agg["V"] = r.V;
  agg["trials"] = r.trials;
  agg["violations"] = r.violations;
  agg["rate"] = r.rate;
  agg["ci_low"] = r.ci_low;
  agg["ci_high"] = r.ci_high;
  agg["pass"] = r.ci_high <= cfg.delta;
  if (!plots.empty())
    write_bar_plot(plots / "violation_rate.svg", "Freedman violation rate",
                   {{"rate", r.rate}, {"wilson high", r.ci_high}, {"delta", cfg.delta}});
  return agg;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

ValidationResult validate_experiment(const ExperimentConfig& cfg) {
  ValidationResult v;
  Prepared p = prepare(cfg);
  v.resolved = resolved_block(cfg, p);
  v.diagnostics.push_back("ok");
  return v;
}

std::string determinism_hash(const Json& report) {
  Json copy = report;
  copy.erase("timestamp");
  copy.erase("determinism_hash");
  const std::string s = copy.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream o;
  o << std::hex << std::setw(16) << std::setfill('0') << h;
  return o.str();
}

Json run_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
  Prepared p = prepare(cfg);
  Json report;
  report["config"] = cfg.source;
  report["resolved"] = resolved_block(cfg, p);
  fs::path out = opt.out_dir.empty() ? fs::path(cfg.output) : fs::path(opt.out_dir);
  if (out.empty()) schema_error("config: no output directory (set 'output' or --out)");
  fs::path plots;
  Table table;
  try {
    fs::create_directories(out);
    if (opt.plots) {
      plots = out / "plots";
      fs::create_directories(plots);
    }
    switch (cfg.kind) {
      case ExperimentKind::Estimate: report["aggregates"] = run_estimate(cfg, p, opt, table, plots); break;
      case ExperimentKind::MirrorDescent:
        report["aggregates"] = run_mirror_descent(cfg, p, opt, table, plots);
        break;
      case ExperimentKind::Sgm: report["aggregates"] = run_sgm(cfg, p, opt, table, plots); break;
      case ExperimentKind::Freedman: report["aggregates"] = run_freedman(cfg, opt, table, plots); break;
      case ExperimentKind::Sweep: report["aggregates"] = run_sweep(cfg, p, opt, table, plots); break;
    }
    write_csv(out / "trajectories.csv", table);
  } catch (const ExperimentError&) {
    throw;
  } catch (const std::exception& e) {
    throw ExperimentError(ExitCode::Runtime, e.what());
  }
  report["determinism_hash"] = determinism_hash(report);
  report["timestamp"] = utc_timestamp();
  std::ofstream f(out / "report.json", std::ios::binary);
  if (!f) throw ExperimentError(ExitCode::Runtime, "cannot write report.json");
  f << report.dump(2) << "\n";
  return report;
}

}  // namespace vrbound
