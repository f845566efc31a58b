#include <cmath>
#include <set>

#include "mfu/errors.hpp"
#include "mfu/experiments.hpp"

namespace mfu::experiments {

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ConfigError(path, what); }

const Json& require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  return j;
}

double as_number(const Json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "expected a finite number");
  return v;
}

std::size_t as_count(const Json& j, const std::string& path) {
  if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<long long>() < 0))
    fail(path, "expected a non-negative integer");
  return j.get<std::size_t>();
}

std::vector<double> as_vector(const Json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(as_number(j[i], path + "[" + std::to_string(i) + "]"));
  return v;
}

std::string as_string(const Json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

// Object reader that rejects keys nobody asked for.
class Obj {
 public:
  Obj(const Json& j, std::string path) : j_(require_object(j, path)), path_(std::move(path)) {}
  const Json* get(const std::string& key) {
    used_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  const Json& need(const std::string& key) {
    const Json* v = get(key);
    if (!v) fail(join(path_, key), "required field is missing");
    return *v;
  }
  double number(const std::string& key) { return as_number(need(key), join(path_, key)); }
  std::string path(const std::string& key) const { return join(path_, key); }
  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!used_.count(k)) fail(join(path_, k), "unknown field");
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

sampling::ScalarDensity scalar_from_json(const Json& j, const std::string& path) {
  const auto d = density_from_json(j, path);
  if (const auto* u = std::get_if<sampling::Uniform>(&d)) return *u;
  if (const auto* n = std::get_if<sampling::Normal>(&d)) return *n;
  if (const auto* l = std::get_if<sampling::LogNormal>(&d)) return *l;
  if (const auto* t = std::get_if<sampling::TriangularUnitRange>(&d)) return *t;
  fail(path, "expected a scalar density (uniform, normal, lognormal or triangular)");
}

Json scalar_to_json(const sampling::ScalarDensity& d) {
  return std::visit([](const auto& v) { return density_to_json(sampling::Density{v}); }, d);
}

const char* family_name(sampling::Family f) {
  switch (f) {
    case sampling::Family::Normal: return "normal";
    case sampling::Family::LogNormal: return "lognormal";
    case sampling::Family::Uniform: return "uniform";
    case sampling::Family::Triangular: return "triangular";
  }
  return "";
}

Json operator_to_json(const transport::DispersionOperator& op) {
  Json j;
  if (const auto* f = std::get_if<transport::Fractional>(&op)) {
    j["type"] = "fractional";
    j["nu_m"] = f->nu_m;
    j["alpha"] = f->alpha;
  } else if (const auto* c = std::get_if<transport::ComplexFractional>(&op)) {
    j["type"] = "complex_fractional";
    j["nu_r"] = c->nu_r;
    j["alpha_r"] = c->alpha_r;
    j["nu_i"] = c->nu_i;
    j["alpha_i"] = c->alpha_i;
  } else {
    j["type"] = "general_linear";
    auto& l = j["lambda"] = Json::array();
    for (const auto& v : std::get<transport::GeneralLinear>(op).lambda) l.push_back({v.real(), v.imag()});
  }
  return j;
}

transport::DispersionOperator operator_from_json(const Json& j, const std::string& path) {
  Obj o(j, path);
  const auto type = as_string(o.need("type"), o.path("type"));
  transport::DispersionOperator op;
  if (type == "fractional") {
    op = transport::Fractional{o.number("nu_m"), o.number("alpha")};
  } else if (type == "complex_fractional") {
    op = transport::ComplexFractional{o.number("nu_r"), o.number("alpha_r"), o.number("nu_i"), o.number("alpha_i")};
  } else if (type == "general_linear") {
    const auto& arr = o.need("lambda");
    if (!arr.is_array()) fail(o.path("lambda"), "expected an array of [re, im] pairs");
    transport::GeneralLinear g;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const auto p = as_vector(arr[i], o.path("lambda") + "[" + std::to_string(i) + "]");
      if (p.size() != 2) fail(o.path("lambda") + "[" + std::to_string(i) + "]", "expected [re, im]");
      g.lambda.emplace_back(p[0], p[1]);
    }
    op = std::move(g);
  } else {
    fail(o.path("type"), "unknown operator type '" + type + "'");
  }
  o.finish();
  try {
    transport::validate(op);
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
  return op;
}

class Reader final : public FieldVisitor {
 public:
  Reader(const Json& j, std::string path) : obj_(j, std::move(path)) {}
  void finish() const { obj_.finish(); }

  template <class T>
  void read_sub(const char* name, T& sub) {
    const Json* j = obj_.get(name);
    if (!j) return;
    Reader inner(*j, obj_.path(name));
    sub.visit(inner);
    inner.finish();
  }

  void field(const char* name, double& v) override {
    if (const Json* j = obj_.get(name)) v = as_number(*j, obj_.path(name));
  }
  void field(const char* name, std::size_t& v) override {
    if (const Json* j = obj_.get(name)) v = as_count(*j, obj_.path(name));
  }
  void field(const char* name, bool& v) override {
    if (const Json* j = obj_.get(name)) {
      if (!j->is_boolean()) fail(obj_.path(name), "expected true or false");
      v = j->get<bool>();
    }
  }
  void field(const char* name, std::vector<double>& v) override {
    if (const Json* j = obj_.get(name)) v = as_vector(*j, obj_.path(name));
  }
  void field(const char* name, sampling::Density& v) override {
    if (const Json* j = obj_.get(name)) v = density_from_json(*j, obj_.path(name));
  }
  void field(const char* name, transport::DispersionOperator& v) override {
    if (const Json* j = obj_.get(name)) v = operator_from_json(*j, obj_.path(name));
  }
  void field(const char* name, transport::TransportConfig& v) override {
    const Json* j = obj_.get(name);
    if (!j) return;
    Obj o(*j, obj_.path(name));
    if (const Json* x = o.get("lx")) v.lx = as_number(*x, o.path("lx"));
    if (const Json* x = o.get("nx")) v.nx = as_count(*x, o.path("nx"));
    if (const Json* x = o.get("ell")) v.ell = as_number(*x, o.path("ell"));
    if (const Json* x = o.get("check_times")) v.check_times = as_vector(*x, o.path("check_times"));
    if (const Json* x = o.get("qoi_time")) v.qoi_time = as_number(*x, o.path("qoi_time"));
    o.finish();
  }
  void field(const char* name, transport::PhysicalParams& v) override {
    const Json* j = obj_.get(name);
    if (!j) return;
    Obj o(*j, obj_.path(name));
    if (const Json* x = o.get("u_mean")) v.u_mean = as_number(*x, o.path("u_mean"));
    if (const Json* x = o.get("nu_p")) v.nu_p = as_number(*x, o.path("nu_p"));
    if (const Json* x = o.get("s")) v.s = as_number(*x, o.path("s"));
    o.finish();
  }
  void field(const char* name, std::vector<gsa::ParameterBlock>& v) override {
    const Json* j = obj_.get(name);
    if (!j) return;
    const auto path = obj_.path(name);
    if (!j->is_array()) fail(path, "expected an array of blocks");
    v.clear();
    for (std::size_t i = 0; i < j->size(); ++i) {
      const auto p = path + "[" + std::to_string(i) + "]";
      Obj o((*j)[i], p);
      gsa::ParameterBlock b;
      const auto& names = o.need("names");
      if (!names.is_array() || names.empty()) fail(o.path("names"), "expected a nonempty array of names");
      for (std::size_t k = 0; k < names.size(); ++k)
        b.names.push_back(as_string(names[k], o.path("names") + "[" + std::to_string(k) + "]"));
      b.density = density_from_json(o.need("density"), o.path("density"));
      if (sampling::dimension(b.density) != b.names.size())
        fail(o.path("names"), "number of names does not match the density dimension");
      o.finish();
      v.push_back(std::move(b));
    }
  }
  void field(const char* name, std::vector<GroupSpec>& v) override {
    const Json* j = obj_.get(name);
    if (!j) return;
    const auto path = obj_.path(name);
    if (!j->is_array()) fail(path, "expected an array of groups");
    v.clear();
    for (std::size_t i = 0; i < j->size(); ++i) {
      const auto p = path + "[" + std::to_string(i) + "]";
      Obj o((*j)[i], p);
      GroupSpec g{as_string(o.need("name"), o.path("name")), {}};
      const auto& m = o.need("members");
      if (!m.is_array()) fail(o.path("members"), "expected an array of parameter names");
      for (std::size_t k = 0; k < m.size(); ++k)
        g.members.push_back(as_string(m[k], o.path("members") + "[" + std::to_string(k) + "]"));
      o.finish();
      v.push_back(std::move(g));
    }
  }
  void field(const char* name, std::vector<PolynomialTerm>& v) override {
    const Json* j = obj_.get(name);
    if (!j) return;
    const auto path = obj_.path(name);
    if (!j->is_array()) fail(path, "expected an array of terms");
    v.clear();
    for (std::size_t i = 0; i < j->size(); ++i) {
      const auto p = path + "[" + std::to_string(i) + "]";
      Obj o((*j)[i], p);
      PolynomialTerm t;
      if (const Json* c = o.get("coef")) t.coef = as_number(*c, o.path("coef"));
      if (const Json* pw = o.get("powers")) {
        if (!pw->is_object()) fail(o.path("powers"), "expected an object of name: power");
        for (const auto& [k, val] : pw->items()) t.powers.emplace_back(k, as_number(val, o.path("powers") + "." + k));
      }
      o.finish();
      v.push_back(std::move(t));
    }
  }

 private:
  Obj obj_;
};

class Writer final : public FieldVisitor {
 public:
  Json j = Json::object();

  void field(const char* name, double& v) override { j[name] = v; }
  void field(const char* name, std::size_t& v) override { j[name] = v; }
  void field(const char* name, bool& v) override { j[name] = v; }
  void field(const char* name, std::vector<double>& v) override { j[name] = v; }
  void field(const char* name, sampling::Density& v) override { j[name] = density_to_json(v); }
  void field(const char* name, transport::DispersionOperator& v) override { j[name] = operator_to_json(v); }
  void field(const char* name, transport::TransportConfig& v) override {
    j[name] = Json{{"lx", v.lx}, {"nx", v.nx}, {"ell", v.ell}, {"check_times", v.check_times}, {"qoi_time", v.qoi_time}};
  }
  void field(const char* name, transport::PhysicalParams& v) override {
    j[name] = Json{{"u_mean", v.u_mean}, {"nu_p", v.nu_p}, {"s", v.s}};
  }
  void field(const char* name, std::vector<gsa::ParameterBlock>& v) override {
    auto& a = j[name] = Json::array();
    for (const auto& b : v) a.push_back(Json{{"names", b.names}, {"density", density_to_json(b.density)}});
  }
  void field(const char* name, std::vector<GroupSpec>& v) override {
    auto& a = j[name] = Json::array();
    for (const auto& g : v) a.push_back(Json{{"name", g.name}, {"members", g.members}});
  }
  void field(const char* name, std::vector<PolynomialTerm>& v) override {
    auto& a = j[name] = Json::array();
    for (const auto& t : v) {
      Json p = Json::object();
      for (const auto& [k, e] : t.powers) p[k] = e;
      a.push_back(Json{{"coef", t.coef}, {"powers", p}});
    }
  }
};

template <class T>
void visit_sub(FieldVisitor& v, const char* name, T& sub) {
  if (auto* w = dynamic_cast<Writer*>(&v)) {
    Writer inner;
    sub.visit(inner);
    w->j[name] = inner.j;
  } else if (auto* r = dynamic_cast<Reader*>(&v)) {
    r->read_sub(name, sub);
  }
}

void check(bool ok, const std::string& field, const std::string& what) {
  if (!ok) fail(field, what);
}

void check_density(const sampling::Density& d, const std::string& field) {
  try {
    sampling::validate(d);
  } catch (const std::exception& e) {
    fail(field, e.what());
  }
}

void check_scalar(const sampling::Density& d, const std::string& field) {
  check_density(d, field);
  check(sampling::dimension(d) == 1 && !std::holds_alternative<sampling::Empirical>(d) &&
            !std::holds_alternative<sampling::Hierarchical>(d) && !std::holds_alternative<sampling::Kde>(d),
        field, "expected a scalar parametric density");
}

void check_uniform(const sampling::Density& d, const std::string& field) {
  check_density(d, field);
  check(std::holds_alternative<sampling::Uniform>(d), field, "expected a uniform density");
}

void check_transport(const transport::TransportConfig& t, const std::string& field) {
  try {
    t.validate();
  } catch (const std::exception& e) {
    fail(field, e.what());
  }
}

void check_quantiles(double lo, double hi, const std::string& field) {
  check(lo > 0.0 && lo < hi && hi < 1.0, field, "quantile levels must satisfy 0 < lower < upper < 1");
}

void check_positive(double v, const std::string& field) { check(v > 0.0, field, "must be positive"); }

}  // namespace


Json density_to_json(const sampling::Density& d) {
  Json j;
  if (const auto* u = std::get_if<sampling::Uniform>(&d)) {
    j = Json{{"type", "uniform"}, {"lo", u->lo}, {"hi", u->hi}};
  } else if (const auto* n = std::get_if<sampling::Normal>(&d)) {
    j = Json{{"type", "normal"}, {"mean", n->mean}, {"sd", n->sd}};
  } else if (const auto* l = std::get_if<sampling::LogNormal>(&d)) {
    j = Json{{"type", "lognormal"}, {"mu", l->mu}, {"sigma", l->sigma}};
  } else if (const auto* t = std::get_if<sampling::TriangularUnitRange>(&d)) {
    j = Json{{"type", "triangular"}, {"lo", t->lo}, {"hi", t->hi}, {"mode", t->mode}};
  } else if (const auto* m = std::get_if<sampling::MultivariateNormal>(&d)) {
    j["type"] = "mvn";
    j["mean"] = std::vector<double>(m->mean.data(), m->mean.data() + m->mean.size());
    auto& c = j["covariance"] = Json::array();
    for (Eigen::Index r = 0; r < m->covariance.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(m->covariance.cols()));
      for (Eigen::Index k = 0; k < m->covariance.cols(); ++k) row[static_cast<std::size_t>(k)] = m->covariance(r, k);
      c.push_back(row);
    }
  } else if (const auto* h = std::get_if<sampling::Hierarchical>(&d)) {
    j["type"] = "hierarchical";
    j["family"] = family_name(h->family);
    auto& hy = j["hypers"] = Json::array();
    for (const auto& s : h->hypers) hy.push_back(scalar_to_json(s));
    j["lo"] = h->lo;
    j["hi"] = h->hi;
    j["shift"] = h->shift;
  } else if (const auto* e = std::get_if<sampling::Empirical>(&d)) {
    j["type"] = "empirical";
    auto& rows = j["samples"] = Json::array();
    for (Eigen::Index r = 0; r < e->samples.rows(); ++r)
      rows.push_back(std::vector<double>(e->samples.row(r).data(), e->samples.row(r).data() + e->samples.cols()));
  } else {
    const auto& k = std::get<sampling::Kde>(d);
    j = Json{{"type", "kde"}, {"samples", k.samples}, {"bandwidth", k.bandwidth}};
  }
  return j;
}

sampling::Density density_from_json(const Json& j, const std::string& path) {
  Obj o(j, path);
  const auto type = as_string(o.need("type"), o.path("type"));
  sampling::Density d;
  if (type == "uniform") {
    const double lo = o.number("lo"), hi = o.number("hi");
    if (!(lo < hi)) fail(o.path("hi"), "must exceed lo");
    d = sampling::Uniform{lo, hi};
  } else if (type == "normal") {
    const double mean = o.number("mean"), sd = o.number("sd");
    if (sd < 0.0) fail(o.path("sd"), "must be non-negative");
    d = sampling::Normal{mean, sd};
  } else if (type == "lognormal") {
    const double mu = o.number("mu"), sigma = o.number("sigma");
    if (!(sigma > 0.0)) fail(o.path("sigma"), "must be positive");
    d = sampling::LogNormal{mu, sigma};
  } else if (type == "triangular") {
    const double lo = o.number("lo"), hi = o.number("hi"), mode = o.number("mode");
    if (!(lo < hi)) fail(o.path("hi"), "must exceed lo");
    if (mode < lo || mode > hi) fail(o.path("mode"), "must lie in [lo, hi]");
    d = sampling::TriangularUnitRange{lo, hi, mode};
  } else if (type == "mvn") {
    const auto mean = as_vector(o.need("mean"), o.path("mean"));
    const auto& cov = o.need("covariance");
    if (!cov.is_array() || cov.size() != mean.size()) fail(o.path("covariance"), "expected a square matrix matching mean");
    sampling::MultivariateNormal m;
    m.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    m.covariance.resize(m.mean.size(), m.mean.size());
    for (std::size_t r = 0; r < mean.size(); ++r) {
      const auto row = as_vector(cov[r], o.path("covariance") + "[" + std::to_string(r) + "]");
      if (row.size() != mean.size()) fail(o.path("covariance") + "[" + std::to_string(r) + "]", "wrong row length");
      for (std::size_t k = 0; k < row.size(); ++k)
        m.covariance(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = row[k];
    }
    d = std::move(m);
  } else if (type == "hierarchical") {
    sampling::Hierarchical h;
    const auto fam = as_string(o.need("family"), o.path("family"));
    if (fam == "normal") h.family = sampling::Family::Normal;
    else if (fam == "lognormal") h.family = sampling::Family::LogNormal;
    else if (fam == "uniform") h.family = sampling::Family::Uniform;
    else if (fam == "triangular") h.family = sampling::Family::Triangular;
    else fail(o.path("family"), "unknown family '" + fam + "'");
    const auto& hy = o.need("hypers");
    if (!hy.is_array()) fail(o.path("hypers"), "expected an array of scalar densities");
    for (std::size_t i = 0; i < hy.size(); ++i)
      h.hypers.push_back(scalar_from_json(hy[i], o.path("hypers") + "[" + std::to_string(i) + "]"));
    if (h.hypers.size() != sampling::parameter_count(h.family))
      fail(o.path("hypers"), "expected " + std::to_string(sampling::parameter_count(h.family)) + " hyper densities");
    if (const Json* x = o.get("lo")) h.lo = as_number(*x, o.path("lo"));
    if (const Json* x = o.get("hi")) h.hi = as_number(*x, o.path("hi"));
    if (const Json* x = o.get("shift")) h.shift = as_number(*x, o.path("shift"));
    d = std::move(h);
  } else if (type == "empirical") {
    const auto& rows = o.need("samples");
    if (!rows.is_array() || rows.empty()) fail(o.path("samples"), "expected a nonempty array of rows");
    std::vector<std::vector<double>> v;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      v.push_back(as_vector(rows[r], o.path("samples") + "[" + std::to_string(r) + "]"));
      if (v.back().empty() || v.back().size() != v.front().size())
        fail(o.path("samples") + "[" + std::to_string(r) + "]", "rows must share a nonzero length");
    }
    sampling::Empirical e;
    e.samples.resize(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(v[0].size()));
    for (std::size_t r = 0; r < v.size(); ++r)
      for (std::size_t k = 0; k < v[r].size(); ++k)
        e.samples(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = v[r][k];
    d = std::move(e);
  } else if (type == "kde") {
    sampling::Kde k;
    k.samples = as_vector(o.need("samples"), o.path("samples"));
    k.bandwidth = o.number("bandwidth");
    d = std::move(k);
  } else {
    fail(o.path("type"), "unknown density type '" + type + "'");
  }
  o.finish();
  check_density(d, path);
  return d;
}

std::string to_string(Kind k) {
  switch (k) {
    case Kind::PolyInadequate: return "poly_inadequate";
    case Kind::PolyHierarchical: return "poly_hierarchical";
    case Kind::TransportForward: return "transport_forward";
    case Kind::TransportCalibrate: return "transport_calibrate";
    case Kind::TransportRobustness: return "transport_robustness";
    case Kind::GsaGeneric: return "gsa_generic";
    case Kind::Dci: return "dci";
  }
  return "";
}

Kind parse_kind(const std::string& s) {
  for (Kind k : {Kind::PolyInadequate, Kind::PolyHierarchical, Kind::TransportForward, Kind::TransportCalibrate,
                 Kind::TransportRobustness, Kind::GsaGeneric, Kind::Dci})
    if (to_string(k) == s) return k;
  throw ConfigError("experiment", "unknown experiment kind '" + s + "'");
}

// Field lists.

void PolyInadequateConfig::visit(FieldVisitor& v) {
  v.field("n_data", n_data);
  v.field("noise_sd", noise_sd);
  v.field("steps", steps);
  v.field("c0", c0);
  v.field("c1", c1);
  v.field("prior_draws", prior_draws);
  v.field("check_x", check_x);
  v.field("lower_q", lower_q);
  v.field("upper_q", upper_q);
  v.field("max_coverage", max_coverage);
}

void PolyInadequateConfig::validate() const {
  check(n_data >= 2, "settings.n_data", "need at least 2 data points");
  check_positive(noise_sd, "settings.noise_sd");
  check(steps >= 1000, "settings.steps", "need at least 1000 steps");
  check_uniform(c0, "settings.c0");
  check_uniform(c1, "settings.c1");
  check(prior_draws >= 2, "settings.prior_draws", "need at least 2 draws");
  check_quantiles(lower_q, upper_q, "settings.lower_q");
}

void PolyHierarchicalConfig::visit(FieldVisitor& v) {
  v.field("n_data", n_data);
  v.field("noise_sd", noise_sd);
  v.field("steps", steps);
  v.field("c0", c0);
  v.field("c1", c1);
  v.field("mu_c2", mu_c2);
  v.field("sigma_c2", sigma_c2);
  v.field("mu_alpha", mu_alpha);
  v.field("sigma_alpha", sigma_alpha);
  v.field("prior_draws", prior_draws);
  v.field("prior_gsa_n", prior_gsa_n);
  v.field("x_points", x_points);
  v.field("check_x", check_x);
  v.field("lower_q", lower_q);
  v.field("upper_q", upper_q);
  v.field("min_coverage", min_coverage);
}

void PolyHierarchicalConfig::validate() const {
  check(n_data >= 2, "settings.n_data", "need at least 2 data points");
  check_positive(noise_sd, "settings.noise_sd");
  check(steps >= 1000, "settings.steps", "need at least 1000 steps");
  check_uniform(c0, "settings.c0");
  check_uniform(c1, "settings.c1");
  check_scalar(mu_c2, "settings.mu_c2");
  check_uniform(sigma_c2, "settings.sigma_c2");
  check(std::get<sampling::Uniform>(sigma_c2).lo >= 0.0, "settings.sigma_c2.lo", "must be non-negative");
  check_scalar(mu_alpha, "settings.mu_alpha");
  check_uniform(sigma_alpha, "settings.sigma_alpha");
  check(std::get<sampling::Uniform>(sigma_alpha).lo >= 0.0, "settings.sigma_alpha.lo", "must be non-negative");
  check(prior_draws >= 2, "settings.prior_draws", "need at least 2 draws");
  check(prior_gsa_n >= 2, "settings.prior_gsa_n", "need at least 2 rows");
  check(x_points >= 2, "settings.x_points", "need at least 2 points");
  check_quantiles(lower_q, upper_q, "settings.lower_q");
}

void TransportInputs::visit(FieldVisitor& v) {
  v.field("u", u);
  v.field("nu_p", nu_p);
  v.field("s", s);
  v.field("nu_m", nu_m);
  v.field("alpha", alpha);
}

void TransportInputs::validate() const {
  check_scalar(u, "settings.inputs.u");
  check_scalar(nu_p, "settings.inputs.nu_p");
  check_scalar(s, "settings.inputs.s");
  check_scalar(nu_m, "settings.inputs.nu_m");
  check_scalar(alpha, "settings.inputs.alpha");
  const auto bounded = [](const sampling::Density& d, double lo, double hi) {
    const auto [a, b] = sampling::support(std::visit(
        [](const auto& x) -> sampling::ScalarDensity {
          if constexpr (std::is_convertible_v<decltype(x), sampling::ScalarDensity>) return x;
          else return sampling::Uniform{};
        },
        d));
    return a >= lo && b <= hi;
  };
  check(bounded(nu_p, 0.0, INFINITY), "settings.inputs.nu_p", "support must be non-negative");
  check(bounded(nu_m, 0.0, INFINITY), "settings.inputs.nu_m", "support must be non-negative");
  check(bounded(alpha, 1.0, 2.0), "settings.inputs.alpha", "support must lie in [1, 2]");
}

std::vector<gsa::ParameterBlock> TransportInputs::shared_blocks() const {
  return {{{"u"}, u}, {{"nu_p"}, nu_p}, {{"s"}, s}};
}

std::vector<gsa::ParameterBlock> TransportInputs::mfu_blocks() const { return {{{"nu_m"}, nu_m}, {{"alpha"}, alpha}}; }

transport::PhysicalParams TransportInputs::means() const {
  const auto m = [](const sampling::Density& d) {
    return std::visit(
        [](const auto& x) -> double {
          if constexpr (std::is_convertible_v<decltype(x), sampling::ScalarDensity>)
            return sampling::moments(sampling::ScalarDensity{x}).mean;
          else return 0.0;
        },
        d);
  };
  return {m(u), m(nu_p), m(s)};
}

void TransportForwardConfig::visit(FieldVisitor& v) {
  v.field("transport", transport);
  visit_sub(v, "inputs", inputs);
  v.field("n_samples", n_samples);
  v.field("bins", bins);
  v.field("gsa_n", gsa_n);
  v.field("snapshots", snapshots);
  v.field("snapshot_time", snapshot_time);
}

void TransportForwardConfig::validate() const {
  check_transport(transport, "settings.transport");
  inputs.validate();
  check(n_samples >= 2, "settings.n_samples", "need at least 2 samples");
  check(bins >= 1, "settings.bins", "need at least 1 bin");
  check(gsa_n >= 2, "settings.gsa_n", "need at least 2 rows");
  check(snapshot_time >= 0.0, "settings.snapshot_time", "must be non-negative");
}

TransportCalibrateConfig::TransportCalibrateConfig() {
  for (int i = 1; i <= 20; ++i) obs_times.push_back(0.01 * i);
}

void TransportCalibrateConfig::visit(FieldVisitor& v) {
  v.field("transport", transport);
  v.field("truth", truth);
  v.field("truth_operator", truth_operator);
  v.field("truth_amplitude", truth_amplitude);
  v.field("truth_period", truth_period);
  v.field("obs_x", obs_x);
  v.field("obs_times", obs_times);
  v.field("noise_sd", noise_sd);
  v.field("steps", steps);
  v.field("nominal", nominal);
  v.field("nominal_upper_ratio", nominal_upper_ratio);
  v.field("nominal_upper_p", nominal_upper_p);
  v.field("scaling_lo", scaling_lo);
  v.field("scaling_lo_p", scaling_lo_p);
  v.field("scaling_hi", scaling_hi);
  v.field("scaling_hi_p", scaling_hi_p);
  v.field("mu_sd_factor", mu_sd_factor);
  v.field("sigma_upper_ratio", sigma_upper_ratio);
  v.field("sigma_upper_p", sigma_upper_p);
  v.field("pushforward_n", pushforward_n);
  v.field("prior_gsa_n", prior_gsa_n);
  v.field("max_variance_ratio", max_variance_ratio);
}

void TransportCalibrateConfig::validate() const {
  check_transport(transport, "settings.transport");
  check(std::holds_alternative<transport::ComplexFractional>(truth_operator), "settings.truth_operator",
        "expected a complex_fractional operator");
  check(truth_period > 0.0, "settings.truth_period", "must be positive");
  check(obs_x >= 0.0 && obs_x <= transport.lx, "settings.obs_x", "must lie in [0, lx]");
  check(!obs_times.empty(), "settings.obs_times", "need at least one time");
  for (double t : obs_times) check(t > 0.0, "settings.obs_times", "times must be positive");
  check_positive(noise_sd, "settings.noise_sd");
  check(steps >= 1000, "settings.steps", "need at least 1000 steps");
  check_positive(nominal.u_mean, "settings.nominal.u_mean");
  check_positive(nominal.nu_p, "settings.nominal.nu_p");
  check_positive(nominal.s, "settings.nominal.s");
  check(nominal_upper_ratio > 1.0, "settings.nominal_upper_ratio", "must exceed 1");
  check(nominal_upper_p > 0.5 && nominal_upper_p < 1.0, "settings.nominal_upper_p", "must lie in (0.5, 1)");
  check(scaling_lo > 0.0 && scaling_lo < scaling_hi, "settings.scaling_lo", "need 0 < scaling_lo < scaling_hi");
  check(scaling_lo_p > 0.0 && scaling_lo_p < scaling_hi_p && scaling_hi_p < 1.0, "settings.scaling_lo_p",
        "need 0 < scaling_lo_p < scaling_hi_p < 1");
  check_positive(mu_sd_factor, "settings.mu_sd_factor");
  check(sigma_upper_ratio > 1.0, "settings.sigma_upper_ratio", "must exceed 1");
  check(sigma_upper_p > 0.5 && sigma_upper_p < 1.0, "settings.sigma_upper_p", "must lie in (0.5, 1)");
  check(pushforward_n >= 2, "settings.pushforward_n", "need at least 2 draws");
  check(prior_gsa_n >= 2, "settings.prior_gsa_n", "need at least 2 rows");
}

void DciSettings::visit(FieldVisitor& v) {
  v.field("target_n", target_n);
  v.field("fit_n", fit_n);
  v.field("proposals_n", proposals_n);
  v.field("predict_n", predict_n);
  v.field("safety", safety);
  v.field("target_bandwidth", target_bandwidth);
  v.field("predict_bandwidth", predict_bandwidth);
  v.field("shared_bandwidth", shared_bandwidth);
}

void DciSettings::validate(std::size_t nk) const {
  check(target_n >= 2, "settings.dci.target_n", "need at least 2 samples");
  check(fit_n >= 2 * nk + 1, "settings.dci.fit_n",
        "need at least " + std::to_string(2 * nk + 1) + " rows to fit the eigenvalue covariance");
  check(proposals_n >= 2, "settings.dci.proposals_n", "need at least 2 proposals");
  check(predict_n >= 2 && predict_n <= proposals_n, "settings.dci.predict_n", "must lie in [2, proposals_n]");
  check(safety >= 1.0, "settings.dci.safety", "must be at least 1");
  check(target_bandwidth >= 0.0, "settings.dci.target_bandwidth", "must be non-negative");
  check(predict_bandwidth >= 0.0, "settings.dci.predict_bandwidth", "must be non-negative");
}

void DciConfig::visit(FieldVisitor& v) {
  v.field("transport", transport);
  visit_sub(v, "inputs", inputs);
  visit_sub(v, "dci", dci);
  v.field("heldout_n", heldout_n);
  v.field("identity_n", identity_n);
  v.field("max_ks", max_ks);
  v.field("bins", bins);
  v.field("write_accepted", write_accepted);
}

void DciConfig::validate() const {
  check_transport(transport, "settings.transport");
  inputs.validate();
  dci.validate(transport.modes());
  check(heldout_n >= 2, "settings.heldout_n", "need at least 2 samples");
  check(identity_n >= 2, "settings.identity_n", "need at least 2 samples");
  check(max_ks > 0.0 && max_ks <= 1.0, "settings.max_ks", "must lie in (0, 1]");
  check(bins >= 1, "settings.bins", "need at least 1 bin");
}

void TransportRobustnessConfig::visit(FieldVisitor& v) {
  v.field("transport", transport);
  visit_sub(v, "inputs", inputs);
  visit_sub(v, "dci", dci);
  v.field("gsa_n", gsa_n);
  v.field("replicates", replicates);
  v.field("outer_n", outer_n);
  v.field("inner_n", inner_n);
  v.field("order", order);
  v.field("sd_multiplier", sd_multiplier);
  v.field("variance_tolerance", variance_tolerance);
  v.field("max_mean_difference", max_mean_difference);
}

void TransportRobustnessConfig::validate() const {
  check_transport(transport, "settings.transport");
  inputs.validate();
  dci.validate(transport.modes());
  check(gsa_n >= 2, "settings.gsa_n", "need at least 2 rows");
  check(replicates >= 2, "settings.replicates", "need at least 2 replicates");
  check(outer_n >= 2, "settings.outer_n", "need at least 2 outer draws");
  check(inner_n >= 2, "settings.inner_n", "need at least 2 inner draws");
  check(order >= 2, "settings.order", "need at least 2 nodes");
  check(sd_multiplier >= 0.0, "settings.sd_multiplier", "must be non-negative");
  check_positive(variance_tolerance, "settings.variance_tolerance");
  check_positive(max_mean_difference, "settings.max_mean_difference");
}

void GsaGenericConfig::visit(FieldVisitor& v) {
  v.field("blocks", blocks);
  v.field("groups", groups);
  v.field("model", model);
  v.field("n", n);
  v.field("replicates", replicates);
}

void GsaGenericConfig::validate() const {
  check(!blocks.empty(), "settings.blocks", "need at least one block");
  check(!groups.empty(), "settings.groups", "need at least one group");
  check(!model.empty(), "settings.model", "need at least one term");
  std::set<std::string> names;
  for (std::size_t i = 0; i < blocks.size(); ++i)
    for (const auto& nm : blocks[i].names)
      check(names.insert(nm).second, "settings.blocks[" + std::to_string(i) + "].names",
            "duplicate parameter '" + nm + "'");
  std::set<std::string> grouped;
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (const auto& m : groups[g].members) {
      const auto f = "settings.groups[" + std::to_string(g) + "].members";
      check(names.count(m) == 1, f, "unknown parameter '" + m + "'");
      check(grouped.insert(m).second, f, "parameter '" + m + "' is in more than one group");
    }
  for (const auto& nm : names) check(grouped.count(nm) == 1, "settings.groups", "parameter '" + nm + "' is in no group");
  for (std::size_t t = 0; t < model.size(); ++t)
    for (const auto& [nm, p] : model[t].powers)
      check(names.count(nm) == 1, "settings.model[" + std::to_string(t) + "].powers." + nm,
            "unknown parameter '" + nm + "'");
  check(n >= 2, "settings.n", "need at least 2 rows");
  check(replicates >= 2, "settings.replicates", "need at least 2 replicates");
  std::vector<std::pair<std::string, std::vector<std::string>>> gs;
  for (const auto& g : groups) gs.emplace_back(g.name, g.members);
  try {
    gsa::make_space(blocks, gs).validate();
  } catch (const std::exception& e) {
    fail("settings.groups", e.what());
  }
}

Settings default_settings(Kind k) {
  switch (k) {
    case Kind::PolyInadequate: return PolyInadequateConfig{};
    case Kind::PolyHierarchical: return PolyHierarchicalConfig{};
    case Kind::TransportForward: return TransportForwardConfig{};
    case Kind::TransportCalibrate: return TransportCalibrateConfig{};
    case Kind::TransportRobustness: return TransportRobustnessConfig{};
    case Kind::Dci: return DciConfig{};
    case Kind::GsaGeneric: {
      GsaGenericConfig g;
      for (const char* nm : {"x1", "x2", "x3"}) g.blocks.push_back({{nm}, sampling::Normal{0.0, 1.0}});
      g.groups = {{"g1", {"x1"}}, {"g23", {"x2", "x3"}}};
      g.model = {{1.0, {{"x1", 1.0}}}, {1.0, {{"x2", 1.0}}}, {1.0, {{"x1", 1.0}, {"x3", 1.0}}}};
      return g;
    }
  }
  return GsaGenericConfig{};
}

void validate(const ExperimentConfig& cfg) {
  check(cfg.schema_version == kSchemaVersion, "schema_version",
        "unsupported schema version " + std::to_string(cfg.schema_version));
  std::visit([](const auto& s) { s.validate(); }, cfg.settings);
}

ExperimentConfig parse_config(const std::string& json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    fail("<document>", std::string("invalid JSON: ") + e.what());
  }
  Obj o(j, "");
  ExperimentConfig cfg;
  const Json& version = o.need("schema_version");
  if (!version.is_number_integer()) fail("schema_version", "expected an integer");
  cfg.schema_version = version.get<int>();
  if (cfg.schema_version != kSchemaVersion)
    fail("schema_version", "unsupported schema version " + std::to_string(cfg.schema_version));
  cfg.kind = parse_kind(as_string(o.need("experiment"), "experiment"));
  const Json& seed = o.need("seed");
  if (!seed.is_number_unsigned()) fail("seed", "expected a non-negative integer");
  cfg.seed = seed.get<std::uint64_t>();
  if (const Json* out = o.get("output")) cfg.output = as_string(*out, "output");
  cfg.settings = default_settings(cfg.kind);
  if (const Json* s = o.get("settings")) {
    std::visit(
        [&](auto& st) {
          Reader r(*s, "settings");
          st.visit(r);
          r.finish();
        },
        cfg.settings);
  }
  o.finish();
  validate(cfg);
  return cfg;
}

Json to_json(const ExperimentConfig& cfg) {
  Json j;
  j["schema_version"] = cfg.schema_version;
  j["experiment"] = to_string(cfg.kind);
  j["seed"] = cfg.seed;
  if (!cfg.output.empty()) j["output"] = cfg.output;
  Writer w;
  auto settings = cfg.settings;
  std::visit([&](auto& s) { s.visit(w); }, settings);
  j["settings"] = w.j;
  return j;
}

}  // namespace mfu::experiments
