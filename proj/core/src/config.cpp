#include "ploc/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

namespace ploc {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& s, int line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("expected a number, got '" + s + "'", line);
  }
}

int to_int(const std::string& s, int line) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return static_cast<int>(v);
  } catch (const std::exception&) {
    throw ConfigError("expected an integer, got '" + s + "'", line);
  }
}

std::uint64_t to_u64(const std::string& s, int line) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("expected an unsigned integer, got '" + s + "'", line);
  }
}

bool to_bool(const std::string& s, int line) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw ConfigError("expected true or false, got '" + s + "'", line);
}

std::vector<double> to_list(const std::string& s, int line) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) out.push_back(to_double(trim(item), line));
  if (out.empty()) throw ConfigError("expected a comma-separated list, got '" + s + "'", line);
  return out;
}

struct ExprParts {
  std::string kind;
  std::vector<double> params;
};

ExprParts split_expr(const std::string& text) {
  const std::size_t colon = text.find(':');
  ExprParts parts;
  parts.kind = trim(colon == std::string::npos ? text : text.substr(0, colon));
  if (colon != std::string::npos) parts.params = to_list(text.substr(colon + 1), 0);
  return parts;
}

void need_arity(const ExprParts& p, std::size_t want) {
  if (p.params.size() != want)
    throw ConfigError("'" + p.kind + "' takes " + std::to_string(want) + " parameter(s), got " +
                      std::to_string(p.params.size()));
}

}  // namespace

ScalarFunc parse_scalar_func(const std::string& text) {
  ExprParts p = split_expr(text);
  if (p.kind == "zero") {
    need_arity(p, 0);
    return scalar_zero();
  }
  if (p.kind == "affine") {
    need_arity(p, 2);
    return scalar_affine(p.params[0], p.params[1]);
  }
  if (p.kind == "poly3") {
    need_arity(p, 4);
    return scalar_poly3(p.params[0], p.params[1], p.params[2], p.params[3]);
  }
  if (p.kind == "arctan") {
    need_arity(p, 2);
    return scalar_arctan(p.params[0], p.params[1]);
  }
  if (p.kind == "offset_arctan") {
    need_arity(p, 3);
    return scalar_affine_plus_arctan(p.params[0], p.params[1], p.params[2]);
  }
  throw ConfigError("unknown reaction '" + p.kind +
                    "' (builtin: zero, affine, poly3, arctan, offset_arctan)");
}

RunningCost parse_running_cost(const std::string& text) {
  ExprParts p = split_expr(text);
  if (p.kind == "zero") {
    need_arity(p, 0);
    return running_zero();
  }
  if (p.kind == "track") {
    need_arity(p, 2);
    return running_tracking(p.params[0], p.params[1]);
  }
  throw ConfigError("unknown running cost '" + p.kind + "' (builtin: zero, track)");
}

ControlCost parse_control_cost(const std::string& text) {
  ExprParts p = split_expr(text);
  if (p.kind == "linear") {
    need_arity(p, 1);
    return control_linear(p.params[0]);
  }
  if (p.kind == "quadratic") {
    need_arity(p, 2);
    return control_quadratic(p.params[0], p.params[1]);
  }
  throw ConfigError("unknown control cost '" + p.kind + "' (builtin: linear, quadratic)");
}

RunConfig parse_config_text(const std::string& text) {
  static const std::set<std::string> known = {
      "instance",       "mesh.n",           "eps",
      "problem.dim",    "problem.p",        "problem.a",
      "problem.b",      "problem.f",        "problem.f0",
      "problem.g",      "schedule.eps",     "schedule.sigma",
      "schedule.m",     "schedule.tau",     "inner.max_sweeps",
      "inner.control_tol", "inner.pointwise", "inner.golden_iters",
      "newton.max_iter", "newton.tol_abs",  "newton.tol_rel",
      "output.dir",     "seed"};

  struct Entry {
    std::string value;
    int line = 0;
  };
  std::map<std::string, Entry> entries;

  std::istringstream is(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected 'key = value', got '" + line + "'", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key", line_no);
    if (!known.count(key)) throw ConfigError("unknown key '" + key + "'", line_no);
    if (entries.count(key)) throw ConfigError("duplicate key '" + key + "'", line_no);
    entries[key] = {value, line_no};
  }

  auto take = [&](const char* key) -> const Entry* {
    auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
  };

  RunConfig cfg;

  const Entry* inst = take("instance");
  const bool has_inline = entries.count("problem.p") || entries.count("problem.a") ||
                          entries.count("problem.b") || entries.count("problem.f") ||
                          entries.count("problem.f0") || entries.count("problem.g") ||
                          entries.count("problem.dim");
  if (inst && has_inline)
    throw ConfigError("'instance' and inline problem.* keys are mutually exclusive", inst->line);

  if (inst) {
    const LibraryInstance* found = nullptr;
    try {
      found = &find_instance(inst->value);
    } catch (const std::out_of_range& e) {
      throw ConfigError(e.what(), inst->line);
    }
    cfg.instance = found->name;
    cfg.problem = found->spec;
    cfg.n = found->default_n;
    cfg.eps_target = found->default_eps;
  } else {
    if (const Entry* e = take("problem.dim")) {
      cfg.problem.domain.dim = to_int(e->value, e->line);
      if (cfg.problem.domain.dim != 1 && cfg.problem.domain.dim != 2)
        throw ConfigError("problem.dim must be 1 or 2", e->line);
    }
    if (const Entry* e = take("problem.p")) cfg.problem.p = to_double(e->value, e->line);
    if (const Entry* e = take("problem.a")) cfg.problem.a = to_double(e->value, e->line);
    if (const Entry* e = take("problem.b")) cfg.problem.b = to_double(e->value, e->line);
    cfg.problem.f = scalar_zero();
    cfg.problem.f0 = running_zero();
    cfg.problem.g = control_linear(1.0);
    auto reparse = [](const auto& parser, const Entry& e) {
      try {
        return parser(e.value);
      } catch (const ConfigError& err) {
        throw ConfigError(err.what(), e.line);
      }
    };
    if (const Entry* e = take("problem.f")) cfg.problem.f = reparse(parse_scalar_func, *e);
    if (const Entry* e = take("problem.f0")) cfg.problem.f0 = reparse(parse_running_cost, *e);
    if (const Entry* e = take("problem.g")) cfg.problem.g = reparse(parse_control_cost, *e);
  }

  if (const Entry* e = take("mesh.n")) cfg.n = to_int(e->value, e->line);
  if (const Entry* e = take("eps")) cfg.eps_target = to_double(e->value, e->line);
  if (const Entry* e = take("schedule.eps")) cfg.schedule.eps = to_list(e->value, e->line);
  if (const Entry* e = take("schedule.sigma")) cfg.schedule.sigma = to_list(e->value, e->line);
  if (const Entry* e = take("schedule.m")) cfg.schedule.m = to_list(e->value, e->line);
  if (const Entry* e = take("schedule.tau")) cfg.schedule.tau = to_list(e->value, e->line);
  if (const Entry* e = take("inner.max_sweeps")) cfg.inner.max_sweeps = to_int(e->value, e->line);
  if (const Entry* e = take("inner.control_tol"))
    cfg.inner.control_tol_l2 = to_double(e->value, e->line);
  if (const Entry* e = take("inner.pointwise"))
    cfg.inner.use_pointwise_updates = to_bool(e->value, e->line);
  if (const Entry* e = take("inner.golden_iters"))
    cfg.inner.golden_iters = to_int(e->value, e->line);
  if (const Entry* e = take("newton.max_iter")) cfg.newton.max_iter = to_int(e->value, e->line);
  if (const Entry* e = take("newton.tol_abs")) cfg.newton.tol_abs = to_double(e->value, e->line);
  if (const Entry* e = take("newton.tol_rel")) cfg.newton.tol_rel = to_double(e->value, e->line);
  if (const Entry* e = take("output.dir")) cfg.out_dir = e->value;
  if (const Entry* e = take("seed")) cfg.seed = to_u64(e->value, e->line);

  if (cfg.n < 2) throw ConfigError("mesh.n must be >= 2");
  if (!(cfg.eps_target > 0.0 && cfg.eps_target <= 1.0))
    throw ConfigError("eps must lie in (0, 1]");
  try {
    cfg.problem.validate();
    cfg.schedule.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string config_to_text(const RunConfig& c) {
  std::ostringstream os;
  if (!c.instance.empty()) {
    os << "instance = " << c.instance << "\n";
  } else {
    const bool builtin = c.problem.f.repr.find("profile") == std::string::npos &&
                         c.problem.f0.repr.find("profile") == std::string::npos &&
                         c.problem.g.repr.find("profile") == std::string::npos;
    if (!builtin)
      throw ConfigError(
          "profile-based nonlinearities are not expressible in config files; "
          "reference the instance by name");
    os << "problem.dim = " << c.problem.domain.dim << "\n";
    os << "problem.p = " << fmt(c.problem.p) << "\n";
    os << "problem.a = " << fmt(c.problem.a) << "\n";
    os << "problem.b = " << fmt(c.problem.b) << "\n";
    os << "problem.f = " << c.problem.f.repr << "\n";
    os << "problem.f0 = " << c.problem.f0.repr << "\n";
    os << "problem.g = " << c.problem.g.repr << "\n";
  }
  os << "mesh.n = " << c.n << "\n";
  os << "eps = " << fmt(c.eps_target) << "\n";
  auto list = [&](const char* key, const std::vector<double>& v) {
    os << key << " = ";
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << fmt(v[i]);
    os << "\n";
  };
  list("schedule.eps", c.schedule.eps);
  list("schedule.sigma", c.schedule.sigma);
  list("schedule.m", c.schedule.m);
  list("schedule.tau", c.schedule.tau);
  os << "inner.max_sweeps = " << c.inner.max_sweeps << "\n";
  os << "inner.control_tol = " << fmt(c.inner.control_tol_l2) << "\n";
  os << "inner.pointwise = " << (c.inner.use_pointwise_updates ? "true" : "false") << "\n";
  os << "inner.golden_iters = " << c.inner.golden_iters << "\n";
  os << "newton.max_iter = " << c.newton.max_iter << "\n";
  os << "newton.tol_abs = " << fmt(c.newton.tol_abs) << "\n";
  os << "newton.tol_rel = " << fmt(c.newton.tol_rel) << "\n";
  os << "output.dir = " << c.out_dir << "\n";
  os << "seed = " << c.seed << "\n";
  return os.str();
}

void write_config(const std::string& path, const RunConfig& c) {
  const std::string text = config_to_text(c);
  std::FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw ConfigError("cannot open for writing: " + path);
  std::fwrite(text.data(), 1, text.size(), fp);
  std::fclose(fp);
}

}  // namespace ploc
