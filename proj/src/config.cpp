#include "mfsc/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "mfsc/error.hpp"
#include "mfsc/io.hpp"

namespace mfsc {

// ---------------------------------------------------------------------------
// TOML subset

namespace {

class TomlParser {
 public:
  explicit TomlParser(const std::string& text) : s_(text) {}

  TomlDocument parse() {
    TomlDocument doc;
    std::string table;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        ++pos_;
        skip_spaces();
        table = key_path();
        skip_spaces();
        expect(']');
        if (std::find(doc.tables.begin(), doc.tables.end(), table) != doc.tables.end()) {
          fail("table [" + table + "] defined twice");
        }
        doc.tables.push_back(table);
      } else {
        const int line = line_;
        const std::string key = key_path();
        skip_spaces();
        expect('=');
        skip_spaces();
        TomlValue v = value();
        v.line = line;
        const std::string full = table.empty() ? key : table + "." + key;
        if (!doc.values.emplace(full, std::move(v)).second) fail("key '" + full + "' assigned twice");
      }
      end_of_line();
    }
    return doc;
  }

 private:
  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return s_[pos_]; }
  [[noreturn]] void fail(const std::string& what) const { throw TomlParseError(what, line_); }

  void expect(char c) {
    if (eof() || peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_spaces() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }

  void skip_comment() {
    if (!eof() && peek() == '#') {
      while (!eof() && peek() != '\n') ++pos_;
    }
  }

  void newline() {
    if (peek() == '\r') ++pos_;
    if (!eof() && peek() == '\n') {
      ++pos_;
      ++line_;
    }
  }

  void skip_blank_lines() {
    while (true) {
      skip_spaces();
      skip_comment();
      if (eof()) return;
      if (peek() == '\n' || peek() == '\r') {
        newline();
        continue;
      }
      return;
    }
  }

  void end_of_line() {
    skip_spaces();
    skip_comment();
    if (eof()) return;
    if (peek() != '\n' && peek() != '\r') fail("unexpected text after value");
    newline();
  }

  static bool bare(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

  std::string key_path() {
    std::string out;
    while (true) {
      const std::size_t start = pos_;
      while (!eof() && bare(peek())) ++pos_;
      if (pos_ == start) fail("expected a key");
      out += s_.substr(start, pos_ - start);
      skip_spaces();
      if (!eof() && peek() == '.') {
        ++pos_;
        skip_spaces();
        out += '.';
        continue;
      }
      return out;
    }
  }

  TomlValue value() {
    if (eof()) fail("expected a value");
    TomlValue v;
    v.line = line_;
    const char c = peek();
    if (c == '"') {
      v.kind = TomlValue::Kind::string;
      v.text = string_literal();
    } else if (c == '[') {
      v.kind = TomlValue::Kind::array;
      ++pos_;
      while (true) {
        skip_blank_lines();
        if (eof()) fail("unterminated array");
        if (peek() == ']') {
          ++pos_;
          break;
        }
        v.items.push_back(value());
        skip_blank_lines();
        if (eof()) fail("unterminated array");
        if (peek() == ',') {
          ++pos_;
        } else if (peek() != ']') {
          fail("expected ',' or ']' in array");
        }
      }
    } else if (s_.compare(pos_, 4, "true") == 0 && !bare_at(pos_ + 4)) {
      v.kind = TomlValue::Kind::boolean;
      v.boolean = true;
      pos_ += 4;
    } else if (s_.compare(pos_, 5, "false") == 0 && !bare_at(pos_ + 5)) {
      v.kind = TomlValue::Kind::boolean;
      v.boolean = false;
      pos_ += 5;
    } else {
      const std::size_t start = pos_;
      while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' ||
                        peek() == '.')) {
        ++pos_;
      }
      std::string tok = s_.substr(start, pos_ - start);
      if (tok.empty()) fail("expected a value");
      v.kind = TomlValue::Kind::number;
      v.integer = tok.find_first_of(".eE") == std::string::npos;
      const char* first = tok.data();
      if (*first == '+') ++first;
      const auto res = std::from_chars(first, tok.data() + tok.size(), v.number);
      if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || !std::isfinite(v.number)) {
        fail("invalid number '" + tok + "'");
      }
    }
    return v;
  }

  bool bare_at(std::size_t p) const { return p < s_.size() && bare(s_[p]); }

  std::string string_literal() {
    ++pos_;
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = s_[pos_++];
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (eof()) fail("unterminated string");
      const char e = s_[pos_++];
      switch (e) {
        case '"':
          out += '"';
          break;
        case '\\':
          out += '\\';
          break;
        case 'n':
          out += '\n';
          break;
        case 't':
          out += '\t';
          break;
        default:
          fail(std::string("unsupported escape '\\") + e + "'");
      }
    }
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

}  // namespace

TomlDocument parse_toml(const std::string& text) { return TomlParser(text).parse(); }

// ---------------------------------------------------------------------------
// Typed config

std::string to_string(RunMode m) {
  switch (m) {
    case RunMode::simulate:
      return "simulate";
    case RunMode::optimize:
      return "optimize";
    case RunMode::meanfield:
      return "meanfield";
    case RunMode::gamma:
      return "gamma";
    case RunMode::stability:
      return "stability";
    case RunMode::sweep:
      return "sweep";
  }
  return "simulate";
}

std::string Diagnostic::str() const {
  std::string out = code + " " + (path.empty() ? "<root>" : path) + ": " + message;
  if (line > 0) out += " (line " + std::to_string(line) + ")";
  return out;
}

bool ValidationResult::has(const std::string& code, const std::string& path) const {
  return std::any_of(diagnostics.begin(), diagnostics.end(),
                     [&](const Diagnostic& d) { return d.code == code && d.path == path; });
}

ControlSignal ExperimentConfig::control() const {
  if (control_source == ControlSource::values) {
    return ControlSignal(leaders(), dim, cells, horizon, radius, control_values);
  }
  return ControlSignal(leaders(), dim, cells, horizon, radius);
}

Configuration ExperimentConfig::initial_configuration() const {
  if (follower_atoms) return Configuration::from_measure(dim, leader_y, leader_w, *follower_atoms);
  if (followers > 0 && density) {
    return Configuration::from_measure(dim, leader_y, leader_w, sample_initial_measure(*density, followers, seed));
  }
  return Configuration::from_parts(dim, leader_y, leader_w, {}, {});
}

OptimalControlProblem ExperimentConfig::problem() const {
  OptimalControlProblem p;
  p.initial = initial_configuration();
  p.kernel = kernel;
  p.cost = cost;
  p.horizon = horizon;
  p.cells = cells;
  p.radius = radius;
  p.n_steps = n_steps;
  p.options = optimizer;
  return p;
}

LimitExperimentSpec ExperimentConfig::experiment_spec() const {
  if (!density) throw InvalidInput("experiment modes need a follower density");
  LimitExperimentSpec s;
  s.followers = *density;
  s.leader_y = leader_y;
  s.leader_w = leader_w;
  s.kernel = kernel;
  s.cost = cost;
  s.horizon = horizon;
  s.n_steps = n_steps;
  s.cells = cells;
  s.radius = radius;
  if (control_source == ControlSource::values) s.control_values = control_values;
  s.n_list = n_list;
  s.n_ref = n_ref;
  s.seed = seed;
  s.eval_every = eval_every;
  s.optimizer = optimizer;
  s.gamma_list = gamma_list;
  s.delta0 = delta0;
  s.pairs = pairs;
  s.stability_n = stability_n;
  s.lipschitz_samples = lipschitz_samples;
  s.monotone_slack = monotone_slack;
  return s;
}

namespace {

using Kind = TomlValue::Kind;

const std::set<std::string> kTables = {"kernel", "leaders", "followers", "control", "cost",
                                       "grid",   "experiment", "optimizer", "output"};

class Reader {
 public:
  Reader(const TomlDocument& doc, std::vector<Diagnostic>& diags) : doc_(doc), diags_(diags) {}

  void error(const std::string& code, const std::string& path, const std::string& msg, int line = 0) {
    diags_.push_back({code, path, msg, line});
  }

  bool present(const std::string& p) const { return doc_.values.count(p) != 0; }

  const TomlValue* find(const std::string& p, bool required) {
    auto it = doc_.values.find(p);
    if (it == doc_.values.end()) {
      if (required) error("E_MISSING", p, "is required");
      return nullptr;
    }
    used_.insert(p);
    return &it->second;
  }

  std::optional<double> number(const std::string& p, bool required) {
    const TomlValue* v = find(p, required);
    if (!v) return std::nullopt;
    if (v->kind != Kind::number) {
      error("E_TYPE", p, "must be a number", v->line);
      return std::nullopt;
    }
    return v->number;
  }

  std::optional<long long> integer(const std::string& p, bool required) {
    const TomlValue* v = find(p, required);
    if (!v) return std::nullopt;
    if (v->kind != Kind::number || v->number != std::floor(v->number) || std::fabs(v->number) > 9.0e15) {
      error("E_TYPE", p, "must be an integer", v->line);
      return std::nullopt;
    }
    return static_cast<long long>(v->number);
  }

  std::optional<std::string> string(const std::string& p, bool required) {
    const TomlValue* v = find(p, required);
    if (!v) return std::nullopt;
    if (v->kind != Kind::string) {
      error("E_TYPE", p, "must be a string", v->line);
      return std::nullopt;
    }
    return v->text;
  }

  static bool flat_numbers(const TomlValue& v, std::vector<double>& out) {
    if (v.kind != Kind::array) return false;
    for (const auto& it : v.items) {
      if (it.kind != Kind::number) return false;
      out.push_back(it.number);
    }
    return true;
  }

  std::optional<std::vector<double>> numbers(const std::string& p, bool required) {
    const TomlValue* v = find(p, required);
    if (!v) return std::nullopt;
    std::vector<double> out;
    if (!flat_numbers(*v, out)) {
      error("E_TYPE", p, "must be an array of numbers", v->line);
      return std::nullopt;
    }
    return out;
  }

  // Array of arrays of numbers, each of length `width`; flattened.
  std::optional<std::vector<double>> rows(const TomlValue& v, const std::string& p, std::size_t width,
                                          std::size_t* count) {
    std::vector<double> out;
    bool ok = v.kind == Kind::array;
    if (ok) {
      for (const auto& row : v.items) {
        const std::size_t before = out.size();
        if (!flat_numbers(row, out) || out.size() - before != width) {
          ok = false;
          break;
        }
      }
    }
    if (!ok) {
      error("E_TYPE", p, "must be an array of arrays with " + std::to_string(width) + " numbers each", v.line);
      return std::nullopt;
    }
    if (count) *count = v.items.size();
    return out;
  }

  int line(const std::string& p) const {
    auto it = doc_.values.find(p);
    return it == doc_.values.end() ? 0 : it->second.line;
  }

  void report_unused() {
    for (const auto& [k, v] : doc_.values) {
      if (!used_.count(k)) error("E_UNKNOWN_KEY", k, "unknown key (not used by this mode or family)", v.line);
    }
    for (const auto& t : doc_.tables) {
      if (!kTables.count(t)) error("E_UNKNOWN_KEY", t, "unknown table");
    }
  }

 private:
  const TomlDocument& doc_;
  std::vector<Diagnostic>& diags_;
  std::set<std::string> used_;
};

template <class T>
void check(Reader& r, const std::string& path, const std::optional<T>& v, bool ok, const std::string& msg) {
  if (v && !ok) r.error("E_CONSTRAINT", path, msg, r.line(path));
}

std::optional<EmpiricalMeasure> read_atoms(Reader& r, const std::string& path, int dim,
                                           const std::filesystem::path& base, std::string* file) {
  const TomlValue* v = r.find(path, false);
  if (!v) return std::nullopt;
  try {
    if (v->kind == Kind::string) {
      const std::filesystem::path f = std::filesystem::path(v->text).is_absolute() ? std::filesystem::path(v->text) : base / v->text;
      if (!std::filesystem::exists(f)) {
        r.error("E_FILE", path, "file '" + f.string() + "' does not exist", v->line);
        return std::nullopt;
      }
      if (file) *file = v->text;
      EmpiricalMeasure mu = read_measure_csv(f);
      if (mu.dim() != dim) {
        r.error("E_CONSTRAINT", path, "atoms must have 2*dim coordinates", v->line);
        return std::nullopt;
      }
      return mu;
    }
    std::size_t count = 0;
    auto flat = r.rows(*v, path, static_cast<std::size_t>(2 * dim), &count);
    if (!flat) return std::nullopt;
    if (count == 0) {
      r.error("E_CONSTRAINT", path, "must contain at least one atom", v->line);
      return std::nullopt;
    }
    return EmpiricalMeasure::uniform(dim, std::move(*flat));
  } catch (const std::exception& e) {
    r.error("E_FILE", path, e.what(), v->line);
    return std::nullopt;
  }
}

bool needs_density(RunMode m) {
  return m == RunMode::meanfield || m == RunMode::gamma || m == RunMode::stability || m == RunMode::sweep;
}

void read_kernel(Reader& r, ExperimentConfig& c) {
  const auto fam = r.string("kernel.family", true);
  if (!fam) return;
  const auto gc = r.number("kernel.growth_constant", false);
  check(r, "kernel.growth_constant", gc, gc && *gc > 0.0, "must be positive");
  const std::optional<double> declared = gc && *gc > 0.0 ? gc : std::nullopt;
  try {
    if (*fam == "cucker_smale") {
      CuckerSmaleParams p;
      const auto K = r.number("kernel.strength", false);
      const auto sg = r.number("kernel.scale", false);
      const auto be = r.number("kernel.exponent", false);
      const auto s = r.number("kernel.sign", false);
      check(r, "kernel.strength", K, K && *K > 0.0, "must be positive");
      check(r, "kernel.scale", sg, sg && *sg > 0.0, "must be positive");
      check(r, "kernel.exponent", be, be && *be >= 0.0, "must be nonnegative");
      check(r, "kernel.sign", s, s && (*s == 1.0 || *s == -1.0), "must be +1 or -1");
      if ((K && !(*K > 0.0)) || (sg && !(*sg > 0.0)) || (be && !(*be >= 0.0)) || (s && *s != 1.0 && *s != -1.0)) {
        return;
      }
      p.strength = K.value_or(p.strength);
      p.scale = sg.value_or(p.scale);
      p.exponent = be.value_or(p.exponent);
      p.sign = s.value_or(p.sign);
      c.kernel = Kernel::cucker_smale(c.dim, p, declared);
    } else if (*fam == "repulsion_attraction") {
      RepulsionAttractionParams p;
      const auto sr = r.number("kernel.repulsion", false);
      const auto sa = r.number("kernel.attraction", false);
      const auto eps = r.number("kernel.cap", false);
      check(r, "kernel.repulsion", sr, sr && *sr >= 0.0, "must be nonnegative");
      check(r, "kernel.attraction", sa, sa && *sa >= 0.0, "must be nonnegative");
      check(r, "kernel.cap", eps, eps && *eps > 0.0, "must be positive");
      if ((sr && !(*sr >= 0.0)) || (sa && !(*sa >= 0.0)) || (eps && !(*eps > 0.0))) return;
      p.repulsion = sr.value_or(p.repulsion);
      p.attraction = sa.value_or(p.attraction);
      p.cap = eps.value_or(p.cap);
      c.kernel = Kernel::repulsion_attraction(c.dim, p, declared);
    } else if (*fam == "zero") {
      c.kernel = Kernel::zero(c.dim, declared.value_or(1.0));
    } else if (*fam == "custom-table") {
      TableParams p;
      const auto radii = r.numbers("kernel.radii", true);
      const auto values = r.numbers("kernel.values", true);
      const auto s = r.number("kernel.sign", false);
      check(r, "kernel.sign", s, s && (*s == 1.0 || *s == -1.0), "must be +1 or -1");
      if (!radii || !values) return;
      p.radii = *radii;
      p.values = *values;
      p.sign = s.value_or(p.sign);
      c.kernel = Kernel::custom_table(c.dim, std::move(p), declared);
    } else {
      r.error("E_CONSTRAINT", "kernel.family",
              "must be one of cucker_smale, repulsion_attraction, zero, custom-table", r.line("kernel.family"));
      return;
    }
  } catch (const InvalidInput& e) {
    r.error("E_CONSTRAINT", "kernel", e.what(), r.line("kernel.family"));
    return;
  }
  if (declared) {
    try {
      estimate_growth_constant(c.kernel, SampleBox::symmetric(c.dim, 10.0), 2000, 0);
    } catch (const GrowthBoundViolation& e) {
      std::string w;
      for (double x : e.witness()) w += (w.empty() ? "" : ", ") + format_double(x);
      r.error("E_CONSTRAINT", "kernel.growth_constant",
              "declared constant is violated at sampled point (" + w + "): estimate " + format_double(e.estimate()),
              r.line("kernel.growth_constant"));
    }
  }
}

void read_density(Reader& r, ExperimentConfig& c, bool required) {
  const auto fam = r.string("followers.family", required);
  if (!fam) return;
  InitialDensitySpec s;
  s.dim = c.dim;
  const std::size_t pd = static_cast<std::size_t>(2 * c.dim);
  auto vec = [&](const char* key, std::vector<double>& out) {
    const std::string p = std::string("followers.") + key;
    const auto v = r.numbers(p, true);
    if (!v) return false;
    if (v->size() != pd) {
      r.error("E_CONSTRAINT", p, "must have 2*dim = " + std::to_string(pd) + " entries", r.line(p));
      return false;
    }
    out = *v;
    return true;
  };
  bool ok = true;
  try {
    s.family = density_family_from_string(*fam);
  } catch (const InvalidInput&) {
    r.error("E_CONSTRAINT", "followers.family", "must be one of uniform-box, gaussian-truncated, two-cluster",
            r.line("followers.family"));
    return;
  }
  if (s.family == DensityFamily::uniform_box) {
    ok = vec("lower", s.lower) & vec("upper", s.upper);
  } else {
    ok = vec("mean", s.mean);
    if (s.family == DensityFamily::two_cluster) ok = vec("mean_b", s.mean_b) && ok;
    const auto sc = r.number("followers.scale", true);
    const auto rad = r.number("followers.radius", true);
    check(r, "followers.scale", sc, sc && *sc >= 0.0, "must be nonnegative");
    check(r, "followers.radius", rad, rad && *rad > 0.0, "must be positive");
    ok = ok && sc && rad && *sc >= 0.0 && *rad > 0.0;
    if (sc) s.scale = *sc;
    if (rad) s.radius = *rad;
  }
  if (!ok) return;
  try {
    s.validate();
    c.density = s;
  } catch (const InvalidInput& e) {
    r.error("E_CONSTRAINT", "followers", e.what(), r.line("followers.family"));
  }
}

void read_control(Reader& r, ExperimentConfig& c) {
  const auto cells = r.integer("control.cells", true);
  const auto U = r.number("control.U", true);
  check(r, "control.cells", cells, cells && *cells >= 1, "must be positive");
  check(r, "control.U", U, U && *U > 0.0, "must be positive");
  if (cells && *cells >= 1) c.cells = static_cast<std::size_t>(*cells);
  if (U && *U > 0.0) c.radius = *U;
  const TomlValue* v = r.find("control.values", false);
  if (!v) return;
  if (v->kind == Kind::string) {
    if (v->text == "zero") {
      c.control_source = ControlSource::zero;
    } else if (v->text == "optimize") {
      c.control_source = ControlSource::optimize;
      if (c.mode != RunMode::optimize) {
        r.error("E_CONSTRAINT", "control.values", "\"optimize\" is only valid in optimize mode", v->line);
      }
    } else {
      r.error("E_CONSTRAINT", "control.values", "must be \"zero\", \"optimize\" or a cells x m x d array", v->line);
    }
    return;
  }
  const std::size_t m = c.leaders(), d = static_cast<std::size_t>(c.dim);
  std::vector<double> flat;
  bool ok = v->kind == Kind::array && (!cells || v->items.size() == c.cells);
  if (ok) {
    for (const auto& cell : v->items) {
      if (cell.kind != Kind::array || cell.items.size() != m) {
        ok = false;
        break;
      }
      for (const auto& leader : cell.items) {
        std::vector<double> vals;
        if (!Reader::flat_numbers(leader, vals) || vals.size() != d) {
          ok = false;
          break;
        }
        flat.insert(flat.end(), vals.begin(), vals.end());
      }
      if (!ok) break;
    }
  }
  if (!ok) {
    r.error("E_TYPE", "control.values", "must be an array of cells, each holding m arrays of d numbers", v->line);
    return;
  }
  c.control_source = ControlSource::values;
  c.control_values = std::move(flat);
  for (std::size_t i = 0; i < c.control_values.size(); i += d) {
    double n2 = 0.0;
    for (std::size_t k = 0; k < d; ++k) n2 += c.control_values[i + k] * c.control_values[i + k];
    if (std::sqrt(n2) > c.radius * (1.0 + 1e-12)) {
      r.error("E_CONSTRAINT", "control.values", "every leader value must lie in the ball of radius U", v->line);
      return;
    }
  }
}

void read_cost(Reader& r, ExperimentConfig& c, const std::filesystem::path& base) {
  const auto fam = r.string("cost.family", false);
  const auto g = r.number("cost.gamma", false);
  check(r, "cost.gamma", g, g && *g >= 0.0, "must be nonnegative");
  if (g && *g >= 0.0) c.cost.weight = *g;
  if (fam) {
    try {
      c.cost.family = cost_family_from_string(*fam);
    } catch (const InvalidInput&) {
      r.error("E_CONSTRAINT", "cost.family", "must be one of velocity_consensus, leader_tracking, measure_target",
              r.line("cost.family"));
      return;
    }
  }
  const std::size_t d = static_cast<std::size_t>(c.dim);
  switch (c.cost.family) {
    case CostFamily::velocity_consensus:
      break;
    case CostFamily::leader_tracking: {
      const auto ty = r.numbers("cost.target_y", true);
      const auto tw = r.numbers("cost.target_w", true);
      check(r, "cost.target_y", ty, ty && ty->size() == d, "must have dim entries");
      check(r, "cost.target_w", tw, tw && tw->size() == d, "must have dim entries");
      if (ty) c.cost.target_y = *ty;
      if (tw) c.cost.target_w = *tw;
      const auto ay = r.number("cost.position_weight", false);
      const auto aw = r.number("cost.velocity_weight", false);
      check(r, "cost.position_weight", ay, ay && *ay >= 0.0, "must be nonnegative");
      check(r, "cost.velocity_weight", aw, aw && *aw >= 0.0, "must be nonnegative");
      if (ay) c.cost.position_weight = *ay;
      if (aw) c.cost.velocity_weight = *aw;
      break;
    }
    case CostFamily::measure_target: {
      const bool has_file = r.present("cost.target");
      const bool has_inline = r.present("cost.target_atoms");
      if (has_file == has_inline) {
        r.error(has_file ? "E_CONSTRAINT" : "E_MISSING", "cost.target",
                "give exactly one of cost.target (CSV path) or cost.target_atoms");
        r.find("cost.target", false);
        r.find("cost.target_atoms", false);
        break;
      }
      c.cost.target = read_atoms(r, has_file ? "cost.target" : "cost.target_atoms", c.dim, base, &c.target_path);
      break;
    }
  }
}

void read_experiment(Reader& r, ExperimentConfig& c) {
  const RunMode m = c.mode;
  const bool need_list = m == RunMode::meanfield || m == RunMode::gamma || m == RunMode::sweep ||
                         (m == RunMode::stability && !r.present("experiment.stability_N"));
  const bool need_ref = m == RunMode::meanfield || m == RunMode::gamma;
  if (const TomlValue* v = r.find("experiment.N_list", need_list)) {
    std::vector<double> vals;
    bool ok = Reader::flat_numbers(*v, vals) && !vals.empty();
    for (double x : vals) ok = ok && x == std::floor(x) && x >= 1.0;
    if (!ok) {
      r.error("E_TYPE", "experiment.N_list", "must be a nonempty array of positive integers", v->line);
    } else {
      for (double x : vals) c.n_list.push_back(static_cast<std::size_t>(x));
      for (std::size_t i = 1; i < c.n_list.size(); ++i) {
        if (c.n_list[i] <= c.n_list[i - 1]) {
          r.error("E_CONSTRAINT", "experiment.N_list", "must be strictly increasing", v->line);
          break;
        }
      }
    }
  }
  const auto nref = r.integer("experiment.N_ref", need_ref);
  if (nref) {
    if (*nref < 1) {
      r.error("E_CONSTRAINT", "experiment.N_ref", "must be positive", r.line("experiment.N_ref"));
    } else {
      c.n_ref = static_cast<std::size_t>(*nref);
      if (!c.n_list.empty() && c.n_ref < 4 * c.n_list.back()) {
        r.error("E_CONSTRAINT", "experiment.N_ref", "must be at least 4 * max(N_list)", r.line("experiment.N_ref"));
      }
    }
  }
  if (const auto g = r.numbers("experiment.gamma_list", m == RunMode::sweep)) {
    const bool ok = !g->empty() && std::all_of(g->begin(), g->end(), [](double x) { return x >= 0.0; });
    if (!ok) {
      r.error("E_CONSTRAINT", "experiment.gamma_list", "must be a nonempty array of nonnegative numbers",
              r.line("experiment.gamma_list"));
    }
    c.gamma_list = *g;
  }
  const auto delta = r.number("experiment.delta0", false);
  check(r, "experiment.delta0", delta, delta && *delta > 0.0, "must be positive");
  if (delta) c.delta0 = *delta;
  auto positive_int = [&](const char* key, std::size_t& out) {
    const std::string p = std::string("experiment.") + key;
    const auto v = r.integer(p, false);
    check(r, p, v, v && *v >= 1, "must be positive");
    if (v && *v >= 1) out = static_cast<std::size_t>(*v);
  };
  positive_int("pairs", c.pairs);
  positive_int("eval_every", c.eval_every);
  positive_int("stability_N", c.stability_n);
  std::size_t samples = static_cast<std::size_t>(c.lipschitz_samples);
  positive_int("lipschitz_samples", samples);
  c.lipschitz_samples = static_cast<int>(std::min<std::size_t>(samples, 100000000));
  const auto slack = r.number("experiment.slack", false);
  check(r, "experiment.slack", slack, slack && *slack >= 0.0, "must be nonnegative");
  if (slack) c.monotone_slack = *slack;
}

void read_optimizer(Reader& r, ExperimentConfig& c) {
  OptimizerOptions& o = c.optimizer;
  const auto it = r.integer("optimizer.max_iters", false);
  check(r, "optimizer.max_iters", it, it && *it >= 1, "must be positive");
  if (it && *it >= 1) o.max_iters = static_cast<int>(std::min<long long>(*it, 1000000000));
  auto num = [&](const char* key, double& out, auto pred, const char* msg) {
    const std::string p = std::string("optimizer.") + key;
    const auto v = r.number(p, false);
    check(r, p, v, v && pred(*v), msg);
    if (v && pred(*v)) out = *v;
  };
  num("step0", o.step0, [](double x) { return x > 0.0; }, "must be positive");
  num("backtrack", o.backtrack, [](double x) { return x > 0.0 && x < 1.0; }, "must lie in (0, 1)");
  num("step_growth", o.step_growth, [](double x) { return x >= 1.0; }, "must be at least 1");
  num("max_step", o.max_step, [](double x) { return x > 0.0; }, "must be positive");
  num("min_step", o.min_step, [](double x) { return x > 0.0; }, "must be positive");
  num("tol_J", o.tol_J, [](double x) { return x >= 0.0; }, "must be nonnegative");
  num("tol_u", o.tol_u, [](double x) { return x >= 0.0; }, "must be nonnegative");
  if (const auto rule = r.string("optimizer.step_rule", false)) {
    try {
      o.step_rule = step_rule_from_string(*rule);
    } catch (const InvalidInput&) {
      r.error("E_CONSTRAINT", "optimizer.step_rule", "must be one of growth, barzilai_borwein",
              r.line("optimizer.step_rule"));
    }
  }
  if (o.max_step < o.step0) r.error("E_CONSTRAINT", "optimizer.max_step", "must be at least step0");
}

void read_output(Reader& r, ExperimentConfig& c) {
  if (const auto dir = r.string("output.directory", false)) c.output_directory = *dir;
  if (const TomlValue* v = r.find("output.formats", false)) {
    std::vector<std::string> f;
    bool ok = v->kind == Kind::array && !v->items.empty();
    if (ok) {
      for (const auto& it : v->items) {
        if (it.kind != Kind::string || (it.text != "csv" && it.text != "json")) {
          ok = false;
          break;
        }
        if (std::find(f.begin(), f.end(), it.text) == f.end()) f.push_back(it.text);
      }
    }
    if (!ok) {
      r.error("E_CONSTRAINT", "output.formats", "must be a nonempty subset of [\"csv\", \"json\"]", v->line);
    } else {
      std::sort(f.begin(), f.end());
      c.formats = f;
    }
  }
  const auto snap = r.integer("output.snapshot_every", false);
  check(r, "output.snapshot_every", snap, snap && *snap >= 1, "must be positive");
  if (snap && *snap >= 1) c.snapshot_every = static_cast<std::size_t>(*snap);
}

}  // namespace

ValidationResult validate_config_text(const std::string& text, const std::filesystem::path& base_dir) {
  ValidationResult res;
  TomlDocument doc;
  try {
    doc = parse_toml(text);
  } catch (const TomlParseError& e) {
    res.diagnostics.push_back({"E_PARSE", "", e.what(), e.line()});
    return res;
  }
  std::vector<Diagnostic>& diags = res.diagnostics;
  Reader r(doc, diags);
  ExperimentConfig c;

  if (const auto mode = r.string("mode", true)) {
    const std::pair<const char*, RunMode> modes[] = {{"simulate", RunMode::simulate},   {"optimize", RunMode::optimize},
                                                     {"meanfield", RunMode::meanfield}, {"gamma", RunMode::gamma},
                                                     {"stability", RunMode::stability}, {"sweep", RunMode::sweep}};
    bool found = false;
    for (const auto& [name, m] : modes) {
      if (*mode == name) {
        c.mode = m;
        found = true;
      }
    }
    if (!found) {
      r.error("E_CONSTRAINT", "mode", "must be one of simulate, optimize, meanfield, gamma, stability, sweep",
              r.line("mode"));
    }
  }
  const auto seed = r.integer("seed", false);
  check(r, "seed", seed, seed && *seed >= 0, "must be nonnegative");
  if (seed && *seed >= 0) c.seed = static_cast<std::uint64_t>(*seed);
  const auto dim = r.integer("dim", true);
  check(r, "dim", dim, dim && *dim >= 1 && *dim <= kMaxDim, "must be between 1 and " + std::to_string(kMaxDim));
  if (!dim || *dim < 1 || *dim > kMaxDim) {
    // Everything below depends on d.
    return res;
  }
  c.dim = static_cast<int>(*dim);

  read_kernel(r, c);

  const std::size_t d = static_cast<std::size_t>(c.dim);
  const TomlValue* ly = r.find("leaders.y", true);
  const TomlValue* lw = r.find("leaders.w", true);
  if (ly && lw) {
    std::size_t my = 0, mw = 0;
    auto y = r.rows(*ly, "leaders.y", d, &my);
    auto w = r.rows(*lw, "leaders.w", d, &mw);
    if (y && w) {
      if (my < 1) {
        r.error("E_CONSTRAINT", "leaders.y", "at least one leader is required", ly->line);
      } else if (my != mw) {
        r.error("E_CONSTRAINT", "leaders.w", "must list as many leaders as leaders.y", lw->line);
      } else {
        c.leader_y = std::move(*y);
        c.leader_w = std::move(*w);
      }
    }
  }

  const bool density_required = needs_density(c.mode);
  const bool has_atoms = r.present("followers.atoms");
  if (has_atoms && density_required) {
    r.find("followers.atoms", false);
    r.error("E_CONSTRAINT", "followers.atoms", "experiment modes sample followers; give a density instead",
            r.line("followers.atoms"));
  } else if (has_atoms) {
    c.follower_atoms = read_atoms(r, "followers.atoms", c.dim, base_dir, &c.follower_atoms_path);
  }
  if (!has_atoms) {
    const auto n = r.integer("followers.N", false);
    check(r, "followers.N", n, n && *n >= 0, "must be nonnegative");
    if (n && *n >= 0) c.followers = static_cast<std::size_t>(*n);
    if (density_required || c.followers > 0 || r.present("followers.family")) read_density(r, c, true);
  }

  if (!c.leader_y.empty()) read_control(r, c);
  read_cost(r, c, base_dir);

  const auto T = r.number("grid.T", true);
  check(r, "grid.T", T, T && *T > 0.0, "must be positive");
  if (T && *T > 0.0) c.horizon = *T;
  const auto ns = r.integer("grid.n_steps", false);
  check(r, "grid.n_steps", ns, ns && *ns >= 1, "must be positive");
  if (ns && *ns >= 1) c.n_steps = static_cast<std::size_t>(*ns);

  read_experiment(r, c);
  read_optimizer(r, c);
  read_output(r, c);
  r.report_unused();

  if (diags.empty()) res.config = std::move(c);
  return res;
}

ValidationResult validate_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::exception& e) {
    ValidationResult res;
    res.diagnostics.push_back({"E_FILE", "", e.what(), 0});
    return res;
  }
  return validate_config_text(text, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

namespace {

std::string num(double x) { return format_double(x); }

std::string array(std::span<const double> v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v[i]);
  return s + "]";
}

std::string rows_text(std::span<const double> v, std::size_t width) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); i += width) {
    s += (i ? ", " : "") + array(v.subspan(i, width));
  }
  return s + "]";
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    if (c == '\t') {
      out += "\\t";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

std::string measure_rows(const EmpiricalMeasure& mu) {
  return rows_text(mu.atoms(), static_cast<std::size_t>(mu.phase_dim()));
}

}  // namespace

std::string emit_config(const ExperimentConfig& c) {
  std::ostringstream os;
  const std::size_t d = static_cast<std::size_t>(c.dim);
  os << "mode = " << quoted(to_string(c.mode)) << "\n";
  os << "seed = " << c.seed << "\n";
  os << "dim = " << c.dim << "\n";

  os << "\n[kernel]\n";
  os << "family = " << quoted(to_string(c.kernel.family())) << "\n";
  switch (c.kernel.family()) {
    case KernelFamily::cucker_smale: {
      const auto& p = c.kernel.cucker_smale_params();
      os << "strength = " << num(p.strength) << "\nscale = " << num(p.scale) << "\nexponent = " << num(p.exponent)
         << "\nsign = " << num(p.sign) << "\n";
      break;
    }
    case KernelFamily::repulsion_attraction: {
      const auto& p = c.kernel.repulsion_attraction_params();
      os << "repulsion = " << num(p.repulsion) << "\nattraction = " << num(p.attraction) << "\ncap = " << num(p.cap)
         << "\n";
      break;
    }
    case KernelFamily::custom_table: {
      const auto& p = c.kernel.table_params();
      os << "radii = " << array(p.radii) << "\nvalues = " << array(p.values) << "\nsign = " << num(p.sign) << "\n";
      break;
    }
    case KernelFamily::zero:
      break;
  }
  os << "growth_constant = " << num(c.kernel.growth_constant()) << "\n";

  os << "\n[leaders]\n";
  os << "y = " << rows_text(c.leader_y, d) << "\n";
  os << "w = " << rows_text(c.leader_w, d) << "\n";

  const bool any_followers = c.follower_atoms || c.density || c.followers > 0;
  if (any_followers) {
    os << "\n[followers]\n";
    if (c.follower_atoms) {
      os << "atoms = " << measure_rows(*c.follower_atoms) << "\n";
    } else {
      os << "N = " << c.followers << "\n";
      if (c.density) {
        const auto& s = *c.density;
        os << "family = " << quoted(to_string(s.family)) << "\n";
        if (s.family == DensityFamily::uniform_box) {
          os << "lower = " << array(s.lower) << "\nupper = " << array(s.upper) << "\n";
        } else {
          os << "mean = " << array(s.mean) << "\n";
          if (s.family == DensityFamily::two_cluster) os << "mean_b = " << array(s.mean_b) << "\n";
          os << "scale = " << num(s.scale) << "\nradius = " << num(s.radius) << "\n";
        }
      }
    }
  }

  os << "\n[control]\n";
  os << "cells = " << c.cells << "\nU = " << num(c.radius) << "\n";
  switch (c.control_source) {
    case ControlSource::zero:
      os << "values = \"zero\"\n";
      break;
    case ControlSource::optimize:
      os << "values = \"optimize\"\n";
      break;
    case ControlSource::values: {
      const std::size_t md = c.leaders() * d;
      os << "values = [";
      for (std::size_t cell = 0; cell < c.cells; ++cell) {
        os << (cell ? ", " : "")
           << rows_text(std::span<const double>(c.control_values).subspan(cell * md, md), d);
      }
      os << "]\n";
      break;
    }
  }

  os << "\n[cost]\n";
  os << "family = " << quoted(to_string(c.cost.family)) << "\ngamma = " << num(c.cost.weight) << "\n";
  if (c.cost.family == CostFamily::leader_tracking) {
    os << "target_y = " << array(c.cost.target_y) << "\ntarget_w = " << array(c.cost.target_w) << "\n";
    os << "position_weight = " << num(c.cost.position_weight) << "\nvelocity_weight = " << num(c.cost.velocity_weight)
       << "\n";
  } else if (c.cost.family == CostFamily::measure_target && c.cost.target) {
    os << "target_atoms = " << measure_rows(*c.cost.target) << "\n";
  }

  os << "\n[grid]\n";
  os << "T = " << num(c.horizon) << "\n";
  if (c.n_steps != 0) os << "n_steps = " << c.n_steps << "\n";

  os << "\n[experiment]\n";
  if (!c.n_list.empty()) {
    os << "N_list = [";
    for (std::size_t i = 0; i < c.n_list.size(); ++i) os << (i ? ", " : "") << c.n_list[i];
    os << "]\n";
  }
  if (c.n_ref != 0) os << "N_ref = " << c.n_ref << "\n";
  if (!c.gamma_list.empty()) os << "gamma_list = " << array(c.gamma_list) << "\n";
  os << "delta0 = " << num(c.delta0) << "\npairs = " << c.pairs << "\neval_every = " << c.eval_every << "\n";
  if (c.stability_n != 0) os << "stability_N = " << c.stability_n << "\n";
  os << "lipschitz_samples = " << c.lipschitz_samples << "\nslack = " << num(c.monotone_slack) << "\n";

  const auto& o = c.optimizer;
  os << "\n[optimizer]\n";
  os << "max_iters = " << o.max_iters << "\nstep0 = " << num(o.step0) << "\nbacktrack = " << num(o.backtrack)
     << "\nstep_growth = " << num(o.step_growth) << "\nmax_step = " << num(o.max_step)
     << "\nmin_step = " << num(o.min_step) << "\ntol_J = " << num(o.tol_J) << "\ntol_u = " << num(o.tol_u)
     << "\nstep_rule = " << quoted(to_string(o.step_rule)) << "\n";

  os << "\n[output]\n";
  if (!c.output_directory.empty()) os << "directory = " << quoted(c.output_directory) << "\n";
  os << "formats = [";
  for (std::size_t i = 0; i < c.formats.size(); ++i) os << (i ? ", " : "") << quoted(c.formats[i]);
  os << "]\nsnapshot_every = " << c.snapshot_every << "\n";
  return os.str();
}

std::uint64_t spec_hash(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  c.seed = 0;
  c.output_directory.clear();
  c.formats = {"csv", "json"};
  c.snapshot_every = 1;
  const std::string text = emit_config(c);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string spec_hash_hex8(const ExperimentConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(spec_hash(config)));
  return std::string(buf, 8);
}

}  // namespace mfsc
