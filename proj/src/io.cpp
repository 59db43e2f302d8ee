#include "mfsc/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mfsc/error.hpp"

namespace mfsc {

using ojson = nlohmann::ordered_json;

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

const char* b(bool v) { return v ? "true" : "false"; }

void header_xv(std::ostringstream& os, int d) {
  for (int k = 1; k <= d; ++k) os << ",x" << k;
  for (int k = 1; k <= d; ++k) os << ",v" << k;
}

ojson control_object(const ControlSignal& u) {
  ojson j;
  j["leaders"] = u.leaders();
  j["dim"] = u.dim();
  j["cells"] = u.cells();
  j["T"] = u.horizon();
  j["U"] = u.radius();
  ojson cells = ojson::array();
  for (std::size_t c = 0; c < u.cells(); ++c) {
    ojson leaders = ojson::array();
    for (std::size_t k = 0; k < u.leaders(); ++k) {
      const auto v = u.value(c, k);
      leaders.push_back(std::vector<double>(v.begin(), v.end()));
    }
    cells.push_back(std::move(leaders));
  }
  j["values"] = std::move(cells);
  return j;
}

ojson verdicts_object(const std::vector<std::pair<std::string, bool>>& v) {
  ojson j = ojson::object();
  for (const auto& [k, ok] : v) j[k] = ok;
  return j;
}

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string measure_csv(const EmpiricalMeasure& mu) {
  const int d = mu.dim();
  std::ostringstream os;
  for (int k = 1; k <= d; ++k) os << (k == 1 ? "" : ",") << "x" << k;
  for (int k = 1; k <= d; ++k) os << ",v" << k;
  os << ",weight\n";
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const auto a = mu.atom(i);
    for (int k = 0; k < 2 * d; ++k) os << (k == 0 ? "" : ",") << format_double(a[k]);
    os << "," << format_double(mu.weights()[i]) << "\n";
  }
  return os.str();
}

EmpiricalMeasure parse_measure_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("measure CSV: missing header");
  const std::size_t cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (cols < 3 || cols % 2 == 0) throw InvalidInput("measure CSV: expected columns x1..xd, v1..vd, weight");
  const int d = static_cast<int>((cols - 1) / 2);
  std::vector<double> atoms, weights;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> vals;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const std::size_t end = std::min(line.find(',', pos), line.size());
      double x = 0.0;
      const char* first = line.data() + pos;
      while (first < line.data() + end && *first == ' ') ++first;
      const auto res = std::from_chars(first, line.data() + end, x);
      if (res.ec != std::errc() || res.ptr != line.data() + end) {
        throw InvalidInput("measure CSV: bad number on line " + std::to_string(row));
      }
      vals.push_back(x);
      pos = end + 1;
    }
    if (vals.size() != cols) throw InvalidInput("measure CSV: wrong column count on line " + std::to_string(row));
    atoms.insert(atoms.end(), vals.begin(), vals.end() - 1);
    weights.push_back(vals.back());
  }
  return EmpiricalMeasure(d, std::move(atoms), std::move(weights));
}

EmpiricalMeasure read_measure_csv(const std::filesystem::path& path) { return parse_measure_csv(read_text_file(path)); }

std::string control_csv(const ControlSignal& u) {
  std::ostringstream os;
  os << "cell,t_start,t_end,leader";
  for (int k = 1; k <= u.dim(); ++k) os << ",u" << k;
  os << "\n";
  for (std::size_t c = 0; c < u.cells(); ++c) {
    for (std::size_t k = 0; k < u.leaders(); ++k) {
      os << c << "," << format_double(u.breakpoint(c)) << "," << format_double(u.breakpoint(c + 1)) << "," << k;
      for (double x : u.value(c, k)) os << "," << format_double(x);
      os << "\n";
    }
  }
  return os.str();
}

std::string trajectory_csv(const Trajectory& traj, std::size_t cadence) {
  if (cadence < 1) cadence = 1;
  std::ostringstream os;
  const int d = traj.states.empty() ? 1 : traj.states.front().dim();
  os << "step,t,particle,role";
  header_xv(os, d);
  os << "\n";
  for (std::size_t j = 0; j < traj.states.size(); ++j) {
    if (j % cadence != 0 && j + 1 != traj.states.size()) continue;
    const Configuration& c = traj.states[j];
    const auto pos = c.positions();
    const auto vel = c.velocities();
    for (std::size_t p = 0; p < c.particles(); ++p) {
      os << j << "," << format_double(traj.times[j]) << "," << p << "," << (p < c.leaders() ? "leader" : "follower");
      for (int k = 0; k < d; ++k) os << "," << format_double(pos[p * d + k]);
      for (int k = 0; k < d; ++k) os << "," << format_double(vel[p * d + k]);
      os << "\n";
    }
  }
  return os.str();
}

std::string history_csv(const SolveReport& r) {
  std::ostringstream os;
  os << "iteration,J\n";
  for (std::size_t i = 0; i < r.history.size(); ++i) os << i << "," << format_double(r.history[i]) << "\n";
  return os.str();
}

std::string convergence_csv(const ConvergenceReport& r) {
  std::ostringstream os;
  os << "N,distance,cost,cost_gap,optimal_cost,optimal_gap,primitive_deviation,sparsity,iterations,converged,stalled,"
        "failed\n";
  for (const auto& row : r.rows) {
    os << row.n << "," << format_double(row.distance) << "," << format_double(row.cost) << ","
       << format_double(row.cost_gap) << "," << format_double(row.optimal_cost) << ","
       << format_double(row.optimal_gap) << "," << format_double(row.primitive_deviation) << ","
       << format_double(row.sparsity) << "," << row.iterations << "," << b(row.converged) << "," << b(row.stalled)
       << "," << b(row.failed) << "\n";
  }
  return os.str();
}

std::string stability_csv(const StabilityReport& r) {
  std::ostringstream os;
  os << "pair,seed,initial_distance,sup_distance,ratio,kernel_lipschitz,rhs_lipschitz,bound,within\n";
  for (const auto& row : r.rows) {
    os << row.pair << "," << row.seed << "," << format_double(row.initial_distance) << ","
       << format_double(row.sup_distance) << "," << format_double(row.ratio) << ","
       << format_double(row.kernel_lipschitz) << "," << format_double(row.rhs_lipschitz) << ","
       << format_double(row.bound) << "," << b(row.within) << "\n";
  }
  return os.str();
}

std::string sweep_csv(const SweepReport& r) {
  std::ostringstream os;
  os << "N,gamma,optimal_cost,l1_cost,sparsity,primitive_sup,iterations,converged,stalled\n";
  for (const auto& row : r.rows) {
    os << row.n << "," << format_double(row.gamma) << "," << format_double(row.optimal_cost) << ","
       << format_double(row.l1_cost) << "," << format_double(row.sparsity) << "," << format_double(row.primitive_sup)
       << "," << row.iterations << "," << b(row.converged) << "," << b(row.stalled) << "\n";
  }
  return os.str();
}

std::string measure_json(const EmpiricalMeasure& mu) {
  ojson j;
  j["dim"] = mu.dim();
  ojson atoms = ojson::array();
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const auto a = mu.atom(i);
    atoms.push_back(std::vector<double>(a.begin(), a.end()));
  }
  j["atoms"] = std::move(atoms);
  j["weights"] = std::vector<double>(mu.weights().begin(), mu.weights().end());
  return dump(j);
}

std::string control_json(const ControlSignal& u) { return dump(control_object(u)); }

std::string trajectory_json(const Trajectory& traj, std::size_t cadence) {
  if (cadence < 1) cadence = 1;
  ojson j;
  const Configuration& c0 = traj.states.front();
  j["leaders"] = c0.leaders();
  j["followers"] = c0.followers();
  j["dim"] = c0.dim();
  ojson snaps = ojson::array();
  for (std::size_t s = 0; s < traj.states.size(); ++s) {
    if (s % cadence != 0 && s + 1 != traj.states.size()) continue;
    const Configuration& c = traj.states[s];
    ojson snap;
    snap["step"] = s;
    snap["t"] = traj.times[s];
    snap["y"] = std::vector<double>(c.leaders_y().begin(), c.leaders_y().end());
    snap["w"] = std::vector<double>(c.leaders_w().begin(), c.leaders_w().end());
    snap["x"] = std::vector<double>(c.followers_x().begin(), c.followers_x().end());
    snap["v"] = std::vector<double>(c.followers_v().begin(), c.followers_v().end());
    snap["norm"] = config_norm(c);
    snaps.push_back(std::move(snap));
  }
  j["snapshots"] = std::move(snaps);
  return dump(j);
}

std::string solve_report_json(const SolveReport& r) {
  ojson j;
  j["cost"] = r.cost;
  j["smooth_cost"] = r.smooth_cost;
  j["l1_cost"] = r.l1_cost;
  j["sparsity"] = r.sparsity;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["stalled"] = r.stalled;
  j["history"] = r.history;
  j["control"] = control_object(r.control);
  return dump(j);
}

std::string convergence_json(const ConvergenceReport& r) {
  ojson j;
  j["experiment"] = r.experiment;
  j["verdicts"] = verdicts_object(r.verdicts);
  ojson rows = ojson::array();
  for (const auto& row : r.rows) {
    ojson o;
    o["N"] = row.n;
    o["distance"] = row.distance;
    o["cost"] = row.cost;
    o["cost_gap"] = row.cost_gap;
    o["optimal_cost"] = row.optimal_cost;
    o["optimal_gap"] = row.optimal_gap;
    o["primitive_deviation"] = row.primitive_deviation;
    o["sparsity"] = row.sparsity;
    o["iterations"] = row.iterations;
    o["converged"] = row.converged;
    o["stalled"] = row.stalled;
    o["failed"] = row.failed;
    if (row.failed) o["failure"] = row.failure;
    if (row.control.cells() > 0) o["control"] = control_object(row.control);
    rows.push_back(std::move(o));
  }
  j["rows"] = std::move(rows);
  return dump(j);
}

std::string stability_json(const StabilityReport& r) {
  ojson j;
  j["experiment"] = "stability";
  j["N"] = r.n;
  j["delta0"] = r.delta0;
  j["slack"] = r.slack;
  j["verdicts"] = verdicts_object(r.verdicts);
  ojson rows = ojson::array();
  for (const auto& row : r.rows) {
    ojson o;
    o["pair"] = row.pair;
    o["seed"] = row.seed;
    o["initial_distance"] = row.initial_distance;
    o["sup_distance"] = row.sup_distance;
    o["ratio"] = row.ratio;
    o["kernel_lipschitz"] = row.kernel_lipschitz;
    o["rhs_lipschitz"] = row.rhs_lipschitz;
    o["bound"] = row.bound;
    o["within"] = row.within;
    rows.push_back(std::move(o));
  }
  j["rows"] = std::move(rows);
  return dump(j);
}

std::string sweep_json(const SweepReport& r) {
  ojson j;
  j["experiment"] = "sweep";
  j["verdicts"] = verdicts_object(r.verdicts);
  ojson rows = ojson::array();
  for (const auto& row : r.rows) {
    ojson o;
    o["N"] = row.n;
    o["gamma"] = row.gamma;
    o["optimal_cost"] = row.optimal_cost;
    o["l1_cost"] = row.l1_cost;
    o["sparsity"] = row.sparsity;
    o["primitive_sup"] = row.primitive_sup;
    o["iterations"] = row.iterations;
    o["converged"] = row.converged;
    o["stalled"] = row.stalled;
    o["control"] = control_object(row.control);
    rows.push_back(std::move(o));
  }
  j["rows"] = std::move(rows);
  return dump(j);
}

}  // namespace mfsc
