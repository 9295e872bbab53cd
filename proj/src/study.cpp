#include "llstar/study.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

namespace llstar {

namespace {

std::string trim(const std::string &s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos)
    return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string &s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (auto t = trim(item); !t.empty())
      parts.push_back(t);
  return parts;
}

double to_double(const std::string &key, const std::string &v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception &) {
    pos = 0;
  }
  if (pos != v.size() || !std::isfinite(x))
    throw InvalidArgument("key '" + key + "': expected a number, got '" + v + "'");
  return x;
}

long long to_integer(const std::string &key, const std::string &v) {
  std::size_t pos = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &pos);
  } catch (const std::exception &) {
    pos = 0;
  }
  if (pos != v.size())
    throw InvalidArgument("key '" + key + "': expected an integer, got '" + v + "'");
  return x;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

struct Level {
  DiscreteProblem problem;
  double h = 0.0, hbar = 0.0;
};

Level build_level(const StudyConfig &c, const LevelSpec &spec) {
  const Coefficients coeffs = c.coefficients();
  MeshOptions mo;
  mo.n = spec.n;
  mo.jitter = c.jitter;
  mo.seed = c.seed;
  mo.omega_in = coeffs.omega_in();
  ProblemSetup setup;
  setup.coeffs = coeffs;
  setup.u_mesh = generate_square_mesh(mo, coeffs.b());
  setup.z_refinements = c.z_refinements(spec);
  setup.order_u = c.order_u;
  setup.order_z = c.order_z;
  setup.bc = c.bc;
  Level lvl{build_problem(setup), 0.0, 0.0};
  lvl.h = lvl.problem.u_space->mesh().h();
  lvl.hbar = lvl.problem.z_space->mesh().h();
  return lvl;
}

SolverOptions solver_options(const StudyConfig &c) {
  SolverOptions o;
  o.tol = c.tol;
  o.restart = c.restart;
  o.omega = c.omega;
  o.inverse_solver = c.inverse_solver;
  return o;
}

// Runs `work(i)` for every level index, sequentially or on c.jobs threads.
void for_each_level(const StudyConfig &c, const std::function<void(std::size_t)> &work) {
  const std::size_t n = c.levels.size();
  const int jobs = std::max(1, std::min<int>(c.jobs, static_cast<int>(n)));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i)
      work(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;)
        work(i);
    });
  for (auto &t : pool)
    t.join();
}

void validate(const StudyConfig &c) {
  if (c.levels.empty())
    throw InvalidArgument("no levels configured");
  if (!(c.omega > 0.0))
    throw InvalidArgument("omega must be positive");
  if (!(c.tol > 0.0))
    throw InvalidArgument("tol must be positive");
  if (c.restart < 1)
    throw InvalidArgument("restart must be positive");
  const bool needs_inverse =
      c.study == StudyKind::SolverIterations ||
      std::ranges::find(c.methods, MethodKind::LLStarInverse) != c.methods.end();
  if (!needs_inverse)
    return;
  for (const auto &l : c.levels) {
    const int du = predicted_dim_u(c, l), dz = predicted_dim_z(c, l);
    if (du > dz)
      throw InvalidArgument("level n=" + std::to_string(l.n) + ": dim U = " +
                            std::to_string(du) + " exceeds dim Z = " + std::to_string(dz) +
                            "; (LL*)^-1 would be singular");
  }
}

} // namespace

Coefficients StudyConfig::coefficients() const {
  return Coefficients::from_angle(alpha, sigma_in, sigma_out, 1.0);
}

std::vector<LevelSpec> parse_levels(const std::string &text) {
  std::vector<LevelSpec> out;
  for (const auto &item : split(text, ',')) {
    LevelSpec spec;
    const auto slash = item.find('/');
    spec.n = static_cast<int>(to_integer("levels", trim(item.substr(0, slash))));
    if (slash != std::string::npos) {
      const long long r = to_integer("levels", trim(item.substr(slash + 1)));
      if (r < 0 || r > 6)
        throw InvalidArgument("levels: refinement count must lie in [0, 6]");
      spec.z_refinements = static_cast<int>(r);
    }
    if (spec.n < 4 || spec.n % 4 != 0)
      throw InvalidArgument("levels: n must be a positive multiple of 4, got " +
                            std::to_string(spec.n));
    out.push_back(spec);
  }
  if (out.empty())
    throw InvalidArgument("levels: empty list");
  return out;
}

StudyConfig parse_config(std::istream &in) {
  StudyConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "study") {
        if (value == "convergence")
          c.study = StudyKind::Convergence;
        else if (value == "solver_iterations")
          c.study = StudyKind::SolverIterations;
        else if (value == "infsup")
          c.study = StudyKind::InfSup;
        else
          throw InvalidArgument("study must be convergence, solver_iterations or infsup");
      } else if (key == "methods") {
        c.methods.clear();
        for (const auto &m : split(value, ','))
          c.methods.push_back(parse_method(m));
        if (c.methods.empty())
          throw InvalidArgument("methods: empty list");
      } else if (key == "sigma_in") {
        c.sigma_in = to_double(key, value);
      } else if (key == "sigma_out") {
        c.sigma_out = to_double(key, value);
      } else if (key == "alpha") {
        c.alpha = to_double(key, value);
      } else if (key == "order_u" || key == "order_z") {
        const long long k = to_integer(key, value);
        if (k < 1 || k > 5)
          throw InvalidArgument(key + " must lie in [1, 5]");
        (key == "order_u" ? c.order_u : c.order_z) = static_cast<int>(k);
      } else if (key == "z_mesh") {
        if (value != "same" && value != "refined")
          throw InvalidArgument("z_mesh must be same or refined");
        c.z_refined = value == "refined";
      } else if (key == "levels") {
        c.levels = parse_levels(value);
      } else if (key == "omega") {
        c.omega = to_double(key, value);
      } else if (key == "bc") {
        if (value != "weak" && value != "strong")
          throw InvalidArgument("bc must be weak or strong");
        c.bc = value == "weak" ? BoundaryTreatment::Weak : BoundaryTreatment::Strong;
      } else if (key == "tol") {
        c.tol = to_double(key, value);
      } else if (key == "restart") {
        c.restart = static_cast<int>(to_integer(key, value));
      } else if (key == "seed") {
        c.seed = static_cast<std::uint64_t>(to_integer(key, value));
      } else if (key == "jitter") {
        c.jitter = to_double(key, value);
      } else if (key == "inverse_solver") {
        if (value != "block" && value != "schur")
          throw InvalidArgument("inverse_solver must be block or schur");
        c.inverse_solver =
            value == "block" ? InverseSolver::BlockGMRES : InverseSolver::SchurCG;
      } else if (key == "output") {
        c.output = value;
      } else {
        throw InvalidArgument("unknown key '" + key + "'");
      }
    } catch (const InvalidArgument &e) {
      throw InvalidArgument("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return c;
}

StudyConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw InvalidArgument("cannot open config file '" + path + "'");
  return parse_config(in);
}

int predicted_dim_u(const StudyConfig &c, const LevelSpec &l) {
  const int m = c.order_u * l.n;
  return (m + 1) * (m + 1);
}

int predicted_dim_z(const StudyConfig &c, const LevelSpec &l) {
  const int m = c.order_z * l.n * (1 << c.z_refinements(l));
  const Point b = c.coefficients().b();
  int outflow_sides = 0;
  for (const Point &n : {Point(1, 0), Point(-1, 0), Point(0, 1), Point(0, -1)})
    outflow_sides += b.dot(n) > 0.0;
  // Closure of the outflow sides: one or two (adjacent) edges of m+1 nodes.
  return (m + 1) * (m + 1) - (outflow_sides * m + 1);
}

std::vector<ConvergenceRecord> run_convergence(const StudyConfig &c, std::ostream *log) {
  validate(c);
  const Coefficients coeffs = c.coefficients();
  const SolverOptions opts = solver_options(c);
  const std::size_t nm = c.methods.size();
  std::vector<ConvergenceRecord> records(c.levels.size() * nm);
  std::vector<std::string> notes(c.levels.size());

  for_each_level(c, [&](std::size_t li) {
    std::ostringstream note;
    const LevelSpec &spec = c.levels[li];
    auto fill_header = [&](ConvergenceRecord &r, MethodKind m) {
      r.level = static_cast<int>(li);
      r.method = m;
    };
    try {
      const Level lvl = build_level(c, spec);
      const auto &p = lvl.problem;
      note << "level " << li << ": n=" << spec.n << " h=" << fmt(lvl.h)
           << " dimU=" << p.u_space->dim() << " dimZ=" << p.z_space->dim() << '\n';
      for (std::size_t mi = 0; mi < nm; ++mi) {
        ConvergenceRecord &r = records[li * nm + mi];
        fill_header(r, c.methods[mi]);
        r.h = lvl.h;
        r.hbar = lvl.hbar;
        r.dim_u = p.u_space->dim();
        r.dim_z = p.z_space->dim();
        try {
          const auto sol = solve(p, r.method, opts);
          r.iterations = sol.report.iterations;
          r.error = l2_error(sol.approximation, coeffs,
                             std::max(c.order_u, c.order_z));
          if (!sol.report.converged)
            r.status = "unconverged";
          note << "  " << to_string(r.method) << ": error=" << fmt(r.error)
               << " iterations=" << r.iterations << ' ' << r.status << '\n';
        } catch (const std::exception &e) {
          r.status = "failed";
          note << "  " << to_string(r.method) << " failed: " << e.what() << '\n';
        }
      }
    } catch (const std::exception &e) {
      for (std::size_t mi = 0; mi < nm; ++mi) {
        fill_header(records[li * nm + mi], c.methods[mi]);
        records[li * nm + mi].status = "failed";
      }
      note << "level " << li << " failed: " << e.what() << '\n';
    }
    notes[li] = note.str();
    if (log && c.jobs <= 1)
      *log << notes[li] << std::flush;
  });
  if (log && c.jobs > 1)
    for (const auto &n : notes)
      *log << n;

  for (std::size_t li = 1; li < c.levels.size(); ++li)
    for (std::size_t mi = 0; mi < nm; ++mi) {
      auto &cur = records[li * nm + mi];
      const auto &prev = records[(li - 1) * nm + mi];
      if (cur.status == "failed" || prev.status == "failed" || cur.h == prev.h)
        continue;
      cur.eoc = compute_eoc({prev.error, cur.error}, {prev.h, cur.h})[0];
    }
  return records;
}

std::vector<SolverRecord> run_solver_study(const StudyConfig &c, std::ostream *log) {
  validate(c);
  SolverOptions opts = solver_options(c);
  std::vector<SolverRecord> records(c.levels.size());
  std::vector<std::string> notes(c.levels.size());
  for_each_level(c, [&](std::size_t li) {
    SolverRecord &r = records[li];
    r.level = static_cast<int>(li);
    std::ostringstream note;
    try {
      const Level lvl = build_level(c, c.levels[li]);
      const auto &p = lvl.problem;
      r.h = lvl.h;
      r.hbar = lvl.hbar;
      r.dim_u = p.u_space->dim();
      r.dim_z = p.z_space->dim();
      SolverOptions inv = opts;
      inv.inverse_solver = InverseSolver::BlockGMRES;
      const auto a = llstar_inverse_algebraic(p.h_solver, p.H, p.L, p.M, p.rhs, inv);
      const auto s = single_stage_algebraic(p.h_solver, p.H, p.L, p.M, p.rhs, opts);
      r.iters_inv = a.report.iterations;
      r.converged_inv = a.report.converged;
      r.iters_ss = s.report.iterations;
      r.converged_ss = s.report.converged;
      if (!r.converged_inv || !r.converged_ss)
        r.status = "unconverged";
      note << "level " << li << ": dimU=" << r.dim_u << " dimZ=" << r.dim_z
           << " iters_inv=" << r.iters_inv << " iters_ss=" << r.iters_ss << '\n';
    } catch (const std::exception &e) {
      r.status = "failed";
      note << "level " << li << " failed: " << e.what() << '\n';
    }
    notes[li] = note.str();
    if (log && c.jobs <= 1)
      *log << notes[li] << std::flush;
  });
  if (log && c.jobs > 1)
    for (const auto &n : notes)
      *log << n;
  return records;
}

std::vector<InfSupRecord> run_infsup(const StudyConfig &c, std::ostream *log) {
  if (c.levels.empty())
    throw InvalidArgument("no levels configured");
  std::vector<InfSupRecord> records(c.levels.size());
  std::vector<std::string> notes(c.levels.size());
  for_each_level(c, [&](std::size_t li) {
    InfSupRecord &r = records[li];
    r.level = static_cast<int>(li);
    std::ostringstream note;
    const LevelSpec &spec = c.levels[li];
    r.dim_u = predicted_dim_u(c, spec);
    r.dim_z = predicted_dim_z(c, spec);
    if (r.dim_u > max_dense_dimension) {
      r.status = "skipped";
      note << "level " << li << " skipped: dense size cap " << max_dense_dimension << '\n';
    } else {
      try {
        const Level lvl = build_level(c, spec);
        const auto &p = lvl.problem;
        r.h = lvl.h;
        r.hbar = lvl.hbar;
        r.dim_u = p.u_space->dim();
        r.dim_z = p.z_space->dim();
        const auto rep = infsup_diagnostic(p.L, p.H, p.M, 0);
        r.lambda_min = rep.lambda_min;
        // A is singular whenever dim U > dim Z.
        r.c_i = r.dim_u > r.dim_z ? 0.0 : rep.c_i;
        r.supinf = rep.supinf;
        note << "level " << li << ": lambda_min=" << fmt(r.lambda_min)
             << " c_I=" << fmt(r.c_i) << '\n';
      } catch (const std::exception &e) {
        r.status = "failed";
        note << "level " << li << " failed: " << e.what() << '\n';
      }
    }
    notes[li] = note.str();
    if (log && c.jobs <= 1)
      *log << notes[li] << std::flush;
  });
  if (log && c.jobs > 1)
    for (const auto &n : notes)
      *log << n;
  return records;
}

void write_csv(std::ostream &out, const std::vector<ConvergenceRecord> &records) {
  out << "level,h,hbar,dimU,dimZ,method,error,eoc,iterations,status\n";
  for (const auto &r : records)
    out << r.level << ',' << fmt(r.h) << ',' << fmt(r.hbar) << ',' << r.dim_u << ','
        << r.dim_z << ',' << to_string(r.method) << ','
        << (r.status == "failed" ? "" : fmt(r.error)) << ','
        << (r.eoc ? fmt(*r.eoc) : "") << ',' << r.iterations << ',' << r.status << '\n';
}

void write_csv(std::ostream &out, const std::vector<SolverRecord> &records) {
  out << "h,hbar,dimU,dimZ,iters_inv,iters_ss,converged_inv,converged_ss,status\n";
  for (const auto &r : records)
    out << fmt(r.h) << ',' << fmt(r.hbar) << ',' << r.dim_u << ',' << r.dim_z << ','
        << r.iters_inv << ',' << r.iters_ss << ',' << r.converged_inv << ','
        << r.converged_ss << ',' << r.status << '\n';
}

void write_csv(std::ostream &out, const std::vector<InfSupRecord> &records) {
  out << "level,h,hbar,dimU,dimZ,lambda_min,c_I,supinf,status\n";
  for (const auto &r : records)
    out << r.level << ',' << fmt(r.h) << ',' << fmt(r.hbar) << ',' << r.dim_u << ','
        << r.dim_z << ',' << fmt(r.lambda_min) << ',' << fmt(r.c_i) << ','
        << fmt(r.supinf) << ',' << r.status << '\n';
}

int run_study(const StudyConfig &c, std::ostream &log) {
  std::ostringstream csv;
  bool partial = false;
  auto failed = [](const auto &records) {
    return std::ranges::any_of(records, [](const auto &r) {
      return r.status == "failed" || r.status == "unconverged";
    });
  };
  switch (c.study) {
  case StudyKind::Convergence: {
    const auto rec = run_convergence(c, &log);
    write_csv(csv, rec);
    partial = failed(rec);
    break;
  }
  case StudyKind::SolverIterations: {
    const auto rec = run_solver_study(c, &log);
    write_csv(csv, rec);
    partial = failed(rec);
    break;
  }
  case StudyKind::InfSup: {
    const auto rec = run_infsup(c, &log);
    write_csv(csv, rec);
    partial = failed(rec);
    break;
  }
  }
  std::ofstream out(c.output, std::ios::binary);
  if (!out)
    throw Error("cannot write output file '" + c.output + "'");
  out << csv.str();
  log << "wrote " << c.output << '\n';
  return partial ? 2 : 0;
}

} // namespace llstar
