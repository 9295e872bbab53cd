#pragma once

#include "llstar/analysis.hpp"
#include "llstar/methods.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace llstar {

enum class StudyKind { Convergence, SolverIterations, InfSup };

/// One mesh level: U on an n x n grid, Z on that grid refined
/// `z_refinements` times (unset: taken from the z_mesh key).
struct LevelSpec {
  int n = 8;
  std::optional<int> z_refinements;
};

/// Accepts "8, 16, 32" or "4/0, 4/1" (n/refinements).
std::vector<LevelSpec> parse_levels(const std::string &text);

struct StudyConfig {
  StudyKind study = StudyKind::Convergence;
  std::vector<MethodKind> methods{MethodKind::LLStar, MethodKind::TwoStage,
                                  MethodKind::SingleStage, MethodKind::LLStarInverse};
  double sigma_in = 1e4;
  double sigma_out = 1e-4;
  double alpha = Coefficients::model_angle;
  int order_u = 1;
  int order_z = 2;
  bool z_refined = false;
  std::vector<LevelSpec> levels{{8}, {16}, {32}, {64}, {128}};
  double omega = 1.0;
  BoundaryTreatment bc = BoundaryTreatment::Weak;
  double tol = 1e-6;
  int restart = 30;
  std::uint64_t seed = MeshOptions{}.seed;
  double jitter = 0.2;
  InverseSolver inverse_solver = InverseSolver::BlockGMRES;
  std::string output = "study.csv";
  int jobs = 1; ///< concurrent levels

  int z_refinements(const LevelSpec &level) const {
    return level.z_refinements.value_or(z_refined ? 1 : 0);
  }
  Coefficients coefficients() const;
};

/// Flat "key = value" text; '#' starts a comment.  Unknown keys and
/// malformed values throw InvalidArgument naming the line.
StudyConfig parse_config(std::istream &in);
StudyConfig load_config(const std::string &path);

/// Dimensions of the structured-grid spaces, from counting formulas.
int predicted_dim_u(const StudyConfig &config, const LevelSpec &level);
int predicted_dim_z(const StudyConfig &config, const LevelSpec &level);

struct ConvergenceRecord {
  int level = 0;
  double h = 0.0, hbar = 0.0;
  int dim_u = 0, dim_z = 0;
  MethodKind method = MethodKind::LLStar;
  double error = 0.0;
  std::optional<double> eoc;
  int iterations = 0;
  std::string status = "ok";
};

struct SolverRecord {
  int level = 0;
  double h = 0.0, hbar = 0.0;
  int dim_u = 0, dim_z = 0;
  int iters_inv = 0, iters_ss = 0;
  bool converged_inv = false, converged_ss = false;
  std::string status = "ok";
};

struct InfSupRecord {
  int level = 0;
  double h = 0.0, hbar = 0.0;
  int dim_u = 0, dim_z = 0;
  double lambda_min = 0.0, c_i = 0.0, supinf = 0.0;
  std::string status = "ok";
};

std::vector<ConvergenceRecord> run_convergence(const StudyConfig &config,
                                               std::ostream *log = nullptr);
std::vector<SolverRecord> run_solver_study(const StudyConfig &config,
                                           std::ostream *log = nullptr);
std::vector<InfSupRecord> run_infsup(const StudyConfig &config,
                                     std::ostream *log = nullptr);

void write_csv(std::ostream &out, const std::vector<ConvergenceRecord> &records);
void write_csv(std::ostream &out, const std::vector<SolverRecord> &records);
void write_csv(std::ostream &out, const std::vector<InfSupRecord> &records);

/// Runs the configured study, writes config.output, and returns 0 on full
/// success or 2 when some level failed.
int run_study(const StudyConfig &config, std::ostream &log);

} // namespace llstar
