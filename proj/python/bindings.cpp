#include "llstar/analysis.hpp"
#include "llstar/methods.hpp"
#include "llstar/study.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace llstar;

namespace {

// Points arrive as an (N, 2) array; the result has length N.
Eigen::VectorXd evaluate_at(const Eigen::Ref<const Eigen::MatrixX2d> &points,
                            const std::function<double(const Point &)> &f) {
  Eigen::VectorXd out(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    out[i] = f(Point(points(i, 0), points(i, 1)));
  return out;
}

Eigen::MatrixX2d mesh_vertices(const Mesh &mesh) {
  Eigen::MatrixX2d out(mesh.num_vertices(), 2);
  for (int i = 0; i < mesh.num_vertices(); ++i)
    out.row(i) = mesh.vertices()[i].transpose();
  return out;
}

Eigen::MatrixX3i mesh_triangles(const Mesh &mesh) {
  Eigen::MatrixX3i out(mesh.num_triangles(), 3);
  for (int t = 0; t < mesh.num_triangles(); ++t)
    for (int k = 0; k < 3; ++k)
      out(t, k) = mesh.triangles()[t][k];
  return out;
}

// Explicit CSR copy through Eigen vectors; the stock sparse caster of the
// system pybind11 returned matrices without entries.
py::object to_scipy(const SparseMatrix &a) {
  SparseMatrix c = a;
  c.makeCompressed();
  const Eigen::Index nnz = c.nonZeros();
  const Eigen::VectorXd data = Eigen::Map<const Eigen::VectorXd>(c.valuePtr(), nnz);
  const Eigen::VectorXi indices = Eigen::Map<const Eigen::VectorXi>(c.innerIndexPtr(), nnz);
  const Eigen::VectorXi indptr =
      Eigen::Map<const Eigen::VectorXi>(c.outerIndexPtr(), c.rows() + 1);
  return py::module_::import("scipy.sparse")
      .attr("csr_matrix")(py::make_tuple(data, indices, indptr),
                          py::make_tuple(c.rows(), c.cols()));
}

// pybind11 holders cannot point to const, so meshes travel in a wrapper.
struct MeshHandle {
  MeshPtr mesh;
};

StudyConfig config_from_text(const std::string &text) {
  std::istringstream in(text);
  return parse_config(in);
}

py::dict to_dict(const ConvergenceRecord &r) {
  py::dict d;
  d["level"] = r.level;
  d["h"] = r.h;
  d["hbar"] = r.hbar;
  d["dim_u"] = r.dim_u;
  d["dim_z"] = r.dim_z;
  d["method"] = to_string(r.method);
  d["error"] = r.error;
  d["eoc"] = r.eoc ? py::cast(*r.eoc) : py::none();
  d["iterations"] = r.iterations;
  d["status"] = r.status;
  return d;
}

py::dict to_dict(const SolverRecord &r) {
  py::dict d;
  d["level"] = r.level;
  d["h"] = r.h;
  d["hbar"] = r.hbar;
  d["dim_u"] = r.dim_u;
  d["dim_z"] = r.dim_z;
  d["iters_inv"] = r.iters_inv;
  d["iters_ss"] = r.iters_ss;
  d["converged_inv"] = r.converged_inv;
  d["converged_ss"] = r.converged_ss;
  d["status"] = r.status;
  return d;
}

py::dict to_dict(const InfSupRecord &r) {
  py::dict d;
  d["level"] = r.level;
  d["h"] = r.h;
  d["hbar"] = r.hbar;
  d["dim_u"] = r.dim_u;
  d["dim_z"] = r.dim_z;
  d["lambda_min"] = r.lambda_min;
  d["c_i"] = r.c_i;
  d["supinf"] = r.supinf;
  d["status"] = r.status;
  return d;
}

template <class Record> py::list to_list(const std::vector<Record> &records) {
  py::list out;
  for (const auto &r : records)
    out.append(to_dict(r));
  return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Least-squares finite element methods for advection-reaction problems";

  // Translators run newest first, so the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);

  py::class_<Coefficients>(m, "Coefficients")
      .def(py::init([](double bx, double by, double sigma_in, double sigma_out,
                       double inflow_value) {
             return Coefficients(Point(bx, by), sigma_in, sigma_out, inflow_value);
           }),
           py::arg("bx"), py::arg("by"), py::arg("sigma_in"), py::arg("sigma_out"),
           py::arg("inflow_value") = 1.0)
      .def_static("model", &Coefficients::model, py::arg("sigma_in"),
                  py::arg("sigma_out") = 1e-4)
      .def_static("from_angle", &Coefficients::from_angle, py::arg("alpha"),
                  py::arg("sigma_in"), py::arg("sigma_out"), py::arg("inflow_value") = 1.0)
      .def_readonly_static("model_angle", &Coefficients::model_angle)
      .def_property_readonly("b", [](const Coefficients &c) {
        return py::make_tuple(c.b().x(), c.b().y());
      })
      .def_property_readonly("sigma_in", &Coefficients::sigma_in)
      .def_property_readonly("sigma_out", &Coefficients::sigma_out)
      .def_property_readonly("inflow_value", &Coefficients::inflow_value)
      .def("sigma", [](const Coefficients &c, const Eigen::Ref<const Eigen::MatrixX2d> &p) {
        return evaluate_at(p, [&](const Point &x) { return sigma_at(c, x); });
      }, py::arg("points"))
      .def("exact_solution",
           [](const Coefficients &c, const Eigen::Ref<const Eigen::MatrixX2d> &p) {
             return evaluate_at(p, [&](const Point &x) { return exact_solution(c, x); });
           },
           py::arg("points"), "Exact solution at an (N, 2) array of points.");

  py::class_<MeshHandle>(m, "Mesh")
      .def_property_readonly("vertices", [](const MeshHandle &h) { return mesh_vertices(*h.mesh); })
      .def_property_readonly("triangles",
                             [](const MeshHandle &h) { return mesh_triangles(*h.mesh); })
      .def_property_readonly("num_vertices",
                             [](const MeshHandle &h) { return h.mesh->num_vertices(); })
      .def_property_readonly("num_triangles",
                             [](const MeshHandle &h) { return h.mesh->num_triangles(); })
      .def_property_readonly("h", [](const MeshHandle &h) { return h.mesh->h(); })
      .def(
          "refine",
          [](const MeshHandle &h, int levels) { return MeshHandle{refine(h.mesh, levels)}; },
          py::arg("levels") = 1);

  m.def(
      "square_mesh",
      [](int n, const Coefficients &coeffs, double jitter, std::uint64_t seed) {
        MeshOptions opts;
        opts.n = n;
        opts.jitter = jitter;
        opts.seed = seed;
        opts.omega_in = coeffs.omega_in();
        return MeshHandle{generate_square_mesh(opts, coeffs.b())};
      },
      py::arg("n"), py::arg("coefficients"), py::arg("jitter") = MeshOptions{}.jitter,
      py::arg("seed") = MeshOptions{}.seed,
      "Jittered n x n triangulation of the unit square (n divisible by 4).");

  py::class_<DiscreteProblem>(m, "DiscreteProblem")
      .def_property_readonly("dim_u", [](const DiscreteProblem &p) { return p.u_space->dim(); })
      .def_property_readonly("dim_z", [](const DiscreteProblem &p) { return p.z_space->dim(); })
      .def_property_readonly("L", [](const DiscreteProblem &p) {
        return to_scipy(p.L);
      })
      .def_property_readonly("H", [](const DiscreteProblem &p) {
        return to_scipy(p.H);
      })
      .def_property_readonly("M", [](const DiscreteProblem &p) {
        return to_scipy(p.M);
      })
      .def_readonly("rhs", &DiscreteProblem::rhs)
      .def_property_readonly("u_mesh", [](const DiscreteProblem &p) {
        return MeshHandle{p.u_space->mesh_ptr()};
      })
      .def_property_readonly("z_mesh", [](const DiscreteProblem &p) {
        return MeshHandle{p.z_space->mesh_ptr()};
      });

  m.def(
      "build_problem",
      [](const Coefficients &coeffs, const MeshHandle &mesh, int order_u, int order_z,
         int z_refinements, const std::string &bc) {
        ProblemSetup setup;
        setup.coeffs = coeffs;
        setup.u_mesh = mesh.mesh;
        setup.order_u = order_u;
        setup.order_z = order_z;
        setup.z_refinements = z_refinements;
        if (bc == "weak")
          setup.bc = BoundaryTreatment::Weak;
        else if (bc == "strong")
          setup.bc = BoundaryTreatment::Strong;
        else
          throw InvalidArgument("bc must be 'weak' or 'strong', got '" + bc + "'");
        return build_problem(setup);
      },
      py::arg("coefficients"), py::arg("mesh"), py::arg("order_u") = 1,
      py::arg("order_z") = 2, py::arg("z_refinements") = 0, py::arg("bc") = "weak");

  py::class_<MethodSolution>(m, "Solution")
      .def_property_readonly("method", [](const MethodSolution &s) { return to_string(s.kind); })
      .def_property_readonly("iterations",
                             [](const MethodSolution &s) { return s.report.iterations; })
      .def_property_readonly("converged",
                             [](const MethodSolution &s) { return s.report.converged; })
      .def_property_readonly("residual_history",
                             [](const MethodSolution &s) { return s.report.residual_history; })
      .def_property_readonly("u", [](const MethodSolution &s) -> py::object {
        if (!s.u)
          return py::none();
        return py::cast(s.u->coefficients());
      })
      .def_property_readonly("z", [](const MethodSolution &s) -> py::object {
        if (!s.z)
          return py::none();
        return py::cast(*s.z);
      })
      .def(
          "__call__",
          [](const MethodSolution &s, const Eigen::Ref<const Eigen::MatrixX2d> &p) {
            return evaluate_at(p, [&](const Point &x) { return s.approximation(x); });
          },
          py::arg("points"), "Approximation of the solution at an (N, 2) array of points.")
      .def(
          "l2_error",
          [](const MethodSolution &s, const Coefficients &coeffs, int order) {
            return l2_error(s.approximation, coeffs, order);
          },
          py::arg("coefficients"), py::arg("order"));

  m.def(
      "solve",
      [](const DiscreteProblem &problem, const std::string &method, double tol, double omega,
         int restart) {
        SolverOptions opts;
        opts.tol = tol;
        opts.omega = omega;
        opts.restart = restart;
        py::gil_scoped_release release;
        return solve(problem, parse_method(method), opts);
      },
      py::arg("problem"), py::arg("method"), py::arg("tol") = SolverOptions{}.tol,
      py::arg("omega") = SolverOptions{}.omega, py::arg("restart") = SolverOptions{}.restart);

  m.def(
      "infsup",
      [](const DiscreteProblem &p, int random_probes, std::uint64_t seed) {
        const InfSupReport r = infsup_diagnostic(p.L, p.H, p.M, random_probes, seed);
        py::dict d;
        d["lambda_min"] = r.lambda_min;
        d["c_i"] = r.c_i;
        d["supinf"] = r.supinf;
        d["probe_sup"] = r.probe_sup;
        d["dim_u"] = r.dim_u;
        d["dim_z"] = r.dim_z;
        return d;
      },
      py::arg("problem"), py::arg("random_probes") = 100, py::arg("seed") = 1);

  m.def(
      "run_study",
      [](const std::string &config_text) -> py::list {
        const StudyConfig config = config_from_text(config_text);
        switch (config.study) {
        case StudyKind::Convergence:
          return to_list(run_convergence(config));
        case StudyKind::SolverIterations:
          return to_list(run_solver_study(config));
        case StudyKind::InfSup:
          return to_list(run_infsup(config));
        }
        return py::list();
      },
      py::arg("config"),
      "Runs a study from config text (key = value lines) and returns its records.");
}
