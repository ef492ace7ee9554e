// Python bindings: distance fields, prediction, planning primitives, the QP and the simulator.
#include "mmp/barrier.hpp"
#include "mmp/config_io.hpp"
#include "mmp/controller.hpp"
#include "mmp/geometry.hpp"
#include "mmp/gpdf.hpp"
#include "mmp/planner.hpp"
#include "mmp/prediction.hpp"
#include "mmp/qp.hpp"
#include "mmp/sim.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace mmp;

namespace {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

std::vector<Point2> to_points(const Points& m) {
  std::vector<Point2> out;
  out.reserve(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.emplace_back(m(i, 0), m(i, 1));
  return out;
}

Points from_points(const std::vector<Point2>& pts) {
  Points m(static_cast<Eigen::Index>(pts.size()), 2);
  for (std::size_t i = 0; i < pts.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
  return m;
}

py::dict run_to_dict(const RunRecord& r) {
  Eigen::MatrixXd traj(static_cast<Eigen::Index>(r.steps.size()), 8);
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    const auto& s = r.steps[i];
    traj.row(static_cast<Eigen::Index>(i)) << s.t, s.state.px, s.state.py, s.state.theta, s.u.v, s.u.omega, s.min_h,
        s.feasible ? 1.0 : 0.0;
  }
  py::dict d;
  d["scenario"] = r.scenario;
  d["mode"] = to_string(r.mode);
  d["seed"] = r.seed;
  d["outcome"] = to_string(r.outcome);
  d["timespan"] = r.timespan;
  d["infeasible_steps"] = r.infeasible_steps;
  d["min_clearance"] = r.min_clearance;
  d["error"] = r.error;
  d["trajectory"] = traj;
  d["columns"] = std::vector<std::string>{"t", "px", "py", "theta", "v", "omega", "min_h", "feasible"};
  return d;
}

py::dict row_to_dict(const MetricsRow& r) {
  py::dict d;
  d["scenario"] = r.scenario;
  d["mode"] = to_string(r.mode);
  d["runs"] = r.runs;
  d["errored"] = r.errored;
  d["safety"] = r.safety;
  d["success"] = r.success;
  d["infeasible_steps"] = r.infeasible_steps;
  d["timespan_mean"] = r.timespan_mean ? py::cast(*r.timespan_mean) : py::none();
  d["runtime_mean"] = r.runtime_mean;
  d["runtime_std"] = r.runtime_std;
  return d;
}

}  // namespace

PYBIND11_MODULE(mmpnav, m) {
  m.doc() = "Reactive navigation with modulated control barrier functions over GP distance fields";

  py::register_exception<GeometryError>(m, "GeometryError", PyExc_ValueError);
  py::register_exception<FitError>(m, "FitError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<PlannerError>(m, "PlannerError", PyExc_RuntimeError);

  py::enum_<Mode>(m, "Mode")
      .value("CBF", Mode::CBF)
      .value("MCBF", Mode::MCBF)
      .value("MMP_CBF", Mode::MMP_CBF)
      .value("MMP_MCBF", Mode::MMP_MCBF);

  py::class_<KernelParams>(m, "KernelParams")
      .def(py::init([](double sigma, double length_scale, double noise) {
             return KernelParams{sigma, length_scale, noise};
           }),
           py::arg("sigma") = 1.0, py::arg("length_scale") = 0.2, py::arg("noise") = 0.0)
      .def_readwrite("sigma", &KernelParams::sigma)
      .def_readwrite("length_scale", &KernelParams::length_scale)
      .def_readwrite("noise", &KernelParams::noise);

  py::class_<GpdfModel>(m, "GpdfModel")
      .def_static(
          "fit", [](const Points& pts, const KernelParams& k) { return GpdfModel::fit(to_points(pts), k); },
          py::arg("points"), py::arg("kernel") = KernelParams{})
      .def("distance", [](const GpdfModel& g, const Point2& p) { return g.distance(p); })
      .def("gradient", [](const GpdfModel& g, const Point2& p) { return Vec2(g.gradient(p)); })
      .def("distances",
           [](const GpdfModel& g, const Points& q) {
             Eigen::VectorXd out(q.rows());
             for (Eigen::Index i = 0; i < q.rows(); ++i) out(i) = g.distance(Point2(q(i, 0), q(i, 1)));
             return out;
           })
      .def("residual", &GpdfModel::residual)
      .def_property_readonly("alpha", [](const GpdfModel& g) { return Eigen::VectorXd(g.alpha()); })
      .def("__len__", &GpdfModel::size);

  m.def(
      "combine", [](const std::vector<double>& v, double rho) { return combine(v, rho); }, py::arg("values"),
      py::arg("rho"), "Log-sum-exp soft minimum of barrier values.");

  m.def(
      "extract_level_contours",
      [](const Eigen::Ref<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>& values,
         const Point2& origin, double resolution, double level) {
        ScalarGrid g(origin, resolution, static_cast<int>(values.cols()), static_cast<int>(values.rows()));
        for (int iy = 0; iy < g.height; ++iy)
          for (int ix = 0; ix < g.width; ++ix) g.at(ix, iy) = values(iy, ix);
        std::vector<Points> out;
        for (const auto& c : extract_level_contours(g, level)) out.push_back(from_points(c.vertices));
        return out;
      },
      py::arg("values"), py::arg("origin"), py::arg("resolution"), py::arg("level"),
      "Closed CCW level contours of a row-major grid (rows are y).");

  m.def(
      "geodesic_along",
      [](const Points& ring, const Point2& a, const Point2& b) {
        return geodesic_along(Polyline{to_points(ring), true}, a, b);
      },
      py::arg("contour"), py::arg("a"), py::arg("b"));

  m.def(
      "cvm_efrs",
      [](const Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>& history, double tau_max, double radius,
         double margin, double spread) {
        ObstacleTrack t{"track", {}, radius};
        for (Eigen::Index i = 0; i < history.rows(); ++i)
          t.history.push_back({history(i, 0), Point2(history(i, 1), history(i, 2))});
        t.validate();
        return from_points(cvm_efrs(t, tau_max, CvmShape{margin, spread}).boundary.vertices);
      },
      py::arg("history"), py::arg("tau_max") = 4.0, py::arg("radius") = 0.3, py::arg("margin") = 0.1,
      py::arg("spread") = 0.25, "Reachable-set boundary from rows of (t, x, y).");

  m.def(
      "probmap_efrs",
      [](const std::filesystem::path& path, std::optional<double> delta_kappa) {
        const auto stack = load_probmap_stack(path);
        std::vector<Points> out;
        for (const auto& e : probmap_efrs(stack, delta_kappa.value_or(default_delta_kappa(stack))))
          out.push_back(from_points(e.boundary.vertices));
        return out;
      },
      py::arg("path"), py::arg("delta_kappa") = py::none());

  m.def(
      "auto_param_select",
      [](const std::function<double(const Point2&)>& sbar, int N, const Point2& rob, const Point2& tar,
         const Point2& cover_min, const Point2& cover_max, double resolution) {
        MapSpec spec;
        spec.cover = Eigen::AlignedBox2d(cover_min, cover_max);
        spec.resolution = resolution;
        const auto sel = auto_param_select(sbar, N, rob, tar, spec);
        py::dict d;
        d["beta"] = sel.beta;
        d["d_geo"] = sel.d_geo;
        d["fallback"] = sel.fallback;
        d["contour_count"] = sel.contour_count;
        return d;
      },
      py::arg("sbar"), py::arg("N"), py::arg("robot"), py::arg("target"), py::arg("cover_min"),
      py::arg("cover_max"), py::arg("resolution") = 0.05);

  m.def(
      "solve_qp",
      [](const Eigen::Vector2d& u_nom, const Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>& A,
         const Eigen::VectorXd& b) {
        if (A.rows() != b.size()) throw py::value_error("A and b row counts differ");
        QpProblem qp;
        qp.u_nom = u_nom;
        for (Eigen::Index i = 0; i < A.rows(); ++i) qp.rows.push_back({A.row(i).transpose(), b(i), RowKind::Safety});
        const auto sol = solve_qp(qp);
        return py::make_tuple(sol.feasible, Eigen::Vector2d(sol.u));
      },
      py::arg("u_nom"), py::arg("A"), py::arg("b"), "min |u - u_nom|^2 s.t. A u >= b; returns (feasible, u).");

  py::class_<ScenarioConfig>(m, "Scenario")
      .def_static("load", [](const std::filesystem::path& p) { return load_scenario(p); })
      .def_static("from_json", [](const std::string& s) { return scenario_from_json(nlohmann::json::parse(s)); })
      .def("to_json", [](const ScenarioConfig& s) { return to_json(s).dump(); })
      .def_readwrite("name", &ScenarioConfig::name)
      .def_readwrite("seed", &ScenarioConfig::seed)
      .def_property(
          "theta", [](const ScenarioConfig& s) { return s.start.theta; },
          [](ScenarioConfig& s, double th) { s.start.theta = th; });

  m.def(
      "run_scenario",
      [](const ScenarioConfig& s, Mode mode) {
        RunRecord r;
        {
          py::gil_scoped_release release;
          r = run_scenario(s, mode);
        }
        return run_to_dict(r);
      },
      py::arg("scenario"), py::arg("mode"));

  m.def(
      "run_batch",
      [](const std::vector<ScenarioConfig>& configs, const std::vector<Mode>& modes, int orientations) {
        BatchResult b;
        {
          py::gil_scoped_release release;
          b = run_batch(configs, modes, orientations);
        }
        py::list rows;
        for (const auto& r : b.table) rows.append(row_to_dict(r));
        return rows;
      },
      py::arg("scenarios"), py::arg("modes"), py::arg("orientations") = 10);

  py::class_<Controller>(m, "Controller")
      .def(py::init([](Mode mode, const std::string& overrides) {
             ControllerConfig c;
             if (!overrides.empty()) c = controller_config_from_json(nlohmann::json::parse(overrides));
             c.mode = mode;
             return Controller(c);
           }),
           py::arg("mode") = Mode::MMP_MCBF, py::arg("config_json") = "")
      .def(
          "step",
          [](Controller& ctl, double time, const Eigen::Vector3d& pose, const Point2& target,
             const std::vector<Points>& obstacles) {
            WorldSnapshot w;
            w.time = time;
            w.robot = RobotState{pose(0), pose(1), pose(2), ctl.config().model, ctl.config().a};
            w.target = target;
            for (const auto& o : obstacles) w.static_obstacles.push_back(Polyline{to_points(o), true});
            const auto out = ctl.step(w);
            py::dict d;
            d["v"] = out.u.v;
            d["omega"] = out.u.omega;
            d["feasible"] = out.diagnostics.feasible;
            d["min_h"] = out.diagnostics.min_h;
            d["beta"] = out.diagnostics.beta;
            d["phi"] = out.diagnostics.phi ? py::cast(Eigen::VectorXd(*out.diagnostics.phi)) : py::none();
            return d;
          },
          py::arg("time"), py::arg("pose"), py::arg("target"), py::arg("static_obstacles") = std::vector<Points>{})
      .def("reset", &Controller::reset);
}
