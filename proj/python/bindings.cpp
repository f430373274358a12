#include "octimls/fitter.hpp"
#include "octimls/io.hpp"
#include "octimls/mesher.hpp"
#include "octimls/metrics.hpp"
#include "octimls/parallel.hpp"
#include "octimls/recon.hpp"
#include "octimls/sdf_grid.hpp"
#include "octimls/shapes.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace octimls;

namespace {

using Rows3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Tris = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;

Rows3 to_rows(const std::vector<Vec3>& v) {
  Rows3 out(static_cast<Eigen::Index>(v.size()), 3);
  for (std::size_t i = 0; i < v.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = v[i].transpose();
  return out;
}

std::vector<Vec3> from_rows(const Rows3& m) {
  std::vector<Vec3> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m.row(i).transpose();
  return out;
}

py::dict report_dict(const MetricReport& r) {
  py::dict d;
  d["cd1"] = r.cd1;
  d["cd1_raw"] = r.cd1_raw;
  d["nc"] = r.nc;
  d["iou"] = r.iou;
  d["fscore"] = r.fscore;
  d["precision"] = r.precision;
  d["recall"] = r.recall;
  d["tau"] = r.tau;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.attr("__version__") = OCTIMLS_VERSION;

  py::register_exception<Error>(m, "Error", PyExc_ValueError);

  m.def("set_num_threads", &set_num_threads, py::arg("n"));

  py::class_<TriangleMesh>(m, "TriangleMesh")
      .def(py::init<>())
      .def(py::init([](const Rows3& vertices, const Tris& triangles) {
             TriangleMesh mesh;
             mesh.vertices = from_rows(vertices);
             mesh.triangles.resize(static_cast<std::size_t>(triangles.rows()));
             for (Eigen::Index i = 0; i < triangles.rows(); ++i)
               mesh.triangles[static_cast<std::size_t>(i)] = {triangles(i, 0), triangles(i, 1), triangles(i, 2)};
             mesh.validate();
             return mesh;
           }),
           py::arg("vertices"), py::arg("triangles"))
      .def_property_readonly("vertices", [](const TriangleMesh& mesh) { return to_rows(mesh.vertices); })
      .def_property_readonly("normals", [](const TriangleMesh& mesh) { return to_rows(mesh.normals); })
      .def_property_readonly("triangles",
                             [](const TriangleMesh& mesh) {
                               Tris out(static_cast<Eigen::Index>(mesh.triangles.size()), 3);
                               for (std::size_t i = 0; i < mesh.triangles.size(); ++i)
                                 for (int c = 0; c < 3; ++c) out(static_cast<Eigen::Index>(i), c) = mesh.triangles[i][c];
                               return out;
                             })
      .def("area", &TriangleMesh::area)
      .def("euler_characteristic", [](const TriangleMesh& mesh) { return euler_characteristic(mesh); })
      .def("is_closed_manifold", [](const TriangleMesh& mesh) { return is_closed_manifold(mesh); })
      .def("__len__", [](const TriangleMesh& mesh) { return mesh.triangles.size(); });

  m.def("make_icosphere", &make_icosphere, py::arg("radius") = 0.5, py::arg("subdivisions") = 4,
        py::arg("center") = Vec3(0, 0, 0));
  m.def("make_torus", &make_torus, py::arg("major_radius") = 0.5, py::arg("minor_radius") = 0.2,
        py::arg("major_segments") = 96, py::arg("minor_segments") = 48);
  m.def("read_obj", &read_obj, py::arg("path"));
  m.def("write_obj", &write_obj, py::arg("path"), py::arg("mesh"));

  m.def(
      "sample_surface",
      [](const TriangleMesh& mesh, std::size_t n, double noise, std::uint64_t seed) {
        const auto cloud = sample_surface(mesh, n, noise, seed);
        return py::make_tuple(to_rows(cloud.positions), to_rows(cloud.normals));
      },
      py::arg("mesh"), py::arg("n"), py::arg("noise") = 0.0, py::arg("seed") = 0,
      "Returns (positions, normals) as n x 3 arrays.");

  py::class_<MlsPointSet, std::shared_ptr<MlsPointSet>>(m, "MlsSet")
      .def("__len__", &MlsPointSet::size)
      .def_property_readonly("positions",
                             [](const MlsPointSet& s) {
                               std::vector<Vec3> v;
                               for (const auto& p : s.points()) v.push_back(p.position);
                               return to_rows(v);
                             })
      .def_property_readonly("normals",
                             [](const MlsPointSet& s) {
                               std::vector<Vec3> v;
                               for (const auto& p : s.points()) v.push_back(p.normal);
                               return to_rows(v);
                             })
      .def_property_readonly("radii",
                             [](const MlsPointSet& s) {
                               Eigen::VectorXd r(static_cast<Eigen::Index>(s.size()));
                               for (std::size_t i = 0; i < s.size(); ++i) r[static_cast<Eigen::Index>(i)] = s[i].radius;
                               return r;
                             })
      .def_property_readonly("depth", [](const MlsPointSet& s) { return s.scaffold() ? s.scaffold()->depth() : 0; })
      .def(
          "eval",
          [](std::shared_ptr<MlsPointSet> self, const Rows3& x) {
            const ImlsFunction f{std::shared_ptr<const MlsPointSet>(self)};
            Eigen::VectorXd values(x.rows());
            Rows3 gradients(x.rows(), 3);
            Eigen::Matrix<bool, Eigen::Dynamic, 1> band(x.rows());
            for (Eigen::Index i = 0; i < x.rows(); ++i) {
              const auto k = f.eval_with_gradient(x.row(i).transpose());
              values[i] = k.value;
              gradients.row(i) = k.gradient.transpose();
              band[i] = k.in_band;
            }
            return py::make_tuple(values, gradients, band);
          },
          py::arg("x"), "Returns (values, gradients, in_band) at the query points.")
      .def("write", [](const MlsPointSet& s, const std::filesystem::path& path) { write_mls(path, s); },
           py::arg("path"));

  m.def("read_mls", [](const std::filesystem::path& path) { return std::make_shared<MlsPointSet>(read_mls(path)); },
        py::arg("path"));

  m.def(
      "reconstruct",
      [](const Rows3& positions, const Rows3& normals, int depth, std::size_t k) {
        OrientedPointCloud cloud;
        cloud.positions = from_rows(positions);
        cloud.normals = from_rows(normals);
        ReconOptions options;
        options.depth = depth;
        options.k = k;
        return std::make_shared<MlsPointSet>(reconstruct(cloud, options));
      },
      py::arg("positions"), py::arg("normals"), py::arg("depth") = 6, py::arg("k") = kDefaultNeighbors);

  m.def(
      "extract_mesh",
      [](const MlsPointSet& set, int resolution, bool band_only) {
        MeshOptions options;
        options.resolution = resolution;
        options.band_only = band_only;
        py::gil_scoped_release release;
        return extract_mesh(set, options);
      },
      py::arg("mls"), py::arg("resolution") = 128, py::arg("band_only") = true);

  py::class_<FitConfig>(m, "FitConfig")
      .def(py::init<>())
      .def_readwrite("learning_rate", &FitConfig::learning_rate)
      .def_readwrite("stage1_epochs", &FitConfig::stage1_epochs)
      .def_readwrite("stage2_epochs", &FitConfig::stage2_epochs)
      .def_readwrite("steps_per_epoch", &FitConfig::steps_per_epoch)
      .def_readwrite("points_per_octant", &FitConfig::points_per_octant)
      .def_readwrite("seed", &FitConfig::seed);

  m.def(
      "fit_mesh",
      [](const TriangleMesh& mesh, int depth, int sdf_resolution, const FitConfig& cfg) {
        py::gil_scoped_release release;
        const auto normalized = normalize_mesh(mesh);
        const auto sdf = mesh_to_sdf(normalized.mesh, sdf_resolution);
        auto scaffold = std::make_shared<const Octree>(build_gt_octree(sdf, depth));
        auto result = fit(scaffold, sdf, cfg);
        return std::make_tuple(std::make_shared<MlsPointSet>(std::move(result.points)), result.initial_sdf_loss,
                               result.final_sdf_loss, result.diverged);
      },
      py::arg("mesh"), py::arg("depth") = 6, py::arg("sdf_resolution") = 128, py::arg("config") = FitConfig{},
      "Normalizes the mesh, fits MLS points to its SDF on a ground-truth scaffold and returns "
      "(mls, initial_sdf_loss, final_sdf_loss, diverged).");

  m.def(
      "chamfer_l1",
      [](const Rows3& x, const Rows3& y) {
        const auto a = from_rows(x), b = from_rows(y);
        return chamfer_l1(a, b);
      },
      py::arg("x"), py::arg("y"));

  m.def(
      "evaluate",
      [](const TriangleMesh& pred, const TriangleMesh& gt, std::size_t samples, bool volume, std::uint64_t seed) {
        MetricOptions options;
        options.surface_samples = samples;
        options.volume_samples = samples;
        options.volume = volume;
        options.seed = seed;
        return report_dict(evaluate(pred, gt, options));
      },
      py::arg("pred"), py::arg("gt"), py::arg("samples") = 100000, py::arg("volume") = true, py::arg("seed") = 0);
}
