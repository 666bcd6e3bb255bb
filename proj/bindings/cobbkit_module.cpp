#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cobbkit/cacm.hpp"
#include "cobbkit/error.hpp"
#include "cobbkit/frem.hpp"
#include "cobbkit/landmarks.hpp"
#include "cobbkit/loss.hpp"
#include "cobbkit/metrics.hpp"
#include "cobbkit/selfcheck.hpp"
#include "cobbkit/svg.hpp"
#include "cobbkit/synth.hpp"
#include "cobbkit/tilt.hpp"

namespace py = pybind11;
using namespace cobbkit;

PYBIND11_MODULE(_cobbkit, m) {
    m.doc() = "Cobb angle toolkit core";

    py::register_exception<Error>(m, "CobbkitError");

    py::class_<Point>(m, "Point")
        .def(py::init<>())
        .def(py::init([](double x, double y) { return Point{x, y}; }), py::arg("x"),
             py::arg("y"))
        .def_readwrite("x", &Point::x)
        .def_readwrite("y", &Point::y)
        .def("__repr__", [](const Point& p) {
            return "Point(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")";
        });

    py::class_<Vertebra>(m, "Vertebra")
        .def(py::init<>())
        .def_readwrite("index", &Vertebra::index)
        .def_readwrite("top_left", &Vertebra::top_left)
        .def_readwrite("top_right", &Vertebra::top_right)
        .def_readwrite("bottom_left", &Vertebra::bottom_left)
        .def_readwrite("bottom_right", &Vertebra::bottom_right);

    py::class_<SpineLandmarks>(m, "SpineLandmarks")
        .def(py::init<>())
        .def_readwrite("image_id", &SpineLandmarks::image_id)
        .def_readwrite("vertebrae", &SpineLandmarks::vertebrae)
        .def_readwrite("pixel_spacing_mm", &SpineLandmarks::pixel_spacing_mm);

    py::enum_<LandmarkFormat>(m, "LandmarkFormat")
        .value("CSV", LandmarkFormat::Csv)
        .value("JSON", LandmarkFormat::Json);

    m.def("parse_landmarks", &parse_landmarks, py::arg("text"), py::arg("format"));
    m.def("serialize_landmarks", &serialize_landmarks, py::arg("images"), py::arg("format"));
    m.def("load_landmarks_file",
          py::overload_cast<const std::string&>(&load_landmarks_file), py::arg("path"));
    m.def("validate", &validate, py::arg("landmarks"));

    py::class_<TiltProfile>(m, "TiltProfile")
        .def(py::init<>())
        .def_readwrite("endplate_rad", &TiltProfile::endplate_rad)
        .def_readwrite("vertebral_rad", &TiltProfile::vertebral_rad);
    m.def("tilt_profile", &tilt_profile, py::arg("landmarks"));

    py::enum_<CobbMethod>(m, "CobbMethod")
        .value("CACM", CobbMethod::Cacm)
        .value("CAM", CobbMethod::Cam);
    py::enum_<WindowKind>(m, "WindowKind")
        .value("INTERIOR", WindowKind::Interior)
        .value("END", WindowKind::End);
    py::enum_<CobbFlag>(m, "CobbFlag")
        .value("SINGLE_CURVE", CobbFlag::SingleCurve)
        .value("CLAMPED_NEGATIVE_END_ANGLE", CobbFlag::ClampedNegativeEndAngle)
        .value("MANY_INFLECTIONS", CobbFlag::ManyInflections);

    py::class_<SegmentWindow>(m, "SegmentWindow")
        .def(py::init<>())
        .def_readwrite("kind", &SegmentWindow::kind)
        .def_readwrite("first", &SegmentWindow::first)
        .def_readwrite("last", &SegmentWindow::last);
    py::class_<WindowAngle>(m, "WindowAngle")
        .def(py::init<>())
        .def_readwrite("window", &WindowAngle::window)
        .def_readwrite("angle_deg", &WindowAngle::angle_deg);
    py::class_<CobbReport>(m, "CobbReport")
        .def(py::init<>())
        .def_readwrite("image_id", &CobbReport::image_id)
        .def_readwrite("method", &CobbReport::method)
        .def_readwrite("angles_deg", &CobbReport::angles_deg)
        .def_readwrite("inflections", &CobbReport::inflections)
        .def_readwrite("windows", &CobbReport::windows)
        .def_readwrite("flags", &CobbReport::flags);

    m.def("cacm_pipeline", &cacm_pipeline, py::arg("landmarks"),
          py::arg("epsilon_rad") = kDefaultEpsilonRad);
    m.def("cam_baseline", &cam_baseline, py::arg("landmarks"));
    m.def("cacm_from_tilts", &cacm_from_tilts, py::arg("image_id"), py::arg("tilts_rad"),
          py::arg("epsilon_rad") = kDefaultEpsilonRad);
    m.def("cam_from_tilts", &cam_from_tilts, py::arg("image_id"), py::arg("tilts_rad"));
    m.def("report_json", &report_json, py::arg("report"));
    m.def("render_svg", &render_svg, py::arg("report"), py::arg("landmarks"));

    py::class_<SpineSpec>(m, "SpineSpec")
        .def(py::init<>())
        .def_readwrite("tilt_profile_deg", &SpineSpec::tilt_profile_deg)
        .def_readwrite("vertebra_width_px", &SpineSpec::vertebra_width_px)
        .def_readwrite("vertebra_height_px", &SpineSpec::vertebra_height_px)
        .def_readwrite("gap_px", &SpineSpec::gap_px)
        .def_readwrite("jitter_px", &SpineSpec::jitter_px)
        .def_readwrite("seed", &SpineSpec::seed);
    py::class_<GeneratedSpine>(m, "GeneratedSpine")
        .def(py::init<>())
        .def_readwrite("landmarks", &GeneratedSpine::landmarks)
        .def_readwrite("ground_truth", &GeneratedSpine::ground_truth);
    m.def("generate_spine", &generate_spine, py::arg("spec"),
          py::arg("image_id") = std::string("synthetic"));
    m.def("oracle_cobb", &oracle_cobb, py::arg("image_id"), py::arg("tilts_rad"),
          py::arg("epsilon_rad") = kDefaultEpsilonRad);

    py::class_<LandmarkPair>(m, "LandmarkPair")
        .def(py::init<>())
        .def_readwrite("pred", &LandmarkPair::pred)
        .def_readwrite("gt", &LandmarkPair::gt);
    m.def("pair_by_image_id", &pair_by_image_id, py::arg("preds"), py::arg("gts"));
    m.def("landmark_mse_mm2", &landmark_mse_mm2, py::arg("pairs"));
    m.def("sdr_percent", &sdr_percent, py::arg("pairs"), py::arg("delta_mm"));
    py::class_<AnglePair>(m, "AnglePair")
        .def(py::init<>())
        .def_readwrite("pred", &AnglePair::pred)
        .def_readwrite("gt", &AnglePair::gt);
    py::class_<SmapeResult>(m, "SmapeResult")
        .def_readonly("percent", &SmapeResult::percent)
        .def_readonly("n_images", &SmapeResult::n_images)
        .def_readonly("skipped", &SmapeResult::skipped);
    m.def("smape_percent", &smape_percent, py::arg("pairs"));
    py::class_<AngleErrorStats>(m, "AngleErrorStats")
        .def_readonly("cmae_deg", &AngleErrorStats::cmae_deg)
        .def_readonly("ed_deg", &AngleErrorStats::ed_deg)
        .def_readonly("md_deg", &AngleErrorStats::md_deg)
        .def_readonly("cd_deg", &AngleErrorStats::cd_deg);
    m.def("angle_errors", &angle_errors, py::arg("pairs"));
    m.def("circular_distance_deg", &circular_distance_deg, py::arg("a"), py::arg("g"));

    py::class_<HeatmapSet>(m, "HeatmapSet")
        .def(py::init<>())
        .def_readwrite("channels", &HeatmapSet::channels)
        .def_readwrite("height", &HeatmapSet::height)
        .def_readwrite("width", &HeatmapSet::width)
        .def_readwrite("values", &HeatmapSet::values);
    py::class_<LossConfig>(m, "LossConfig")
        .def(py::init<>())
        .def_readwrite("alpha", &LossConfig::alpha)
        .def_readwrite("beta", &LossConfig::beta)
        .def_readwrite("floor", &LossConfig::floor);
    py::class_<LossResult>(m, "LossResult")
        .def_readonly("value", &LossResult::value)
        .def_readonly("gradient", &LossResult::gradient);
    m.def("foreground_weights", &foreground_weights, py::arg("gt"), py::arg("beta"));
    m.def("heatmap_loss", &heatmap_loss, py::arg("pred"), py::arg("gt"), py::arg("config"));
    m.def("landmark_loss", &landmark_loss, py::arg("pred"), py::arg("gt"));
    m.def("total_loss", &total_loss, py::arg("heatmap_value"), py::arg("landmark_value"),
          py::arg("config"));
    m.def("gaussian_heatmaps", &gaussian_heatmaps, py::arg("channels"), py::arg("height"),
          py::arg("width"), py::arg("centers"), py::arg("sigma") = 2.0);

    py::class_<FeatureTensor>(m, "FeatureTensor")
        .def(py::init<>())
        .def_readwrite("channels", &FeatureTensor::channels)
        .def_readwrite("height", &FeatureTensor::height)
        .def_readwrite("width", &FeatureTensor::width)
        .def_readwrite("values", &FeatureTensor::values);
    py::class_<Mat>(m, "Mat")
        .def(py::init<>())
        .def(py::init<int, int>(), py::arg("rows"), py::arg("cols"))
        .def_readwrite("rows", &Mat::rows)
        .def_readwrite("cols", &Mat::cols)
        .def_readwrite("v", &Mat::v);
    py::class_<FremParams>(m, "FremParams")
        .def(py::init<>())
        .def_readwrite("channels", &FremParams::channels)
        .def_readwrite("height", &FremParams::height)
        .def_readwrite("width", &FremParams::width)
        .def_readwrite("input_proj", &FremParams::input_proj)
        .def_readwrite("output_proj", &FremParams::output_proj)
        .def_readwrite("map_gains", &FremParams::map_gains)
        .def_readwrite("lambda_", &FremParams::lambda)
        .def_readwrite("g1_proj", &FremParams::g1_proj)
        .def_readwrite("g2_proj", &FremParams::g2_proj)
        .def_readwrite("gamma", &FremParams::gamma)
        .def_readwrite("head_x", &FremParams::head_x)
        .def_readwrite("head_y", &FremParams::head_y)
        .def_readwrite("head_offset", &FremParams::head_offset);
    py::class_<FremOutput>(m, "FremOutput")
        .def_readonly("landmarks", &FremOutput::landmarks)
        .def_readonly("heatmaps", &FremOutput::heatmaps);
    m.def("default_frem_params", &default_frem_params, py::arg("channels"), py::arg("height"),
          py::arg("width"), py::arg("seed"));
    m.def("frem_forward", &frem_forward, py::arg("f_input"), py::arg("f_output"),
          py::arg("params"));
    m.def("attention_map", &attention_map, py::arg("fx"), py::arg("fy"));
    m.def("save_tensor", &save_tensor, py::arg("tensor"), py::arg("path"));
    m.def("load_tensor", &load_tensor, py::arg("path"));
    m.def("save_params", &save_params, py::arg("params"), py::arg("path"));
    m.def("load_params", &load_params, py::arg("path"));

    py::class_<CheckResult>(m, "CheckResult")
        .def_readonly("name", &CheckResult::name)
        .def_readonly("passed", &CheckResult::passed)
        .def_readonly("detail", &CheckResult::detail);
    py::class_<LossCheckSummary>(m, "LossCheckSummary")
        .def_readonly("max_rel_err", &LossCheckSummary::max_rel_err)
        .def_readonly("mean_rel_err", &LossCheckSummary::mean_rel_err)
        .def_readonly("n_coords", &LossCheckSummary::n_coords)
        .def_readonly("seed", &LossCheckSummary::seed)
        .def_readonly("passed", &LossCheckSummary::passed);
    m.def("run_frem_checks", &run_frem_checks, py::arg("seed"), py::arg("instances") = 100);
    m.def("run_loss_checks", &run_loss_checks, py::arg("seed"),
          py::arg("config") = LossConfig{});
    m.def("run_oracle_equivalence", &run_oracle_equivalence, py::arg("seed"),
          py::arg("profiles") = 10000, py::arg("epsilon_rad") = 1e-6);
    m.def("run_synth_round_trip", &run_synth_round_trip, py::arg("seed"),
          py::arg("spines") = 1000);
    m.def("run_selfcheck", &run_selfcheck, py::arg("seed"));
}
