#include "rbsde/commands.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>
#include <fstream>
#include <random>

namespace py = pybind11;

namespace {

py::object to_python(const rbsde::Report& r) {
    return py::module_::import("json").attr("loads")(r.dump());
}

rbsde::Scenario scenario_of(const std::string& text) { return rbsde::parse_scenario(text); }

/// Y on every slot, by node id: ([Y(t)], [Y(t+)]).
std::pair<std::vector<double>, std::vector<double>> value_process(const std::string& text,
                                                                  std::optional<std::string> barrier,
                                                                  std::optional<std::string> scheme) {
    const auto s = scenario_of(text);
    std::mt19937_64 rng(std::random_device{}());
    const auto dir = std::filesystem::temp_directory_path() / ("rbsde-" + std::to_string(rng()));
    rbsde::SolveFlags flags;
    flags.barrier = std::move(barrier);
    flags.scheme = std::move(scheme);
    flags.out = dir.string();
    rbsde::LatticeProcess y;
    try {
        rbsde::run_solve(s, flags);
        std::ifstream in(dir / "Y.csv");
        y = rbsde::read_csv(in, rbsde::build_tree(s));
    } catch (...) {
        std::filesystem::remove_all(dir);
        throw;
    }
    std::filesystem::remove_all(dir);
    std::pair<std::vector<double>, std::vector<double>> out;
    for (std::size_t v = 0; v < y.nodes(); ++v) {
        out.first.push_back(y(static_cast<rbsde::NodeId>(v)));
        out.second.push_back(y.plus(static_cast<rbsde::NodeId>(v)));
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Reflected BSDEs on finite event trees";
    m.attr("__version__") = rbsde::version;

    static py::exception<rbsde::Error> error(m, "RbsdeError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const rbsde::Error& e) {
            py::object inst = py::handle(error.ptr())(e.what());
            inst.attr("exit_code") = e.exit_code();
            inst.attr("kind") = rbsde::to_string(e.kind());
            PyErr_SetObject(error.ptr(), inst.ptr());
        }
    });

    m.def("suite_names", &rbsde::suite_names);

    m.def(
        "solve",
        [](const std::string& text, std::optional<std::string> barrier, std::optional<std::string> scheme,
           std::optional<double> tol, const std::string& out) {
            rbsde::SolveFlags f{std::move(barrier), std::move(scheme), tol, out};
            return to_python(rbsde::run_solve(scenario_of(text), f));
        },
        py::arg("scenario"), py::arg("barrier") = py::none(), py::arg("scheme") = py::none(),
        py::arg("tol") = py::none(), py::arg("out") = "");

    m.def(
        "dynkin",
        [](const std::string& text, const std::string& mode, std::optional<double> epsilon, bool plain,
           const std::string& out) {
            rbsde::DynkinFlags f{mode, epsilon, plain, out};
            return to_python(rbsde::run_dynkin(scenario_of(text), f));
        },
        py::arg("scenario"), py::arg("mode") = "dp", py::arg("epsilon") = py::none(), py::arg("plain") = false,
        py::arg("out") = "");

    m.def(
        "verify",
        [](const std::string& text, std::vector<std::string> suites, std::optional<int> trials,
           std::optional<std::uint64_t> seed, const std::string& out) {
            rbsde::VerifyFlags f{std::move(suites), trials, seed, out};
            rbsde::Scenario s;
            if (text.empty()) s.name = "random";
            else s = scenario_of(text);
            rbsde::Report r;
            {
                py::gil_scoped_release release;
                r = rbsde::run_verify(s, f);
            }
            return to_python(r);
        },
        py::arg("scenario"), py::arg("suites") = std::vector<std::string>{}, py::arg("trials") = py::none(),
        py::arg("seed") = py::none(), py::arg("out") = "");

    m.def(
        "horizon_study",
        [](const std::string& text, int a_max, const std::string& out) {
            return to_python(rbsde::run_horizon(scenario_of(text), rbsde::HorizonFlags{a_max, out}));
        },
        py::arg("scenario"), py::arg("a_max") = 0, py::arg("out") = "");

    m.def("value_process", &value_process, py::arg("scenario"), py::arg("barrier") = py::none(),
          py::arg("scheme") = py::none());

    m.def("normalize", [](const std::string& text) { return rbsde::emit_scenario(scenario_of(text)); });
}
