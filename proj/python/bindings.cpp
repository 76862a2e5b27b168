#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "deskcloud/control/control_plane.hpp"
#include "deskcloud/control/invariants.hpp"
#include "deskcloud/core/error.hpp"
#include "deskcloud/sim/scenario.hpp"

namespace py = pybind11;
using namespace deskcloud;

namespace {

Json parse_or_empty(const std::string& text) { return text.empty() ? Json::object() : Json::parse(text); }

Config config_from(const std::map<std::string, std::string>& entries) {
  Config c;
  for (const auto& [k, v] : entries) c.set(k, v);
  return c;
}

// Domain errors cross into Python as DeskcloudError(code, message).
PyObject* g_error_type = PyExc_RuntimeError;

template <class F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    PyErr_SetObject(g_error_type, py::make_tuple(std::string(to_string(e.code())), e.what()).ptr());
    throw py::error_already_set();
  }
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "deskcloud control plane core";
  m.def("_set_error_type", [](py::object t) {
    Py_INCREF(t.ptr());
    g_error_type = t.ptr();
  });

  py::class_<ControlPlane>(m, "ControlPlane")
      .def(py::init([](const std::map<std::string, std::string>& cfg, bool bootstrap) {
             return guarded([&] { return std::make_unique<ControlPlane>(config_from(cfg), bootstrap); });
           }),
           py::arg("config") = std::map<std::string, std::string>{}, py::arg("bootstrap") = true)
      .def("submit",
           [](ControlPlane& cp, const std::string& name, const std::string& payload, const std::string& token) {
             return guarded([&] { return cp.submit(name, parse_or_empty(payload), token).dump(); });
           })
      .def("submit_system",
           [](ControlPlane& cp, const std::string& name, const std::string& payload) {
             return guarded([&] { return cp.submit_system(name, parse_or_empty(payload)).dump(); });
           })
      .def("login",
           [](ControlPlane& cp, const std::string& user, const std::string& password) {
             return guarded([&] { return cp.login(user, password).dump(); });
           })
      .def("query",
           [](const ControlPlane& cp, const std::string& what, const std::string& params, const std::string& token) {
             return guarded([&] { return cp.query(what, parse_or_empty(params), token).dump(); });
           })
      .def("digest", &ControlPlane::digest)
      .def("journal_length", [](const ControlPlane& cp) { return cp.journal().size(); })
      .def("state_json", [](const ControlPlane& cp) { return state_to_json(cp.state()).dump(); })
      .def("violations", [](const ControlPlane& cp) {
        Json out = Json::array();
        for (const auto& v : check_invariants(cp.state())) out.push_back(v);
        return out.dump();
      })
      .def("replay_copy", [](const ControlPlane& cp) {
        return guarded([&] {
          ControlPlane fresh(cp.config(), false);
          fresh.replay(cp.journal());
          return fresh.digest();
        });
      });

  m.def("run_scenario", [](const std::string& doc, std::optional<std::uint64_t> seed) {
    return guarded([&] {
      Scenario s = parse_scenario(Json::parse(doc));
      if (seed) s.seed = *seed;
      const ScenarioReport r = run_scenario(s);
      Json j = to_json(r);
      j["metrics_csv"] = r.metrics_csv;
      return j.dump();
    });
  }, py::arg("scenario"), py::arg("seed") = py::none());
}
