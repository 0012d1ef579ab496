// SPDX-License-Identifier: MIT
#include "attnopt/attention.hpp"
#include "attnopt/baselines.hpp"
#include "attnopt/harness.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace attnopt;

PYBIND11_MODULE(_attnopt, m) {
    m.doc() = "Set selection under single-layer self-attention objectives";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    py::class_<RewardFunction>(m, "RewardFunction")
        .def_static("logistic", &RewardFunction::logistic, py::arg("slope") = 1.0, py::arg("center") = 0.0)
        .def_static("relu", &RewardFunction::relu, py::arg("slope") = 1.0)
        .def_static("softplus", &RewardFunction::softplus, py::arg("beta") = 1.0)
        .def_static("linear", &RewardFunction::linear, py::arg("slope"))
        .def("__call__", &RewardFunction::operator())
        .def_property_readonly("kind", [](const RewardFunction& f) { return std::string(to_string(f.kind)); })
        .def_readonly("params", &RewardFunction::params);

    py::class_<Instance>(m, "Instance")
        .def(py::init([](const Mat& Q, const Mat& K, const Mat& V, const Vec& u, int k,
                         std::vector<RewardFunction> rewards, std::vector<int> reward_of_item) {
                 Instance inst;
                 inst.n = static_cast<int>(Q.rows());
                 inst.k = k;
                 inst.Q = Q;
                 inst.K = K;
                 inst.V = V;
                 inst.u = u;
                 inst.rewards = std::move(rewards);
                 inst.reward_of_item =
                     reward_of_item.empty() ? std::vector<int>(inst.n, 0) : std::move(reward_of_item);
                 inst.validate();
                 return inst;
             }),
             py::arg("Q"), py::arg("K"), py::arg("V"), py::arg("u"), py::arg("k"), py::arg("rewards"),
             py::arg("reward_of_item") = std::vector<int>{})
        .def_readonly("n", &Instance::n)
        .def_readonly("k", &Instance::k)
        .def_readonly("Q", &Instance::Q)
        .def_readonly("K", &Instance::K)
        .def_readonly("V", &Instance::V)
        .def_readonly("u", &Instance::u)
        .def("to_json", &instance_to_json)
        .def_static("from_json", [](const std::string& s) { return instance_from_json(s); });

    m.def("load_instance", &load_instance);
    m.def("save_instance", &save_instance);
    m.def(
        "generate",
        [](int n, int k, int d, int q_clusters, int k_clusters, double spread, std::uint64_t seed) {
            GenSpec g;
            g.n = n;
            g.k = k;
            g.d_kq = g.d_v = d;
            g.q_clusters = q_clusters;
            g.k_clusters = k_clusters;
            g.spread = spread;
            g.seed = seed;
            return generate(g);
        },
        py::arg("n") = 40, py::arg("k") = 4, py::arg("d") = 4, py::arg("q_clusters") = 2,
        py::arg("k_clusters") = 2, py::arg("spread") = 0.0, py::arg("seed") = 1);

    m.def("objective", [](const Instance& inst, std::vector<int> S) { return objective_set(inst, S); },
          py::arg("instance"), py::arg("indices"));
    m.def("attention_matrix", &attention_matrix);

    py::class_<Selection>(m, "Selection")
        .def_readonly("indices", &Selection::indices)
        .def_readonly("objective", &Selection::objective);

    m.def(
        "retrieve",
        [](const Instance& inst, double eps) { return retrieve(inst, eps).candidates.ids; },
        py::arg("instance"), py::arg("epsilon") = 0.1);
    m.def(
        "solve",
        [](const Instance& inst, double eps, std::optional<long> budget) {
            SolveParams p;
            p.epsilon = eps;
            p.ranking.budget = budget;
            return solve(inst, p).selection;
        },
        py::arg("instance"), py::arg("epsilon") = 0.1, py::arg("budget") = py::none(),
        py::call_guard<py::gil_scoped_release>());
    m.def(
        "beam_search",
        [](const Instance& inst, long budget) {
            std::vector<int> all(inst.n);
            for (int i = 0; i < inst.n; ++i) all[i] = i;
            return beam_search(PoolObjective(inst, all), beam_tuples(inst.k, budget)).selection;
        },
        py::arg("instance"), py::arg("budget") = 16);
    m.def("brute_force", [](const Instance& inst) { return brute_force(inst, inst.k); }, py::arg("instance"));
    m.def("knn_retrieval", &knn_retrieval, py::arg("instance"), py::arg("size"));
}
