#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "daycare/analysis.hpp"
#include "daycare/estimation.hpp"
#include "daycare/io.hpp"
#include "daycare/synthetic.hpp"

namespace py = pybind11;
using namespace daycare;

namespace {

std::optional<double> rate_of(const GroupRates& rates, SiblingStatus s) { return rates[s]; }

py::dict rates_dict(const GroupRates& rates) {
  py::dict d;
  for (SiblingStatus s : kSiblingStatuses) d[py::str(std::string(to_string(s)))] = rate_of(rates, s);
  return d;
}

py::dict placements_dict(const Market& market, const Matching& matching) {
  py::dict d;
  for (std::size_t c = 0; c < matching.size(); ++c) {
    d[py::int_(market.children()[c].id.value)] = matching[c].value;
  }
  return d;
}

Matching matching_from_dict(const Market& market, const std::map<std::int64_t, std::int64_t>& placements) {
  Matching mu = Matching::initial(market);
  for (const auto& [child, facility] : placements) {
    mu.assign(market.child_index(ChildId{child}), FacilityId{facility});
  }
  return mu;
}

py::dict estimation_dict(const EstimationResult& r) {
  py::dict params;
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    params[py::str(r.names[i])] = py::make_tuple(r.estimates[i], r.standard_errors[i]);
  }
  py::dict d;
  d["parameters"] = params;
  d["loglik"] = r.loglik;
  d["converged"] = r.converged;
  d["iterations"] = r.iterations;
  d["stop_reason"] = r.stop_reason;
  d["theta"] = r.theta_hat;
  return d;
}

py::dict fit_dict(const QuantileFit& f) {
  py::dict d;
  d["tau"] = f.tau;
  d["intercept"] = f.intercept;
  d["slope"] = f.slope;
  d["se_intercept"] = f.se_intercept;
  d["se_slope"] = f.se_slope;
  d["n"] = f.n;
  d["loss"] = f.loss;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Daycare matching market: mechanism, estimation and policy simulation";

  auto base = py::register_exception<Error>(m, "DaycareError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<LookupError>(m, "LookupError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<CapacityViolation>(m, "CapacityViolation", base.ptr());
  py::register_exception<NoStableMatching>(m, "NoStableMatching", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  py::class_<PolicyScenario>(m, "PolicyScenario")
      .def(py::init([](int simultaneous, int incumbent) {
             return PolicyScenario{simultaneous, incumbent, {}};
           }),
           py::arg("simultaneous_points"), py::arg("incumbent_points"))
      .def_readwrite("simultaneous_points", &PolicyScenario::simultaneous_points)
      .def_readwrite("incumbent_points", &PolicyScenario::incumbent_points)
      .def_static("before_reform", &PolicyScenario::before_reform)
      .def_static("after_reform", &PolicyScenario::after_reform)
      .def("__repr__", [](const PolicyScenario& p) {
        return "PolicyScenario(" + std::to_string(p.simultaneous_points) + ", " +
               std::to_string(p.incumbent_points) + ")";
      });

  py::class_<Theta>(m, "Theta")
      .def_static("from_text", &theta_from_text)
      .def_static("reference", &reference_theta)
      .def("to_text", &theta_to_text)
      .def_readwrite("kappa", &Theta::kappa)
      .def_readwrite("gamma0", &Theta::gamma0)
      .def_readwrite("alpha_nonlicensed", &Theta::alpha_nonlicensed)
      .def_readwrite("alpha_kindergarten", &Theta::alpha_kindergarten)
      .def_readwrite("age", &Theta::age)
      .def_readwrite("beta", &Theta::beta)
      .def_readwrite("gamma", &Theta::gamma);

  py::class_<Market>(m, "Market")
      .def_property_readonly("num_families", [](const Market& mk) { return mk.families().size(); })
      .def_property_readonly("num_children", [](const Market& mk) { return mk.children().size(); })
      .def_property_readonly("num_facilities", [](const Market& mk) { return mk.daycares().size(); })
      .def("status_counts",
           [](const Market& mk) {
             std::map<std::string, std::size_t> counts;
             for (std::size_t f = 0; f < mk.families().size(); ++f) {
               ++counts[std::string(to_string(mk.status(f)))];
             }
             return counts;
           })
      .def("violations", [](const Market& mk) {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& v : validate_market(mk)) out.emplace_back(v.entity, v.rule);
        return out;
      });

  m.def("read_market", [](const std::filesystem::path& dir) { return read_market(dir); },
        py::arg("directory"));

  m.def(
      "generate_market",
      [](std::size_t families, std::uint64_t seed) {
        SyntheticConfig cfg;
        cfg.num_families = families;
        SyntheticMarket sm = generate_synthetic_market(cfg, default_true_theta(), seed);
        const auto observed = placements_dict(sm.market, sm.observed);
        return py::make_tuple(std::move(sm.market), sm.theta_true, observed);
      },
      py::arg("families"), py::arg("seed"),
      "Synthetic market, true parameters and the observed matching ({child_id: facility_id}).");

  m.def(
      "run_mechanism",
      [](const Market& market, const PolicyScenario& policy) {
        const MechanismResult r = run_mechanism(market, policy);
        py::dict d;
        d["placements"] = placements_dict(market, r.matching);
        d["rates"] = rates_dict(assignment_rates(r.matching, market));
        d["repair_iterations"] = r.repair_iterations;
        return d;
      },
      py::arg("market"), py::arg("policy") = PolicyScenario::before_reform());

  m.def(
      "blocking_coalitions",
      [](const Market& market, const std::map<std::int64_t, std::int64_t>& placements,
         const PolicyScenario& policy) {
        return verify_stability(matching_from_dict(market, placements), market, policy,
                                ReportedPreferences{})
            .size();
      },
      py::arg("market"), py::arg("placements"), py::arg("policy"));

  m.def(
      "estimate",
      [](const Market& market, const std::map<std::int64_t, std::int64_t>& placements,
         const PolicyScenario& policy, bool individual, int max_iters) {
        const Matching mu = matching_from_dict(market, placements);
        FitOptions options;
        options.max_iters = max_iters;
        if (individual) return estimation_dict(fit_individual_model(market, mu, policy, options));
        const auto sets = build_choice_sets(market, mu, policy);
        return estimation_dict(fit_full_model(sets, market, options));
      },
      py::arg("market"), py::arg("placements"), py::arg("policy"), py::arg("individual") = false,
      py::arg("max_iters") = 500);

  m.def(
      "simulate_grid",
      [](const Market& market, const Theta& theta, int lo, int hi, int step, int threads) {
        const auto policies = GridSpec{lo, hi, step}.policies();
        std::vector<ScenarioResult> results;
        {
          py::gil_scoped_release release;
          results = simulate_policy_grid(market, theta, policies, threads);
        }
        py::list out;
        for (const auto& r : results) {
          py::dict d;
          d["x"] = r.policy.simultaneous_points;
          d["y"] = r.policy.incumbent_points;
          d["mean_welfare_km"] = r.mean_welfare_km;
          d["rates"] = rates_dict(r.rates);
          d["inequality_sd"] = r.inequality_sd;
          d["failed"] = r.failed;
          out.append(d);
        }
        return out;
      },
      py::arg("market"), py::arg("theta"), py::arg("min") = 0, py::arg("max") = 400,
      py::arg("step") = 5, py::arg("threads") = 0);

  m.def(
      "frontier_slope",
      [](const std::vector<double>& welfare, const std::vector<double>& inequality, double tau) {
        return fit_dict(quantile_regression_line(inequality, welfare, tau));
      },
      py::arg("welfare"), py::arg("inequality"), py::arg("tau") = kFrontierTau);

  m.def(
      "quantile_regression",
      [](const std::vector<double>& y, const std::vector<bool>& x, double tau, int reps,
         std::uint64_t seed) {
        const std::unique_ptr<bool[]> flags(new bool[x.size()]);
        std::copy(x.begin(), x.end(), flags.get());
        return fit_dict(quantile_regression(y, std::span<const bool>(flags.get(), x.size()), tau,
                                            reps, seed));
      },
      py::arg("y"), py::arg("x"), py::arg("tau"), py::arg("bootstrap_reps") = 0,
      py::arg("seed") = kBootstrapSeed);

  m.def("inequality_sd", py::overload_cast<std::array<double, 3>>(&inequality_sd),
        py::arg("rates"));
  m.def("km_equivalent", &km_equivalent, py::arg("value"), py::arg("theta"));
}
