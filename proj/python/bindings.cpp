#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "countycast/clep.hpp"
#include "countycast/dates.hpp"
#include "countycast/engine.hpp"
#include "countycast/glm.hpp"
#include "countycast/mepi.hpp"
#include "countycast/metrics.hpp"
#include "countycast/panel.hpp"
#include "countycast/predictors.hpp"
#include "countycast/severity.hpp"

namespace py = pybind11;
using namespace countycast;

namespace {

DesignMatrix to_design(const Eigen::MatrixXd& X) {
    DesignMatrix dm;
    dm.values = X;
    for (int j = 0; j < X.cols(); ++j) dm.names.push_back("x" + std::to_string(j));
    return dm;
}

std::vector<double> py_clep_weights(const std::vector<std::vector<double>>& losses,
                                    double c, double mu) {
    // losses[m] = trailing window for member m, oldest first, last entry = day t
    std::vector<double> exponents;
    for (const auto& series : losses) {
        const int n = static_cast<int>(series.size());
        double sum = 0.0;
        for (int i = 0; i < n; ++i)
            sum += std::pow(mu, n - 1 - i) * series[static_cast<size_t>(i)];
        exponents.push_back(-c * (1.0 - mu) * sum);
    }
    return weights_from_exponents(exponents);
}

CountyPanel py_load_panel(const std::string& deaths_csv, const std::string& cases_csv,
                          const std::string& adjacency_csv, bool clean) {
    CountyPanel panel = build_panel(load_county_series(deaths_csv, clean),
                                    load_county_series(cases_csv, clean));
    if (!adjacency_csv.empty())
        neighbor_aggregates(panel, load_adjacency(adjacency_csv));
    return panel;
}

py::dict py_forecast(const CountyPanel& panel, const std::string& as_of_iso, int horizon,
                     const std::vector<std::string>& predictors,
                     const std::vector<std::string>& ensemble, double mu, double c,
                     int loss_horizon, int mepi_window, bool mepi_clamped,
                     const std::string& demographics_csv) {
    EngineConfig cfg;
    cfg.predictors.clear();
    for (const auto& name : predictors) {
        const auto kind = parse_predictor_kind(name);
        if (!kind) throw std::runtime_error("unknown predictor '" + name + "'");
        cfg.predictors.push_back(*kind);
    }
    cfg.ensemble.clear();
    for (const auto& name : ensemble) {
        const auto kind = parse_predictor_kind(name);
        if (!kind) throw std::runtime_error("unknown ensemble member '" + name + "'");
        cfg.ensemble.push_back(*kind);
    }
    cfg.max_horizon = horizon;
    cfg.eval_horizons = {};
    cfg.weight.mu = mu;
    cfg.weight.c = c;
    cfg.weight.loss_horizon = loss_horizon;
    cfg.mepi_window = mepi_window;
    cfg.mepi_clamped = mepi_clamped;

    const long epoch = parse_iso_date(as_of_iso);
    const long day = epoch - panel.first_epoch_day;
    if (day < 0 || day >= panel.n_days)
        throw std::runtime_error("as-of date outside the panel");
    std::optional<DemographicsTable> demo;
    if (!demographics_csv.empty())
        demo = load_demographics(demographics_csv, panel.counties);
    const ForecastSet fs =
        forecast_at(panel, demo ? &*demo : nullptr, static_cast<int>(day), cfg);

    py::dict values;
    for (size_t p = 0; p < fs.predictors.size(); ++p)
        values[to_string(fs.predictors[p]).c_str()] =
            Eigen::MatrixXd(fs.values[p].leftCols(horizon));
    Eigen::MatrixXd lower(panel.n_counties(), horizon), upper(panel.n_counties(), horizon);
    for (int cty = 0; cty < panel.n_counties(); ++cty)
        for (int k = 1; k <= horizon; ++k) {
            lower(cty, k - 1) = fs.interval(cty, k).lower;
            upper(cty, k - 1) = fs.interval(cty, k).upper;
        }

    py::dict out;
    out["as_of"] = as_of_iso;
    out["counties"] = panel.counties;
    out["values"] = values;
    out["clep"] = Eigen::MatrixXd(fs.clep.leftCols(horizon));
    out["weights"] = fs.weights;
    out["interval_lower"] = lower;
    out["interval_upper"] = upper;
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "county-level death forecasting: Poisson GLM predictors, CLEP "
              "ensemble weights, MEPI prediction intervals";

    py::class_<GlmFit>(m, "GlmFit")
        .def_readonly("intercept", &GlmFit::intercept)
        .def_readonly("coef", &GlmFit::coef)
        .def_readonly("converged", &GlmFit::converged)
        .def_readonly("capped", &GlmFit::capped)
        .def_readonly("rank_deficient", &GlmFit::rank_deficient)
        .def_readonly("iterations", &GlmFit::iterations)
        .def_readonly("deviance", &GlmFit::deviance);

    py::class_<OlsFit>(m, "OlsFit")
        .def_readonly("intercept", &OlsFit::intercept)
        .def_readonly("coef", &OlsFit::coef)
        .def_readonly("rank_deficient", &OlsFit::rank_deficient);

    py::class_<CountyPanel>(m, "Panel")
        .def_property_readonly("counties",
                               [](const CountyPanel& p) { return p.counties; })
        .def_property_readonly("n_days", [](const CountyPanel& p) { return p.n_days; })
        .def_property_readonly("first_date",
                               [](const CountyPanel& p) { return p.date_string(0); })
        .def("deaths", [](const CountyPanel& p, int county) { return p.deaths.at(county); })
        .def("cases", [](const CountyPanel& p, int county) { return p.cases.at(county); });

    m.def(
        "fit_poisson_glm",
        [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double grad_tol,
           int max_iter, double coef_cap, double ridge) {
            FitConfig cfg;
            cfg.grad_tol = grad_tol;
            cfg.max_iter = max_iter;
            cfg.coef_cap = coef_cap;
            cfg.ridge = ridge;
            return fit_poisson_glm(to_design(X), y, cfg);
        },
        py::arg("X"), py::arg("y"), py::arg("grad_tol") = 1e-8, py::arg("max_iter") = 100,
        py::arg("coef_cap") = 30.0, py::arg("ridge") = 0.0,
        "Poisson GLM by IRLS with step-halving; intercept fitted implicitly");

    m.def(
        "fit_ols",
        [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
            return fit_ols(to_design(X), y);
        },
        py::arg("X"), py::arg("y"));

    m.def(
        "poisson_loglik",
        [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double intercept,
           const Eigen::VectorXd& coef) {
            return poisson_loglik(to_design(X), y, intercept, coef);
        },
        py::arg("X"), py::arg("y"), py::arg("intercept"), py::arg("coef"));

    m.def(
        "standardize",
        [](const Eigen::MatrixXd& X) {
            auto [Z, stz] = standardize(to_design(X));
            std::vector<bool> constant(stz.constant.begin(), stz.constant.end());
            return py::make_tuple(Z.values, stz.mean, stz.sd, constant);
        },
        py::arg("X"), "returns (Z, mean, sd, constant_flags); sd uses the n-1 denominator");

    m.def(
        "enforce_monotonicity",
        [](std::vector<double> predictions, double last_observed) {
            enforce_monotonicity(predictions, last_observed);
            return predictions;
        },
        py::arg("predictions"), py::arg("last_observed"));

    m.def("normalized_error", &normalized_error, py::arg("y"), py::arg("yhat"));

    m.def(
        "mepi_interval",
        [](double yhat, const std::vector<double>& deltas, double y_last, bool clamped,
           int window) {
            const auto pi = mepi_interval(yhat, deltas, y_last, clamped, window);
            return py::make_tuple(pi.lower, pi.upper);
        },
        py::arg("yhat"), py::arg("deltas"), py::arg("y_last"), py::arg("clamped") = true,
        py::arg("window") = 5);

    m.def("clep_weights", &py_clep_weights, py::arg("losses"), py::arg("c") = 1.0,
          py::arg("mu") = 0.5,
          "ensemble weights from trailing loss windows (oldest first)");
    m.def("weights_from_exponents", &weights_from_exponents, py::arg("exponents"));
    m.def("clep_loss", [](double yhat, double y, const std::string& transform) {
        return clep_loss(yhat, y,
                         transform == "log1p" ? WeightConfig::Transform::Log1p
                                              : WeightConfig::Transform::Sqrt);
    });

    m.def("mape", [](const std::vector<double>& pred, const std::vector<double>& obs) {
        const auto v = mape_t(pred, obs);
        if (!v) throw std::runtime_error("empty eligible set");
        return *v;
    });
    m.def("raw_mae", [](const std::vector<double>& pred, const std::vector<double>& obs) {
        const auto v = raw_mae_t(pred, obs);
        if (!v) throw std::runtime_error("empty eligible set");
        return *v;
    });
    m.def("sqrt_mae", [](const std::vector<double>& pred, const std::vector<double>& obs) {
        const auto v = sqrt_mae_t(pred, obs);
        if (!v) throw std::runtime_error("empty eligible set");
        return *v;
    });
    m.def("summary_percentiles", [](const std::vector<double>& values) {
        const auto p = summary_percentiles(values);
        return py::make_tuple(p.p10, p.median, p.p90);
    });

    m.def("rank_diagnostic",
          [](const std::vector<std::array<double, 6>>& tuples) {
              const auto diag = rank_diagnostic(tuples);
              return std::vector<double>(diag.avg_rank.begin(), diag.avg_rank.end());
          },
          py::arg("tuples"), "average rank per slot: [future, t, t-1, t-2, t-3, t-4]");

    m.def("allocate_deaths", &allocate_deaths, py::arg("county_value"),
          py::arg("employees"));
    m.def("percentile_ranks", &percentile_ranks, py::arg("values"));

    m.def("load_panel", &py_load_panel, py::arg("deaths_csv"), py::arg("cases_csv"),
          py::arg("adjacency_csv") = "", py::arg("clean") = true);

    m.def("forecast", &py_forecast, py::arg("panel"), py::arg("as_of"),
          py::arg("horizon") = 14,
          py::arg("predictors") = std::vector<std::string>{"separate", "linear", "shared"},
          py::arg("ensemble") = std::vector<std::string>{"shared", "linear"},
          py::arg("mu") = 0.5, py::arg("c") = 1.0, py::arg("loss_horizon") = 3,
          py::arg("mepi_window") = 5, py::arg("mepi_clamped") = true,
          py::arg("demographics_csv") = "",
          "run the rolling pipeline through as_of and return that day's forecasts");
}
