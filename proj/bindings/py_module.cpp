#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fedsurv/datagen.hpp"
#include "fedsurv/experiment.hpp"
#include "fedsurv/federation.hpp"
#include "fedsurv/messages.hpp"
#include "fedsurv/metrics.hpp"
#include "fedsurv/model.hpp"
#include "fedsurv/rng.hpp"
#include "fedsurv/survival.hpp"

namespace py = pybind11;
using namespace fedsurv;

namespace {

std::vector<std::vector<double>> matrix_rows(const Matrix& m) {
    std::vector<std::vector<double>> rows(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) {
        rows[i].assign(m.row(i).begin(), m.row(i).end());
    }
    return rows;
}

Matrix matrix_from_rows(const std::vector<std::vector<double>>& rows) {
    Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols) {
            throw DomainError("rows disagree on length");
        }
        std::copy(rows[i].begin(), rows[i].end(), m.data.begin() + i * m.cols);
    }
    return m;
}

PredictedCurves make_curves(const TimeGrid& grid,
                            const std::vector<std::vector<double>>& rows) {
    PredictedCurves curves;
    curves.grid = grid;
    curves.survival = matrix_from_rows(rows);
    curves.validate();
    return curves;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Federated survival analysis: Kaplan-Meier partial matrices, "
              "jackknife pseudo values, survival MLP training and evaluation";

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<ProtocolError>(m, "ProtocolError", PyExc_RuntimeError);
    py::register_exception<IngestionError>(m, "IngestionError", PyExc_ValueError);
    py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);
    py::register_exception<MetricError>(m, "MetricError", PyExc_ValueError);

    py::class_<SurvivalRecord>(m, "SurvivalRecord")
        .def(py::init([](std::vector<double> covariates, double time, bool event) {
                 SurvivalRecord r;
                 r.covariates = std::move(covariates);
                 r.time = time;
                 r.event = event;
                 return r;
             }),
             py::arg("covariates"), py::arg("time"), py::arg("event"))
        .def_readwrite("covariates", &SurvivalRecord::covariates)
        .def_readwrite("time", &SurvivalRecord::time)
        .def_readwrite("event", &SurvivalRecord::event);

    py::class_<TimeGrid>(m, "TimeGrid")
        .def(py::init<std::vector<double>>(), py::arg("points"))
        .def_property_readonly("points", &TimeGrid::points)
        .def("__len__", &TimeGrid::size)
        .def("__eq__", [](const TimeGrid& a, const TimeGrid& b) { return a == b; });

    py::class_<PartialMatrix>(m, "PartialMatrix")
        .def(py::init([](TimeGrid grid, std::uint64_t at_risk,
                         std::vector<std::uint64_t> events,
                         std::vector<std::uint64_t> censored) {
                 PartialMatrix pm;
                 pm.grid = std::move(grid);
                 pm.at_risk_initial = at_risk;
                 pm.events = std::move(events);
                 pm.censored = std::move(censored);
                 pm.validate();
                 return pm;
             }),
             py::arg("grid"), py::arg("at_risk_initial"), py::arg("events"),
             py::arg("censored"))
        .def_readonly("grid", &PartialMatrix::grid)
        .def_readonly("at_risk_initial", &PartialMatrix::at_risk_initial)
        .def_readonly("events", &PartialMatrix::events)
        .def_readonly("censored", &PartialMatrix::censored)
        .def("at_risk", &PartialMatrix::at_risk)
        .def("__eq__",
             [](const PartialMatrix& a, const PartialMatrix& b) { return a == b; });

    py::class_<KMCurve>(m, "KMCurve")
        .def_readonly("grid", &KMCurve::grid)
        .def_readonly("survival", &KMCurve::survival);

    py::class_<PseudoValueMatrix>(m, "PseudoValueMatrix")
        .def_readonly("grid", &PseudoValueMatrix::grid)
        .def_property_readonly("values", [](const PseudoValueMatrix& pv) {
            return matrix_rows(pv.values);
        });

    py::class_<ModelParams>(m, "ModelParams")
        .def_static("init", &ModelParams::init, py::arg("layer_dims"), py::arg("seed"))
        .def_readwrite("layer_dims", &ModelParams::layer_dims)
        .def_readwrite("weights", &ModelParams::weights)
        .def_readwrite("biases", &ModelParams::biases)
        .def("__eq__",
             [](const ModelParams& a, const ModelParams& b) { return a == b; });

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("dropout_rate", &TrainConfig::dropout_rate)
        .def_readwrite("max_epochs", &TrainConfig::max_epochs)
        .def_readwrite("patience", &TrainConfig::patience)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("seed", &TrainConfig::seed);

    py::class_<SynthConfig>(m, "SynthConfig")
        .def(py::init<>())
        .def_readwrite("n", &SynthConfig::n)
        .def_readwrite("p", &SynthConfig::p)
        .def_readwrite("mu", &SynthConfig::mu)
        .def_readwrite("sigma", &SynthConfig::sigma)
        .def_readwrite("weibull_scale", &SynthConfig::weibull_scale)
        .def_readwrite("weibull_shape", &SynthConfig::weibull_shape)
        .def_readwrite("censor_prob", &SynthConfig::censor_prob)
        .def_readwrite("seed", &SynthConfig::seed);

    // survival core
    m.def("bin_index", &bin_index, py::arg("time"), py::arg("grid"),
          "0-based bin index, or None when the time lies beyond the grid");
    m.def(
        "build_partial_matrix",
        [](const std::vector<SurvivalRecord>& records, const TimeGrid& grid) {
            return build_partial_matrix(records, grid);
        },
        py::arg("records"), py::arg("grid"));
    m.def(
        "aggregate_partial_matrices",
        [](const std::vector<PartialMatrix>& matrices) {
            return aggregate_partial_matrices(matrices);
        },
        py::arg("matrices"));
    m.def("km_from_partial_matrix", &km_from_partial_matrix, py::arg("matrix"));
    m.def("leave_one_out_matrix", &leave_one_out_matrix, py::arg("global_matrix"),
          py::arg("record"));
    m.def(
        "pseudo_values",
        [](const PartialMatrix& global_matrix,
           const std::vector<SurvivalRecord>& records, std::uint64_t total_n) {
            return pseudo_values(global_matrix, records, total_n);
        },
        py::arg("global_matrix"), py::arg("client_records"), py::arg("total_n"));
    m.def(
        "censoring_km",
        [](const std::vector<SurvivalRecord>& records, const TimeGrid& grid) {
            return censoring_km(records, grid);
        },
        py::arg("records"), py::arg("grid"));

    // federation
    m.def(
        "negotiate_time_grid",
        [](const std::vector<double>& max_times, std::size_t num_points) {
            return negotiate_time_grid(max_times, num_points);
        },
        py::arg("max_times"), py::arg("num_points") = 8);
    m.def(
        "fedavg_aggregate",
        [](const std::vector<ModelParams>& updates) {
            return fedavg_aggregate(updates);
        },
        py::arg("updates"));
    m.def(
        "federated_pseudo_values",
        [](const std::vector<std::vector<SurvivalRecord>>& shards,
           std::size_t grid_points) {
            std::vector<ClientState> clients(shards.size());
            for (std::size_t k = 0; k < shards.size(); ++k) {
                clients[k].client_id = static_cast<std::uint32_t>(k);
                clients[k].records = shards[k];
            }
            ServerState server;
            server.config.num_clients = static_cast<std::uint32_t>(shards.size());
            server.config.grid_points = grid_points;
            Channel channel;
            run_grid_phase(clients, server, channel);
            run_pseudo_phase(clients, server, channel);
            std::vector<PseudoValueMatrix> out;
            out.reserve(clients.size());
            for (auto& c : clients) out.push_back(std::move(c.pseudo));
            return py::make_tuple(server.grid, out);
        },
        py::arg("shards"), py::arg("grid_points") = 8,
        "Run the partial-matrix exchange over in-process clients and return "
        "(grid, per-client pseudo-value matrices)");

    // metrics
    m.def(
        "curve_at",
        [](const TimeGrid& grid, const std::vector<std::vector<double>>& rows,
           std::size_t subject, double time) {
            return curve_at(make_curves(grid, rows), subject, time);
        },
        py::arg("grid"), py::arg("survival_rows"), py::arg("subject"), py::arg("time"));
    m.def(
        "td_cindex",
        [](const TimeGrid& grid, const std::vector<std::vector<double>>& rows,
           const std::vector<SurvivalRecord>& records) {
            return td_cindex(make_curves(grid, rows), records);
        },
        py::arg("grid"), py::arg("survival_rows"), py::arg("records"));
    m.def(
        "brier_ipcw",
        [](const TimeGrid& grid, const std::vector<std::vector<double>>& rows,
           const std::vector<SurvivalRecord>& records, double t) {
            const PredictedCurves curves = make_curves(grid, rows);
            const KMCurve censor = censoring_km(records, grid);
            return brier_ipcw(curves, records, censor, t);
        },
        py::arg("grid"), py::arg("survival_rows"), py::arg("records"), py::arg("t"));
    m.def(
        "integrated_brier",
        [](const TimeGrid& grid, const std::vector<std::vector<double>>& rows,
           const std::vector<SurvivalRecord>& records) {
            return integrated_brier(make_curves(grid, rows), records);
        },
        py::arg("grid"), py::arg("survival_rows"), py::arg("records"));

    // model
    m.def(
        "forward",
        [](const ModelParams& params, const std::vector<double>& x) {
            return forward(params, x);
        },
        py::arg("params"), py::arg("x"), "Eval-mode forward pass for one subject");
    m.def(
        "predict_curves",
        [](const ModelParams& params, const std::vector<SurvivalRecord>& records,
           const TimeGrid& grid) {
            return matrix_rows(predict_curves(params, records, grid).survival);
        },
        py::arg("params"), py::arg("records"), py::arg("grid"));
    m.def(
        "pseudo_loss",
        [](const std::vector<std::vector<double>>& predictions,
           const std::vector<std::vector<double>>& pseudo) {
            return pseudo_loss(matrix_from_rows(predictions),
                               matrix_from_rows(pseudo));
        },
        py::arg("predictions"), py::arg("pseudo"));
    m.def(
        "train_local",
        [](const std::vector<SurvivalRecord>& train_records,
           const PseudoValueMatrix& pseudo,
           const std::vector<SurvivalRecord>& validation, ModelParams params,
           const TrainConfig& config) {
            TrainResult res =
                train_local(train_records, pseudo, validation, std::move(params),
                            config);
            return py::make_tuple(res.params, res.best_val_cindex, res.epochs_run);
        },
        py::arg("train_records"), py::arg("pseudo"), py::arg("validation"),
        py::arg("params"), py::arg("config"),
        "Returns (best params, best validation cindex, epochs run)");

    // data generation and ingestion
    m.def(
        "generate_uncensored",
        [](const SynthConfig& config) {
            auto gen = rng::make_stream(config.seed, rng::Stream::kDataGen);
            return generate_uncensored(config, gen);
        },
        py::arg("config"));
    m.def(
        "apply_case_censoring",
        [](std::vector<SurvivalRecord> records, double censor_prob,
           std::uint64_t seed) {
            auto gen = rng::make_stream(seed, rng::Stream::kCensoring);
            return apply_case_censoring(std::move(records), censor_prob, gen);
        },
        py::arg("records"), py::arg("censor_prob"), py::arg("seed"));
    m.def(
        "partition_iid",
        [](const std::vector<SurvivalRecord>& records, std::size_t num_clients,
           std::uint64_t seed) {
            auto gen = rng::make_stream(seed, rng::Stream::kPartition);
            return partition_iid(records, num_clients, gen);
        },
        py::arg("records"), py::arg("num_clients"), py::arg("seed"));
    m.def("load_csv", &load_csv, py::arg("path"), py::arg("duration_column") = "duration",
          py::arg("event_column") = "event");
    m.def(
        "write_csv",
        [](const std::filesystem::path& path,
           const std::vector<SurvivalRecord>& records) { write_csv(path, records); },
        py::arg("path"), py::arg("records"));

    m.attr("__version__") = "0.1.0";
}
