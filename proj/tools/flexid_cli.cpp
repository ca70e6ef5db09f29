/*
 * Copyright 2026 The flexid Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// flexid command line: simulate, calibrate, train, detect, identify, sweep,
// oscs and evaluate. Exit codes: 0 success, 2 configuration error, 3 data
// error, 4 model error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "flexid/config.hpp"
#include "flexid/datagen.hpp"
#include "flexid/errors.hpp"
#include "flexid/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitModel = 4;

struct Options {
    std::string config_path;
    bool print_config = false;
    std::optional<std::uint64_t> seed;
    std::string input;
    std::string model_path;
    std::string out_dir;
    std::string mode = "open";
    std::optional<std::string> fp_penalty;
    std::optional<std::string> fill_gaps;
    std::string truth_path;
    std::string detections_path;
    std::string calibration_path;
};

flexid::PipelineConfig effective_config(const Options& o) {
    auto cfg = o.config_path.empty() ? flexid::PipelineConfig{} : flexid::load_config(o.config_path);
    if (o.seed) cfg.scenario.seed = *o.seed;
    if (o.fp_penalty) cfg.evaluation.fad.fp_penalty = flexid::parse_fp_penalty(*o.fp_penalty);
    if (o.fill_gaps) {
        if (*o.fill_gaps == "hold") {
            cfg.io.gaps = flexid::GapPolicy::kHold;
        } else if (*o.fill_gaps == "report") {
            cfg.io.gaps = flexid::GapPolicy::kReport;
        } else {
            throw flexid::ConfigError("--fill-gaps must be report or hold");
        }
    }
    cfg.validate();
    return cfg;
}

flexid::PredictMode predict_mode(const std::string& mode) {
    if (mode == "open") return flexid::PredictMode::kOpen;
    if (mode == "closed") return flexid::PredictMode::kClosed;
    throw flexid::ConfigError("--mode must be open or closed");
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw flexid::DataError("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw flexid::DataError("cannot write " + path.string());
    return out;
}

void log_malformed(const flexid::ParseError& e) { std::cerr << "flexid: skipping malformed " << e.what() << '\n'; }

flexid::RawSeries load_series(const std::string& input, const flexid::PipelineConfig& cfg) {
    if (input.empty()) throw flexid::ConfigError("--input is required");
    auto result = input == "-" ? flexid::ingest_csv(std::cin, cfg.io.columns, cfg.io.gaps, log_malformed)
                               : flexid::ingest_csv(fs::path(input), cfg.io.columns, cfg.io.gaps, log_malformed);
    if (!result.gaps.empty() && cfg.io.gaps == flexid::GapPolicy::kReport) {
        std::size_t missing = 0;
        for (const auto& g : result.gaps) missing += g.missing;
        throw flexid::DataError(std::to_string(result.gaps.size()) + " gaps (" + std::to_string(missing) +
                                " missing samples), first after " + flexid::format_timestamp(result.gaps[0].after) +
                                "; rerun with --fill-gaps hold to fill them");
    }
    return std::move(result.series);
}

flexid::EvmModel load_model(const std::string& path) {
    if (path.empty()) throw flexid::ModelError("--model is required");
    std::string text;
    try {
        text = read_file(path);
    } catch (const flexid::DataError& e) {
        throw flexid::ModelError(e.what());
    }
    return flexid::EvmModel::deserialize(text);
}

std::vector<flexid::FeatureVector> load_features(const std::string& path) {
    if (path.empty()) throw flexid::ConfigError("--input is required");
    std::istringstream in(read_file(path));
    return flexid::read_features_csv(in);
}

flexid::GroundTruth load_truth(const std::string& path) {
    if (path.empty()) throw flexid::ConfigError("--truth is required");
    std::istringstream in(read_file(path));
    return flexid::read_truth_csv(in);
}

std::optional<flexid::Calibration> load_calibration(const std::string& path) {
    if (path.empty()) return std::nullopt;
    const auto j = ordered_json::parse(read_file(path), nullptr, false);
    if (j.is_discarded() || !j.contains("s_max") || !j.contains("length")) {
        throw flexid::DataError("malformed calibration document " + path);
    }
    flexid::Calibration cal{j["s_max"].get<double>(), j["length"].get<std::size_t>()};
    if (!cal.valid()) throw flexid::CalibrationError("calibration document has s_max <= 0");
    return cal;
}

void emit(const std::vector<flexid::PipelineRecord>& records) {
    for (const auto& r : records) std::cout << flexid::to_json_line(r) << '\n';
}

// --- subcommands -----------------------------------------------------------

int cmd_simulate(const Options& o) {
    const auto cfg = effective_config(o);
    const fs::path dir = o.out_dir.empty() ? fs::path("flexid-sim") : fs::path(o.out_dir);
    const auto scenario = flexid::generate(cfg.scenario);
    const auto dataset = flexid::build_classifier_dataset(scenario.faulted, scenario.truth, cfg.dataset);
    {
        auto out = open_out(dir / "series.csv");
        flexid::write_csv(out, scenario.series);
    }
    {
        auto out = open_out(dir / "faulted.csv");
        flexid::write_csv(out, scenario.faulted);
    }
    {
        auto out = open_out(dir / "truth.csv");
        flexid::write_truth_csv(out, scenario.truth);
    }
    {
        auto out = open_out(dir / "train_features.csv");
        flexid::write_features_csv(out, dataset.train);
    }
    {
        auto out = open_out(dir / "test_features.csv");
        flexid::write_features_csv(out, dataset.test);
    }
    std::cerr << "flexid: wrote " << scenario.series.size() << " samples and " << scenario.truth.size()
              << " labeled events to " << dir.string() << '\n';
    return 0;
}

int cmd_calibrate(const Options& o) {
    const auto cfg = effective_config(o);
    const auto series = load_series(o.input, cfg);
    const auto detector = flexid::make_detector(cfg.detector);
    const auto encoded = flexid::delta_encode(series.values());
    const auto cal = flexid::calibrate(*detector, encoded, cfg.detector.calibration_length());
    ordered_json j;
    j["detector"] = std::string(detector->name());
    j["s_max"] = cal.s_max;
    j["length"] = cal.length;
    if (o.out_dir.empty()) {
        std::cout << j.dump(2) << '\n';
    } else {
        auto out = open_out(fs::path(o.out_dir) / "calibration.json");
        out << j.dump(2) << '\n';
    }
    return 0;
}

int cmd_train(const Options& o) {
    const auto cfg = effective_config(o);
    if (o.model_path.empty()) throw flexid::ConfigError("--model is required");
    const auto train = load_features(o.input);
    const auto report = flexid::train_evm(cfg, train);
    for (const auto& w : report.warnings) std::cerr << "flexid: warning: " << w << '\n';
    {
        auto out = open_out(o.model_path);
        out << report.model.serialize();
    }
    ordered_json j;
    j["rho"] = report.rho;
    j["fallback"] = report.fallback;
    j["extreme_vectors"] = report.model.size();
    j["cv"] = ordered_json::array();
    for (const auto& s : report.cv) j["cv"].push_back({{"rho", s.rho}, {"mean_f1", s.mean_f1}});
    j["config"] = flexid::to_text(cfg);
    if (!o.out_dir.empty()) {
        auto out = open_out(fs::path(o.out_dir) / "train_report.json");
        out << j.dump(2) << '\n';
    }
    std::cout << "rho=" << report.rho << " extreme_vectors=" << report.model.size()
              << (report.fallback ? " (fallback)" : "") << '\n';
    return 0;
}

// Streams stdin row by row; files are processed in batch mode.
int run_events(const Options& o, bool identify) {
    const auto cfg = effective_config(o);
    std::optional<flexid::EvmModel> model;
    if (identify) model = load_model(o.model_path);
    flexid::RunOptions run;
    run.model = model ? &*model : nullptr;
    run.mode = predict_mode(o.mode);
    run.calibration = load_calibration(o.calibration_path);
    if (o.input.empty()) throw flexid::ConfigError("--input is required");

    if (o.input != "-") {
        emit(flexid::run_batch(load_series(o.input, cfg), cfg, run));
        return 0;
    }
    flexid::StreamPipeline pipeline(cfg, run);
    flexid::CsvRowReader reader(std::cin, cfg.io.columns);
    std::vector<flexid::PipelineRecord> records;
    for (;;) {
        std::optional<flexid::CsvRowReader::Row> row;
        try {
            row = reader.next();
        } catch (const flexid::ParseError& e) {
            log_malformed(e);
            continue;
        }
        if (!row) break;
        records.clear();
        pipeline.push(row->timestamp, row->value, records);
        if (!records.empty()) {
            emit(records);
            std::cout.flush();
        }
    }
    if (pipeline.size() == 0) throw flexid::EmptyInput("input has no data rows");
    return 0;
}

ordered_json sweep_summary(const flexid::SweepReport& r) {
    ordered_json j;
    j["aucpr"] = r.aucpr;
    j["f1_max"] = r.f1_max;
    j["tau_opt_f1"] = r.tau_opt_f1;
    j["fad_max"] = r.fad_max;
    j["tau_opt_fad"] = r.tau_opt_fad;
    j["delay_min_at_tau_opt_fad"] = r.delay_at_opt_fad ? ordered_json(*r.delay_at_opt_fad) : ordered_json(nullptr);
    j["evaluated_points"] = r.evaluated_points;
    return j;
}

int cmd_sweep(const Options& o) {
    const auto cfg = effective_config(o);
    const auto series = load_series(o.input, cfg);
    const auto truth = load_truth(o.truth_path);
    const auto events = flexid::event_windows(truth);
    const auto taus = cfg.evaluation.tau_grid();
    const auto report = flexid::sweep(cfg, series, events, taus);
    auto summary = sweep_summary(report);
    summary["detector"] = cfg.detector.kind;
    summary["fp_penalty"] = flexid::to_string(cfg.evaluation.fad.fp_penalty);
    summary["config"] = flexid::to_text(cfg);
    if (o.out_dir.empty()) {
        flexid::write_sweep_csv(std::cout, report);
        std::cerr << summary.dump(2) << '\n';
    } else {
        const fs::path dir(o.out_dir);
        auto csv = open_out(dir / "sweep.csv");
        flexid::write_sweep_csv(csv, report);
        auto js = open_out(dir / "summary.json");
        js << summary.dump(2) << '\n';
        std::cout << "aucpr=" << report.aucpr << " f1_max=" << report.f1_max << " tau_opt_f1=" << report.tau_opt_f1
                  << " fad_max=" << report.fad_max << " tau_opt_fad=" << report.tau_opt_fad << '\n';
    }
    return 0;
}

int cmd_oscs(const Options& o) {
    const auto cfg = effective_config(o);
    const auto model = load_model(o.model_path);
    const auto test = load_features(o.input);
    const auto report = flexid::os_cs_experiment(model, test);
    std::ostringstream csv;
    csv << "openness,open_f1,closed_f1,unknown_classes,samples\n";
    for (const auto& l : report.levels) {
        std::string classes;
        for (const auto& c : l.unknown_classes) classes += (classes.empty() ? "" : "+") + c;
        csv << l.openness << ',' << l.open_f1 << ',' << l.closed_f1 << ',' << (classes.empty() ? "none" : classes)
            << ',' << l.test_samples << '\n';
    }
    if (o.out_dir.empty()) {
        std::cout << csv.str();
    } else {
        const fs::path dir(o.out_dir);
        auto out = open_out(dir / "oscs.csv");
        out << csv.str();
        ordered_json j;
        j["rho"] = report.rho;
        j["fv_rejection"] = report.fv_rejection ? ordered_json(*report.fv_rejection) : ordered_json(nullptr);
        j["config"] = flexid::to_text(cfg);
        auto js = open_out(dir / "oscs.json");
        js << j.dump(2) << '\n';
        std::cout << csv.str();
    }
    return 0;
}

int cmd_evaluate(const Options& o) {
    const auto cfg = effective_config(o);
    const auto series = load_series(o.input, cfg);
    const auto events = flexid::event_windows(load_truth(o.truth_path));
    if (o.detections_path.empty()) throw flexid::ConfigError("--detections is required");
    std::vector<std::size_t> detections;
    std::istringstream lines(read_file(o.detections_path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto j = ordered_json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw flexid::ParseError(line_no, "not a JSON object");
        if (j.value("type", "") == "detection") detections.push_back(j.at("index").get<std::size_t>());
    }
    const std::size_t first = cfg.detector.calibration_length();
    const auto outcome = flexid::label_detections(events, detections, series.size(), first);
    const auto pr = flexid::binary_f1(outcome);
    const auto fad = flexid::fad_score(outcome, events, cfg.evaluation.fad);
    ordered_json j;
    j["tp"] = outcome.tp;
    j["fn"] = outcome.fn;
    j["fp"] = outcome.fp;
    j["tn"] = outcome.tn;
    j["precision"] = pr.precision;
    j["recall"] = pr.recall;
    j["f1"] = pr.f1;
    j["fad"] = fad.fad;
    j["fad_norm"] = fad.fad_norm;
    j["delay_min"] = outcome.tp > 0 ? ordered_json(flexid::detection_delay(outcome, events, series.step()))
                                    : ordered_json(nullptr);
    j["fp_penalty"] = flexid::to_string(cfg.evaluation.fad.fp_penalty);
    j["config"] = flexid::to_text(cfg);
    std::cout << j.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flexid: flexibility activation detection and identification"};
    app.fallthrough();
    app.require_subcommand(0, 1);
    Options o;
    app.add_option("--config", o.config_path, "Configuration file")->check(CLI::ExistingFile);
    app.add_flag("--print-config", o.print_config, "Print the effective configuration and exit");
    app.add_option("--seed", o.seed, "Override the scenario seed");
    app.add_option("--fp-penalty", o.fp_penalty, "FAD false-positive penalty: marginal or literal");
    app.add_option("--fill-gaps", o.fill_gaps, "Gap handling: report (fail) or hold");

    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic scenario and classifier datasets");
    simulate->add_option("--out", o.out_dir, "Output directory");

    auto* calibrate = app.add_subcommand("calibrate", "Fit the score normalization on the calibration prefix");
    calibrate->add_option("--input", o.input, "Load CSV or - for stdin");
    calibrate->add_option("--out", o.out_dir, "Write calibration.json here instead of stdout");

    auto* train = app.add_subcommand("train", "Train the EVM classifier with cross-validated threshold");
    train->add_option("--input", o.input, "Training features CSV");
    train->add_option("--model", o.model_path, "Model output path");
    train->add_option("--out", o.out_dir, "Directory for train_report.json");

    auto* detect = app.add_subcommand("detect", "Emit detections as JSON lines");
    auto* identify = app.add_subcommand("identify", "Detect, sample and classify events as JSON lines");
    for (auto* sub : {detect, identify}) {
        sub->add_option("--input", o.input, "Load CSV, or - to stream from stdin");
        sub->add_option("--calibration", o.calibration_path, "Calibration document from `calibrate`");
    }
    identify->add_option("--model", o.model_path, "Trained model");
    identify->add_option("--mode", o.mode, "open or closed");

    auto* sweep = app.add_subcommand("sweep", "Threshold sweep against ground truth");
    sweep->add_option("--input", o.input, "Load CSV");
    sweep->add_option("--truth", o.truth_path, "Ground truth CSV");
    sweep->add_option("--out", o.out_dir, "Directory for sweep.csv and summary.json");

    auto* oscs = app.add_subcommand("oscs", "Open-set vs closed-set comparison over the openness ladder");
    oscs->add_option("--input", o.input, "Test features CSV");
    oscs->add_option("--model", o.model_path, "Trained model");
    oscs->add_option("--out", o.out_dir, "Directory for oscs.csv and oscs.json");

    auto* evaluate = app.add_subcommand("evaluate", "Score a JSON-lines detection stream against ground truth");
    evaluate->add_option("--input", o.input, "Load CSV the detections were computed on");
    evaluate->add_option("--truth", o.truth_path, "Ground truth CSV");
    evaluate->add_option("--detections", o.detections_path, "JSON-lines detections");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (o.print_config) {
            std::cout << flexid::to_text(effective_config(o));
            return 0;
        }
        if (simulate->parsed()) return cmd_simulate(o);
        if (calibrate->parsed()) return cmd_calibrate(o);
        if (train->parsed()) return cmd_train(o);
        if (detect->parsed()) return run_events(o, false);
        if (identify->parsed()) return run_events(o, true);
        if (sweep->parsed()) return cmd_sweep(o);
        if (oscs->parsed()) return cmd_oscs(o);
        if (evaluate->parsed()) return cmd_evaluate(o);
        std::cerr << app.help();
        return kExitConfig;
    } catch (const flexid::ConfigError& e) {
        std::cerr << "flexid: configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const flexid::DataError& e) {
        std::cerr << "flexid: data error: " << e.what() << '\n';
        return kExitData;
    } catch (const flexid::ModelError& e) {
        std::cerr << "flexid: model error: " << e.what() << '\n';
        return kExitModel;
    } catch (const std::exception& e) {
        std::cerr << "flexid: " << e.what() << '\n';
        return 1;
    }
}
