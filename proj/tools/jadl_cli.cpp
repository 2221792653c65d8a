// Command-line front end: dataset generation, learning, encoding, denoising,
// evaluation, and K/lambda sweeps. All numeric matrices are CSV with a
// dimension header; configs, manifests, and reports are JSON.
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "jadl/jadl.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace jadl;

namespace {

constexpr int kSchemaVersion = 1;

// --- json helpers -----------------------------------------------------------

json load_json(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void save_json(const fs::path& path, const json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!known.count(key))
      throw ConfigError(where + ": unknown key '" + key + "'");
}

template <typename T>
void maybe_get(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config field '") + key + "': " + e.what());
    }
  }
}

// --- synth config -----------------------------------------------------------

SynthConfig synth_config_from_json(const json& j) {
  reject_unknown_keys(
      j,
      {"signal_len", "sample_rate", "signal_count", "coeff_mean",
       "coeff_stddev", "shift_stddev_seconds", "shift_bound_seconds",
       "max_spurious_events", "event_amplitude", "event_frequency_hz",
       "event_support_seconds", "target_snr", "seed", "spike_center_seconds",
       "spike_sigma_samples", "oscillation_frequencies_hz",
       "oscillation_support_seconds", "oscillation_centers_seconds"},
      "generate config");
  SynthConfig cfg;
  maybe_get(j, "signal_len", cfg.signal_len);
  maybe_get(j, "sample_rate", cfg.sample_rate);
  maybe_get(j, "signal_count", cfg.signal_count);
  maybe_get(j, "coeff_mean", cfg.coeff_mean);
  maybe_get(j, "coeff_stddev", cfg.coeff_stddev);
  maybe_get(j, "shift_stddev_seconds", cfg.shift_stddev_s);
  maybe_get(j, "shift_bound_seconds", cfg.shift_bound_s);
  maybe_get(j, "max_spurious_events", cfg.max_spurious_events);
  maybe_get(j, "target_snr", cfg.target_snr);
  maybe_get(j, "seed", cfg.seed);
  maybe_get(j, "spike_center_seconds", cfg.spike_center_s);
  maybe_get(j, "spike_sigma_samples", cfg.spike_sigma_samples);
  maybe_get(j, "oscillation_support_seconds", cfg.osc_support_s);
  if (j.contains("event_amplitude")) {
    const auto v = j.at("event_amplitude").get<std::vector<double>>();
    if (v.size() != 2) throw ConfigError("event_amplitude needs [min, max]");
    cfg.event_amp_min = v[0];
    cfg.event_amp_max = v[1];
  }
  if (j.contains("event_frequency_hz")) {
    const auto v = j.at("event_frequency_hz").get<std::vector<double>>();
    if (v.size() != 2) throw ConfigError("event_frequency_hz needs [min, max]");
    cfg.event_freq_min = v[0];
    cfg.event_freq_max = v[1];
  }
  if (j.contains("event_support_seconds")) {
    const auto v = j.at("event_support_seconds").get<std::vector<double>>();
    if (v.size() != 2) throw ConfigError("event_support_seconds needs [min, max]");
    cfg.event_support_min_s = v[0];
    cfg.event_support_max_s = v[1];
  }
  if (j.contains("oscillation_frequencies_hz")) {
    const auto v = j.at("oscillation_frequencies_hz").get<std::vector<double>>();
    if (v.size() != 2) throw ConfigError("oscillation_frequencies_hz needs two values");
    cfg.osc_freq1_hz = v[0];
    cfg.osc_freq2_hz = v[1];
  }
  if (j.contains("oscillation_centers_seconds")) {
    const auto v = j.at("oscillation_centers_seconds").get<std::vector<double>>();
    if (v.size() != 2) throw ConfigError("oscillation_centers_seconds needs two values");
    cfg.osc_center1_s = v[0];
    cfg.osc_center2_s = v[1];
  }
  return cfg;
}

json synth_config_to_json(const SynthConfig& c) {
  return json{{"signal_len", c.signal_len},
              {"sample_rate", c.sample_rate},
              {"signal_count", c.signal_count},
              {"coeff_mean", c.coeff_mean},
              {"coeff_stddev", c.coeff_stddev},
              {"shift_stddev_seconds", c.shift_stddev_s},
              {"shift_bound_seconds", c.shift_bound_s},
              {"max_spurious_events", c.max_spurious_events},
              {"event_amplitude", {c.event_amp_min, c.event_amp_max}},
              {"event_frequency_hz", {c.event_freq_min, c.event_freq_max}},
              {"event_support_seconds", {c.event_support_min_s, c.event_support_max_s}},
              {"target_snr", c.target_snr},
              {"seed", c.seed},
              {"spike_center_seconds", c.spike_center_s},
              {"spike_sigma_samples", c.spike_sigma_samples},
              {"oscillation_frequencies_hz", {c.osc_freq1_hz, c.osc_freq2_hz}},
              {"oscillation_support_seconds", c.osc_support_s},
              {"oscillation_centers_seconds", {c.osc_center1_s, c.osc_center2_s}}};
}

// --- shared CLI options -----------------------------------------------------

struct CommonOptions {
  std::string config_path;
  std::string method = "jadl";
  int k = 3;
  double lambda = 0.001;
  double max_shift_seconds = 0.6;
  int shift_stride = 1;
  std::string shift_mode = "circular";
  int max_iters = 200;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  bool normalize_epochs = false;
  bool pca_uncentered = false;

  // which flags the user set on the command line (so they win over --config)
  std::set<std::string> given;
};

void apply_learn_config_file(CommonOptions& o) {
  if (o.config_path.empty()) return;
  const json j = load_json(o.config_path);
  reject_unknown_keys(j,
                      {"method", "k", "lambda", "max_shift_seconds",
                       "shift_stride", "shift_mode", "max_iters", "tol", "seed",
                       "normalize_epochs", "pca_uncentered"},
                      "learn config");
  const auto want = [&](const char* key) { return !o.given.count(key); };
  if (want("method")) maybe_get(j, "method", o.method);
  if (want("k")) maybe_get(j, "k", o.k);
  if (want("lambda")) maybe_get(j, "lambda", o.lambda);
  if (want("max-shift-seconds")) maybe_get(j, "max_shift_seconds", o.max_shift_seconds);
  if (want("shift-stride")) maybe_get(j, "shift_stride", o.shift_stride);
  if (want("shift-mode")) maybe_get(j, "shift_mode", o.shift_mode);
  if (want("max-iters")) maybe_get(j, "max_iters", o.max_iters);
  if (want("tol")) maybe_get(j, "tol", o.tol);
  if (want("seed")) maybe_get(j, "seed", o.seed);
  if (want("normalize-epochs")) maybe_get(j, "normalize_epochs", o.normalize_epochs);
  if (want("pca-uncentered")) maybe_get(j, "pca_uncentered", o.pca_uncentered);
}

ShiftSet shift_set_for(const CommonOptions& o, double sample_rate) {
  if (o.method == "dl") return ShiftSet::identity(ShiftMode::circular);
  return ShiftSet::from_seconds(o.max_shift_seconds, sample_rate,
                                shift_mode_from_string(o.shift_mode),
                                o.shift_stride);
}

// --- datasets ---------------------------------------------------------------

std::vector<Signal> load_signals(const fs::path& data) {
  fs::path path = data;
  if (fs::is_directory(path)) path /= "signals.csv";
  const auto csv = read_matrix_csv(path);
  if (csv.sample_rate <= 0)
    throw DataError(path.string() + ": header lacks a positive sample_rate");
  return signals_from_matrix(csv);
}

void add_file_entry(json& files, const fs::path& dir, const std::string& name) {
  files[name] = {{"path", name}, {"fnv1a64", fnv1a64_hex(read_file(dir / name))}};
}

void cmd_generate(const std::string& config_path, std::uint64_t seed,
                  bool seed_given, const fs::path& out) {
  SynthConfig cfg;
  if (!config_path.empty()) cfg = synth_config_from_json(load_json(config_path));
  if (seed_given) cfg.seed = seed;
  const auto gt = generate(cfg);

  fs::create_directories(out);
  write_matrix_csv(out / "signals.csv", signals_to_matrix(gt.noisy), cfg.sample_rate);
  write_matrix_csv(out / "truth_clean.csv", signals_to_matrix(gt.clean), cfg.sample_rate);
  write_matrix_csv(out / "truth_events.csv", signals_to_matrix(gt.with_events), cfg.sample_rate);
  write_matrix_csv(out / "truth_dictionary.csv",
                   gt.true_dictionary.atoms.transpose(), cfg.sample_rate);
  write_matrix_csv(out / "truth_coefficients.csv", gt.coefficients, cfg.sample_rate);
  write_matrix_csv(out / "truth_shifts.csv", gt.shifts.cast<double>(), cfg.sample_rate);

  json manifest{{"schema_version", kSchemaVersion},
                {"kind", "dataset"},
                {"seed", cfg.seed},
                {"config", synth_config_to_json(cfg)},
                {"measured_snr", gt.measured_snr},
                {"noise_scale", gt.noise_scale},
                {"shift_bound_samples", gt.shift_bound_samples}};
  json files;
  for (const char* name :
       {"signals.csv", "truth_clean.csv", "truth_events.csv",
        "truth_dictionary.csv", "truth_coefficients.csv", "truth_shifts.csv"})
    add_file_entry(files, out, name);
  manifest["files"] = files;
  save_json(out / "manifest.json", manifest);
  std::cout << "wrote dataset (" << cfg.signal_count << " x " << cfg.signal_len
            << ") to " << out.string() << "\n";
}

void check_schema_version(const json& j, const std::string& where) {
  if (!j.contains("schema_version") ||
      j.at("schema_version").get<int>() != kSchemaVersion)
    throw DataError(where + ": unrecognized schema version");
}

// Loads a dataset directory via its manifest, verifying checksums. The truth
// dictionary is optional (similarity is skipped without it); the noisy and
// clean signals are required.
struct TruthData {
  json manifest;
  std::vector<Signal> noisy;
  std::vector<Signal> clean;
  Dictionary dictionary;  // zero atoms when absent
};

TruthData load_truth(const fs::path& dir) {
  TruthData t;
  t.manifest = load_json(dir / "manifest.json");
  check_schema_version(t.manifest, dir.string() + "/manifest.json");
  if (!t.manifest.contains("files"))
    throw DataError(dir.string() + ": manifest lacks a files table");
  const json& files = t.manifest.at("files");
  for (const auto& [name, entry] : files.items()) {
    const std::string expect = entry.at("fnv1a64").get<std::string>();
    const std::string got = fnv1a64_hex(read_file(dir / name));
    if (got != expect)
      throw DataError(dir.string() + "/" + name + ": checksum mismatch");
  }
  t.noisy = load_signals(dir / "signals.csv");
  t.clean = load_signals(dir / "truth_clean.csv");
  if (files.contains("truth_dictionary.csv")) {
    const auto d = read_matrix_csv(dir / "truth_dictionary.csv");
    t.dictionary.atoms = d.values.transpose();
    t.dictionary.mode = ShiftMode::circular;
    t.dictionary.sample_rate = d.sample_rate;
  }
  return t;
}

// --- models -----------------------------------------------------------------

struct Model {
  json run;
  std::string method;
  Dictionary dictionary;
  ShiftSet shifts;
  double lambda = 0.0;
  PcaModel pca;
};

Model load_model(const fs::path& dir) {
  Model m;
  m.run = load_json(dir / "run.json");
  check_schema_version(m.run, dir.string() + "/run.json");
  m.method = m.run.at("method").get<std::string>();
  m.lambda = m.run.value("lambda", 0.0);
  const double fs_rate = m.run.at("sample_rate").get<double>();
  const auto d = read_matrix_csv(dir / "dictionary.csv");
  m.dictionary.atoms = d.values.transpose();
  m.dictionary.sample_rate = fs_rate;
  if (m.method == "pca") {
    m.pca.components = m.dictionary.atoms;
    m.pca.mean = read_matrix_csv(dir / "mean.csv").values.transpose();
    m.pca.variances = read_matrix_csv(dir / "variances.csv").values.transpose();
    m.pca.centered = m.run.value("centered", true);
    m.pca.sample_rate = fs_rate;
    m.dictionary.mode = ShiftMode::circular;
    m.shifts = ShiftSet::identity();
  } else {
    const auto mode = shift_mode_from_string(m.run.at("shift_mode").get<std::string>());
    m.dictionary.mode = mode;
    m.shifts = ShiftSet::symmetric(m.run.at("max_shift_samples").get<int>(), mode,
                                   m.run.at("shift_stride").get<int>());
  }
  return m;
}

std::vector<SparseCode> encode_signals(const Model& model,
                                       const std::vector<Signal>& signals,
                                       double lambda) {
  const int n = signals.front().length();
  const CorrelationEngine engine(model.dictionary, model.shifts, n);
  std::vector<SparseCode> codes(signals.size());
  parallel_for(static_cast<int>(signals.size()), [&](int j) {
    codes[j] = jitter_sparse_code(signals[j].samples, engine, lambda).code;
  });
  return codes;
}

std::vector<Signal> reconstruct_signals(const Model& model,
                                        const std::vector<SparseCode>& codes,
                                        int n, double sample_rate) {
  std::vector<Signal> out(codes.size());
  for (std::size_t j = 0; j < codes.size(); ++j) {
    out[j].sample_rate = sample_rate;
    out[j].samples = reconstruct(model.dictionary, codes[j], model.shifts, n);
  }
  return out;
}

void cmd_learn(const fs::path& data, CommonOptions o, const fs::path& out) {
  apply_learn_config_file(o);
  auto signals = load_signals(data);
  const double sample_rate = signals.front().sample_rate;

  double normalize_scale = 1.0;
  if (o.normalize_epochs) {
    double max_norm = 0.0;
    for (const auto& s : signals) max_norm = std::max(max_norm, s.samples.norm());
    if (max_norm == 0.0) throw DataError("cannot normalize all-zero epochs");
    normalize_scale = 1.0 / max_norm;
    for (auto& s : signals) s.samples *= normalize_scale;
  }

  fs::create_directories(out);
  const auto t0 = std::chrono::steady_clock::now();

  if (o.method == "pca") {
    const auto model = fit_pca(signals, !o.pca_uncentered);
    const int k = std::min(o.k, model.rank());
    if (k < o.k)
      std::cerr << "warning: requested k=" << o.k << " exceeds rank "
                << model.rank() << ", clamped\n";
    const auto dict = pca_dictionary(model, k);
    write_matrix_csv(out / "dictionary.csv", dict.atoms.transpose(), sample_rate);
    write_matrix_csv(out / "mean.csv", model.mean.transpose(), sample_rate);
    write_matrix_csv(out / "variances.csv", model.variances.transpose(), sample_rate);
    const double wall = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
    save_json(out / "run.json",
              json{{"schema_version", kSchemaVersion},
                   {"method", "pca"},
                   {"k", k},
                   {"centered", !o.pca_uncentered},
                   {"rank", model.rank()},
                   {"sample_rate", sample_rate},
                   {"signal_len", signals.front().length()},
                   {"normalize_scale", normalize_scale},
                   {"wall_time_seconds", wall}});
    std::cout << "pca model with " << k << " components written to "
              << out.string() << "\n";
    return;
  }

  if (o.method != "jadl" && o.method != "dl")
    throw ConfigError("unknown method '" + o.method + "' (jadl|dl|pca)");

  LearnConfig lc;
  lc.atom_count = o.k;
  lc.lambda = o.lambda;
  lc.shifts = shift_set_for(o, sample_rate);
  lc.max_iters = o.max_iters;
  lc.tol = o.tol;
  lc.seed = o.seed;
  const auto result = learn(signals, lc);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  write_matrix_csv(out / "dictionary.csv", result.dictionary.atoms.transpose(),
                   sample_rate);
  write_codes_csv(out / "codes.csv", result.codes, sample_rate);
  Eigen::MatrixXd obj(result.iterations_run, 5);
  for (int t = 0; t < result.iterations_run; ++t)
    obj.row(t) << t + 1, result.objective_history[t],
        result.coding_objective_history[t], result.quadratic_before_update[t],
        result.quadratic_after_update[t];
  write_matrix_csv(out / "objective.csv", obj, sample_rate);

  json reinit = json::array();
  for (const auto& [iter, atom] : result.reinitialized_atoms)
    reinit.push_back({iter, atom});
  save_json(out / "run.json",
            json{{"schema_version", kSchemaVersion},
                 {"method", o.method},
                 {"k", o.k},
                 {"lambda", o.lambda},
                 {"shift_mode", to_string(lc.shifts.mode())},
                 {"shift_stride", lc.shifts.stride()},
                 {"max_shift_samples", lc.shifts.max_shift()},
                 {"max_shift_seconds",
                  lc.shifts.max_shift() / sample_rate},
                 {"sample_rate", sample_rate},
                 {"signal_len", signals.front().length()},
                 {"seed", o.seed},
                 {"tol", o.tol},
                 {"max_iters", o.max_iters},
                 {"iterations_run", result.iterations_run},
                 {"final_objective", result.objective_history.back()},
                 {"reinitialized_atoms", reinit},
                 {"normalize_scale", normalize_scale},
                 {"wall_time_seconds", wall}});
  std::cout << o.method << " finished after " << result.iterations_run
            << " iterations, objective " << result.objective_history.back()
            << ", model written to " << out.string() << "\n";
}

void cmd_encode(const fs::path& data, const fs::path& model_dir,
                std::optional<double> lambda, const fs::path& out) {
  const auto model = load_model(model_dir);
  const auto signals = load_signals(data);
  fs::create_directories(out);
  if (model.method == "pca") {
    const int k = model.run.at("k").get<int>();
    Eigen::MatrixXd coeffs(static_cast<Eigen::Index>(signals.size()), k);
    for (std::size_t j = 0; j < signals.size(); ++j)
      coeffs.row(static_cast<Eigen::Index>(j)) =
          (model.pca.components.leftCols(k).transpose() *
           (signals[j].samples - model.pca.mean))
              .transpose();
    write_matrix_csv(out / "coefficients.csv", coeffs,
                     signals.front().sample_rate);
    std::cout << "pca coefficients written to " << out.string() << "\n";
    return;
  }
  const double lam = lambda.value_or(model.lambda);
  const auto codes = encode_signals(model, signals, lam);
  write_codes_csv(out / "codes.csv", codes, signals.front().sample_rate);
  std::cout << "codes written to " << out.string() << "\n";
}

void cmd_denoise(const fs::path& data, const fs::path& model_dir,
                 std::optional<double> lambda, const std::string& codes_path,
                 std::optional<int> k, const fs::path& out) {
  const auto model = load_model(model_dir);
  const auto signals = load_signals(data);
  const int n = signals.front().length();
  const double sample_rate = signals.front().sample_rate;
  fs::create_directories(out);

  std::vector<Signal> denoised;
  if (model.method == "pca") {
    const int use_k = k.value_or(model.run.at("k").get<int>());
    denoised.resize(signals.size());
    for (std::size_t j = 0; j < signals.size(); ++j)
      denoised[j] = pca_denoise(model.pca, signals[j], use_k);
  } else {
    std::vector<SparseCode> codes;
    if (!codes_path.empty()) {
      codes = read_codes_csv(codes_path);
      for (const auto& code : codes)
        for (const auto& e : code.entries) {
          if (e.atom < 0 || e.atom >= model.dictionary.atom_count())
            throw DataError("codes reference atom " + std::to_string(e.atom) +
                            " outside the model");
          if (!model.shifts.contains(e.shift))
            throw DataError("codes use shift " + std::to_string(e.shift) +
                            " outside the model's shift set");
        }
    } else {
      codes = encode_signals(model, signals, lambda.value_or(model.lambda));
    }
    if (codes.size() != signals.size())
      throw DataError("code count does not match the signal count");
    denoised = reconstruct_signals(model, codes, n, sample_rate);
  }
  write_matrix_csv(out / "denoised.csv", signals_to_matrix(denoised), sample_rate);
  std::cout << "denoised signals written to " << out.string() << "\n";
}

json evaluate_model(const Model& model, const TruthData& truth,
                    std::optional<double> lambda, const fs::path& out) {
  const int n = truth.noisy.front().length();
  const double sample_rate = truth.noisy.front().sample_rate;

  json report{{"schema_version", kSchemaVersion}, {"method", model.method}};
  json notices = json::array();

  std::vector<Signal> denoised;
  std::vector<SparseCode> codes;
  int k = 0;
  if (model.method == "pca") {
    k = model.run.at("k").get<int>();
    denoised.resize(truth.noisy.size());
    for (std::size_t j = 0; j < truth.noisy.size(); ++j)
      denoised[j] = pca_denoise(model.pca, truth.noisy[j], k);
  } else {
    k = model.dictionary.atom_count();
    codes = encode_signals(model, truth.noisy, lambda.value_or(model.lambda));
    denoised = reconstruct_signals(model, codes, n, sample_rate);
  }
  report["k"] = k;

  const auto err = denoise_error(denoised, truth.clean);
  report["epsilon"] = {{"value", err.epsilon}, {"excluded_signals", err.excluded}};
  std::string error_csv = "method,k,epsilon\n" + model.method + "," +
                          std::to_string(k) + "," + format_double(err.epsilon) + "\n";
  write_file_atomic(out / "error.csv", error_csv);

  if (truth.dictionary.atom_count() > 0) {
    const auto sim = similarity(model.dictionary, truth.dictionary, 0.6);
    json sj{{"rho_bar", sim.rho_bar},
            {"max_shift_seconds", 0.6},
            {"rho", sim.rho},
            {"rho_sign", sim.rho_sign},
            {"matched_recovered", sim.matched_recovered},
            {"aligning_shift", sim.best_shift}};
    report["similarity"] = sj;
    std::string sim_csv = "true_atom,matched_recovered,rho,sign,aligning_shift\n";
    for (std::size_t t = 0; t < sim.rho.size(); ++t)
      sim_csv += std::to_string(t) + "," +
                 std::to_string(sim.matched_recovered[t]) + "," +
                 format_double(sim.rho[t]) + "," +
                 format_double(sim.rho_sign[t]) + "," +
                 std::to_string(sim.best_shift[t]) + "\n";
    write_file_atomic(out / "similarity.csv", sim_csv);
  } else {
    notices.push_back("truth dictionary missing: similarity section omitted");
  }

  if (model.method != "pca") {
    const auto stats = code_stats(codes, model.dictionary.atom_count());
    report["energy"] = std::vector<double>(
        stats.energy.data(), stats.energy.data() + stats.energy.size());
    json hist = json::object();
    std::string hist_csv = "atom,shift,count\n";
    for (int a = 0; a < model.dictionary.atom_count(); ++a) {
      json per_atom = json::object();
      for (const auto& [shift, count] : stats.latency_hist[a]) {
        per_atom[std::to_string(shift)] = count;
        hist_csv += std::to_string(a) + "," + std::to_string(shift) + "," +
                    std::to_string(count) + "\n";
      }
      hist[std::to_string(a)] = per_atom;
    }
    report["latency_histograms"] = hist;
    write_file_atomic(out / "latency_hist.csv", hist_csv);

    std::string energy_csv = "atom,average_energy\n";
    for (int a = 0; a < stats.energy.size(); ++a)
      energy_csv += std::to_string(a) + "," + format_double(stats.energy[a]) + "\n";
    write_file_atomic(out / "energy.csv", energy_csv);
  }

  report["notices"] = notices;
  return report;
}

void cmd_evaluate(const fs::path& model_dir, const fs::path& truth_dir,
                  std::optional<double> lambda, const fs::path& out) {
  const auto model = load_model(model_dir);
  const auto truth = load_truth(truth_dir);
  fs::create_directories(out);
  const json report = evaluate_model(model, truth, lambda, out);
  save_json(out / "report.json", report);
  if (report.contains("similarity"))
    std::cout << "rho_bar=" << report["similarity"]["rho_bar"] << " ";
  std::cout << "epsilon=" << report["epsilon"]["value"] << ", report written to "
            << out.string() << "\n";
}

std::vector<double> parse_grid(const std::string& text, const char* what) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    const std::string field = text.substr(start, comma - start);
    if (!field.empty()) out.push_back(parse_double(field, what));
    start = comma + 1;
  }
  if (out.empty()) throw ConfigError(std::string(what) + ": empty grid");
  return out;
}

void cmd_sweep(const fs::path& truth_dir, const std::string& methods_csv,
               const std::string& k_grid_csv, const std::string& lambda_grid_csv,
               CommonOptions o, const fs::path& out) {
  apply_learn_config_file(o);
  const auto truth = load_truth(truth_dir);
  const double sample_rate = truth.noisy.front().sample_rate;

  std::vector<std::string> methods;
  {
    std::size_t start = 0;
    while (start <= methods_csv.size()) {
      auto comma = methods_csv.find(',', start);
      if (comma == std::string::npos) comma = methods_csv.size();
      const std::string m = methods_csv.substr(start, comma - start);
      if (!m.empty()) methods.push_back(m);
      start = comma + 1;
    }
  }
  std::vector<int> k_grid;
  for (double v : parse_grid(k_grid_csv, "--k-grid"))
    k_grid.push_back(static_cast<int>(v));
  const std::vector<double> lambda_grid = parse_grid(lambda_grid_csv, "--lambda-grid");

  fs::create_directories(out);
  json runs = json::array();

  // best-by-rho and best-by-epsilon tables, rows = methods, cols = k grid
  std::map<std::string, std::map<int, std::pair<double, double>>> best_rho;  // (rho, lambda)
  std::map<std::string, std::map<int, std::pair<double, double>>> best_eps;  // (eps, lambda)

  for (const auto& method : methods) {
    if (method != "jadl" && method != "dl" && method != "pca")
      throw ConfigError("unknown method in --methods: " + method);
    PcaModel pca;
    if (method == "pca") pca = fit_pca(truth.noisy, !o.pca_uncentered);
    for (int k : k_grid) {
      const auto lambdas =
          method == "pca" ? std::vector<double>{0.0} : lambda_grid;
      for (double lambda : lambdas) {
        Model model;
        model.method = method;
        if (method == "pca") {
          const int use_k = std::min(k, pca.rank());
          model.pca = pca;
          model.dictionary = pca_dictionary(pca, use_k);
          model.shifts = ShiftSet::identity();
          model.run = json{{"k", use_k}};
        } else {
          CommonOptions local = o;
          local.method = method;
          LearnConfig lc;
          lc.atom_count = k;
          lc.lambda = lambda;
          lc.shifts = shift_set_for(local, sample_rate);
          lc.max_iters = o.max_iters;
          lc.tol = o.tol;
          lc.seed = o.seed;
          const auto result = learn(truth.noisy, lc);
          model.dictionary = result.dictionary;
          model.shifts = lc.shifts;
          model.lambda = lambda;
          model.run = json{{"k", k}};
        }
        const fs::path scratch = out / ("run_" + method + "_k" + std::to_string(k) +
                                        "_l" + format_double(lambda));
        fs::create_directories(scratch);
        const json report = evaluate_model(model, truth, lambda, scratch);
        const double eps = report["epsilon"]["value"].get<double>();
        const double rho = report.contains("similarity")
                               ? report["similarity"]["rho_bar"].get<double>()
                               : 0.0;
        runs.push_back(json{{"method", method},
                            {"k", k},
                            {"lambda", lambda},
                            {"epsilon", eps},
                            {"rho_bar", rho}});
        auto& br = best_rho[method];
        if (!br.count(k) || rho > br[k].first) br[k] = {rho, lambda};
        auto& be = best_eps[method];
        if (!be.count(k) || eps < be[k].first) be[k] = {eps, lambda};
      }
    }
  }

  const auto table = [&](const auto& best, bool first_of_pair) {
    std::string csv = "method";
    for (int k : k_grid) csv += ",k=" + std::to_string(k);
    csv += "\n";
    for (const auto& method : methods) {
      csv += method;
      for (int k : k_grid) {
        const auto& cell = best.at(method).at(k);
        csv += "," + format_double(first_of_pair ? cell.first : cell.second);
      }
      csv += "\n";
    }
    return csv;
  };
  write_file_atomic(out / "table1_rho.csv", table(best_rho, true));
  write_file_atomic(out / "table1_lambda.csv", table(best_rho, false));
  write_file_atomic(out / "table2_epsilon.csv", table(best_eps, true));
  write_file_atomic(out / "table2_lambda.csv", table(best_eps, false));
  save_json(out / "sweep.json",
            json{{"schema_version", kSchemaVersion},
                 {"k_grid", k_grid},
                 {"lambda_grid", lambda_grid},
                 {"methods", methods},
                 {"runs", runs}});
  std::cout << "sweep tables written to " << out.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"jitter-adaptive dictionary learning"};
  app.require_subcommand(1);

  CommonOptions opt;
  std::string data_path, out_dir, model_dir, truth_dir, codes_path;
  std::string methods = "jadl,dl,pca", k_grid = "1,2,3,4,5,6,8,10,12";
  std::string lambda_grid = "0.001,0.005,0.01,0.05,0.1,0.2";
  std::optional<double> lambda_override;
  std::optional<int> k_override;
  std::uint64_t seed = 0;
  bool seed_given = false;

  const auto add_common = [&](CLI::App* cmd, bool learn_flags) {
    cmd->add_option("--config", opt.config_path, "JSON config file");
    cmd->add_option("--seed", opt.seed, "random seed")
        ->each([&](const std::string&) { opt.given.insert("seed"); });
    cmd->add_option("--out", out_dir, "output directory")->required();
    if (learn_flags) {
      cmd->add_option("--method", opt.method, "jadl|dl|pca")
          ->each([&](const std::string&) { opt.given.insert("method"); });
      cmd->add_option("--k", opt.k, "atom count")
          ->each([&](const std::string&) { opt.given.insert("k"); });
      cmd->add_option("--lambda", opt.lambda, "l1 regularization")
          ->each([&](const std::string&) { opt.given.insert("lambda"); });
      cmd->add_option("--max-shift-seconds", opt.max_shift_seconds,
                      "shift bound in seconds")
          ->each([&](const std::string&) { opt.given.insert("max-shift-seconds"); });
      cmd->add_option("--shift-stride", opt.shift_stride,
                      "minimal distance between shifts, in samples")
          ->each([&](const std::string&) { opt.given.insert("shift-stride"); });
      cmd->add_option("--shift-mode", opt.shift_mode, "circular|extended")
          ->each([&](const std::string&) { opt.given.insert("shift-mode"); });
      cmd->add_option("--max-iters", opt.max_iters, "iteration cap")
          ->each([&](const std::string&) { opt.given.insert("max-iters"); });
      cmd->add_option("--tol", opt.tol, "relative objective-change stop")
          ->each([&](const std::string&) { opt.given.insert("tol"); });
      cmd->add_flag("--normalize-epochs", opt.normalize_epochs,
                    "scale all epochs so the maximal l2 energy is 1")
          ->each([&](const std::string&) { opt.given.insert("normalize-epochs"); });
      cmd->add_flag("--pca-uncentered", opt.pca_uncentered,
                    "fit PCA without mean removal")
          ->each([&](const std::string&) { opt.given.insert("pca-uncentered"); });
    }
  };

  auto* generate_cmd = app.add_subcommand("generate", "generate a synthetic dataset");
  generate_cmd->add_option("--config", opt.config_path, "JSON config file");
  generate_cmd->add_option("--seed", seed, "random seed")
      ->each([&](const std::string&) { seed_given = true; });
  generate_cmd->add_option("--out", out_dir, "output directory")->required();

  auto* learn_cmd = app.add_subcommand("learn", "learn a dictionary from signals");
  learn_cmd->add_option("data", data_path, "signals.csv or dataset directory")->required();
  add_common(learn_cmd, true);

  auto* encode_cmd = app.add_subcommand("encode", "sparse-code signals over a model");
  encode_cmd->add_option("data", data_path, "signals.csv or dataset directory")->required();
  encode_cmd->add_option("--model", model_dir, "model directory")->required();
  encode_cmd->add_option("--lambda", lambda_override, "encoding lambda (default: model's)");
  encode_cmd->add_option("--out", out_dir, "output directory")->required();

  auto* denoise_cmd = app.add_subcommand("denoise", "reconstruct signals from a model");
  denoise_cmd->add_option("data", data_path, "signals.csv or dataset directory")->required();
  denoise_cmd->add_option("--model", model_dir, "model directory")->required();
  denoise_cmd->add_option("--lambda", lambda_override, "encoding lambda (default: model's)");
  denoise_cmd->add_option("--codes", codes_path, "reconstruct from existing codes.csv");
  denoise_cmd->add_option("--k", k_override, "components to keep (pca models)");
  denoise_cmd->add_option("--out", out_dir, "output directory")->required();

  auto* evaluate_cmd = app.add_subcommand("evaluate", "score a model against a dataset");
  evaluate_cmd->add_option("--model", model_dir, "model directory")->required();
  evaluate_cmd->add_option("--truth", truth_dir, "dataset directory")->required();
  evaluate_cmd->add_option("--lambda", lambda_override, "encoding lambda (default: model's)");
  evaluate_cmd->add_option("--out", out_dir, "output directory")->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "K/lambda sweep with report tables");
  sweep_cmd->add_option("truth", truth_dir, "dataset directory")->required();
  sweep_cmd->add_option("--methods", methods, "comma list of jadl,dl,pca");
  sweep_cmd->add_option("--k-grid", k_grid, "comma list of atom counts");
  sweep_cmd->add_option("--lambda-grid", lambda_grid, "comma list of lambdas");
  add_common(sweep_cmd, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (generate_cmd->parsed())
      cmd_generate(opt.config_path, seed, seed_given, out_dir);
    else if (learn_cmd->parsed())
      cmd_learn(data_path, opt, out_dir);
    else if (encode_cmd->parsed())
      cmd_encode(data_path, model_dir, lambda_override, out_dir);
    else if (denoise_cmd->parsed())
      cmd_denoise(data_path, model_dir, lambda_override, codes_path, k_override,
                  out_dir);
    else if (evaluate_cmd->parsed())
      cmd_evaluate(model_dir, truth_dir, lambda_override, out_dir);
    else if (sweep_cmd->parsed())
      cmd_sweep(truth_dir, methods, k_grid, lambda_grid, opt, out_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
