// fol: command-line workbench around the finite-operator-learning library.
// Subcommands: generate, fem, train, eval, bench. Exit codes: 0 success,
// 2 usage/validation, 3 data mismatch, 4 numerical failure.
#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fol/config.hpp"
#include "fol/evaluation.hpp"
#include "fol/fem.hpp"
#include "fol/io.hpp"
#include "fol/mesh.hpp"
#include "fol/microstructure.hpp"
#include "fol/neural.hpp"
#include "fol/training.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(const Clock::time_point& start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

fol::RunConfig load_run_config(const std::string& config_path) {
  fol::RunConfig cfg;
  if (!config_path.empty()) {
    auto in = std::ifstream(config_path);
    if (!in) throw fol::ValidationError("cannot open config file '" + config_path + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw fol::ValidationError("config file '" + config_path + "': " + e.what());
    }
    fol::apply_json(cfg, j);
  }
  return cfg;
}

void apply_threads(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

fol::Mesh mesh_from_manifest(const fol::DatasetManifest& manifest,
                             const fol::RunConfig& cfg) {
  return fol::build_mesh(manifest.grid[0], manifest.grid[1], cfg.lx, cfg.ly);
}

std::string checkpoint_cadence_path(const std::string& final_path, int epoch) {
  std::filesystem::path p(final_path);
  const std::string stem = p.stem().string();
  p.replace_filename(stem + ".epoch" + std::to_string(epoch) + ".json");
  return p.string();
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  int count = 0;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string from_image;
  bool no_rings = false;
  std::string config_path;
  int threads = 0;
};

void run_generate(const GenerateArgs& args) {
  fol::RunConfig cfg = load_run_config(args.config_path);
  apply_threads(args.threads > 0 ? args.threads : cfg.threads);
  if (args.seed) cfg.sampler.seed = *args.seed;
  if (args.no_rings) cfg.sampler.no_rings = true;
  if (args.from_image.empty() && args.count < 1)
    throw fol::ValidationError("generate: need --count or --from-image");

  const fol::Mesh mesh = fol::build_mesh(cfg.nx, cfg.ny, cfg.lx, cfg.ly);
  std::vector<fol::ConductivityField> fields;
  if (!args.from_image.empty()) {
    const fol::GrayImage image = fol::read_pgm(args.from_image);
    fields.push_back(fol::downsample_image(image, mesh, cfg.sampler.k_mat,
                                           cfg.sampler.k_inc));
  } else {
    fields = fol::generate_samples(mesh, cfg.sampler, args.count);
  }

  fol::DatasetManifest manifest;
  manifest.grid = {cfg.nx, cfg.ny};
  manifest.k_mat = cfg.sampler.k_mat;
  manifest.k_inc = cfg.sampler.k_inc;
  manifest.seed = cfg.sampler.seed;
  manifest.config = cfg.sampler;
  fol::write_dataset(args.out, fields, manifest);

  double vf_min = 1.0, vf_max = 0.0;
  for (const auto& f : fields) {
    const double vf = fol::volume_fraction(f);
    vf_min = std::min(vf_min, vf);
    vf_max = std::max(vf_max, vf);
  }
  std::cout << "wrote " << fields.size() << " samples to " << args.out
            << " (volume fraction " << vf_min << " .. " << vf_max << ")\n";
}

// ---------------------------------------------------------------------------

struct FemArgs {
  std::string dataset;
  std::string out;
  std::string fields_dir;
  bool vtk = false;
  std::string config_path;
  int threads = 0;
};

void run_fem(const FemArgs& args) {
  fol::RunConfig cfg = load_run_config(args.config_path);
  apply_threads(args.threads > 0 ? args.threads : cfg.threads);
  const fol::Dataset ds = fol::read_dataset(args.dataset);
  const fol::Mesh mesh = mesh_from_manifest(ds.manifest, cfg);
  const fol::BoundaryConditions bc =
      fol::default_boundary_conditions(mesh, cfg.t_left, cfg.t_right);

  std::vector<fol::TemperatureField> labels(ds.fields.size());
  double total_seconds = 0.0;
  for (std::size_t i = 0; i < ds.fields.size(); ++i) {
    const auto start = Clock::now();
    labels[i] = fol::solve(mesh, ds.fields[i], bc);
    total_seconds += seconds_since(start);
  }
  fol::write_labels(args.out, labels);

  if (!args.fields_dir.empty()) {
    std::filesystem::create_directories(args.fields_dir);
    for (std::size_t i = 0; i < ds.fields.size(); ++i) {
      const fol::FluxField flux = fol::recover_flux(mesh, ds.fields[i], labels[i]);
      const std::string stem =
          (std::filesystem::path(args.fields_dir) / ("sample_" + std::to_string(i)))
              .string();
      fol::write_field_csv(stem + ".csv", mesh, labels[i], flux);
      if (args.vtk) fol::write_field_vtk(stem + ".vtk", mesh, labels[i], flux,
                                         &ds.fields[i]);
    }
  }
  std::cout << "solved " << ds.fields.size() << " samples -> " << args.out
            << " (mean " << (total_seconds / static_cast<double>(ds.fields.size()) * 1e3)
            << " ms per solve)\n";
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string dataset;
  std::string labels;
  std::string checkpoint_out;
  std::string history_out;
  std::string config_path;
  std::optional<std::string> mode;
  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::optional<std::string> activation;
  std::optional<std::string> arch;
  std::optional<double> lambda_b;
  std::optional<double> learning_rate;
  std::optional<std::uint64_t> seed;
  std::optional<int> checkpoint_every;
  int threads = 0;
};

void run_train(const TrainArgs& args) {
  fol::RunConfig cfg = load_run_config(args.config_path);
  apply_threads(args.threads > 0 ? args.threads : cfg.threads);
  fol::TrainingConfig& train_cfg = cfg.training;
  if (args.mode) train_cfg.mode = fol::parse_training_mode(*args.mode);
  if (args.epochs) train_cfg.epochs = *args.epochs;
  if (args.batch_size) train_cfg.batch_size = *args.batch_size;
  if (args.activation) train_cfg.activation = fol::parse_activation(*args.activation);
  if (args.arch) train_cfg.arch = fol::parse_network_mode(*args.arch);
  if (args.lambda_b) train_cfg.lambda_b = *args.lambda_b;
  if (args.learning_rate) train_cfg.adam.learning_rate = *args.learning_rate;
  if (args.seed) train_cfg.seed = *args.seed;
  if (args.checkpoint_every) train_cfg.checkpoint_every = *args.checkpoint_every;
  if (train_cfg.epochs < 1) throw fol::ValidationError("train: epochs must be >= 1");

  const fol::Dataset ds = fol::read_dataset(args.dataset);
  const fol::Mesh mesh = mesh_from_manifest(ds.manifest, cfg);
  const fol::BoundaryConditions bc =
      fol::default_boundary_conditions(mesh, cfg.t_left, cfg.t_right);
  train_cfg.batch_size =
      std::min(train_cfg.batch_size, static_cast<int>(ds.fields.size()));

  // Physics mode never touches the labels, even when the flag is given.
  std::vector<fol::TemperatureField> labels;
  const std::vector<fol::TemperatureField>* labels_ptr = nullptr;
  if (train_cfg.mode == fol::TrainingMode::kData) {
    if (args.labels.empty())
      throw fol::ValidationError("train: data mode requires --labels");
    labels = fol::read_labels(args.labels, mesh.node_count());
    if (labels.size() != ds.fields.size())
      throw fol::DataMismatchError("train: " + std::to_string(labels.size()) +
                                   " labels for " + std::to_string(ds.fields.size()) +
                                   " samples");
    labels_ptr = &labels;
  }

  fol::CheckpointHook hook = [&](int epoch, const fol::NetworkParams& params,
                                 const fol::TrainingHistory& history) {
    const std::string path = (epoch == train_cfg.epochs)
                                 ? args.checkpoint_out
                                 : checkpoint_cadence_path(args.checkpoint_out, epoch);
    fol::write_checkpoint(path, params);
    if (!history.empty())
      std::cerr << "epoch " << epoch << "/" << train_cfg.epochs << "  total "
                << history.back().loss_total << "  energy "
                << history.back().loss_energy << "  dirichlet "
                << history.back().loss_dirichlet << "  -> " << path << "\n";
  };

  const auto start = Clock::now();
  fol::TrainResult result = fol::train(ds.fields, labels_ptr, train_cfg, mesh, bc, hook);
  const double elapsed = seconds_since(start);

  if (!args.history_out.empty()) fol::write_history(args.history_out, result.history);
  std::cout << "trained " << fol::to_string(train_cfg.mode) << "/"
            << fol::to_string(train_cfg.activation) << " model on "
            << ds.fields.size() << " samples in " << elapsed << " s -> "
            << args.checkpoint_out << "\n";
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string checkpoint2;
  std::string suite = "builtin";
  std::optional<int> fine;
  std::string out;
  std::string fields_dir;
  bool vtk = false;
  std::string config_path;
  int threads = 0;
};

void run_eval(const EvalArgs& args) {
  fol::RunConfig cfg = load_run_config(args.config_path);
  apply_threads(args.threads > 0 ? args.threads : cfg.threads);
  const int fine = args.fine.value_or(cfg.fine_resolution);

  std::vector<fol::ConductivityField> suite;
  std::vector<std::string> names;
  std::vector<int> symmetric;
  fol::Mesh mesh = fol::build_mesh(cfg.nx, cfg.ny, cfg.lx, cfg.ly);
  if (args.suite == "builtin") {
    suite = fol::builtin_test_suite(mesh, cfg.sampler.k_mat, cfg.sampler.k_inc);
    names = fol::builtin_test_suite_names();
    symmetric = {4, 5, 6, 7};
  } else {
    const fol::Dataset ds = fol::read_dataset(args.suite);
    mesh = mesh_from_manifest(ds.manifest, cfg);
    suite = ds.fields;
    for (std::size_t i = 0; i < suite.size(); ++i)
      names.push_back("sample_" + std::to_string(i));
  }

  std::vector<std::pair<std::string, fol::Predictor>> models;
  std::vector<fol::NetworkParams> checkpoints;
  checkpoints.push_back(fol::read_checkpoint(args.checkpoint));
  if (!args.checkpoint2.empty())
    checkpoints.push_back(fol::read_checkpoint(args.checkpoint2));
  const std::vector<std::string> paths{args.checkpoint, args.checkpoint2};
  for (std::size_t m = 0; m < checkpoints.size(); ++m) {
    if (checkpoints[m].arch.input_size != mesh.node_count())
      throw fol::DataMismatchError("eval: checkpoint '" + paths[m] + "' expects " +
                                   std::to_string(checkpoints[m].arch.input_size) +
                                   " nodes, suite has " +
                                   std::to_string(mesh.node_count()));
    models.emplace_back(std::filesystem::path(paths[m]).stem().string(),
                        [&p = checkpoints[m]](const fol::ConductivityField& k) {
                          return fol::forward(p, k.values);
                        });
  }

  const fol::BoundaryConditions bc =
      fol::default_boundary_conditions(mesh, cfg.t_left, cfg.t_right);
  const fol::ErrorReport report =
      fol::compare_report(models, mesh, bc, suite, names, symmetric);
  fol::write_report_csv(args.out, report);

  if (!args.fields_dir.empty()) {
    std::filesystem::create_directories(args.fields_dir);
    auto export_fields = [&](const std::string& model_name,
                             const fol::Predictor& predict) {
      for (std::size_t i = 0; i < suite.size(); ++i) {
        const fol::TemperatureField t = predict(suite[i]);
        const fol::FluxField flux = fol::recover_flux(mesh, suite[i], t);
        const std::string stem =
            (std::filesystem::path(args.fields_dir) / (names[i] + "_" + model_name))
                .string();
        fol::write_fine_field_csv(stem + ".csv", mesh, t, flux, fine);
        if (args.vtk) fol::write_field_vtk(stem + ".vtk", mesh, t, flux, &suite[i]);
      }
    };
    for (const auto& [name, predict] : models) export_fields(name, predict);
    export_fields("fem", [&](const fol::ConductivityField& k) {
      return fol::solve(mesh, k, bc);
    });
  }

  for (const auto& agg : report.aggregates) {
    if (agg.sample != "mean") continue;
    std::cout << agg.model << ": mean rel L2 T "
              << (agg.rel_l2_t ? fol::fmt_g17(*agg.rel_l2_t) : "n/a") << " %, mean homog T "
              << (agg.homog_t ? fol::fmt_g17(*agg.homog_t) : "n/a") << " %\n";
  }
  for (const auto& [model, value] : report.symmetric_mean_rel_l2_t)
    std::cout << model << ": mean rel L2 T on symmetric samples " << value << " %\n";
  std::cout << "report -> " << args.out << "\n";
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  std::string checkpoint;
  std::string dataset;
  int repeats = 5;
  std::string out;
  std::string config_path;
  int threads = 0;
};

void run_bench(const BenchArgs& args) {
  fol::RunConfig cfg = load_run_config(args.config_path);
  apply_threads(args.threads > 0 ? args.threads : cfg.threads);
  const fol::Dataset ds = fol::read_dataset(args.dataset);
  const fol::Mesh mesh = mesh_from_manifest(ds.manifest, cfg);
  const fol::BoundaryConditions bc =
      fol::default_boundary_conditions(mesh, cfg.t_left, cfg.t_right);
  const fol::NetworkParams params = fol::read_checkpoint(args.checkpoint);
  if (params.arch.input_size != mesh.node_count())
    throw fol::DataMismatchError("bench: checkpoint grid does not match dataset");

  // Warm-up pass discarded, then `repeats` timed passes over the dataset.
  fol::forward(params, ds.fields[0].values);
  const auto n = static_cast<double>(ds.fields.size());
  const auto t_nn = Clock::now();
  for (int r = 0; r < args.repeats; ++r)
    for (const auto& f : ds.fields) fol::forward(params, f.values);
  const double nn_ms = seconds_since(t_nn) / (args.repeats * n) * 1e3;

  std::vector<fol::TemperatureField> labels(ds.fields.size());
  fol::solve(mesh, ds.fields[0], bc);
  const auto t_fem = Clock::now();
  for (int r = 0; r < args.repeats; ++r)
    for (std::size_t i = 0; i < ds.fields.size(); ++i)
      labels[i] = fol::solve(mesh, ds.fields[i], bc);
  const double fem_ms = seconds_since(t_fem) / (args.repeats * n) * 1e3;

  // Per-epoch training cost, one warm-up epoch discarded.
  auto epoch_seconds = [&](fol::TrainingMode mode) {
    fol::TrainingConfig tc = cfg.training;
    tc.mode = mode;
    tc.epochs = 3;
    tc.batch_size = std::min(tc.batch_size, static_cast<int>(ds.fields.size()));
    tc.checkpoint_every = 0;
    const auto result = fol::train(ds.fields,
                                   mode == fol::TrainingMode::kData ? &labels : nullptr,
                                   tc, mesh, bc);
    double total = 0.0;
    for (std::size_t e = 1; e < result.history.size(); ++e)
      total += result.history[e].seconds;
    return total / static_cast<double>(result.history.size() - 1);
  };
  const double physics_epoch_s = epoch_seconds(fol::TrainingMode::kPhysics);
  const double data_epoch_s = epoch_seconds(fol::TrainingMode::kData);

  std::cout << "metric,value\n"
            << "nn_eval_ms," << nn_ms << "\n"
            << "fem_solve_ms," << fem_ms << "\n"
            << "fem_over_nn," << fem_ms / nn_ms << "\n"
            << "physics_epoch_s," << physics_epoch_s << "\n"
            << "data_epoch_s," << data_epoch_s << "\n"
            << "physics_over_data," << physics_epoch_s / data_epoch_s << "\n";
  if (!args.out.empty()) {
    auto out = fol::detail::open_out(args.out);
    out << "metric,value\n"
        << "nn_eval_ms," << fol::fmt_g17(nn_ms) << "\n"
        << "fem_solve_ms," << fol::fmt_g17(fem_ms) << "\n"
        << "fem_over_nn," << fol::fmt_g17(fem_ms / nn_ms) << "\n"
        << "physics_epoch_s," << fol::fmt_g17(physics_epoch_s) << "\n"
        << "data_epoch_s," << fol::fmt_g17(data_epoch_s) << "\n"
        << "physics_over_data," << fol::fmt_g17(physics_epoch_s / data_epoch_s) << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite operator learning for steady-state heat conduction"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* cmd_gen = app.add_subcommand("generate", "generate a two-phase dataset");
  auto* count_opt = cmd_gen->add_option("--count", gen.count, "number of samples")
                        ->check(CLI::PositiveNumber);
  cmd_gen->add_option("--seed", gen.seed, "sampler seed");
  cmd_gen->add_option("--out", gen.out, "output dataset CSV")->required();
  cmd_gen
      ->add_option("--from-image", gen.from_image,
                   "downsample a PGM phase image instead of sampling")
      ->excludes(count_opt);
  cmd_gen->add_flag("--no-rings", gen.no_rings, "exclude ring morphologies");
  cmd_gen->add_option("--config", gen.config_path, "JSON config file");
  cmd_gen->add_option("--threads", gen.threads, "worker threads (1 = deterministic)");
  cmd_gen->callback([&] { run_generate(gen); });

  FemArgs fem;
  auto* cmd_fem = app.add_subcommand("fem", "solve every sample with the FEM oracle");
  cmd_fem->add_option("--dataset", fem.dataset, "dataset CSV")->required();
  cmd_fem->add_option("--out", fem.out, "labels CSV")->required();
  cmd_fem->add_option("--fields-dir", fem.fields_dir, "export per-sample fields here");
  cmd_fem->add_flag("--vtk", fem.vtk, "also write legacy VTK files");
  cmd_fem->add_option("--config", fem.config_path, "JSON config file");
  cmd_fem->add_option("--threads", fem.threads, "worker threads");
  cmd_fem->callback([&] { run_fem(fem); });

  TrainArgs train;
  auto* cmd_train = app.add_subcommand("train", "train a model");
  cmd_train->add_option("--mode", train.mode, "physics|data");
  cmd_train->add_option("--dataset", train.dataset, "dataset CSV")->required();
  cmd_train->add_option("--labels", train.labels, "FEM labels CSV (data mode)");
  cmd_train->add_option("--epochs", train.epochs, "training epochs")
      ->check(CLI::PositiveNumber);
  cmd_train->add_option("--batch-size", train.batch_size, "mini-batch size")
      ->check(CLI::PositiveNumber);
  cmd_train->add_option("--activation", train.activation,
                        "tanh|swish|sigmoid|linear");
  cmd_train->add_option("--arch", train.arch, "separate|monolithic");
  cmd_train->add_option("--lambda-b", train.lambda_b, "Dirichlet penalty weight");
  cmd_train->add_option("--learning-rate", train.learning_rate, "Adam step size");
  cmd_train->add_option("--seed", train.seed, "init/shuffle seed");
  cmd_train->add_option("--checkpoint-out", train.checkpoint_out, "final checkpoint")
      ->required();
  cmd_train->add_option("--history-out", train.history_out, "loss history CSV");
  cmd_train->add_option("--checkpoint-every", train.checkpoint_every,
                        "cadence for intermediate checkpoints (0 = none)");
  cmd_train->add_option("--config", train.config_path, "JSON config file");
  cmd_train->add_option("--threads", train.threads, "worker threads");
  cmd_train->callback([&] { run_train(train); });

  EvalArgs eval;
  auto* cmd_eval = app.add_subcommand("eval", "evaluate checkpoints against FEM");
  cmd_eval->add_option("--checkpoint", eval.checkpoint, "model checkpoint")->required();
  cmd_eval->add_option("--checkpoint2", eval.checkpoint2, "second model for pairing");
  cmd_eval->add_option("--suite", eval.suite, "'builtin' or a dataset CSV");
  cmd_eval->add_option("--fine", eval.fine, "fine-grid resolution for field export")
      ->check(CLI::PositiveNumber);
  cmd_eval->add_option("--out", eval.out, "report CSV")->required();
  cmd_eval->add_option("--fields-dir", eval.fields_dir, "export per-sample fields here");
  cmd_eval->add_flag("--vtk", eval.vtk, "also write legacy VTK files");
  cmd_eval->add_option("--config", eval.config_path, "JSON config file");
  cmd_eval->add_option("--threads", eval.threads, "worker threads");
  cmd_eval->callback([&] { run_eval(eval); });

  BenchArgs bench;
  auto* cmd_bench = app.add_subcommand("bench", "NN vs FEM timing comparison");
  cmd_bench->add_option("--checkpoint", bench.checkpoint, "model checkpoint")
      ->required();
  cmd_bench->add_option("--dataset", bench.dataset, "dataset CSV")->required();
  cmd_bench->add_option("--repeats", bench.repeats, "timed repetitions")
      ->check(CLI::PositiveNumber);
  cmd_bench->add_option("--out", bench.out, "timing CSV");
  cmd_bench->add_option("--config", bench.config_path, "JSON config file");
  cmd_bench->add_option("--threads", bench.threads, "worker threads");
  cmd_bench->callback([&] { run_bench(bench); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const fol::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const fol::DataMismatchError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const fol::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
