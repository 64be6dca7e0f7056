#pragma once
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "fol/config.hpp"
#include "fol/errors.hpp"
#include "fol/evaluation.hpp"
#include "fol/fem.hpp"
#include "fol/microstructure.hpp"
#include "fol/neural.hpp"
#include "fol/training.hpp"

namespace fol {

// All text formats carry 17 significant digits so doubles round-trip exactly.
inline std::string fmt_g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace detail {

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  return out;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "' for reading");
  return in;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  return fields;
}

inline double parse_double(const std::string& cell) {
  try {
    std::size_t consumed = 0;
    const double value = std::stod(cell, &consumed);
    if (consumed != cell.size()) throw std::invalid_argument(cell);
    return value;
  } catch (const std::exception&) {
    throw DataMismatchError("malformed numeric cell '" + cell + "'");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Datasets: one CSV (`id,k_0,...,k_<N-1>`) plus a sidecar JSON manifest.

struct DatasetManifest {
  std::array<int, 2> grid{11, 11};
  double k_mat = 1.0;
  double k_inc = 0.01;
  std::uint64_t seed = 0;
  SamplerConfig config;
};

struct Dataset {
  std::vector<ConductivityField> fields;
  DatasetManifest manifest;
};

inline std::string manifest_path_for(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  p.replace_extension(".json");
  return p.string();
}

inline void write_dataset(const std::string& csv_path,
                          const std::vector<ConductivityField>& fields,
                          const DatasetManifest& manifest) {
  auto out = detail::open_out(csv_path);
  const auto n = manifest.grid[0] * manifest.grid[1];
  out << "id";
  for (int i = 0; i < n; ++i) out << ",k_" << i;
  out << "\n";
  for (std::size_t s = 0; s < fields.size(); ++s) {
    out << s;
    for (int i = 0; i < n; ++i) out << ',' << fmt_g17(fields[s].values(i));
    out << "\n";
  }

  nlohmann::json j{{"grid", manifest.grid},
                   {"k_mat", manifest.k_mat},
                   {"k_inc", manifest.k_inc},
                   {"seed", manifest.seed},
                   {"config", to_json(manifest.config)}};
  detail::open_out(manifest_path_for(csv_path)) << j.dump(2) << "\n";
}

inline Dataset read_dataset(const std::string& csv_path) {
  Dataset ds;
  {
    auto in = detail::open_in(manifest_path_for(csv_path));
    nlohmann::json j;
    in >> j;
    ds.manifest.grid = j.at("grid").get<std::array<int, 2>>();
    ds.manifest.k_mat = j.at("k_mat").get<double>();
    ds.manifest.k_inc = j.at("k_inc").get<double>();
    ds.manifest.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("config")) apply_json(ds.manifest.config, j.at("config"));
  }

  auto in = detail::open_in(csv_path);
  std::string line;
  if (!std::getline(in, line)) throw DataMismatchError("dataset CSV is empty");
  const int n = ds.manifest.grid[0] * ds.manifest.grid[1];
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (static_cast<int>(cells.size()) != n + 1)
      throw DataMismatchError("dataset row has " + std::to_string(cells.size() - 1) +
                              " values, expected " + std::to_string(n));
    ConductivityField f;
    f.values.resize(n);
    f.phase_mask.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      f.values(i) = detail::parse_double(cells[static_cast<std::size_t>(i + 1)]);
      f.phase_mask[static_cast<std::size_t>(i)] = (f.values(i) == ds.manifest.k_inc);
    }
    ds.fields.push_back(std::move(f));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// FEM labels: `id,T_0,...,T_<N-1>`.

inline void write_labels(const std::string& path,
                         const std::vector<TemperatureField>& labels) {
  auto out = detail::open_out(path);
  const auto n = labels.empty() ? 0 : labels.front().size();
  out << "id";
  for (Eigen::Index i = 0; i < n; ++i) out << ",T_" << i;
  out << "\n";
  for (std::size_t s = 0; s < labels.size(); ++s) {
    out << s;
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << fmt_g17(labels[s](i));
    out << "\n";
  }
}

inline std::vector<TemperatureField> read_labels(const std::string& path,
                                                 int expected_nodes) {
  auto in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw DataMismatchError("labels CSV is empty");
  std::vector<TemperatureField> labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (static_cast<int>(cells.size()) != expected_nodes + 1)
      throw DataMismatchError("label row has " + std::to_string(cells.size() - 1) +
                              " values, expected " + std::to_string(expected_nodes));
    TemperatureField t(expected_nodes);
    for (int i = 0; i < expected_nodes; ++i)
      t(i) = detail::parse_double(cells[static_cast<std::size_t>(i + 1)]);
    labels.push_back(std::move(t));
  }
  return labels;
}

// ---------------------------------------------------------------------------
// Checkpoints: JSON, format 1.

inline void write_checkpoint(const std::string& path, const NetworkParams& params) {
  nlohmann::json j;
  j["format"] = 1;
  j["mode"] = to_string(params.arch.mode);
  j["activation"] = to_string(params.arch.activation);
  j["arch"] = {params.arch.input_size, params.arch.hidden_width,
               params.arch.hidden_layers};
  nlohmann::json subnets = nlohmann::json::array();
  for (const auto& sub : params.subnets) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : sub.layers) {
      nlohmann::json w = nlohmann::json::array();
      for (Eigen::Index r = 0; r < layer.w.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < layer.w.cols(); ++c) row.push_back(layer.w(r, c));
        w.push_back(std::move(row));
      }
      nlohmann::json b = nlohmann::json::array();
      for (Eigen::Index i = 0; i < layer.b.size(); ++i) b.push_back(layer.b(i));
      layers.push_back({{"W", std::move(w)}, {"b", std::move(b)}});
    }
    subnets.push_back({{"layers", std::move(layers)}});
  }
  j["subnets"] = std::move(subnets);
  detail::open_out(path) << j.dump() << "\n";
}

inline NetworkParams read_checkpoint(const std::string& path) {
  auto in = detail::open_in(path);
  nlohmann::json j;
  in >> j;
  if (!j.contains("format") || j.at("format").get<int>() != 1)
    throw DataMismatchError("checkpoint '" + path + "': unsupported format");

  NetworkParams params;
  params.arch.mode = parse_network_mode(j.at("mode").get<std::string>());
  params.arch.activation = parse_activation(j.at("activation").get<std::string>());
  const auto arch = j.at("arch").get<std::array<int, 3>>();
  params.arch.input_size = arch[0];
  params.arch.hidden_width = arch[1];
  params.arch.hidden_layers = arch[2];
  params.arch.validate();

  const auto expected_sizes = params.arch.layer_sizes();
  const auto& subnets = j.at("subnets");
  if (static_cast<int>(subnets.size()) != params.arch.subnet_count())
    throw DataMismatchError("checkpoint: sub-network count does not match arch");
  for (const auto& sub_json : subnets) {
    Subnet sub;
    const auto& layers = sub_json.at("layers");
    if (layers.size() + 1 != expected_sizes.size())
      throw DataMismatchError("checkpoint: layer count does not match arch");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& w_json = layers[l].at("W");
      const auto& b_json = layers[l].at("b");
      Layer layer;
      layer.w.resize(expected_sizes[l + 1], expected_sizes[l]);
      if (static_cast<int>(w_json.size()) != expected_sizes[l + 1])
        throw DataMismatchError("checkpoint: weight shape mismatch");
      for (Eigen::Index r = 0; r < layer.w.rows(); ++r) {
        const auto& row = w_json[static_cast<std::size_t>(r)];
        if (static_cast<int>(row.size()) != expected_sizes[l])
          throw DataMismatchError("checkpoint: weight shape mismatch");
        for (Eigen::Index c = 0; c < layer.w.cols(); ++c)
          layer.w(r, c) = row[static_cast<std::size_t>(c)].get<double>();
      }
      layer.b.resize(expected_sizes[l + 1]);
      if (static_cast<int>(b_json.size()) != expected_sizes[l + 1])
        throw DataMismatchError("checkpoint: bias shape mismatch");
      for (Eigen::Index i = 0; i < layer.b.size(); ++i)
        layer.b(i) = b_json[static_cast<std::size_t>(i)].get<double>();
      sub.layers.push_back(std::move(layer));
    }
    params.subnets.push_back(std::move(sub));
  }
  return params;
}

// ---------------------------------------------------------------------------
// Training history: `epoch,loss_energy,loss_dirichlet,loss_total,seconds`.

inline void write_history(const std::string& path, const TrainingHistory& history) {
  auto out = detail::open_out(path);
  out << "epoch,loss_energy,loss_dirichlet,loss_total,seconds\n";
  for (std::size_t e = 0; e < history.size(); ++e)
    out << (e + 1) << ',' << fmt_g17(history[e].loss_energy) << ','
        << fmt_g17(history[e].loss_dirichlet) << ',' << fmt_g17(history[e].loss_total)
        << ',' << fmt_g17(history[e].seconds) << "\n";
}

// ---------------------------------------------------------------------------
// Field exports: per-node CSV `x,y,T,qx,qy` and legacy-VTK structured grids.

inline void write_field_csv(const std::string& path, const Mesh& mesh,
                            const TemperatureField& t, const FluxField& flux) {
  auto out = detail::open_out(path);
  out << "x,y,T,qx,qy\n";
  for (int i = 0; i < mesh.node_count(); ++i)
    out << fmt_g17(mesh.node_coords[static_cast<std::size_t>(i)][0]) << ','
        << fmt_g17(mesh.node_coords[static_cast<std::size_t>(i)][1]) << ','
        << fmt_g17(t(i)) << ',' << fmt_g17(flux.nodal(i, 0)) << ','
        << fmt_g17(flux.nodal(i, 1)) << "\n";
}

/// Fine-grid export: T/qx/qy interpolated onto a resolution^2 point grid.
inline void write_fine_field_csv(const std::string& path, const Mesh& mesh,
                                 const TemperatureField& t, const FluxField& flux,
                                 int resolution) {
  const Eigen::VectorXd t_fine = interpolate_fine(t, mesh, resolution);
  const Eigen::VectorXd qx_fine = interpolate_fine(flux.nodal.col(0), mesh, resolution);
  const Eigen::VectorXd qy_fine = interpolate_fine(flux.nodal.col(1), mesh, resolution);
  auto out = detail::open_out(path);
  out << "x,y,T,qx,qy\n";
  for (int iy = 0; iy < resolution; ++iy)
    for (int ix = 0; ix < resolution; ++ix) {
      const auto i = static_cast<Eigen::Index>(iy) * resolution + ix;
      out << fmt_g17(mesh.lx * ix / (resolution - 1)) << ','
          << fmt_g17(mesh.ly * iy / (resolution - 1)) << ',' << fmt_g17(t_fine(i))
          << ',' << fmt_g17(qx_fine(i)) << ',' << fmt_g17(qy_fine(i)) << "\n";
    }
}

inline void write_field_vtk(const std::string& path, const Mesh& mesh,
                            const TemperatureField& t, const FluxField& flux,
                            const ConductivityField* k = nullptr) {
  auto out = detail::open_out(path);
  out << "# vtk DataFile Version 3.0\n"
      << "fol field export\n"
      << "ASCII\n"
      << "DATASET STRUCTURED_GRID\n"
      << "DIMENSIONS " << mesh.nx << ' ' << mesh.ny << " 1\n"
      << "POINTS " << mesh.node_count() << " double\n";
  for (const auto& p : mesh.node_coords)
    out << fmt_g17(p[0]) << ' ' << fmt_g17(p[1]) << " 0\n";
  out << "POINT_DATA " << mesh.node_count() << "\n"
      << "SCALARS temperature double 1\nLOOKUP_TABLE default\n";
  for (int i = 0; i < mesh.node_count(); ++i) out << fmt_g17(t(i)) << "\n";
  if (k != nullptr) {
    out << "SCALARS conductivity double 1\nLOOKUP_TABLE default\n";
    for (int i = 0; i < mesh.node_count(); ++i) out << fmt_g17(k->values(i)) << "\n";
  }
  out << "VECTORS heat_flux double\n";
  for (int i = 0; i < mesh.node_count(); ++i)
    out << fmt_g17(flux.nodal(i, 0)) << ' ' << fmt_g17(flux.nodal(i, 1)) << " 0\n";
}

// ---------------------------------------------------------------------------
// Error reports: `sample,model,rel_l2_T,rel_l2_qx,rel_l2_qy,homog_T,homog_qx,
// maxpt_T`, aggregates appended as sample = "mean"/"max"/"mean_symmetric".

inline void write_report_csv(const std::string& path, const ErrorReport& report) {
  auto out = detail::open_out(path);
  out << "sample,model,rel_l2_T,rel_l2_qx,rel_l2_qy,homog_T,homog_qx,maxpt_T\n";
  auto cell = [](const std::optional<double>& v) {
    return v ? fmt_g17(*v) : std::string("n/a");
  };
  auto write_row = [&](const SampleErrors& r) {
    out << r.sample << ',' << r.model << ',' << cell(r.rel_l2_t) << ','
        << cell(r.rel_l2_qx) << ',' << cell(r.rel_l2_qy) << ',' << cell(r.homog_t)
        << ',' << cell(r.homog_qx) << ',' << cell(r.maxpt_t) << "\n";
  };
  for (const auto& r : report.rows) write_row(r);
  for (const auto& r : report.aggregates) write_row(r);
  for (const auto& [model, value] : report.symmetric_mean_rel_l2_t)
    out << "mean_symmetric," << model << ',' << fmt_g17(value)
        << ",n/a,n/a,n/a,n/a,n/a\n";
}

// ---------------------------------------------------------------------------
// PGM (P2 ASCII / P5 binary) phase-label images.

inline GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "' for reading");

  auto next_token = [&in, &path]() {
    std::string token;
    while (true) {
      int c = in.get();
      if (c == EOF) throw ValidationError("pgm '" + path + "': truncated header");
      if (c == '#') {
        while (c != EOF && c != '\n') c = in.get();
        continue;
      }
      if (std::isspace(c)) {
        if (!token.empty()) return token;
        continue;
      }
      token.push_back(static_cast<char>(c));
    }
  };

  const std::string magic = next_token();
  if (magic != "P2" && magic != "P5")
    throw ValidationError("pgm '" + path + "': expected P2 or P5, got '" + magic + "'");
  auto parse_field = [&path](const std::string& token) {
    try {
      return std::stoi(token);
    } catch (const std::exception&) {
      throw ValidationError("pgm '" + path + "': malformed header field '" + token + "'");
    }
  };
  GrayImage img;
  img.width = parse_field(next_token());
  img.height = parse_field(next_token());
  img.maxval = parse_field(next_token());
  if (img.width < 1 || img.height < 1)
    throw ValidationError("pgm '" + path + "': bad dimensions");
  if (img.maxval < 1 || img.maxval > 255)
    throw ValidationError("pgm '" + path + "': only 8-bit images supported");

  const std::size_t count = static_cast<std::size_t>(img.width) * img.height;
  img.pixels.resize(count);
  if (magic == "P2") {
    for (std::size_t i = 0; i < count; ++i)
      img.pixels[i] = static_cast<std::uint8_t>(parse_field(next_token()));
  } else {
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(count));
    if (in.gcount() != static_cast<std::streamsize>(count))
      throw ValidationError("pgm '" + path + "': truncated pixel data");
  }
  return img;
}

}  // namespace fol
