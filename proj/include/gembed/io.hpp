#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gembed/errors.hpp"
#include "gembed/linalg.hpp"
#include "gembed/model.hpp"

namespace gembed {

/// Shortest representation that round-trips a double (17 significant digits).
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Dataset file: header line "p m", then p rows of m whitespace-separated
/// values. Lossless round-trip at 17 significant digits.
inline void save_dataset(const std::string& path, const Matrix& x) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset: " + path);
  out << x.rows() << ' ' << x.cols() << '\n';
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (j) out << ' ';
      out << format_double(x(i, j));
    }
    out << '\n';
  }
  if (!out) throw IoError("short write: " + path);
}

inline Matrix load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset: " + path);
  long p = 0, m = 0;
  if (!(in >> p >> m) || p < 1 || m < 1) throw IoError("bad dataset header: " + path);
  Matrix x(p, m);
  for (long i = 0; i < p; ++i)
    for (long j = 0; j < m; ++j)
      if (!(in >> x(i, j))) throw IoError("truncated dataset: " + path);
  return x;
}

/// Generic matrix file: "rows cols" header then row-major values.
inline void save_matrix(const std::string& path, const Matrix& m) { save_dataset(path, m); }
inline Matrix load_matrix(const std::string& path) { return load_dataset(path); }

/// Model file layout:
///   line 1: "gembed-model 1"            (format tag + version)
///   line 2: "p r"
///   line 3: sigma spec -- one of
///           "identity"
///           "shared_toeplitz <rho> <scale>"
///           "pernode_toeplitz <m>" followed by m lines "rho_j scale_j"
///           "shared_matrix" followed by p lines of p values
///   then:   V* values in column-major order, one column per line.
inline void save_model(const std::string& path, const EmbeddingModel& model) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write model: " + path);
  out << "gembed-model 1\n" << model.p << ' ' << model.r << '\n';
  switch (model.sigmas.kind()) {
    case SigmaKind::Identity:
      out << "identity\n";
      break;
    case SigmaKind::SharedToeplitz:
      out << "shared_toeplitz " << format_double(model.sigmas.toeplitz_rho(0)) << ' '
          << format_double(model.sigmas.toeplitz_scale(0)) << '\n';
      break;
    case SigmaKind::PerNodeToeplitz: {
      const int n = model.sigmas.node_count();
      out << "pernode_toeplitz " << n << '\n';
      for (int j = 0; j < n; ++j)
        out << format_double(model.sigmas.toeplitz_rho(j)) << ' '
            << format_double(model.sigmas.toeplitz_scale(j)) << '\n';
      break;
    }
    case SigmaKind::SharedMatrix: {
      out << "shared_matrix\n";
      const Matrix s = model.sigmas.matrix(0, model.p);
      for (int i = 0; i < model.p; ++i) {
        for (int l = 0; l < model.p; ++l) {
          if (l) out << ' ';
          out << format_double(s(i, l));
        }
        out << '\n';
      }
      break;
    }
    case SigmaKind::PerNodeMatrix:
      throw IoError("save_model: per-node matrix sigma spec is not serializable");
  }
  for (int c = 0; c < model.r; ++c) {
    for (int i = 0; i < model.p; ++i) {
      if (i) out << ' ';
      out << format_double(model.v_star(i, c));
    }
    out << '\n';
  }
  if (!out) throw IoError("short write: " + path);
}

inline EmbeddingModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model: " + path);
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "gembed-model" || version != 1)
    throw IoError("bad model header: " + path);
  EmbeddingModel model;
  if (!(in >> model.p >> model.r) || model.p < 1 || model.r < 1 || model.r > model.p)
    throw IoError("bad model dimensions: " + path);
  std::string kind;
  if (!(in >> kind)) throw IoError("missing sigma spec: " + path);
  if (kind == "identity") {
    model.sigmas = SigmaSpec::identity();
  } else if (kind == "shared_toeplitz") {
    double rho, scale;
    if (!(in >> rho >> scale)) throw IoError("bad shared_toeplitz spec: " + path);
    model.sigmas = SigmaSpec::shared_toeplitz(rho, scale);
  } else if (kind == "pernode_toeplitz") {
    int n = 0;
    if (!(in >> n) || n < 1) throw IoError("bad pernode_toeplitz count: " + path);
    std::vector<double> rho(n), scale(n);
    for (int j = 0; j < n; ++j)
      if (!(in >> rho[j] >> scale[j])) throw IoError("truncated pernode_toeplitz: " + path);
    model.sigmas = SigmaSpec::per_node_toeplitz(std::move(rho), std::move(scale));
  } else if (kind == "shared_matrix") {
    Matrix s(model.p, model.p);
    for (int i = 0; i < model.p; ++i)
      for (int l = 0; l < model.p; ++l)
        if (!(in >> s(i, l))) throw IoError("truncated shared_matrix: " + path);
    model.sigmas = SigmaSpec::shared(s);
  } else {
    throw IoError("unknown sigma spec '" + kind + "': " + path);
  }
  model.v_star.resize(model.p, model.r);
  for (int c = 0; c < model.r; ++c)
    for (int i = 0; i < model.p; ++i)
      if (!(in >> model.v_star(i, c))) throw IoError("truncated model factor: " + path);
  model.m_star = model.v_star * model.v_star.transpose();
  return model;
}

/// RFC-4180-style CSV cell: quote when the value contains a comma, quote,
/// or newline.
inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace gembed
