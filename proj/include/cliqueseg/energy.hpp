#pragma once

// Edge energy: a single-hidden-layer perceptron with leaky ReLU mapping an
// edge feature vector to an unnormalized scalar energy.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cliqueseg/core.hpp"
#include "cliqueseg/features.hpp"

namespace cliqueseg {

struct EnergyModel {
  static constexpr int kVersion = 1;

  std::size_t input_dim = 0;
  std::size_t hidden = 0;
  double alpha = 0.01;
  std::vector<double> w1;  // hidden x input_dim, row-major
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // hidden
  double b2 = 0.0;
  std::uint64_t spec_fingerprint = 0;

  static EnergyModel zeros(std::size_t input_dim, std::size_t hidden, double alpha = 0.01) {
    if (hidden == 0) throw usage_error("hidden size must be at least 1");
    EnergyModel m;
    m.input_dim = input_dim;
    m.hidden = hidden;
    m.alpha = alpha;
    m.w1.assign(hidden * input_dim, 0.0);
    m.b1.assign(hidden, 0.0);
    m.w2.assign(hidden, 0.0);
    return m;
  }

  /// Uniform in +-sqrt(6 / (fan_in + fan_out)) per layer, zero biases.
  static EnergyModel initialized(std::size_t input_dim, std::size_t hidden, double alpha, std::uint64_t seed) {
    EnergyModel m = zeros(input_dim, hidden, alpha);
    std::mt19937_64 rng(seed);
    const double r1 = std::sqrt(6.0 / static_cast<double>(input_dim + hidden));
    for (auto& w : m.w1) w = uniform_real(rng, -r1, r1);
    const double r2 = std::sqrt(6.0 / static_cast<double>(hidden + 1));
    for (auto& w : m.w2) w = uniform_real(rng, -r2, r2);
    return m;
  }

  bool finite() const {
    auto ok = [](const std::vector<double>& v) {
      for (double x : v)
        if (!std::isfinite(x)) return false;
      return true;
    };
    return ok(w1) && ok(b1) && ok(w2) && std::isfinite(b2) && std::isfinite(alpha);
  }
};

inline double leaky_relu(double z, double alpha) { return z >= 0 ? z : alpha * z; }
/// Subgradient; the positive branch is taken at 0.
inline double leaky_relu_slope(double z, double alpha) { return z >= 0 ? 1.0 : alpha; }

inline double edge_energy(const EnergyModel& m, std::span<const double> x) {
  if (x.size() != m.input_dim)
    throw data_error("edge vector has dimension " + std::to_string(x.size()) + ", model expects " +
                     std::to_string(m.input_dim));
  double e = m.b2;
  for (std::size_t h = 0; h < m.hidden; ++h) {
    const double* row = m.w1.data() + h * m.input_dim;
    double z = m.b1[h];
    for (std::size_t k = 0; k < m.input_dim; ++k) z += row[k] * x[k];
    e += m.w2[h] * leaky_relu(z, m.alpha);
  }
  return e;
}

/// Sum of edge energies over the directed edges of a structure.
inline double structure_energy(const EnergyModel& m, const std::vector<EdgeVector>& edges) {
  double s = 0.0;
  for (const auto& x : edges) s += edge_energy(m, x);
  return s;
}

/// Parameter-shaped accumulator.
struct EnergyGradient {
  std::vector<double> w1, b1, w2;
  double b2 = 0.0;

  explicit EnergyGradient(const EnergyModel& m)
      : w1(m.w1.size(), 0.0), b1(m.b1.size(), 0.0), w2(m.w2.size(), 0.0) {}

  bool is_zero() const {
    auto z = [](const std::vector<double>& v) {
      for (double x : v)
        if (x != 0.0) return false;
      return true;
    };
    return b2 == 0.0 && z(w1) && z(b1) && z(w2);
  }
};

/// Adds the gradient of multiplier * edge_energy(m, x) to `acc`.
inline void energy_gradient(const EnergyModel& m, std::span<const double> x, double multiplier, EnergyGradient& acc) {
  if (x.size() != m.input_dim) throw data_error("edge vector dimension mismatch in gradient");
  acc.b2 += multiplier;
  for (std::size_t h = 0; h < m.hidden; ++h) {
    const double* row = m.w1.data() + h * m.input_dim;
    double z = m.b1[h];
    for (std::size_t k = 0; k < m.input_dim; ++k) z += row[k] * x[k];
    acc.w2[h] += multiplier * leaky_relu(z, m.alpha);
    const double delta = multiplier * m.w2[h] * leaky_relu_slope(z, m.alpha);
    acc.b1[h] += delta;
    double* grow = acc.w1.data() + h * m.input_dim;
    for (std::size_t k = 0; k < m.input_dim; ++k) grow[k] += delta * x[k];
  }
}

/// Plain SGD step: params -= lr * grad.
inline void apply_gradient(EnergyModel& m, const EnergyGradient& g, double lr) {
  for (std::size_t i = 0; i < m.w1.size(); ++i) m.w1[i] -= lr * g.w1[i];
  for (std::size_t i = 0; i < m.b1.size(); ++i) m.b1[i] -= lr * g.b1[i];
  for (std::size_t i = 0; i < m.w2.size(); ++i) m.w2[i] -= lr * g.w2[i];
  m.b2 -= lr * g.b2;
}

// ---------------------------------------------------------------------------
// Node-decomposed evaluation. Since x(u -> v) = out[u] + in[v], the hidden
// pre-activation of an edge is W1 out[u] + W1 in[v] + b1.

class ProjectedEnergies {
 public:
  ProjectedEnergies(const EnergyModel& m, const NodeFeatureParts& parts) : model_(&m), parts_(&parts) {
    if (parts.dim != m.input_dim)
      throw data_error("feature dimension " + std::to_string(parts.dim) + " does not match model input " +
                       std::to_string(m.input_dim));
    const std::size_t H = m.hidden, K = m.input_dim, N = parts.num_nodes;
    src_.assign(N * H, 0.0);
    dst_.assign(N * H, 0.0);
    for (std::size_t u = 0; u < N; ++u) {
      const double* xo = parts.out.data() + u * K;
      const double* xi = parts.in.data() + u * K;
      for (std::size_t h = 0; h < H; ++h) {
        const double* row = m.w1.data() + h * K;
        double so = 0.0, si = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          so += row[k] * xo[k];
          si += row[k] * xi[k];
        }
        src_[u * H + h] = so;
        dst_[u * H + h] = si + m.b1[h];
      }
    }
  }

  double energy(std::size_t u, std::size_t v) const {
    const auto& m = *model_;
    const std::size_t H = m.hidden;
    double e = m.b2;
    for (std::size_t h = 0; h < H; ++h) e += m.w2[h] * leaky_relu(src_[u * H + h] + dst_[v * H + h], m.alpha);
    return e;
  }

  /// Accumulates multiplier * d energy(u, v) / d params into per-node
  /// coefficients; call flush() to turn them into a parameter gradient.
  void accumulate(std::size_t u, std::size_t v, double multiplier, EnergyGradient& acc) {
    const auto& m = *model_;
    const std::size_t H = m.hidden;
    if (coef_out_.empty()) {
      coef_out_.assign(parts_->num_nodes * H, 0.0);
      coef_in_.assign(parts_->num_nodes * H, 0.0);
    }
    acc.b2 += multiplier;
    for (std::size_t h = 0; h < H; ++h) {
      const double z = src_[u * H + h] + dst_[v * H + h];
      acc.w2[h] += multiplier * leaky_relu(z, m.alpha);
      const double delta = multiplier * m.w2[h] * leaky_relu_slope(z, m.alpha);
      acc.b1[h] += delta;
      coef_out_[u * H + h] += delta;
      coef_in_[v * H + h] += delta;
    }
  }

  void flush(EnergyGradient& acc) {
    if (coef_out_.empty()) return;
    const auto& m = *model_;
    const std::size_t H = m.hidden, K = m.input_dim;
    for (std::size_t u = 0; u < parts_->num_nodes; ++u) {
      const double* xo = parts_->out.data() + u * K;
      const double* xi = parts_->in.data() + u * K;
      for (std::size_t h = 0; h < H; ++h) {
        const double co = coef_out_[u * H + h];
        const double ci = coef_in_[u * H + h];
        if (co == 0.0 && ci == 0.0) continue;
        double* grow = acc.w1.data() + h * K;
        for (std::size_t k = 0; k < K; ++k) grow[k] += co * xo[k] + ci * xi[k];
      }
    }
    coef_out_.clear();
    coef_in_.clear();
  }

 private:
  const EnergyModel* model_;
  const NodeFeatureParts* parts_;
  std::vector<double> src_, dst_;
  std::vector<double> coef_out_, coef_in_;
};

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json model_to_json(const EnergyModel& m) {
  return {{"format", "cliqueseg-model"},
          {"version", EnergyModel::kVersion},
          {"input_dim", m.input_dim},
          {"hidden", m.hidden},
          {"alpha", m.alpha},
          {"feature_spec_fingerprint", hex64(m.spec_fingerprint)},
          {"w1", m.w1},
          {"b1", m.b1},
          {"w2", m.w2},
          {"b2", m.b2}};
}

/// Rejects other formats, other versions, inconsistent shapes, and (when
/// `expected_fingerprint` is given) models bound to a different feature spec.
inline EnergyModel model_from_json(const nlohmann::json& j, std::optional<std::uint64_t> expected_fingerprint = {}) {
  try {
    if (j.at("format").get<std::string>() != "cliqueseg-model") throw data_error("not a model file");
    if (j.at("version").get<int>() != EnergyModel::kVersion)
      throw data_error("unsupported model version " + std::to_string(j.at("version").get<int>()));
    EnergyModel m;
    m.input_dim = j.at("input_dim").get<std::size_t>();
    m.hidden = j.at("hidden").get<std::size_t>();
    m.alpha = j.at("alpha").get<double>();
    m.spec_fingerprint = parse_hex64(j.at("feature_spec_fingerprint").get<std::string>());
    m.w1 = j.at("w1").get<std::vector<double>>();
    m.b1 = j.at("b1").get<std::vector<double>>();
    m.w2 = j.at("w2").get<std::vector<double>>();
    m.b2 = j.at("b2").get<double>();
    if (m.hidden == 0 || m.w1.size() != m.hidden * m.input_dim || m.b1.size() != m.hidden || m.w2.size() != m.hidden)
      throw data_error("model parameter shapes are inconsistent");
    if (!m.finite()) throw numeric_error("model contains non-finite parameters");
    if (expected_fingerprint && *expected_fingerprint != m.spec_fingerprint)
      throw data_error("model was trained against feature spec " + hex64(m.spec_fingerprint) + ", but spec " +
                       hex64(*expected_fingerprint) + " is in use");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("malformed model file: ") + e.what());
  }
}

inline void save_model(const EnergyModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write model file '" + path + "'");
  out << model_to_json(m).dump() << '\n';
}

inline EnergyModel load_model(const std::string& path, std::optional<std::uint64_t> expected_fingerprint = {}) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open model file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw data_error("model file '" + path + "' is not valid JSON: " + e.what());
  }
  return model_from_json(j, expected_fingerprint);
}

}  // namespace cliqueseg
