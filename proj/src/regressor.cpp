#include "spinex/regressor.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace spinex {

using nlohmann::json;

std::array<double, 36> RegressorModel::scale(const std::array<double, 36>& f) const {
  std::array<double, 36> s{};
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double range = feat_max_[i] - feat_min_[i];
    s[i] = range > 0.0 ? 2.0 * (f[i] - feat_min_[i]) / range - 1.0 : 0.0;
  }
  return s;
}

double RegressorModel::predict(const std::array<double, 36>& features) const {
  const std::array<double, 36> f = scale(features);
  double acc = bias_;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
      const double d = f[j] - support_[i][j];
      d2 += d * d;
    }
    acc += coeffs_[i] * std::exp(-gamma_ * d2);
  }
  return std::min(100.0, std::max(0.0, acc));
}

RegressorModel RegressorModel::fit_rbf(const std::vector<std::array<double, 36>>& x,
                                       const std::vector<double>& y, double kernel_gamma,
                                       double ridge) {
  if (x.empty() || x.size() != y.size()) {
    throw std::invalid_argument("fit_rbf: empty or mismatched training data");
  }
  RegressorModel m;
  m.gamma_ = kernel_gamma;
  m.feat_min_.fill(std::numeric_limits<double>::infinity());
  m.feat_max_.fill(-std::numeric_limits<double>::infinity());
  for (const auto& row : x) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      m.feat_min_[j] = std::min(m.feat_min_[j], row[j]);
      m.feat_max_[j] = std::max(m.feat_max_[j], row[j]);
    }
  }
  m.support_.reserve(x.size());
  for (const auto& row : x) m.support_.push_back(m.scale(row));

  const int n = static_cast<int>(x.size());
  double mean_y = 0.0;
  for (const double v : y) mean_y += v;
  mean_y /= n;
  m.bias_ = mean_y;

  Eigen::MatrixXd k(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < 36; ++c) {
        const double d = m.support_[i][c] - m.support_[j][c];
        d2 += d * d;
      }
      k(i, j) = k(j, i) = std::exp(-kernel_gamma * d2);
    }
  }
  k.diagonal().array() += ridge;
  Eigen::VectorXd target(n);
  for (int i = 0; i < n; ++i) target(i) = y[i] - mean_y;
  const Eigen::VectorXd alpha = k.ldlt().solve(target);
  m.coeffs_.assign(alpha.data(), alpha.data() + n);
  return m;
}

RegressorModel RegressorModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("regressor model not found: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("corrupt regressor model " + path + ": " + e.what());
  }
  if (!j.contains("version") || j["version"].get<int>() != 1) {
    throw std::runtime_error("unsupported regressor model version in " + path);
  }
  RegressorModel m;
  m.kernel_ = j.at("kernel").get<std::string>();
  if (m.kernel_ != "rbf") throw std::runtime_error("unsupported kernel: " + m.kernel_);
  m.gamma_ = j.at("gamma").get<double>();
  m.bias_ = j.at("bias").get<double>();
  const auto sv = j.at("support_vectors");
  const auto co = j.at("coefficients");
  if (sv.size() != co.size()) throw std::runtime_error("regressor model inconsistent: " + path);
  for (std::size_t i = 0; i < sv.size(); ++i) {
    std::array<double, 36> row{};
    if (sv[i].size() != row.size()) throw std::runtime_error("bad support vector size in " + path);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = sv[i][c].get<double>();
    m.support_.push_back(row);
    m.coeffs_.push_back(co[i].get<double>());
  }
  for (std::size_t c = 0; c < 36; ++c) {
    m.feat_min_[c] = j.at("feature_min")[c].get<double>();
    m.feat_max_[c] = j.at("feature_max")[c].get<double>();
  }
  return m;
}

void RegressorModel::save(const std::string& path) const {
  json j;
  j["version"] = 1;
  j["kernel"] = kernel_;
  j["gamma"] = gamma_;
  j["bias"] = bias_;
  j["support_vectors"] = json::array();
  for (const auto& row : support_) j["support_vectors"].push_back(row);
  j["coefficients"] = coeffs_;
  j["feature_min"] = feat_min_;
  j["feature_max"] = feat_max_;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write regressor model: " + path);
  out << j.dump(1) << "\n";
}

std::string resolve_regressor_path(const std::string& explicit_path) {
  if (!explicit_path.empty()) return explicit_path;
  if (const char* cache = std::getenv("SPINE_ENHANCE_CACHE")) {
    const std::string candidate = std::string(cache) + "/brisque_model.json";
    if (std::ifstream(candidate).good()) return candidate;
  }
  return std::string(SPINEX_DATA_DIR) + "/brisque_model.json";
}

double brisque_score(const Grid& img, const RegressorModel& model) {
  return model.predict(brisque_features(img));
}

} // namespace spinex
