#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hypoco/error.hpp"

namespace hypoco {

using Wavevector = std::vector<int>;

/// Band-limited potential on the torus of side `torus_length`:
///   V(q) = sum_k v_k exp(i k.q 2pi/L)
/// Coefficients are stored for both k and -k; v_{-k} = conj(v_k) keeps V real.
class Potential {
 public:
  Potential() = default;

  explicit Potential(int dim, double torus_length = 2.0 * std::numbers::pi)
      : dim_(dim), torus_length_(torus_length) {
    if (dim < 1) fail(ErrorKind::config, "basis", "potential dimension must be positive");
    if (!(torus_length > 0.0)) fail(ErrorKind::config, "basis", "torus_length must be positive");
  }

  /// Sets v_k and fills v_{-k} = conj(v_k). If -k was already set explicitly it
  /// must be the conjugate, otherwise the potential would not be real-valued.
  void set(const Wavevector& k, std::complex<double> value) {
    check_wavevector(k);
    if (!std::isfinite(value.real()) || !std::isfinite(value.imag()))
      fail(ErrorKind::config, "basis", "potential coefficients must be finite");
    Wavevector minus_k(k.size());
    std::transform(k.begin(), k.end(), minus_k.begin(), [](int x) { return -x; });
    if (minus_k == k && std::abs(value.imag()) > 0.0)
      fail(ErrorKind::config, "basis", "zero-mode coefficient must be real");
    auto partner = coeffs_.find(minus_k);
    if (partner != coeffs_.end() && explicit_.count(minus_k) != 0 &&
        std::abs(partner->second - std::conj(value)) > 1e-14 * (1.0 + std::abs(value)))
      fail(ErrorKind::config, "basis", "potential coefficients are not conjugate-symmetric");
    coeffs_[k] = value;
    coeffs_[minus_k] = std::conj(value);
    explicit_[k] = true;
  }

  int dim() const noexcept { return dim_; }
  double torus_length() const noexcept { return torus_length_; }
  double wavenumber_scale() const noexcept { return 2.0 * std::numbers::pi / torus_length_; }
  const std::map<Wavevector, std::complex<double>>& coefficients() const noexcept { return coeffs_; }

  bool is_zero() const {
    return std::all_of(coeffs_.begin(), coeffs_.end(), [](const auto& kv) {
      return std::abs(kv.second) == 0.0 || std::all_of(kv.first.begin(), kv.first.end(), [](int x) { return x == 0; });
    });
  }

  /// Largest |k_i| over all modes (bandwidth per coordinate).
  int bandwidth() const {
    int b = 0;
    for (const auto& [k, v] : coeffs_) {
      if (std::abs(v) == 0.0) continue;
      for (int x : k) b = std::max(b, std::abs(x));
    }
    return b;
  }

  double value(const double* q) const {
    double acc = 0.0;
    for (const auto& [k, v] : coeffs_) acc += (v * phase(k, q)).real();
    return acc;
  }

  void gradient(const double* q, double* grad) const {
    std::fill(grad, grad + dim_, 0.0);
    const double s = wavenumber_scale();
    for (const auto& [k, v] : coeffs_) {
      const std::complex<double> t = v * phase(k, q) * std::complex<double>(0.0, 1.0);
      for (int i = 0; i < dim_; ++i) grad[i] += (t * (s * k[i])).real();
    }
  }

  Eigen::MatrixXd hessian(const double* q) const {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim_, dim_);
    const double s = wavenumber_scale();
    for (const auto& [k, v] : coeffs_) {
      const double t = (v * phase(k, q)).real();
      for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) h(i, j) -= t * s * k[i] * s * k[j];
    }
    return h;
  }

  double laplacian(const double* q) const { return hessian(q).trace(); }

  /// Separable sum_i amplitude*cos(mode*q_i), the standard test potential.
  static Potential separable_cosine(int dim, double amplitude, int mode = 1,
                                    double torus_length = 2.0 * std::numbers::pi) {
    Potential v(dim, torus_length);
    for (int i = 0; i < dim; ++i) {
      Wavevector k(dim, 0);
      k[i] = mode;
      v.add(k, 0.5 * amplitude);
    }
    return v;
  }

  /// Adds amplitude to v_k and v_{-k} (conjugate), e.g. cos(mode q) = add(k, 1/2).
  void add(const Wavevector& k, std::complex<double> value) {
    check_wavevector(k);
    Wavevector minus_k(k.size());
    std::transform(k.begin(), k.end(), minus_k.begin(), [](int x) { return -x; });
    if (minus_k == k) {
      coeffs_[k] += std::complex<double>(value.real(), 0.0);
    } else {
      coeffs_[k] += value;
      coeffs_[minus_k] += std::conj(value);
    }
    explicit_[k] = true;
  }

  /// "k1[,k2..]:re,im;..." with one entry per wavevector; missing -k partners
  /// are filled by conjugation.
  static Potential parse(const std::string& text, int dim, double torus_length = 2.0 * std::numbers::pi) {
    Potential v(dim, torus_length);
    std::stringstream entries(text);
    std::string entry;
    while (std::getline(entries, entry, ';')) {
      entry.erase(std::remove_if(entry.begin(), entry.end(), [](unsigned char c) { return std::isspace(c); }),
                  entry.end());
      if (entry.empty()) continue;
      const auto colon = entry.find(':');
      if (colon == std::string::npos)
        fail(ErrorKind::config, "config", "potential entry '" + entry + "' lacks ':'");
      const auto kpart = split_numbers(entry.substr(0, colon), entry);
      const auto vpart = split_numbers(entry.substr(colon + 1), entry);
      if (static_cast<int>(kpart.size()) != dim)
        fail(ErrorKind::config, "config", "potential entry '" + entry + "' has wrong wavevector dimension");
      if (vpart.empty() || vpart.size() > 2)
        fail(ErrorKind::config, "config", "potential entry '" + entry + "' needs re[,im]");
      Wavevector k;
      for (double x : kpart) {
        if (x != std::round(x)) fail(ErrorKind::config, "config", "wavevector components must be integers");
        k.push_back(static_cast<int>(x));
      }
      v.set(k, {vpart[0], vpart.size() == 2 ? vpart[1] : 0.0});
    }
    return v;
  }

  std::string to_string() const {
    std::ostringstream os;
    os.precision(17);
    bool first = true;
    for (const auto& [k, c] : coeffs_) {
      if (!first) os << ';';
      first = false;
      for (std::size_t i = 0; i < k.size(); ++i) os << (i ? "," : "") << k[i];
      os << ':' << c.real() << ',' << c.imag();
    }
    return os.str();
  }

 private:
  std::complex<double> phase(const Wavevector& k, const double* q) const {
    double theta = 0.0;
    for (int i = 0; i < dim_; ++i) theta += k[i] * q[i];
    theta *= wavenumber_scale();
    return {std::cos(theta), std::sin(theta)};
  }

  void check_wavevector(const Wavevector& k) const {
    if (static_cast<int>(k.size()) != dim_)
      fail(ErrorKind::config, "basis", "wavevector dimension does not match potential dimension");
  }

  static std::vector<double> split_numbers(const std::string& s, const std::string& entry) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        std::size_t used = 0;
        out.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        fail(ErrorKind::config, "config", "malformed number in potential entry '" + entry + "'");
      }
    }
    return out;
  }

  int dim_ = 1;
  double torus_length_ = 2.0 * std::numbers::pi;
  std::map<Wavevector, std::complex<double>> coeffs_;
  std::map<Wavevector, bool> explicit_;
};

}  // namespace hypoco
