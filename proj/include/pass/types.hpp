#pragma once

// Core domain types for the pinching-antenna tradeoff simulator:
// physical constants, system parameters, PA layouts, user sets and the
// error taxonomy shared by all solvers.

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace pass {

using cxd = std::complex<double>;

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s
inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Smallest transmit power considered by power searches; the weighted
// objective has a log singularity at P = 0.
inline constexpr double kPowerFloor = 1e-12;  // W

enum class ErrorCode {
  LayoutInvalid,
  RegionTooSmall,
  KCapExceeded,
  BracketFailure,
  RankDeficient,
  EmptyFeasibleRange,
  Infeasible,
  NumericalStall,
  ConfigInvalid,
  NoZeroInRange,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Physical and power constants of one scenario. Powers are stored in
/// watts; dBm conversion happens at the CLI boundary only.
struct SystemParams {
  double carrier_frequency = 28e9;  // f_c, Hz
  double n_eff = 1.4;               // waveguide effective refractive index
  double noise_power = 1e-12;       // sigma^2, W (-90 dBm)
  double fixed_power = 0.1;         // P_f, W
  double rate_power = 0.1;          // chi, W per bit/s/Hz
  double budget = 1.0;              // P_T, W (30 dBm)
  double sinr_threshold = 3.9810717055349722;  // gamma_th, linear (6 dB)
  double min_spacing = 0.0;         // Delta_min, m; 0 means lambda/2
  double region_x = 10.0;           // D_x, m
  double region_y = 10.0;           // D_y, m
  double height = 3.0;              // h, m
  int num_waveguides = 4;           // M
  int pas_per_waveguide = 3;        // N
  double beta = 0.5;                // SE weight in [0,1]

  // Optional per-user overrides; empty means the scalar value applies to
  // every user.
  Eigen::VectorXd noise_power_user;
  Eigen::VectorXd sinr_threshold_user;

  // Derived quantities, filled by finalize().
  double wavelength = 0.0;         // lambda = c / f_c
  double guided_wavelength = 0.0;  // lambda_g = lambda / n_eff
  double eta = 0.0;                // c^2 / (16 pi^2 f_c^2)

  SystemParams& finalize() {
    if (carrier_frequency <= 0 || n_eff <= 0) fail(ErrorCode::ConfigInvalid, "carrier frequency and n_eff must be positive");
    wavelength = kSpeedOfLight / carrier_frequency;
    guided_wavelength = wavelength / n_eff;
    eta = kSpeedOfLight * kSpeedOfLight /
          (16.0 * kPi * kPi * carrier_frequency * carrier_frequency);
    if (min_spacing == 0.0) min_spacing = wavelength / 2.0;
    validate();
    return *this;
  }

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0)) fail(ErrorCode::ConfigInvalid, std::string(name) + " must be strictly positive");
    };
    positive(noise_power, "noise power");
    positive(fixed_power, "fixed circuit power");
    positive(budget, "power budget");
    positive(min_spacing, "minimum PA spacing");
    positive(region_x, "region extent D_x");
    positive(region_y, "region extent D_y");
    positive(height, "waveguide height");
    positive(sinr_threshold, "SINR threshold");
    if (rate_power < 0) fail(ErrorCode::ConfigInvalid, "rate power coefficient must be nonnegative");
    if (beta < 0 || beta > 1) fail(ErrorCode::ConfigInvalid, "beta must lie in [0,1]");
    if (num_waveguides < 1 || pas_per_waveguide < 1)
      fail(ErrorCode::ConfigInvalid, "need at least one waveguide and one PA per waveguide");
    for (int k = 0; k < noise_power_user.size(); ++k)
      if (!(noise_power_user[k] > 0)) fail(ErrorCode::ConfigInvalid, "per-user noise power must be positive");
  }

  double noise_of(int k) const {
    return (k < noise_power_user.size()) ? noise_power_user[k] : noise_power;
  }
  double sinr_threshold_of(int k) const {
    return (k < sinr_threshold_user.size()) ? sinr_threshold_user[k] : sinr_threshold;
  }
};

/// Waveguide y coordinates: M lines spread across [0, D_y], a single
/// waveguide sits on the midline.
inline Eigen::VectorXd waveguide_positions(const SystemParams& p) {
  Eigen::VectorXd y(p.num_waveguides);
  if (p.num_waveguides == 1) {
    y[0] = p.region_y / 2.0;
  } else {
    const double dy = p.region_y / (p.num_waveguides - 1);
    for (int m = 0; m < p.num_waveguides; ++m) y[m] = m * dy;
  }
  return y;
}

struct UserPos {
  double x = 0.0;
  double y = 0.0;
};

struct UserSet {
  std::vector<UserPos> positions;

  int count() const { return static_cast<int>(positions.size()); }

  void validate(const SystemParams& p) const {
    if (positions.empty()) fail(ErrorCode::ConfigInvalid, "user set is empty");
    for (const auto& u : positions) {
      if (u.x < -1e-9 || u.x > p.region_x + 1e-9 || u.y < -1e-9 || u.y > p.region_y + 1e-9)
        fail(ErrorCode::ConfigInvalid, "user outside the service rectangle");
    }
  }
};

/// PA x-coordinates, one column per waveguide, rows sorted ascending.
/// Construction sorts the columns and enforces the bounds and minimum
/// spacing constraints.
class PinchLayout {
 public:
  PinchLayout(Eigen::MatrixXd x_coords, Eigen::VectorXd waveguide_y,
              double height, double region_x, double min_spacing)
      : x_(std::move(x_coords)),
        y_(std::move(waveguide_y)),
        height_(height),
        region_x_(region_x),
        min_spacing_(min_spacing) {
    if (x_.cols() != y_.size())
      fail(ErrorCode::LayoutInvalid, "column count must match waveguide count");
    for (int m = 0; m < x_.cols(); ++m)
      std::sort(x_.col(m).data(), x_.col(m).data() + x_.rows());
    validate();
  }

  int num_waveguides() const { return static_cast<int>(x_.cols()); }
  int pas_per_waveguide() const { return static_cast<int>(x_.rows()); }
  const Eigen::MatrixXd& x() const { return x_; }
  const Eigen::VectorXd& waveguide_y() const { return y_; }
  double height() const { return height_; }
  double region_x() const { return region_x_; }
  double min_spacing() const { return min_spacing_; }
  double feed_x() const { return -region_x_ / 2.0; }

  /// PA position in 3-space.
  Eigen::Vector3d pa_position(int m, int n) const {
    return {x_(n, m), y_[m], height_};
  }
  /// Feed point of waveguide m.
  Eigen::Vector3d feed_point(int m) const { return {feed_x(), y_[m], height_}; }

  void validate() const {
    constexpr double slack = 1e-9;
    for (int m = 0; m < x_.cols(); ++m) {
      for (int n = 0; n < x_.rows(); ++n) {
        const double v = x_(n, m);
        if (v < -slack || v > region_x_ + slack)
          fail(ErrorCode::LayoutInvalid, "PA x-coordinate outside [0, D_x]");
        if (n > 0 && v - x_(n - 1, m) < min_spacing_ - slack)
          fail(ErrorCode::LayoutInvalid, "PA spacing below the coupling limit");
      }
    }
  }

 private:
  Eigen::MatrixXd x_;  // N x M
  Eigen::VectorXd y_;  // M
  double height_;
  double region_x_;
  double min_spacing_;
};

/// Multi-user diagonal power control coefficients (single-user designs
/// use a plain scalar).
struct PowerAllocation {
  Eigen::VectorXd p;  // per-user power coefficient, W
  double total(const Eigen::VectorXd& lambda_diag) const {
    return lambda_diag.dot(p);
  }
};

/// One row of a Pareto sweep.
struct TradeoffPoint {
  double se = 0.0;
  double ee = 0.0;
  double objective = 0.0;
  double beta = 0.0;
};

}  // namespace pass
