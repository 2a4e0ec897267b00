#pragma once

#include <vector>

#include "curvelab/spectral.hpp"

namespace curvelab {

/// I_K(t) = (e^{Kt} - 1)/K, with I_0(t) = t; series used for |Kt| < 1e-4.
double weight_I(double K, double t);
/// I_{K,2}(t) = (e^{Kt} - Kt - 1)/K^2, with I_{0,2}(t) = t^2/2.
double weight_I2(double K, double t);
/// R_K(t) = t / I_K(t), R_0 = 1.
double weight_R(double K, double t);

/// The interpolation functions between 0 and t, evaluated on s_grid:
///   A(s)       = 1/2 int (P_{t-s} f)^2 P_s phi dm
///   B(s)       = int Gamma(P_{t-s} f) P_s phi dm
///   B_delta(s) = 1/2 int (L P_{t-s} f)^2 P_s phi dm
///   C(s)       = int Gamma_2(P_{t-s} f) P_s phi dm
/// with dA/ds = B and dB/ds = 2C exactly on finite spaces.
struct InterpolationTriple {
  double t = 0.0;
  Eigen::VectorXd s_grid;
  Eigen::VectorXd A, B, B_delta, C;
};

InterpolationTriple interpolation_functions(const SpectralDecomposition& dec,
                                            const Field& f, const Field& phi, double t,
                                            const Eigen::VectorXd& s_grid);

/// Form (ii): C >= K B + 2 nu B_delta on s_grid (phi >= 0 required).
CheckReport check_form_ii(const SpectralDecomposition& dec, double K, double N,
                          const Field& f, const Field& phi, double t,
                          const Eigen::VectorXd& s_grid, double tol);

/// Form (iii): d^2A/ds^2 >= 2K dA/ds + 4 nu B_delta, central differences on a
/// uniform s_grid (>= 5 points); the report carries the half-grid refinement ratio.
CheckReport check_form_iii(const SpectralDecomposition& dec, double K, double N,
                           const Field& f, const Field& phi, double t,
                           const Eigen::VectorXd& s_grid, double tol);

enum class BEForm { iv, v, vi };

/// Pointwise semigroup forms at time t:
///  (iv)  I_{2K}(t) Gamma(P_t f) + 2 nu I_{2K,2}(t) (L P_t f)^2 <= 1/2 P_t(f^2) - 1/2 (P_t f)^2
///  (v)   1/2 P_t(f^2) - 1/2 (P_t f)^2 + 2 nu I_{-2K,2}(t) (L P_t f)^2 <= I_{-2K}(t) P_t Gamma(f)
///  (vi)  Gamma(P_t f) + 2 nu I_{-2K}(t) (L P_t f)^2 <= e^{-2Kt} P_t Gamma(f)
CheckReport check_form_iv_v_vi(const SpectralDecomposition& dec, double K, double N,
                               const Field& f, double t, BEForm variant, double tol);

struct GradientBoundEstimate {
  double K_hat = 0.0;
  int field_index = -1;
  double t = 0.0;
  int state = -1;
  int excluded_points = 0; ///< samples under the division floor
};

/// Inverts the gradient bound Gamma(P_t f) <= e^{-2Kt} P_t Gamma(f):
/// K_hat = inf over (f, t, x) of -log(Gamma(P_t f)(x) / P_t Gamma(f)(x)) / (2t).
GradientBoundEstimate estimate_K_from_gradient_bound(const SpectralDecomposition& dec,
                                                     const std::vector<Field>& battery,
                                                     const std::vector<double>& t_grid,
                                                     double floor = 1e-14);

/// Discrete verification of the comparison inequality
///   e^{-2K(s2-s1)} a'(s2) >= a'(s1) + nu int_{s1}^{s2} e^{-2K(s-s1)} g ds
/// for all grid pairs s1 < s2 (central differences + trapezoid rule).
CheckReport check_ode_comparison(const Eigen::VectorXd& a_samples,
                                 const Eigen::VectorXd& g_samples, double K, double nu,
                                 const Eigen::VectorXd& s_grid, double tol);

} // namespace curvelab
