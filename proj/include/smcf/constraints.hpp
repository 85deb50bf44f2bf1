#pragma once

#include <array>
#include <string>
#include <vector>

#include "smcf/schrodinger_flow.hpp"

namespace smcf {

struct ResidualNorms {
  double l2 = 0.0;
  double linf = 0.0;
  double scale = 0.0;  // L2 norm of the largest constituent term or product

  static constexpr double kScaleFloor = 1e-10;

  /// l2 / scale, or l2 when every term is at roundoff level.
  double relative() const { return scale > kScaleFloor ? l2 / scale : l2; }
};

template <typename S>
struct Residual {
  Tensor<S> field;
  ResidualNorms norms;
};

/// Ric_ab - Re(lambda_ab conj(psi) - lambda_as conj(lambda^s_b)).
Residual<double> residual_T1(const MetricState& m, const SecondForm& lambda);

/// R_{sgab} - Re(lambda_bg conj(lambda_as) - lambda_ag conj(lambda_bs)).
Residual<double> residual_T2(const MetricState& m, const SecondForm& lambda);

/// nabla^A_a lambda_bc - nabla^A_b lambda_ac at (a, b, c).
Residual<Complex> residual_T3(const MetricState& m, const SecondForm& lambda, const RealTensor& A);

/// nabla_a A_b - nabla_b A_a - Im(lambda^c_a conj(lambda_bc)).
Residual<double> residual_T4(const MetricState& m, const SecondForm& lambda, const RealTensor& A);

/// d_t A_a - d_a B - Re(lambda^c_a conj(d^A_c psi)) + Im(lambda^c_a conj(lambda_cs)) V^s at
/// points[k]; d_t A from a three-point Lagrange difference of the stored slices.
Residual<double> residual_T5(const std::vector<TrajectoryPoint>& points, std::size_t k);

/// d_t g_ab - 2 Im(psi conj(lambda_ab)) - nabla_a V_b - nabla_b V_a at points[k].
Residual<double> residual_metric_evolution(const std::vector<TrajectoryPoint>& points, std::size_t k);

/// Largest relative spectral tail over the components of lambda.
double truncation_level(const ComplexTensor& lambda);

struct ConstraintReport {
  static constexpr std::array<const char*, 6> kNames{"T1", "T2", "T3", "T4", "T5", "metric"};

  double t = 0.0;
  std::array<ResidualNorms, 6> residuals{};
  bool has_time_derivatives = false;  // T5 and metric need >= 3 slices
  double truncation = 0.0;

  /// CSV header and row: t, then l2/linf/relative per residual, then truncation.
  static std::string csv_header();
  std::string csv_row() const;
};

/// Report at a single state; T5 and the metric residual stay zero.
ConstraintReport check_constraints(const TrajectoryPoint& p);
/// Report at points[k] with time derivatives when at least three slices exist.
ConstraintReport check_constraints(const std::vector<TrajectoryPoint>& points, std::size_t k);

/// Weights of the derivative at times[k] of the quadratic through three
/// neighbouring slices; returns the slice indices used.
std::array<std::size_t, 3> difference_stencil(const std::vector<double>& times, std::size_t k,
                                              std::array<double, 3>& weights);

}  // namespace smcf
