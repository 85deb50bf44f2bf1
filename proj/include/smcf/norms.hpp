#pragma once

#include <limits>
#include <vector>

#include "smcf/spectral_grid.hpp"

namespace smcf {

struct EnvelopeParams {
  double s = 2.0;
  double delta = 0.5;

  // sigma_d = d/2 - delta
  double sigma(int d) const { return 0.5 * d - delta; }
  void validate(int d) const;
};

/// a_j for j = 0..J.
struct Envelope {
  std::vector<double> values;
};

/// Japanese-bracket Sobolev norm with grid measure,
/// sqrt(L^d sum (1+|k|^2)^s |c_k|^2).
template <typename S>
double sobolev_norm(const GridField<S>& f, double s);

/// ||D|^sigma S_0 h||^2_{L^inf L^2} + sum_{j>=1} 2^{2sj} ||S_j h||^2_{L^inf L^2},
/// square-rooted. The time sup is taken inside each block.
template <typename S>
double z_norm(const std::vector<GridField<S>>& series, double sigma, double s);

enum class InnerNorm { L2, Linf };
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// l^p over the cubes Q of scale 2^j of ||chi_Q f||_inner, with chi_Q a
/// periodized smooth partition of unity. The box is split into
/// M = floor(L / 2^j) cubes per axis.
template <typename S>
double cube_partition_norm(const GridField<S>& f, int j, double p, InnerNorm inner);

/// Same, but with the cube scale clamped to a single cube when 2^l exceeds L.
template <typename S>
double cube_l1_clamped(const GridField<S>& f, int l);

/// Cost sum_l 2^{l-|j|} ||h_l||_{l^1_l L^2} of an explicit decomposition of a
/// dyadic block; pieces[i] sits at l = |j| + i. Any such cost bounds the Y_{0j}
/// norm from above.
template <typename S>
double y0j_decomposition_cost(const std::vector<GridField<S>>& pieces, int j);

/// Upper-bound surrogate for the Y_0^s norm using the one-term decomposition
/// h_{j,|j|} = P_j h in every dyadic block.
template <typename S>
double y0_norm_upper(const GridField<S>& f, double s, double delta);

/// Upper-bound surrogate for the Y_0^lo norm:
/// ||P_{>=0} f||_{l^1_0 L^2} + ||P_{>=0} f||_inf
///   + (sum_{j<0} (2^{(d/2-delta)j} ||P_j f||_{l^1_{|j|} L^2})^2)^{1/2}.
template <typename S>
double y0_lo_norm_upper(const GridField<S>& f, double delta);

/// a_j = 2^{-delta j} ||u||_{H^s} + max_k 2^{-delta|j-k|} ||S_k u||_{H^s}.
template <typename S>
Envelope frequency_envelope(const GridField<S>& f, const EnvelopeParams& params);

/// P_{>=0}: multiplier 1 - phi(2|k|).
template <typename S>
GridField<S> project_high(const GridField<S>& f);

}  // namespace smcf
