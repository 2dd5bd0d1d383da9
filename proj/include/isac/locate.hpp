// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "isac/scene.hpp"
#include "isac/track.hpp"

namespace isac {

struct BistaticObservation {
  std::string tx_id;
  std::string rx_id;
  double time_s = 0.0;
  double delay_s = 0.0;
  double sigma_s = 1e-9;
};

struct PositionFix {
  double time_s = 0.0;
  Vec3 p = Vec3::Zero();
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
  double rss_residual = 0.0;  // s^2, unweighted delay residuals
  int n_obs = 0;
  int iterations = 0;
  bool converged = false;
  bool ill_conditioned = false;
  bool ambiguous = false;  // all nodes coplanar: the mirror image fits equally well
  double condition_number = 0.0;
};

struct LocalizerConfig {
  int max_iterations = 50;
  double step_tolerance_m = 1e-4;
  double lambda_init = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 0.5;
  double grid_step_m = 5.0;
  Vec3 bounds_min{-10.0, -10.0, 0.0};
  Vec3 bounds_max{110.0, 110.0, 60.0};
  double max_condition = 1e8;
  bool altitude_prior = false;
  double altitude_min_m = 0.0;
  double altitude_max_m = 100.0;
  double altitude_sigma_m = 1.0;
};

struct RangeGradient {
  double range_m = 0.0;
  Vec3 gradient = Vec3::Zero();
};

/// R(p) = |p - p_tx| + |p - p_rx| and its gradient. Throws Degenerate when p
/// coincides with an endpoint.
RangeGradient bistatic_range_jacobian(const Vec3& p, const Vec3& p_tx, const Vec3& p_rx);

using NodePositions = std::map<std::string, Vec3>;

/// Weighted Levenberg-Marquardt fit of c * delay_i = R_i(p). Throws
/// Validation for fewer than three observations with distinct receivers and
/// Validation for unknown node ids.
PositionFix localize(std::span<const BistaticObservation> observations, const NodePositions& nodes,
                     const std::optional<Vec3>& init, const LocalizerConfig& cfg = {});

/// Weighted cost sum_i ((c d_i - R_i(p)) / (c sigma_i))^2.
double localization_cost(std::span<const BistaticObservation> observations, const NodePositions& nodes, const Vec3& p);

struct LocalizedFix {
  int cpi_index = 0;
  double time_s = 0.0;
  PositionFix fix;
  std::vector<std::string> rx_used;
  std::vector<std::pair<std::string, int>> tracks_used;  // (rx, track id)
  std::optional<Vec3> truth;
  std::optional<double> error_m;
};

struct TrackFusionResult {
  std::vector<LocalizedFix> fixes;
  std::vector<int> gaps;  // CPIs with fewer than three usable receivers
  std::vector<int> failed;  // CPIs where the solver threw
};

using PositionProvider = std::function<Vec3(const std::string& node_id, double time_s)>;
using TruthProvider = std::function<std::optional<Vec3>(double time_s)>;

/// Single-target fusion of per-receiver track histories on a shared CPI grid.
/// Per CPI and receiver the confirmed or coasting track nearest the previous
/// fix's predicted delay takes part (highest SNR before the first fix).
TrackFusionResult localize_track(const std::map<std::string, std::vector<TrackState>>& tracks_by_rx,
                                 const std::string& tx_id, const PositionProvider& positions,
                                 const TruthProvider& truth, const LocalizerConfig& cfg = {});

}  // namespace isac
