// SPDX-License-Identifier: Apache-2.0
#include "isac/locate.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "isac/error.hpp"

namespace isac {

RangeGradient bistatic_range_jacobian(const Vec3& p, const Vec3& p_tx, const Vec3& p_rx) {
  const Vec3 a = p - p_tx;
  const Vec3 b = p - p_rx;
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) fail(ErrorKind::Degenerate, "bistatic_range_jacobian: point coincides with a node");
  return {na + nb, a / na + b / nb};
}

namespace {

struct Resolved {
  Vec3 tx;
  Vec3 rx;
  double range_m;   // c * delay
  double sqrt_w;    // 1 / (c * sigma)
  double delay_s;
};

std::vector<Resolved> resolve(std::span<const BistaticObservation> obs, const NodePositions& nodes) {
  std::vector<Resolved> out;
  out.reserve(obs.size());
  for (const auto& o : obs) {
    const auto tx = nodes.find(o.tx_id);
    const auto rx = nodes.find(o.rx_id);
    if (tx == nodes.end() || rx == nodes.end())
      fail(ErrorKind::Validation, "localize: unknown node in observation " + o.tx_id + " -> " + o.rx_id);
    if (!(o.sigma_s > 0.0)) fail(ErrorKind::Validation, "localize: observation sigma must be > 0");
    out.push_back({tx->second, rx->second, kSpeedOfLight * o.delay_s, 1.0 / (kSpeedOfLight * o.sigma_s), o.delay_s});
  }
  return out;
}

struct Linearization {
  double cost = 0.0;
  Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
  Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
};

bool near_node(const std::vector<Resolved>& obs, const Vec3& p) {
  for (const auto& o : obs)
    if ((p - o.tx).norm() < 1e-9 || (p - o.rx).norm() < 1e-9) return true;
  return false;
}

double prior_residual(const LocalizerConfig& cfg, const Vec3& p) {
  if (!cfg.altitude_prior) return 0.0;
  if (p.z() < cfg.altitude_min_m) return (p.z() - cfg.altitude_min_m) / cfg.altitude_sigma_m;
  if (p.z() > cfg.altitude_max_m) return (p.z() - cfg.altitude_max_m) / cfg.altitude_sigma_m;
  return 0.0;
}

double cost_at(const std::vector<Resolved>& obs, const LocalizerConfig& cfg, const Vec3& p) {
  double c = 0.0;
  for (const auto& o : obs) {
    const double r = ((p - o.tx).norm() + (p - o.rx).norm() - o.range_m) * o.sqrt_w;
    c += r * r;
  }
  const double pr = prior_residual(cfg, p);
  return c + pr * pr;
}

Linearization linearize(const std::vector<Resolved>& obs, const LocalizerConfig& cfg, const Vec3& p) {
  Linearization lin;
  for (const auto& o : obs) {
    const auto g = bistatic_range_jacobian(p, o.tx, o.rx);
    const double r = (g.range_m - o.range_m) * o.sqrt_w;  // residual model - measurement
    const Eigen::Vector3d j = g.gradient * o.sqrt_w;
    lin.cost += r * r;
    lin.jtj += j * j.transpose();
    lin.jtr += j * r;
  }
  const double pr = prior_residual(cfg, p);
  if (pr != 0.0) {
    const Eigen::Vector3d j(0.0, 0.0, 1.0 / cfg.altitude_sigma_m);
    lin.cost += pr * pr;
    lin.jtj += j * j.transpose();
    lin.jtr += j * pr;
  }
  return lin;
}

Vec3 grid_init(const std::vector<Resolved>& obs, const LocalizerConfig& cfg) {
  Vec3 best = 0.5 * (cfg.bounds_min + cfg.bounds_max);
  double best_cost = std::numeric_limits<double>::infinity();
  const double h = cfg.grid_step_m;
  for (double x = cfg.bounds_min.x() + h / 2; x <= cfg.bounds_max.x(); x += h)
    for (double y = cfg.bounds_min.y() + h / 2; y <= cfg.bounds_max.y(); y += h)
      for (double z = cfg.bounds_min.z() + h / 2; z <= cfg.bounds_max.z(); z += h) {
        const Vec3 p(x, y, z);
        if (near_node(obs, p)) continue;
        const double c = cost_at(obs, cfg, p);
        if (c < best_cost) {
          best_cost = c;
          best = p;
        }
      }
  return best;
}

bool nodes_coplanar(const std::vector<Resolved>& obs) {
  std::vector<Vec3> pts;
  for (const auto& o : obs) {
    pts.push_back(o.tx);
    pts.push_back(o.rx);
  }
  Vec3 mean = Vec3::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  Eigen::MatrixXd a(static_cast<Eigen::Index>(pts.size()), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) a.row(static_cast<Eigen::Index>(i)) = (pts[i] - mean).transpose();
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto s = svd.singularValues();
  return s(2) <= 1e-9 * std::max(1.0, s(0));
}

// Distance of p from the plane through the nodes (used with nodes_coplanar).
double plane_distance(const std::vector<Resolved>& obs, const Vec3& p) {
  std::vector<Vec3> pts;
  for (const auto& o : obs) {
    pts.push_back(o.tx);
    pts.push_back(o.rx);
  }
  Vec3 mean = Vec3::Zero();
  for (const auto& q : pts) mean += q;
  mean /= static_cast<double>(pts.size());
  Eigen::MatrixXd a(static_cast<Eigen::Index>(pts.size()), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) a.row(static_cast<Eigen::Index>(i)) = (pts[i] - mean).transpose();
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Vec3 normal = svd.matrixV().col(2);
  return std::abs((p - mean).dot(normal));
}

}  // namespace

double localization_cost(std::span<const BistaticObservation> observations, const NodePositions& nodes, const Vec3& p) {
  return cost_at(resolve(observations, nodes), LocalizerConfig{}, p);
}

PositionFix localize(std::span<const BistaticObservation> observations, const NodePositions& nodes,
                     const std::optional<Vec3>& init, const LocalizerConfig& cfg) {
  const auto obs = resolve(observations, nodes);
  std::set<std::string> receivers;
  for (const auto& o : observations) receivers.insert(o.rx_id);
  if (obs.size() < 3 || receivers.size() < 3) {
    std::ostringstream os;
    os << "localize: underdetermined, " << receivers.size() << " distinct receivers (need 3)";
    fail(ErrorKind::Validation, os.str());
  }

  PositionFix fix;
  fix.time_s = observations.front().time_s;
  fix.n_obs = static_cast<int>(obs.size());
  Vec3 p = init.value_or(grid_init(obs, cfg));
  if (near_node(obs, p)) p += Vec3(1e-3, 1e-3, 1e-3);

  double lambda = cfg.lambda_init;
  Linearization lin = linearize(obs, cfg, p);
  bool converged = false;
  int it = 0;
  for (; it < cfg.max_iterations; ++it) {
    Eigen::Matrix3d a = lin.jtj;
    a.diagonal() *= (1.0 + lambda);
    const Eigen::Vector3d step = a.ldlt().solve(-lin.jtr);
    if (!step.allFinite()) break;
    const Vec3 trial = p + step;
    if (near_node(obs, trial)) {
      lambda *= cfg.lambda_up;
      continue;
    }
    const double trial_cost = cost_at(obs, cfg, trial);
    if (trial_cost <= lin.cost) {
      p = trial;
      lin = linearize(obs, cfg, p);
      lambda = std::max(lambda * cfg.lambda_down, 1e-12);
      if (step.norm() < cfg.step_tolerance_m) {
        converged = true;
        ++it;
        break;
      }
    } else {
      lambda *= cfg.lambda_up;
      if (step.norm() < cfg.step_tolerance_m * 1e-3) {
        converged = true;  // no descent left within tolerance
        ++it;
        break;
      }
    }
  }
  fix.iterations = it;
  fix.p = p;

  double rss = 0.0;
  for (const auto& o : obs) {
    const double r = ((p - o.tx).norm() + (p - o.rx).norm()) / kSpeedOfLight - o.delay_s;
    rss += r * r;
  }
  fix.rss_residual = rss;

  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(lin.jtj);
  const auto s = svd.singularValues();
  fix.condition_number = s(2) > 0.0 ? s(0) / s(2) : std::numeric_limits<double>::infinity();
  fix.ill_conditioned = !(fix.condition_number <= cfg.max_condition);
  fix.converged = converged && !fix.ill_conditioned;
  if (!fix.ill_conditioned) {
    const int dof = fix.n_obs - 3;
    const double scale = dof > 0 ? std::max(1.0, lin.cost / dof) : 1.0;
    fix.covariance = lin.jtj.inverse() * scale;
  }
  fix.ambiguous = nodes_coplanar(obs) && plane_distance(obs, p) > 1e-6;
  return fix;
}

TrackFusionResult localize_track(const std::map<std::string, std::vector<TrackState>>& tracks_by_rx,
                                 const std::string& tx_id, const PositionProvider& positions,
                                 const TruthProvider& truth, const LocalizerConfig& cfg) {
  struct Candidate {
    int track_id;
    const TrackPoint* point;
  };
  // cpi -> rx -> candidates
  std::map<int, std::map<std::string, std::vector<Candidate>>> by_cpi;
  std::map<int, double> cpi_time;
  for (const auto& [rx, tracks] : tracks_by_rx) {
    for (const auto& t : tracks) {
      for (const auto& pt : t.history) {
        cpi_time.emplace(pt.cpi_index, pt.time_s);
        if (pt.status == TrackStatus::Confirmed || pt.status == TrackStatus::Coasting)
          by_cpi[pt.cpi_index][rx].push_back({t.id, &pt});
      }
    }
  }

  TrackFusionResult result;
  std::optional<Vec3> previous;
  for (const auto& [cpi, time] : cpi_time) {
    const auto found = by_cpi.find(cpi);
    std::vector<BistaticObservation> obs;
    std::vector<std::pair<std::string, int>> used;
    NodePositions nodes;
    if (found != by_cpi.end()) {
      nodes[tx_id] = positions(tx_id, time);
      for (const auto& [rx, cands] : found->second) {
        nodes[rx] = positions(rx, time);
        const Candidate* pick = nullptr;
        double best = std::numeric_limits<double>::infinity();
        for (const auto& c : cands) {
          double score;
          if (previous) {
            double expected = 0.0;
            try {
              expected = bistatic_delay(nodes[tx_id], *previous, nodes[rx]);
            } catch (const Error&) {
              expected = c.point->x(0);
            }
            score = std::abs(c.point->x(0) - expected);
          } else {
            score = -c.point->snr_db;
          }
          if (score < best) {
            best = score;
            pick = &c;
          }
        }
        if (pick) {
          BistaticObservation o;
          o.tx_id = tx_id;
          o.rx_id = rx;
          o.time_s = time;
          o.delay_s = pick->point->x(0);
          o.sigma_s = std::sqrt(std::max(pick->point->p(0, 0), 1e-30));
          obs.push_back(o);
          used.emplace_back(rx, pick->track_id);
        }
      }
    }
    if (obs.size() < 3) {
      result.gaps.push_back(cpi);
      continue;
    }
    LocalizedFix lf;
    lf.cpi_index = cpi;
    lf.time_s = time;
    try {
      lf.fix = localize(obs, nodes, previous, cfg);
    } catch (const Error&) {
      result.failed.push_back(cpi);
      continue;
    }
    for (const auto& [rx, id] : used) lf.rx_used.push_back(rx);
    lf.tracks_used = used;
    if (truth) {
      lf.truth = truth(time);
      if (lf.truth) lf.error_m = (lf.fix.p - *lf.truth).norm();
    }
    if (lf.fix.converged) previous = lf.fix.p;
    result.fixes.push_back(std::move(lf));
  }
  return result;
}

}  // namespace isac
