#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "warpkit/core.hpp"
#include "warpkit/geometry.hpp"

namespace warpkit {

struct DepthEvalReport {
  double abs_rel = 0;
  double sq_rel = 0;
  double rmse = 0;
  double rmse_log = 0;
  double acc1 = 0, acc2 = 0, acc3 = 0;  // thresholds 1.25^1..3
  int64_t n_pixels = 0;
};

constexpr double kMinEvalDepth = 1e-3;

// Standard five-indicator depth evaluation over the valid set. Both
// fields are clamped to [min_depth, cap] first; apply scale alignment
// before calling when the prediction is scale-ambiguous.
inline DepthEvalReport depth_metrics(const GridD& pred, const GridD& gt,
                                     const GridB& valid, double cap,
                                     double min_depth = kMinEvalDepth) {
  require_same_size(pred, gt, "depth_metrics");
  if (valid.height() != pred.height() || valid.width() != pred.width())
    throw DimensionError("depth_metrics: valid mask size mismatch");

  DepthEvalReport r;
  double abs_rel = 0, sq_rel = 0, se = 0, se_log = 0;
  int64_t a1 = 0, a2 = 0, a3 = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    if (!valid[i]) continue;
    double d = std::clamp(pred[i], min_depth, cap);
    double g = std::clamp(gt[i], min_depth, cap);
    double diff = d - g;
    abs_rel += std::abs(diff) / g;
    sq_rel += diff * diff / g;
    se += diff * diff;
    double dl = std::log(d) - std::log(g);
    se_log += dl * dl;
    double delta = std::max(d / g, g / d);
    if (delta < 1.25) ++a1;
    if (delta < 1.25 * 1.25) ++a2;
    if (delta < 1.25 * 1.25 * 1.25) ++a3;
    ++r.n_pixels;
  }
  if (r.n_pixels == 0) throw DegenerateError("depth_metrics: empty valid set");

  double n = static_cast<double>(r.n_pixels);
  r.abs_rel = abs_rel / n;
  r.sq_rel = sq_rel / n;
  r.rmse = std::sqrt(se / n);
  r.rmse_log = std::sqrt(se_log / n);
  r.acc1 = a1 / n;
  r.acc2 = a2 / n;
  r.acc3 = a3 / n;
  return r;
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) throw DegenerateError("median of empty set");
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Median scaling: multiplies pred by median(gt)/median(pred) over the
// valid set, resolving the monocular scale ambiguity deterministically.
inline GridD scale_align(const GridD& pred, const GridD& gt,
                         const GridB& valid, double* factor = nullptr) {
  require_same_size(pred, gt, "scale_align");
  std::vector<double> pv, gv;
  for (size_t i = 0; i < pred.size(); ++i)
    if (valid[i]) {
      pv.push_back(pred[i]);
      gv.push_back(gt[i]);
    }
  if (pv.empty()) throw DegenerateError("scale_align: empty valid set");
  double s = median_of(gv) / median_of(pv);
  if (factor) *factor = s;
  GridD out = pred;
  for (size_t i = 0; i < out.size(); ++i) out[i] *= s;
  return out;
}

// Ordered absolute camera-to-world poses.
struct Trajectory {
  std::vector<Pose6> poses;

  size_t size() const { return poses.size(); }
  Vec3 position(size_t i) const { return poses[i].translation; }
};

// Accumulates relative camera motions from the identity:
// G_0 = I, G_{k+1} = G_k * rel_k.
inline Trajectory chain_relative_poses(const std::vector<Pose6>& relatives) {
  Trajectory t;
  t.poses.push_back(Pose6::identity());
  for (const Pose6& r : relatives)
    t.poses.push_back(compose(t.poses.back(), r));
  return t;
}

// Inverse of chaining: per-step relative motions between consecutive poses.
inline std::vector<Pose6> relative_poses(const Trajectory& t) {
  std::vector<Pose6> out;
  for (size_t i = 0; i + 1 < t.size(); ++i)
    out.push_back(compose(invert(t.poses[i]), t.poses[i + 1]));
  return out;
}

enum class AlignMode { kSe3, kSim3 };

struct Alignment {
  Trajectory aligned;
  double scale = 1.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double rms_residual = 0;
};

// Closed-form least-squares registration of the position sequences:
// rigid (scale fixed at 1) or similarity. Degenerate configurations
// (fewer than 3 poses, collinear positions) are rejected.
inline Alignment umeyama_align(const Trajectory& est, const Trajectory& gt,
                               AlignMode mode) {
  if (est.size() != gt.size())
    throw DimensionError("umeyama_align: length mismatch");
  const size_t n = est.size();
  if (n < 3) throw DegenerateError("umeyama_align: need at least 3 poses");

  Vec3 mu_x = Vec3::Zero(), mu_y = Vec3::Zero();
  for (size_t i = 0; i < n; ++i) {
    mu_x += est.position(i);
    mu_y += gt.position(i);
  }
  mu_x /= static_cast<double>(n);
  mu_y /= static_cast<double>(n);

  double var_x = 0;
  Mat3 cov = Mat3::Zero();
  for (size_t i = 0; i < n; ++i) {
    Vec3 dx = est.position(i) - mu_x;
    Vec3 dy = gt.position(i) - mu_y;
    var_x += dx.squaredNorm();
    cov += dy * dx.transpose();
  }
  var_x /= static_cast<double>(n);
  cov /= static_cast<double>(n);

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 sv = svd.singularValues();
  if (var_x <= 0 || sv(0) <= 0 || sv(1) <= 1e-10 * sv(0))
    throw DegenerateError("umeyama_align: rank-deficient configuration");

  Mat3 S = Mat3::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0)
    S(2, 2) = -1;

  Alignment out;
  out.rotation = svd.matrixU() * S * svd.matrixV().transpose();
  out.scale = mode == AlignMode::kSim3
                  ? (sv(0) * S(0, 0) + sv(1) * S(1, 1) + sv(2) * S(2, 2)) / var_x
                  : 1.0;
  out.translation = mu_y - out.scale * out.rotation * mu_x;

  double se = 0;
  out.aligned.poses.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    Vec3 p = out.scale * out.rotation * est.position(i) + out.translation;
    Mat3 R = out.rotation * est.poses[i].rotation_matrix();
    out.aligned.poses.emplace_back(so3::log(R), p);
    se += (p - gt.position(i)).squaredNorm();
  }
  out.rms_residual = std::sqrt(se / static_cast<double>(n));
  return out;
}

struct TrajEvalReport {
  double t_err_percent = 0;    // mean translation error / path length
  double r_err_deg_per_100 = 0;  // mean rotation angle / path length
  struct PerLength {
    double length = 0;
    double t_err_percent = 0;
    double r_err_deg_per_100 = 0;
    int count = 0;
  };
  std::vector<PerLength> per_length;
  bool too_short = false;
};

inline std::vector<double> default_subsequence_lengths() {
  return {10, 20, 30, 40, 50, 60, 70, 80};
}

// Odometry-style relative pose error over fixed path-length subsequences,
// averaged over all start frames.
inline TrajEvalReport kitti_odometry_errors(
    const Trajectory& est, const Trajectory& gt,
    std::vector<double> lengths = default_subsequence_lengths(),
    int frame_step = 1) {
  if (est.size() != gt.size())
    throw DimensionError("kitti_odometry_errors: length mismatch");
  if (gt.size() < 2)
    throw DimensionError("kitti_odometry_errors: need at least 2 poses");
  std::sort(lengths.begin(), lengths.end());

  std::vector<double> dist(gt.size(), 0.0);
  for (size_t i = 1; i < gt.size(); ++i)
    dist[i] = dist[i - 1] + (gt.position(i) - gt.position(i - 1)).norm();

  TrajEvalReport rep;
  std::vector<double> t_sum(lengths.size(), 0), r_sum(lengths.size(), 0);
  std::vector<int> counts(lengths.size(), 0);

  for (size_t f = 0; f < gt.size(); f += frame_step) {
    for (size_t li = 0; li < lengths.size(); ++li) {
      size_t e = f + 1;
      while (e < gt.size() && dist[e] - dist[f] < lengths[li]) ++e;
      if (e >= gt.size()) break;
      double len = dist[e] - dist[f];
      Pose6 rel_gt = compose(invert(gt.poses[f]), gt.poses[e]);
      Pose6 rel_est = compose(invert(est.poses[f]), est.poses[e]);
      Pose6 err = compose(invert(rel_gt), rel_est);
      t_sum[li] += err.translation.norm() / len;
      r_sum[li] += err.rotation.norm() / len;
      ++counts[li];
    }
  }

  int total = 0;
  double t_all = 0, r_all = 0;
  for (size_t li = 0; li < lengths.size(); ++li) {
    TrajEvalReport::PerLength pl;
    pl.length = lengths[li];
    pl.count = counts[li];
    if (counts[li] > 0) {
      pl.t_err_percent = 100.0 * t_sum[li] / counts[li];
      pl.r_err_deg_per_100 = 100.0 * (180.0 / M_PI) * r_sum[li] / counts[li];
    }
    rep.per_length.push_back(pl);
    total += counts[li];
    t_all += t_sum[li];
    r_all += r_sum[li];
  }
  if (total == 0) {
    rep.too_short = true;
    return rep;
  }
  rep.t_err_percent = 100.0 * t_all / total;
  rep.r_err_deg_per_100 = 100.0 * (180.0 / M_PI) * r_all / total;
  return rep;
}

}  // namespace warpkit
