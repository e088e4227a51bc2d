#include "pss/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <utility>

namespace pss {

double observed_loss(const Sample& s) { return std::abs(s.vdot_measured - s.vdot_hat); }

void Dataset::append(Sample s) { samples_.push_back(std::move(s)); }

void Dataset::refresh(const ResidualModel* model) {
  for (Sample& s : samples_) {
    if (model == nullptr) {
      s.vdot_hat = s.vdot_hat_base;
      s.a_hat = Eigen::VectorXd();
      s.b_hat = 0.0;
      s.has_estimates = false;
    } else {
      s.a_hat = model->a(s.x, s.grad_v);
      s.b_hat = model->b(s.x, s.grad_v);
      s.vdot_hat = s.vdot_hat_base + s.a_hat.dot(s.u) + s.b_hat;
      s.has_estimates = true;
    }
  }
}

LipschitzBudget pendulum_budget(const PendulumParams& true_params,
                                const PendulumParams& est_params, double safety) {
  const double true_gain = 1.0 / (true_params.mass * true_params.length * true_params.length);
  const double est_gain = 1.0 / (est_params.mass * est_params.length * est_params.length);
  const double gravity_gap =
      std::abs(true_params.gravity / true_params.length - est_params.gravity / est_params.length);

  LipschitzBudget budget;
  budget.lip_actuation = 0.0;  // actuation residual is state independent
  budget.sup_actuation = safety * std::abs(true_gain - est_gain);
  // Drift residual (0, dg * sin(angle)): |sin a - sin a'| <= ||x - x'||.
  budget.lip_drift = safety * gravity_gap;
  budget.sup_drift = safety * gravity_gap;
  return budget;
}

QueryPoint make_query(const QuadraticCLF& clf, const Reference& ref, double t,
                      const Eigen::VectorXd& x, const ResidualModel* model) {
  QueryPoint q;
  q.x = x;
  q.grad_v = clf.gradient(x - ref.state(t));
  if (model != nullptr) {
    q.a_hat = model->a(x, q.grad_v);
    q.b_hat = model->b(x, q.grad_v);
    q.has_estimates = true;
  }
  return q;
}

double epsilon_bound(const QueryPoint& query, const Sample& sample, const LipschitzBudget& budget) {
  const double u_norm = sample.u.norm();
  const double eps_l =
      (query.x - sample.x).norm() * std::min(query.grad_v.norm(), sample.grad_v.norm());
  const double eps_inf = (query.grad_v - sample.grad_v).norm();

  double eps_h = 0.0;
  if (query.has_estimates || sample.has_estimates) {
    const Eigen::Index m = sample.u.size();
    const Eigen::VectorXd a_q =
        query.has_estimates ? query.a_hat : Eigen::VectorXd(Eigen::VectorXd::Zero(m));
    const Eigen::VectorXd a_s =
        sample.has_estimates ? sample.a_hat : Eigen::VectorXd(Eigen::VectorXd::Zero(m));
    const double b_q = query.has_estimates ? query.b_hat : 0.0;
    const double b_s = sample.has_estimates ? sample.b_hat : 0.0;
    eps_h = std::abs((a_q - a_s).dot(sample.u) + b_q - b_s);
  }

  return observed_loss(sample) + eps_l * (budget.lip_actuation * u_norm + budget.lip_drift) +
         eps_inf * (budget.sup_actuation * u_norm + budget.sup_drift) + eps_h +
         budget.noise_slack;
}

UncertaintyPolyhedron build_polyhedron(const Dataset& data, const QueryPoint& query,
                                       const LipschitzBudget& budget,
                                       const PolyhedronOptions& options) {
  if (data.empty()) throw std::invalid_argument("build_polyhedron: dataset is empty");

  std::vector<std::size_t> indices(data.size());
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  if (options.max_rows > 0 && data.size() > options.max_rows) {
    std::vector<double> dist(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) dist[i] = (data[i].x - query.x).norm();
    std::stable_sort(indices.begin(), indices.end(),
                     [&dist](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
    indices.resize(options.max_rows);
    std::sort(indices.begin(), indices.end());
  }

  const Eigen::Index m = data[0].u.size();
  UncertaintyPolyhedron poly;
  poly.anchor = query.x;
  poly.constraints.resize(2 * static_cast<Eigen::Index>(indices.size()), m + 1);
  poly.offsets.resize(2 * static_cast<Eigen::Index>(indices.size()));

  Eigen::Index r = 0;
  for (const std::size_t i : indices) {
    const Sample& s = data[i];
    const double eps = epsilon_bound(query, s, budget);
    poly.constraints.row(r).head(m) = s.u.transpose();
    poly.constraints(r, m) = 1.0;
    poly.offsets(r) = eps;
    poly.constraints.row(r + 1) = -poly.constraints.row(r);
    poly.offsets(r + 1) = eps;
    r += 2;
  }
  return poly;
}

UncertaintyPolyhedron build_polyhedron(const Dataset& data, const Eigen::VectorXd& x,
                                       const QuadraticCLF& clf, const LipschitzBudget& budget,
                                       const ResidualModel* model, const PolyhedronOptions& options) {
  QueryPoint q;
  q.x = x;
  q.grad_v = clf.gradient(x);
  if (model != nullptr) {
    q.a_hat = model->a(x, q.grad_v);
    q.b_hat = model->b(x, q.grad_v);
    q.has_estimates = true;
  }
  return build_polyhedron(data, q, budget, options);
}

double SupResult::value_or_throw() const {
  if (status == LpStatus::kUnbounded) {
    throw InsufficientDataError(
        "sup_linear: uncertainty set unbounded in the objective direction; "
        "the dataset control inputs are insufficiently diverse");
  }
  if (status == LpStatus::kInfeasible) {
    throw std::logic_error("sup_linear: empty uncertainty set (internal inconsistency)");
  }
  return value;
}

SupResult sup_linear(const UncertaintyPolyhedron& poly, const Eigen::VectorXd& u) {
  const Eigen::Index m = poly.input_dim();
  if (u.size() != m) throw std::invalid_argument("sup_linear: input dimension mismatch");

  // max c'z s.t. Xi z <= xi  equals  min xi'y s.t. Xi'y = c, y >= 0 by LP
  // duality; the dual's basis has only m + 1 rows, so solve that side.
  Eigen::VectorXd c(m + 1);
  c.head(m) = u;
  c(m) = 1.0;

  const LpSolution dual =
      solve_standard_form(poly.constraints.transpose(), c, poly.offsets);

  SupResult result;
  result.pivots = dual.pivots;
  switch (dual.status) {
    case LpStatus::kOptimal:
      result.status = LpStatus::kOptimal;
      result.value = dual.objective;
      break;
    case LpStatus::kInfeasible:  // no dual certificate -> primal unbounded
      result.status = LpStatus::kUnbounded;
      break;
    case LpStatus::kUnbounded:  // dual unbounded -> primal infeasible
      result.status = LpStatus::kInfeasible;
      break;
  }
  return result;
}

namespace {

// Visits every size-k index subset of {0, ..., n-1}.
template <typename Fn>
void for_each_subset(Eigen::Index n, int k, Fn&& fn) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(k));
  std::function<void(Eigen::Index, int)> rec = [&](Eigen::Index start, int depth) {
    if (depth == k) {
      fn(idx);
      return;
    }
    for (Eigen::Index i = start; i <= n - (k - depth); ++i) {
      idx[static_cast<std::size_t>(depth)] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
}

}  // namespace

VertexSet vertex_enumerate(const UncertaintyPolyhedron& poly) {
  const Eigen::Index k = poly.constraints.cols();
  if (k > 3) throw std::invalid_argument("vertex_enumerate: dimension above 3 not supported");

  VertexSet out;
  // Paired +-rows make the recession cone the row-matrix null space, so the
  // set is bounded exactly when the rows span the full dimension.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(poly.constraints);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) {
    out.bounded = false;
    return out;
  }
  out.bounded = true;

  const double feas_tol = 1e-9 * (1.0 + poly.offsets.cwiseAbs().maxCoeff());
  const double dedupe_tol = 1e-8;

  for_each_subset(poly.rows(), static_cast<int>(k), [&](const std::vector<Eigen::Index>& rows) {
    Eigen::MatrixXd a(k, k);
    Eigen::VectorXd b(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      a.row(i) = poly.constraints.row(rows[static_cast<std::size_t>(i)]);
      b(i) = poly.offsets(rows[static_cast<std::size_t>(i)]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    lu.setThreshold(1e-10);
    if (lu.rank() < k) return;
    const Eigen::VectorXd z = lu.solve(b);
    if (((poly.constraints * z - poly.offsets).array() > feas_tol).any()) return;
    for (const Eigen::VectorXd& v : out.vertices) {
      if ((v - z).norm() < dedupe_tol * (1.0 + z.norm())) return;
    }
    out.vertices.push_back(z);
  });
  return out;
}

double polyhedron_distance(const UncertaintyPolyhedron& poly, const Eigen::VectorXd& point) {
  const Eigen::Index k = poly.constraints.cols();
  if (point.size() != k) throw std::invalid_argument("polyhedron_distance: dimension mismatch");
  const double feas_tol = 1e-9 * (1.0 + poly.offsets.cwiseAbs().maxCoeff());

  if (((poly.constraints * point - poly.offsets).array() <= feas_tol).all()) return 0.0;

  double best = std::numeric_limits<double>::infinity();
  // Project onto every face spanned by an active subset of 1..k constraints.
  for (int subset_size = 1; subset_size <= static_cast<int>(k); ++subset_size) {
    for_each_subset(poly.rows(), subset_size, [&](const std::vector<Eigen::Index>& rows) {
      const auto sz = static_cast<Eigen::Index>(rows.size());
      Eigen::MatrixXd a(sz, k);
      Eigen::VectorXd b(sz);
      for (Eigen::Index i = 0; i < sz; ++i) {
        a.row(i) = poly.constraints.row(rows[static_cast<std::size_t>(i)]);
        b(i) = poly.offsets(rows[static_cast<std::size_t>(i)]);
      }
      const Eigen::MatrixXd gram = a * a.transpose();
      Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
      lu.setThreshold(1e-12);
      if (lu.rank() < sz) return;
      const Eigen::VectorXd z = point - a.transpose() * lu.solve(a * point - b);
      if (((poly.constraints * z - poly.offsets).array() > feas_tol).any()) return;
      best = std::min(best, (z - point).norm());
    });
  }
  return best;
}

double hausdorff_distance(const UncertaintyPolyhedron& p1, const UncertaintyPolyhedron& p2) {
  if (p1.constraints.cols() != p2.constraints.cols()) {
    throw std::invalid_argument("hausdorff_distance: dimension mismatch");
  }
  const VertexSet v1 = vertex_enumerate(p1);
  const VertexSet v2 = vertex_enumerate(p2);
  if (!v1.bounded || !v2.bounded) {
    throw std::invalid_argument("hausdorff_distance: both polyhedra must be bounded");
  }
  // max over P of dist(-, Q) is attained at a vertex of P (convexity).
  double d = 0.0;
  for (const Eigen::VectorXd& v : v1.vertices) d = std::max(d, polyhedron_distance(p2, v));
  for (const Eigen::VectorXd& v : v2.vertices) d = std::max(d, polyhedron_distance(p1, v));
  return d;
}

DeltaBuilder make_delta_builder(Dataset dataset, const QuadraticCLF& clf,
                                const LipschitzBudget& budget, const ResidualModel* model,
                                const PolyhedronOptions& options) {
  auto shared_data = std::make_shared<const Dataset>(std::move(dataset));
  ResidualModel model_copy;
  const bool has_model = model != nullptr;
  if (has_model) model_copy = *model;
  return [shared_data, clf, budget, model_copy, has_model,
          options](const Eigen::VectorXd& x) -> UncertaintyPolyhedron {
    return build_polyhedron(*shared_data, x, clf, budget,
                            has_model ? &model_copy : nullptr, options);
  };
}

}  // namespace pss
