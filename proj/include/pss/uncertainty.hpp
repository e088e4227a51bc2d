#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "pss/clf.hpp"
#include "pss/simplex.hpp"

namespace pss {

/// One Lyapunov-derivative measurement. The raw part (state, input, time,
/// gradient, measured vdot, model-based vdot) is immutable once collected;
/// the estimator-dependent caches are recomputed by Dataset::refresh when
/// the learned correction changes.
struct Sample {
  Eigen::VectorXd x;
  Eigen::VectorXd u;
  double t = 0.0;              // collection time (reference phase)
  Eigen::VectorXd grad_v;      // gradient of V at collection
  double vdot_measured = 0.0;  // numerically differentiated V
  double vdot_hat_base = 0.0;  // model-based estimate, no learned terms

  // Caches against the estimator current at insertion or last refresh.
  double vdot_hat = 0.0;
  Eigen::VectorXd a_hat;  // empty when no estimators
  double b_hat = 0.0;
  bool has_estimates = false;
};

/// |vdot_measured - vdot_hat|.
double observed_loss(const Sample& s);

/// Append-only measurement store. Raw sample fields are never mutated;
/// refresh() recomputes only the estimator caches.
class Dataset {
 public:
  void append(Sample s);
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<Sample>& samples() const { return samples_; }

  /// Recomputes vdot_hat and the cached estimator values for every sample.
  /// Passing nullptr clears the learned caches (vdot_hat = vdot_hat_base).
  void refresh(const ResidualModel* model);

 private:
  std::vector<Sample> samples_;
};

/// Lipschitz and sup-norm budget for the model-error functions on the
/// operating region, plus an additive slack covering measurement error in
/// the vdot labels.
struct LipschitzBudget {
  double lip_actuation = 0.0;  // L_A
  double lip_drift = 0.0;      // L_b
  double sup_actuation = 0.0;  // ||A||_inf over the region (induced 2-norm)
  double sup_drift = 0.0;      // ||b||_inf over the region
  double lip_a_hat = 0.0;      // optional, estimator classes
  double lip_b_hat = 0.0;
  double noise_slack = 0.0;    // additive epsilon for differentiation error
};

/// Analytic budget for a pendulum model pair: the actuation residual is
/// state-independent (L_A = 0) and the drift residual is gravity-driven.
LipschitzBudget pendulum_budget(const PendulumParams& true_params,
                                const PendulumParams& est_params, double safety = 1.1);

/// Where the uncertainty set is being evaluated: a state together with the
/// CLF gradient (and learned-correction values) at that state.
struct QueryPoint {
  Eigen::VectorXd x;
  Eigen::VectorXd grad_v;
  Eigen::VectorXd a_hat;
  double b_hat = 0.0;
  bool has_estimates = false;
};

QueryPoint make_query(const QuadraticCLF& clf, const Reference& ref, double t,
                      const Eigen::VectorXd& x, const ResidualModel* model = nullptr);

/// The per-data-point bound epsilon(x, x', u') =
///   loss + eps_L (L_A ||u'|| + L_b) + eps_inf (||A||inf ||u'|| + ||b||inf)
///   + eps_H + noise_slack,
/// with eps_L = ||x - x'|| min(||grad||, ||grad'||) and
/// eps_inf = ||grad - grad'||; eps_H compares the learned corrections at the
/// query and data points and vanishes without estimators.
double epsilon_bound(const QueryPoint& query, const Sample& sample, const LipschitzBudget& budget);

/// Row system Xi [a; b] <= xi(x) with paired rows +-[u'^T, 1].
struct UncertaintyPolyhedron {
  Eigen::MatrixXd constraints;  // 2 N x (m + 1)
  Eigen::VectorXd offsets;      // 2 N, nonnegative
  Eigen::VectorXd anchor;       // the query state

  Eigen::Index input_dim() const { return constraints.cols() - 1; }
  Eigen::Index rows() const { return constraints.rows(); }
};

struct PolyhedronOptions {
  std::size_t max_rows = 500;  // nearest data points kept; 0 keeps everything
};

UncertaintyPolyhedron build_polyhedron(const Dataset& data, const QueryPoint& query,
                                       const LipschitzBudget& budget,
                                       const PolyhedronOptions& options = {});

/// Convenience overload evaluating the gradient (and estimators) via the CLF
/// at a bare state, for the time-invariant stabilization setting.
UncertaintyPolyhedron build_polyhedron(const Dataset& data, const Eigen::VectorXd& x,
                                       const QuadraticCLF& clf, const LipschitzBudget& budget,
                                       const ResidualModel* model = nullptr,
                                       const PolyhedronOptions& options = {});

/// Raised when the data does not pin the uncertainty set down in the
/// requested direction (sup is +infinity).
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SupResult {
  LpStatus status = LpStatus::kOptimal;
  double value = 0.0;
  int pivots = 0;

  /// Optimal value, throwing InsufficientDataError on an unbounded set.
  double value_or_throw() const;
};

/// sup of a'u + b over the polyhedron; exact linear program solved with the
/// dense two-phase simplex (on the dual, whose basis has m + 1 rows).
SupResult sup_linear(const UncertaintyPolyhedron& poly, const Eigen::VectorXd& u);

struct VertexSet {
  std::vector<Eigen::VectorXd> vertices;
  bool bounded = false;
};

/// Test oracle for input dimension m + 1 <= 3: enumerates basic feasible
/// points from all constraint-subset intersections. Boundedness is decided
/// by the row rank, which is exact for the paired +-row structure.
VertexSet vertex_enumerate(const UncertaintyPolyhedron& poly);

/// Euclidean distance from a point to the polyhedron (0 inside), computed by
/// projecting onto every active-set face; dimension <= 3.
double polyhedron_distance(const UncertaintyPolyhedron& poly, const Eigen::VectorXd& point);

/// Symmetric Hausdorff distance between two bounded polyhedra of equal
/// dimension, via their vertex sets. Throws on unbounded inputs.
double hausdorff_distance(const UncertaintyPolyhedron& p1, const UncertaintyPolyhedron& p2);

/// State-indexed uncertainty-set constructor used by the certification layer
/// (stabilization setting: the query gradient comes from the CLF directly).
using DeltaBuilder = std::function<UncertaintyPolyhedron(const Eigen::VectorXd& x)>;

DeltaBuilder make_delta_builder(Dataset dataset, const QuadraticCLF& clf,
                                const LipschitzBudget& budget,
                                const ResidualModel* model = nullptr,
                                const PolyhedronOptions& options = {});

}  // namespace pss
