#include "pss/clf.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <stdexcept>

namespace pss {

QuadraticCLF QuadraticCLF::from_matrix(const Eigen::MatrixXd& p, double c3) {
  if (p.rows() != p.cols()) throw std::invalid_argument("QuadraticCLF: P must be square");
  if (!p.isApprox(p.transpose(), 1e-10)) throw std::invalid_argument("QuadraticCLF: P must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(p);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) throw std::invalid_argument("QuadraticCLF: P must be positive definite");
  if (!(c3 > 0.0)) throw std::invalid_argument("QuadraticCLF: c3 must be positive");
  QuadraticCLF clf;
  clf.p = 0.5 * (p + p.transpose());
  clf.lambda_min = lo;
  clf.lambda_max = hi;
  clf.c3 = c3;
  clf.lower = ComparisonFn::power_law(lo, 2.0);
  clf.upper = ComparisonFn::power_law(hi, 2.0);
  clf.decay = ComparisonFn::power_law(c3, 2.0);
  return clf;
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || q.rows() != n || q.cols() != n) {
    throw std::invalid_argument("solve_lyapunov: dimension mismatch");
  }
  // vec(A'P) + vec(PA) = (I ox A' + A' ox I) vec(P) = -vec(Q)
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n * n, n * n);
  const Eigen::MatrixXd at = a.transpose();
  for (Eigen::Index i = 0; i < n; ++i) {
    m.block(i * n, i * n, n, n) += at;
    for (Eigen::Index j = 0; j < n; ++j) {
      m.block(i * n, j * n, n, n) += at(i, j) * Eigen::MatrixXd::Identity(n, n);
    }
  }
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(q.data(), n * n);
  const Eigen::VectorXd vec_p = m.fullPivLu().solve(rhs);
  Eigen::MatrixXd p = Eigen::Map<const Eigen::MatrixXd>(vec_p.data(), n, n);
  return 0.5 * (p + p.transpose());
}

Eigen::MatrixXd solve_care(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           const Eigen::MatrixXd& q, const Eigen::MatrixXd& r) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd r_inv = r.inverse();
  Eigen::MatrixXd ham(2 * n, 2 * n);
  ham << a, -b * r_inv * b.transpose(), -q, -a.transpose();

  Eigen::EigenSolver<Eigen::MatrixXd> eig(ham);
  if (eig.info() != Eigen::Success) throw std::runtime_error("solve_care: eigendecomposition failed");

  Eigen::MatrixXcd basis(2 * n, n);
  Eigen::Index found = 0;
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    if (eig.eigenvalues()(i).real() < 0.0) {
      if (found == n) throw std::runtime_error("solve_care: too many stable eigenvalues");
      basis.col(found++) = eig.eigenvectors().col(i);
    }
  }
  if (found != n) {
    throw std::runtime_error("solve_care: Hamiltonian has no n-dimensional stable subspace; "
                             "the pair (A, B) is likely not stabilizable");
  }
  const Eigen::MatrixXcd x1 = basis.topRows(n);
  const Eigen::MatrixXcd x2 = basis.bottomRows(n);
  const Eigen::MatrixXcd sc = x2 * x1.fullPivLu().solve(Eigen::MatrixXcd::Identity(n, n));
  Eigen::MatrixXd s = sc.real();
  return 0.5 * (s + s.transpose());
}

Eigen::MatrixXd drift_jacobian(const AffineSystem& sys, const Eigen::VectorXd& x, double h) {
  const Eigen::Index n = sys.state_dim;
  Eigen::MatrixXd jac(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    jac.col(j) = (sys.drift(xp) - sys.drift(xm)) / (2.0 * h);
  }
  return jac;
}

ClfSynthesis synthesize_clf(const AffineSystem& est_sys, const Eigen::MatrixXd& q_weight,
                            const Eigen::MatrixXd& r_weight) {
  const Eigen::Index n = est_sys.state_dim;
  const Eigen::VectorXd origin = Eigen::VectorXd::Zero(n);

  ClfSynthesis out;
  out.a_lin = drift_jacobian(est_sys, origin);
  out.b_lin = est_sys.actuation(origin);

  Eigen::MatrixXd gain;
  if (out.b_lin.isZero(0.0)) {
    gain = Eigen::MatrixXd::Zero(est_sys.input_dim, n);  // autonomous; must already be stable
  } else {
    const Eigen::MatrixXd s = solve_care(out.a_lin, out.b_lin, q_weight, r_weight);
    gain = r_weight.fullPivLu().solve(out.b_lin.transpose() * s);
  }
  out.gain = gain;

  const Eigen::MatrixXd a_cl = out.a_lin - out.b_lin * gain;
  const Eigen::EigenSolver<Eigen::MatrixXd> eig(a_cl);
  if (eig.eigenvalues().real().maxCoeff() >= 0.0) {
    throw std::runtime_error("synthesize_clf: closed-loop linearization is not Hurwitz");
  }

  const Eigen::MatrixXd p = solve_lyapunov(a_cl, q_weight);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> qe(q_weight);
  out.clf = QuadraticCLF::from_matrix(p, qe.eigenvalues().minCoeff() / 2.0);
  return out;
}

VdotAffine vdot_affine(const QuadraticCLF& clf, const AffineSystem& est_sys, const Reference& ref,
                       const Eigen::VectorXd& x, double t, const ResidualModel* model) {
  const Eigen::VectorXd e = x - ref.state(t);
  const Eigen::VectorXd grad = clf.gradient(e);

  VdotAffine form;
  form.base_constant = grad.dot(est_sys.drift(x) - ref.derivative(t));
  form.constant = form.base_constant;
  form.linear = est_sys.actuation(x).transpose() * grad;
  if (model != nullptr) {
    form.constant += model->b(x, grad);
    form.linear += model->a(x, grad);
  }
  return form;
}

DerivativeEstimate vdot_estimated(const QuadraticCLF& clf, const AffineSystem& est_sys,
                                  const Reference& ref, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& u, double t, const ResidualModel* model) {
  const Eigen::VectorXd e = x - ref.state(t);
  const Eigen::VectorXd grad = clf.gradient(e);

  DerivativeEstimate est;
  est.base = grad.dot(est_sys.drift(x) + est_sys.actuation(x) * u - ref.derivative(t));
  if (model != nullptr) {
    est.correction = model->a(x, grad).dot(u) + model->b(x, grad);
  }
  est.total = est.base + est.correction;
  return est;
}

double vdot_true(const QuadraticCLF& clf, const AffineSystem& true_sys, const Reference& ref,
                 const Eigen::VectorXd& x, const Eigen::VectorXd& u, double t) {
  const Eigen::VectorXd e = x - ref.state(t);
  return clf.gradient(e).dot(true_sys.rhs(x, u) - ref.derivative(t));
}

bool admissible(const QuadraticCLF& clf, const AffineSystem& est_sys, const Reference& ref,
                const Eigen::VectorXd& x, const Eigen::VectorXd& u, double t,
                const ResidualModel* model) {
  const Eigen::VectorXd e = x - ref.state(t);
  return vdot_estimated(clf, est_sys, ref, x, u, t, model).total <= -clf.decay.eval(e.norm());
}

QpResult qp_control_input(const QuadraticCLF& clf, const AffineSystem& est_sys, const Reference& ref,
                          const Eigen::VectorXd& x, double t, double u_max,
                          const ResidualModel* model) {
  const Eigen::VectorXd e = x - ref.state(t);
  const double alpha = clf.decay.eval(e.norm());
  const VdotAffine form = vdot_affine(clf, est_sys, ref, x, t, model);
  const Eigen::Index m = form.linear.size();

  QpResult result;
  result.input = Eigen::VectorXd::Zero(m);
  if (form.constant <= -alpha) return result;  // u = 0 already satisfies the decrease

  const double gain_sq = form.linear.squaredNorm();
  if (gain_sq == 0.0) {
    result.feasible = false;  // input has no authority over vdot here
    return result;
  }
  // Projection of 0 onto {u : constant + linear'u <= -alpha}.
  Eigen::VectorXd u = -((alpha + form.constant) / gain_sq) * form.linear;
  if (u_max > 0.0 && u.cwiseAbs().maxCoeff() > u_max) {
    // The exact projection leaves the box. Take the in-box input that
    // minimizes vdot instead; exact for m = 1, conservative otherwise.
    for (Eigen::Index i = 0; i < m; ++i) u(i) = form.linear(i) > 0.0 ? -u_max : u_max;
    result.feasible = form.eval(u) <= -alpha;
  }
  result.input = u;
  return result;
}

Controller make_qp_controller(const QuadraticCLF& clf, const AffineSystem& est_sys,
                              const Reference& ref, double u_max, const ResidualModel* model,
                              ControllerLog* log) {
  ResidualModel model_copy;
  const bool has_model = model != nullptr;
  if (has_model) model_copy = *model;
  return [clf, est_sys, ref, u_max, model_copy, has_model, log](const Eigen::VectorXd& x,
                                                                double t) -> Eigen::VectorXd {
    const QpResult qp =
        qp_control_input(clf, est_sys, ref, x, t, u_max, has_model ? &model_copy : nullptr);
    if (!qp.feasible && log != nullptr) ++log->infeasible;
    return qp.input;
  };
}

Controller make_pd_controller(double kp, double kd, const Reference& ref, double u_max) {
  return [kp, kd, ref, u_max](const Eigen::VectorXd& x, double t) -> Eigen::VectorXd {
    const Eigen::VectorXd e = x - ref.state(t);
    double u = -kp * e(0) - kd * e(1);
    if (u_max > 0.0) u = std::min(std::max(u, -u_max), u_max);
    Eigen::VectorXd out(1);
    out << u;
    return out;
  };
}

}  // namespace pss
