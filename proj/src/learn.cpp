#include "pss/learn.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace pss {

namespace {

Eigen::VectorXd stack_features(const Eigen::VectorXd& x, const Eigen::VectorXd& grad_v) {
  Eigen::VectorXd z(x.size() + grad_v.size());
  z << x, grad_v;
  return z;
}

}  // namespace

Eigen::VectorXd EstimatorPair::a_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& grad_v) const {
  return a_net.forward(stack_features(x, grad_v));
}

double EstimatorPair::b_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& grad_v) const {
  return b_net.forward(stack_features(x, grad_v))(0);
}

ResidualModel EstimatorPair::as_residual_model() const {
  ResidualModel model;
  model.a = [net = a_net](const Eigen::VectorXd& x, const Eigen::VectorXd& g) {
    Eigen::VectorXd z(x.size() + g.size());
    z << x, g;
    return Eigen::VectorXd(net.forward(z));
  };
  model.b = [net = b_net](const Eigen::VectorXd& x, const Eigen::VectorXd& g) {
    Eigen::VectorXd z(x.size() + g.size());
    z << x, g;
    return net.forward(z)(0);
  };
  return model;
}

TrainOptions train_options_from(const ExperimentConfig& config) {
  TrainOptions opts;
  opts.hidden_units = config.hidden_units;
  opts.epochs = config.epochs;
  opts.learning_rate = config.learning_rate;
  opts.momentum = config.momentum;
  opts.batch_size = config.batch_size;
  opts.spectral_budget = config.spectral_budget;
  opts.power_iterations = config.power_iterations;
  return opts;
}

namespace {

struct Momentum {
  Mlp::Gradients velocity;
  explicit Momentum(const Mlp& net) : velocity(net.zero_gradients()) {}

  void step(Mlp& net, Mlp::Gradients& grads, double lr, double beta) {
    // Global-norm clip: outlier batches (sharp transients) otherwise produce
    // steps that blow up the width-200 nets.
    constexpr double kClipNorm = 5.0;
    const double norm = std::sqrt(grads.w1.squaredNorm() + grads.w2.squaredNorm() +
                                  grads.b1.squaredNorm() + grads.b2.squaredNorm());
    if (norm > kClipNorm) {
      const double scale = kClipNorm / norm;
      grads.w1 *= scale;
      grads.w2 *= scale;
      grads.b1 *= scale;
      grads.b2 *= scale;
    }
    velocity.w1 = beta * velocity.w1 - lr * grads.w1;
    velocity.w2 = beta * velocity.w2 - lr * grads.w2;
    velocity.b1 = beta * velocity.b1 - lr * grads.b1;
    velocity.b2 = beta * velocity.b2 - lr * grads.b2;
    net.w1() += velocity.w1;
    net.w2() += velocity.w2;
    net.b1() += velocity.b1;
    net.b2() += velocity.b2;
  }
};

double prediction_loss(const Mlp& a_net, const Mlp& b_net, const Eigen::MatrixXd& z,
                       const Eigen::MatrixXd& u, const Eigen::VectorXd& y) {
  const Eigen::MatrixXd a_out = a_net.forward_batch(z);
  const Eigen::MatrixXd b_out = b_net.forward_batch(z);
  const Eigen::ArrayXd pred =
      (a_out.array() * u.array()).colwise().sum().transpose() + b_out.row(0).transpose().array();
  return (pred - y.array()).square().mean();
}

}  // namespace

std::pair<EstimatorPair, TrainStats> erm_fit(const Dataset& data,
                                             const std::vector<std::size_t>& train_indices,
                                             const TrainOptions& options, std::uint64_t seed,
                                             const EstimatorPair* warm_start) {
  if (data.empty()) throw std::invalid_argument("erm_fit: dataset is empty");

  std::vector<std::size_t> indices = train_indices;
  if (indices.empty()) {
    indices.resize(data.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
  }
  const auto n_train = static_cast<Eigen::Index>(indices.size());
  const Eigen::Index n = data[0].x.size();
  const Eigen::Index m = data[0].u.size();
  const Eigen::Index feat = 2 * n;

  Eigen::MatrixXd z(feat, n_train), u(m, n_train);
  Eigen::VectorXd y(n_train);
  for (Eigen::Index i = 0; i < n_train; ++i) {
    const Sample& s = data[indices[static_cast<std::size_t>(i)]];
    z.col(i) = stack_features(s.x, s.grad_v);
    u.col(i) = s.u;
    y(i) = s.vdot_measured - s.vdot_hat_base;
  }

  // Standardize features and targets for conditioning; both affine maps are
  // folded back into the network weights below, so the returned estimators
  // act on raw features and produce raw-scale outputs.
  const Eigen::VectorXd mean = z.rowwise().mean();
  Eigen::VectorXd sd =
      ((z.colwise() - mean).array().square().rowwise().mean()).sqrt().matrix();
  sd = sd.cwiseMax(1e-8);
  const Eigen::MatrixXd z_std = (z.colwise() - mean).array().colwise() / sd.array();

  const double y_mean = y.mean();
  const double y_scale = std::max(std::sqrt((y.array() - y_mean).square().mean()), 1e-8);
  y = (y.array() - y_mean) / y_scale;

  EstimatorPair pair{Mlp(feat, options.hidden_units, m, derive_seed(seed, "a-init")),
                     Mlp(feat, options.hidden_units, 1, derive_seed(seed, "b-init"))};
  if (warm_start != nullptr && warm_start->a_net.in_dim() == feat &&
      warm_start->a_net.hidden_dim() == options.hidden_units &&
      warm_start->a_net.out_dim() == m) {
    // Resume from the previous fit, mapped into the current standardized
    // coordinates (the exact inverse of the fold applied on return).
    pair = *warm_start;
    for (Mlp* net : {&pair.a_net, &pair.b_net}) {
      net->b1() += net->w1() * mean;
      net->w1() = net->w1() * sd.asDiagonal();
      net->w2() /= y_scale;
      net->b2() /= y_scale;
    }
    pair.b_net.b2().array() -= y_mean / y_scale;
  }
  Momentum a_momentum(pair.a_net), b_momentum(pair.b_net);

  TrainStats stats;
  stats.initial_loss = prediction_loss(pair.a_net, pair.b_net, z_std, u, y);
  stats.epoch_losses.reserve(static_cast<std::size_t>(options.epochs));

  std::mt19937_64 rng(derive_seed(seed, "shuffle"));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n_train));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    // Linear decay to a tenth of the base rate settles the fit instead of
    // leaving it wandering in the SGD noise ball.
    const double lr = options.learning_rate *
                      std::max(0.1, 1.0 - static_cast<double>(epoch) /
                                              static_cast<double>(options.epochs));
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n_train; start += options.batch_size) {
      const Eigen::Index count = std::min<Eigen::Index>(options.batch_size, n_train - start);
      Eigen::MatrixXd zb(feat, count), ub(m, count);
      Eigen::VectorXd yb(count);
      for (Eigen::Index i = 0; i < count; ++i) {
        const Eigen::Index col = order[static_cast<std::size_t>(start + i)];
        zb.col(i) = z_std.col(col);
        ub.col(i) = u.col(col);
        yb(i) = y(col);
      }

      const Eigen::MatrixXd a_out = pair.a_net.forward_batch(zb);
      const Eigen::MatrixXd b_out = pair.b_net.forward_batch(zb);
      const Eigen::RowVectorXd pred =
          (a_out.array() * ub.array()).colwise().sum() + b_out.row(0).array();
      const Eigen::RowVectorXd resid = pred - yb.transpose();
      const Eigen::RowVectorXd scale = (2.0 / static_cast<double>(count)) * resid;

      const Eigen::MatrixXd dl_da = ub.array().rowwise() * scale.array();
      const Eigen::MatrixXd dl_db = scale;

      Mlp::Gradients a_grads = pair.a_net.zero_gradients();
      Mlp::Gradients b_grads = pair.b_net.zero_gradients();
      pair.a_net.backward_batch(zb, dl_da, &a_grads);
      pair.b_net.backward_batch(zb, dl_db, &b_grads);
      a_momentum.step(pair.a_net, a_grads, lr, options.momentum);
      b_momentum.step(pair.b_net, b_grads, lr, options.momentum);
    }

    const double loss = prediction_loss(pair.a_net, pair.b_net, z_std, u, y);
    if (!std::isfinite(loss)) {
      throw std::runtime_error("erm_fit: non-finite training loss at epoch " +
                               std::to_string(epoch) + "; lower the learning rate");
    }
    stats.epoch_losses.push_back(loss);
  }
  stats.final_loss = stats.epoch_losses.empty() ? stats.initial_loss : stats.epoch_losses.back();

  // Fold the feature standardization into the first layer so the returned
  // networks act on raw (state, grad V) features.
  for (Mlp* net : {&pair.a_net, &pair.b_net}) {
    net->w1() = net->w1() * sd.cwiseInverse().asDiagonal();
    net->b1() -= net->w1() * mean;
  }
  // Undo the target standardization through the linear output layers:
  // prediction = ahat'u + bhat maps back via ahat -> s ahat and
  // bhat -> s bhat + mean.
  pair.a_net.w2() *= y_scale;
  pair.a_net.b2() *= y_scale;
  pair.b_net.w2() *= y_scale;
  pair.b_net.b2() = y_scale * pair.b_net.b2().array() + y_mean;
  if (options.spectral_budget > 0.0) {
    spectral_normalize(pair.a_net, options.spectral_budget, options.power_iterations);
    spectral_normalize(pair.b_net, options.spectral_budget, options.power_iterations);
  }
  return {std::move(pair), std::move(stats)};
}

TrustSchedule trust_weights(int episodes, double steepness) {
  if (episodes < 1) throw std::invalid_argument("trust_weights: need at least one episode");
  if (!(steepness > 0.0)) throw std::invalid_argument("trust_weights: steepness must be positive");
  TrustSchedule schedule;
  schedule.episodes = episodes;
  schedule.steepness = steepness;
  schedule.weights.resize(static_cast<std::size_t>(episodes));
  const double midpoint = (static_cast<double>(episodes) + 1.0) / 2.0;
  for (int k = 1; k <= episodes; ++k) {
    const double w = 1.0 / (1.0 + std::exp(-steepness * (static_cast<double>(k) - midpoint)));
    schedule.weights[static_cast<std::size_t>(k - 1)] = std::clamp(w, 0.0, 1.0);
  }
  return schedule;
}

Eigen::VectorXd explore(const Eigen::VectorXd& u, double scale, double floor,
                        std::mt19937_64& rng) {
  const double magnitude = std::max(scale * u.norm(), floor);
  if (magnitude == 0.0) return u;
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::VectorXd out = u;
  for (Eigen::Index i = 0; i < u.size(); ++i) out(i) += magnitude * unit(rng);
  return out;
}

AugmentingQpWeights default_augmenting_weights(Eigen::Index m) {
  AugmentingQpWeights w;
  w.p = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  w.p.bottomRightCorner(m, m).setIdentity();
  w.q = Eigen::VectorXd::Zero(2 * m);
  w.r = 0.0;
  return w;
}

namespace {

double augment_objective(const AugmentingQpWeights& w, const Eigen::VectorXd& u_base,
                         const Eigen::VectorXd& delta) {
  Eigen::VectorXd stacked(u_base.size() + delta.size());
  stacked << u_base, delta;
  return 0.5 * stacked.dot(w.p * stacked) + w.q.dot(stacked) + w.r;
}

}  // namespace

AugmentResult augmenting_qp(const VdotAffine& vdot, double alpha_value,
                            const Eigen::VectorXd& u_base, const AugmentingQpWeights& weights,
                            double u_max) {
  const Eigen::Index m = u_base.size();
  if (m != 1) throw std::invalid_argument("augmenting_qp: only single-input systems supported");
  if (weights.p.rows() != 2 || weights.p.cols() != 2 || weights.q.size() != 2) {
    throw std::invalid_argument("augmenting_qp: weights must be sized for 2m = 2");
  }

  const double ub = u_base(0);
  const double phi1 = vdot.linear(0);
  const double rhs = -alpha_value - vdot.constant - phi1 * ub;

  // Quadratic in u' alone: 0.5 curvature u'^2 + slope u' (+ const).
  const double curvature = weights.p(1, 1);
  const double slope = weights.p(0, 1) * ub + weights.q(1);

  double lo = (u_max > 0.0) ? -u_max - ub : -std::numeric_limits<double>::infinity();
  double hi = (u_max > 0.0) ? u_max - ub : std::numeric_limits<double>::infinity();

  AugmentResult result;
  bool constraint_ok = true;
  if (phi1 > 0.0) {
    hi = std::min(hi, rhs / phi1);
  } else if (phi1 < 0.0) {
    lo = std::max(lo, rhs / phi1);
  } else if (rhs < 0.0) {
    constraint_ok = false;  // no input authority and the decrease is violated
  }
  if (lo > hi) constraint_ok = false;

  if (!constraint_ok) {
    // Fall back to the in-bounds u' that minimizes vdot.
    const double box_lo = (u_max > 0.0) ? -u_max - ub : 0.0;
    const double box_hi = (u_max > 0.0) ? u_max - ub : 0.0;
    double fallback = 0.0;
    if (phi1 > 0.0) {
      fallback = box_lo;
    } else if (phi1 < 0.0) {
      fallback = box_hi;
    }
    result.delta_u = Eigen::VectorXd::Constant(1, fallback);
    result.feasible = false;
    result.objective = augment_objective(weights, u_base, result.delta_u);
    return result;
  }

  double delta = 0.0;
  if (curvature > 0.0) {
    delta = std::clamp(-slope / curvature, lo, hi);
  } else if (slope > 0.0) {
    delta = lo;
  } else if (slope < 0.0) {
    delta = hi;
  } else {
    delta = std::clamp(0.0, lo, hi);
  }
  result.delta_u = Eigen::VectorXd::Constant(1, delta);
  result.feasible = true;
  result.objective = augment_objective(weights, u_base, result.delta_u);
  return result;
}

Controller make_augmented_controller(const QuadraticCLF& clf, const AffineSystem& est_sys,
                                     const Reference& ref, const Controller& baseline,
                                     const EstimatorPair& estimators, double trust, double u_max,
                                     ControllerLog* log) {
  const ResidualModel model = estimators.as_residual_model();
  return [clf, est_sys, ref, baseline, model, trust, u_max, log](const Eigen::VectorXd& x,
                                                                 double t) -> Eigen::VectorXd {
    const Eigen::VectorXd u0 = baseline(x, t);
    const VdotAffine form = vdot_affine(clf, est_sys, ref, x, t, &model);
    const double alpha = clf.decay.eval((x - ref.state(t)).norm());
    const AugmentResult aug =
        augmenting_qp(form, alpha, u0, default_augmenting_weights(u0.size()), u_max);
    if (!aug.feasible && log != nullptr) ++log->infeasible;
    return u0 + trust * aug.delta_u;
  };
}

double mean_abs_angle_error(const Trajectory& traj, const Reference& ref) {
  double total = 0.0;
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    total += std::abs(traj.states[k](0) - ref.state(traj.times[k])(0));
  }
  return total / static_cast<double>(traj.states.size());
}

double fit_noise_slack(const AffineSystem& est_sys, const QuadraticCLF& clf, const Reference& ref,
                       const Controller& controller, double u_max, double dt, double horizon,
                       double safety) {
  SimOptions options;
  options.input_limit = u_max;
  options.lyapunov = [&clf, &ref](const Eigen::VectorXd& x, double t) {
    return clf.value(x - ref.state(t));
  };
  Eigen::VectorXd x0 = ref.state(0.0);
  x0(0) += 0.1;
  const Trajectory traj = integrate(est_sys, controller, x0, horizon, dt, options);
  const std::vector<double> fd = measure_vdot(traj, dt);

  double worst = 0.0;
  for (std::size_t k = 0; k < traj.inputs.size(); ++k) {
    const double analytic = vdot_estimated(clf, est_sys, ref, traj.states[k], traj.inputs[k],
                                           traj.times[k])
                                .total;
    worst = std::max(worst, std::abs(fd[k] - analytic));
  }
  return safety * worst;
}

namespace {

double mean_heldout_loss(const Dataset& data, const std::vector<std::size_t>& heldout) {
  if (heldout.empty()) return 0.0;
  double total = 0.0;
  for (const std::size_t i : heldout) total += observed_loss(data[i]);
  return total / static_cast<double>(heldout.size());
}

}  // namespace

DaclyfResult daclyf(const ExperimentConfig& config) {
  validate(config);

  DaclyfResult result;
  const AffineSystem est_sys = pendulum_system(config.estimated);
  result.true_params = sample_true_params(config.estimated, config.perturbation_scale,
                                          derive_seed(config.seed, "plant"));
  const AffineSystem true_sys = pendulum_system(result.true_params);

  Eigen::MatrixXd q_weight = Eigen::Vector2d{config.lqr_q_angle, config.lqr_q_rate}.asDiagonal();
  Eigen::MatrixXd r_weight = Eigen::MatrixXd::Constant(1, 1, config.lqr_r);
  result.synthesis = synthesize_clf(est_sys, q_weight, r_weight);
  const QuadraticCLF& clf = result.synthesis.clf;

  const Reference ref = sine_reference(config.reference_amplitude, config.reference_frequency);
  const double u_max = config.estimated.input_limit;

  result.budget = pendulum_budget(result.true_params, config.estimated, config.budget_safety);
  if (config.override_lip_actuation >= 0.0) result.budget.lip_actuation = config.override_lip_actuation;
  if (config.override_lip_drift >= 0.0) result.budget.lip_drift = config.override_lip_drift;
  if (config.override_sup_actuation >= 0.0) result.budget.sup_actuation = config.override_sup_actuation;
  if (config.override_sup_drift >= 0.0) result.budget.sup_drift = config.override_sup_drift;
  result.fitted_noise_slack =
      config.epsilon_num >= 0.0
          ? config.epsilon_num
          : fit_noise_slack(est_sys, clf, ref,
                            make_pd_controller(config.pd_kp, config.pd_kd, ref,
                                               config.estimated.input_limit),
                            config.estimated.input_limit, config.dt,
                            std::min(config.horizon, 5.0), config.epsilon_num_safety);
  result.budget.noise_slack = result.fitted_noise_slack;

  const Controller baseline =
      make_pd_controller(config.pd_kp, config.pd_kd, ref, u_max);

  SimOptions sim_options;
  sim_options.input_limit = u_max;
  sim_options.lyapunov = [&clf, ref](const Eigen::VectorXd& x, double t) {
    return clf.value(x - ref.state(t));
  };

  const TrainOptions train_options = train_options_from(config);
  TrustSchedule schedule;
  if (config.episodes >= 1) {
    schedule = trust_weights(config.episodes, config.trust_steepness);
    result.trust = schedule.weights;
  }

  auto sample_x0 = [&](const std::string& tag, std::uint64_t index) {
    std::mt19937_64 rng(derive_seed(config.seed, tag, index));
    std::uniform_real_distribution<double> box(-config.x0_box, config.x0_box);
    Eigen::VectorXd x0 = ref.state(0.0);
    for (Eigen::Index i = 0; i < x0.size(); ++i) x0(i) += box(rng);
    return x0;
  };

  for (int episode = 1; episode <= config.episodes; ++episode) {
    EpisodeMetrics metrics;
    metrics.episode = episode;

    // Controller deployed in this experiment: u_{k-1}.
    ControllerLog episode_log;
    Controller deployed =
        episode == 1 ? baseline
                     : make_augmented_controller(
                           clf, est_sys, ref, baseline, *result.estimators,
                           schedule.weights[static_cast<std::size_t>(episode - 2)], u_max,
                           &episode_log);

    auto explore_rng = std::make_shared<std::mt19937_64>(
        derive_seed(config.seed, "explore", static_cast<std::uint64_t>(episode)));
    const double floor = config.explore_floor_factor * u_max;
    Controller exploring = [deployed, explore_rng, scale = config.explore_scale,
                            floor](const Eigen::VectorXd& x, double t) {
      return explore(deployed(x, t), scale, floor, *explore_rng);
    };

    const Eigen::VectorXd x0 = sample_x0("x0", static_cast<std::uint64_t>(episode));
    Trajectory traj = integrate(true_sys, exploring, x0, config.horizon, config.dt, sim_options);
    const std::vector<double> vdot = measure_vdot(traj, config.dt);
    traj.vdot_measured = vdot;
    metrics.first_sample = result.dataset.size();

    const ResidualModel prev_model =
        result.estimators ? result.estimators->as_residual_model() : ResidualModel{};
    const bool has_prev = result.estimators.has_value();

    std::vector<std::size_t> heldout;
    for (std::size_t i = 0; i < traj.inputs.size(); ++i) {
      Sample s;
      s.x = traj.states[i];
      s.u = traj.inputs[i];
      s.t = traj.times[i];
      s.grad_v = clf.gradient(traj.states[i] - ref.state(traj.times[i]));
      s.vdot_measured = vdot[i];
      s.vdot_hat_base = vdot_estimated(clf, est_sys, ref, s.x, s.u, s.t).total;
      if (has_prev) {
        s.a_hat = prev_model.a(s.x, s.grad_v);
        s.b_hat = prev_model.b(s.x, s.grad_v);
        s.vdot_hat = s.vdot_hat_base + s.a_hat.dot(s.u) + s.b_hat;
        s.has_estimates = true;
      } else {
        s.vdot_hat = s.vdot_hat_base;
      }
      const std::size_t global_index = result.dataset.size();
      if ((i + 1) % static_cast<std::size_t>(config.holdout_every) == 0) {
        heldout.push_back(global_index);
      }
      result.dataset.append(std::move(s));
    }

    metrics.heldout_before = mean_heldout_loss(result.dataset, heldout);

    // Train on everything except this episode's held-out samples.
    std::unordered_set<std::size_t> heldout_set(heldout.begin(), heldout.end());
    std::vector<std::size_t> train_indices;
    train_indices.reserve(result.dataset.size() - heldout.size());
    for (std::size_t i = 0; i < result.dataset.size(); ++i) {
      if (heldout_set.find(i) == heldout_set.end()) train_indices.push_back(i);
    }

    auto [fitted, stats] =
        erm_fit(result.dataset, train_indices, train_options,
                derive_seed(config.seed, "erm", static_cast<std::uint64_t>(episode)),
                result.estimators ? &*result.estimators : nullptr);
    result.estimators = std::move(fitted);
    const ResidualModel model = result.estimators->as_residual_model();
    result.dataset.refresh(&model);

    metrics.heldout_after = mean_heldout_loss(result.dataset, heldout);
    metrics.dataset_size = result.dataset.size();
    metrics.trust = schedule.weights[static_cast<std::size_t>(episode - 1)];
    metrics.train_initial_loss = stats.initial_loss;
    metrics.train_final_loss = stats.final_loss;
    metrics.mean_abs_angle_error = mean_abs_angle_error(traj, ref);
    metrics.saturations = traj.saturation_count;
    metrics.infeasible = episode_log.infeasible;
    result.episodes.push_back(metrics);
    result.episode_trajectories.push_back(std::move(traj));
  }

  // Evaluation runs without exploration, all from the same initial state.
  const Eigen::VectorXd eval_x0 = sample_x0("eval-x0", 0);
  result.eval_baseline = integrate(true_sys, baseline, eval_x0, config.horizon, config.dt,
                                   sim_options);
  const Controller qp = make_qp_controller(clf, est_sys, ref, u_max);
  result.eval_qp = integrate(true_sys, qp, eval_x0, config.horizon, config.dt, sim_options);

  Controller final_controller = baseline;
  if (result.estimators) {
    final_controller =
        make_augmented_controller(clf, est_sys, ref, baseline, *result.estimators,
                                  schedule.weights.back(), u_max);
  }
  result.eval_final =
      integrate(true_sys, final_controller, eval_x0, config.horizon, config.dt, sim_options);

  result.mean_error_baseline = mean_abs_angle_error(result.eval_baseline, ref);
  result.mean_error_qp = mean_abs_angle_error(result.eval_qp, ref);
  result.mean_error_final = mean_abs_angle_error(result.eval_final, ref);

  // Measured vdot series for export and downstream checks.
  result.eval_baseline.vdot_measured = measure_vdot(result.eval_baseline, config.dt);
  result.eval_qp.vdot_measured = measure_vdot(result.eval_qp, config.dt);
  result.eval_final.vdot_measured = measure_vdot(result.eval_final, config.dt);

  return result;
}

}  // namespace pss
