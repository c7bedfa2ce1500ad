#include "deepir/inversion.hpp"

#include <Eigen/Core>

#include <cmath>
#include <deque>
#include <fstream>
#include <iomanip>
#include <random>
#include <string>

#include "deepir/backbone.hpp"
#include "deepir/error.hpp"

namespace deepir {

namespace {

using Vec = Eigen::VectorXd;

constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 40;

/// Objective wrapper that reshapes flat vectors into the level L-1 tensor.
class Objective {
 public:
  Objective(const FeatureMap& target, const WeightsBundle& w, const FeatureMap& like)
      : target_(target), weights_(w), like_(like) {}

  double value(const Vec& x) const {
    const double f = feature_loss(to_map(x), target_, weights_);
    check(f);
    return f;
  }

  double value_and_gradient(const Vec& x, Vec& grad) const {
    auto lg = loss_and_gradient(to_map(x), target_, weights_);
    check(lg.loss);
    grad = Eigen::Map<const Vec>(lg.gradient.data().data(), static_cast<Eigen::Index>(lg.gradient.size()));
    return lg.loss;
  }

  FeatureMap to_map(const Vec& x) const {
    return FeatureMap(like_.height(), like_.width(), like_.channels(), std::vector<double>(x.begin(), x.end()),
                      like_.layer());
  }

 private:
  static void check(double f) {
    if (!std::isfinite(f)) throw NumericError("feature inversion produced a non-finite loss");
  }

  const FeatureMap& target_;
  const WeightsBundle& weights_;
  const FeatureMap& like_;
};

struct Curvature {
  Vec s;
  Vec y;
  double rho;
};

/// Two-loop recursion for the L-BFGS direction -H * g.
Vec lbfgs_direction(const Vec& g, const std::deque<Curvature>& memory) {
  Vec q = g;
  std::vector<double> alpha(memory.size());
  for (std::size_t k = memory.size(); k-- > 0;) {
    alpha[k] = memory[k].rho * memory[k].s.dot(q);
    q -= alpha[k] * memory[k].y;
  }
  if (!memory.empty()) {
    const auto& last = memory.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t k = 0; k < memory.size(); ++k) {
    const double beta = memory[k].rho * memory[k].y.dot(q);
    q += (alpha[k] - beta) * memory[k].s;
  }
  return -q;
}

void project(Vec& x, bool enabled) {
  if (enabled) x = x.cwiseMax(0.0);
}

}  // namespace

InversionResult invert(const FeatureMap& target, const WeightsBundle& w, const FeatureMap& init,
                       const InversionConfig& cfg) {
  if (cfg.max_iterations < 1) throw ArgumentError("max_iterations must be at least 1");
  if (!(cfg.tolerance > 0.0)) throw ArgumentError("tolerance must be positive");
  if (cfg.history < 1) throw ArgumentError("L-BFGS history must be at least 1");

  Objective objective(target, w, init);
  Vec x = Eigen::Map<const Vec>(init.data().data(), static_cast<Eigen::Index>(init.size()));
  project(x, cfg.project_nonneg);
  Vec g;
  double f = objective.value_and_gradient(x, g);

  InversionResult result;
  result.loss_trace.push_back(f);
  std::deque<Curvature> memory;
  double gd_step = 1.0 / std::max(1.0, g.lpNorm<Eigen::Infinity>());

  while (result.iterations < cfg.max_iterations) {
    if (f == 0.0 || g.squaredNorm() == 0.0) {
      result.converged = true;
      break;
    }
    Vec d;
    double t = 1.0;
    if (cfg.optimizer == Optimizer::Lbfgs && !memory.empty()) {
      d = lbfgs_direction(g, memory);
      if (!(g.dot(d) < 0.0)) {
        memory.clear();
        d = -g;
        t = gd_step;
      }
    } else {
      d = -g;
      t = cfg.optimizer == Optimizer::Lbfgs ? 1.0 / std::max(1.0, g.norm()) : gd_step;
    }

    double f_new = f;
    Vec x_new;
    bool accepted = false;
    for (int k = 0; k < kMaxBacktracks; ++k, t *= 0.5) {
      x_new = x + t * d;
      project(x_new, cfg.project_nonneg);
      f_new = objective.value(x_new);
      const double decrease = cfg.project_nonneg ? kArmijo * g.dot(x_new - x) : kArmijo * t * g.dot(d);
      if (f_new <= f + decrease && f_new < f) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (!memory.empty()) {
        // Quasi-Newton direction failed the line search; retry along -g.
        memory.clear();
        continue;
      }
      result.converged = true;
      break;
    }

    Vec g_new;
    f_new = objective.value_and_gradient(x_new, g_new);
    if (cfg.optimizer == Optimizer::Lbfgs) {
      Vec s = x_new - x;
      Vec y = g_new - g;
      const double sy = s.dot(y);
      if (sy > 1e-12 * s.norm() * y.norm()) {
        memory.push_back({std::move(s), std::move(y), 1.0 / sy});
        if (static_cast<int>(memory.size()) > cfg.history) memory.pop_front();
      }
    } else {
      gd_step = 2.0 * t;
    }

    const double rel = (f - f_new) / std::max(f, 1e-300);
    x = std::move(x_new);
    g = std::move(g_new);
    f = f_new;
    result.loss_trace.push_back(f);
    ++result.iterations;
    if (rel < cfg.tolerance) {
      result.converged = true;
      break;
    }
  }

  result.features = objective.to_map(x);
  return result;
}

FeatureMap random_init(const FeatureMap& like, double lo, double hi, std::uint64_t seed) {
  if (!(hi > lo)) throw ArgumentError("random init range must be non-empty");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  FeatureMap out(like.height(), like.width(), like.channels(), like.layer());
  for (double& v : out.data()) v = dist(rng);
  return out;
}

void write_loss_trace(const std::filesystem::path& path, std::span<const double> trace) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "iteration,loss\n" << std::setprecision(17);
  for (std::size_t k = 0; k < trace.size(); ++k) out << k << ',' << trace[k] << '\n';
}

}  // namespace deepir
