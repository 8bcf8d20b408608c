#pragma once
// Finite-difference check of the analytic MLP gradient.
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "lobfeat/model.hpp"

namespace oracle {

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t params = 0;
};

struct GradDraw {
  Eigen::MatrixXd x;
  std::vector<int> cls;
  std::vector<double> reg;
  std::vector<Eigen::MatrixXd> masks;
};

inline double draw_loss(const lobfeat::model::ModelState& s, const GradDraw& d) {
  const auto c = lobfeat::model::forward(s, d.x, d.masks);
  const bool reg = s.config.has_regression();
  const double lam = reg ? s.config.lambda : 1.0;
  return lobfeat::model::dual_loss(c.probs, d.cls, c.regression,
                                   reg ? std::span<const double>(d.reg) : std::span<const double>{},
                                   lam, s.config.log_clamp)
      .total;
}

// Random inputs and targets for `state`; dropout masks fixed so the loss is
// a smooth function of the parameters.
inline GradDraw random_draw(const lobfeat::model::ModelState& state, std::size_t batch,
                            std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  GradDraw d;
  d.x.resize(static_cast<Eigen::Index>(state.input_dim), static_cast<Eigen::Index>(batch));
  for (Eigen::Index i = 0; i < d.x.size(); ++i) d.x.data()[i] = z(rng);
  std::uniform_int_distribution<int> cls(0, static_cast<int>(state.config.classes()) - 1);
  std::uniform_real_distribution<double> horizon(1.0, 20.0);
  for (std::size_t j = 0; j < batch; ++j) {
    d.cls.push_back(cls(rng));
    d.reg.push_back(horizon(rng) / 20.0);
  }
  d.masks = lobfeat::model::sample_dropout(state, batch, rng());
  return d;
}

// Analytic gradient against a fourth-order central difference. The relative
// error per parameter is |a - n| / max(|a|, |n|, floor).
inline GradCheck check_gradient(lobfeat::model::ModelState state, const GradDraw& d,
                                double h = 1e-4, double floor = 1e-7) {
  using namespace lobfeat::model;
  const auto cache = forward(state, d.x, d.masks);
  const auto g = dual_loss_gradient(state.config, cache, d.cls, d.reg,
                                    static_cast<double>(d.x.cols()));
  const auto analytic = backward(state, cache, g);

  GradCheck out;
  out.params = state.params.size();
  for (std::size_t i = 0; i < state.params.size(); ++i) {
    const double p0 = state.params[i];
    auto at = [&](double delta) {
      state.params[i] = p0 + delta;
      const double l = draw_loss(state, d);
      state.params[i] = p0;
      return l;
    };
    const double numeric =
        (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
    const double a = analytic[i];
    const double denom = std::max({std::fabs(a), std::fabs(numeric), floor});
    out.max_rel_error = std::max(out.max_rel_error, std::fabs(a - numeric) / denom);
  }
  return out;
}

}  // namespace oracle
