// Adaptive-moment stochastic gradient optimizer (Adam with bias correction).
#pragma once

#include "symdis/core.hpp"

#include <cmath>
#include <map>
#include <string>

namespace symdis {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Per-parameter first/second moment accumulators, keyed by parameter name.
class AdamState {
 public:
  explicit AdamState(AdamConfig cfg = {}) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }
  long step_count() const { return step_; }

  void set_lr(double lr) {
    require(lr > 0 && std::isfinite(lr), "optimizer: learning rate must be positive");
    cfg_.lr = lr;
  }

  // Call once per optimization step for every parameter, after begin_step().
  // lr_scale rescales the step for this parameter (parameter-group rate).
  void update(const std::string& name, Mat& param, const Mat& grad, double lr_scale = 1.0) {
    if (!grad.allFinite())
      throw ValidationError("optimizer: non-finite gradient for '" + name +
                            "', step rejected");
    require(grad.rows() == param.rows() && grad.cols() == param.cols(),
            "optimizer: gradient shape " + shape_str(grad) +
                " does not match parameter '" + name + "' " + shape_str(param));
    require(lr_scale > 0 && std::isfinite(lr_scale), "optimizer: bad lr scale");
    Moments& m = moments_.try_emplace(name, Moments{Mat::Zero(param.rows(), param.cols()),
                                                    Mat::Zero(param.rows(), param.cols())})
                     .first->second;
    m.first = cfg_.beta1 * m.first + (1.0 - cfg_.beta1) * grad;
    m.second = cfg_.beta2 * m.second + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(cfg_.beta1, double(step_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, double(step_));
    Mat mhat = m.first / c1;
    Mat vhat = m.second / c2;
    param -= (cfg_.lr * lr_scale) *
             mhat.cwiseQuotient((vhat.cwiseSqrt().array() + cfg_.eps).matrix());
  }

  void begin_step() { ++step_; }

 private:
  struct Moments {
    Mat first;
    Mat second;
  };
  AdamConfig cfg_;
  std::map<std::string, Moments> moments_;
  long step_ = 0;
};

}  // namespace symdis
