// Central finite-difference gradient checking for scalar functions of the
// model parameters.
#pragma once

#include "symdis/model.hpp"

#include <functional>
#include <string>

namespace gradcheck {

using symdis::Mat;
using symdis::ModelParams;

struct Result {
  double max_rel_err = 0.0;
  std::string worst;  // "<param>(r,c)" of the worst entry
};

// Compares analytic gradients (name -> Mat) against central differences of
// `f` with step h. Relative error per entry: |a - fd| / max(1, |a|).
inline Result compare(const ModelParams& params,
                      const std::function<double(const ModelParams&)>& f,
                      const std::function<Mat(const std::string&)>& analytic_grad,
                      double h = 1e-5) {
  Result res;
  ModelParams work = params;
  work.for_each([&](const std::string& name, Mat& value) {
    Mat analytic = analytic_grad(name);
    for (Eigen::Index r = 0; r < value.rows(); ++r)
      for (Eigen::Index c = 0; c < value.cols(); ++c) {
        double saved = value(r, c);
        value(r, c) = saved + h;
        double up = f(work);
        value(r, c) = saved - h;
        double down = f(work);
        value(r, c) = saved;
        double fd = (up - down) / (2.0 * h);
        double a = analytic(r, c);
        double rel = std::abs(a - fd) / std::max(1.0, std::abs(a));
        if (rel > res.max_rel_err) {
          res.max_rel_err = rel;
          res.worst = name + "(" + std::to_string(r) + "," + std::to_string(c) + ")";
        }
      }
  });
  return res;
}

}  // namespace gradcheck
