// A user-defined problem plugged into the online-to-nonconvex conversion.
//
// f(x) = exp(||x - c||_1) - 1 has ||grad f|| <= sqrt(d) (1 + f - f*), so it is
// (M0, M1)-Lipschitz with M0 = M1 = sqrt(d) but not Lipschitz.

#include <cmath>
#include <memory>

#include <fmt/format.h>

#include "glopt/glopt.hpp"

namespace {

class ExpL1 final : public glopt::Problem {
 public:
  ExpL1(glopt::Vec c, double R) : c_vec_(std::move(c)) {
    const double s = std::sqrt(static_cast<double>(c_vec_.size()));
    c_.R = R;
    c_.M0 = c_.M1 = c_.G0 = c_.G1 = s;
    c_.L0 = c_.L1 = s;
    c_.fstar = 0.0;
    c_.xstar = c_vec_;
    c_.F = std::exp(s * (R + glopt::norm(c_vec_))) - 1.0;
    c_.validate();
  }
  using Problem::subgrad;
  std::string id() const override { return "exp_l1"; }
  std::size_t dim() const override { return c_vec_.size(); }
  double value(const glopt::Vec& x) const override { return std::exp(l1(x)) - 1.0; }
  void subgrad(const glopt::Vec& x, glopt::Vec& out) const override {
    const double e = std::exp(l1(x));
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = x[i] - c_vec_[i];
      out[i] = r > 0 ? e : (r < 0 ? -e : 0.0);
    }
  }

 private:
  double l1(const glopt::Vec& x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - c_vec_[i]);
    return s;
  }
  glopt::Vec c_vec_;
};

}  // namespace

int main() {
  using namespace glopt;
  auto problem = std::make_shared<ExpL1>(Vec{0.3, -0.2}, 1.0);
  StochOracle oracle(problem, NoiseModel::u_additive, 0.5);

  const double eps = 1e-2;
  const Schedule s = make_schedule(ScheduleKind::two_stage, oracle.constants(), eps);
  for (auto kind : {LearnerKind::solo_scalar, LearnerKind::ogd_adagrad}) {
    ConversionOptions opt;
    opt.seed = 1;
    opt.record.log_rows = 2;
    const RunRecord rec = run_conversion(oracle, make_learner(kind, oracle.dim(), oracle.constants().R), s, opt);
    fmt::print("{:<12} K={} final gap {:.3g}\n", to_string(kind), rec.steps, rec.final_gap);
    for (const auto& row : rec.rows) fmt::print("    k={:<8} gap {:.4g}\n", row.k, row.f_gap);
  }
}
