#pragma once

// Trajectory records shared by the conversion framework and the direct optimizers.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "glopt/numerics.hpp"
#include "glopt/problems.hpp"
#include "glopt/schedule.hpp"

namespace glopt {

struct StepRow {
  std::uint64_t k = 0;
  double f_gap = 0.0;
  double f_gap_avg_iterate = 0.0;
  double step_norm = 0.0;
  double effective_stepsize = 0.0;
  double regret_running = std::numeric_limits<double>::quiet_NaN();  // Reg_k / pi_k; NaN when not defined
  std::int64_t wall_ns = 0;
};

struct RescaleEvent {
  std::uint64_t k = 0;
  double lambda = 1.0;
};

struct RecordOptions {
  std::uint64_t stride = 1;     // keep every stride-th row (the last row is always kept)
  unsigned log_rows = 0;        // if > 0: keep about this many rows per decade of k instead of a stride
  bool keep_vectors = false;    // x/z/g histories
  double target_gap = -1.0;     // record the first k with gap <= target (last or averaged iterate)
  bool stop_at_target = false;  // end the run at the first hit
  bool timing = false;          // fill wall_ns; otherwise 0 so outputs stay byte-identical
};

struct RunRecord {
  std::string method;
  std::string problem_id;
  std::uint64_t seed = 0;
  std::uint64_t run_id = 0;
  KeyValues params;  // schedule snapshot or derived optimizer parameters

  std::vector<Vec> x_history;  // x_0, x_1, ..., when keep_vectors
  std::vector<Vec> z_history;  // z_1, z_2, ...
  std::vector<Vec> g_history;  // scaled gradients alpha_k pi_k ghat_k, in the current rescale units
  std::vector<double> gap_history;
  std::vector<StepRow> rows;
  std::vector<RescaleEvent> rescales;

  std::uint64_t steps = 0;
  Vec x_final;
  Vec x_avg;  // (1/(K+1)) sum_{k=0}^K x_k
  double final_gap = 0.0;
  double final_gap_avg = 0.0;
  double min_gap = std::numeric_limits<double>::infinity();
  std::uint64_t min_gap_k = 0;
  Vec x_min_gap;
  double gap0 = 0.0;

  // First k whose last (resp. averaged) iterate reached target_gap; 0 if never.
  std::uint64_t first_hit = 0;
  std::uint64_t first_hit_avg = 0;

  // Conversion runs only. The regret and pi are reported in units of exp(log_offset).
  double regret = std::numeric_limits<double>::quiet_NaN();
  double log_offset = 0.0;
  double log_pi_final = 0.0;
  double pi0 = 0.0;
  std::int64_t wall_ns = 0;

  std::uint64_t best_hit() const {
    if (first_hit == 0) return first_hit_avg;
    if (first_hit_avg == 0) return first_hit;
    return std::min(first_hit, first_hit_avg);
  }
};

// Incremental bookkeeping of rows, averages, targets and minima. The hot path does not allocate.
class Recorder {
 public:
  Recorder(const Problem& problem, const RecordOptions& opt, RunRecord& rec)
      : p_(problem), opt_(opt), rec_(rec), sum_(problem.dim()), avg_(problem.dim()) {
    if (opt_.stride == 0) opt_.stride = 1;
    start_ = std::chrono::steady_clock::now();
  }

  void start(const Vec& x0) {
    for (std::size_t i = 0; i < sum_.size(); ++i) sum_[i] = x0[i];
    rec_.gap0 = gap_of(x0);
    if (opt_.keep_vectors) rec_.x_history.push_back(x0);
    note_min(0, x0, rec_.gap0);
  }

  double gap_of(const Vec& x) const { return std::max(0.0, p_.gap(x)); }

  // Registers iterate x_k with its gap; returns true when the run should stop.
  // `regret` is evaluated on kept rows only.
  template <class RegretFn>
  bool iterate(std::uint64_t k, const Vec& x, double gap, double step_norm, double eff, bool is_last, RegretFn&& regret) {
    for (std::size_t i = 0; i < sum_.size(); ++i) sum_[i] += x[i];
    const double inv = 1.0 / static_cast<double>(k + 1);
    for (std::size_t i = 0; i < sum_.size(); ++i) avg_[i] = sum_[i] * inv;
    const double gap_avg = gap_of(avg_);
    note_min(k, x, gap);
    if (opt_.keep_vectors) {
      rec_.x_history.push_back(x);
      rec_.gap_history.push_back(gap);
    }
    bool hit = false;
    if (opt_.target_gap >= 0.0) {
      if (gap <= opt_.target_gap && rec_.first_hit == 0) rec_.first_hit = k, hit = true;
      if (gap_avg <= opt_.target_gap && rec_.first_hit_avg == 0) rec_.first_hit_avg = k, hit = true;
    }
    const bool stop = hit && opt_.stop_at_target;
    if (is_last || stop || keep_row(k)) {
      StepRow row;
      row.k = k;
      row.f_gap = gap;
      row.f_gap_avg_iterate = gap_avg;
      row.step_norm = step_norm;
      row.effective_stepsize = eff;
      row.regret_running = regret();
      if (opt_.timing)
        row.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start_).count();
      rec_.rows.push_back(row);
    }
    rec_.steps = k;
    rec_.final_gap = gap;
    rec_.final_gap_avg = gap_avg;
    return stop;
  }

  void finish(const Vec& x_last) {
    rec_.x_final = x_last;
    rec_.x_avg = avg_;
    if (rec_.steps == 0) rec_.x_avg = x_last;
    if (opt_.timing)
      rec_.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start_).count();
  }

  const RecordOptions& options() const noexcept { return opt_; }

 private:
  bool keep_row(std::uint64_t k) const {
    if (opt_.log_rows == 0) return k % opt_.stride == 0;
    const double n = opt_.log_rows;
    if (k <= opt_.log_rows) return true;
    return std::floor(n * std::log10(static_cast<double>(k))) > std::floor(n * std::log10(static_cast<double>(k - 1)));
  }

  void note_min(std::uint64_t k, const Vec& x, double gap) {
    if (gap < rec_.min_gap) {
      rec_.min_gap = gap;
      rec_.min_gap_k = k;
      if (rec_.x_min_gap.size() != x.size()) rec_.x_min_gap = Vec(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) rec_.x_min_gap[i] = x[i];
    }
  }

  const Problem& p_;
  RecordOptions opt_;
  RunRecord& rec_;
  Vec sum_;
  Vec avg_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace glopt
