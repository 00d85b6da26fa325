#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace mpflow::ode {

using State = Eigen::VectorXd;
using Function = std::function<void(double t, const State& y, State& dydt)>;

struct Options {
    double atol = 1e-10;
    double rtol = 1e-10;
    double h_init = 0.0;  // 0 selects the starting step automatically
    double h_min = 1e-14;
    double h_max = 0.0;   // 0 means unbounded
    long max_steps = 500000;
    // Only the leading components enter the error norm (0 = all).
    int error_components = 0;
};

struct Stats {
    long accepted = 0;
    long rejected = 0;
    long evaluations = 0;
};

// Piecewise Dormand-Prince solution with the 4th-order continuous extension
// on every accepted step.
class DenseSolution {
public:
    DenseSolution() = default;
    explicit DenseSolution(double t0, State y0);

    std::size_t steps() const { return times_.size() - 1; }
    std::size_t dimension() const { return states_.front().size(); }
    double t_begin() const { return times_.front(); }
    double t_end() const { return times_.back(); }
    const std::vector<double>& times() const { return times_; }
    const std::vector<State>& states() const { return states_; }

    State operator()(double t) const;
    // Evaluates inside a given step; avoids the binary search.
    State eval_in_step(std::size_t step, double t) const;
    std::size_t locate(double t) const;

    void append(double t1, State y1, Eigen::Matrix<double, Eigen::Dynamic, 7> stages);
    void drop_last();

private:
    std::vector<double> times_;
    std::vector<State> states_;
    std::vector<Eigen::Matrix<double, Eigen::Dynamic, 7>> stages_;
};

enum class Control { Continue, Stop };

// Called after every accepted step with the solution so far.
using Observer = std::function<Control(const DenseSolution&)>;

// Adaptive embedded RK 5(4) with PI step-size control. Throws
// Error{StepSizeUnderflow} when the step falls below h_min.
DenseSolution integrate(const Function& f, double t0, const State& y0, double t_end,
                        const Options& opts, Stats* stats = nullptr,
                        const Observer& observer = {});

// Replaces the final step of `sol` by a single Dormand-Prince step from its
// start to `t_new` (which must lie inside that step).
void retake_last_step(const Function& f, DenseSolution& sol, double t_new);

// Fixed-step Dormand-Prince (5th-order weights). The result is a smooth
// function of y0, which matters when it is differentiated numerically.
State integrate_fixed(const Function& f, double t0, const State& y0, double t1, int n_steps);

}  // namespace mpflow::ode
