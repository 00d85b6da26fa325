#include "mpflow/ode.hpp"

#include "mpflow/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mpflow::ode {

namespace {

using Stages = Eigen::Matrix<double, Eigen::Dynamic, 7>;

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

// Continuous extension: y(t0 + th*h) = y0 + h * K * (P * [th, th^2, th^3, th^4]).
constexpr double P[7][4] = {
    {1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0,
     -12715105075.0 / 11282082432.0},
    {0.0, 0.0, 0.0, 0.0},
    {0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0,
     87487479700.0 / 32700410799.0},
    {0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0,
     -10690763975.0 / 1880347072.0},
    {0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0,
     701980252875.0 / 199316789632.0},
    {0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0,
     -1453857185.0 / 822651844.0},
    {0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0, 69997945.0 / 29380423.0},
};

// One step from (t, y) with first stage k1 = f(t, y). Fills K and returns y1.
State dp_step(const Function& f, double t, const State& y, double h, Stages& K, long* evals) {
    const Eigen::Index n = y.size();
    State k(n), y1(n);
    f(t + c2 * h, y + h * (a21 * K.col(0)), k);
    K.col(1) = k;
    f(t + c3 * h, y + h * (a31 * K.col(0) + a32 * K.col(1)), k);
    K.col(2) = k;
    f(t + c4 * h, y + h * (a41 * K.col(0) + a42 * K.col(1) + a43 * K.col(2)), k);
    K.col(3) = k;
    f(t + c5 * h, y + h * (a51 * K.col(0) + a52 * K.col(1) + a53 * K.col(2) + a54 * K.col(3)),
      k);
    K.col(4) = k;
    f(t + h,
      y + h * (a61 * K.col(0) + a62 * K.col(1) + a63 * K.col(2) + a64 * K.col(3) +
               a65 * K.col(4)),
      k);
    K.col(5) = k;
    y1 = y + h * (b1 * K.col(0) + b3 * K.col(2) + b4 * K.col(3) + b5 * K.col(4) +
                  b6 * K.col(5));
    f(t + h, y1, k);
    K.col(6) = k;
    if (evals) *evals += 6;
    return y1;
}

double error_norm(const State& y0, const State& y1, const Stages& K, double h,
                  const Options& o) {
    const State err = h * (e1 * K.col(0) + e3 * K.col(2) + e4 * K.col(3) + e5 * K.col(4) +
                           e6 * K.col(5) + e7 * K.col(6));
    const Eigen::Index m =
        o.error_components > 0 ? std::min<Eigen::Index>(o.error_components, err.size()) : err.size();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const double sc = o.atol + o.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        acc += (err[i] / sc) * (err[i] / sc);
    }
    return std::sqrt(acc / static_cast<double>(m));
}

// Hairer's starting-step heuristic.
double initial_step(const Function& f, double t0, const State& y0, const State& f0,
                    double direction, const Options& o, long* evals) {
    State sc = (o.atol + o.rtol * y0.array().abs()).matrix();
    const double d0 = (y0.array() / sc.array()).matrix().norm() / std::sqrt(y0.size());
    const double d1 = (f0.array() / sc.array()).matrix().norm() / std::sqrt(y0.size());
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    State f1(y0.size());
    f(t0 + direction * h0, y0 + direction * h0 * f0, f1);
    if (evals) ++*evals;
    const double d2 =
        ((f1 - f0).array() / sc.array()).matrix().norm() / std::sqrt(y0.size()) / h0;
    const double h1 = (std::max(d1, d2) <= 1e-15)
                          ? std::max(1e-6, h0 * 1e-3)
                          : std::pow(0.01 / std::max(d1, d2), 1.0 / 5.0);
    return std::min(100 * h0, h1);
}

}  // namespace

DenseSolution::DenseSolution(double t0, State y0) {
    times_.push_back(t0);
    states_.push_back(std::move(y0));
}

void DenseSolution::append(double t1, State y1, Stages stages) {
    times_.push_back(t1);
    states_.push_back(std::move(y1));
    stages_.push_back(std::move(stages));
}

void DenseSolution::drop_last() {
    if (stages_.empty()) return;
    times_.pop_back();
    states_.pop_back();
    stages_.pop_back();
}

std::size_t DenseSolution::locate(double t) const {
    if (steps() == 0) return 0;
    const bool forward = t_end() >= t_begin();
    std::size_t idx;
    if (forward) {
        auto it = std::upper_bound(times_.begin(), times_.end(), t);
        idx = it == times_.begin() ? 0 : static_cast<std::size_t>(it - times_.begin()) - 1;
    } else {
        auto it = std::upper_bound(times_.begin(), times_.end(), t, std::greater<double>());
        idx = it == times_.begin() ? 0 : static_cast<std::size_t>(it - times_.begin()) - 1;
    }
    return std::min(idx, steps() - 1);
}

State DenseSolution::eval_in_step(std::size_t step, double t) const {
    const double t0 = times_[step];
    const double h = times_[step + 1] - t0;
    const double th = (t - t0) / h;
    if (th == 0.0) return states_[step];
    if (th == 1.0) return states_[step + 1];
    const double pw[4] = {th, th * th, th * th * th, th * th * th * th};
    Eigen::Matrix<double, 7, 1> w;
    for (int s = 0; s < 7; ++s) {
        w[s] = P[s][0] * pw[0] + P[s][1] * pw[1] + P[s][2] * pw[2] + P[s][3] * pw[3];
    }
    return states_[step] + h * (stages_[step] * w);
}

State DenseSolution::operator()(double t) const {
    if (steps() == 0) return states_.front();
    return eval_in_step(locate(t), t);
}

DenseSolution integrate(const Function& f, double t0, const State& y0, double t_end,
                        const Options& opts, Stats* stats, const Observer& observer) {
    Stats local;
    Stats& st = stats ? *stats : local;
    DenseSolution sol(t0, y0);
    if (t_end == t0) return sol;
    const double dir = t_end > t0 ? 1.0 : -1.0;
    const Eigen::Index n = y0.size();

    Stages K(n, 7);
    State k1(n);
    f(t0, y0, k1);
    ++st.evaluations;
    double h = opts.h_init > 0 ? opts.h_init : initial_step(f, t0, y0, k1, dir, opts, &st.evaluations);
    if (opts.h_max > 0) h = std::min(h, opts.h_max);

    constexpr double safety = 0.9, beta = 0.04, alpha = 0.2 - 0.75 * beta;
    constexpr double fac_min = 0.2, fac_max = 10.0;
    double err_prev = 1e-4;
    bool last_rejected = false;

    double t = t0;
    State y = y0;
    while (dir * (t_end - t) > 0) {
        if (st.accepted + st.rejected >= opts.max_steps) {
            throw Error(ErrorCode::StepSizeUnderflow, "maximum number of steps exceeded");
        }
        const double remaining = std::abs(t_end - t);
        bool hits_end = false;
        if (h >= remaining) {
            h = remaining;
            hits_end = true;
        }
        if (h < opts.h_min && !hits_end) {
            throw Error(ErrorCode::StepSizeUnderflow,
                        "step size underflow at t=" + std::to_string(t));
        }
        K.col(0) = k1;
        State y1 = dp_step(f, t, y, dir * h, K, &st.evaluations);
        const double err = error_norm(y, y1, K, h, opts);
        if (!std::isfinite(err)) {
            h *= 0.25;
            ++st.rejected;
            last_rejected = true;
            continue;
        }
        if (err <= 1.0) {
            const double t1 = hits_end ? t_end : t + dir * h;
            double fac = err == 0.0 ? fac_max
                                    : safety * std::pow(err, -alpha) * std::pow(err_prev, beta);
            fac = std::clamp(fac, fac_min, fac_max);
            if (last_rejected) fac = std::min(fac, 1.0);
            err_prev = std::max(err, 1e-4);
            k1 = K.col(6);
            sol.append(t1, y1, K);
            t = t1;
            y = std::move(y1);
            ++st.accepted;
            last_rejected = false;
            h *= fac;
            if (opts.h_max > 0) h = std::min(h, opts.h_max);
            if (observer && observer(sol) == Control::Stop) break;
        } else {
            h *= std::max(fac_min, safety * std::pow(err, -alpha));
            ++st.rejected;
            last_rejected = true;
        }
    }
    return sol;
}

void retake_last_step(const Function& f, DenseSolution& sol, double t_new) {
    if (sol.steps() == 0) return;
    const std::size_t last = sol.steps() - 1;
    const double t0 = sol.times()[last];
    const State y0 = sol.states()[last];
    sol.drop_last();
    if (t_new == t0) return;
    Stages K(y0.size(), 7);
    State k1(y0.size());
    f(t0, y0, k1);
    K.col(0) = k1;
    State y1 = dp_step(f, t0, y0, t_new - t0, K, nullptr);
    sol.append(t_new, std::move(y1), std::move(K));
}

State integrate_fixed(const Function& f, double t0, const State& y0, double t1, int n_steps) {
    const double h = (t1 - t0) / n_steps;
    Stages K(y0.size(), 7);
    State y = y0, k1(y0.size());
    double t = t0;
    f(t, y, k1);
    for (int i = 0; i < n_steps; ++i) {
        if (i > 0) k1 = K.col(6);
        K.col(0) = k1;
        y = dp_step(f, t, y, h, K, nullptr);
        t = t0 + (i + 1) * h;
    }
    return y;
}

}  // namespace mpflow::ode
