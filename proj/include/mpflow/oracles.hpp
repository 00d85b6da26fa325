#pragma once

#include "mpflow/types.hpp"

namespace mpflow::oracle {

// Planar motion with flat metric, U = 0 and alpha = (B/2)(-y dx + x dy) in
// a disk centered at 0: circles of radius |v|/B run
// counterclockwise at angular rate B.
struct ArcExit {
    Vec exit_x;
    Vec exit_v;
    double tau = 0.0;
    double action = 0.0;
};

// Exit state from boundary point p with velocity v (energy k = |v|^2/2).
ArcExit larmor_exit(double B, const Vec& p, const Vec& v);

// The connecting arc of speed s from boundary point x to boundary point y:
// initial velocity and action at k = s^2/2.
struct ArcShot {
    Vec v0;
    double tau = 0.0;
    double action = 0.0;
};
ArcShot larmor_shot(double B, double s, const Vec& x, const Vec& y);

// Flat, alpha = 0, U = 0: sqrt(2k) |x - y|.
double chord_action(double k, const Vec& x, const Vec& y);

}  // namespace mpflow::oracle
