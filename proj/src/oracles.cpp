#include "mpflow/oracles.hpp"

#include <cmath>
#include <numbers>

namespace mpflow::oracle {

namespace {

Vec rot90(const Vec& a) {
    Vec r(2);
    r << -a[1], a[0];
    return r;
}

double wrap(double a) {
    const double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a, two_pi);
    return a < 0 ? a + two_pi : a;
}

// Action of the counterclockwise arc of circle(c, r) from angle phi0 through dphi.
double arc_action(double B, const Vec& c, double r, double phi0, double dphi) {
    const double speed = std::abs(B) * r;
    const double k = 0.5 * speed * speed;
    const double tau = dphi / B;
    const double phi1 = phi0 + dphi;
    const double bracket = (c[0] * std::sin(phi1) - c[1] * std::cos(phi1)) -
                           (c[0] * std::sin(phi0) - c[1] * std::cos(phi0));
    const double flux = 0.5 * B * (r * bracket + r * r * dphi);
    return 2.0 * k * tau - flux;
}

}  // namespace

ArcExit larmor_exit(double B, const Vec& p, const Vec& v) {
    const Vec c = p + rot90(v) / B;
    const double r = v.norm() / std::abs(B);
    // The second intersection of the two circles mirrors p across the line 0c.
    const Vec ch = c / c.norm();
    const Vec q = 2.0 * p.dot(ch) * ch - p;
    const double phi0 = std::atan2(p[1] - c[1], p[0] - c[0]);
    const double phi1 = std::atan2(q[1] - c[1], q[0] - c[0]);
    const double dphi = wrap(phi1 - phi0);
    ArcExit out;
    out.exit_x = q;
    out.exit_v = B * rot90(q - c);
    out.tau = dphi / B;
    out.action = arc_action(B, c, r, phi0, dphi);
    return out;
}

ArcShot larmor_shot(double B, double s, const Vec& x, const Vec& y) {
    const double r = s / B;
    const Vec m = 0.5 * (x + y);
    const Vec d = y - x;
    const double half = 0.5 * d.norm();
    const double h = std::sqrt(std::max(r * r - half * half, 0.0));
    // Center on the left of x -> y gives the short counterclockwise arc.
    const Vec c = m + h * rot90(d) / d.norm();
    const double phi0 = std::atan2(x[1] - c[1], x[0] - c[0]);
    const double phi1 = std::atan2(y[1] - c[1], y[0] - c[0]);
    const double dphi = wrap(phi1 - phi0);
    ArcShot out;
    out.v0 = B * rot90(x - c);
    out.tau = dphi / B;
    out.action = arc_action(B, c, r, phi0, dphi);
    return out;
}

double chord_action(double k, const Vec& x, const Vec& y) {
    return std::sqrt(2.0 * k) * (x - y).norm();
}

}  // namespace mpflow::oracle
