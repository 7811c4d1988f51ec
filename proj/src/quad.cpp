#include "liekit/quad.hpp"

#include <cmath>

namespace liekit {

namespace {

double simpson(double a, double fa, double fm, double fb, double b) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double refine(const std::function<double(double)>& f, double a, double fa,
              double m, double fm, double b, double fb, double whole,
              double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(a, fa, flm, fm, m);
  const double right = simpson(m, fm, frm, fb, b);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return refine(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1) +
         refine(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate_simpson(const std::function<double(double)>& f, double a,
                         double b, double tol, int max_depth) {
  if (a == b) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fm = f(m);
  const double fb = f(b);
  const double whole = simpson(a, fa, fm, fb, b);
  return refine(f, a, fa, m, fm, b, fb, whole, tol, max_depth);
}

}  // namespace liekit
