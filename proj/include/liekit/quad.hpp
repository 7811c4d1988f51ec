#pragma once

#include <functional>

namespace liekit {

// Adaptive Simpson quadrature with Richardson extrapolation.  `tol` is an
// absolute tolerance that gets split across subintervals; `max_depth` bounds
// the bisection depth.  Endpoints may come in either order (the result is
// signed accordingly), and integrands are free to call integrate_simpson
// themselves since no state is shared.
double integrate_simpson(const std::function<double(double)>& f, double a,
                         double b, double tol = 1e-12, int max_depth = 48);

}  // namespace liekit
