#pragma once

#include <cmath>
#include <complex>
#include <string>

#include "pmsim/errors.hpp"

namespace pmsim {

enum class CouplingShape { RaisedCosine, SmoothBump };

// Time-dependent coupling strength g(t) of the pointer interaction:
// smooth, g(0) = g(T) = 0, and unit time integral.
//
//   RaisedCosine: g = (1 - cos(2 pi t/T)) / T
//   SmoothBump:   g = 12012 u^6 (1-u)^6 / T,  u = t/T
//
// Both integrate to 1 exactly. The raised cosine makes the composite
// trapezoid sum exact at any step count; the bump has five vanishing
// endpoint derivatives, pushing the trapezoid error below 1e-12 for
// n >= 64 intervals.
struct CouplingProfile {
  CouplingShape shape = CouplingShape::RaisedCosine;
  double t_total = 0.0;

  static CouplingProfile make(CouplingShape shape, double t_total) {
    if (!(t_total > 0.0))
      throw ConfigError("coupling profile needs a positive duration");
    return {shape, t_total};
  }

  double operator()(double t) const {
    if (t <= 0.0 || t >= t_total) return 0.0;
    const double u = t / t_total;
    switch (shape) {
      case CouplingShape::RaisedCosine:
        return (1.0 - std::cos(2.0 * M_PI * u)) / t_total;
      case CouplingShape::SmoothBump: {
        const double w = u * (1.0 - u);
        const double w3 = w * w * w;
        return 12012.0 * w3 * w3 / t_total;
      }
    }
    return 0.0;
  }

  // Composite trapezoid of g over [0, T] with n intervals.
  double integral(int n_intervals) const {
    const double h = t_total / n_intervals;
    double sum = 0.0;  // endpoints vanish
    for (int i = 1; i < n_intervals; ++i) sum += (*this)(i * h);
    return sum * h;
  }
};

inline std::string coupling_shape_name(CouplingShape s) {
  return s == CouplingShape::RaisedCosine ? "raised_cosine" : "smooth_bump";
}

// |g_hat(w)|^2 for the raised cosine, g_hat(w) = int_0^T g(t) e^{iwt} dt,
// evaluated in closed form so high frequencies come out exact instead of
// aliased. With W = 2 pi / T and E(d) = (e^{idT} - 1)/(id):
//   g_hat(w) = [E(w) - (E(w+W) + E(w-W))/2] / T
// Both admissible profiles are smooth with unit integral and vanishing
// endpoints; the raised cosine has the heavier spectral tail (w^-3), so this
// also serves as a conservative envelope for the bump shape.
inline double coupling_window(double omega, double t_total) {
  const std::complex<double> i_unit{0.0, 1.0};
  const auto edge = [&](double d) -> std::complex<double> {
    if (std::abs(d) * t_total < 1e-8) return {t_total, 0.0};
    return (std::exp(i_unit * d * t_total) - 1.0) / (i_unit * d);
  };
  const double w0 = 2.0 * M_PI / t_total;
  const std::complex<double> ghat =
      (edge(omega) - 0.5 * (edge(omega + w0) + edge(omega - w0))) / t_total;
  return std::norm(ghat);
}

}  // namespace pmsim
