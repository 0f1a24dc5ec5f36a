#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace contiv::quad {

//! Adaptive Simpson integration of f over [a, b] to absolute tolerance tol.
double adaptive_simpson(const std::function<double(double)>& f,
                        double a,
                        double b,
                        double tol = 1e-10,
                        int max_depth = 50);

//! Gauss-Legendre rule on [-1, 1].
struct GaussLegendre
{
  std::vector<double> nodes;
  std::vector<double> weights;
};

//! Nodes and weights for an n-point rule. Rules are cached per n.
const GaussLegendre& gauss_legendre(std::size_t n);

//! Integrates f over [a, b] with an n-point Gauss-Legendre rule.
double gauss_legendre_integrate(const std::function<double(double)>& f,
                                double a,
                                double b,
                                std::size_t n);

//! Trapezoid rule over a (not necessarily uniform) grid.
double trapezoid(const std::vector<double>& x, const std::vector<double>& y);

} // namespace contiv::quad
