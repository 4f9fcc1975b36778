#pragma once

#include "invmeas/coefficients.hpp"
#include "invmeas/mesh.hpp"
#include "invmeas/test_function.hpp"

#include <functional>
#include <utility>

namespace invmeas {

using PointwiseVector = std::function<Point(const Point&)>;

/// int L phi rho dx with L phi = 1/2 tr(A Hess phi) + <G, grad phi>.
double invariance_residual(const CoefficientSet& cs, const ScalarField& rho, const TestFunction& phi,
                           const TriMesh& mesh);

/// int <b, grad phi> rho dx.
double divfree_residual(const PointwiseVector& b, const ScalarField& rho, const TestFunction& phi,
                        const TriMesh& mesh);

/// E(f, g) = 1/2 int <(A + C) grad f, grad g> dm - int <Bbar, grad f> g dm, m = rho dx.
double dirichlet_form(const CoefficientSet& cs, const ScalarField& rho, const TestFunction& f,
                      const TestFunction& g, const TriMesh& mesh);

/// (E(f,g) + int Lf g dm, E(f,g) + int f Lhat g dm), Lhat built from Ghat.
std::pair<double, double> adjoint_gap(const CoefficientSet& cs, const ScalarField& rho, const TestFunction& f,
                                      const TestFunction& g, const TriMesh& mesh);

} // namespace invmeas
