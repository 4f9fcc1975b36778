#pragma once

#include "invmeas/coefficients.hpp"
#include "invmeas/fem.hpp"

#include <memory>
#include <vector>

namespace invmeas {

struct DensityOptions {
    unsigned workers = 0;
    SolverOptions solver;
};

/// u_n = v_n + 1 where v_n solves the ball form with alpha = 0 on mesh_disk(n, h).
/// Boundary values are exactly 1. Throws PositivityFailure if any nodal value
/// is not strictly positive.
FemFunction solve_ball(const CoefficientSet& cs, int n, double h, const DensityOptions& options = {},
                       SolveInfo* info = nullptr);

/// rho_n = u_n / u_n(0); vertex 0 of every disk mesh is the origin.
FemFunction normalize_at_origin(const FemFunction& u);

/// max / min of the nodal values over vertices in the closed ball of radius 2r.
double harnack_diagnostic(const FemFunction& rho_n, double r);

struct BallDiagnostics {
    int n = 0;
    double min_u = 0.0;
    double harnack_ratio = 0.0;
    /// sup over observation-disk vertices of |rho_n - rho_prev|; NaN for the first ball.
    double delta_to_previous = 0.0;
    int vertices = 0;
    SolveInfo solve;
};

struct BallRecord {
    int n;
    FemFunction u;
    FemFunction rho;
};

class DensitySolution {
public:
    DensitySolution(std::string set_name, double h, double r_obs, std::vector<BallRecord> balls,
                    std::vector<BallDiagnostics> diagnostics);

    const std::string& set_name() const { return set_name_; }
    double h() const { return h_; }
    double r_obs() const { return r_obs_; }
    const std::vector<BallRecord>& balls() const { return balls_; }
    const std::vector<BallDiagnostics>& diagnostics() const { return diagnostics_; }

    /// Final rho_n (nodal values on the last ball mesh).
    const FemFunction& rho_nodal() const { return balls_.back().rho; }
    /// P1 density with recovered gradient, defined on the observation disk only.
    const ScalarField& rho() const { return rho_; }

private:
    std::string set_name_;
    double h_;
    double r_obs_;
    std::vector<BallRecord> balls_;
    std::vector<BallDiagnostics> diagnostics_;
    ScalarField rho_;
};

/// Solves on the disks B_n for n in the schedule, normalizes each solution at
/// the origin and stops once sup_{B_r_obs} |rho_n - rho_prev| < eps. Throws
/// NonConvergence with the delta history if the schedule runs out.
DensitySolution build_density(const CoefficientSet& cs, const std::vector<int>& schedule, double h, double r_obs,
                              double eps, const DensityOptions& options = {});

} // namespace invmeas
