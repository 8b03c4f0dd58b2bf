#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "xiflow/rk45.hpp"
#include "xiflow/types.hpp"
#include "xiflow/zeros.hpp"

namespace xiflow::dynamics {

enum class FlowKind { Holomorphic, Newton, Hamiltonian, Variational };

/// One integrator sample. Unused components stay zero for the simpler
/// flow kinds (q-only, or q,p without the variational pair).
struct FlowState {
  double t = 0.0;
  Complex q;
  Complex p;
  Complex dq;
  Complex dp;
};

struct Trajectory {
  FlowKind kind = FlowKind::Holomorphic;
  std::vector<FlowState> states;  // strictly increasing in t
  long accepted_steps = 0;
  long rejected_steps = 0;
  double max_local_error = 0.0;

  const FlowState& front() const { return states.front(); }
  const FlowState& back() const { return states.back(); }
};

void require_tolerance(double tol);  // tol in [1e-13, 1e-4]

/// dq/dt = xi(q), integrated as the real 2D system (Re q, Im q).
Trajectory integrate_holomorphic_flow(Complex q0, double t_end, double tol);

/// Hamiltonian system for H = xi(q) p:
///   dq/dt = xi(q),  dp/dt = -xi'(q) p.
Trajectory integrate_hamiltonian(Complex q0, Complex p0, double t_end,
                                 double tol);

/// Newton flow ds/dT = -xi(s)/xi'(s) along the straight complex-time
/// segment 0 -> T_end, parameterized by real arclength. Throws
/// SeparatrixSingularity if |xi'(s)| < 1e-10 en route.
Trajectory integrate_newton_flow(Complex s0, Complex T_end, double tol);

/// Piecewise-linear complex-time path through the given waypoints
/// (monodromy experiments); segments are traversed in order.
Trajectory integrate_newton_flow_path(Complex s0,
                                      const std::vector<Complex>& waypoints,
                                      double tol);

/// Hamiltonian system extended by its variational equations:
///   d(dq)/dt = xi'(q) dq,  d(dp)/dt = -xi''(q) p dq - xi'(q) dp.
Trajectory integrate_variational(Complex q0, Complex p0, Complex dq0,
                                 Complex dp0, double t_end, double tol);

/// First-return time to the Poincare section {ray from rho through q0},
/// detected by unwinding arg(q - rho) and refined by secant iteration to
/// 1e-10 in time. q0 must lie in the center region (|q0 - rho| <= radius).
/// Throws NoReturnError if no return within 5x the linearized period.
double detect_closed_orbit_period(Complex q0, const zeros::ZeroRecord& zero,
                                  double tol, double radius = 0.05);

/// xi sampled on a rectangular grid, with phase and modulus, for offline
/// contouring of constant-phase lines.
struct PortraitGrid {
  Eigen::VectorXd re_axis, im_axis;      // node coordinates
  Eigen::MatrixXcd value;                // xi(s), im index = row
  Eigen::MatrixXd phase;                 // arg xi
  Eigen::MatrixXd modulus;               // |xi|
};

PortraitGrid phase_portrait_grid(double re_min, double re_max, double im_min,
                                 double im_max, int nx, int ny, int jobs = 1);

/// Trajectory CSV: header then rows t,q_re,q_im[,p_re,p_im[,dq_re,dq_im,
/// dp_re,dp_im]] depending on the flow kind.
void write_trajectory_csv(const Trajectory& trajectory, std::ostream& out);
void write_trajectory_csv(const Trajectory& trajectory,
                          const std::filesystem::path& path);

}  // namespace xiflow::dynamics
