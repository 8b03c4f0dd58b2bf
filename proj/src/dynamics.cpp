#include "xiflow/dynamics.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <thread>

#include "xiflow/specfun.hpp"

namespace xiflow::dynamics {

namespace {

inline Complex to_complex(double re, double im) { return Complex(re, im); }

StepControl make_control(double tol) {
  StepControl ctrl;
  ctrl.tol = tol;
  return ctrl;
}

// Column layouts of the real state vectors.
//   holomorphic/newton: (Re q, Im q)
//   hamiltonian:        (Re q, Im q, Re p, Im p)
//   variational:        (Re q, Im q, Re p, Im p, Re dq, Im dq, Re dp, Im dp)

StateVec<2> pack2(Complex q) { return StateVec<2>(q.real(), q.imag()); }

StateVec<4> pack4(Complex q, Complex p) {
  StateVec<4> y;
  y << q.real(), q.imag(), p.real(), p.imag();
  return y;
}

StateVec<8> pack8(Complex q, Complex p, Complex dq, Complex dp) {
  StateVec<8> y;
  y << q.real(), q.imag(), p.real(), p.imag(), dq.real(), dq.imag(),
      dp.real(), dp.imag();
  return y;
}

StateVec<2> holomorphic_rhs(double, const StateVec<2>& y) {
  const Complex v = specfun::xi(to_complex(y[0], y[1]));
  return StateVec<2>(v.real(), v.imag());
}

StateVec<4> hamiltonian_rhs(double, const StateVec<4>& y) {
  const specfun::XiJet jet = specfun::xi_jet(to_complex(y[0], y[1]));
  const Complex p = to_complex(y[2], y[3]);
  const Complex pdot = -jet.f1 * p;
  StateVec<4> dy;
  dy << jet.f0.real(), jet.f0.imag(), pdot.real(), pdot.imag();
  return dy;
}

StateVec<8> variational_rhs(double, const StateVec<8>& y) {
  const specfun::XiJet jet = specfun::xi_jet(to_complex(y[0], y[1]));
  const Complex p = to_complex(y[2], y[3]);
  const Complex dq = to_complex(y[4], y[5]);
  const Complex dp = to_complex(y[6], y[7]);
  const Complex pdot = -jet.f1 * p;
  const Complex dqdot = jet.f1 * dq;
  const Complex dpdot = -jet.f2 * p * dq - jet.f1 * dp;
  StateVec<8> dy;
  dy << jet.f0.real(), jet.f0.imag(), pdot.real(), pdot.imag(), dqdot.real(),
      dqdot.imag(), dpdot.real(), dpdot.imag();
  return dy;
}

}  // namespace

void require_tolerance(double tol) {
  if (!(tol >= 1e-13 && tol <= 1e-4))
    throw DomainError("integration tol must lie in [1e-13, 1e-4]");
}

namespace {
void require_forward_time(double t_end) {
  if (!(t_end >= 0.0) || !std::isfinite(t_end))
    throw DomainError("t_end must be finite and >= 0");
}
}  // namespace

Trajectory integrate_holomorphic_flow(Complex q0, double t_end, double tol) {
  require_tolerance(tol);
  require_forward_time(t_end);
  if (!is_finite(q0)) throw DomainError("non-finite initial condition");
  Trajectory traj;
  traj.kind = FlowKind::Holomorphic;
  StateVec<2> y = pack2(q0);
  StepStats stats;
  integrate_adaptive<2>(holomorphic_rhs, y, 0.0, t_end, make_control(tol),
                        stats, [&](double t, const StateVec<2>& s) {
                          traj.states.push_back(
                              {t, to_complex(s[0], s[1]), {}, {}, {}});
                        });
  traj.accepted_steps = stats.accepted;
  traj.rejected_steps = stats.rejected;
  traj.max_local_error = stats.max_local_error;
  return traj;
}

Trajectory integrate_hamiltonian(Complex q0, Complex p0, double t_end,
                                 double tol) {
  require_tolerance(tol);
  if (!is_finite(q0) || !is_finite(p0))
    throw DomainError("non-finite initial condition");
  if (p0 == Complex(0.0, 0.0))
    throw DomainError("integrate_hamiltonian: p0 must be nonzero");
  require_forward_time(t_end);
  Trajectory traj;
  traj.kind = FlowKind::Hamiltonian;
  StateVec<4> y = pack4(q0, p0);
  StepStats stats;
  integrate_adaptive<4>(hamiltonian_rhs, y, 0.0, t_end, make_control(tol),
                        stats, [&](double t, const StateVec<4>& s) {
                          traj.states.push_back({t, to_complex(s[0], s[1]),
                                                 to_complex(s[2], s[3]),
                                                 {},
                                                 {}});
                        });
  traj.accepted_steps = stats.accepted;
  traj.rejected_steps = stats.rejected;
  traj.max_local_error = stats.max_local_error;
  return traj;
}

Trajectory integrate_variational(Complex q0, Complex p0, Complex dq0,
                                 Complex dp0, double t_end, double tol) {
  require_tolerance(tol);
  if (!is_finite(q0) || !is_finite(p0) || !is_finite(dq0) || !is_finite(dp0))
    throw DomainError("non-finite initial condition");
  if (p0 == Complex(0.0, 0.0))
    throw DomainError("integrate_variational: p0 must be nonzero");
  require_forward_time(t_end);
  Trajectory traj;
  traj.kind = FlowKind::Variational;
  StateVec<8> y = pack8(q0, p0, dq0, dp0);
  StepStats stats;
  integrate_adaptive<8>(variational_rhs, y, 0.0, t_end, make_control(tol),
                        stats, [&](double t, const StateVec<8>& s) {
                          traj.states.push_back({t, to_complex(s[0], s[1]),
                                                 to_complex(s[2], s[3]),
                                                 to_complex(s[4], s[5]),
                                                 to_complex(s[6], s[7])});
                        });
  traj.accepted_steps = stats.accepted;
  traj.rejected_steps = stats.rejected;
  traj.max_local_error = stats.max_local_error;
  return traj;
}

namespace {

Trajectory newton_segment(Complex s0, Complex T_delta, double tol,
                          double t_offset, Trajectory traj) {
  const double len = std::abs(T_delta);
  if (len == 0.0) {
    if (traj.states.empty()) traj.states.push_back({0.0, s0, {}, {}, {}});
    return traj;
  }
  const Complex dir = T_delta / len;
  auto rhs = [&dir](double, const StateVec<2>& y) {
    const specfun::XiJet jet = specfun::xi_jet(to_complex(y[0], y[1]));
    if (std::abs(jet.f1) < 1e-10)
      throw SeparatrixSingularity(
          "newton flow hit the xi' zero set (separatrix skeleton)");
    const Complex v = -(jet.f0 / jet.f1) * dir;
    return StateVec<2>(v.real(), v.imag());
  };
  StateVec<2> y = pack2(s0);
  StepStats stats;
  const bool skip_first = !traj.states.empty();
  bool first = true;
  integrate_adaptive<2>(rhs, y, 0.0, len, make_control(tol), stats,
                        [&](double t, const StateVec<2>& s) {
                          if (first && skip_first) {
                            first = false;
                            return;
                          }
                          first = false;
                          traj.states.push_back(
                              {t_offset + t, to_complex(s[0], s[1]),
                               {},
                               {},
                               {}});
                        });
  traj.accepted_steps += stats.accepted;
  traj.rejected_steps += stats.rejected;
  traj.max_local_error = std::max(traj.max_local_error, stats.max_local_error);
  return traj;
}

}  // namespace

Trajectory integrate_newton_flow(Complex s0, Complex T_end, double tol) {
  require_tolerance(tol);
  if (!is_finite(s0) || !is_finite(T_end))
    throw DomainError("non-finite initial condition");
  Trajectory traj;
  traj.kind = FlowKind::Newton;
  return newton_segment(s0, T_end, tol, 0.0, std::move(traj));
}

Trajectory integrate_newton_flow_path(Complex s0,
                                      const std::vector<Complex>& waypoints,
                                      double tol) {
  require_tolerance(tol);
  Trajectory traj;
  traj.kind = FlowKind::Newton;
  Complex here = s0;
  Complex T_prev = 0.0;
  double offset = 0.0;
  for (const Complex& w : waypoints) {
    traj = newton_segment(here, w - T_prev, tol, offset, std::move(traj));
    if (!traj.states.empty()) {
      here = traj.states.back().q;
      offset = traj.states.back().t;
    }
    T_prev = w;
  }
  if (traj.states.empty()) traj.states.push_back({0.0, s0, {}, {}, {}});
  return traj;
}

double detect_closed_orbit_period(Complex q0, const zeros::ZeroRecord& zero,
                                  double tol, double radius) {
  require_tolerance(tol);
  const Complex rho = zero.rho;
  const Complex w0 = q0 - rho;
  if (!(std::abs(w0) <= radius))
    throw DomainError("q0 outside the center region of the zero");
  if (std::abs(w0) < 1e-9)
    throw DomainError("q0 coincides with the center fixed point");
  if (!(zero.period > 0.0) || !std::isfinite(zero.period))
    throw DegenerateZeroError("zero record carries no finite period");

  const double t_cap = 5.0 * zero.period;
  const double target_mag = kTwoPi;

  // Orbit periods span orders of magnitude (|xi'(rho_n)| decays fast in n),
  // so the step cap scales with the orbit timescale; the per-step winding
  // stays near 2pi/2000, far below the section-detection limit.
  StepControl ctrl = make_control(tol);
  ctrl.hmax = std::max(ctrl.hmax, zero.period / 2000.0);

  // Track the unwrapped angle of q - rho; the section is the ray through
  // q0, reached again when the winding hits +-2pi.
  double winding = 0.0;
  Complex prev_w = w0;
  bool crossed = false;
  double t_lo = 0.0, wind_lo = 0.0;
  StateVec<2> y_lo = pack2(q0);
  double t_hi = 0.0, wind_hi = 0.0;
  double t_prev = 0.0;
  StateVec<2> y_prev = pack2(q0);

  StateVec<2> y = pack2(q0);
  StepStats stats;
  integrate_adaptive<2>(holomorphic_rhs, y, 0.0, t_cap, ctrl,
                        stats, [&](double t, const StateVec<2>& s) {
                          const Complex w = to_complex(s[0], s[1]) - rho;
                          winding += std::arg(w / prev_w);
                          prev_w = w;
                          if (!crossed && std::abs(winding) >= target_mag) {
                            crossed = true;
                            t_lo = t_prev;
                            y_lo = y_prev;
                            wind_lo = winding - std::arg(w / (to_complex(
                                                     y_prev[0], y_prev[1]) -
                                                 rho));
                            t_hi = t;
                            wind_hi = winding;
                            return false;
                          }
                          t_prev = t;
                          y_prev = s;
                          return true;
                        });
  if (!crossed)
    throw NoReturnError(
        "no section return within 5x the linearized period estimate");

  const double target = winding > 0.0 ? target_mag : -target_mag;
  const Complex w_lo = to_complex(y_lo[0], y_lo[1]) - rho;

  // Winding at t in [t_lo, t_hi], re-integrated from the stored bracket
  // start; the in-bracket angle change is far below pi, so the principal
  // argument is the right branch.
  auto winding_at = [&](double t) -> double {
    if (t <= t_lo) return wind_lo;
    StateVec<2> yy = y_lo;
    StepStats st;
    integrate_adaptive<2>(holomorphic_rhs, yy, t_lo, t, ctrl, st,
                          [](double, const StateVec<2>&) {});
    const Complex w = to_complex(yy[0], yy[1]) - rho;
    return wind_lo + std::arg(w / w_lo);
  };

  double ta = t_lo, ga = wind_lo - target;
  double tb = t_hi, gb = wind_hi - target;
  double tc = tb;
  for (int it = 0; it < 80; ++it) {
    double trial = (gb != ga) ? tb - gb * (tb - ta) / (gb - ga)
                              : 0.5 * (ta + tb);
    if (!(trial > std::min(ta, tb) && trial < std::max(ta, tb)))
      trial = 0.5 * (ta + tb);
    const double gc = winding_at(trial) - target;
    const bool done = std::abs(trial - tc) <= 1e-10 * (1.0 + trial);
    tc = trial;
    if (done || gc == 0.0) break;
    if ((gc > 0.0) == (gb > 0.0)) {
      tb = trial;
      gb = gc;
    } else {
      ta = trial;
      ga = gc;
    }
  }
  return tc;
}

PortraitGrid phase_portrait_grid(double re_min, double re_max, double im_min,
                                 double im_max, int nx, int ny, int jobs) {
  if (nx < 2 || ny < 2)
    throw DomainError("phase_portrait_grid: nx, ny must be >= 2");
  if (!(re_max > re_min) || !(im_max > im_min))
    throw DomainError("phase_portrait_grid: empty window");
  PortraitGrid grid;
  grid.re_axis = Eigen::VectorXd::LinSpaced(nx, re_min, re_max);
  grid.im_axis = Eigen::VectorXd::LinSpaced(ny, im_min, im_max);
  grid.value.resize(ny, nx);
  grid.phase.resize(ny, nx);
  grid.modulus.resize(ny, nx);

  auto fill_row = [&](int row) {
    for (int col = 0; col < nx; ++col) {
      const Complex v =
          specfun::xi(Complex(grid.re_axis[col], grid.im_axis[row]));
      grid.value(row, col) = v;
      grid.phase(row, col) = std::arg(v);
      grid.modulus(row, col) = std::abs(v);
    }
  };

  const int workers = std::max(1, std::min(jobs, ny));
  if (workers == 1) {
    for (int row = 0; row < ny; ++row) fill_row(row);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int row = next.fetch_add(1); row < ny; row = next.fetch_add(1))
          fill_row(row);
      });
    for (auto& th : pool) th.join();
  }
  return grid;
}

namespace {

void write_csv_impl(const Trajectory& traj, std::ostream& out) {
  const bool has_p = traj.kind == FlowKind::Hamiltonian ||
                     traj.kind == FlowKind::Variational;
  const bool has_var = traj.kind == FlowKind::Variational;
  out << "t,q_re,q_im";
  if (has_p) out << ",p_re,p_im";
  if (has_var) out << ",dq_re,dq_im,dp_re,dp_im";
  out << "\n";
  char buf[64];
  auto put = [&](double x, char sep) {
    std::snprintf(buf, sizeof buf, "%.17g%c", x, sep);
    out << buf;
  };
  for (const auto& s : traj.states) {
    put(s.t, ',');
    put(s.q.real(), ',');
    put(s.q.imag(), has_p ? ',' : '\n');
    if (has_p) {
      put(s.p.real(), ',');
      put(s.p.imag(), has_var ? ',' : '\n');
    }
    if (has_var) {
      put(s.dq.real(), ',');
      put(s.dq.imag(), ',');
      put(s.dp.real(), ',');
      put(s.dp.imag(), '\n');
    }
  }
}

}  // namespace

void write_trajectory_csv(const Trajectory& trajectory, std::ostream& out) {
  write_csv_impl(trajectory, out);
}

void write_trajectory_csv(const Trajectory& trajectory,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_csv_impl(trajectory, out);
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace xiflow::dynamics
