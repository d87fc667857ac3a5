"""Simple pendulum dynamics solved with fixed-step classical Runge-Kutta.

Model: theta'' + (g/L) sin(theta) = 0 with theta(0) = theta0 and zero
initial angular velocity (free release, no forcing). The fixed step keeps
runs deterministic and makes the 4th-order convergence testable.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PendulumConfig:
    theta0: float = 0.2
    length: float = 1.0
    gravity: float = 9.81
    horizon: float = 2.0
    dt: float = 1e-3

    def __post_init__(self):
        if self.length <= 0 or self.gravity <= 0:
            raise ValueError("length and gravity must be > 0")
        if not 0 < self.dt <= self.horizon:
            raise ValueError("need 0 < dt <= horizon")


def _rk4_steps(theta, omega, gl, dt, n_steps):
    """Advance (theta, omega) by n_steps of size dt; arrays broadcast."""
    for _ in range(n_steps):
        k1t = omega
        k1w = -gl * np.sin(theta)
        k2t = omega + 0.5 * dt * k1w
        k2w = -gl * np.sin(theta + 0.5 * dt * k1t)
        k3t = omega + 0.5 * dt * k2w
        k3w = -gl * np.sin(theta + 0.5 * dt * k2t)
        k4t = omega + dt * k3w
        k4w = -gl * np.sin(theta + dt * k3t)
        theta = theta + (dt / 6.0) * (k1t + 2.0 * k2t + 2.0 * k3t + k4t)
        omega = omega + (dt / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
    return theta, omega


def _step_plan(horizon, dt):
    n_full = int(np.floor(horizon / dt + 1e-9))
    rem = horizon - n_full * dt
    if rem < 1e-12 * max(1.0, horizon):
        rem = 0.0
    return n_full, rem


def pendulum_final_state(theta0, length, gravity, horizon, dt):
    """theta(T) and dtheta/dt(T) for (broadcastable) parameter arrays.

    Vectorized over the inputs so Monte Carlo populations solve in one pass.
    """
    theta = np.asarray(theta0, dtype=float)
    omega = np.zeros_like(theta)
    gl = np.asarray(gravity, dtype=float) / np.asarray(length, dtype=float)
    n_full, rem = _step_plan(horizon, dt)
    theta, omega = _rk4_steps(theta, omega, gl, dt, n_full)
    if rem > 0:
        theta, omega = _rk4_steps(theta, omega, gl, rem, 1)
    return theta, omega


class PendulumTrajectory:
    """Stored trajectory with linear interpolation between grid times."""

    def __init__(self, times, thetas, omegas):
        self.times = times
        self.thetas = thetas
        self.omegas = omegas

    @property
    def theta_final(self):
        return float(self.thetas[-1])

    @property
    def omega_final(self):
        return float(self.omegas[-1])

    def theta(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.times[-1] + 1e-12):
            raise ValueError("query times must lie within [0, horizon]")
        return np.interp(t, self.times, self.thetas)

    def omega(self, t):
        t = np.asarray(t, dtype=float)
        return np.interp(t, self.times, self.omegas)


def pendulum_solve(config):
    """Integrate one pendulum, returning final state plus a trajectory sampler."""
    n_full, rem = _step_plan(config.horizon, config.dt)
    n_pts = n_full + (2 if rem > 0 else 1)
    times = np.empty(n_pts)
    thetas = np.empty(n_pts)
    omegas = np.empty(n_pts)
    theta, omega = float(config.theta0), 0.0
    gl = config.gravity / config.length
    times[0], thetas[0], omegas[0] = 0.0, theta, omega
    for i in range(n_full):
        theta, omega = _rk4_steps(theta, omega, gl, config.dt, 1)
        times[i + 1], thetas[i + 1], omegas[i + 1] = (i + 1) * config.dt, theta, omega
    if rem > 0:
        theta, omega = _rk4_steps(theta, omega, gl, rem, 1)
        times[-1], thetas[-1], omegas[-1] = config.horizon, theta, omega
    return PendulumTrajectory(times, thetas, omegas)


def pendulum_energy(theta, omega, length, gravity):
    """Conserved quantity 0.5 omega^2 - (g/L) cos(theta)."""
    return 0.5 * np.asarray(omega) ** 2 - (gravity / length) * np.cos(theta)
