//! Time-dependent optical binding force along the trap axis, its
//! linearization, and the directional coupling rates it produces.

use crate::model::{ModeParams, Particle, PhysicalConfig, EPS_0};

/// Axial binding forces on both particles at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceSample {
    /// Force on particle 1 (N).
    pub f_1: f64,
    /// Force on particle 2 (N).
    pub f_2: f64,
    /// Time (s).
    pub t: f64,
}

/// Linearized binding force split into its two terms, each in N.
///
/// `constant` is the motion-independent drive that oscillates at the optical
/// detuning and feeds the narrow spectral line there; `coupling` is the part
/// proportional to the relative displacement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizedForce {
    pub constant: [f64; 2],
    pub coupling: [f64; 2],
}

impl LinearizedForce {
    pub fn total(&self, j: Particle) -> f64 {
        self.constant[j.idx()] + self.coupling[j.idx()]
    }
}

/// Interference phase phi_j(t) = kd -/+ (delta_phi + delta_omega t), with the
/// minus sign for particle 1.
pub fn interference_phase(params: &ModeParams, j: Particle, t: f64) -> f64 {
    let beat = params.delta_phi + params.delta_omega * t;
    match j {
        Particle::One => params.kd - beat,
        Particle::Two => params.kd + beat,
    }
}

fn interference_phase_physical(config: &PhysicalConfig, j: Particle, t: f64) -> f64 {
    let beat = (config.phi_2 - config.phi_1) + config.delta_omega * t;
    match j {
        Particle::One => config.kd() - beat,
        Particle::Two => config.kd() + beat,
    }
}

/// Full sinusoidal binding force from the microscopic configuration,
/// F_j = k^2 k' alpha^2 sin^2(theta) |E1 E2| / (8 pi eps0 d)
///       * sin[phi_j(t) + k'(z_j' - z_j)].
pub fn full_force(config: &PhysicalConfig, z_1: f64, z_2: f64, t: f64) -> ForceSample {
    let k = config.wavenumber;
    let kp = config.wavenumber_mod;
    let sin_theta = config.polarization_angle.sin();
    let prefactor = k * k * kp * config.polarizability.powi(2) * sin_theta * sin_theta
        * (config.field_1 * config.field_2).abs()
        / (8.0 * std::f64::consts::PI * EPS_0 * config.distance);
    let f = |j: Particle, z_own: f64, z_other: f64| {
        prefactor * (interference_phase_physical(config, j, t) + kp * (z_other - z_own)).sin()
    };
    ForceSample { f_1: f(Particle::One, z_1, z_2), f_2: f(Particle::Two, z_2, z_1), t }
}

/// Linearized binding force,
/// F_j / (m sqrt(O1 O2)) = 2g [ k^-1 sin(phi_j) + cos(phi_j) (z_j' - z_j) ].
///
/// The wavenumber in the constant term is the bare k, by convention of the
/// linearized expression; the coupling term is independent of it.
pub fn linearized_force(
    params: &ModeParams,
    mass: f64,
    wavenumber: f64,
    z_1: f64,
    z_2: f64,
    t: f64,
) -> LinearizedForce {
    let scale = 2.0 * params.g * mass * (params.omega_1 * params.omega_2).sqrt();
    let phi_1 = interference_phase(params, Particle::One, t);
    let phi_2 = interference_phase(params, Particle::Two, t);
    LinearizedForce {
        constant: [scale * phi_1.sin() / wavenumber, scale * phi_2.sin() / wavenumber],
        coupling: [scale * phi_1.cos() * (z_2 - z_1), scale * phi_2.cos() * (z_1 - z_2)],
    }
}

/// Directional coupling rates (g12, g21) at time `t`, in rad/s:
/// g12 = g cos(dw t + dphi), g21 = g cos(dw t + dphi + 2 kd).
pub fn directional_rates(params: &ModeParams, t: f64) -> (f64, f64) {
    let x = params.delta_omega * t + params.delta_phi;
    (params.g * x.cos(), params.g * (x + 2.0 * params.kd).cos())
}
