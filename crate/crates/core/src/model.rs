//! Parameter records, unit conventions and the resonance-branch taxonomy.
//!
//! Everything is SI: angular frequencies in rad/s, lengths in m, temperatures
//! in K. Reduced occupations are dimensionless. `kd` is stored exactly as
//! given, with no modular reduction; operations that are 2pi-periodic in it
//! say so at their definition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HBAR: f64 = 1.054_571_817e-34; // J s
pub const K_B: f64 = 1.380_649e-23; // J/K
pub const EPS_0: f64 = 8.854_187_812_8e-12; // F/m

/// Particle label. The two trapped particles are conventionally 1 and 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Particle {
    One,
    Two,
}

impl Particle {
    pub fn other(self) -> Particle {
        match self {
            Particle::One => Particle::Two,
            Particle::Two => Particle::One,
        }
    }

    /// Zero-based index, for array storage.
    pub fn idx(self) -> usize {
        match self {
            Particle::One => 0,
            Particle::Two => 1,
        }
    }
}

/// Microscopic trap and particle parameters.
///
/// Constructed through [`PhysicalConfig::new`], which derives the wavenumbers,
/// mass and polarizability and validates the invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConfig {
    /// Laser wavelength (m).
    pub wavelength: f64,
    /// Wavenumber k = 2 pi / wavelength (rad/m).
    pub wavenumber: f64,
    /// Rayleigh length of the trapping beams (m).
    pub rayleigh_length: f64,
    /// Wavenumber corrected by the Gouy-phase gradient, k' = k - 1/z_R (rad/m).
    pub wavenumber_mod: f64,
    /// Particle radius (m).
    pub radius: f64,
    /// Relative permittivity of the particle material.
    pub permittivity: f64,
    /// Mass density (kg/m^3).
    pub density: f64,
    /// Particle mass, rho * (4/3) pi r^3 (kg).
    pub mass: f64,
    /// Polarizability alpha = 3 eps0 V (eps-1)/(eps+2) (C m^2/V).
    pub polarizability: f64,
    /// Polarization angle with respect to the trap axis (rad).
    pub polarization_angle: f64,
    /// Tweezer field magnitudes at the foci (V/m).
    pub field_1: f64,
    pub field_2: f64,
    /// Trap separation (m).
    pub distance: f64,
    /// Gas damping rate (rad/s).
    pub gamma: f64,
    /// Bath temperature (K).
    pub temperature: f64,
    /// Tweezer optical phases (rad).
    pub phi_1: f64,
    pub phi_2: f64,
    /// Optical detuning between the tweezers (rad/s).
    pub delta_omega: f64,
}

impl PhysicalConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        wavelength: f64,
        rayleigh_length: f64,
        radius: f64,
        permittivity: f64,
        density: f64,
        polarization_angle: f64,
        field_1: f64,
        field_2: f64,
        distance: f64,
        gamma: f64,
        temperature: f64,
        phi_1: f64,
        phi_2: f64,
        delta_omega: f64,
    ) -> Result<PhysicalConfig> {
        for (name, v) in [
            ("wavelength", wavelength),
            ("rayleigh_length", rayleigh_length),
            ("radius", radius),
            ("density", density),
            ("field_1", field_1),
            ("field_2", field_2),
            ("distance", distance),
            ("temperature", temperature),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be strictly positive and finite, got {v}"
                )));
            }
        }
        if gamma < 0.0 || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gamma must be >= 0, got {gamma}"
            )));
        }
        if !permittivity.is_finite() || permittivity <= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "permittivity must exceed 1, got {permittivity}"
            )));
        }
        let wavenumber = 2.0 * std::f64::consts::PI / wavelength;
        let wavenumber_mod = wavenumber - 1.0 / rayleigh_length;
        if !(wavenumber_mod > 0.0 && wavenumber_mod < wavenumber) {
            return Err(Error::InvalidParameter(format!(
                "modified wavenumber must satisfy 0 < k' < k; k = {wavenumber}, k' = {wavenumber_mod}"
            )));
        }
        let volume = 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3);
        let mass = density * volume;
        let polarizability = 3.0 * EPS_0 * volume * (permittivity - 1.0) / (permittivity + 2.0);
        Ok(PhysicalConfig {
            wavelength,
            wavenumber,
            rayleigh_length,
            wavenumber_mod,
            radius,
            permittivity,
            density,
            mass,
            polarizability,
            polarization_angle,
            field_1,
            field_2,
            distance,
            gamma,
            temperature,
            phi_1,
            phi_2,
            delta_omega,
        })
    }

    /// Recompute alpha from scratch; used to verify the stored value.
    pub fn polarizability_recomputed(&self) -> f64 {
        let volume = 4.0 / 3.0 * std::f64::consts::PI * self.radius.powi(3);
        3.0 * EPS_0 * volume * (self.permittivity - 1.0) / (self.permittivity + 2.0)
    }

    /// Traveling phase over the trap separation, k*d (rad).
    pub fn kd(&self) -> f64 {
        self.wavenumber * self.distance
    }
}

/// Reduced model parameters of the coupled pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeParams {
    /// Mechanical frequencies (rad/s).
    pub omega_1: f64,
    pub omega_2: f64,
    /// Gas damping rate, equal for both particles (rad/s).
    pub gamma: f64,
    /// Maximum coupling rate magnitude (rad/s).
    pub g: f64,
    /// Optical detuning between the tweezers (rad/s).
    pub delta_omega: f64,
    /// Optical phase difference phi_2 - phi_1 (rad).
    pub delta_phi: f64,
    /// Traveling phase over the trap separation (rad).
    pub kd: f64,
    /// Thermal occupations of the uncoupled oscillators.
    pub n_1: f64,
    pub n_2: f64,
}

impl ModeParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        omega_1: f64,
        omega_2: f64,
        gamma: f64,
        g: f64,
        delta_omega: f64,
        delta_phi: f64,
        kd: f64,
        n_1: f64,
        n_2: f64,
    ) -> Result<ModeParams> {
        if !(omega_1 > 0.0) || !(omega_2 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mechanical frequencies must be positive, got ({omega_1}, {omega_2})"
            )));
        }
        if gamma < 0.0 {
            return Err(Error::InvalidParameter(format!("gamma must be >= 0, got {gamma}")));
        }
        if g < 0.0 {
            return Err(Error::InvalidParameter(format!("g must be >= 0, got {g}")));
        }
        if !(n_1 > 0.0) || !(n_2 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "occupations must be positive, got ({n_1}, {n_2})"
            )));
        }
        for v in [omega_1, omega_2, gamma, g, delta_omega, delta_phi, kd, n_1, n_2] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter("non-finite mode parameter".into()));
            }
        }
        Ok(ModeParams { omega_1, omega_2, gamma, g, delta_omega, delta_phi, kd, n_1, n_2 })
    }

    /// Mechanical detuning Omega_2 - Omega_1 (rad/s).
    pub fn delta_mech(&self) -> f64 {
        self.omega_2 - self.omega_1
    }

    /// Mean mechanical frequency (rad/s).
    pub fn omega_mean(&self) -> f64 {
        0.5 * (self.omega_1 + self.omega_2)
    }

    pub fn omega(&self, j: Particle) -> f64 {
        match j {
            Particle::One => self.omega_1,
            Particle::Two => self.omega_2,
        }
    }

    pub fn occupation(&self, j: Particle) -> f64 {
        match j {
            Particle::One => self.n_1,
            Particle::Two => self.n_2,
        }
    }

    /// Thermal occupation of a harmonic mode at temperature `t`.
    pub fn thermal_occupation(omega: f64, t: f64) -> f64 {
        K_B * t / (HBAR * omega)
    }
}

/// The three resonance conditions of the modulated interaction.
///
/// Each branch selects the pair of rotating-frame variables whose coupling
/// becomes time independent when `delta_omega` sits near the corresponding
/// mechanical frequency combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResonanceBranch {
    /// delta_omega near Omega_2 - Omega_1: excitation exchange.
    Detuning,
    /// delta_omega near Omega_1 + Omega_2: pair creation/annihilation.
    Sum,
    /// delta_omega near 2 Omega_j: parametric drive of a single particle.
    SingleMode(Particle),
}

impl ResonanceBranch {
    /// Effective detuning away from this branch's resonance (rad/s).
    pub fn effective_detuning(&self, p: &ModeParams) -> f64 {
        match self {
            ResonanceBranch::Detuning => p.delta_omega - p.delta_mech(),
            ResonanceBranch::Sum => p.delta_omega - 2.0 * p.omega_mean(),
            ResonanceBranch::SingleMode(j) => p.delta_omega - 2.0 * p.omega(*j),
        }
    }

    /// Coupling magnitude on this branch; the single-mode branch carries the
    /// frequency-ratio factor g_s = g sqrt(Omega_j' / Omega_j).
    pub fn coupling(&self, p: &ModeParams) -> f64 {
        match self {
            ResonanceBranch::Detuning | ResonanceBranch::Sum => p.g,
            ResonanceBranch::SingleMode(j) => {
                p.g * (p.omega(j.other()) / p.omega(*j)).sqrt()
            }
        }
    }
}

/// Reduce a microscopic configuration to mode parameters.
///
/// The coupling magnitude is
/// g = k^2 k'^2 alpha^2 sin^2(theta) |E1 E2| / (16 pi eps0 m d sqrt(O1 O2)).
pub fn reduce(config: &PhysicalConfig, omega_1: f64, omega_2: f64) -> Result<ModeParams> {
    if !(omega_1 > 0.0) || !(omega_2 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mechanical frequencies must be positive, got ({omega_1}, {omega_2})"
        )));
    }
    let k = config.wavenumber;
    let kp = config.wavenumber_mod;
    let sin_theta = config.polarization_angle.sin();
    let g = k * k * kp * kp * config.polarizability.powi(2) * sin_theta * sin_theta
        * (config.field_1 * config.field_2).abs()
        / (16.0
            * std::f64::consts::PI
            * EPS_0
            * config.mass
            * config.distance
            * (omega_1 * omega_2).sqrt());
    if !g.is_finite() {
        return Err(Error::Domain(format!("coupling rate is not finite: {g}")));
    }
    ModeParams::new(
        omega_1,
        omega_2,
        config.gamma,
        g,
        config.delta_omega,
        config.phi_2 - config.phi_1,
        config.kd(),
        ModeParams::thermal_occupation(omega_1, config.temperature),
        ModeParams::thermal_occupation(omega_2, config.temperature),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    pub(crate) fn silica_config(
        polarization_angle: f64,
        field: f64,
        distance: f64,
        delta_omega: f64,
    ) -> PhysicalConfig {
        PhysicalConfig::new(
            1064e-9,
            1e-3,
            105e-9,
            2.07,
            1850.0,
            polarization_angle,
            field,
            field,
            distance,
            2.0 * PI * 300.0,
            300.0,
            0.0,
            0.0,
            delta_omega,
        )
        .unwrap()
    }

    #[test]
    fn polarizability_matches_recomputation() {
        let c = silica_config(PI / 2.0, 1e7, 2e-6, 0.0);
        assert_relative_eq!(c.polarizability, c.polarizability_recomputed(), max_relative = 1e-15);
        let v = 4.0 / 3.0 * PI * c.radius.powi(3);
        assert_relative_eq!(
            c.polarizability,
            3.0 * EPS_0 * v * (c.permittivity - 1.0) / (c.permittivity + 2.0),
            max_relative = 1e-15
        );
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(PhysicalConfig::new(
            -1064e-9, 1e-3, 105e-9, 2.07, 1850.0, 0.0, 1e7, 1e7, 2e-6, 100.0, 300.0, 0.0, 0.0, 0.0
        )
        .is_err());
        // Rayleigh length so short that k' goes negative.
        assert!(PhysicalConfig::new(
            1064e-9, 1e-8, 105e-9, 2.07, 1850.0, 0.0, 1e7, 1e7, 2e-6, 100.0, 300.0, 0.0, 0.0, 0.0
        )
        .is_err());
        assert!(ModeParams::new(0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0).is_err());
        assert!(ModeParams::new(1.0, 1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0).is_err());
        assert!(ModeParams::new(1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn reduce_zero_polarization_angle_gives_zero_coupling() {
        let c = silica_config(0.0, 1e7, 2e-6, 0.0);
        let p = reduce(&c, 2.0 * PI * 27e3, 2.0 * PI * 33e3).unwrap();
        assert_eq!(p.g, 0.0);
    }

    #[test]
    fn reduce_coupling_halves_when_distance_doubles() {
        let omega = (2.0 * PI * 27e3, 2.0 * PI * 33e3);
        let a = reduce(&silica_config(PI / 2.0, 1e7, 2e-6, 0.0), omega.0, omega.1).unwrap();
        let b = reduce(&silica_config(PI / 2.0, 1e7, 4e-6, 0.0), omega.0, omega.1).unwrap();
        assert_relative_eq!(b.g, 0.5 * a.g, max_relative = 1e-14);
    }

    #[test]
    fn reduce_field_scaling_is_quadratic() {
        let omega = (2.0 * PI * 27e3, 2.0 * PI * 33e3);
        let a = reduce(&silica_config(PI / 3.0, 1e7, 2e-6, 0.0), omega.0, omega.1).unwrap();
        let b = reduce(&silica_config(PI / 3.0, 3e7, 2e-6, 0.0), omega.0, omega.1).unwrap();
        assert_relative_eq!(b.g, 9.0 * a.g, max_relative = 1e-13);
    }

    #[test]
    fn reduce_round_trips_a_target_coupling() {
        // Pick the field magnitude that produces g/2pi = 724 Hz by inverting
        // the coupling formula, then check reduce() returns it.
        let g_target = 2.0 * PI * 724.0;
        let (omega_1, omega_2) = (2.0 * PI * 27e3, 2.0 * PI * 33e3);
        let theta = PI / 2.0;
        let template = silica_config(theta, 1.0, 2e-6, 0.0);
        let k = template.wavenumber;
        let kp = template.wavenumber_mod;
        let field_sq = g_target * 16.0 * PI * EPS_0 * template.mass * template.distance
            * (omega_1 * omega_2).sqrt()
            / (k * k * kp * kp * template.polarizability.powi(2) * theta.sin().powi(2));
        let c = silica_config(theta, field_sq.sqrt(), 2e-6, 0.0);
        let p = reduce(&c, omega_1, omega_2).unwrap();
        assert_relative_eq!(p.g, g_target, max_relative = 1e-9);
    }

    #[test]
    fn occupations_follow_equipartition() {
        let c = silica_config(PI / 2.0, 1e7, 2e-6, 0.0);
        let omega_1 = 2.0 * PI * 27e3;
        let p = reduce(&c, omega_1, 2.0 * PI * 33e3).unwrap();
        assert_relative_eq!(p.n_1, K_B * 300.0 / (HBAR * omega_1), max_relative = 1e-14);
    }

    #[test]
    fn effective_detunings_per_branch() {
        let p = ModeParams::new(10.0, 16.0, 0.1, 1.0, 7.0, 0.0, 0.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(ResonanceBranch::Detuning.effective_detuning(&p), 1.0);
        assert_relative_eq!(ResonanceBranch::Sum.effective_detuning(&p), 7.0 - 26.0);
        assert_relative_eq!(
            ResonanceBranch::SingleMode(Particle::One).effective_detuning(&p),
            7.0 - 20.0
        );
        assert_relative_eq!(
            ResonanceBranch::SingleMode(Particle::Two).effective_detuning(&p),
            7.0 - 32.0
        );
        let gs = ResonanceBranch::SingleMode(Particle::One).coupling(&p);
        assert_relative_eq!(gs, (16.0f64 / 10.0).sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn mode_params_serialization_round_trips_bit_exactly() {
        let p = ModeParams::new(
            2.0 * PI * 27.1e3,
            2.0 * PI * 33.3e3,
            2.0 * PI * 473.217,
            2.0 * PI * 357.001,
            2.0 * PI * 4.4e3,
            0.731,
            1.602 * PI,
            1.234567890123e8,
            0.987654321e8,
        )
        .unwrap();
        let text = serde_json::to_string(&p).unwrap();
        let q: ModeParams = serde_json::from_str(&text).unwrap();
        assert!(p == q, "serialization round trip must be bit exact");
    }
}
