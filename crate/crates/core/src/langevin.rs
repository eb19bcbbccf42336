//! Stochastic time-domain integration of the two coupled oscillators under
//! the time-dependent binding force, with protocol staging (feedback cooling
//! on/off, interaction on/off) and conversion to complex mode amplitudes.
//!
//! The equations of motion per particle are
//!   dz_j = v_j dt
//!   dv_j = [-(gamma + gamma_fb,j) v_j - Omega_j^2 z_j + F_j/m] dt + sigma_j dW_j
//! with sigma_j^2 = 2 gamma k_B T_j / m, integrated by a stochastic Heun
//! predictor-corrector with exact Gaussian increments. Noise streams are
//! counter-seeded per (seed, trajectory, particle), so ensembles are
//! bit-reproducible no matter how trajectories are scheduled across threads.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModeParams, Particle, PhysicalConfig, HBAR, K_B};
use crate::model;
use crate::sigproc::{ComplexAmplitudeSeries, FrameInfo};

/// Everything the integrator needs, in SI units.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimInputs {
    pub omega: [f64; 2],
    pub gamma: f64,
    pub g: f64,
    pub delta_omega: f64,
    pub delta_phi: f64,
    pub kd: f64,
    pub mass: f64,
    pub wavenumber: f64,
    /// Modified wavenumber entering the full sinusoidal force.
    pub wavenumber_mod: f64,
    /// Per-particle bath temperatures (K); unequal values realize unequal
    /// occupations at equal frequencies.
    pub temperature: [f64; 2],
    /// Use the full sinusoidal force instead of its linearization.
    pub full_force: bool,
}

impl SimInputs {
    /// Build from reduced parameters plus the mass and wavenumber scales that
    /// the reduced record does not carry. Bath temperatures are chosen to
    /// reproduce the requested occupations.
    pub fn from_mode_params(params: &ModeParams, mass: f64, wavenumber: f64) -> Result<SimInputs> {
        if !(mass > 0.0) || !(wavenumber > 0.0) {
            return Err(Error::InvalidParameter(
                "mass and wavenumber must be positive".into(),
            ));
        }
        Ok(SimInputs {
            omega: [params.omega_1, params.omega_2],
            gamma: params.gamma,
            g: params.g,
            delta_omega: params.delta_omega,
            delta_phi: params.delta_phi,
            kd: params.kd,
            mass,
            wavenumber,
            wavenumber_mod: wavenumber,
            temperature: [
                HBAR * params.omega_1 * params.n_1 / K_B,
                HBAR * params.omega_2 * params.n_2 / K_B,
            ],
            full_force: false,
        })
    }

    pub fn from_physical(
        config: &PhysicalConfig,
        omega_1: f64,
        omega_2: f64,
    ) -> Result<SimInputs> {
        let params = model::reduce(config, omega_1, omega_2)?;
        Ok(SimInputs {
            omega: [omega_1, omega_2],
            gamma: config.gamma,
            g: params.g,
            delta_omega: config.delta_omega,
            delta_phi: config.phi_2 - config.phi_1,
            kd: config.kd(),
            mass: config.mass,
            wavenumber: config.wavenumber,
            wavenumber_mod: config.wavenumber_mod,
            temperature: [config.temperature; 2],
            full_force: false,
        })
    }

    pub fn mode_params(&self) -> Result<ModeParams> {
        ModeParams::new(
            self.omega[0],
            self.omega[1],
            self.gamma,
            self.g,
            self.delta_omega,
            self.delta_phi,
            self.kd,
            K_B * self.temperature[0] / (HBAR * self.omega[0]),
            K_B * self.temperature[1] / (HBAR * self.omega[1]),
        )
    }

    /// Zero-point length sqrt(hbar / 2 m Omega_j).
    pub fn z_zpf(&self, j: Particle) -> f64 {
        (HBAR / (2.0 * self.mass * self.omega[j.idx()])).sqrt()
    }

    fn occupation(&self, j: Particle) -> f64 {
        K_B * self.temperature[j.idx()] / (HBAR * self.omega[j.idx()])
    }
}

/// How the oscillators start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitialState {
    /// Thermal Gaussian draws at the bath temperatures.
    Thermal,
    /// Thermal draws at the given occupations instead.
    Occupations([f64; 2]),
    /// Deterministic displacement/velocity (no randomness).
    Fixed { z: [f64; 2], v: [f64; 2] },
}

/// One stage of a measurement protocol.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Stage {
    pub duration: f64,
    /// Extra cold-damping rate per particle (adds friction, no noise).
    pub gamma_fb: [f64; 2],
    pub interaction_on: bool,
    /// Override of the optical detuning while this stage runs.
    pub delta_omega_override: Option<f64>,
}

impl Stage {
    pub fn free(duration: f64) -> Stage {
        Stage { duration, gamma_fb: [0.0; 2], interaction_on: true, delta_omega_override: None }
    }
}

/// Ordered stages plus the initial condition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Protocol {
    pub initial: InitialState,
    pub stages: Vec<Stage>,
}

impl Protocol {
    pub fn free_run(duration: f64) -> Protocol {
        Protocol { initial: InitialState::Thermal, stages: vec![Stage::free(duration)] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::Config("protocol needs at least one stage".into()));
        }
        for s in &self.stages {
            if !(s.duration > 0.0) {
                return Err(Error::Config("stage durations must be positive".into()));
            }
            if s.gamma_fb[0] < 0.0 || s.gamma_fb[1] < 0.0 {
                return Err(Error::Config("feedback damping must be non-negative".into()));
            }
        }
        Ok(())
    }

    pub fn total_duration(&self) -> f64 {
        self.stages.iter().map(|s| s.duration).sum()
    }
}

/// Time grid of a run. Samples are stored every `store_every` integrator
/// steps, so the stored rate is 1/(dt * store_every).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SimGrid {
    pub dt: f64,
    pub store_every: usize,
}

impl SimGrid {
    /// Largest dt the resolution guard allows: at least 50 samples per period
    /// of the fastest scale among Omega_1, Omega_2 and delta_omega.
    pub fn max_dt(inputs: &SimInputs) -> f64 {
        let fastest = inputs.omega[0].max(inputs.omega[1]).max(inputs.delta_omega.abs());
        2.0 * std::f64::consts::PI / (50.0 * fastest)
    }

    pub fn auto(inputs: &SimInputs, store_every: usize) -> SimGrid {
        SimGrid { dt: 0.98 * Self::max_dt(inputs), store_every: store_every.max(1) }
    }
}

/// Stored samples of one trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub z: [Vec<f64>; 2],
    pub v: [Vec<f64>; 2],
}

/// A seeded ensemble of trajectories on a common grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryEnsemble {
    pub dt: f64,
    pub store_every: usize,
    pub n_steps: usize,
    pub n_traj: usize,
    pub seed: u64,
    pub protocol: Protocol,
    pub trajectories: Vec<Trajectory>,
}

impl TrajectoryEnsemble {
    /// Grid spacing of the stored samples.
    pub fn dt_out(&self) -> f64 {
        self.dt * self.store_every as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let dt = self.dt_out();
        (0..self.trajectories[0].z[0].len()).map(|i| i as f64 * dt).collect()
    }
}

struct StagePlan {
    steps: usize,
    gamma_fb: [f64; 2],
    interaction_on: bool,
    delta_omega: f64,
}

fn plan_stages(inputs: &SimInputs, protocol: &Protocol, dt: f64) -> Vec<StagePlan> {
    protocol
        .stages
        .iter()
        .map(|s| StagePlan {
            steps: (s.duration / dt).round().max(1.0) as usize,
            gamma_fb: s.gamma_fb,
            interaction_on: s.interaction_on,
            delta_omega: s.delta_omega_override.unwrap_or(inputs.delta_omega),
        })
        .collect()
}

fn stream_rng(seed: u64, traj: usize, channel: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream((traj as u64) << 2 | channel);
    rng
}

/// Integrate a single trajectory. Deterministic in (inputs, protocol, grid,
/// seed, traj_index).
fn run_single(
    inputs: &SimInputs,
    plans: &[StagePlan],
    initial: InitialState,
    grid: SimGrid,
    seed: u64,
    traj_index: usize,
) -> Result<Trajectory> {
    let mut rng = [
        stream_rng(seed, traj_index, 0),
        stream_rng(seed, traj_index, 1),
    ];
    let m = inputs.mass;
    let omega = inputs.omega;
    let dt = grid.dt;
    let sqrt_dt = dt.sqrt();
    // Initial conditions.
    let (mut z, mut v) = match initial {
        InitialState::Fixed { z, v } => (z, v),
        InitialState::Thermal | InitialState::Occupations(_) => {
            let occ = match initial {
                InitialState::Occupations(n) => n,
                _ => [
                    inputs.occupation(Particle::One),
                    inputs.occupation(Particle::Two),
                ],
            };
            let mut z = [0.0; 2];
            let mut v = [0.0; 2];
            for j in 0..2 {
                let zpf = (HBAR / (2.0 * m * omega[j])).sqrt();
                let sigma_z = zpf * (2.0 * occ[j]).sqrt();
                let gz: f64 = rng[j].sample(StandardNormal);
                let gv: f64 = rng[j].sample(StandardNormal);
                z[j] = sigma_z * gz;
                v[j] = sigma_z * omega[j] * gv;
            }
            (z, v)
        }
    };
    let total_steps: usize = plans.iter().map(|p| p.steps).sum();
    let n_stored = total_steps / grid.store_every + 1;
    let mut traj = Trajectory {
        z: [Vec::with_capacity(n_stored), Vec::with_capacity(n_stored)],
        v: [Vec::with_capacity(n_stored), Vec::with_capacity(n_stored)],
    };
    let store = |z: &[f64; 2], v: &[f64; 2], t: &mut Trajectory| {
        for j in 0..2 {
            t.z[j].push(z[j]);
            t.v[j].push(v[j]);
        }
    };
    store(&z, &v, &mut traj);

    // The coupling scale 2 g sqrt(O1 O2); the drive term divides by k, the
    // full-force mode by k'.
    let couple = 2.0 * inputs.g * (omega[0] * omega[1]).sqrt();
    let noise_sigma = [
        (2.0 * inputs.gamma * K_B * inputs.temperature[0] / m).sqrt(),
        (2.0 * inputs.gamma * K_B * inputs.temperature[1] / m).sqrt(),
    ];

    // Modulation phase accumulates only while the interaction runs, so the
    // drive phase at each interaction-on epoch matches delta_phi.
    let mut theta = inputs.delta_phi;
    let mut global_step = 0usize;
    for plan in plans {
        let gamma_tot = [
            inputs.gamma + plan.gamma_fb[0],
            inputs.gamma + plan.gamma_fb[1],
        ];
        // Per-step phase rotation.
        let dtheta = plan.delta_omega * dt;
        let (sin_d, cos_d) = dtheta.sin_cos();
        let (mut sin_th, mut cos_th) = theta.sin_cos();
        let (sin_kd, cos_kd) = inputs.kd.sin_cos();
        // Binding acceleration F_j / m.
        let accel = |sin_t: f64, cos_t: f64, z: &[f64; 2]| -> [f64; 2] {
            if !plan.interaction_on {
                return [0.0; 2];
            }
            // phi_1 = kd - theta, phi_2 = kd + theta.
            let trig = |sign: f64| {
                // sin/cos of kd + sign*theta
                (
                    sin_kd * cos_t + sign * cos_kd * sin_t,
                    cos_kd * cos_t - sign * sin_kd * sin_t,
                )
            };
            let (s1, c1) = trig(-1.0);
            let (s2, c2) = trig(1.0);
            if inputs.full_force {
                let kp = inputs.wavenumber_mod;
                let amp = couple / kp;
                [
                    amp * (s1 * (kp * (z[1] - z[0])).cos() + c1 * (kp * (z[1] - z[0])).sin()),
                    amp * (s2 * (kp * (z[0] - z[1])).cos() + c2 * (kp * (z[0] - z[1])).sin()),
                ]
            } else {
                [
                    couple * (s1 / inputs.wavenumber + c1 * (z[1] - z[0])),
                    couple * (s2 / inputs.wavenumber + c2 * (z[0] - z[1])),
                ]
            }
        };
        for step in 0..plan.steps {
            let xi = [
                rng[0].sample::<f64, _>(StandardNormal),
                rng[1].sample::<f64, _>(StandardNormal),
            ];
            // Phase at the end of this step, for the corrector stage.
            let sin_next = sin_th * cos_d + cos_th * sin_d;
            let cos_next = cos_th * cos_d - sin_th * sin_d;
            let drift = |z: &[f64; 2], v: &[f64; 2], s: f64, c: f64| -> ([f64; 2], [f64; 2]) {
                let f = accel(s, c, z);
                let mut dv = [0.0; 2];
                for j in 0..2 {
                    dv[j] = -gamma_tot[j] * v[j] - omega[j] * omega[j] * z[j] + f[j];
                }
                (*v, dv)
            };
            let (dz0, dv0) = drift(&z, &v, sin_th, cos_th);
            let mut zp = [0.0; 2];
            let mut vp = [0.0; 2];
            for j in 0..2 {
                zp[j] = z[j] + dz0[j] * dt;
                vp[j] = v[j] + dv0[j] * dt + noise_sigma[j] * sqrt_dt * xi[j];
            }
            let (dz1, dv1) = drift(&zp, &vp, sin_next, cos_next);
            for j in 0..2 {
                z[j] += 0.5 * (dz0[j] + dz1[j]) * dt;
                v[j] += 0.5 * (dv0[j] + dv1[j]) * dt + noise_sigma[j] * sqrt_dt * xi[j];
            }
            if !(z[0].is_finite() && z[1].is_finite() && v[0].is_finite() && v[1].is_finite()) {
                return Err(Error::NumericalBlowup {
                    step: global_step + step + 1,
                    detail: format!("state left the finite range (traj {traj_index})"),
                });
            }
            if plan.interaction_on {
                sin_th = sin_next;
                cos_th = cos_next;
                theta += dtheta;
                // Re-anchor the rotation occasionally to stop drift.
                if (step + 1) % 8192 == 0 {
                    let (s, c) = theta.sin_cos();
                    sin_th = s;
                    cos_th = c;
                }
            }
            if (global_step + step + 1) % grid.store_every == 0 {
                store(&z, &v, &mut traj);
            }
        }
        global_step += plan.steps;
    }
    Ok(traj)
}

fn check_grid(inputs: &SimInputs, grid: SimGrid, duration: f64) -> Result<()> {
    let max_dt = SimGrid::max_dt(inputs);
    if grid.dt > max_dt * (1.0 + 1e-12) {
        return Err(Error::Config(format!(
            "dt = {:.3e} s violates the resolution guard ({:.3e} s for these frequencies)",
            grid.dt, max_dt
        )));
    }
    if duration < grid.dt {
        return Err(Error::Config("duration must be at least one step".into()));
    }
    if grid.store_every == 0 {
        return Err(Error::Config("store_every must be at least 1".into()));
    }
    Ok(())
}

/// Integrate an ensemble; trajectories run in parallel and are merged in
/// index order, so the result is bit-identical for a given seed.
pub fn simulate(
    inputs: &SimInputs,
    protocol: &Protocol,
    grid: SimGrid,
    n_traj: usize,
    seed: u64,
) -> Result<TrajectoryEnsemble> {
    protocol.validate()?;
    check_grid(inputs, grid, protocol.total_duration())?;
    let plans = plan_stages(inputs, protocol, grid.dt);
    let trajectories: Result<Vec<Trajectory>> = (0..n_traj)
        .into_par_iter()
        .map(|i| run_single(inputs, &plans, protocol.initial, grid, seed, i))
        .collect();
    let trajectories = trajectories?;
    Ok(TrajectoryEnsemble {
        dt: grid.dt,
        store_every: grid.store_every,
        n_steps: plans.iter().map(|p| p.steps).sum(),
        n_traj,
        seed,
        protocol: protocol.clone(),
        trajectories,
    })
}

/// Run the ensemble but keep only a per-trajectory reduction, in index order.
pub fn simulate_reduced<R: Send>(
    inputs: &SimInputs,
    protocol: &Protocol,
    grid: SimGrid,
    n_traj: usize,
    seed: u64,
    reduce: impl Fn(usize, &Trajectory) -> R + Sync,
) -> Result<Vec<R>> {
    protocol.validate()?;
    check_grid(inputs, grid, protocol.total_duration())?;
    let plans = plan_stages(inputs, protocol, grid.dt);
    (0..n_traj)
        .into_par_iter()
        .map(|i| run_single(inputs, &plans, protocol.initial, grid, seed, i).map(|t| reduce(i, &t)))
        .collect()
}

/// Slowly varying complex amplitude of one stored trajectory channel,
/// a_j(t) = e^{i Omega_j t} (z_j + i v_j/Omega_j) / (2 z_zpf,j).
pub fn to_complex_amplitudes(
    traj: &Trajectory,
    inputs: &SimInputs,
    dt_out: f64,
    j: Particle,
) -> ComplexAmplitudeSeries {
    let omega = inputs.omega[j.idx()];
    let zpf = inputs.z_zpf(j);
    let data: Vec<Complex64> = traj.z[j.idx()]
        .iter()
        .zip(&traj.v[j.idx()])
        .enumerate()
        .map(|(i, (&z, &v))| {
            let t = i as f64 * dt_out;
            Complex64::from_polar(1.0, omega * t) * Complex64::new(z, v / omega)
                / (2.0 * zpf)
        })
        .collect();
    ComplexAmplitudeSeries { data, dt: dt_out, t0: 0.0, frame: FrameInfo::bare() }
}

/// Ensemble-averaged rotating-frame occupations after a quench.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuenchEnsemble {
    /// Time since the interaction switch-on (s).
    pub t: Vec<f64>,
    pub n_1: Vec<f64>,
    pub n_2: Vec<f64>,
    /// Standard errors of the occupation means.
    pub se_1: Vec<f64>,
    pub se_2: Vec<f64>,
    pub cross: Vec<Complex64>,
    pub n_traj: usize,
}

/// Cool particle 1 with the interaction off, then release and couple.
///
/// Returns ensemble means of |b_j(t)|^2 and <b_1* b_2>(t) versus time since
/// switch-on, where b_j are the detuning-branch rotating-frame amplitudes.
pub fn run_quench(
    inputs: &SimInputs,
    gamma_fb: f64,
    t_cool: f64,
    t_free: f64,
    grid: SimGrid,
    n_traj: usize,
    seed: u64,
) -> Result<QuenchEnsemble> {
    if !(gamma_fb >= 0.0) {
        return Err(Error::Config("gamma_fb must be non-negative".into()));
    }
    let protocol = Protocol {
        initial: InitialState::Thermal,
        stages: vec![
            Stage {
                duration: t_cool,
                gamma_fb: [gamma_fb, 0.0],
                interaction_on: false,
                delta_omega_override: None,
            },
            Stage::free(t_free),
        ],
    };
    let dt_out = grid.dt * grid.store_every as f64;
    let cool_steps = (t_cool / grid.dt).round() as usize;
    // First stored sample at or after the switch-on step.
    let first_free = cool_steps.div_ceil(grid.store_every);
    let params = inputs.mode_params()?;
    let delta = params.delta_omega - params.delta_mech();
    struct Reduced {
        n1: Vec<f64>,
        n2: Vec<f64>,
        cross: Vec<Complex64>,
    }
    let per_traj = simulate_reduced(inputs, &protocol, grid, n_traj, seed, |_, traj| {
        let a1 = to_complex_amplitudes(traj, inputs, dt_out, Particle::One);
        let a2 = to_complex_amplitudes(traj, inputs, dt_out, Particle::Two);
        let n = a1.data.len();
        let mut out = Reduced {
            n1: Vec::with_capacity(n - first_free),
            n2: Vec::with_capacity(n - first_free),
            cross: Vec::with_capacity(n - first_free),
        };
        for i in first_free..n {
            let t_since = (i - first_free) as f64 * dt_out;
            // b_1 = a_1 e^{-i delta t/2}, b_2 = a_2 e^{+i delta t/2}
            let rot = Complex64::from_polar(1.0, 0.5 * delta * t_since);
            let b1 = a1.data[i] * rot.conj();
            let b2 = a2.data[i] * rot;
            out.n1.push(b1.norm_sqr());
            out.n2.push(b2.norm_sqr());
            out.cross.push(b1.conj() * b2);
        }
        out
    })?;
    let len = per_traj[0].n1.len();
    let mut ens = QuenchEnsemble {
        t: (0..len).map(|i| i as f64 * dt_out).collect(),
        n_1: vec![0.0; len],
        n_2: vec![0.0; len],
        se_1: vec![0.0; len],
        se_2: vec![0.0; len],
        cross: vec![Complex64::new(0.0, 0.0); len],
        n_traj,
    };
    for r in &per_traj {
        for i in 0..len {
            ens.n_1[i] += r.n1[i];
            ens.n_2[i] += r.n2[i];
            ens.cross[i] += r.cross[i];
        }
    }
    let nt = n_traj as f64;
    for i in 0..len {
        ens.n_1[i] /= nt;
        ens.n_2[i] /= nt;
        ens.cross[i] /= nt;
    }
    for r in &per_traj {
        for i in 0..len {
            ens.se_1[i] += (r.n1[i] - ens.n_1[i]).powi(2);
            ens.se_2[i] += (r.n2[i] - ens.n_2[i]).powi(2);
        }
    }
    for i in 0..len {
        ens.se_1[i] = (ens.se_1[i] / (nt - 1.0) / nt).sqrt();
        ens.se_2[i] = (ens.se_2[i] / (nt - 1.0) / nt).sqrt();
    }
    Ok(ens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModeParams;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    const MASS: f64 = 9.0e-18; // kg, 105 nm silica sphere
    const WAVENUMBER: f64 = 2.0 * PI / 1064e-9;

    fn inputs(g_hz: f64, gamma_hz: f64, delta_omega_hz: f64, kd: f64) -> SimInputs {
        let params = ModeParams::new(
            2.0 * PI * 27e3,
            2.0 * PI * 33e3,
            2.0 * PI * gamma_hz,
            2.0 * PI * g_hz,
            2.0 * PI * delta_omega_hz,
            0.0,
            kd,
            ModeParams::thermal_occupation(2.0 * PI * 27e3, 300.0),
            ModeParams::thermal_occupation(2.0 * PI * 33e3, 300.0),
        )
        .unwrap();
        SimInputs::from_mode_params(&params, MASS, WAVENUMBER).unwrap()
    }

    #[test]
    fn resolution_guard_rejects_coarse_steps() {
        let inp = inputs(0.0, 300.0, 0.0, 0.0);
        let bad = SimGrid { dt: 10.0 * SimGrid::max_dt(&inp), store_every: 1 };
        let err = simulate(&inp, &Protocol::free_run(1e-3), bad, 1, 0);
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn same_seed_reproduces_bit_identical_ensembles() {
        let inp = inputs(700.0, 300.0, 6e3, 0.4);
        let grid = SimGrid::auto(&inp, 4);
        let a = simulate(&inp, &Protocol::free_run(2e-3), grid, 3, 42).unwrap();
        let b = simulate(&inp, &Protocol::free_run(2e-3), grid, 3, 42).unwrap();
        for (ta, tb) in a.trajectories.iter().zip(&b.trajectories) {
            assert!(ta.z[0] == tb.z[0] && ta.v[1] == tb.v[1]);
        }
        let c = simulate(&inp, &Protocol::free_run(2e-3), grid, 3, 43).unwrap();
        assert!(a.trajectories[0].z[0] != c.trajectories[0].z[0]);
    }

    #[test]
    fn undamped_oscillator_follows_the_damped_cosine() {
        // T = 0, g = 0, initial displacement: z(t) is a damped cosine with
        // envelope e^{-gamma t/2} and frequency sqrt(Omega^2 - gamma^2/4).
        let mut inp = inputs(0.0, 300.0, 0.0, 0.0);
        inp.temperature = [0.0; 2];
        let z0 = 5e-9;
        let protocol = Protocol {
            initial: InitialState::Fixed { z: [z0, 0.0], v: [0.0; 2] },
            stages: vec![Stage::free(1.0e-3)],
        };
        // Phase accuracy of the second-order integrator over ~170 periods
        // needs a much finer step than the resolution guard.
        let grid = SimGrid { dt: SimGrid::max_dt(&inp) / 64.0, store_every: 8 };
        let ens = simulate(&inp, &protocol, grid, 1, 0).unwrap();
        let gamma = inp.gamma;
        let omega = inp.omega[0];
        let omega_d = (omega * omega - 0.25 * gamma * gamma).sqrt();
        let dt = ens.dt_out();
        let mut max_rel: f64 = 0.0;
        for (i, &z) in ens.trajectories[0].z[0].iter().enumerate() {
            let t = i as f64 * dt;
            let expected = z0
                * (-0.5 * gamma * t).exp()
                * ((omega_d * t).cos() + 0.5 * gamma / omega_d * (omega_d * t).sin());
            max_rel = max_rel.max((z - expected).abs() / z0);
        }
        assert!(max_rel < 1e-3, "max deviation {max_rel:e}");
    }

    #[test]
    fn equipartition_without_coupling() {
        let inp = inputs(0.0, 2000.0, 0.0, 0.0);
        let grid = SimGrid::auto(&inp, 2);
        let duration = 12.0 / inp.gamma;
        let skip_time = 4.0 / inp.gamma;
        let per_traj: Vec<[f64; 2]> = simulate_reduced(
            &inp,
            &Protocol::free_run(duration),
            grid,
            220,
            7,
            |_, traj| {
                let skip = (skip_time / grid.dt / grid.store_every as f64) as usize;
                let mut out = [0.0; 2];
                for j in 0..2 {
                    let zs = &traj.z[j][skip..];
                    out[j] = zs.iter().map(|z| z * z).sum::<f64>() / zs.len() as f64;
                }
                out
            },
        )
        .unwrap();
        for j in 0..2 {
            let vals: Vec<f64> = per_traj.iter().map(|v| v[j]).collect();
            let (mean, se) = crate::numerics::mean_and_se(&vals);
            let expected = K_B * inp.temperature[j] / (inp.mass * inp.omega[j] * inp.omega[j]);
            assert!(
                (mean - expected).abs() < 3.0 * se.max(0.01 * expected),
                "particle {j}: variance {mean:e} vs equipartition {expected:e} (se {se:e})"
            );
        }
    }

    #[test]
    fn halving_dt_leaves_stationary_variance_within_errors() {
        let inp = inputs(0.0, 2000.0, 0.0, 0.0);
        let variance = |dt_scale: f64, seed: u64| {
            let grid = SimGrid { dt: SimGrid::max_dt(&inp) * dt_scale, store_every: 1 };
            let duration = 10.0 / inp.gamma;
            let per_traj: Vec<f64> = simulate_reduced(
                &inp,
                &Protocol::free_run(duration),
                grid,
                500,
                seed,
                |_, traj| {
                    let skip = traj.z[0].len() / 3;
                    let zs = &traj.z[0][skip..];
                    zs.iter().map(|z| z * z).sum::<f64>() / zs.len() as f64
                },
            )
            .unwrap();
            crate::numerics::mean_and_se(&per_traj)
        };
        let (v1, se1) = variance(0.98, 11);
        let (v2, se2) = variance(0.49, 12);
        let combined = (se1 * se1 + se2 * se2).sqrt();
        assert!(
            (v1 - v2).abs() < 3.0 * combined,
            "dt bias {:.3e} exceeds errors {:.3e}",
            (v1 - v2).abs(),
            combined
        );
    }

    #[test]
    fn complex_amplitude_of_pure_cosine_is_unity() {
        let inp = inputs(0.0, 0.0, 0.0, 0.0);
        let omega = inp.omega[0];
        let zpf = inp.z_zpf(Particle::One);
        let dt = 1e-7;
        let n = 4000;
        let traj = Trajectory {
            z: [
                (0..n).map(|i| 2.0 * zpf * (omega * i as f64 * dt).cos()).collect(),
                vec![0.0; n],
            ],
            v: [
                (0..n).map(|i| -2.0 * zpf * omega * (omega * i as f64 * dt).sin()).collect(),
                vec![0.0; n],
            ],
        };
        let a = to_complex_amplitudes(&traj, &inp, dt, Particle::One);
        for v in &a.data {
            assert_relative_eq!(v.re, 1.0, max_relative = 1e-10);
            assert!(v.im.abs() < 1e-10);
        }
        let zero = to_complex_amplitudes(&traj, &inp, dt, Particle::Two);
        assert!(zero.data.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn thermal_amplitudes_estimate_the_occupation() {
        let inp = inputs(0.0, 2000.0, 0.0, 0.0);
        let grid = SimGrid::auto(&inp, 2);
        let duration = 12.0 / inp.gamma;
        let dt_out = grid.dt * grid.store_every as f64;
        let per_traj: Vec<f64> = simulate_reduced(
            &inp,
            &Protocol::free_run(duration),
            grid,
            220,
            3,
            |_, traj| {
                let a = to_complex_amplitudes(traj, &inp, dt_out, Particle::One);
                let skip = a.data.len() / 3;
                a.data[skip..].iter().map(|v| v.norm_sqr()).sum::<f64>()
                    / (a.data.len() - skip) as f64
            },
        )
        .unwrap();
        let (mean, se) = crate::numerics::mean_and_se(&per_traj);
        let expected = K_B * inp.temperature[0] / (HBAR * inp.omega[0]);
        assert!(
            (mean - expected).abs() < 3.0 * se.max(0.01 * expected),
            "occupation {mean:e} vs thermal {expected:e} (se {se:e})"
        );
    }

    #[test]
    fn parametric_instability_triggers_the_blowup_error() {
        // Resonant sum-branch drive far above the damping rate, at zero
        // temperature so the growth is purely parametric.
        let mut inp = inputs(40e3, 0.0, 60e3, 0.0);
        inp.temperature = [0.0; 2];
        let protocol = Protocol {
            initial: InitialState::Fixed { z: [1e-9, -1e-9], v: [0.0; 2] },
            stages: vec![Stage::free(0.5)],
        };
        let grid = SimGrid::auto(&inp, 64);
        let res = simulate(&inp, &protocol, grid, 1, 0);
        match res {
            Err(Error::NumericalBlowup { step, .. }) => assert!(step > 0),
            other => panic!("expected blowup, got {other:?}"),
        }
    }

    #[test]
    fn quench_without_feedback_stays_flat() {
        let inp = inputs(0.0, 1500.0, 6e3, 0.0);
        let grid = SimGrid::auto(&inp, 8);
        let q = run_quench(&inp, 0.0, 2e-3, 6e-3, grid, 300, 5).unwrap();
        let n1_expected = K_B * inp.temperature[0] / (HBAR * inp.omega[0]);
        // Means at start and end of the free stage agree with thermal.
        for idx in [0, q.t.len() / 2, q.t.len() - 1] {
            assert!(
                (q.n_1[idx] - n1_expected).abs() < 4.0 * q.se_1[idx].max(0.02 * n1_expected),
                "occupation drifted: {} vs {} (se {})",
                q.n_1[idx],
                n1_expected,
                q.se_1[idx]
            );
        }
    }
}
