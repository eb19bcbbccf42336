//! Rotating-wave layer: branch dynamical matrices, complex eigenfrequencies
//! and eigenvectors, exceptional points, evolution matrices and the
//! non-equilibrium (quench) solutions.
//!
//! On every branch the rotating-frame amplitudes obey
//! (d/dt + gamma/2) b = (i/2) M b, where M is the traceless matrix returned
//! by [`dynamical_matrix`]. Writing H = M/2, the evolution factorizes as
//! b(t) = U(t) b(0) e^{-gamma t / 2} with U(t) = exp(i H t).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModeParams, ResonanceBranch};
use crate::numerics::{integrate_complex, integrate_real, sinc_c};
use crate::oracle::M2;

/// Relative threshold below which Lambda is treated as exactly degenerate.
const EP_REL_TOL: f64 = 1e-7;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// The bracketed branch matrix M (the i/2 factor and the -gamma/2 decay are
/// applied by callers). All three are traceless.
pub fn dynamical_matrix(params: &ModeParams, branch: ResonanceBranch) -> M2 {
    let delta = branch.effective_detuning(params);
    let g = branch.coupling(params);
    let g_t = Complex64::from_polar(g, params.delta_phi); // g e^{i dphi}
    match branch {
        ResonanceBranch::Detuning => {
            let phase = Complex64::from_polar(1.0, -params.kd);
            [
                [c(-delta, 0.0), g_t * phase],
                [g_t.conj() * phase, c(delta, 0.0)],
            ]
        }
        ResonanceBranch::Sum | ResonanceBranch::SingleMode(_) => {
            let phase = Complex64::from_polar(1.0, params.kd);
            let (top, bottom) = match branch {
                ResonanceBranch::Sum => (g_t.conj() * phase, -g_t * phase),
                _ => (-g_t.conj() * phase, g_t * phase),
            };
            [[c(delta, 0.0), top], [bottom, c(-delta, 0.0)]]
        }
    }
}

/// Lambda^2 for a branch: delta^2 + g^2 e^{-2ikd} on the detuning branch,
/// delta^2 - g^2 e^{2ikd} on the sum and single-mode branches.
///
/// When the value lands on the real axis to within rounding (the symmetric
/// points kd = n pi/2), the stray imaginary part is snapped to +0 so that the
/// principal square root behaves as it does for the exact expression.
pub fn lambda_squared(params: &ModeParams, branch: ResonanceBranch) -> Complex64 {
    let delta = branch.effective_detuning(params);
    let g = branch.coupling(params);
    let mut v = match branch {
        ResonanceBranch::Detuning => {
            c(delta * delta, 0.0) + g * g * Complex64::from_polar(1.0, -2.0 * params.kd)
        }
        _ => c(delta * delta, 0.0) - g * g * Complex64::from_polar(1.0, 2.0 * params.kd),
    };
    let scale = delta * delta + g * g;
    if v.im.abs() < 1e-14 * scale {
        v.im = 0.0;
    }
    if v.re.abs() < 1e-28 * scale {
        v.re = 0.0;
    }
    v
}

/// Principal-branch Lambda.
pub fn lambda(params: &ModeParams, branch: ResonanceBranch) -> Complex64 {
    lambda_squared(params, branch).sqrt()
}

/// Eigen-solution of one resonance branch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeSolution {
    pub branch: ResonanceBranch,
    /// Principal square root; the eigenfrequencies are +/- lambda / 2.
    pub lambda: Complex64,
    pub gamma: f64,
    /// True when the eigenvalues coalesce (exceptional point); the
    /// eigenvectors are then undefined and diagonalization is refused.
    pub degenerate: bool,
    /// Unit-norm right eigenvectors for +lambda/2 and -lambda/2.
    pub eigvec_plus: Option<[Complex64; 2]>,
    pub eigvec_minus: Option<[Complex64; 2]>,
}

impl ModeSolution {
    pub fn freq_plus(&self) -> Complex64 {
        0.5 * self.lambda
    }

    pub fn freq_minus(&self) -> Complex64 {
        -0.5 * self.lambda
    }
}

/// Solve one branch: Lambda, the +/- eigenfrequencies, and the normalized
/// right eigenvectors. At an exceptional point the solution is flagged
/// degenerate and carries no eigenvectors.
pub fn eigen_solution(params: &ModeParams, branch: ResonanceBranch) -> ModeSolution {
    let delta = branch.effective_detuning(params);
    let g = branch.coupling(params);
    let lam = lambda(params, branch);
    let scale = (delta * delta + g * g).sqrt();
    let degenerate = lam.norm() <= EP_REL_TOL * scale || scale == 0.0;
    if degenerate {
        return ModeSolution {
            branch,
            lambda: lam,
            gamma: params.gamma,
            degenerate,
            eigvec_plus: None,
            eigvec_minus: None,
        };
    }
    let vec = |lam_signed: Complex64| -> [Complex64; 2] {
        let first = match branch {
            ResonanceBranch::Detuning => {
                // (e^{i dphi} e^{i kd} (-delta + lam), g)
                Complex64::from_polar(1.0, params.delta_phi + params.kd) * (lam_signed - delta)
            }
            ResonanceBranch::Sum => {
                // (-e^{-i dphi} e^{-i kd} (delta + lam), g)
                -Complex64::from_polar(1.0, -(params.delta_phi + params.kd)) * (lam_signed + delta)
            }
            ResonanceBranch::SingleMode(_) => {
                Complex64::from_polar(1.0, -(params.delta_phi + params.kd)) * (lam_signed + delta)
            }
        };
        let second = c(g, 0.0);
        let norm = (first.norm_sqr() + second.norm_sqr()).sqrt();
        [first / norm, second / norm]
    };
    ModeSolution {
        branch,
        lambda: lam,
        gamma: params.gamma,
        degenerate,
        eigvec_plus: Some(vec(lam)),
        eigvec_minus: Some(vec(-lam)),
    }
}

/// Complex eigenfrequency difference on the detuning branch at exact
/// resonance, as a function of kd: DeltaOmega_det(kd) = g e^{-i kd}.
///
/// The grid traces the full circle of radius g; this is the continuous branch
/// of Lambda rather than the principal square root.
pub fn eigenfrequency_locus(params: &ModeParams, kd_grid: &[f64]) -> Result<Vec<Complex64>> {
    let delta = ResonanceBranch::Detuning.effective_detuning(params);
    if delta.abs() > 1e-9 * params.omega_mean().max(params.g) {
        return Err(Error::Config(format!(
            "the eigenfrequency locus is defined at zero effective detuning; got delta = {delta}"
        )));
    }
    Ok(kd_grid
        .iter()
        .map(|&kd| Complex64::from_polar(params.g, -kd))
        .collect())
}

/// Coefficients of the evolution matrix U(tau) = [[a1, b1], [b2, a2]].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionCoefficients {
    pub alpha_1: Complex64,
    pub alpha_2: Complex64,
    pub beta_1: Complex64,
    pub beta_2: Complex64,
    pub tau: f64,
}

impl EvolutionCoefficients {
    pub fn matrix(&self) -> M2 {
        [[self.alpha_1, self.beta_1], [self.beta_2, self.alpha_2]]
    }

    pub fn det(&self) -> Complex64 {
        self.alpha_1 * self.alpha_2 - self.beta_1 * self.beta_2
    }
}

/// Precomputed branch matrix and eigenvalue for repeated evolution
/// evaluations (quadrature integrands call this thousands of times).
#[derive(Debug, Clone)]
pub struct Propagator {
    m: M2,
    lam: Complex64,
}

impl Propagator {
    pub fn new(params: &ModeParams, branch: ResonanceBranch) -> Propagator {
        Propagator { m: dynamical_matrix(params, branch), lam: lambda(params, branch) }
    }

    /// U(tau) = exp(i M tau / 2) through the closed form for a traceless
    /// matrix, cos(Lambda tau/2) I + i tau (M/2) sinc(Lambda tau/2).
    ///
    /// The sinc form is exact at an exceptional point (Lambda -> 0), so no
    /// special casing is needed there.
    pub fn coeffs(&self, tau: f64) -> EvolutionCoefficients {
        let x = 0.5 * self.lam * tau;
        let cosx = x.cos();
        let s = sinc_c(x) * c(0.0, 0.5 * tau);
        EvolutionCoefficients {
            alpha_1: cosx + s * self.m[0][0],
            alpha_2: cosx + s * self.m[1][1],
            beta_1: s * self.m[0][1],
            beta_2: s * self.m[1][0],
            tau,
        }
    }

    /// Coefficients of W(u) = e^{-gamma u / 2} U(u), assembled from
    /// exponentials whose real exponents are non-positive whenever
    /// |Im Lambda| <= gamma. The plain product cos(Lambda u/2) e^{-gamma u/2}
    /// pairs an overflowing factor with an underflowing one at large u; this
    /// form never does.
    pub fn damped_coeffs(&self, u: f64, gamma: f64) -> EvolutionCoefficients {
        let x = 0.5 * self.lam * u;
        if x.norm() < 1e-4 {
            let c0 = self.coeffs(u);
            let d = (-0.5 * gamma * u).exp();
            return EvolutionCoefficients {
                alpha_1: c0.alpha_1 * d,
                alpha_2: c0.alpha_2 * d,
                beta_1: c0.beta_1 * d,
                beta_2: c0.beta_2 * d,
                tau: u,
            };
        }
        let i = c(0.0, 1.0);
        let ep = ((i * self.lam - gamma) * (0.5 * u)).exp();
        let em = ((-i * self.lam - gamma) * (0.5 * u)).exp();
        let cos_d = 0.5 * (ep + em);
        // sin(Lambda u/2) e^{-gamma u/2} / Lambda
        let sin_over_lam = (ep - em) / (2.0 * i * self.lam);
        EvolutionCoefficients {
            alpha_1: cos_d + i * self.m[0][0] * sin_over_lam,
            alpha_2: cos_d + i * self.m[1][1] * sin_over_lam,
            beta_1: i * self.m[0][1] * sin_over_lam,
            beta_2: i * self.m[1][0] * sin_over_lam,
            tau: u,
        }
    }
}

/// Evolution matrix coefficients at delay `tau` for one branch.
pub fn evolution(params: &ModeParams, branch: ResonanceBranch, tau: f64) -> EvolutionCoefficients {
    Propagator::new(params, branch).coeffs(tau)
}

/// Ensemble-averaged occupations and cross-correlation after a quench.
///
/// At t = 0 the interaction switches on with the oscillators prepared at
/// occupations (n1_init, n2_init); the bath occupations in `params` set the
/// stationary end point. First term: decaying initial condition; second:
/// the accumulated thermal drive, integrated by adaptive quadrature.
pub fn quench_occupations(
    params: &ModeParams,
    branch: ResonanceBranch,
    n1_init: f64,
    n2_init: f64,
    t: f64,
) -> Result<(f64, f64, Complex64)> {
    if t < 0.0 || n1_init < 0.0 || n2_init < 0.0 {
        return Err(Error::Config(
            "quench time and initial occupations must be non-negative".into(),
        ));
    }
    let gamma = params.gamma;
    let prop = Propagator::new(params, branch);
    // W(t) = e^{-gamma t/2} U(t) absorbs the decay into the coefficients.
    let w_t = prop.damped_coeffs(t, gamma);
    let init_1 = n1_init * w_t.alpha_1.norm_sqr() + n2_init * w_t.beta_1.norm_sqr();
    let init_2 = n2_init * w_t.alpha_2.norm_sqr() + n1_init * w_t.beta_2.norm_sqr();
    let init_cross =
        n1_init * w_t.alpha_1.conj() * w_t.beta_2 + n2_init * w_t.beta_1.conj() * w_t.alpha_2;
    if t == 0.0 || gamma == 0.0 {
        return Ok((init_1, init_2, init_cross));
    }
    let lam = lambda(params, branch);
    let oscillations = (lam.re.abs() * t / std::f64::consts::PI) as usize;
    let panels = (oscillations * 4 + 32).min(4096);
    let (n1, n2) = (params.n_1, params.n_2);
    let drive_1 = integrate_real(
        |s| {
            let w = prop.damped_coeffs(s, gamma);
            n1 * w.alpha_1.norm_sqr() + n2 * w.beta_1.norm_sqr()
        },
        0.0,
        t,
        1e-8,
        panels,
    )?;
    let drive_2 = integrate_real(
        |s| {
            let w = prop.damped_coeffs(s, gamma);
            n2 * w.alpha_2.norm_sqr() + n1 * w.beta_2.norm_sqr()
        },
        0.0,
        t,
        1e-8,
        panels,
    )?;
    let drive_cross = integrate_complex(
        |s| {
            let w = prop.damped_coeffs(s, gamma);
            n1 * w.alpha_1.conj() * w.beta_2 + n2 * w.beta_1.conj() * w.alpha_2
        },
        0.0,
        t,
        1e-8,
        panels,
    )?;
    Ok((
        init_1 + gamma * drive_1,
        init_2 + gamma * drive_2,
        init_cross + gamma * drive_cross,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Particle;
    use crate::oracle::{eigenvalues_generic, expm, mat_mul, mat_norm, mat_vec};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use std::f64::consts::PI;

    fn params(
        delta: f64,
        g: f64,
        kd: f64,
        delta_phi: f64,
        branch: ResonanceBranch,
    ) -> ModeParams {
        // Build mode parameters so that the requested branch has effective
        // detuning `delta`.
        let omega_1 = 2.0 * PI * 27e3;
        let omega_2 = 2.0 * PI * 33e3;
        let delta_omega = match branch {
            ResonanceBranch::Detuning => omega_2 - omega_1 + delta,
            ResonanceBranch::Sum => omega_1 + omega_2 + delta,
            ResonanceBranch::SingleMode(Particle::One) => 2.0 * omega_1 + delta,
            ResonanceBranch::SingleMode(Particle::Two) => 2.0 * omega_2 + delta,
        };
        ModeParams::new(
            omega_1,
            omega_2,
            2.0 * PI * 150.0,
            g,
            delta_omega,
            delta_phi,
            kd,
            1e8,
            0.9e8,
        )
        .unwrap()
    }

    fn random_params(rng: &mut ChaCha12Rng, branch: ResonanceBranch) -> ModeParams {
        let delta = 2.0 * PI * rng.random_range(-2000.0..2000.0);
        let g = 2.0 * PI * rng.random_range(10.0..1500.0);
        let kd = rng.random_range(-PI..PI);
        let dphi = rng.random_range(-PI..PI);
        params(delta, g, kd, dphi, branch)
    }

    const BRANCHES: [ResonanceBranch; 4] = [
        ResonanceBranch::Detuning,
        ResonanceBranch::Sum,
        ResonanceBranch::SingleMode(Particle::One),
        ResonanceBranch::SingleMode(Particle::Two),
    ];

    #[test]
    fn matrices_are_traceless() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for branch in BRANCHES {
            for _ in 0..50 {
                let p = random_params(&mut rng, branch);
                let m = dynamical_matrix(&p, branch);
                assert!((m[0][0] + m[1][1]).norm() < 1e-12 * mat_norm(&m));
            }
        }
    }

    #[test]
    fn detuning_matrix_is_hermitian_when_reciprocal() {
        let p = params(2.0 * PI * 300.0, 2.0 * PI * 700.0, 0.0, 0.0, ResonanceBranch::Detuning);
        let m = dynamical_matrix(&p, ResonanceBranch::Detuning);
        assert!((m[0][1] - m[1][0].conj()).norm() < 1e-12 * mat_norm(&m));
        assert!(m[0][0].im.abs() < 1e-30);
    }

    #[test]
    fn sum_branch_off_diagonal_product() {
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        for _ in 0..30 {
            let p = random_params(&mut rng, ResonanceBranch::Sum);
            let m = dynamical_matrix(&p, ResonanceBranch::Sum);
            let expected = -Complex64::from_polar(p.g * p.g, 2.0 * p.kd);
            assert!((m[0][1] * m[1][0] - expected).norm() < 1e-10 * p.g * p.g);
        }
    }

    #[test]
    fn lambda_matches_stated_resonant_cases() {
        let g = 2.0 * PI * 1e3;
        let p = params(0.0, g, 0.0, 0.0, ResonanceBranch::Detuning);
        let lam = lambda(&p, ResonanceBranch::Detuning);
        assert_relative_eq!(lam.re, g, max_relative = 1e-12);
        assert_abs_diff_eq!(lam.im, 0.0, epsilon = 1e-9);

        let p = params(0.0, g, PI / 2.0, 0.0, ResonanceBranch::Detuning);
        let lam = lambda(&p, ResonanceBranch::Detuning);
        assert_abs_diff_eq!(lam.re, 0.0, epsilon = 1e-9);
        assert_relative_eq!(lam.im, g, max_relative = 1e-12);
    }

    #[test]
    fn exceptional_points_are_flagged() {
        let g = 2.0 * PI * 1e3;
        for sign in [1.0, -1.0] {
            let p = params(sign * g, g, PI / 2.0, 0.0, ResonanceBranch::Detuning);
            let sol = eigen_solution(&p, ResonanceBranch::Detuning);
            assert!(sol.degenerate, "delta = {sign} g should be an exceptional point");
            assert!(sol.eigvec_plus.is_none() && sol.eigvec_minus.is_none());
        }
        // Just off the EP the solution is regular again.
        let p = params(g * 1.001, g, PI / 2.0, 0.0, ResonanceBranch::Detuning);
        assert!(!eigen_solution(&p, ResonanceBranch::Detuning).degenerate);
    }

    #[test]
    fn eigenvectors_satisfy_the_eigenproblem_and_are_normalized() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        for branch in BRANCHES {
            for _ in 0..250 {
                let p = random_params(&mut rng, branch);
                let sol = eigen_solution(&p, branch);
                if sol.degenerate {
                    continue;
                }
                let m = dynamical_matrix(&p, branch);
                let h = [[0.5 * m[0][0], 0.5 * m[0][1]], [0.5 * m[1][0], 0.5 * m[1][1]]];
                let h_norm = mat_norm(&h);
                for (vec, freq) in [
                    (sol.eigvec_plus.unwrap(), sol.freq_plus()),
                    (sol.eigvec_minus.unwrap(), sol.freq_minus()),
                ] {
                    let hv = mat_vec(&h, &vec);
                    let res = ((hv[0] - freq * vec[0]).norm_sqr()
                        + (hv[1] - freq * vec[1]).norm_sqr())
                    .sqrt();
                    assert!(res < 1e-12 * h_norm, "eigen residual {res:e} too large");
                    let norm = (vec[0].norm_sqr() + vec[1].norm_sqr()).sqrt();
                    assert_relative_eq!(norm, 1.0, max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn eigenvalues_match_generic_dense_solver() {
        let mut rng = ChaCha12Rng::seed_from_u64(14);
        for _ in 0..1000 {
            let branch = BRANCHES[rng.random_range(0..4)];
            let p = random_params(&mut rng, branch);
            let m = dynamical_matrix(&p, branch);
            let (l1, l2) = eigenvalues_generic(&m);
            let lam = lambda(&p, branch);
            let scale = mat_norm(&m).max(1e-300);
            let direct = ((l1 - lam).norm() + (l2 + lam).norm()) / scale;
            let swapped = ((l1 + lam).norm() + (l2 - lam).norm()) / scale;
            assert!(direct.min(swapped) < 1e-12, "eigenvalue mismatch {:e}", direct.min(swapped));
        }
    }

    #[test]
    fn locus_is_a_circle_of_radius_g() {
        let p = params(0.0, 2.0 * PI * 276.0, 0.3, 0.0, ResonanceBranch::Detuning);
        let grid: Vec<f64> = (0..=64).map(|i| -PI + 2.0 * PI * i as f64 / 64.0).collect();
        let locus = eigenfrequency_locus(&p, &grid).unwrap();
        for (kd, v) in grid.iter().zip(&locus) {
            assert_relative_eq!(v.norm(), p.g, max_relative = 1e-12);
            assert_relative_eq!(v.re, p.g * kd.cos(), epsilon = 1e-9);
            assert_relative_eq!(v.im, -p.g * kd.sin(), epsilon = 1e-9);
        }
        // kd = 0 -> g, kd = pi/2 -> -i g.
        let ends = eigenfrequency_locus(&p, &[0.0, PI / 2.0]).unwrap();
        assert_relative_eq!(ends[0].re, p.g, max_relative = 1e-12);
        assert_relative_eq!(ends[1].im, -p.g, max_relative = 1e-12);

        let off = params(2.0 * PI * 10.0, 2.0 * PI * 276.0, 0.3, 0.0, ResonanceBranch::Detuning);
        assert!(eigenfrequency_locus(&off, &grid).is_err());
    }

    #[test]
    fn lambda_is_continuous_and_conjugates_across_the_cut() {
        // At resonance, principal Lambda is continuous on either side of
        // kd = pi/2 and the two sides are complex conjugates.
        let g = 2.0 * PI * 500.0;
        let mut prev: Option<Complex64> = None;
        for i in 0..200 {
            let kd = 0.05 + (PI / 2.0 - 0.1) * i as f64 / 199.0;
            let lam = lambda(&params(0.0, g, kd, 0.0, ResonanceBranch::Detuning), ResonanceBranch::Detuning);
            if let Some(p) = prev {
                assert!((lam - p).norm() < 0.05 * g, "jump in Lambda at kd = {kd}");
            }
            prev = Some(lam);
        }
        for u in [0.01, 0.1, 0.3] {
            let below = lambda(
                &params(0.0, g, PI / 2.0 - u, 0.0, ResonanceBranch::Detuning),
                ResonanceBranch::Detuning,
            );
            let above = lambda(
                &params(0.0, g, PI / 2.0 + u, 0.0, ResonanceBranch::Detuning),
                ResonanceBranch::Detuning,
            );
            assert!((above - below.conj()).norm() < 1e-9 * g);
        }
    }

    #[test]
    fn evolution_starts_from_identity() {
        let mut rng = ChaCha12Rng::seed_from_u64(15);
        for branch in BRANCHES {
            let p = random_params(&mut rng, branch);
            let u = evolution(&p, branch, 0.0);
            assert!((u.alpha_1 - 1.0).norm() < 1e-15);
            assert!((u.alpha_2 - 1.0).norm() < 1e-15);
            assert!(u.beta_1.norm() < 1e-15 && u.beta_2.norm() < 1e-15);
        }
    }

    #[test]
    fn resonant_reciprocal_evolution_swaps_the_state() {
        let g = 2.0 * PI * 800.0;
        let p = params(0.0, g, 0.0, 0.0, ResonanceBranch::Detuning);
        let u = evolution(&p, ResonanceBranch::Detuning, PI / g);
        assert!(u.alpha_1.norm() < 1e-12 && u.alpha_2.norm() < 1e-12);
        assert_relative_eq!(u.beta_1.norm(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(u.beta_2.norm(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn evolution_determinant_is_unity() {
        let mut rng = ChaCha12Rng::seed_from_u64(16);
        for branch in BRANCHES {
            for _ in 0..100 {
                let p = random_params(&mut rng, branch);
                // Several eigenperiods; keeps ||U|| of order one so the
                // identity is testable at machine precision.
                let lam_norm = lambda(&p, branch).norm().max(1e-9);
                let tau = rng.random_range(0.0..6.0) / lam_norm;
                let u = evolution(&p, branch, tau);
                assert!((u.det() - 1.0).norm() < 1e-12, "det U = {:?}", u.det());
            }
        }
    }

    #[test]
    fn evolution_at_an_exceptional_point_uses_the_limit() {
        let g = 2.0 * PI * 1e3;
        let p = params(g, g, PI / 2.0, 0.0, ResonanceBranch::Detuning);
        assert!(eigen_solution(&p, ResonanceBranch::Detuning).degenerate);
        let tau = 0.8 / g;
        let u = evolution(&p, ResonanceBranch::Detuning, tau);
        // Compare against the brute-force matrix exponential.
        let m = dynamical_matrix(&p, ResonanceBranch::Detuning);
        let i_half_tau = Complex64::new(0.0, 0.5 * tau);
        let a = [
            [m[0][0] * i_half_tau, m[0][1] * i_half_tau],
            [m[1][0] * i_half_tau, m[1][1] * i_half_tau],
        ];
        let e = expm(&a);
        assert!((u.alpha_1 - e[0][0]).norm() < 1e-12);
        assert!((u.beta_1 - e[0][1]).norm() < 1e-12);
        assert!((u.det() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn reciprocal_evolution_is_unitary() {
        let g = 2.0 * PI * 650.0;
        for kd_n in [0.0, PI, -PI] {
            let p = params(2.0 * PI * 120.0, g, kd_n, 0.4, ResonanceBranch::Detuning);
            for tau in [0.3 / g, 2.0 / g, 11.0 / g] {
                let u = evolution(&p, ResonanceBranch::Detuning, tau).matrix();
                let u_dag = [[u[0][0].conj(), u[1][0].conj()], [u[0][1].conj(), u[1][1].conj()]];
                let prod = mat_mul(&u_dag, &u);
                let dev = ((prod[0][0] - 1.0).norm_sqr()
                    + prod[0][1].norm_sqr()
                    + prod[1][0].norm_sqr()
                    + (prod[1][1] - 1.0).norm_sqr())
                .sqrt();
                assert!(dev < 1e-12, "unitarity deviation {dev:e}");
            }
        }
    }

    #[test]
    fn evolution_matches_printed_coefficient_forms() {
        // Spot-check the closed forms against the generic construction.
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        for _ in 0..50 {
            let p = random_params(&mut rng, ResonanceBranch::Detuning);
            let delta = ResonanceBranch::Detuning.effective_detuning(&p);
            let lam = lambda(&p, ResonanceBranch::Detuning);
            let tau = rng.random_range(0.0..10.0) / p.g;
            let x = 0.5 * lam * tau;
            let u = evolution(&p, ResonanceBranch::Detuning, tau);
            let alpha_1 = x.cos() - Complex64::new(0.0, 1.0) * (delta / lam) * x.sin();
            let beta_1 = Complex64::new(0.0, 1.0)
                * Complex64::from_polar(p.g, p.delta_phi)
                * x.sin()
                / lam
                * Complex64::from_polar(1.0, -p.kd);
            assert!((u.alpha_1 - alpha_1).norm() < 1e-11);
            assert!((u.beta_1 - beta_1).norm() < 1e-11);
        }
        for _ in 0..50 {
            let p = random_params(&mut rng, ResonanceBranch::Sum);
            let delta = ResonanceBranch::Sum.effective_detuning(&p);
            let lam = lambda(&p, ResonanceBranch::Sum);
            let tau = rng.random_range(0.0..10.0) / p.g;
            let x = 0.5 * lam * tau;
            let u = evolution(&p, ResonanceBranch::Sum, tau);
            let alpha_1 = x.cos() + Complex64::new(0.0, 1.0) * (delta / lam) * x.sin();
            let beta_1 = Complex64::new(0.0, 1.0)
                * Complex64::from_polar(p.g, -p.delta_phi)
                * x.sin()
                / lam
                * Complex64::from_polar(1.0, p.kd);
            assert!((u.alpha_1 - alpha_1).norm() < 1e-11);
            assert!((u.beta_1 - beta_1).norm() < 1e-11);
        }
    }

    #[test]
    fn quench_at_time_zero_returns_initial_conditions() {
        let p = params(2.0 * PI * 200.0, 2.0 * PI * 724.0, 0.1, 0.0, ResonanceBranch::Detuning);
        let (n1, n2, cross) =
            quench_occupations(&p, ResonanceBranch::Detuning, 0.2e8, 1.1e8, 0.0).unwrap();
        assert_relative_eq!(n1, 0.2e8, max_relative = 1e-14);
        assert_relative_eq!(n2, 1.1e8, max_relative = 1e-14);
        assert!(cross.norm() < 1e-6);
    }

    #[test]
    fn quench_without_coupling_relaxes_exponentially() {
        let p = params(2.0 * PI * 200.0, 0.0, 0.0, 0.0, ResonanceBranch::Detuning);
        let (n1m, n2m) = (0.1 * p.n_1, 1.0 * p.n_2);
        for t in [0.3e-3, 1.1e-3, 4.0e-3] {
            let (n1, n2, cross) =
                quench_occupations(&p, ResonanceBranch::Detuning, n1m, n2m, t).unwrap();
            let decay = (-p.gamma * t).exp();
            assert_relative_eq!(n1, n1m * decay + p.n_1 * (1.0 - decay), max_relative = 1e-7);
            assert_relative_eq!(n2, n2m * decay + p.n_2 * (1.0 - decay), max_relative = 1e-7);
            assert!(cross.norm() < 1e-9 * p.n_1);
        }
    }

    #[test]
    fn quench_oscillates_at_the_eigenfrequency_difference() {
        // Resonant reciprocal exchange with weak damping: after half an
        // exchange period 2 pi / Re(Lambda) the populations have swapped.
        let g = 2.0 * PI * 724.0;
        let omega_1 = 2.0 * PI * 27e3;
        let omega_2 = 2.0 * PI * 33e3;
        let p = ModeParams::new(
            omega_1,
            omega_2,
            2.0 * PI * 5.0,
            g,
            omega_2 - omega_1,
            0.0,
            0.0,
            1e8,
            0.9e8,
        )
        .unwrap();
        let period = 2.0 * PI / g;
        let (a0, b0, _) =
            quench_occupations(&p, ResonanceBranch::Detuning, 0.0, p.n_2, 0.0).unwrap();
        let (ah, bh, _) =
            quench_occupations(&p, ResonanceBranch::Detuning, 0.0, p.n_2, 0.5 * period).unwrap();
        let decay = (-p.gamma * 0.5 * period).exp();
        assert!(a0 < 1e-9);
        assert!((ah - b0 * decay).abs() / p.n_2 < 0.05);
        assert!(bh / p.n_2 < 0.1);
    }
}
