//! Independent reference implementations used by the test suites.
//!
//! Everything here deliberately avoids the closed forms used by the library
//! proper, so the two can check each other: the matrix exponential is a plain
//! scaling-and-squaring Taylor series, the eigensolver is the generic
//! characteristic-polynomial formula, and the coupled-mode integrator is a
//! fixed-step RK4.

use num_complex::Complex64;

pub type C2 = [Complex64; 2];
pub type M2 = [[Complex64; 2]; 2];

pub fn mat_mul(a: &M2, b: &M2) -> M2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn mat_vec(a: &M2, v: &C2) -> C2 {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

pub fn mat_norm(a: &M2) -> f64 {
    a.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Brute-force matrix exponential by scaling and squaring with a Taylor core.
pub fn expm(a: &M2) -> M2 {
    let norm = mat_norm(a);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scale = 2f64.powi(-(squarings as i32));
    let b: M2 = [
        [a[0][0] * scale, a[0][1] * scale],
        [a[1][0] * scale, a[1][1] * scale],
    ];
    let id: M2 = [
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
    ];
    let mut result = id;
    let mut term = id;
    for k in 1..30 {
        term = mat_mul(&term, &b);
        for row in term.iter_mut() {
            for v in row.iter_mut() {
                *v /= k as f64;
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                result[i][j] += term[i][j];
            }
        }
    }
    let mut out = result;
    for _ in 0..squarings {
        out = mat_mul(&out, &out);
    }
    out
}

/// Generic eigenvalues of a dense complex 2x2 from the characteristic
/// polynomial, lam^2 - tr lam + det = 0.
pub fn eigenvalues_generic(a: &M2) -> (Complex64, Complex64) {
    let tr = a[0][0] + a[1][1];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let disc = (tr * tr - 4.0 * det).sqrt();
    ((tr + disc) / 2.0, (tr - disc) / 2.0)
}

/// Fixed-step RK4 integration of db/dt = i H b; returns the trajectory
/// sampled every `sample_every` steps (including the initial state).
pub fn rk4_coupled_modes(h: &M2, b0: C2, dt: f64, steps: usize, sample_every: usize) -> Vec<C2> {
    let i = Complex64::new(0.0, 1.0);
    let f = |b: &C2| -> C2 {
        let hv = mat_vec(h, b);
        [i * hv[0], i * hv[1]]
    };
    let mut b = b0;
    let mut out = Vec::with_capacity(steps / sample_every + 2);
    out.push(b);
    for step in 1..=steps {
        let k1 = f(&b);
        let b2 = [b[0] + 0.5 * dt * k1[0], b[1] + 0.5 * dt * k1[1]];
        let k2 = f(&b2);
        let b3 = [b[0] + 0.5 * dt * k2[0], b[1] + 0.5 * dt * k2[1]];
        let k3 = f(&b3);
        let b4 = [b[0] + dt * k3[0], b[1] + dt * k3[1]];
        let k4 = f(&b4);
        for c in 0..2 {
            b[c] += dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        if step % sample_every == 0 {
            out.push(b);
        }
    }
    out
}

/// Euler-Maruyama surrogate of the rotating-frame mode pair: two complex
/// channels obeying db = (i H - gamma/2) b dt + noise with channel noise
/// strengths gamma*n_a, gamma*n_b. Used to feed the estimator tests with
/// records whose correlation functions are known analytically.
pub fn rwa_ou_surrogate(
    h: &M2,
    gamma: f64,
    occupations: (f64, f64),
    dt: f64,
    n: usize,
    seed: u64,
) -> (Vec<Complex64>, Vec<Complex64>) {
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let i = Complex64::new(0.0, 1.0);
    let sig = [
        (0.5 * gamma * occupations.0 * dt).sqrt(),
        (0.5 * gamma * occupations.1 * dt).sqrt(),
    ];
    let mut b = [Complex64::new(0.0, 0.0); 2];
    let mut out1 = Vec::with_capacity(n);
    let mut out2 = Vec::with_capacity(n);
    for _ in 0..n {
        let hv = mat_vec(h, &b);
        let drift = [i * hv[0] - 0.5 * gamma * b[0], i * hv[1] - 0.5 * gamma * b[1]];
        for c in 0..2 {
            let noise = Complex64::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            );
            b[c] += drift[c] * dt + sig[c] * noise;
        }
        out1.push(b[0]);
        out2.push(b[1]);
    }
    (out1, out2)
}
