//! Shared numerical machinery: adaptive quadrature for complex integrands,
//! a small Levenberg-Marquardt least-squares driver, and assorted helpers.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// sin(z)/z with a series fallback near the origin.
pub fn sinc_c(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        let z2 = z * z;
        Complex64::new(1.0, 0.0) - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

/// Principal-branch complex square root (wrapper kept for call-site clarity).
pub fn sqrt_principal(z: Complex64) -> Complex64 {
    z.sqrt()
}

/// Wrap an angle into (-pi, pi].
pub fn wrap_angle(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * std::f64::consts::PI);
    if y > std::f64::consts::PI {
        y -= 2.0 * std::f64::consts::PI;
    }
    y
}

struct QuadCtx<'a> {
    f: &'a dyn Fn(f64) -> Complex64,
    rel_tol: f64,
    abs_floor: f64,
    evals: usize,
    budget: usize,
}

impl QuadCtx<'_> {
    fn eval(&mut self, x: f64) -> Result<Complex64> {
        self.evals += 1;
        if self.evals > self.budget {
            return Err(Error::QuadratureNonConvergence {
                evals: self.evals,
                detail: "evaluation budget exhausted".into(),
            });
        }
        let v = (self.f)(x);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::QuadratureNonConvergence {
                evals: self.evals,
                detail: format!("integrand not finite at x = {x}"),
            });
        }
        Ok(v)
    }
}

fn simpson_rec(
    ctx: &mut QuadCtx,
    a: f64,
    b: f64,
    fa: Complex64,
    fm: Complex64,
    fb: Complex64,
    whole: Complex64,
    scale: f64,
    depth: usize,
) -> Result<Complex64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = ctx.eval(lm)?;
    let frm = ctx.eval(rm)?;
    let h = b - a;
    let left = (h / 12.0) * (fa + 4.0 * flm + fm);
    let right = (h / 12.0) * (fm + 4.0 * frm + fb);
    let refined = left + right;
    let err = (refined - whole).norm();
    let tol = ctx.rel_tol * scale.max(refined.norm()) + ctx.abs_floor;
    if depth == 0 {
        if err > 15.0 * tol {
            return Err(Error::QuadratureNonConvergence {
                evals: ctx.evals,
                detail: format!("max recursion depth reached on [{a}, {b}], err = {err:.3e}"),
            });
        }
        return Ok(refined + (refined - whole) / 15.0);
    }
    if err <= 15.0 * tol {
        return Ok(refined + (refined - whole) / 15.0);
    }
    let l = simpson_rec(ctx, a, m, fa, flm, fm, left, scale, depth - 1)?;
    let r = simpson_rec(ctx, m, b, fm, frm, fb, right, scale, depth - 1)?;
    Ok(l + r)
}

/// Adaptive Simpson quadrature of a complex-valued integrand on [a, b].
///
/// The tolerance is relative to the running magnitude of the integral with an
/// absolute floor; oscillatory integrands are handled by an initial panelling
/// fine enough to see each oscillation.
pub fn integrate_complex(
    f: impl Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    rel_tol: f64,
    panels_hint: usize,
) -> Result<Complex64> {
    if !(b > a) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut ctx = QuadCtx { f: &f, rel_tol, abs_floor: 0.0, evals: 0, budget: 4_000_000 };
    let n = panels_hint.clamp(4, 4096);
    // First pass to set the magnitude scale.
    let mut coarse = Complex64::new(0.0, 0.0);
    let mut samples = Vec::with_capacity(2 * n + 1);
    for i in 0..=(2 * n) {
        let x = a + (b - a) * (i as f64) / (2.0 * n as f64);
        samples.push(ctx.eval(x)?);
    }
    let h = (b - a) / n as f64;
    for i in 0..n {
        coarse += (h / 6.0) * (samples[2 * i] + 4.0 * samples[2 * i + 1] + samples[2 * i + 2]);
    }
    let scale = coarse.norm();
    ctx.abs_floor = 1e-300;
    let mut total = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let xa = a + h * i as f64;
        let xb = xa + h;
        let (fa, fm, fb) = (samples[2 * i], samples[2 * i + 1], samples[2 * i + 2]);
        let whole = (h / 6.0) * (fa + 4.0 * fm + fb);
        total += simpson_rec(&mut ctx, xa, xb, fa, fm, fb, whole, scale / n as f64, 48)?;
    }
    Ok(total)
}

/// Real-valued adaptive quadrature, reusing the complex driver.
pub fn integrate_real(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
    panels_hint: usize,
) -> Result<f64> {
    integrate_complex(|x| Complex64::new(f(x), 0.0), a, b, rel_tol, panels_hint).map(|v| v.re)
}

/// Solve a small dense linear system in place (Gaussian elimination with
/// partial pivoting). Returns None when singular to working precision.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for i in 0..n {
        let mut p = i;
        for r in (i + 1)..n {
            if a[r][i].abs() > a[p][i].abs() {
                p = r;
            }
        }
        if a[p][i].abs() < 1e-300 {
            return None;
        }
        a.swap(i, p);
        b.swap(i, p);
        for r in (i + 1)..n {
            let f = a[r][i] / a[i][i];
            for c in i..n {
                a[r][c] -= f * a[i][c];
            }
            b[r] -= f * b[i];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for c in (i + 1)..n {
            s -= a[i][c] * x[c];
        }
        x[i] = s / a[i][i];
    }
    Some(x)
}

/// Invert a small dense matrix; None when singular.
pub fn invert_dense(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cols.push(solve_dense(a.to_vec(), e)?);
    }
    let mut inv = vec![vec![0.0; n]; n];
    for (j, col) in cols.iter().enumerate() {
        for i in 0..n {
            inv[i][j] = col[i];
        }
    }
    Some(inv)
}

/// Result of a Levenberg-Marquardt fit.
#[derive(Debug, Clone)]
pub struct LmFit {
    pub params: Vec<f64>,
    /// Sum of squared residuals at the solution.
    pub ssr: f64,
    /// Parameter covariance, ssr/(m - n) * (J^T J)^-1.
    pub covariance: Vec<Vec<f64>>,
    pub iterations: usize,
}

/// Levenberg-Marquardt on a residual vector function.
///
/// `residuals(p, out)` fills `out` with the m residuals at parameters `p`.
/// The Jacobian is taken by central differences. Iterations are bounded;
/// failure to reduce the cost within the bound is a fit failure.
pub fn levenberg_marquardt(
    residuals: impl Fn(&[f64], &mut [f64]),
    p0: &[f64],
    m: usize,
    max_iters: usize,
) -> Result<LmFit> {
    let n = p0.len();
    if m < n {
        return Err(Error::FitFailure(format!("{m} residuals cannot constrain {n} parameters")));
    }
    let mut p = p0.to_vec();
    let mut r = vec![0.0; m];
    residuals(&p, &mut r);
    let mut cost: f64 = r.iter().map(|v| v * v).sum();
    if !cost.is_finite() {
        return Err(Error::FitFailure("non-finite initial residuals".into()));
    }
    let mut lambda = 1e-3;
    let mut jac = vec![vec![0.0; n]; m];
    let mut iterations = 0;
    let mut stalled = 0usize;
    for _ in 0..max_iters {
        iterations += 1;
        // Central-difference Jacobian.
        let mut rp = vec![0.0; m];
        let mut rm = vec![0.0; m];
        for j in 0..n {
            let step = 1e-6 * p[j].abs().max(1e-9);
            let saved = p[j];
            p[j] = saved + step;
            residuals(&p, &mut rp);
            p[j] = saved - step;
            residuals(&p, &mut rm);
            p[j] = saved;
            for i in 0..m {
                jac[i][j] = (rp[i] - rm[i]) / (2.0 * step);
            }
        }
        let mut jtj = vec![vec![0.0; n]; n];
        let mut jtr = vec![0.0; n];
        for i in 0..m {
            for a in 0..n {
                jtr[a] += jac[i][a] * r[i];
                for b in a..n {
                    jtj[a][b] += jac[i][a] * jac[i][b];
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                jtj[a][b] = jtj[b][a];
            }
        }
        let mut improved = false;
        for _ in 0..12 {
            let mut damped = jtj.clone();
            for (a, row) in damped.iter_mut().enumerate() {
                row[a] += lambda * jtj[a][a].max(1e-12);
            }
            let rhs: Vec<f64> = jtr.iter().map(|v| -v).collect();
            let Some(delta) = solve_dense(damped, rhs) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(&delta).map(|(a, d)| a + d).collect();
            let mut rt = vec![0.0; m];
            residuals(&trial, &mut rt);
            let ct: f64 = rt.iter().map(|v| v * v).sum();
            if ct.is_finite() && ct < cost {
                let rel_drop = (cost - ct) / cost.max(1e-300);
                p = trial;
                r = rt;
                cost = ct;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                if rel_drop < 1e-12 {
                    stalled += 1;
                } else {
                    stalled = 0;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            stalled += 1;
        }
        if stalled >= 3 {
            break;
        }
    }
    if !cost.is_finite() {
        return Err(Error::FitFailure("diverged".into()));
    }
    // Covariance from the final Jacobian.
    let mut jtj = vec![vec![0.0; n]; n];
    for i in 0..m {
        for a in 0..n {
            for b in a..n {
                jtj[a][b] += jac[i][a] * jac[i][b];
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            jtj[a][b] = jtj[b][a];
        }
    }
    let sigma2 = if m > n { cost / (m - n) as f64 } else { 0.0 };
    let covariance = invert_dense(&jtj)
        .map(|inv| {
            inv.into_iter()
                .map(|row| row.into_iter().map(|v| v * sigma2).collect())
                .collect()
        })
        .unwrap_or_else(|| vec![vec![f64::NAN; n]; n]);
    Ok(LmFit { params: p, ssr: cost, covariance, iterations })
}

/// Ordinary least-squares line y = a + b x; returns (intercept, slope).
pub fn linear_regression(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    (intercept, slope)
}

/// Mean and standard error of the mean.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::INFINITY);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Pearson correlation coefficient.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    cov / (va * vb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn quadrature_handles_oscillatory_decay() {
        // int_0^inf e^{-s} e^{i w s} ds = 1/(1 - i w)
        let w = 37.0;
        let exact = Complex64::new(1.0, 0.0) / Complex64::new(1.0, -w);
        let got = integrate_complex(
            |s| (Complex64::new(-s, w * s)).exp(),
            0.0,
            50.0,
            1e-10,
            1024,
        )
        .unwrap();
        assert_relative_eq!(got.re, exact.re, max_relative = 1e-8);
        assert_relative_eq!(got.im, exact.im, max_relative = 1e-8);
    }

    #[test]
    fn quadrature_polynomial_is_nearly_exact() {
        let got = integrate_real(|x| 3.0 * x * x, 0.0, 2.0, 1e-12, 8).unwrap();
        assert_relative_eq!(got, 8.0, max_relative = 1e-13);
    }

    #[test]
    fn sinc_series_matches_direct() {
        let z = Complex64::new(5e-5, -3e-5);
        let direct = z.sin() / z;
        let series = sinc_c(z);
        assert!((direct - series).norm() < 1e-14);
        let z2 = Complex64::new(1.3, 0.4);
        assert!((sinc_c(z2) - z2.sin() / z2).norm() < 1e-15);
    }

    #[test]
    fn lm_recovers_exponential_cosine() {
        // y = a e^{-k t} cos(w t - phi)
        let truth = [2.0, 0.8, 6.0, 1.1];
        let ts: Vec<f64> = (0..400).map(|i| i as f64 * 0.01).collect();
        let data: Vec<f64> = ts
            .iter()
            .map(|&t| truth[0] * (-truth[1] * t).exp() * (truth[2] * t - truth[3]).cos())
            .collect();
        let model = |p: &[f64], out: &mut [f64]| {
            for (i, &t) in ts.iter().enumerate() {
                out[i] = p[0] * (-p[1] * t).exp() * (p[2] * t - p[3]).cos() - data[i];
            }
        };
        let fit = levenberg_marquardt(model, &[1.5, 0.5, 5.5, 0.8], ts.len(), 200).unwrap();
        for (got, want) in fit.params.iter().zip(&truth) {
            assert_relative_eq!(got, want, max_relative = 1e-6);
        }
    }

    #[test]
    fn regression_recovers_slope() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.7 - 2.0 * v).collect();
        let (a, b) = linear_regression(&x, &y);
        assert_relative_eq!(a, 0.7, max_relative = 1e-12);
        assert_relative_eq!(b, -2.0, max_relative = 1e-12);
    }

    #[test]
    fn wrap_angle_is_canonical() {
        assert_relative_eq!(wrap_angle(3.0 * PI), PI, max_relative = 1e-12);
        assert_relative_eq!(wrap_angle(-3.0 * PI), PI, max_relative = 1e-12);
        assert_relative_eq!(wrap_angle(0.3), 0.3, max_relative = 1e-15);
    }
}
