use fblab_core::correlations::g1;
use fblab_core::model::{ModeParams, Particle, ResonanceBranch};
use fblab_core::rwa::lambda;
use num_complex::Complex64;
use std::f64::consts::PI;

fn pole_form(p: &ModeParams, tau: f64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    let delta = ResonanceBranch::Detuning.effective_detuning(p);
    let lam = lambda(p, ResonanceBranch::Detuning);
    let (lp, lpp) = (lam.re, lam.im);
    let gamma = p.gamma;
    let (n1, n2) = (p.n_1, p.n_2);
    let c1p = (1.0 - delta / lam) / 2.0;
    let c1m = (1.0 + delta / lam) / 2.0;
    let c2p = (1.0 + delta / lam) / 2.0;
    let c2m = (1.0 - delta / lam) / 2.0;
    let b1 = Complex64::from_polar(p.g, p.delta_phi) * Complex64::from_polar(1.0, -p.kd)
        / (2.0 * lam);
    let b2 = Complex64::from_polar(p.g, -p.delta_phi) * Complex64::from_polar(1.0, -p.kd)
        / (2.0 * lam);
    let imm = Complex64::new(1.0 / (gamma + lpp), 0.0);
    let ipp = 1.0 / Complex64::new(gamma, -lp);
    let ippb = 1.0 / Complex64::new(gamma, lp);
    let immb = Complex64::new(1.0 / (gamma - lpp), 0.0);
    if tau >= 0.0 {
        let p_coef = gamma
            * (n1 * b2 * (c1p.conj() * imm + c1m.conj() * ipp)
                + n2 * b1.conj() * c2p * (imm - ipp));
        let q_coef = gamma
            * (-n1 * b2 * (c1p.conj() * ippb + c1m.conj() * immb)
                + n2 * b1.conj() * c2m * (ippb - immb));
        (-0.5 * gamma * tau).exp()
            * (p_coef * (i * lam * tau / 2.0).exp() + q_coef * (-i * lam * tau / 2.0).exp())
    } else {
        let at = -tau;
        let pl = gamma
            * (n1 * b2 * c1p.conj() * (imm - ippb)
                + n2 * b1.conj() * (c2p * imm + c2m * ippb));
        let ql = gamma
            * (n1 * b2 * c1m.conj() * (ipp - immb)
                - n2 * b1.conj() * (c2p * ipp + c2m * immb));
        (-0.5 * gamma * at).exp()
            * (pl * (-i * lam.conj() * at / 2.0).exp() + ql * (i * lam.conj() * at / 2.0).exp())
    }
}

fn printed(p: &ModeParams, tau: f64) -> (Complex64, Complex64, Complex64) {
    let i = Complex64::new(0.0, 1.0);
    let gamma = p.gamma;
    let delta = ResonanceBranch::Detuning.effective_detuning(p);
    let (n1, n2) = (p.n_1, p.n_2);
    let lam = lambda(p, ResonanceBranch::Detuning);
    let (lp, lpp) = (lam.re, lam.im);
    let gt_conj = Complex64::from_polar(p.g, -p.delta_phi);
    let e2ikd = Complex64::from_polar(1.0, 2.0 * p.kd);
    let eikd = Complex64::from_polar(1.0, p.kd);
    let emikd = Complex64::from_polar(1.0, -p.kd);
    if tau >= 0.0 {
        let n1c = n1 * (2.0 * i * gamma - delta + lam) * emikd + n2 * (lam + delta) * eikd;
        let d1 = 4.0 * i * lam * (gamma + lpp) * Complex64::new(gamma, -lp);
        let n2c = n1 * (-(2.0 * i * gamma - delta) + lam) * emikd + n2 * (lam - delta) * eikd;
        let d2 = 4.0 * i * lam * (gamma - lpp) * Complex64::new(gamma, lp);
        let a = 2.0 * gamma * gt_conj * ((n1c / d1) * (n2c / d2)).sqrt();
        let x_num = 2.0 * gamma.powi(3) * n1 - 2.0 * i * gamma * lpp * lp * n1
            + delta * Complex64::new(lpp * lp, gamma * gamma) * (n1 - e2ikd * n2)
            + gamma * lam * lam * (n1 + e2ikd * n2);
        let x_den = delta * gamma * lam * (n1 - e2ikd * n2)
            + lam * lpp * lp * (n1 + e2ikd * n2)
            - i * gamma * gamma * lam * (n1 - e2ikd * n2);
        let b = -i * (x_num / x_den).atanh();
        let val = (-0.5 * gamma * tau).exp() * a * (lam * tau / 2.0 - b).cos();
        (val, a, b)
    } else {
        let lamc = lam.conj();
        let n1c = n2 * (2.0 * i * gamma - delta + lamc) * eikd + n1 * (lamc + delta) * emikd;
        let d1 = 4.0 * i * lamc * (gamma - lpp) * Complex64::new(gamma, -lp);
        let n2c = n2 * (-(2.0 * i * gamma - delta) + lamc) * eikd + n1 * (lamc - delta) * emikd;
        let d2 = 4.0 * i * lamc * (gamma + lpp) * Complex64::new(gamma, lp);
        let a = 2.0 * gamma * gt_conj * ((n1c / d1) * (n2c / d2)).sqrt();
        let y_num = Complex64::new(gamma * gamma, lpp * lp)
            * (-i * delta * n1 + e2ikd * Complex64::new(2.0 * gamma, delta) * n2)
            + gamma * lamc * lamc * (n1 + e2ikd * n2);
        let y_den = delta * gamma * lamc * n1
            + i * lamc * e2ikd * gamma * Complex64::new(2.0 * gamma, delta) * n2
            + Complex64::new(lpp * lp, -gamma * gamma) * (n1 + e2ikd * n2) * lamc;
        let b = i * (y_num / y_den).atanh();
        let val = (-0.5 * gamma * tau.abs()).exp() * a * (lamc * tau / 2.0 - b).cos();
        (val, a, b)
    }
}

fn main() {
    let p = ModeParams::new(
        169646.00329384883,
        207345.11513692635,
        2510.6023951145285,
        4618.377682831054,
        2.0 * PI * 27e3 + (207345.11513692635 - 169646.00329384883)
            + (31154.929416377836 - (207345.11513692635 - 169646.00329384883)),
        2.8687247566338216,
        -0.05728899191696524,
        144613111.7257059,
        86411056.6716989,
    )
    .unwrap();
    // reconstruct exactly: delta_omega directly
    let p = ModeParams::new(
        169646.00329384883,
        207345.11513692635,
        2510.6023951145285,
        4618.377682831054,
        31154.929416377836,
        2.8687247566338216,
        -0.05728899191696524,
        144613111.7257059,
        86411056.6716989,
    )
    .unwrap();
    let lam = lambda(&p, ResonanceBranch::Detuning);
    println!("Lambda = {lam:?}  gamma = {}", p.gamma);
    diagnose_negative_side(&p);
    for tau in [-0.9e-3, -0.3e-3, 0.0, 0.2e-3, 0.7e-3] {
        let quad = g1(&p, ResonanceBranch::Detuning, Particle::One, Particle::Two, tau).unwrap();
        let pole = pole_form(&p, tau);
        let (pr, a, b) = printed(&p, tau);
        println!("tau = {tau:+.1e}");
        println!("  quad    = {:+.6e} {:+.6e}i", quad.re, quad.im);
        println!("  pole    = {:+.6e} {:+.6e}i", pole.re, pole.im);
        println!("  printed = {:+.6e} {:+.6e}i   A = {a:.4e}, B = {b:.4e}", pr.re, pr.im);
        // candidate with B + pi
        let b2 = b + Complex64::new(std::f64::consts::PI, 0.0);
        let arg = if tau >= 0.0 { lam * tau / 2.0 } else { lam.conj() * tau / 2.0 };
        let pr2 = (-0.5 * p.gamma * tau.abs()).exp() * a * (arg - b2).cos();
        println!("  printed(B+pi) = {:+.6e} {:+.6e}i", pr2.re, pr2.im);
    }
}

#[allow(dead_code)]
fn diagnose_negative_side(p: &ModeParams) {
    let i = Complex64::new(0.0, 1.0);
    let delta = ResonanceBranch::Detuning.effective_detuning(p);
    let lam = lambda(p, ResonanceBranch::Detuning);
    let (lp, lpp) = (lam.re, lam.im);
    let gamma = p.gamma;
    let (n1, n2) = (p.n_1, p.n_2);
    let c1p = (1.0 - delta / lam) / 2.0;
    let c1m = (1.0 + delta / lam) / 2.0;
    let c2p = (1.0 + delta / lam) / 2.0;
    let c2m = (1.0 - delta / lam) / 2.0;
    let b1 = Complex64::from_polar(p.g, p.delta_phi) * Complex64::from_polar(1.0, -p.kd) / (2.0 * lam);
    let b2 = Complex64::from_polar(p.g, -p.delta_phi) * Complex64::from_polar(1.0, -p.kd) / (2.0 * lam);
    let imm = Complex64::new(1.0 / (gamma + lpp), 0.0);
    let ipp = 1.0 / Complex64::new(gamma, -lp);
    let ippb = 1.0 / Complex64::new(gamma, lp);
    let immb = Complex64::new(1.0 / (gamma - lpp), 0.0);
    let pl = gamma * (n1 * b2 * c1p.conj() * (imm - ippb) + n2 * b1.conj() * (c2p * imm + c2m * ippb));
    let ql = gamma * (n1 * b2 * c1m.conj() * (ipp - immb) - n2 * b1.conj() * (c2p * ipp + c2m * immb));
    let a2_true = 4.0 * pl * ql;
    let e2ib_true = ql / pl;
    println!("true  A^2 = {a2_true:.6e}");
    println!("true  e2iB = {e2ib_true:.6e}");

    let gt_conj = Complex64::from_polar(p.g, -p.delta_phi);
    let e2ikd = Complex64::from_polar(1.0, 2.0 * p.kd);
    let eikd = Complex64::from_polar(1.0, p.kd);
    let emikd = Complex64::from_polar(1.0, -p.kd);
    let lamc = lam.conj();
    let n1c = n2 * (2.0 * i * gamma - delta + lamc) * eikd + n1 * (lamc + delta) * emikd;
    let d1 = 4.0 * i * lamc * (gamma - lpp) * Complex64::new(gamma, -lp);
    let n2c = n2 * (-(2.0 * i * gamma - delta) + lamc) * eikd + n1 * (lamc - delta) * emikd;
    let d2 = 4.0 * i * lamc * (gamma + lpp) * Complex64::new(gamma, lp);
    let a2_printed = (2.0 * gamma * gt_conj).powi(2) * (n1c / d1) * (n2c / d2);
    println!("print A^2 = {a2_printed:.6e}  ratio = {:.6e}", a2_printed / a2_true);
    let y_num = Complex64::new(gamma * gamma, lpp * lp)
        * (-i * delta * n1 + e2ikd * Complex64::new(2.0 * gamma, delta) * n2)
        + gamma * lamc * lamc * (n1 + e2ikd * n2);
    let y_den = delta * gamma * lamc * n1
        + i * lamc * e2ikd * gamma * Complex64::new(2.0 * gamma, delta) * n2
        + Complex64::new(lpp * lp, -gamma * gamma) * (n1 + e2ikd * n2) * lamc;
    let b_printed = i * (y_num / y_den).atanh();
    let e2ib_printed = (2.0 * i * b_printed).exp();
    println!("print e2iB = {e2ib_printed:.6e}  ratio = {:.6e}", e2ib_printed / e2ib_true);
    // Also compare against conjugating the whole positive-side structure:
    // is g1_12(-tau) related to conj of something with n/kd swaps?
    let p_pos = gamma * (n1 * b2 * (c1p.conj() * imm + c1m.conj() * ipp) + n2 * b1.conj() * c2p * (imm - ipp));
    let q_pos = gamma * (-n1 * b2 * (c1p.conj() * ippb + c1m.conj() * immb) + n2 * b1.conj() * c2m * (ippb - immb));
    println!("pos   A^2 = {:.6e}", 4.0 * p_pos * q_pos);
    println!("pl/qpos = {:.4e}  ql/ppos = {:.4e}", pl / q_pos.conj(), ql / p_pos.conj());
}
