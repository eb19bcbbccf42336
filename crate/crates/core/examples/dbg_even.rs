use fblab_core::correlations::{g1, g1_closed_form_12};
use fblab_core::model::{ModeParams, Particle, ResonanceBranch};
use std::f64::consts::PI;

fn main() {
    let omega_1 = 2.0 * PI * 27e3;
    let omega_2 = 2.0 * PI * 33e3;
    let p = ModeParams::new(
        omega_1, omega_2, 2.0 * PI * 600.0, 2.0 * PI * 300.0,
        omega_2 - omega_1, 0.0, 0.0, 1e8, 1e8,
    ).unwrap();
    for tau in [0.2e-3_f64, 0.9e-3] {
        let qp = g1(&p, ResonanceBranch::Detuning, Particle::One, Particle::Two, tau).unwrap();
        let qm = g1(&p, ResonanceBranch::Detuning, Particle::One, Particle::Two, -tau).unwrap();
        let cp = g1_closed_form_12(&p, tau).unwrap();
        let cm = g1_closed_form_12(&p, -tau).unwrap();
        println!("tau {tau:.1e}: quad+ {:.6e},{:.6e}  quad- {:.6e},{:.6e}", qp.re, qp.im, qm.re, qm.im);
        println!("  cf+ {:.6e},{:.6e} flag {}  cf- {:.6e},{:.6e} flag {}",
            cp.value.re, cp.value.im, cp.flagged, cm.value.re, cm.value.im, cm.flagged);
        println!("  A+ {:?} B+ {:?}", cp.amplitude, cp.phase);
        println!("  A- {:?} B- {:?}", cm.amplitude, cm.phase);
    }
}
