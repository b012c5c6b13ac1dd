use std::f64::consts::PI;

use ehm_core::localization::kth_eigenvalue;
use ehm_core::operator::{closed_form_constants, lyapunov_numeric, rotation_at, CocycleSampler, Coupling, Variant};
use ehm_core::spectrum::{truncation, Flavor};

const GOLD: f64 = 0.6180339887498949;

fn in_spectrum(c: &Coupling, ks: &[usize]) -> Vec<f64> {
    let t = truncation(c, GOLD, 0.1, (0, 399), Flavor::Direct).unwrap();
    ks.iter().map(|&k| kth_eigenvalue(&t, k)).collect()
}

#[test]
fn dual_almost_mathieu_has_log_coupling_exponent() {
    let c = Coupling::new(0.0, 3.0, 0.0).unwrap();
    let (l, _) = closed_form_constants(&c).unwrap();
    assert!((l - 3f64.ln()).abs() < 1e-14);
    for e in in_spectrum(&c.dual(), &[50, 200, 350]) {
        let est = lyapunov_numeric(&CocycleSampler::new(c.dual(), GOLD, e, Variant::A), 50_000, 4).unwrap();
        assert!((est.estimate - l).abs() < 0.02 * l, "{e}: {}", est.estimate);
    }
}

#[test]
fn extended_dual_exponent_and_determinant_rate() {
    let c = Coupling::new(0.2, 3.0, 0.3).unwrap();
    let (l, cc) = closed_form_constants(&c).unwrap();
    let d = c.dual();
    for e in in_spectrum(&d, &[60, 200, 330]) {
        let a = lyapunov_numeric(&CocycleSampler::new(d, GOLD, e, Variant::A), 50_000, 4).unwrap();
        assert!((a.estimate - l).abs() < 0.02 * l, "{e}: {}", a.estimate);
        let m = lyapunov_numeric(&CocycleSampler::new(d, GOLD, e, Variant::M), 50_000, 4).unwrap();
        assert!((m.estimate - (l + cc)).abs() < 0.02 * (l + cc).abs(), "{e}: {}", m.estimate);
    }
}

#[test]
fn region_two_is_critical_with_and_without_offset() {
    let c = Coupling::new(0.2, 3.0, 0.3).unwrap();
    let (l, _) = closed_form_constants(&c).unwrap();
    for e in in_spectrum(&c, &[30, 150, 250, 380]) {
        let s = CocycleSampler::new(c, GOLD, e, Variant::ABar);
        let plain = lyapunov_numeric(&s, 50_000, 4).unwrap().estimate;
        let shifted = lyapunov_numeric(&s.with_im_offset(l / (4.0 * PI)), 50_000, 4).unwrap().estimate;
        assert!(plain.abs() <= 0.02 && shifted.abs() <= 0.02, "{e}: {plain} {shifted}");
    }
}

#[test]
fn rotation_number_decreases_across_the_spectrum() {
    let c = Coupling::new(0.2, 3.0, 0.3).unwrap();
    let rhos: Vec<f64> = (0..=12)
        .map(|j| {
            let e = -7.0 + 14.0 * j as f64 / 12.0;
            rotation_at(&CocycleSampler::new(c, GOLD, e, Variant::ABar), 10_000, 2).unwrap().rho
        })
        .collect();
    assert!((rhos[0] - 0.5).abs() < 1e-3 && rhos[12].abs() < 1e-3, "{rhos:?}");
    for w in rhos.windows(2) {
        assert!(w[1] <= w[0] + 1e-4, "{rhos:?}");
    }
}
