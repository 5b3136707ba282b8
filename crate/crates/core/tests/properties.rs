use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;
use tdgl_core::decomposition::{difference_split, phi_d_exact, stable_part};
use tdgl_core::diagnostics::{Diagnostics, EnergyWeights};
use tdgl_core::dynamics::{Integrator, RunOptions, SystemState};
use tdgl_core::experiments::config::{parse_complex, parse_mode_list};
use tdgl_core::experiments::seeded_initial_data;
use tdgl_core::model::{from_original_variables, to_original_variables, BoxDomain, Forcing, PhysParams};
use tdgl_core::spectral::Basis;

fn basis(modes: usize) -> Arc<Basis> {
    Basis::new(BoxDomain::default_interval(modes)).unwrap()
}

fn valid_params() -> impl Strategy<Value = PhysParams> {
    (
        (0.2..3.0f64, -1.0..0.5f64, 0.1..2.0f64, 0.1..2.0f64, 0.1..1.0f64, -2.0..2.0f64),
        (-1.0..1.0f64, -1.0..1.0f64, 0.05..2.0f64, -2.0..2.0f64, 0.1..2.0f64),
    )
        .prop_map(|((u, a, b, c, m, g), (nu, mu, gamma, d_r, d_i))| PhysParams {
            u,
            a: a.min(0.9 / u),
            b,
            c,
            m,
            g,
            nu,
            mu,
            gamma,
            d_r,
            d_i,
        })
}

fn opts(dt: f64) -> RunOptions {
    RunOptions {
        dt,
        sample_stride: 1,
        guard: 1e6,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn valid_params_are_parabolic(p in valid_params()) {
        let p = p.checked().unwrap();
        prop_assert!(p.parabolicity() > 0.0);
    }

    #[test]
    fn variable_change_round_trips(seed in any::<u64>(), g in -3.0..3.0f64) {
        let b = basis(12);
        let (v, phi) = seeded_initial_data(&b, 1.5, 1.0, seed).unwrap();
        let (u, p1) = to_original_variables(&v, &phi, g).unwrap();
        let (v2, p2) = from_original_variables(&u, &p1, g).unwrap();
        prop_assert!(v2.sub(&v).unwrap().h1_sq().sqrt() < 1e-14);
        prop_assert_eq!(p2, phi);
    }

    #[test]
    fn identities_hold_at_arbitrary_states(p in valid_params(), seed in any::<u64>(), radius in 0.1..5.0f64) {
        let b = basis(16);
        let (v, phi) = seeded_initial_data(&b, radius, 1.0, seed).unwrap();
        let (f, h) = seeded_initial_data(&b, 1.0, 1.0, seed.wrapping_add(1)).unwrap();
        let forcing = Forcing { f, h };
        let integ = Integrator::new(p, &forcing).unwrap();
        let diag = Diagnostics::new(p, EnergyWeights::default(), forcing).unwrap();
        let s = SystemState::new(v, phi, 0.0).unwrap();
        let r = diag.record(&s, &integ.rhs(&s));
        let scale = 1e-9 * (1.0 + r.e2);
        prop_assert!(r.res_phi_l2 < scale && r.res_phi_h1 < scale && r.res_v_l2 < scale, "{:?}", r);
        // Young bound with the default κ₄ = 1 on (0, π)
        prop_assert!(r.l2_v * r.l2_v <= r.l4_v4 + std::f64::consts::PI / 4.0 + 1e-12);
    }

    #[test]
    fn semigroup_property(seed in any::<u64>(), k1 in 1usize..40, k2 in 1usize..40) {
        let b = basis(16);
        let (v, phi) = seeded_initial_data(&b, 1.0, 1.5, seed).unwrap();
        let s0 = SystemState::new(v, phi, 0.0).unwrap();
        let p = PhysParams::default();
        let forcing = Forcing::zero(&b.zeros());
        let dt = 1e-2;
        let mut integ = Integrator::new(p, &forcing).unwrap();
        let (t1, t2) = (k1 as f64 * dt, k2 as f64 * dt);
        let whole = integ.integrate(&s0, t1 + t2, &opts(dt), |_, _| {}).unwrap();
        let mid = integ.integrate(&s0, t1, &opts(dt), |_, _| {}).unwrap();
        let split = integ.integrate(&mid, t2, &opts(dt), |_, _| {}).unwrap();
        let (dv, dp) = whole.difference(&split).unwrap();
        prop_assert!((dv.h1_sq() + dp.h1_sq()).sqrt() < 1e-12);
    }

    #[test]
    fn boson_stable_part_obeys_exponential_law(p in valid_params(), seed in any::<u64>(), t in 0.0..20.0f64) {
        let b = basis(24);
        let (_, phi0) = seeded_initial_data(&b, 3.0, 1.0, seed).unwrap();
        let phid = phi_d_exact(&phi0, &p, t).unwrap();
        let want = (-p.gamma * t).exp() * phi0.h1_sq().sqrt();
        prop_assert!((phid.h1_sq().sqrt() - want).abs() <= 1e-12 * phi0.h1_sq().sqrt());
        // the φ component of the difference stable part is the same flow
        let (_, sp) = stable_part(&p, &b.zeros(), &phi0, t).unwrap();
        prop_assert!(sp.sub(&phid).unwrap().h1_sq().sqrt() <= 1e-12 * phi0.h1_sq().sqrt());
    }

    #[test]
    fn difference_split_reassembles(seed in any::<u64>()) {
        let b = basis(12);
        let p = PhysParams::default();
        let forcing = Forcing::zero(&b.zeros());
        let mk = |s: u64| {
            let (v, phi) = seeded_initial_data(&b, 1.0, 1.5, s).unwrap();
            SystemState::new(v, phi, 0.0).unwrap()
        };
        let mut integ = Integrator::new(p, &forcing).unwrap();
        let run = |integ: &mut Integrator, s0: &SystemState| {
            let mut out = Vec::new();
            integ
                .integrate(s0, 0.5, &RunOptions { dt: 1e-2, sample_stride: 10, guard: 1e6 }, |s, _| out.push(s.clone()))
                .unwrap();
            out
        };
        let z1 = run(&mut integ, &mk(seed));
        let z2 = run(&mut integ, &mk(seed.wrapping_add(7)));
        let split = difference_split(&z1, &z2, &p).unwrap();
        let first = &split.samples[0];
        prop_assert!(first.compact.0.is_zero() || first.compact.0.h1_sq() < 1e-28);
        for (k, smp) in split.samples.iter().enumerate() {
            let (dv, dp) = z1[k].difference(&z2[k]).unwrap();
            let rv = smp.stable.0.add(&smp.compact.0).unwrap().sub(&dv).unwrap();
            let rp = smp.stable.1.add(&smp.compact.1).unwrap().sub(&dp).unwrap();
            prop_assert!((rv.h1_sq() + rp.h1_sq()).sqrt() < 1e-9);
        }
    }

    #[test]
    fn complex_literals_round_trip(re in -1e3..1e3f64, im in -1e3..1e3f64) {
        let sign = if im < 0.0 { '-' } else { '+' };
        let text = format!("{re:e}{sign}{:e}i", im.abs());
        prop_assert_eq!(parse_complex(&text).unwrap(), Complex64::new(re, im));
    }

    #[test]
    fn mode_lists_parse(entries in proptest::collection::btree_map(1usize..20, -5.0..5.0f64, 1..6)) {
        let text: Vec<String> = entries.iter().map(|(j, x)| format!("{j}:{x}+0i")).collect();
        let parsed = parse_mode_list(&text.join(", ")).unwrap();
        prop_assert_eq!(parsed.len(), entries.len());
        for (m, (j, x)) in parsed.iter().zip(&entries) {
            prop_assert_eq!(m.index, [*j, 1]);
            prop_assert_eq!(m.value, Complex64::new(*x, 0.0));
        }
    }
}

#[test]
fn real_data_stays_real_without_coupling_or_dispersion_phase() {
    // With d = i and g = 0 every term of the v-equation has real
    // coefficients, so real data stays real.
    let b = basis(16);
    let p = PhysParams {
        d_r: 0.0,
        d_i: 1.0,
        g: 0.0,
        b: 1.0,
        ..PhysParams::default()
    };
    let (v, _) = seeded_initial_data(&b, 1.0, 1.5, 3).unwrap();
    let v = v.with_coeffs(v.coeffs().iter().map(|z| Complex64::new(z.norm(), 0.0)).collect());
    let s0 = SystemState::new(v, b.zeros(), 0.0).unwrap();
    let mut integ = Integrator::new(p, &Forcing::zero(&b.zeros())).unwrap();
    let mut worst = 0.0f64;
    integ
        .integrate(&s0, 1.0, &opts(1e-3), |s, _| {
            worst = worst.max(s.v.coeffs().iter().map(|z| z.im.abs()).fold(0.0, f64::max));
        })
        .unwrap();
    assert!(worst < 1e-10, "imaginary part grew to {worst:e}");
}
