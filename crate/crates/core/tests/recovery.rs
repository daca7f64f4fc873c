mod common;

use asap_core::hankel::hankel_shape;
use asap_core::lowrank::truncated_svd_hankel;
use asap_core::simgen::{add_noise, gen_corruptions, gen_signal, output_snr, CorruptionSpec, NoiseSpec};
use asap_core::{
    asap_initialize, asap_recover, asap_recover_with, cadzow_denoise, default_params,
    estimate_params, hard_threshold, residual, sap_recover, Complex, ComplexSignal,
    RecoveryParams, RunOptions, SparseEstimate,
};
use common::{random_signal, rng};
use proptest::prelude::*;

struct Instance {
    x: ComplexSignal<f64>,
    s: SparseEstimate<f64>,
    z: ComplexSignal<f64>,
}

fn instance(n: usize, r: usize, m: usize, seed: u64) -> Instance {
    let (x, _) = gen_signal::<f64>(n, r, None, false, seed).unwrap();
    let spec = CorruptionSpec { count: m, scale: 1.0, seed: seed ^ 0xc0ffee };
    let s = gen_corruptions(&x, &spec).unwrap();
    let z = &x + &s.to_dense();
    Instance { x, s, z }
}

fn sigma1_of_lift(x: &ComplexSignal<f64>) -> f64 {
    truncated_svd_hankel(x, 1, 1e-12).unwrap().sigma1()
}

fn fixed_params(r: usize) -> RecoveryParams<f64> {
    RecoveryParams { r, epsilon: 1e-12, beta: 0.05, beta_init: 0.5, gamma: 0.9, max_iter: 50 }
}

#[test]
fn recovers_moderately_corrupted_signals() {
    let mut ok = 0;
    for seed in 0..50 {
        let inst = instance(125, 5, 12, seed);
        let p = default_params(&inst.z, 5, 0.95, 1e-6).unwrap();
        let res = asap_recover(&inst.z, &p).unwrap();
        if res.x_hat.relative_error_to(&inst.x) <= 1e-3 {
            ok += 1;
        }
    }
    assert!(ok >= 45, "{ok}/50");
}

#[test]
fn exact_rank_input_converges_immediately() {
    for seed in 0..5 {
        let (x, _) = gen_signal::<f64>(125, 5, Some(2.0 / 125.0), false, seed).unwrap();
        let p = RecoveryParams { epsilon: 1e-9, ..fixed_params(5) };
        let res = asap_recover(&x, &p).unwrap();
        assert!(res.converged);
        assert!(res.iterations <= 3, "{} iterations", res.iterations);
        assert!(res.x_hat.relative_error_to(&x) < 1e-9);
    }
}

#[test]
fn fixed_point_on_exact_rank() {
    let (x, _) = gen_signal::<f64>(101, 4, Some(2.0 / 101.0), false, 8).unwrap();
    let p = RecoveryParams { max_iter: 6, ..fixed_params(4) };
    // epsilon = 1e-12 keeps the loop running past the first few iterations.
    let res = asap_recover_with(&x, &p, &RunOptions { record_supports: true, ..Default::default() })
        .unwrap();
    assert!(res.x_hat.relative_error_to(&x) < 1e-10);
    assert!(res.errors.iter().skip(1).all(|e| *e < 1e-10));
}

#[test]
fn linear_convergence_trace() {
    let mut ok = 0;
    for seed in 0..20 {
        let inst = instance(255, 3, 13, 100 + seed);
        let p = default_params(&inst.z, 3, 0.5, 1e-10).unwrap();
        let res = asap_recover(&inst.z, &p).unwrap();
        let pts: Vec<(f64, f64)> = res
            .errors
            .iter()
            .enumerate()
            .skip(2)
            .filter(|(_, e)| **e > 0.0)
            .map(|(k, e)| (k as f64, e.ln()))
            .collect();
        if pts.len() >= 2 && slope(&pts) <= 0.75f64.ln() {
            ok += 1;
        }
    }
    assert!(ok >= 18, "{ok}/20");
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let num: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    num / den
}

#[test]
fn threshold_schedule_is_exact() {
    let inst = instance(125, 5, 10, 3);
    let p = default_params(&inst.z, 5, 0.9, 1e-8).unwrap();
    let res = asap_recover(&inst.z, &p).unwrap();
    assert_eq!(res.zetas.len(), res.iterations);
    for (k, zeta) in res.zetas.iter().enumerate() {
        assert_eq!(*zeta, p.beta * p.gamma.powi(k as i32) * res.sigma1_trace[k]);
    }
}

#[test]
fn traces_are_consistent() {
    let inst = instance(125, 5, 10, 4);
    let p = default_params(&inst.z, 5, 0.95, 1e-6).unwrap();
    let res = asap_recover(&inst.z, &p).unwrap();
    let k = res.iterations;
    assert_eq!(res.errors.len(), k + 1);
    assert_eq!(res.sigma1_trace.len(), k + 1);
    assert_eq!(res.support_sizes.len(), k + 1);
    assert_eq!(res.timing.iterations.len(), k);
    assert!(res.errors.iter().all(|e| e.is_finite() && *e >= 0.0));
    assert_eq!(res.converged, res.final_error() < p.epsilon);
    assert_eq!(res.final_error(), residual(&inst.z, &res.x_hat, &res.s_hat));
    assert_eq!(*res.support_sizes.last().unwrap(), res.s_hat.nnz());
}

#[test]
fn supports_stay_inside_true_support() {
    let mut succeeded = 0;
    let mut nested = 0;
    for seed in 0..50 {
        let inst = instance(125, 5, 12, 500 + seed);
        let p = default_params(&inst.z, 5, 0.95, 1e-6).unwrap();
        let opts = RunOptions { record_supports: true, ..Default::default() };
        let res = asap_recover_with(&inst.z, &p, &opts).unwrap();
        if res.x_hat.relative_error_to(&inst.x) > 1e-3 {
            continue;
        }
        succeeded += 1;
        let truth = inst.s.support();
        let sups = res.supports.unwrap();
        if sups[1..].iter().all(|s| s.iter().all(|i| truth.binary_search(i).is_ok())) {
            nested += 1;
        }
    }
    assert!(succeeded > 0);
    assert!(nested as f64 >= 0.95 * succeeded as f64, "{nested}/{succeeded}");
}

#[test]
fn runs_are_deterministic() {
    let inst = instance(125, 5, 12, 9);
    let p = default_params(&inst.z, 5, 0.95, 1e-6).unwrap();
    let opts = RunOptions { record_supports: true, ..Default::default() };
    let a = asap_recover_with(&inst.z, &p, &opts).unwrap();
    let b = asap_recover_with(&inst.z, &p, &opts).unwrap();
    assert!(a.same_trajectory(&b));
}

#[test]
fn zero_observation_is_trivial() {
    let z = ComplexSignal::<f64>::zeros(33);
    let res = asap_recover(&z, &fixed_params(2)).unwrap();
    assert!(res.converged);
    assert_eq!(res.iterations, 0);
    assert_eq!(res.errors, vec![0.0]);
    assert!(res.s_hat.is_empty());
    assert_eq!(res.x_hat, z);

    let (l0, x0, s0) = asap_initialize(&z, &fixed_params(2)).unwrap();
    assert_eq!(l0.sigma1(), 0.0);
    assert_eq!(x0, z);
    assert!(s0.is_empty());

    let est = estimate_params(&z, 2).unwrap();
    assert_eq!(est.sigma1x_hat, 0.0);
    assert!(default_params(&z, 2, 0.9, 1e-6).is_err());
}

#[test]
fn invalid_params_are_rejected() {
    let z = random_signal(&mut rng(1), 21);
    assert!(asap_recover(&z, &RecoveryParams { gamma: 1.5, ..fixed_params(2) }).is_err());
    assert!(asap_recover(&z, &RecoveryParams { r: 12, ..fixed_params(2) }).is_err());
    assert!(sap_recover(&z, &RecoveryParams { r: 0, ..fixed_params(2) }).is_err());
}

#[test]
fn small_signals_still_run() {
    // n < 2r + 1 only warns.
    let z = random_signal(&mut rng(2), 6);
    let res = asap_recover(&z, &RecoveryParams { max_iter: 5, ..fixed_params(3) }).unwrap();
    assert!(res.errors.iter().all(|e| e.is_finite()));
}

#[test]
fn initialization_without_outliers_is_exact() {
    let (x, _) = gen_signal::<f64>(125, 5, Some(2.0 / 125.0), false, 21).unwrap();
    let sigma1 = sigma1_of_lift(&x);
    let p = RecoveryParams { beta_init: 1.01 * x.norm_inf() / sigma1, ..fixed_params(5) };
    let (l0, x0, s0) = asap_initialize(&x, &p).unwrap();
    assert!(s0.is_empty());
    assert!(x0.relative_error_to(&x) < 1e-10);
    assert!((l0.sigma1() - sigma1).abs() < 1e-8 * sigma1);
}

#[test]
fn initialization_catches_a_large_spike() {
    let (x, _) = gen_signal::<f64>(125, 5, None, false, 22).unwrap();
    let spike = 100.0 * x.norm_inf();
    let mut z = x.clone().into_vec();
    z[40] += Complex::new(spike, 0.0);
    let z = ComplexSignal::new(z).unwrap();
    let p = default_params(&z, 5, 0.95, 1e-6).unwrap();
    let (_, _, s0) = asap_initialize(&z, &p).unwrap();
    assert!(s0.support().contains(&40));
}

#[test]
fn estimates_on_clean_signal_are_exact() {
    let (x, _) = gen_signal::<f64>(125, 5, Some(2.0 / 125.0), false, 30).unwrap();
    let est = estimate_params(&x, 5).unwrap();
    let sigma1 = sigma1_of_lift(&x);
    assert!((est.sigma1x_hat - sigma1).abs() <= 1e-8 * sigma1);
    assert!((est.sigma1z - sigma1).abs() <= 1e-8 * sigma1);
    let shape = hankel_shape::<f64>(125).unwrap();
    assert!(est.mu_hat > 0.0 && est.mu_hat <= 125.0 / (shape.c_s() * 5.0));
}

#[test]
fn estimates_on_corrupted_signal_are_within_factor_two() {
    for seed in 0..50 {
        let inst = instance(125, 5, 6, 700 + seed);
        let truth = sigma1_of_lift(&inst.x);
        let est = estimate_params(&inst.z, 5).unwrap();
        let ratio = est.sigma1x_hat / truth;
        assert!((0.5..=2.0).contains(&ratio), "seed {seed}: ratio {ratio}");
    }
}

#[test]
fn default_params_recover_at_eight_percent() {
    let inst = instance(125, 5, 10, 41);
    let p = default_params(&inst.z, 5, 0.95, 1e-6).unwrap();
    let res = asap_recover(&inst.z, &p).unwrap();
    assert!(res.x_hat.relative_error_to(&inst.x) <= 1e-3);
}

#[test]
fn residual_of_explicit_perturbation() {
    let mut g = rng(5);
    let z = random_signal(&mut g, 64);
    let dir = random_signal(&mut g, 64);
    let delta = 0.037;
    let pert = dir.scale(delta * z.norm2() / dir.norm2());
    let x_hat = &z - &pert;
    let got = residual(&z, &x_hat, &SparseEstimate::empty(64));
    assert!((got - delta).abs() < 1e-12);

    let s = SparseEstimate::from_dense(&pert);
    assert!(residual(&z, &x_hat, &s) < 1e-15);
}

#[test]
fn sap_converges_on_exact_rank() {
    let (x, _) = gen_signal::<f64>(125, 5, Some(2.0 / 125.0), false, 50).unwrap();
    let p = RecoveryParams { epsilon: 1e-9, ..fixed_params(5) };
    let res = sap_recover(&x, &p).unwrap();
    assert!(res.converged && res.iterations <= 3);
    assert!(res.x_hat.relative_error_to(&x) < 1e-10);
}

#[test]
fn sap_and_asap_agree() {
    let (mut asap_ok, mut sap_ok) = (0i32, 0i32);
    for seed in 0..50 {
        let inst = instance(125, 5, 12, 900 + seed);
        let p = default_params(&inst.z, 5, 0.95, 1e-9).unwrap();
        let a = asap_recover(&inst.z, &p).unwrap();
        let b = sap_recover(&inst.z, &p).unwrap();
        asap_ok += (a.x_hat.relative_error_to(&inst.x) <= 1e-3) as i32;
        sap_ok += (b.x_hat.relative_error_to(&inst.x) <= 1e-3) as i32;
        if a.final_error() < 1e-8 && b.final_error() < 1e-8 {
            let gap = (&a.x_hat - &b.x_hat).norm2() / inst.x.norm2();
            assert!(gap <= 1e-4, "seed {seed}: gap {gap}");
        }
    }
    assert!((asap_ok - sap_ok).abs() <= 5, "{asap_ok} vs {sap_ok}");
}

#[test]
fn cadzow_fixed_point_and_full_rank() {
    let (x, _) = gen_signal::<f64>(99, 3, Some(2.0 / 99.0), false, 60).unwrap();
    assert!(cadzow_denoise(&x, 3, 4).unwrap().relative_error_to(&x) < 1e-10);
    let z = random_signal(&mut rng(61), 99);
    let full = hankel_shape::<f64>(99).unwrap().max_rank();
    assert!(cadzow_denoise(&z, full, 1).unwrap().relative_error_to(&z) < 1e-10);
    assert!(cadzow_denoise(&z, 2, 0).is_err());
}

#[test]
fn cadzow_improves_snr() {
    for seed in 0..20 {
        let (x, _) = gen_signal::<f64>(255, 3, None, false, 70 + seed).unwrap();
        let (eta, snr_in) = add_noise(&x, &NoiseSpec { snr_db: 40.0, seed }).unwrap();
        let z = &x + &eta;
        let out = cadzow_denoise(&z, 3, 10).unwrap();
        let snr_out = output_snr(&x, &out);
        assert!(snr_out > snr_in, "seed {seed}: {snr_out} <= {snr_in}");
    }
}

#[test]
fn single_precision_recovers() {
    let (x, _) = gen_signal::<f32>(125, 3, Some(2.0 / 125.0), false, 80).unwrap();
    let s = gen_corruptions(&x, &CorruptionSpec { count: 6, scale: 1.0, seed: 81 }).unwrap();
    let z = &x + &s.to_dense();
    let p = default_params(&z, 3, 0.9f32, 1e-4).unwrap();
    let res = asap_recover(&z, &p).unwrap();
    assert!(res.x_hat.relative_error_to(&x) < 1e-3);
}

fn signal_strategy(max_len: usize) -> impl Strategy<Value = ComplexSignal<f64>> {
    prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..max_len).prop_map(|v| {
        ComplexSignal::new(v.into_iter().map(|(a, b)| Complex::new(a, b)).collect()).unwrap()
    })
}

proptest! {
    #[test]
    fn threshold_keeps_exactly_the_large_entries(v in signal_strategy(40), zeta in 0.0f64..12.0) {
        let s = hard_threshold(&v, zeta);
        for (i, c) in v.iter().enumerate() {
            let kept = s.support().binary_search(&i).is_ok();
            prop_assert_eq!(kept, c.norm() > zeta);
        }
        for (i, c) in s.iter() {
            prop_assert_eq!(c, v[i]);
        }
    }

    #[test]
    fn threshold_is_monotone(v in signal_strategy(40), a in 0.0f64..12.0, b in 0.0f64..12.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(hard_threshold(&v, hi).support_within(&hard_threshold(&v, lo)));
    }

    #[test]
    fn residual_is_nonnegative_and_scale_free(z in signal_strategy(30), k in 0.1f64..10.0) {
        let x = z.scale(0.5);
        let e = SparseEstimate::empty(z.len());
        let a = residual(&z, &x, &e);
        let b = residual(&z.scale(k), &x.scale(k), &e);
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn iterates_stay_valid(seed in 0u64..1000, m in 0usize..15) {
        let inst = instance(63, 3, m, seed);
        let p = RecoveryParams { max_iter: 15, ..default_params(&inst.z, 3, 0.8, 1e-8).unwrap() };
        let res = asap_recover(&inst.z, &p).unwrap();
        prop_assert!(res.errors.iter().all(|e| e.is_finite() && *e >= 0.0));
        prop_assert!(res.sigma1_trace.iter().all(|s| *s >= 0.0));
        prop_assert!(res.x_hat.is_finite());
        prop_assert_eq!(res.errors.len(), res.iterations + 1);
    }
}
