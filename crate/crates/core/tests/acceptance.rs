//! Acceptance suite: one check per shipped guarantee, each printing a
//! pass/fail line with the measured value, the pinned tolerance and the
//! runtime. Run with `cargo test --test acceptance -- --nocapture`.

use std::time::{Duration, Instant};

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fourmode::amplitudes::{
    global_phase, state_table, suggested_cutoff, two_mode_coefficient, Sector,
};
use fourmode::bogolyubov::{from_params, max_constraint_residual};
use fourmode::decoherence::{
    decoherence_sweep, purity_fock, purity_perturbative, GridRange, SweepThresholds,
};
use fourmode::dynamics::{cosmology_kernel, evolve_green, CosmologyModel, ScaleFactor};
use fourmode::gaussian::{
    covariance_from_bogolyubov, covariance_from_params, purity_params, spectra_perturbative,
};
use fourmode::linalg::{symplectic_residual, CMat4, Mat4};
use fourmode::oracle::{
    partial_trace_purity, run_circuit, run_circuit_block, TruncatedSpace,
};
use fourmode::symplectic::{
    compose_bloch_messiah, factored_su2_rotation, generator_int, su2_rotation, Basis,
    MixingFactors, SqueezeRotParams,
};

struct Criterion {
    name: &'static str,
    passed: bool,
    detail: String,
    elapsed: Duration,
    budget: Duration,
}

fn run_criterion(
    name: &'static str,
    budget: Duration,
    f: impl FnOnce() -> (bool, String),
) -> Criterion {
    let start = Instant::now();
    let (passed, detail) = f();
    let elapsed = start.elapsed();
    Criterion {
        name,
        passed,
        detail,
        elapsed,
        budget,
    }
}

fn random_params(rng: &mut ChaCha8Rng, scale: f64) -> SqueezeRotParams {
    let mut raw = [0.0; 10];
    for v in &mut raw {
        *v = rng.gen_range(-scale..scale);
    }
    SqueezeRotParams::from_array(raw)
}

/// Plain scaled Taylor-series matrix exponential: the independent oracle for
/// the closed-form factorizations.
fn series_expm(x: &CMat4) -> CMat4 {
    let norm = x.max_abs();
    let mut scale = 1.0;
    let mut squarings = 0;
    while norm * scale > 0.25 {
        scale /= 2.0;
        squarings += 1;
    }
    let scaled = x.scale(C64::new(scale, 0.0));
    let mut term = CMat4::identity();
    let mut sum = CMat4::identity();
    for k in 1..32 {
        term = term.mul(&scaled).scale(C64::new(1.0 / k as f64, 0.0));
        sum = sum.add(&term);
    }
    for _ in 0..squarings {
        sum = sum.mul(&sum);
    }
    sum
}

fn c1_algebra_exactness() -> (bool, String) {
    let mut exact = 0;
    for i in 1..=10usize {
        for j in (i + 1)..=10 {
            let c = fourmode::symplectic::commutator(i, j).unwrap();
            let rhs = match fourmode::symplectic::expected_commutator(i, j).unwrap() {
                None => [[0i64; 4]; 4],
                Some((coeff, t)) => {
                    let k = generator_int(t).unwrap();
                    let mut r = [[0i64; 4]; 4];
                    for a in 0..4 {
                        for b in 0..4 {
                            r[a][b] = coeff * k[a][b];
                        }
                    }
                    r
                }
            };
            if c == rhs {
                exact += 1;
            }
        }
    }
    (exact == 45, format!("{exact}/45 commutators integer-exact"))
}

fn c2_symplecticity() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_sym: f64 = 0.0;
    let mut worst_ct: f64 = 0.0;
    for _ in 0..1000 {
        let p = random_params(&mut rng, 1.0);
        let m = compose_bloch_messiah(&p, Basis::Fundamental)
            .unwrap()
            .real_part();
        worst_sym = worst_sym.max(symplectic_residual(&m));
        worst_ct = worst_ct.max(max_constraint_residual(&from_params(&p).unwrap()));
    }
    (
        worst_sym < 1e-10 && worst_ct < 1e-10,
        format!("1000 draws: max symplectic residual {worst_sym:.2e}, max constraint residual {worst_ct:.2e} (tol 1e-10)"),
    )
}

fn c3_factorization_oracle() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut used = 0;
    while used < 100 {
        let t4 = rng.gen_range(-1.0..1.0);
        let t5 = rng.gen_range(-1.0..1.0);
        let t6 = rng.gen_range(-1.0..1.0);
        // skip near the Gauss-decomposition singularity (cos th = t4 sinc th = 0)
        let f = match MixingFactors::from_angles(t4, t5, t6) {
            Ok(f) if f.tau_tilde.norm() > 0.05 => f,
            _ => continue,
        };
        used += 1;
        let lhs = factored_su2_rotation(&f);
        let mut x = Mat4::zeros();
        for (c, idx) in [(t4, 4usize), (t5, 5), (t6, 6)] {
            let k = generator_int(idx).unwrap();
            for a in 0..4 {
                for b in 0..4 {
                    x.0[a][b] += c * k[a][b] as f64;
                }
            }
        }
        let rhs = series_expm(&x.to_complex());
        worst = worst.max(lhs.max_abs_diff(&rhs));
        // sanity: the closed form agrees with the series oracle too
        worst = worst.max(su2_rotation(t4, t5, t6).to_complex().max_abs_diff(&rhs));
    }
    (
        worst < 1e-10,
        format!("100 draws: max | factored - series exp | = {worst:.2e} (tol 1e-10)"),
    )
}

fn c4_decoupled_reduction() -> (bool, String) {
    let mut p = SqueezeRotParams::ZERO;
    p.theta3 = 0.2;
    p.theta4 = 0.45;
    p.phi3 = -0.15;
    p.phi4 = 0.3;
    p.set_r(0.9, 0.6);
    let glob = global_phase(&p);
    let mut worst: f64 = 0.0;
    for n in 0..=7i64 {
        for m in 0..=7i64 {
            let c = fourmode::amplitudes::amplitude(&p, n, m, 0, 0).unwrap();
            let expect = glob
                * two_mode_coefficient(Sector::One, &p, n as u32)
                * two_mode_coefficient(Sector::Two, &p, m as u32);
            worst = worst.max((c - expect).norm());
        }
    }
    let g_gauss = purity_params(&p).unwrap().gamma;
    let k = suggested_cutoff(&p, 1e-10);
    let (g_fock, _) = purity_fock(&p, k).unwrap();
    let ok = worst < 1e-12 && (g_gauss - 1.0).abs() < 1e-8 && (g_fock - 1.0).abs() < 1e-8;
    (
        ok,
        format!(
            "amplitude vs two-mode product: {worst:.2e} (tol 1e-12); purity gaussian {:.2e}, fock {:.2e} from 1 (tol 1e-8)",
            (g_gauss - 1.0).abs(),
            (g_fock - 1.0).abs()
        ),
    )
}

fn c5_closed_form_vs_brute_force() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cutoff = 7usize;
    let margin = 16usize;
    let mut worst: f64 = 0.0;
    let mut worst_leak: f64 = 0.0;
    for draw in 0..4 {
        let mut p = SqueezeRotParams::ZERO;
        p.theta3 = rng.gen_range(-0.5..0.5);
        p.theta4 = rng.gen_range(-0.6..0.6);
        let t_abs = if draw == 0 {
            0.3
        } else {
            rng.gen_range(0.05..0.3)
        };
        let arg = rng.gen_range(-3.0..3.0);
        p.theta5 = t_abs * f64::sin(arg);
        p.theta6 = -t_abs * f64::cos(arg);
        p.phi3 = rng.gen_range(-0.5..0.5);
        p.phi4 = rng.gen_range(-0.6..0.6);
        p.phi5 = rng.gen_range(-0.2..0.2);
        p.phi6 = rng.gen_range(-0.2..0.2);
        let r1 = if draw == 0 { 0.8 } else { rng.gen_range(0.2..0.8) };
        let r2 = if draw == 0 { 0.8 } else { rng.gen_range(0.2..0.8) };
        p.set_r(r1, r2);
        let labels = state_table(&p, cutoff).unwrap().label_amplitudes();
        let space = TruncatedSpace::new(cutoff + margin);
        // leakage accounting through the unitary block route; amplitude
        // comparison against the literal factored circuit
        let (_, block_report) = run_circuit_block(&space, &p).unwrap();
        worst_leak = worst_leak.max(block_report.leakage);
        let (psi, _) = run_circuit(&space, &p).unwrap();
        for (l, v) in &labels {
            let got =
                psi[space.index([l[0] as usize, l[1] as usize, l[2] as usize, l[3] as usize])];
            worst = worst.max((got - v).norm());
        }
    }
    (
        worst < 1e-8 && worst_leak < 1e-7,
        format!("4 draws at labels <= {cutoff}, N = {}: max amplitude discrepancy {worst:.2e} (tol 1e-8), truncation leakage {worst_leak:.2e}", cutoff + margin),
    )
}

fn c6_triple_route_purity() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_fock: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    for draw in 0..3 {
        let mut p = SqueezeRotParams::ZERO;
        p.theta3 = rng.gen_range(-0.4..0.4);
        p.theta4 = rng.gen_range(-0.5..0.5);
        let t_abs = if draw == 0 { 0.3 } else { rng.gen_range(0.1..0.3) };
        let arg = rng.gen_range(-3.0..3.0);
        p.theta5 = t_abs * f64::sin(arg);
        p.theta6 = -t_abs * f64::cos(arg);
        p.phi3 = rng.gen_range(-0.4..0.4);
        p.phi4 = rng.gen_range(-0.5..0.5);
        let r1 = if draw == 0 { 1.0 } else { rng.gen_range(0.4..1.0) };
        let r2 = if draw == 0 { 1.0 } else { rng.gen_range(0.4..1.0) };
        p.set_r(r1, r2);
        let g_gauss = purity_params(&p).unwrap().gamma;
        let k = suggested_cutoff(&p, 1e-7).clamp(16, 30);
        let (g_fock, _) = purity_fock(&p, k).unwrap();
        let space = TruncatedSpace::new(24);
        let (psi, _) = run_circuit_block(&space, &p).unwrap();
        let g_oracle = partial_trace_purity(&space, &psi);
        worst_fock = worst_fock.max((g_fock - g_gauss).abs());
        worst_oracle = worst_oracle.max((g_oracle - g_gauss).abs());
    }
    (
        worst_fock < 1e-4 && worst_oracle < 1e-4,
        format!("3 draws (r <= 1, |tau| <= 0.3): |fock - gaussian| {worst_fock:.2e}, |oracle - gaussian| {worst_oracle:.2e} (tol 1e-4)"),
    )
}

fn c7_perturbative_consistency() -> (bool, String) {
    let taus = [0.2, 0.1, 0.05];
    let make = |t: f64| {
        let mut p = SqueezeRotParams::ZERO;
        p.theta3 = 0.3;
        p.theta4 = 0.5;
        p.theta5 = t * f64::sin(0.4);
        p.theta6 = -t * f64::cos(0.4);
        p.set_r(0.5, 0.4);
        p
    };
    let mut perrs = Vec::new();
    let mut serrs = Vec::new();
    for &t in &taus {
        let p = make(t);
        perrs.push((purity_params(&p).unwrap().gamma - purity_perturbative(&p)).abs());
        let exact = covariance_from_params(&p, 1.3).unwrap();
        let pert = spectra_perturbative(&p, 1.3).unwrap();
        let resid = (exact.phiphi[0][0] - pert.phiphi[0][0])
            .abs()
            .max((exact.pipi[0][0] - pert.pipi[0][0]).abs())
            .max((exact.phipi[0][0] - pert.phipi[0][0]).abs());
        serrs.push(resid);
    }
    let pslope = (perrs[0] / perrs[2]).ln() / 4.0f64.ln();
    let sslope = (serrs[0] / serrs[2]).ln() / 4.0f64.ln();
    let ok = (pslope - 4.0).abs() < 0.2 && (sslope - 4.0).abs() < 0.2;
    (
        ok,
        format!("log-log slopes over |tau| = 0.2/0.1/0.05: purity {pslope:.3}, spectra {sslope:.3} (required 4 +- 0.2)"),
    )
}

fn c8_vanishing_correction() -> (bool, String) {
    // r1 = r2 with theta4 - arg tau = pi/2 zeroes the leading correction
    // (the quoted configuration; at +- pi it is maximal instead)
    let theta4 = 0.3;
    let arg = theta4 - std::f64::consts::FRAC_PI_2;
    let mut errs = Vec::new();
    for &t in &[0.2, 0.1, 0.05] {
        let mut p = SqueezeRotParams::ZERO;
        p.theta4 = theta4;
        p.theta5 = t * f64::sin(arg);
        p.theta6 = -t * f64::cos(arg);
        p.set_r(0.8, 0.8);
        errs.push((purity_params(&p).unwrap().gamma - 1.0).abs());
    }
    let slope = (errs[0] / errs[2]).ln() / 4.0f64.ln();
    let ok = slope >= 3.8 && errs[2] < 1e-7;
    (
        ok,
        format!("|gamma - 1| = {:.2e} at |tau| = 0.05, decay slope {slope:.2} (O(|tau|^4) required)", errs[2]),
    )
}

fn c9_conformal_cosmology() -> (bool, String) {
    let model = CosmologyModel {
        zeta: 1.0 / 6.0,
        lambda: 0.0,
        scale_factor: ScaleFactor::DeSitter { hubble: 1.0 },
        k: 1.0,
    };
    let traj = evolve_green(
        |eta| cosmology_kernel(&model, eta),
        model.k,
        -8.0,
        -0.4,
        1500,
    )
    .unwrap();
    let max_beta = traj.max_beta();
    let mut worst_gamma: f64 = 0.0;
    for p in &traj.params {
        worst_gamma = worst_gamma.max((purity_params(p).unwrap().gamma - 1.0).abs());
    }
    (
        max_beta < 1e-8 && worst_gamma < 1e-6,
        format!("max |beta| over trajectory {max_beta:.2e} (tol 1e-8); max |gamma - 1| {worst_gamma:.2e} (tol 1e-6)"),
    )
}

fn c10_decoherence_window() -> (bool, String) {
    let mut base = SqueezeRotParams::ZERO;
    base.theta3 = 0.3;
    base.theta4 = 0.7;
    let rows = decoherence_sweep(
        &base,
        &GridRange {
            start: 0.05,
            end: 0.2,
            count: 7,
        },
        &GridRange {
            start: 3.0,
            end: 3.0,
            count: 1,
        },
        &SweepThresholds::default(),
    )
    .unwrap();
    let flagged = rows.iter().filter(|r| r.flagged).count();
    (
        flagged > 0,
        format!("sweep at r = 3, |tau| in [0.05, 0.2]: {flagged}/{} points with gamma < 0.5 and distortion < 5%", rows.len()),
    )
}

fn c11_dual_covariance_routes() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let p = random_params(&mut rng, 1.0);
        let k = rng.gen_range(0.3..3.0);
        let via_b = covariance_from_bogolyubov(&from_params(&p).unwrap(), k);
        let via_p = covariance_from_params(&p, k).unwrap();
        worst = worst.max(via_b.max_abs_diff(&via_p));
    }
    (
        worst < 1e-10,
        format!("1000 draws: max |bogolyubov route - parameter route| = {worst:.2e} (tol 1e-10)"),
    )
}

#[test]
fn acceptance() {
    let secs = Duration::from_secs;
    let criteria = vec![
        run_criterion("1. algebra exactness", secs(1), c1_algebra_exactness),
        run_criterion("2. symplecticity + constraints", secs(5), c2_symplecticity),
        run_criterion("3. factorization oracle", secs(5), c3_factorization_oracle),
        run_criterion("4. decoupled reduction", secs(30), c4_decoupled_reduction),
        run_criterion("5. closed form vs brute force", secs(120), c5_closed_form_vs_brute_force),
        run_criterion("6. triple-route purity", secs(300), c6_triple_route_purity),
        run_criterion("7. perturbative consistency", secs(10), c7_perturbative_consistency),
        run_criterion("8. vanishing correction", secs(10), c8_vanishing_correction),
        run_criterion("9. conformal cosmology", secs(60), c9_conformal_cosmology),
        run_criterion("10. decoherence window", secs(30), c10_decoherence_window),
        run_criterion("11. dual covariance routes", secs(10), c11_dual_covariance_routes),
    ];
    let mut all_ok = true;
    println!();
    for c in &criteria {
        let in_budget = c.elapsed <= c.budget;
        let status = if c.passed && in_budget { "PASS" } else { "FAIL" };
        println!(
            "[{status}] {:<32} {:>8.2?} (budget {:?})  {}",
            c.name, c.elapsed, c.budget, c.detail
        );
        all_ok &= c.passed && in_budget;
    }
    println!();
    assert!(all_ok, "one or more acceptance criteria failed");
}
