//! Exact Fock-basis reduced density matrix via the Xi-coefficient sums,
//! purity through the Xi contraction, the small-coupling reduced matrix, and
//! the decoherence sweep over coupling strength and squeezing.
//!
//! Tracing out the second field pairs tuples whose environment labels agree:
//! Xi(n, n', s, t) = sum_{m, m'} c(n,m,s,t) conj(c(n'-m', m+m', s+m', t+m')).
//! The m sum is truncated by shells once the running term ratio falls below
//! 1e-14 for three consecutive shells, with a geometric tail estimate kept
//! per entry. Distinct (n, n', s, t) keys can address the same reduced-matrix
//! element; all matrix-level quantities aggregate the key families first.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::amplitudes::{state_table, tail_bound, AmplitudeEvaluator};
use crate::error::{Error, Result};
use crate::gaussian::{covariance_from_params, purity_params};
use crate::linalg::sinc;
use crate::symplectic::SqueezeRotParams;

/// Relative shell threshold for truncating the internal sums.
const SHELL_RATIO: f64 = 1e-14;
const SHELL_STREAK: usize = 3;

/// One Xi coefficient with its truncation-tail estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiValue {
    pub value: C64,
    pub tail: f64,
}

/// Internal m-sum cap for the current parameters: tanh decay plus headroom.
fn m_cap(params: &SqueezeRotParams, cutoff: usize) -> usize {
    let x = params.r1().tanh().abs().max(params.r2().tanh().abs());
    let by_decay = if x < 1e-6 {
        8
    } else {
        ((1e-16f64).ln() / (2.0 * x.ln())).ceil() as usize
    };
    cutoff + by_decay.clamp(8, 220)
}

/// One Xi coefficient by the explicit (m, m') double sum.
pub fn xi(
    params: &SqueezeRotParams,
    n: i64,
    n_prime: i64,
    s: i64,
    t: i64,
    cutoff: usize,
) -> Result<XiValue> {
    if n < 0 {
        return Err(Error::Domain(format!("row pair index n = {n} < 0")));
    }
    let min_nn = n.min(n_prime);
    if s < -min_nn || t < -min_nn {
        return Err(Error::Domain(format!(
            "transfer indices (s={s}, t={t}) below -min(n, n') = {}",
            -min_nn
        )));
    }
    if (cutoff as i64) < s.max(t).max(0) {
        return Err(Error::Domain(format!(
            "cutoff {cutoff} below max(0, s, t) = {}",
            s.max(t).max(0)
        )));
    }
    let cap = m_cap(params, cutoff) as i64;
    let ev = AmplitudeEvaluator::new(params, (n.max(n_prime).max(0) + 2 * cap + 4) as usize)?;
    xi_with(&ev, n, n_prime, s, t, cap)
}

fn xi_with(
    ev: &AmplitudeEvaluator,
    n: i64,
    n_prime: i64,
    s: i64,
    t: i64,
    m_hard_cap: i64,
) -> Result<XiValue> {
    let m_start = s.max(t).max(0).max(-n_prime);
    let mut total = C64::new(0.0, 0.0);
    let mut streak = 0usize;
    let mut prev_shell = f64::INFINITY;
    let mut shell_mag = 0.0f64;
    let mut ratio = 0.5f64;
    for m in m_start..=m_hard_cap {
        let c1 = ev.amplitude(n, m, s, t)?;
        let mut shell = C64::new(0.0, 0.0);
        let mut shell_abs = 0.0;
        if c1 != C64::new(0.0, 0.0) {
            for mp in -m..=n_prime {
                let c2 = ev.amplitude(n_prime - mp, m + mp, s + mp, t + mp)?;
                let term = c1 * c2.conj();
                shell += term;
                shell_abs += term.norm();
            }
        }
        total += shell;
        shell_mag = shell_abs;
        if prev_shell > 0.0 && prev_shell.is_finite() && shell_abs > 0.0 {
            ratio = (shell_abs / prev_shell).min(0.9);
        }
        let scale = total.norm().max(1e-300);
        if shell_abs / scale < SHELL_RATIO {
            streak += 1;
            if streak >= SHELL_STREAK {
                break;
            }
        } else {
            streak = 0;
        }
        prev_shell = shell_abs;
    }
    let tail = shell_mag * ratio / (1.0 - ratio);
    Ok(XiValue { value: total, tail })
}

/// Truncated table of Xi coefficients with every reduced-matrix occupation
/// label (n+s, n+t, n'+s, n'+t) bounded by the cutoff.
#[derive(Debug, Clone)]
pub struct XiTable {
    pub params: SqueezeRotParams,
    pub cutoff: usize,
    pub entries: BTreeMap<(i64, i64, i64, i64), XiValue>,
    /// Hard cap applied to the internal m sums.
    pub m_cap: usize,
    /// Extra pair indices kept beyond the label cutoff.
    pub pair_pad: usize,
}

/// Pair-index padding beyond the label cutoff: entries with n past the labels
/// carry tanh^{2n} |tau|^{2(n - label)} suppression.
fn pair_pad(params: &SqueezeRotParams, tol: f64) -> usize {
    let x = params.r1().tanh().powi(2).max(params.r2().tanh().powi(2));
    let t2 = params.tau().norm_sqr();
    let decay = x * t2;
    if decay < 1e-30 {
        2
    } else {
        ((tol.ln() / decay.ln()).ceil() as usize).clamp(2, 48)
    }
}

/// Materialize the reduced density matrix as Xi coefficients.
pub fn reduced_density(params: &SqueezeRotParams, cutoff: usize) -> Result<XiTable> {
    let k = cutoff as i64;
    let pad = pair_pad(params, 1e-14) as i64;
    let cap = m_cap(params, cutoff) as i64;
    let ev = AmplitudeEvaluator::new(params, (k + pad + 2 * cap + 6) as usize)?;
    // keys with all four labels inside [0, K]
    let mut keys = Vec::new();
    for n in 0..=(k + pad) {
        for np in (-pad)..=(k + pad) {
            let min_nn = n.min(np);
            for s in (-min_nn)..=k {
                let (a, ap) = (n + s, np + s);
                if a < 0 || a > k || ap < 0 || ap > k {
                    continue;
                }
                for t in (-min_nn)..=k {
                    let (b, bp) = (n + t, np + t);
                    if b < 0 || b > k || bp < 0 || bp > k {
                        continue;
                    }
                    keys.push((n, np, s, t));
                }
            }
        }
    }
    let computed: Vec<((i64, i64, i64, i64), Result<XiValue>)> = keys
        .par_iter()
        .map(|&(n, np, s, t)| ((n, np, s, t), xi_with(&ev, n, np, s, t, cap)))
        .collect();
    let mut entries = BTreeMap::new();
    for (key, v) in computed {
        let v = v?;
        if v.value.norm() > 0.0 || v.tail > 0.0 {
            entries.insert(key, v);
        }
    }
    Ok(XiTable {
        params: *params,
        cutoff,
        entries,
        m_cap: cap as usize,
        pair_pad: pad as usize,
    })
}

impl XiTable {
    /// Aggregated reduced-matrix elements rho[(a,b), (a',b')] = sum over the
    /// (n, n', s, t) families addressing those labels.
    pub fn matrix_entries(&self) -> HashMap<([i64; 2], [i64; 2]), C64> {
        let mut map: HashMap<([i64; 2], [i64; 2]), C64> = HashMap::new();
        for (&(n, np, s, t), v) in &self.entries {
            let key = ([n + s, n + t], [np + s, np + t]);
            *map.entry(key).or_insert(C64::new(0.0, 0.0)) += v.value;
        }
        map
    }

    /// Tr rho_red over the stored domain, with the summed per-entry tails
    /// plus the label-cutoff deficit as the error estimate.
    pub fn trace(&self) -> (f64, f64) {
        let mut tr = C64::new(0.0, 0.0);
        let mut tails = 0.0;
        for (&(n, np, _s, _t), v) in &self.entries {
            if n == np {
                tr += v.value;
                tails += v.tail;
            }
        }
        (tr.re, tails + tail_bound(&self.params, self.cutoff))
    }

    /// Hermiticity residual of the aggregated matrix.
    pub fn hermiticity_residual(&self) -> f64 {
        let m = self.matrix_entries();
        let mut worst: f64 = 0.0;
        for ((row, col), v) in &m {
            let sym = m.get(&(*col, *row)).copied().unwrap_or(C64::new(0.0, 0.0));
            worst = worst.max((v - sym.conj()).norm());
        }
        worst
    }

    /// Statistical isotropy: Xi is symmetric under s <-> t key by key.
    pub fn swap_symmetry_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (&(n, np, s, t), v) in &self.entries {
            if let Some(w) = self.entries.get(&(n, np, t, s)) {
                worst = worst.max((v.value - w.value).norm());
            }
        }
        worst
    }

    /// Purity by contracting the aggregated matrix elements.
    pub fn purity(&self) -> f64 {
        let m = self.matrix_entries();
        let mut acc = C64::new(0.0, 0.0);
        for ((row, col), v) in &m {
            if let Some(w) = m.get(&(*col, *row)) {
                acc += v * w;
            }
        }
        acc.re
    }
}

/// Purity from the closed-form amplitudes: the Xi contraction evaluated by
/// aggregating ket amplitudes at label cutoff K and tracing out the second
/// field. Returns (gamma, conservative tail bound).
pub fn purity_fock(params: &SqueezeRotParams, cutoff: usize) -> Result<(f64, f64)> {
    let k1 = cutoff + 1;
    let table = state_table(params, cutoff)?;
    // dense aggregated state indexed by labels
    let mut psi = vec![C64::new(0.0, 0.0); k1 * k1 * k1 * k1];
    for e in &table.entries {
        let l = e.labels();
        let idx = ((l[0] as usize * k1 + l[1] as usize) * k1 + l[2] as usize) * k1 + l[3] as usize;
        psi[idx] += e.amplitude;
    }
    let sysdim = k1 * k1;
    let rho: Vec<C64> = (0..sysdim * sysdim)
        .into_par_iter()
        .map(|ri| {
            let row = ri / sysdim;
            let col = ri % sysdim;
            let (a, b) = (row / k1, row % k1);
            let (a2, b2) = (col / k1, col % k1);
            let mut acc = C64::new(0.0, 0.0);
            for c in 0..k1 {
                for d in 0..k1 {
                    let i1 = ((a * k1 + b) * k1 + c) * k1 + d;
                    let i2 = ((a2 * k1 + b2) * k1 + c) * k1 + d;
                    acc += psi[i1] * psi[i2].conj();
                }
            }
            acc
        })
        .collect();
    let mut gamma = 0.0;
    for row in 0..sysdim {
        for col in 0..sysdim {
            gamma += (rho[row * sysdim + col] * rho[col * sysdim + row]).re;
        }
    }
    // |Tr(rho~^2) - Tr(rho^2)| <= 2 d + d^2 for a weight-d truncation
    let d = table.tail_bound.max(table.norm_deficit.abs());
    Ok((gamma, 2.0 * d + d * d))
}

/// Leading-order purity in the coupling:
/// gamma = 1 - 4 |tau|^2 sinc^2(theta4) [sinh^2(r1 - r2)
///         + cos^2(theta4 - arg tau) sinh(2 r1) sinh(2 r2)].
pub fn purity_perturbative(params: &SqueezeRotParams) -> f64 {
    let tau = params.tau();
    let t2 = tau.norm_sqr();
    if t2 == 0.0 {
        return 1.0;
    }
    let sc = sinc(params.theta4);
    let (r1, r2) = (params.r1(), params.r2());
    let cphase = (params.theta4 - tau.arg()).cos();
    1.0 - 4.0
        * t2
        * sc
        * sc
        * ((r1 - r2).sinh().powi(2) + cphase * cphase * (2.0 * r1).sinh() * (2.0 * r2).sinh())
}

/// The |tau|^2-order reduced density matrix assembled from the nine listed
/// transfer families, keyed like the exact Xi table.
pub fn reduced_density_perturbative(params: &SqueezeRotParams, cutoff: usize) -> Result<XiTable> {
    use crate::amplitudes::{two_mode_coefficient, weight_f, weight_g, Sector};
    if !params.is_finite() {
        return Err(Error::Domain("non-finite parameters".into()));
    }
    let tau = params.tau();
    let t2 = tau.norm_sqr();
    let arg_tau = if tau.norm() > 0.0 { tau.arg() } else { 0.0 };
    let k = cutoff as i64;
    let cap = m_cap(params, cutoff) as i64;
    let c1 = |n: i64| -> C64 {
        if n < 0 {
            C64::new(0.0, 0.0)
        } else {
            two_mode_coefficient(Sector::One, params, n as u32)
        }
    };
    let c2 = |m: i64| -> C64 {
        if m < 0 {
            C64::new(0.0, 0.0)
        } else {
            two_mode_coefficient(Sector::Two, params, m as u32)
        }
    };
    let f = |n: i64, m: i64| weight_f(params.theta4, arg_tau, n, m);
    let mut entries: BTreeMap<(i64, i64, i64, i64), XiValue> = BTreeMap::new();
    let add = |entries: &mut BTreeMap<(i64, i64, i64, i64), XiValue>,
                   n: i64,
                   np: i64,
                   s: i64,
                   t: i64,
                   v: C64| {
        let labels = [n + s, n + t, np + s, np + t];
        if labels.iter().any(|&l| l < 0 || l > k) || v == C64::new(0.0, 0.0) {
            return;
        }
        entries
            .entry((n, np, s, t))
            .or_insert(XiValue {
                value: C64::new(0.0, 0.0),
                tail: 0.0,
            })
            .value += v;
    };
    for n in 0..=(k + 1) {
        for np in 0..=(k + 1) {
            let base = c1(n) * c1(np).conj();
            if base == C64::new(0.0, 0.0) {
                continue;
            }
            add(&mut entries, n, np, 0, 0, base);
            if t2 == 0.0 {
                continue;
            }
            // environment sums for the nine transfer families
            let mut s_ff_down = C64::new(0.0, 0.0);
            let mut s_ff_up = C64::new(0.0, 0.0);
            let mut s_cross_down = C64::new(0.0, 0.0);
            let mut s_cross_up = C64::new(0.0, 0.0);
            let mut s_pair5 = C64::new(0.0, 0.0);
            let mut s_pair6 = C64::new(0.0, 0.0);
            let mut s_pair7 = C64::new(0.0, 0.0);
            let mut s_pair8 = C64::new(0.0, 0.0);
            let mut s_g = C64::new(0.0, 0.0);
            for m in 0..=cap {
                let w2 = c2(m).norm_sqr();
                let cm = c2(m);
                let cm_up = c2(m + 1).conj();
                let cm_dn = c2(m - 1).conj();
                s_ff_down += w2 * f(n, m + 1) * f(np, m + 1).conj();
                s_ff_up += w2 * f(n + 1, m).conj() * f(np + 1, m);
                s_cross_down += cm * cm_up * f(n, m + 1) * f(np + 1, m + 1);
                s_cross_up += cm * cm_dn * f(n + 1, m).conj() * f(np, m).conj();
                let f5 = f(np, m).conj();
                s_pair5 += cm * cm_dn * f5 * f5;
                let f6 = f(n, m + 1);
                s_pair6 += cm * cm_up * f6 * f6;
                let f7 = f(np + 1, m + 1);
                s_pair7 += cm * cm_up * f7 * f7;
                let f8 = f(n + 1, m).conj();
                s_pair8 += cm * cm_dn * f8 * f8;
                s_g += w2
                    * (weight_g(params.theta4, arg_tau, np, m).conj()
                        + weight_g(params.theta4, arg_tau, n, m));
            }
            let w = base * t2;
            add(&mut entries, n, np, -1, 0, w * s_ff_down);
            add(&mut entries, n, np, 0, -1, w * s_ff_down);
            add(&mut entries, n, np, 1, 0, w * s_ff_up);
            add(&mut entries, n, np, 0, 1, w * s_ff_up);
            add(&mut entries, n, np + 1, -1, 0, -w * s_cross_down);
            add(&mut entries, n, np + 1, 0, -1, -w * s_cross_down);
            add(&mut entries, n, np - 1, 1, 0, -w * s_cross_up);
            add(&mut entries, n, np - 1, 0, 1, -w * s_cross_up);
            add(&mut entries, n, np - 1, 0, 0, w * s_pair5);
            add(&mut entries, n, np + 1, -1, -1, w * s_pair6);
            add(&mut entries, n, np + 1, 0, 0, w * s_pair7);
            add(&mut entries, n, np - 1, 1, 1, w * s_pair8);
            add(&mut entries, n, np, 0, 0, w * s_g);
        }
    }
    Ok(XiTable {
        params: *params,
        cutoff,
        entries,
        m_cap: cap as usize,
        pair_pad: 1,
    })
}

/// Inclusive linear grid.
#[derive(Debug, Clone, Copy)]
pub struct GridRange {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl GridRange {
    pub fn values(&self) -> Vec<f64> {
        if self.count <= 1 {
            return vec![self.start];
        }
        (0..self.count)
            .map(|i| self.start + (self.end - self.start) * i as f64 / (self.count - 1) as f64)
            .collect()
    }
}

/// One sweep sample: the Gaussian and perturbative purities and the relative
/// spectra distortion of the system sector against the uncoupled baseline.
#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub tau_abs: f64,
    pub r: f64,
    pub gamma_gaussian: f64,
    pub gamma_perturbative: f64,
    pub distortion: f64,
    pub flagged: bool,
}

/// Thresholds for flagging the decoherence-without-spectral-damage window.
#[derive(Debug, Clone, Copy)]
pub struct SweepThresholds {
    pub gamma_below: f64,
    pub distortion_below: f64,
}

impl Default for SweepThresholds {
    fn default() -> Self {
        SweepThresholds {
            gamma_below: 0.5,
            distortion_below: 0.05,
        }
    }
}

pub const SWEEP_CSV_HEADER: &str = "tau,r,gamma_gaussian,gamma_pert,distortion,flag";

/// Sweep |tau| and r = r1 = r2 at fixed base angles; distortion is the
/// largest relative change of the three system-sector spectra against tau = 0.
pub fn decoherence_sweep(
    base: &SqueezeRotParams,
    tau_range: &GridRange,
    r_range: &GridRange,
    thresholds: &SweepThresholds,
) -> Result<Vec<SweepRow>> {
    let arg_tau = {
        let t = base.tau();
        if t.norm() > 0.0 {
            t.arg()
        } else {
            0.0
        }
    };
    let k = 1.0;
    let mut rows = Vec::new();
    for &r in &r_range.values() {
        // uncoupled baseline at this squeezing
        let mut p0 = *base;
        p0.theta5 = 0.0;
        p0.theta6 = 0.0;
        p0.set_r(r, r);
        let cov0 = covariance_from_params(&p0, k)?;
        let base_spec = [cov0.phiphi[0][0], cov0.pipi[0][0], cov0.phipi[0][0]];
        for &tau_abs in &tau_range.values() {
            let mut p = *base;
            p.theta5 = tau_abs * arg_tau.sin();
            p.theta6 = -tau_abs * arg_tau.cos();
            p.set_r(r, r);
            let rep = purity_params(&p)?;
            let cov = covariance_from_params(&p, k)?;
            let spec = [cov.phiphi[0][0], cov.pipi[0][0], cov.phipi[0][0]];
            let mut distortion: f64 = 0.0;
            for i in 0..3 {
                let denom = base_spec[i].abs().max(1e-12);
                distortion = distortion.max((spec[i] - base_spec[i]).abs() / denom);
            }
            let flagged =
                rep.gamma < thresholds.gamma_below && distortion < thresholds.distortion_below;
            rows.push(SweepRow {
                tau_abs,
                r,
                gamma_gaussian: rep.gamma,
                gamma_perturbative: purity_perturbative(&p),
                distortion,
                flagged,
            });
        }
    }
    Ok(rows)
}

pub fn sweep_csv_row(row: &SweepRow) -> String {
    format!(
        "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
        row.tau_abs,
        row.r,
        row.gamma_gaussian,
        row.gamma_perturbative,
        row.distortion,
        if row.flagged { 1 } else { 0 }
    )
}
