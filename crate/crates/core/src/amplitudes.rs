//! Closed-form Fock amplitudes of the evolved vacuum (the four-mode squeezed
//! state), the decoupled two-mode limit, and the small-coupling expansion.
//!
//! The state is a sum over tuples (n, m, s, t): n and m count pairs created in
//! each sector; s and t count net transfers between sectors for the +k and -k
//! modes. The occupied ket for a tuple is |(n+s), (n+t), (m-s), (m-t)> in mode
//! order (1,+k), (1,-k), (2,+k), (2,-k). Distinct tuples can address the same
//! ket; the physical amplitude of a ket is the sum over its tuple family.
//!
//! All factorial ratios and tanh powers are evaluated through log-magnitudes
//! with phases and signs tracked separately, so occupations up to a few
//! hundred stay inside f64 range.

use std::collections::HashMap;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::sinc;
use crate::symplectic::{MixingFactors, SqueezeRotParams};

/// Entry budget for materialized tables (resource guard).
const MAX_TABLE_ENTRIES: usize = 20_000_000;

/// Field sector selector for the two-mode coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    One,
    Two,
}

/// ln(n!) lookup, built once per evaluator.
struct LnFactorials(Vec<f64>);

impl LnFactorials {
    fn new(max_n: usize) -> Self {
        let mut v = Vec::with_capacity(max_n + 1);
        v.push(0.0);
        let mut acc = 0.0;
        for k in 1..=max_n {
            acc += (k as f64).ln();
            v.push(acc);
        }
        LnFactorials(v)
    }

    #[inline]
    fn get(&self, n: i64) -> f64 {
        self.0[n as usize]
    }
}

/// Precomputed quantities for amplitude evaluation at fixed parameters.
pub struct AmplitudeEvaluator {
    params: SqueezeRotParams,
    lnf: LnFactorials,
    // squeezing magnitudes
    ln_tanh1: f64,
    ln_tanh2: f64,
    sign1: f64,
    sign2: f64,
    ln_cosh_sum: f64,
    // mixing: u = exp(-pz/2), transfer weight w = p- p+ e^{-pz} = -|tau|^2 sinc^2
    ln_u_abs: f64,
    arg_u: f64,
    ln_w_abs: f64,
    w_is_zero: bool,
    ln_ipp_abs: f64,
    arg_ipp: f64,
}

impl AmplitudeEvaluator {
    /// Build an evaluator able to address occupations up to `max_total` per
    /// factorial argument (callers pass n+m upper bounds).
    pub fn new(params: &SqueezeRotParams, max_total: usize) -> Result<Self> {
        if !params.is_finite() {
            return Err(Error::Domain("non-finite parameters".into()));
        }
        let f = MixingFactors::from_params(params)?;
        let (r1, r2) = (params.r1(), params.r2());
        let sc = sinc(f.theta);
        let u = f.exp_minus_pz_half();
        let tau_abs = f.tau.norm();
        let transfer = tau_abs * sc.abs();
        let w_is_zero = transfer == 0.0;
        let (ln_ipp_abs, arg_ipp) = if w_is_zero {
            (f64::NEG_INFINITY, 0.0)
        } else {
            let ipp = C64::new(0.0, 1.0) * f.p_plus;
            (ipp.norm().ln(), ipp.arg())
        };
        Ok(AmplitudeEvaluator {
            params: *params,
            lnf: LnFactorials::new(max_total + 2),
            ln_tanh1: r1.tanh().abs().ln(),
            ln_tanh2: r2.tanh().abs().ln(),
            sign1: if r1.tanh() < 0.0 { -1.0 } else { 1.0 },
            sign2: if r2.tanh() < 0.0 { -1.0 } else { 1.0 },
            ln_cosh_sum: r1.cosh().ln() + r2.cosh().ln(),
            ln_u_abs: u.norm().ln(),
            arg_u: u.arg(),
            ln_w_abs: 2.0 * transfer.ln(),
            w_is_zero,
            ln_ipp_abs,
            arg_ipp,
        })
    }

    fn check_indices(&self, n: i64, m: i64, s: i64, t: i64) -> Result<()> {
        if n < 0 || m < 0 || s < -n || s > m || t < -n || t > m {
            return Err(Error::Domain(format!(
                "indices (n={n}, m={m}, s={s}, t={t}) violate n,m >= 0 and -n <= s,t <= m"
            )));
        }
        if (n + m) as usize + 2 >= self.lnf.0.len() {
            return Err(Error::Domain(format!(
                "occupation {n}+{m} exceeds evaluator table size"
            )));
        }
        Ok(())
    }

    /// ln|.| and sign of the internal transfer sum
    /// S(sigma) = sum_{i=max(0,sigma)}^{m} w^i (n+i)! / (i! (i-sigma)! (m-i)!).
    fn transfer_sum(&self, n: i64, m: i64, sigma: i64) -> (f64, f64) {
        let lnf = &self.lnf;
        let i0 = sigma.max(0);
        if self.w_is_zero {
            // only the i = max(0, sigma) term survives, and only with w^0
            if i0 == 0 {
                return (lnf.get(n) - lnf.get(-sigma) - lnf.get(m), 1.0);
            }
            return (f64::NEG_INFINITY, 1.0);
        }
        let mut lns = Vec::with_capacity((m - i0 + 1) as usize);
        let mut max_ln = f64::NEG_INFINITY;
        for i in i0..=m {
            let l = i as f64 * self.ln_w_abs + lnf.get(n + i)
                - lnf.get(i)
                - lnf.get(i - sigma)
                - lnf.get(m - i);
            max_ln = max_ln.max(l);
            lns.push(l);
        }
        if max_ln == f64::NEG_INFINITY {
            return (f64::NEG_INFINITY, 1.0);
        }
        let mut acc = 0.0;
        for (idx, l) in lns.iter().enumerate() {
            let i = i0 + idx as i64;
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 }; // w <= 0
            acc += sign * (l - max_ln).exp();
        }
        if acc == 0.0 {
            return (f64::NEG_INFINITY, 1.0);
        }
        (max_ln + acc.abs().ln(), acc.signum())
    }

    /// Per-sigma factor h(sigma) = (i p+)^(-sigma) sqrt((m-sigma)!/(n+sigma)!) S(sigma)
    /// returned as (ln magnitude, phase).
    fn transfer_factor(&self, n: i64, m: i64, sigma: i64) -> (f64, f64) {
        let (ln_s, sign_s) = self.transfer_sum(n, m, sigma);
        if ln_s == f64::NEG_INFINITY {
            return (f64::NEG_INFINITY, 0.0);
        }
        let ln_mag = ln_s
            + 0.5 * (self.lnf.get(m - sigma) - self.lnf.get(n + sigma))
            + if sigma == 0 {
                0.0
            } else {
                -(sigma as f64) * self.ln_ipp_abs
            };
        let mut phase = -(sigma as f64) * self.arg_ipp;
        if sign_s < 0.0 {
            phase += std::f64::consts::PI;
        }
        (ln_mag, phase)
    }

    /// Tuple-independent prefactor C(n, m) as (ln magnitude, phase).
    fn prefactor(&self, n: i64, m: i64) -> (f64, f64) {
        let p = &self.params;
        let mut ln_mag = -self.ln_cosh_sum + self.lnf.get(m) - self.lnf.get(n)
            + 2.0 * (n - m) as f64 * self.ln_u_abs;
        ln_mag += if n == 0 { 0.0 } else { n as f64 * self.ln_tanh1 };
        ln_mag += if m == 0 { 0.0 } else { m as f64 * self.ln_tanh2 };
        let mut phase = -2.0 * (p.theta3 * (n + m + 1) as f64 + p.phi3)
            + 2.0 * (n - m) as f64 * self.arg_u;
        if self.sign1 < 0.0 && n % 2 == 1 {
            phase += std::f64::consts::PI;
        }
        if self.sign2 < 0.0 && m % 2 == 1 {
            phase += std::f64::consts::PI;
        }
        (ln_mag, phase)
    }

    /// Amplitude c(n, m, s, t) of one tuple.
    pub fn amplitude(&self, n: i64, m: i64, s: i64, t: i64) -> Result<C64> {
        self.check_indices(n, m, s, t)?;
        // tanh^n = 0 cases
        if (n > 0 && self.ln_tanh1 == f64::NEG_INFINITY)
            || (m > 0 && self.ln_tanh2 == f64::NEG_INFINITY)
        {
            return Ok(C64::new(0.0, 0.0));
        }
        if self.w_is_zero && (s != 0 || t != 0) {
            return Ok(C64::new(0.0, 0.0));
        }
        let (ln_c, ph_c) = self.prefactor(n, m);
        let (ln_hs, ph_hs) = self.transfer_factor(n, m, s);
        let (ln_ht, ph_ht) = self.transfer_factor(n, m, t);
        let ln_total = ln_c + ln_hs + ln_ht;
        if ln_total == f64::NEG_INFINITY || ln_total < -745.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        let mag = ln_total.exp();
        let phase = ph_c + ph_hs + ph_ht;
        Ok(C64::new(mag * phase.cos(), mag * phase.sin()))
    }
}

/// Amplitude of a single tuple; for repeated evaluation at fixed parameters
/// build an [`AmplitudeEvaluator`] instead.
pub fn amplitude(params: &SqueezeRotParams, n: i64, m: i64, s: i64, t: i64) -> Result<C64> {
    let ev = AmplitudeEvaluator::new(params, (n.max(0) + m.max(0)).max(1) as usize)?;
    ev.amplitude(n, m, s, t)
}

/// Same amplitude through the terminating-hypergeometric resummation of the
/// internal transfer sums. Linear-domain evaluation: intended as an internal
/// consistency check at moderate occupations, not as the primary path.
pub fn amplitude_resummed(params: &SqueezeRotParams, n: i64, m: i64, s: i64, t: i64) -> Result<C64> {
    if n < 0 || m < 0 || s < -n || s > m || t < -n || t > m {
        return Err(Error::Domain("index domain violation".into()));
    }
    let f = MixingFactors::from_params(params)?;
    let (r1, r2) = (params.r1(), params.r2());
    let sc = sinc(f.theta);
    let u = f.exp_minus_pz_half();
    let z = f.tau.norm_sqr() * sc * sc; // -w = |tau|^2 sinc^2 theta
    if z == 0.0 {
        // no-transfer limit
        if s != 0 || t != 0 {
            return Ok(C64::new(0.0, 0.0));
        }
        let phase = C64::new(
            0.0,
            -2.0 * (params.theta3 * (n + m + 1) as f64 + params.phi3),
        )
        .exp();
        return Ok(phase * u.powi(2 * (n - m) as i32) * r1.tanh().powi(n as i32)
            * r2.tanh().powi(m as i32)
            / (r1.cosh() * r2.cosh()));
    }
    let fact = |k: i64| -> f64 { (1..=k).map(|x| x as f64).product::<f64>().max(1.0) };
    // terminating 2F1(-M, b; c; x) as a finite sum
    let hyp2f1_term = |mm: i64, b: i64, c: i64, x: f64| -> f64 {
        let mut term = 1.0;
        let mut total = 1.0;
        for j in 0..mm {
            term *= (j as f64 - mm as f64) * (b + j) as f64 / ((c + j) as f64 * (j + 1) as f64) * x;
            total += term;
        }
        total
    };
    let ipp = C64::new(0.0, 1.0) * f.p_plus;
    let per_sigma = |sigma: i64| -> C64 {
        let ms = sigma.max(0);
        let pre = (-z).powi(ms as i32)
            * fact(n + ms)
            / (fact(sigma.abs()) * fact(m - ms))
            * hyp2f1_term(m - ms, 1 + n + ms, 1 - sigma + 2 * ms, z);
        ipp.powi(-sigma as i32) * (fact(m - sigma) / fact(n + sigma)).sqrt() * pre
    };
    let phase = C64::new(
        0.0,
        -2.0 * (params.theta3 * (n + m + 1) as f64 + params.phi3),
    )
    .exp();
    let pref = phase * u.powi(2 * (n - m) as i32) * r1.tanh().powi(n as i32)
        * r2.tanh().powi(m as i32)
        / (r1.cosh() * r2.cosh())
        * (fact(m) / fact(n));
    Ok(pref * per_sigma(s) * per_sigma(t))
}

/// Two-mode squeezed-state coefficient of one sector in the decoupled limit,
/// c_{i}(n) = e^{-2 i n (theta3 +- theta4)} tanh^n(r_i) / cosh(r_i).
pub fn two_mode_coefficient(sector: Sector, params: &SqueezeRotParams, n: u32) -> C64 {
    let (r, sign) = match sector {
        Sector::One => (params.r1(), 1.0),
        Sector::Two => (params.r2(), -1.0),
    };
    let angle = -2.0 * n as f64 * (params.theta3 + sign * params.theta4);
    C64::new(0.0, 1.0).scale(angle).exp() * r.tanh().powi(n as i32) / r.cosh()
}

/// Global phase of the evolved vacuum relative to the two-mode product,
/// e^{-2 i (theta3 + phi3)}.
pub fn global_phase(params: &SqueezeRotParams) -> C64 {
    C64::new(0.0, -2.0 * (params.theta3 + params.phi3)).exp()
}

/// One stored tuple of the truncated state table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockEntry {
    pub n: u32,
    pub m: u32,
    pub s: i32,
    pub t: i32,
    pub amplitude: C64,
}

impl FockEntry {
    /// Occupation labels (mode order 1+k, 1-k, 2+k, 2-k); all non-negative.
    pub fn labels(&self) -> [u32; 4] {
        [
            (self.n as i64 + self.s as i64) as u32,
            (self.n as i64 + self.t as i64) as u32,
            (self.m as i64 - self.s as i64) as u32,
            (self.m as i64 - self.t as i64) as u32,
        ]
    }
}

/// Truncated table of tuple amplitudes with every occupation label bounded by
/// the cutoff.
#[derive(Debug, Clone)]
pub struct FockTable {
    pub cutoff: usize,
    pub params: SqueezeRotParams,
    pub entries: Vec<FockEntry>,
    /// 1 - sum over stored tuples of |c|^2 (converges to 0 from above).
    pub norm_deficit: f64,
    /// Analytic tanh-decay bound on the deficit at this cutoff.
    pub tail_bound: f64,
}

fn s_range(n: i64, m: i64, cutoff: i64) -> Option<(i64, i64)> {
    // labels n+s <= K and m-s <= K with -n <= s <= m
    let lo = (-n).max(m - cutoff);
    let hi = m.min(cutoff - n);
    if lo > hi {
        None
    } else {
        Some((lo, hi))
    }
}

/// Number of tuples with all labels <= cutoff.
pub fn table_entry_count(cutoff: usize) -> usize {
    let k = cutoff as i64;
    let mut count = 0usize;
    for n in 0..=(2 * k) {
        for m in 0..=(2 * k - n) {
            if let Some((lo, hi)) = s_range(n, m, k) {
                let len = (hi - lo + 1) as usize;
                count += len * len;
            }
        }
    }
    count
}

/// Rigorous tail bound on the norm outside the label cutoff: the transfer
/// block is unitary, so sum_{s,t} |c(n,m,s,t)|^2 = |c1(n) c2(m)|^2 and the
/// missing norm is bounded by the two-mode geometric tails over n + m > K.
pub fn tail_bound(params: &SqueezeRotParams, cutoff: usize) -> f64 {
    let x1 = params.r1().tanh().powi(2);
    let x2 = params.r2().tanh().powi(2);
    let w1 = 1.0 - x1;
    let w2 = 1.0 - x2;
    // kept = sum_{n+m <= K} x1^n x2^m (1-x1)(1-x2)
    let mut kept = 0.0;
    let mut pow1 = vec![1.0];
    let mut pow2 = vec![1.0];
    for j in 1..=cutoff {
        pow1.push(pow1[j - 1] * x1);
        pow2.push(pow2[j - 1] * x2);
    }
    for n in 0..=cutoff {
        for m in 0..=(cutoff - n) {
            kept += pow1[n] * pow2[m];
        }
    }
    (1.0 - kept * w1 * w2).max(0.0)
}

/// Smallest cutoff whose tail bound is below `tol`.
pub fn suggested_cutoff(params: &SqueezeRotParams, tol: f64) -> usize {
    for k in 0..100_000 {
        if tail_bound(params, k) < tol {
            return k;
        }
    }
    100_000
}

/// Sum of |c|^2 over all tuples within the label cutoff, computed without
/// materializing the table.
pub fn norm_sum(params: &SqueezeRotParams, cutoff: usize) -> Result<f64> {
    let ev = AmplitudeEvaluator::new(params, 2 * cutoff + 2)?;
    let k = cutoff as i64;
    let pairs: Vec<(i64, i64)> = (0..=(2 * k))
        .flat_map(|n| (0..=(2 * k - n)).map(move |m| (n, m)))
        .collect();
    let total: f64 = pairs
        .par_iter()
        .map(|&(n, m)| {
            let mut acc = 0.0;
            if let Some((lo, hi)) = s_range(n, m, k) {
                let (ln_c, _) = ev.prefactor(n, m);
                if ln_c == f64::NEG_INFINITY {
                    return 0.0;
                }
                let hs: Vec<f64> = (lo..=hi).map(|sg| ev.transfer_factor(n, m, sg).0).collect();
                for a in &hs {
                    for b in &hs {
                        let ln2 = 2.0 * (ln_c + a + b);
                        if ln2 > -745.0 {
                            acc += ln2.exp();
                        }
                    }
                }
            }
            acc
        })
        .sum();
    Ok(total)
}

/// Materialize the truncated state table.
pub fn state_table(params: &SqueezeRotParams, cutoff: usize) -> Result<FockTable> {
    let count = table_entry_count(cutoff);
    if count > MAX_TABLE_ENTRIES {
        // find the largest cutoff under budget for the error message
        let mut k = cutoff;
        while k > 0 && table_entry_count(k) > MAX_TABLE_ENTRIES {
            k -= 1;
        }
        return Err(Error::Resource {
            message: format!(
                "cutoff {cutoff} needs {count} table entries (budget {MAX_TABLE_ENTRIES})"
            ),
            suggested_cutoff: Some(k),
        });
    }
    let ev = AmplitudeEvaluator::new(params, 2 * cutoff + 2)?;
    let k = cutoff as i64;
    let pairs: Vec<(i64, i64)> = (0..=(2 * k))
        .flat_map(|n| (0..=(2 * k - n)).map(move |m| (n, m)))
        .collect();
    let per_pair: Vec<(Vec<FockEntry>, f64)> = pairs
        .par_iter()
        .map(|&(n, m)| {
            let mut entries = Vec::new();
            let mut norm = 0.0;
            if let Some((lo, hi)) = s_range(n, m, k) {
                let (ln_c, ph_c) = ev.prefactor(n, m);
                if ln_c > f64::NEG_INFINITY {
                    let hs: Vec<(f64, f64)> =
                        (lo..=hi).map(|sg| ev.transfer_factor(n, m, sg)).collect();
                    for (si, s) in (lo..=hi).enumerate() {
                        for (ti, t) in (lo..=hi).enumerate() {
                            let ln = ln_c + hs[si].0 + hs[ti].0;
                            if ln == f64::NEG_INFINITY || ln < -745.0 {
                                continue;
                            }
                            let mag = ln.exp();
                            let phase = ph_c + hs[si].1 + hs[ti].1;
                            let c = C64::new(mag * phase.cos(), mag * phase.sin());
                            norm += c.norm_sqr();
                            entries.push(FockEntry {
                                n: n as u32,
                                m: m as u32,
                                s: s as i32,
                                t: t as i32,
                                amplitude: c,
                            });
                        }
                    }
                }
            }
            (entries, norm)
        })
        .collect();
    let mut entries = Vec::new();
    let mut norm = 0.0;
    for (es, nn) in per_pair {
        entries.extend(es);
        norm += nn;
    }
    Ok(FockTable {
        cutoff,
        params: *params,
        entries,
        norm_deficit: 1.0 - norm,
        tail_bound: tail_bound(params, cutoff),
    })
}

impl FockTable {
    /// Physical ket amplitudes: tuple families summed per occupation label.
    pub fn label_amplitudes(&self) -> HashMap<[u32; 4], C64> {
        let mut map: HashMap<[u32; 4], C64> = HashMap::new();
        for e in &self.entries {
            *map.entry(e.labels()).or_insert(C64::new(0.0, 0.0)) += e.amplitude;
        }
        map
    }

    /// s <-> t swap symmetry residual (statistical isotropy).
    pub fn swap_symmetry_residual(&self) -> f64 {
        let mut map: HashMap<(u32, u32, i32, i32), C64> = HashMap::new();
        for e in &self.entries {
            map.insert((e.n, e.m, e.s, e.t), e.amplitude);
        }
        let mut worst: f64 = 0.0;
        for e in &self.entries {
            if let Some(v) = map.get(&(e.n, e.m, e.t, e.s)) {
                worst = worst.max((e.amplitude - v).norm());
            }
        }
        worst
    }

    pub const CSV_HEADER: &'static str = "n,m,s,t,re_c,im_c,abs2";

    pub fn csv_rows(&self) -> impl Iterator<Item = String> + '_ {
        self.entries.iter().map(|e| {
            format!(
                "{},{},{},{},{:.16e},{:.16e},{:.16e}",
                e.n,
                e.m,
                e.s,
                e.t,
                e.amplitude.re,
                e.amplitude.im,
                e.amplitude.norm_sqr()
            )
        })
    }
}

/// Transfer weight of the one-particle exchange families:
/// F(n, m) = i sinc(theta4) e^{i (theta4 + arg tau)} sqrt(n m).
pub fn weight_f(theta4: f64, arg_tau: f64, n: i64, m: i64) -> C64 {
    if n <= 0 || m <= 0 {
        return C64::new(0.0, 0.0);
    }
    C64::new(0.0, 1.0)
        * sinc(theta4)
        * C64::new(0.0, theta4 + arg_tau).exp()
        * ((n * m) as f64).sqrt()
}

/// Diagonal second-order weight:
/// G(n, m) = -2 |F(n+1, m)|^2 / (sinc factors) - i (n-m) (theta4 - e^{i theta4} sin theta4)/theta4^2.
pub fn weight_g(theta4: f64, arg_tau: f64, n: i64, m: i64) -> C64 {
    let _ = arg_tau;
    let sc = sinc(theta4);
    let f2 = sc * sc * ((n + 1) * m) as f64;
    let ratio = if theta4.abs() > 1e-4 {
        (C64::new(theta4, 0.0) - C64::new(0.0, theta4).exp() * theta4.sin()) / (theta4 * theta4)
    } else {
        C64::new(2.0 / 3.0 * theta4, -(1.0 - theta4 * theta4 / 3.0))
    };
    C64::new(-2.0 * f2, 0.0) - C64::new(0.0, (n - m) as f64) * ratio
}

/// The small-coupling expansion of the evolved vacuum, aggregated per ket.
#[derive(Debug, Clone)]
pub struct PerturbativeState {
    pub order: u8,
    pub cutoff: usize,
    pub amplitudes: HashMap<[u32; 4], C64>,
}

/// Materialize the expansion around the uncoupled limit up to the requested
/// order in |tau|. Kets are restricted to labels <= cutoff, with the (n, m)
/// base sums extended far enough that boundary kets are complete.
pub fn perturbative_state(
    params: &SqueezeRotParams,
    order: u8,
    cutoff: usize,
) -> Result<PerturbativeState> {
    if order == 0 || order > 2 {
        return Err(Error::Domain(format!(
            "perturbative order {order} not in {{1, 2}}"
        )));
    }
    let tau = params.tau();
    let t_abs = tau.norm();
    let arg_tau = if t_abs > 0.0 { tau.arg() } else { 0.0 };
    let glob = global_phase(params);
    let mut amps: HashMap<[u32; 4], C64> = HashMap::new();
    let kmax = cutoff as i64 + 2;
    let mut add = |a: i64, b: i64, c: i64, d: i64, v: C64| {
        if a >= 0
            && b >= 0
            && c >= 0
            && d >= 0
            && a.max(b).max(c).max(d) <= cutoff as i64
            && v != C64::new(0.0, 0.0)
        {
            *amps
                .entry([a as u32, b as u32, c as u32, d as u32])
                .or_insert(C64::new(0.0, 0.0)) += v;
        }
    };
    for n in 0..=kmax {
        for m in 0..=kmax {
            let base = glob
                * two_mode_coefficient(Sector::One, params, n as u32)
                * two_mode_coefficient(Sector::Two, params, m as u32);
            add(n, n, m, m, base);
            if order >= 1 && t_abs > 0.0 {
                let f1 = weight_f(params.theta4, arg_tau, n, m + 1);
                add(n - 1, n, m + 1, m, base * t_abs * f1);
                add(n, n - 1, m, m + 1, base * t_abs * f1);
                let f2 = weight_f(params.theta4, arg_tau, n + 1, m).conj();
                add(n + 1, n, m - 1, m, -base * t_abs * f2);
                add(n, n + 1, m, m - 1, -base * t_abs * f2);
            }
            if order >= 2 && t_abs > 0.0 {
                let h = t_abs * t_abs / 2.0;
                let w = weight_f(params.theta4, arg_tau, n, m + 2)
                    * weight_f(params.theta4, arg_tau, n - 1, m + 1);
                add(n - 2, n, m + 2, m, base * h * w);
                add(n, n - 2, m, m + 2, base * h * w);
                let w = weight_f(params.theta4, arg_tau, n + 2, m).conj()
                    * weight_f(params.theta4, arg_tau, n + 1, m - 1).conj();
                add(n + 2, n, m - 2, m, base * h * w);
                add(n, n + 2, m, m - 2, base * h * w);
                let w = weight_f(params.theta4, arg_tau, n, m + 1);
                add(n - 1, n - 1, m + 1, m + 1, base * h * 2.0 * w * w);
                let w = weight_f(params.theta4, arg_tau, n + 1, m).conj();
                add(n + 1, n + 1, m - 1, m - 1, base * h * 2.0 * w * w);
                let w = weight_f(params.theta4, arg_tau, n, m)
                    * weight_f(params.theta4, arg_tau, n + 1, m + 1).conj();
                add(n + 1, n - 1, m - 1, m + 1, -base * h * 2.0 * w);
                add(n - 1, n + 1, m + 1, m - 1, -base * h * 2.0 * w);
                let g = weight_g(params.theta4, arg_tau, n, m);
                add(n, n, m, m, base * h * 2.0 * g);
            }
        }
    }
    Ok(PerturbativeState {
        order,
        cutoff,
        amplitudes: amps,
    })
}
