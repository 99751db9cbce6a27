//! Brute-force validation in a truncated Fock space: ladder operators, gate
//! matrices built by exponentiating the quadratic generators, direct circuit
//! application, direct Schroedinger integration, and explicit partial traces.
//!
//! Mode order is (1,+k), (1,-k), (2,+k), (2,-k). Gates never need the full
//! (N+1)^4-dimensional dense matrix: phase gates are diagonal, and squeeze /
//! transfer / displacement gates act inside one- or two-mode subspaces, so
//! they are stored as dense operators of the acting subspace and applied
//! tensorially. Squeeze blocks conserve the occupation difference of their
//! pair and transfer blocks the sum, which keeps the exponentials block
//! diagonal and cheap.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::dynamics::HamiltonianParams;
use crate::error::{Error, Result};
use crate::symplectic::{MixingFactors, SqueezeRotParams};

/// Truncated four-mode Fock space with per-mode cutoff N.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncatedSpace {
    pub cutoff: usize,
}

/// The four modes in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    OneK,
    OneMinusK,
    TwoK,
    TwoMinusK,
}

impl Mode {
    pub fn axis(self) -> usize {
        match self {
            Mode::OneK => 0,
            Mode::OneMinusK => 1,
            Mode::TwoK => 2,
            Mode::TwoMinusK => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderKind {
    Create,
    Annihilate,
}

impl TruncatedSpace {
    pub fn new(cutoff: usize) -> Self {
        TruncatedSpace { cutoff }
    }

    pub fn modes_dim(&self) -> usize {
        self.cutoff + 1
    }

    pub fn dim(&self) -> usize {
        self.modes_dim().pow(4)
    }

    /// Basis index of an occupation tuple; row-major in mode order.
    pub fn index(&self, occ: [usize; 4]) -> usize {
        let n1 = self.modes_dim();
        ((occ[0] * n1 + occ[1]) * n1 + occ[2]) * n1 + occ[3]
    }

    /// Occupations of a basis index (inverse of `index`).
    pub fn occupation(&self, idx: usize) -> [usize; 4] {
        let n1 = self.modes_dim();
        [
            idx / (n1 * n1 * n1),
            (idx / (n1 * n1)) % n1,
            (idx / n1) % n1,
            idx % n1,
        ]
    }

    pub fn vacuum(&self) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); self.dim()];
        v[0] = C64::new(1.0, 0.0);
        v
    }
}

/// A ladder operator on one mode, applied matrix-free.
#[derive(Debug, Clone, Copy)]
pub struct LadderOp {
    pub mode: Mode,
    pub kind: LadderKind,
}

/// Standard sqrt(n) matrix elements.
pub fn ladder(space: &TruncatedSpace, mode: Mode, kind: LadderKind) -> LadderOp {
    let _ = space;
    LadderOp { mode, kind }
}

impl LadderOp {
    pub fn apply(&self, space: &TruncatedSpace, psi: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); space.dim()];
        let axis = self.mode.axis();
        for (idx, &v) in psi.iter().enumerate() {
            if v == C64::new(0.0, 0.0) {
                continue;
            }
            let mut occ = space.occupation(idx);
            match self.kind {
                LadderKind::Create => {
                    if occ[axis] + 1 <= space.cutoff {
                        let f = ((occ[axis] + 1) as f64).sqrt();
                        occ[axis] += 1;
                        out[space.index(occ)] += v * f;
                    }
                }
                LadderKind::Annihilate => {
                    if occ[axis] >= 1 {
                        let f = (occ[axis] as f64).sqrt();
                        occ[axis] -= 1;
                        out[space.index(occ)] += v * f;
                    }
                }
            }
        }
        out
    }
}

/// Dense matrix exponential by scaling and squaring with a Taylor series.
fn expm_dense(a: &[C64], n: usize) -> Vec<C64> {
    let mut norm: f64 = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += a[i * n + j].norm();
        }
        norm = norm.max(row);
    }
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let mut scaled = vec![C64::new(0.0, 0.0); n * n];
    for (i, v) in scaled.iter_mut().enumerate() {
        *v = a[i] * scale;
    }
    let mut result = vec![C64::new(0.0, 0.0); n * n];
    let mut term = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        result[i * n + i] = C64::new(1.0, 0.0);
        term[i * n + i] = C64::new(1.0, 0.0);
    }
    for k in 1..=24 {
        let mut next = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for l in 0..n {
                let t = term[i * n + l];
                if t == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    next[i * n + j] += t * scaled[l * n + j];
                }
            }
        }
        let inv_k = 1.0 / k as f64;
        let mut all_small = true;
        for i in 0..n * n {
            next[i] *= inv_k;
            result[i] += next[i];
            if next[i].norm() > 1e-19 {
                all_small = false;
            }
        }
        term = next;
        if all_small {
            break;
        }
    }
    for _ in 0..squarings {
        let mut sq = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for l in 0..n {
                let t = result[i * n + l];
                if t == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    sq[i * n + j] += t * result[l * n + j];
                }
            }
        }
        result = sq;
    }
    result
}

/// Exponential of a two-mode generator that conserves a linear charge
/// q(nx, ny); computed block-by-block on the charge sectors.
fn expm_pair_blocked<G, Q>(n1: usize, gen: G, charge: Q) -> Vec<C64>
where
    G: Fn(usize, usize) -> Vec<(usize, usize, C64)> + Sync,
    Q: Fn(usize, usize) -> i64,
{
    let pdim = n1 * n1;
    let mut out = vec![C64::new(0.0, 0.0); pdim * pdim];
    use std::collections::BTreeMap;
    let mut sectors: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for x in 0..n1 {
        for y in 0..n1 {
            sectors.entry(charge(x, y)).or_default().push(x * n1 + y);
        }
    }
    let blocks: Vec<(Vec<usize>, Vec<C64>)> = sectors
        .into_values()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|members| {
            let b = members.len();
            let mut local = vec![C64::new(0.0, 0.0); b * b];
            for (col, &pi) in members.iter().enumerate() {
                let (x, y) = (pi / n1, pi % n1);
                for (tx, ty, v) in gen(x, y) {
                    let ti = tx * n1 + ty;
                    if let Ok(row) = members.binary_search(&ti) {
                        local[row * b + col] += v;
                    }
                }
            }
            let e = expm_dense(&local, b);
            (members, e)
        })
        .collect();
    for (members, e) in blocks {
        let b = members.len();
        for (r, &ri) in members.iter().enumerate() {
            for (c, &ci) in members.iter().enumerate() {
                out[ri * pdim + ci] = e[r * b + c];
            }
        }
    }
    out
}

/// What a gate does; parameters may be complex (the factorized circuit uses
/// complex transfer and counter-phase arguments).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    /// Phase rotation exp[-i theta (n_{i,k} + n_{i,-k} + 1)] on one sector.
    Phase { sector: usize },
    /// Two-mode squeeze exp[r (a+ a+ - a a)] inside one sector.
    Squeeze { sector: usize },
    /// exp[i p (a+_to a_from)] on both wings (+k and -k).
    Transfer { from: usize, to: usize },
    /// The whole SU(2) mixing rotation exp[t4 L4 + t5 L5 + t6 L6] as one
    /// unitary gate (anti-Hermitian generator, so exactly unitary even when
    /// truncated; the factored transfer/counter-phase route is only
    /// norm-preserving on the full space).
    MixRotation { theta4: f64, theta5: f64, theta6: f64 },
    /// Single-mode displacement exp[gamma a+ - conj(gamma) a].
    Displacement { mode: Mode },
}

/// How the gate acts on the state vector.
pub enum GateRepr {
    Diagonal(Vec<C64>),
    /// Dense operator applied on each listed ordered mode pair.
    Pairs {
        axis_pairs: Vec<(usize, usize)>,
        mat: Vec<C64>,
    },
    Single {
        axis: usize,
        mat: Vec<C64>,
    },
}

pub struct GateOperator {
    pub kind: GateKind,
    pub parameter: C64,
    pub repr: GateRepr,
    n1: usize,
}

/// Build a gate operator on the truncated space.
pub fn gate(space: &TruncatedSpace, kind: GateKind, parameter: C64) -> Result<GateOperator> {
    let n1 = space.modes_dim();
    let repr = match kind {
        GateKind::Phase { sector } => {
            if sector != 1 && sector != 2 {
                return Err(Error::Domain(format!("sector {sector} not in {{1,2}}")));
            }
            let mut d = vec![C64::new(0.0, 0.0); space.dim()];
            let (a, b) = if sector == 1 { (0, 1) } else { (2, 3) };
            for (idx, v) in d.iter_mut().enumerate() {
                let occ = space.occupation(idx);
                let arg = -(C64::new(0.0, 1.0)) * parameter * (occ[a] + occ[b] + 1) as f64;
                *v = arg.exp();
            }
            GateRepr::Diagonal(d)
        }
        GateKind::Squeeze { sector } => {
            if sector != 1 && sector != 2 {
                return Err(Error::Domain(format!("sector {sector} not in {{1,2}}")));
            }
            let axes = if sector == 1 { (0, 1) } else { (2, 3) };
            // generator r (a+_x a+_y - a_x a_y): conserves nx - ny
            let r = parameter;
            let genf = move |x: usize, y: usize| {
                let mut v = Vec::with_capacity(2);
                if x + 1 < n1 && y + 1 < n1 {
                    v.push((x + 1, y + 1, r * (((x + 1) * (y + 1)) as f64).sqrt()));
                }
                if x >= 1 && y >= 1 {
                    v.push((x - 1, y - 1, -r * ((x * y) as f64).sqrt()));
                }
                v
            };
            GateRepr::Pairs {
                axis_pairs: vec![axes],
                mat: expm_pair_blocked(n1, genf, |x, y| x as i64 - y as i64),
            }
        }
        GateKind::Transfer { from, to } => {
            if !((from == 1 && to == 2) || (from == 2 && to == 1)) {
                return Err(Error::Domain(format!("transfer {from}->{to} invalid")));
            }
            // pair axes ordered (source, target); same op on both wings
            let axis_pairs = if from == 1 {
                vec![(0usize, 2usize), (1, 3)]
            } else {
                vec![(2usize, 0usize), (3, 1)]
            };
            let c = C64::new(0.0, 1.0) * parameter;
            // generator i p a+_target a_source on (x = source, y = target):
            // conserves x + y
            let genf = move |x: usize, y: usize| {
                let mut v = Vec::with_capacity(1);
                if x >= 1 && y + 1 < n1 {
                    v.push((x - 1, y + 1, c * ((x * (y + 1)) as f64).sqrt()));
                }
                v
            };
            GateRepr::Pairs {
                axis_pairs,
                mat: expm_pair_blocked(n1, genf, |x, y| (x + y) as i64),
            }
        }
        GateKind::MixRotation {
            theta4,
            theta5,
            theta6,
        } => {
            // one wing couples (sector1, sector2) at the same wavevector and
            // conserves their total; the same operator acts on both wings.
            // generator: -i t4 (x - y) diag
            //            + (t5 - i t6) a+_1 a_2  + (-t5 - i t6) a+_2 a_1
            let up = C64::new(theta5, -theta6);
            let down = C64::new(-theta5, -theta6);
            let genf = move |x: usize, y: usize| {
                let mut v = Vec::with_capacity(3);
                v.push((x, y, C64::new(0.0, -theta4 * (x as f64 - y as f64))));
                if x + 1 < n1 && y >= 1 {
                    v.push((x + 1, y - 1, up * ((x + 1) as f64 * y as f64).sqrt()));
                }
                if x >= 1 && y + 1 < n1 {
                    v.push((x - 1, y + 1, down * (x as f64 * (y + 1) as f64).sqrt()));
                }
                v
            };
            GateRepr::Pairs {
                axis_pairs: vec![(0, 2), (1, 3)],
                mat: expm_pair_blocked(n1, genf, |x, y| (x + y) as i64),
            }
        }
        GateKind::Displacement { mode } => {
            let gamma = parameter;
            let mut genm = vec![C64::new(0.0, 0.0); n1 * n1];
            for x in 0..n1 {
                if x + 1 < n1 {
                    genm[(x + 1) * n1 + x] += gamma * ((x + 1) as f64).sqrt();
                }
                if x >= 1 {
                    genm[(x - 1) * n1 + x] -= gamma.conj() * (x as f64).sqrt();
                }
            }
            GateRepr::Single {
                axis: mode.axis(),
                mat: expm_dense(&genm, n1),
            }
        }
    };
    Ok(GateOperator {
        kind,
        parameter,
        repr,
        n1,
    })
}

impl GateOperator {
    /// Apply the gate to a state vector.
    pub fn apply(&self, space: &TruncatedSpace, psi: &[C64]) -> Vec<C64> {
        match &self.repr {
            GateRepr::Diagonal(d) => psi.iter().zip(d).map(|(a, b)| a * b).collect(),
            GateRepr::Single { axis, mat } => {
                let mut out = psi.to_vec();
                apply_single_axis(space, &mut out, *axis, mat, self.n1);
                out
            }
            GateRepr::Pairs { axis_pairs, mat } => {
                let mut out = psi.to_vec();
                for &(ax, ay) in axis_pairs {
                    apply_pair_axes(space, &mut out, ax, ay, mat, self.n1);
                }
                out
            }
        }
    }

    /// max |M+ M - I| over the stored subspace operator (diagonal gates are
    /// checked entrywise). Real-angle phase gates are exactly unitary and
    /// squeeze gates deviate only by truncation leakage. Transfer gates have
    /// nilpotent one-directional generators and are norm-preserving only as
    /// part of the complete rotation block.
    pub fn unitarity_defect(&self) -> f64 {
        match &self.repr {
            GateRepr::Diagonal(d) => d
                .iter()
                .map(|v| (v.norm_sqr() - 1.0).abs())
                .fold(0.0, f64::max),
            GateRepr::Single { mat, .. } | GateRepr::Pairs { mat, .. } => {
                let n = (mat.len() as f64).sqrt().round() as usize;
                let mut worst: f64 = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        let mut acc = C64::new(0.0, 0.0);
                        for l in 0..n {
                            acc += mat[l * n + i].conj() * mat[l * n + j];
                        }
                        if i == j {
                            acc -= 1.0;
                        }
                        worst = worst.max(acc.norm());
                    }
                }
                worst
            }
        }
    }
}

fn apply_single_axis(space: &TruncatedSpace, psi: &mut [C64], axis: usize, mat: &[C64], n1: usize) {
    let dim = space.dim();
    let stride = n1.pow(3 - axis as u32);
    let mut scratch = vec![C64::new(0.0, 0.0); n1];
    for base in 0..dim {
        if space.occupation(base)[axis] != 0 {
            continue;
        }
        for (x, s) in scratch.iter_mut().enumerate() {
            *s = psi[base + x * stride];
        }
        for x in 0..n1 {
            let mut acc = C64::new(0.0, 0.0);
            for (xp, s) in scratch.iter().enumerate() {
                let m = mat[x * n1 + xp];
                if m != C64::new(0.0, 0.0) {
                    acc += m * s;
                }
            }
            psi[base + x * stride] = acc;
        }
    }
}

fn apply_pair_axes(
    space: &TruncatedSpace,
    psi: &mut [C64],
    ax: usize,
    ay: usize,
    mat: &[C64],
    n1: usize,
) {
    let dim = space.dim();
    let sx = n1.pow(3 - ax as u32);
    let sy = n1.pow(3 - ay as u32);
    let pdim = n1 * n1;
    let mut scratch = vec![C64::new(0.0, 0.0); pdim];
    for base in 0..dim {
        let occ = space.occupation(base);
        if occ[ax] != 0 || occ[ay] != 0 {
            continue;
        }
        for x in 0..n1 {
            for y in 0..n1 {
                scratch[x * n1 + y] = psi[base + x * sx + y * sy];
            }
        }
        for x in 0..n1 {
            for y in 0..n1 {
                let row = x * n1 + y;
                let mut acc = C64::new(0.0, 0.0);
                for (col, s) in scratch.iter().enumerate() {
                    let m = mat[row * pdim + col];
                    if m != C64::new(0.0, 0.0) && *s != C64::new(0.0, 0.0) {
                        acc += m * s;
                    }
                }
                psi[base + x * sx + y * sy] = acc;
            }
        }
    }
}

/// Record of one circuit run.
#[derive(Debug, Clone)]
pub struct CircuitReport {
    /// |1 - |psi|^2| of the final state: norm lost above the cutoff.
    pub leakage: f64,
    /// Norm after each gate, in application order.
    pub gate_norms: Vec<(String, f64)>,
}

/// Apply the factorized evolution circuit to the vacuum: the phi rotation
/// block, the two squeezers, then the theta rotation block.
pub fn run_circuit(
    space: &TruncatedSpace,
    params: &SqueezeRotParams,
) -> Result<(Vec<C64>, CircuitReport)> {
    let ft = MixingFactors::from_angles(params.theta4, params.theta5, params.theta6)?;
    let ff = MixingFactors::from_angles(params.phi4, params.phi5, params.phi6)?;
    let i_unit = C64::new(0.0, 1.0);
    let rotation_gates = |x3: f64, f: &MixingFactors, tag: &str| -> Result<Vec<(String, GateOperator)>> {
        Ok(vec![
            (
                format!("{tag}:phase1"),
                gate(space, GateKind::Phase { sector: 1 }, C64::new(x3, 0.0))?,
            ),
            (
                format!("{tag}:phase2"),
                gate(space, GateKind::Phase { sector: 2 }, C64::new(x3, 0.0))?,
            ),
            (
                format!("{tag}:transfer21"),
                gate(space, GateKind::Transfer { from: 2, to: 1 }, -f.p_minus)?,
            ),
            (
                format!("{tag}:counterphase1"),
                gate(space, GateKind::Phase { sector: 1 }, -i_unit * f.p_z / 2.0)?,
            ),
            (
                format!("{tag}:counterphase2"),
                gate(space, GateKind::Phase { sector: 2 }, i_unit * f.p_z / 2.0)?,
            ),
            (
                format!("{tag}:transfer12"),
                gate(space, GateKind::Transfer { from: 1, to: 2 }, f.p_plus)?,
            ),
        ])
    };
    let mut ops = rotation_gates(params.phi3, &ff, "phi")?;
    ops.push((
        "squeeze1".into(),
        gate(
            space,
            GateKind::Squeeze { sector: 1 },
            C64::new(params.r1(), 0.0),
        )?,
    ));
    ops.push((
        "squeeze2".into(),
        gate(
            space,
            GateKind::Squeeze { sector: 2 },
            C64::new(params.r2(), 0.0),
        )?,
    ));
    ops.extend(rotation_gates(params.theta3, &ft, "theta")?);
    let mut psi = space.vacuum();
    let mut gate_norms: Vec<(String, f64)> = Vec::new();
    for (label, g) in ops {
        psi = g.apply(space, &psi);
        let norm = psi.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        gate_norms.push((label, norm));
    }
    let norm2 = psi.iter().map(|v| v.norm_sqr()).sum::<f64>();
    Ok((
        psi,
        CircuitReport {
            leakage: (1.0 - norm2).abs(),
            gate_norms,
        },
    ))
}

/// The same circuit with each rotation block applied as a single unitary
/// mixing gate instead of the Gauss-factorized transfer/counter-phase
/// triplet. Mathematically identical on the full space; numerically stable
/// at large squeezing because every factor is unitary under truncation.
pub fn run_circuit_block(
    space: &TruncatedSpace,
    params: &SqueezeRotParams,
) -> Result<(Vec<C64>, CircuitReport)> {
    let ops: Vec<(String, GateOperator)> = vec![
        (
            "phi:phase1".into(),
            gate(
                space,
                GateKind::Phase { sector: 1 },
                C64::new(params.phi3, 0.0),
            )?,
        ),
        (
            "phi:phase2".into(),
            gate(
                space,
                GateKind::Phase { sector: 2 },
                C64::new(params.phi3, 0.0),
            )?,
        ),
        (
            "phi:mix".into(),
            gate(
                space,
                GateKind::MixRotation {
                    theta4: params.phi4,
                    theta5: params.phi5,
                    theta6: params.phi6,
                },
                C64::new(0.0, 0.0),
            )?,
        ),
        (
            "squeeze1".into(),
            gate(
                space,
                GateKind::Squeeze { sector: 1 },
                C64::new(params.r1(), 0.0),
            )?,
        ),
        (
            "squeeze2".into(),
            gate(
                space,
                GateKind::Squeeze { sector: 2 },
                C64::new(params.r2(), 0.0),
            )?,
        ),
        (
            "theta:phase1".into(),
            gate(
                space,
                GateKind::Phase { sector: 1 },
                C64::new(params.theta3, 0.0),
            )?,
        ),
        (
            "theta:phase2".into(),
            gate(
                space,
                GateKind::Phase { sector: 2 },
                C64::new(params.theta3, 0.0),
            )?,
        ),
        (
            "theta:mix".into(),
            gate(
                space,
                GateKind::MixRotation {
                    theta4: params.theta4,
                    theta5: params.theta5,
                    theta6: params.theta6,
                },
                C64::new(0.0, 0.0),
            )?,
        ),
    ];
    let mut psi = space.vacuum();
    let mut gate_norms: Vec<(String, f64)> = Vec::new();
    for (label, g) in ops {
        psi = g.apply(space, &psi);
        let norm = psi.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        gate_norms.push((label, norm));
    }
    let norm2 = psi.iter().map(|v| v.norm_sqr()).sum::<f64>();
    Ok((
        psi,
        CircuitReport {
            leakage: (1.0 - norm2).abs(),
            gate_norms,
        },
    ))
}

/// Matrix-free application of the quadratic Hamiltonian at one time.
pub fn apply_hamiltonian(space: &TruncatedSpace, h: &HamiltonianParams, psi: &[C64]) -> Vec<C64> {
    let dim = space.dim();
    let mut out = vec![C64::new(0.0, 0.0); dim];
    let kmax = space.cutoff;
    let e_theta1 = C64::new(0.0, h.theta1).exp();
    let e_theta2 = C64::new(0.0, h.theta2).exp();
    let e_phi = C64::new(0.0, h.phi).exp();
    let e_xi = C64::new(0.0, h.xi).exp();
    for (idx, &v) in psi.iter().enumerate() {
        if v == C64::new(0.0, 0.0) {
            continue;
        }
        let occ = space.occupation(idx);
        let [n1k, n1m, n2k, n2m] = occ;
        // harmonic (diagonal)
        let diag = h.f1 * (n1k + n1m + 1) as f64 + h.f2 * (n2k + n2m + 1) as f64;
        out[idx] += v * diag;
        // parametric / entangling: amp a+_a a+_b + conj(amp) a_a a_b
        let pair = |a: usize, b: usize, amp: C64, out: &mut Vec<C64>| {
            if occ[a] + 1 <= kmax && occ[b] + 1 <= kmax {
                let mut occ2 = occ;
                occ2[a] += 1;
                occ2[b] += 1;
                let f = (((occ[a] + 1) * (occ[b] + 1)) as f64).sqrt();
                out[space.index(occ2)] += v * amp * f;
            }
            if occ[a] >= 1 && occ[b] >= 1 {
                let mut occ3 = occ;
                occ3[a] -= 1;
                occ3[b] -= 1;
                let f = ((occ[a] * occ[b]) as f64).sqrt();
                out[space.index(occ3)] += v * amp.conj() * f;
            }
        };
        if h.r1 != 0.0 {
            pair(0, 1, h.r1 * e_theta1, &mut out);
        }
        if h.r2 != 0.0 {
            pair(2, 3, h.r2 * e_theta2, &mut out);
        }
        if h.r12 != 0.0 {
            pair(0, 3, h.r12 * e_xi, &mut out);
            pair(2, 1, h.r12 * e_xi, &mut out);
        }
        // transferring: F12 e^{i phi} (a+_1k a_2k + a+_1-k a_2-k) + h.c.
        if h.f12 != 0.0 {
            let hop = |to: usize, from: usize, amp: C64, out: &mut Vec<C64>| {
                if occ[from] >= 1 && occ[to] + 1 <= kmax {
                    let mut occ2 = occ;
                    occ2[from] -= 1;
                    occ2[to] += 1;
                    let f = ((occ[from] * (occ[to] + 1)) as f64).sqrt();
                    out[space.index(occ2)] += v * amp * f;
                }
            };
            hop(0, 2, h.f12 * e_phi, &mut out);
            hop(1, 3, h.f12 * e_phi, &mut out);
            hop(2, 0, h.f12 * e_phi.conj(), &mut out);
            hop(3, 1, h.f12 * e_phi.conj(), &mut out);
        }
    }
    out
}

/// Direct Schroedinger integration d psi/dt = -i H(t) psi with fixed-step RK4.
pub fn hamiltonian_evolve<F>(
    space: &TruncatedSpace,
    kernel: F,
    t_in: f64,
    t_end: f64,
    steps: usize,
) -> Result<Vec<C64>>
where
    F: Fn(f64) -> Result<HamiltonianParams>,
{
    if steps == 0 || t_end <= t_in {
        return Err(Error::Domain(
            "need t_end > t_in and at least one step".into(),
        ));
    }
    let h = (t_end - t_in) / steps as f64;
    let mut psi = space.vacuum();
    let rhs = |t: f64, v: &[C64]| -> Result<Vec<C64>> {
        let p = kernel(t)?;
        if !p.is_finite() {
            return Err(Error::Integration {
                t,
                reason: "non-finite kernel".into(),
            });
        }
        let mut hv = apply_hamiltonian(space, &p, v);
        for x in hv.iter_mut() {
            *x *= -C64::new(0.0, 1.0);
        }
        Ok(hv)
    };
    let dim = space.dim();
    for step in 0..steps {
        let t = t_in + step as f64 * h;
        let k1 = rhs(t, &psi)?;
        let mut tmp: Vec<C64> = (0..dim).map(|i| psi[i] + k1[i] * (h / 2.0)).collect();
        let k2 = rhs(t + h / 2.0, &tmp)?;
        for i in 0..dim {
            tmp[i] = psi[i] + k2[i] * (h / 2.0);
        }
        let k3 = rhs(t + h / 2.0, &tmp)?;
        for i in 0..dim {
            tmp[i] = psi[i] + k3[i] * h;
        }
        let k4 = rhs(t + h, &tmp)?;
        for i in 0..dim {
            psi[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
        }
        // norm drift beyond truncation scale signals step-size instability
        let norm2: f64 = psi.iter().map(|v| v.norm_sqr()).sum();
        if !(0.0..=2.0).contains(&norm2) {
            return Err(Error::Integration {
                t: t + h,
                reason: format!("norm blew up to {norm2:.3e}"),
            });
        }
    }
    Ok(psi)
}

/// Purity of the field-1 reduced state by explicit contraction over the
/// field-2 indices; the input state is renormalized first.
pub fn partial_trace_purity(space: &TruncatedSpace, psi: &[C64]) -> f64 {
    let n1 = space.modes_dim();
    let norm2: f64 = psi.iter().map(|v| v.norm_sqr()).sum();
    let scale = 1.0 / norm2;
    let sysdim = n1 * n1;
    let rho: Vec<C64> = (0..sysdim * sysdim)
        .into_par_iter()
        .map(|ri| {
            let row = ri / sysdim;
            let col = ri % sysdim;
            let (a, b) = (row / n1, row % n1);
            let (a2, b2) = (col / n1, col % n1);
            let mut acc = C64::new(0.0, 0.0);
            for c in 0..n1 {
                for d in 0..n1 {
                    acc += psi[space.index([a, b, c, d])] * psi[space.index([a2, b2, c, d])].conj();
                }
            }
            acc * scale
        })
        .collect();
    let mut purity = 0.0;
    for row in 0..sysdim {
        for col in 0..sysdim {
            purity += (rho[row * sysdim + col] * rho[col * sysdim + row]).re;
        }
    }
    purity
}

/// Reduced density-matrix entry <row| Tr_2 |psi><psi| |col> from a raw state.
pub fn partial_trace_entry(
    space: &TruncatedSpace,
    psi: &[C64],
    row: [usize; 2],
    col: [usize; 2],
) -> C64 {
    let n1 = space.modes_dim();
    let mut acc = C64::new(0.0, 0.0);
    for c in 0..n1 {
        for d in 0..n1 {
            acc += psi[space.index([row[0], row[1], c, d])]
                * psi[space.index([col[0], col[1], c, d])].conj();
        }
    }
    acc
}

/// Assemble a state vector from aggregated label amplitudes.
pub fn state_from_labels(
    space: &TruncatedSpace,
    labels: &std::collections::HashMap<[u32; 4], C64>,
) -> Vec<C64> {
    let mut psi = vec![C64::new(0.0, 0.0); space.dim()];
    for (l, v) in labels {
        let occ = [l[0] as usize, l[1] as usize, l[2] as usize, l[3] as usize];
        if occ.iter().all(|&x| x <= space.cutoff) {
            psi[space.index(occ)] += v;
        }
    }
    psi
}

/// Extra truncation margin so amplitudes with labels <= cutoff are accurate
/// to `tol` after the squeeze gates: the first missing path above the
/// boundary scales as tanh(r)^(2 margin).
pub fn truncation_margin(r_max: f64, tol: f64) -> usize {
    let x = r_max.abs().tanh();
    if x < 1e-6 {
        return 2;
    }
    let m = (tol.ln() / (2.0 * x.ln())).ceil() as usize;
    m.max(2)
}
