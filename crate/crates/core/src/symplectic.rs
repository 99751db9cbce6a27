//! Sp(4,R) toolkit: generators, commutators, closed-form exponentials,
//! Bloch-Messiah composition and decomposition, and the SU(2) mixing-block
//! factorization used by the evolved-vacuum amplitudes.
//!
//! The ten generators split into squeezings {K1, K2} (diagonal, X^2 = I),
//! rotations {K3..K6} (X^2 = -I) and boosts {K7..K10} (X^2 = I), so every
//! one-parameter exponential has a two-term closed form. K3 generates a U(1)
//! commuting with the SU(2) spanned by {K4, K5, K6}; together they make up
//! the maximal compact subgroup U(2) entering the Bloch-Messiah factors.

use crate::error::{Error, Result};
use crate::linalg::{
    helicity_symplectic_residual, helicity_u, sinc, symplectic_residual, to_helicity, C64, CMat2,
    CMat4, Mat4, I_C, ONE_C, ZERO_C,
};

/// Which matrix representation a generator or composition is requested in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// Real field-variable representation (K generators).
    Fundamental,
    /// Creation/annihilation representation (L = U K U^dag).
    Helicity,
}

/// Generator class: fixes the closed-form exponential.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorClass {
    Squeezing,
    Rotation,
    Boost,
}

pub fn generator_class(index: usize) -> Result<GeneratorClass> {
    match index {
        1 | 2 => Ok(GeneratorClass::Squeezing),
        3..=6 => Ok(GeneratorClass::Rotation),
        7..=10 => Ok(GeneratorClass::Boost),
        _ => Err(Error::GeneratorIndex(index)),
    }
}

const K1: [[i64; 4]; 4] = [[1, 0, 0, 0], [0, -1, 0, 0], [0, 0, -1, 0], [0, 0, 0, 1]];
const K2: [[i64; 4]; 4] = [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, -1, 0], [0, 0, 0, -1]];
const K3: [[i64; 4]; 4] = [[0, 0, 1, 0], [0, 0, 0, 1], [-1, 0, 0, 0], [0, -1, 0, 0]];
const K4: [[i64; 4]; 4] = [[0, 0, 1, 0], [0, 0, 0, -1], [-1, 0, 0, 0], [0, 1, 0, 0]];
const K5: [[i64; 4]; 4] = [[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]];
const K6: [[i64; 4]; 4] = [[0, 0, 0, 1], [0, 0, 1, 0], [0, -1, 0, 0], [-1, 0, 0, 0]];
const K7: [[i64; 4]; 4] = [[0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]];
const K8: [[i64; 4]; 4] = [[0, 0, 1, 0], [0, 0, 0, -1], [1, 0, 0, 0], [0, -1, 0, 0]];
const K9: [[i64; 4]; 4] = [[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, -1, 0]];
const K10: [[i64; 4]; 4] = [[0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0], [1, 0, 0, 0]];

/// Fundamental-representation generator with exact integer entries.
pub fn generator_int(index: usize) -> Result<[[i64; 4]; 4]> {
    match index {
        1 => Ok(K1),
        2 => Ok(K2),
        3 => Ok(K3),
        4 => Ok(K4),
        5 => Ok(K5),
        6 => Ok(K6),
        7 => Ok(K7),
        8 => Ok(K8),
        9 => Ok(K9),
        10 => Ok(K10),
        _ => Err(Error::GeneratorIndex(index)),
    }
}

/// Helicity generators as (phase, partner-index) in L_i = phase * K_partner.
/// L1=K8, L2=K7, L3=-iK2, L4=-iK1, L5=K5, L6=-iK9, L7=iK3, L8=iK4, L9=K10, L10=iK6.
const L_CORRESPONDENCE: [(C64, usize); 10] = [
    (ONE_C, 8),
    (ONE_C, 7),
    (C64::new(0.0, -1.0), 2),
    (C64::new(0.0, -1.0), 1),
    (ONE_C, 5),
    (C64::new(0.0, -1.0), 9),
    (I_C, 3),
    (I_C, 4),
    (ONE_C, 10),
    (I_C, 6),
];

/// Generator in the requested basis.
pub fn generator(index: usize, basis: Basis) -> Result<CMat4> {
    let k = generator_int(index)?;
    match basis {
        Basis::Fundamental => Ok(Mat4::from_int(&k).to_complex()),
        Basis::Helicity => {
            let (phase, partner) = L_CORRESPONDENCE[index - 1];
            let kp = generator_int(partner)?;
            Ok(Mat4::from_int(&kp).to_complex().scale(phase))
        }
    }
}

/// Exact integer commutator [K_i, K_j] = K_i K_j - K_j K_i.
pub fn commutator(i: usize, j: usize) -> Result<[[i64; 4]; 4]> {
    let a = generator_int(i)?;
    let b = generator_int(j)?;
    let mut c = [[0i64; 4]; 4];
    for r in 0..4 {
        for s in 0..4 {
            let mut ab = 0;
            let mut ba = 0;
            for k in 0..4 {
                ab += a[r][k] * b[k][s];
                ba += b[r][k] * a[k][s];
            }
            c[r][s] = ab - ba;
        }
    }
    Ok(c)
}

/// Closed algebra table: [K_i, K_j] = coeff * K_target for i < j (None = zero).
pub fn expected_commutator(i: usize, j: usize) -> Result<Option<(i64, usize)>> {
    if !(1..=10).contains(&i) || !(1..=10).contains(&j) {
        return Err(Error::GeneratorIndex(i.max(j)));
    }
    if i == j {
        return Ok(None);
    }
    if i > j {
        return Ok(expected_commutator(j, i)?.map(|(c, t)| (-c, t)));
    }
    Ok(match (i, j) {
        (1, 3) => Some((2, 8)),
        (1, 4) => Some((2, 7)),
        (1, 5) => Some((2, 9)),
        (1, 7) => Some((2, 4)),
        (1, 8) => Some((2, 3)),
        (1, 9) => Some((2, 5)),
        (2, 3) => Some((2, 7)),
        (2, 4) => Some((2, 8)),
        (2, 6) => Some((2, 10)),
        (2, 7) => Some((2, 3)),
        (2, 8) => Some((2, 4)),
        (2, 10) => Some((2, 6)),
        (3, 7) => Some((2, 2)),
        (3, 8) => Some((2, 1)),
        (3, 9) => Some((-2, 10)),
        (3, 10) => Some((2, 9)),
        (4, 5) => Some((2, 6)),
        (4, 6) => Some((-2, 5)),
        (4, 7) => Some((2, 1)),
        (4, 8) => Some((2, 2)),
        (5, 6) => Some((2, 4)),
        (5, 8) => Some((-2, 10)),
        (5, 9) => Some((2, 1)),
        (5, 10) => Some((2, 8)),
        (6, 7) => Some((2, 9)),
        (6, 9) => Some((-2, 7)),
        (6, 10) => Some((2, 2)),
        (7, 9) => Some((-2, 6)),
        (8, 10) => Some((2, 5)),
        (9, 10) => Some((2, 3)),
        _ => None,
    })
}

/// Closed-form one-parameter exponential in the fundamental representation.
///
/// Rotations give cos/sin, squeezings and boosts give cosh/sinh, because the
/// generators square to -I and +I respectively.
pub fn exp_generator(index: usize, angle: f64) -> Result<Mat4> {
    if !angle.is_finite() {
        return Err(Error::Domain(format!("non-finite angle {angle}")));
    }
    let k = Mat4::from_int(&generator_int(index)?);
    let m = match generator_class(index)? {
        GeneratorClass::Rotation => Mat4::identity()
            .scale(angle.cos())
            .add(&k.scale(angle.sin())),
        GeneratorClass::Squeezing | GeneratorClass::Boost => Mat4::identity()
            .scale(angle.cosh())
            .add(&k.scale(angle.sinh())),
    };
    Ok(m)
}

/// Same closed form in the helicity representation (the L generators square
/// to the same signs classwise).
pub fn exp_generator_helicity(index: usize, angle: f64) -> Result<CMat4> {
    if !angle.is_finite() {
        return Err(Error::Domain(format!("non-finite angle {angle}")));
    }
    let l = generator(index, Basis::Helicity)?;
    let m = match generator_class(index)? {
        GeneratorClass::Rotation => CMat4::identity()
            .scale(C64::new(angle.cos(), 0.0))
            .add(&l.scale(C64::new(angle.sin(), 0.0))),
        GeneratorClass::Squeezing | GeneratorClass::Boost => CMat4::identity()
            .scale(C64::new(angle.cosh(), 0.0))
            .add(&l.scale(C64::new(angle.sinh(), 0.0))),
    };
    Ok(m)
}

/// The ten Bloch-Messiah parameters: two rotation blocks and the squeezing
/// block of M = R(theta) Z(d) R(phi).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezeRotParams {
    pub theta3: f64,
    pub theta4: f64,
    pub theta5: f64,
    pub theta6: f64,
    pub d1: f64,
    pub d2: f64,
    pub phi3: f64,
    pub phi4: f64,
    pub phi5: f64,
    pub phi6: f64,
}

impl SqueezeRotParams {
    pub const ZERO: SqueezeRotParams = SqueezeRotParams {
        theta3: 0.0,
        theta4: 0.0,
        theta5: 0.0,
        theta6: 0.0,
        d1: 0.0,
        d2: 0.0,
        phi3: 0.0,
        phi4: 0.0,
        phi5: 0.0,
        phi6: 0.0,
    };

    /// Sector-1 squeezing amplitude r1 = d1 + d2.
    pub fn r1(&self) -> f64 {
        self.d1 + self.d2
    }

    /// Sector-2 squeezing amplitude r2 = d2 - d1.
    pub fn r2(&self) -> f64 {
        self.d2 - self.d1
    }

    pub fn set_r(&mut self, r1: f64, r2: f64) {
        self.d1 = (r1 - r2) / 2.0;
        self.d2 = (r1 + r2) / 2.0;
    }

    /// tau = -theta6 + i theta5; |tau| measures the field-field mixing.
    pub fn tau(&self) -> C64 {
        C64::new(-self.theta6, self.theta5)
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|x| x.is_finite())
    }

    pub fn as_array(&self) -> [f64; 10] {
        [
            self.theta3,
            self.theta4,
            self.theta5,
            self.theta6,
            self.d1,
            self.d2,
            self.phi3,
            self.phi4,
            self.phi5,
            self.phi6,
        ]
    }

    pub fn from_array(a: [f64; 10]) -> Self {
        SqueezeRotParams {
            theta3: a[0],
            theta4: a[1],
            theta5: a[2],
            theta6: a[3],
            d1: a[4],
            d2: a[5],
            phi3: a[6],
            phi4: a[7],
            phi5: a[8],
            phi6: a[9],
        }
    }
}

/// Gauss-factorized SU(2) block of the theta rotation.
///
/// exp(theta4 K4 + theta5 K5 + theta6 K6) = exp(p+ S+) exp(pz Sz) exp(p- S-)
/// with Sz = K4/(2i), S+- = (K5 -+ i K6)/(2i). The complex parameter
/// tau_tilde = cos(theta) + i theta4 sinc(theta) satisfies
/// exp(-pz/2) = conj(tau_tilde) and |tau_tilde|^2 + sinc^2(theta)|tau|^2 = 1.
#[derive(Debug, Clone, Copy)]
pub struct MixingFactors {
    pub tau: C64,
    pub theta: f64,
    pub p_z: C64,
    pub p_minus: C64,
    pub p_plus: C64,
    pub tau_tilde: C64,
}

impl MixingFactors {
    /// Factorize the SU(2) rotation with angles (theta4, theta5, theta6).
    pub fn from_angles(theta4: f64, theta5: f64, theta6: f64) -> Result<MixingFactors> {
        if ![theta4, theta5, theta6].iter().all(|x| x.is_finite()) {
            return Err(Error::Domain("non-finite mixing angles".into()));
        }
        let theta = (theta4 * theta4 + theta5 * theta5 + theta6 * theta6).sqrt();
        let tau = C64::new(-theta6, theta5);
        let sc = sinc(theta);
        // u = cos(theta) - i (theta4/theta) sin(theta); Gauss decomposition
        // breaks down when u = 0.
        let u = C64::new(theta.cos(), -theta4 * sc);
        if u.norm() < 1e-12 {
            return Err(Error::SingularFactorization { modulus: u.norm() });
        }
        let p_z = -2.0 * u.ln();
        let p_minus = -tau.conj() * sc / u;
        let p_plus = tau * sc / u;
        let tau_tilde = u.conj();
        Ok(MixingFactors {
            tau,
            theta,
            p_z,
            p_minus,
            p_plus,
            tau_tilde,
        })
    }

    pub fn from_params(p: &SqueezeRotParams) -> Result<MixingFactors> {
        Self::from_angles(p.theta4, p.theta5, p.theta6)
    }

    /// exp(-pz/2): the (1,1) entry of the factorized 2x2 block. Equals
    /// conj(tau_tilde); kept separate so branch conventions stay explicit.
    pub fn exp_minus_pz_half(&self) -> C64 {
        self.tau_tilde.conj()
    }

    /// Defect of the factorization identity in the fundamental representation,
    /// max |exp(p+ S+) exp(pz Sz) exp(p- S-) - exp(t4 K4 + t5 K5 + t6 K6)|.
    pub fn residual_fundamental(&self, theta4: f64, theta5: f64, theta6: f64) -> f64 {
        let lhs = factored_su2_rotation(self);
        let rhs = su2_rotation(theta4, theta5, theta6).to_complex();
        lhs.max_abs_diff(&rhs)
    }
}

/// exp(theta4 K4 + theta5 K5 + theta6 K6) in closed form: the three rotation
/// generators anticommute pairwise, so X^2 = -theta^2 I.
pub fn su2_rotation(theta4: f64, theta5: f64, theta6: f64) -> Mat4 {
    let theta = (theta4 * theta4 + theta5 * theta5 + theta6 * theta6).sqrt();
    let sc = sinc(theta);
    let mut x = Mat4::zeros();
    for (c, k) in [(theta4, K4), (theta5, K5), (theta6, K6)] {
        for i in 0..4 {
            for j in 0..4 {
                x.0[i][j] += c * k[i][j] as f64;
            }
        }
    }
    Mat4::identity().scale(theta.cos()).add(&x.scale(sc))
}

/// The factored SU(2) product exp(p+ S+) exp(pz Sz) exp(p- S-) in the
/// fundamental representation. S+- are nilpotent and Sz has eigenvalues
/// +-1/2, so each factor is a short closed form.
pub fn factored_su2_rotation(f: &MixingFactors) -> CMat4 {
    let k4 = Mat4::from_int(&K4).to_complex();
    let k5 = Mat4::from_int(&K5).to_complex();
    let k6 = Mat4::from_int(&K6).to_complex();
    let half_i = C64::new(0.0, -0.5); // 1/(2i)
    let s_z = k4.scale(half_i);
    let s_p = k5.sub(&k6.scale(I_C)).scale(half_i);
    let s_m = k5.add(&k6.scale(I_C)).scale(half_i);
    let e_p = CMat4::identity().add(&s_p.scale(f.p_plus));
    let e_m = CMat4::identity().add(&s_m.scale(f.p_minus));
    // exp(pz Sz) = cosh(pz/2) I + 2 sinh(pz/2) Sz
    let e_z = CMat4::identity()
        .scale((f.p_z / 2.0).cosh())
        .add(&s_z.scale(2.0 * (f.p_z / 2.0).sinh()));
    e_p.mul(&e_z).mul(&e_m)
}

/// Full four-angle rotation block R(theta) = exp(theta3 K3) exp(su2 part).
pub fn rotation_fundamental(t3: f64, t4: f64, t5: f64, t6: f64) -> Mat4 {
    let k3 = Mat4::from_int(&K3);
    let u1 = Mat4::identity().scale(t3.cos()).add(&k3.scale(t3.sin()));
    u1.mul(&su2_rotation(t4, t5, t6))
}

/// Upper-left helicity block of the rotation: a U(2) matrix
/// e^{-i t3} [cos(theta) I - i sinc(theta) (t4 sz + t6 sx - t5 sy)].
pub fn rotation_block(t3: f64, t4: f64, t5: f64, t6: f64) -> CMat2 {
    let theta = (t4 * t4 + t5 * t5 + t6 * t6).sqrt();
    let sc = sinc(theta);
    let n = CMat2([
        [C64::new(t4, 0.0), C64::new(t6, t5)],
        [C64::new(t6, -t5), C64::new(-t4, 0.0)],
    ]);
    let phase = C64::new(0.0, -t3).exp();
    CMat2::identity()
        .scale(C64::new(theta.cos(), 0.0))
        .add(&n.scale(-I_C * sc))
        .scale(phase)
}

/// Bloch-Messiah composition M = R(theta) Z(d) R(phi).
pub fn compose_bloch_messiah(p: &SqueezeRotParams, basis: Basis) -> Result<CMat4> {
    if !p.is_finite() {
        return Err(Error::Domain("non-finite Bloch-Messiah parameters".into()));
    }
    match basis {
        Basis::Fundamental => {
            let rt = rotation_fundamental(p.theta3, p.theta4, p.theta5, p.theta6);
            let rf = rotation_fundamental(p.phi3, p.phi4, p.phi5, p.phi6);
            let z = Mat4([
                [(p.d1 + p.d2).exp(), 0.0, 0.0, 0.0],
                [0.0, (-p.d1 + p.d2).exp(), 0.0, 0.0],
                [0.0, 0.0, (-p.d1 - p.d2).exp(), 0.0],
                [0.0, 0.0, 0.0, (p.d1 - p.d2).exp()],
            ]);
            Ok(rt.mul(&z).mul(&rf).to_complex())
        }
        Basis::Helicity => Ok(compose_bloch_messiah_helicity(p)),
    }
}

/// Helicity-basis composition assembled from 2x2 blocks:
/// M = [[Rt C Rf, Rt S conj(Rf)], [conj, conj]] with C = diag(cosh r_i),
/// S = diag(sinh r_i).
pub fn compose_bloch_messiah_helicity(p: &SqueezeRotParams) -> CMat4 {
    let rt = rotation_block(p.theta3, p.theta4, p.theta5, p.theta6);
    let rf = rotation_block(p.phi3, p.phi4, p.phi5, p.phi6);
    let (r1, r2) = (p.r1(), p.r2());
    let c = CMat2::diag(C64::new(r1.cosh(), 0.0), C64::new(r2.cosh(), 0.0));
    let s = CMat2::diag(C64::new(r1.sinh(), 0.0), C64::new(r2.sinh(), 0.0));
    let a = rt.mul(&c).mul(&rf);
    let b = rt.mul(&s).mul(&rf.conj());
    CMat4::from_blocks(&a, &b, &b.conj(), &a.conj())
}

/// log of an SU(2) matrix: Q = cos(th) I - i sinc(th) (t4 sz + t6 sx - t5 sy)
/// inverted for (t4, t5, t6) with th in [0, pi].
fn su2_log(q: &CMat2) -> (f64, f64, f64) {
    let c = (q.0[0][0] + q.0[1][1]).re / 2.0;
    let vz = -(q.0[0][0] - q.0[1][1]).im / 2.0;
    let vx = -(q.0[0][1] + q.0[1][0]).im / 2.0;
    let vy = -(q.0[0][1] - q.0[1][0]).re / 2.0;
    let s = (vx * vx + vy * vy + vz * vz).sqrt();
    let th = s.atan2(c);
    if s < 1e-14 {
        if c < 0.0 {
            // Q = -I: axis undefined; pick the phase-shift axis.
            return (std::f64::consts::PI, 0.0, 0.0);
        }
        return (0.0, 0.0, 0.0);
    }
    let f = th / s;
    (vz * f, -vy * f, vx * f)
}

/// Both log branches of an SU(2) matrix: the principal vector (angle in
/// [0, pi]) and its reflection through angle - 2 pi (same group element).
/// Used by trajectory extraction to anchor parameter series by continuity.
pub fn su2_log_branches(q: &CMat2) -> Vec<(f64, f64, f64)> {
    let principal = su2_log(q);
    let theta = (principal.0 * principal.0 + principal.1 * principal.1
        + principal.2 * principal.2)
        .sqrt();
    if theta < 1e-12 {
        return vec![principal];
    }
    let f = (theta - 2.0 * std::f64::consts::PI) / theta;
    vec![
        principal,
        (principal.0 * f, principal.1 * f, principal.2 * f),
    ]
}

/// Split a U(2) matrix into the U(1) phase t3 and SU(2) angles.
fn u2_split(v: &CMat2) -> (f64, f64, f64, f64) {
    let det = v.det();
    let t3 = -det.arg() / 2.0;
    let q = v.scale(C64::new(0.0, t3).exp());
    let (t4, t5, t6) = su2_log(&q);
    (t3, t4, t5, t6)
}

/// Tolerance below which the two singular values of the A block are treated
/// as degenerate and the canonical gauge W2 = I is used.
const DEGENERACY_TOL: f64 = 1e-12;

/// Bloch-Messiah decomposition of a helicity-symplectic matrix.
///
/// Works on the 2x2 blocks: an SVD of A = W1 diag(cosh r1, cosh r2) W2^dag
/// (singular values of A are always >= 1 because A A^dag = I + B B^dag),
/// phases fixed against B, then each U(2) factor is split into its U(1) x
/// SU(2) angles. Returns r1 >= r2 >= 0.
pub fn decompose_bloch_messiah_helicity(m: &CMat4) -> Result<SqueezeRotParams> {
    let res = helicity_symplectic_residual(m);
    if res > 1e-8 {
        return Err(Error::NotSymplectic {
            residual: res,
            tol: 1e-8,
        });
    }
    let a = m.block(0, 0);
    let b = m.block(0, 1);
    // Hermitian 2x2 eigenproblem for A^dag A.
    let h = a.adjoint().mul(&a);
    let tr = (h.0[0][0] + h.0[1][1]).re;
    let de = h.det().re;
    let disc = (tr * tr / 4.0 - de).max(0.0);
    let l1 = tr / 2.0 + disc.sqrt();
    let l2 = tr / 2.0 - disc.sqrt();
    let s1 = l1.max(1.0).sqrt();
    let s2 = l2.max(1.0).sqrt();
    let w2 = if l1 - l2 < DEGENERACY_TOL * l1.max(1.0) {
        CMat2::identity()
    } else {
        // eigenvector of h for l1; pick the numerically stable expression
        let h11 = h.0[0][0].re;
        let h22 = h.0[1][1].re;
        let h12 = h.0[0][1];
        let v1 = if h12.norm() > 1e-300 {
            if (l1 - h11).abs() >= (l1 - h22).abs() {
                [h12, C64::new(l1 - h11, 0.0)]
            } else {
                [C64::new(l1 - h22, 0.0), h12.conj()]
            }
        } else if h11 >= h22 {
            [ONE_C, ZERO_C]
        } else {
            [ZERO_C, ONE_C]
        };
        let n = (v1[0].norm_sqr() + v1[1].norm_sqr()).sqrt();
        let v1 = [v1[0] / n, v1[1] / n];
        let v2 = [-v1[1].conj(), v1[0].conj()];
        CMat2([[v1[0], v2[0]], [v1[1], v2[1]]])
    };
    let sinv = CMat2::diag(C64::new(1.0 / s1, 0.0), C64::new(1.0 / s2, 0.0));
    let w1 = a.mul(&w2).mul(&sinv);
    // Y = W1^dag B conj(W2) = diag(sinh r_i e^{2i chi_i}) fixes the relative
    // phases between the two rotations (gauge chi_i = 0 where sinh r_i = 0).
    let y = w1.adjoint().mul(&b).mul(&w2.conj());
    let r1 = s1.acosh();
    let r2 = s2.acosh();
    let chi1 = if r1.sinh() > 1e-12 {
        y.0[0][0].arg() / 2.0
    } else {
        0.0
    };
    let chi2 = if r2.sinh() > 1e-12 {
        y.0[1][1].arg() / 2.0
    } else {
        0.0
    };
    let p = CMat2::diag(C64::new(0.0, chi1).exp(), C64::new(0.0, chi2).exp());
    let rt = w1.mul(&p);
    let rf = p.adjoint().mul(&w2.adjoint());
    let (t3, t4, t5, t6) = u2_split(&rt);
    let (f3, f4, f5, f6) = u2_split(&rf);
    let mut out = SqueezeRotParams {
        theta3: t3,
        theta4: t4,
        theta5: t5,
        theta6: t6,
        d1: 0.0,
        d2: 0.0,
        phi3: f3,
        phi4: f4,
        phi5: f5,
        phi6: f6,
    };
    out.set_r(r1, r2);
    Ok(out)
}

/// Decompose a fundamental-representation symplectic matrix.
pub fn decompose_bloch_messiah(m: &Mat4) -> Result<SqueezeRotParams> {
    let res = symplectic_residual(m);
    if res > 1e-8 {
        return Err(Error::NotSymplectic {
            residual: res,
            tol: 1e-8,
        });
    }
    decompose_bloch_messiah_helicity(&to_helicity(m))
}

/// Ten-factor product of the fully factorized group element, used to validate
/// the SU(2) factorization against the closed-form composition.
pub fn compose_factored(p: &SqueezeRotParams) -> Result<CMat4> {
    let ft = MixingFactors::from_angles(p.theta4, p.theta5, p.theta6)?;
    let ff = MixingFactors::from_angles(p.phi4, p.phi5, p.phi6)?;
    let k3 = Mat4::from_int(&K3).to_complex();
    let rot_u1 = |t: f64| {
        CMat4::identity()
            .scale(C64::new(t.cos(), 0.0))
            .add(&k3.scale(C64::new(t.sin(), 0.0)))
    };
    let z = exp_generator(1, p.d1)?
        .mul(&exp_generator(2, p.d2)?)
        .to_complex();
    let rt = factored_su2_rotation(&ft).mul(&rot_u1(p.theta3));
    let rf = factored_su2_rotation(&ff).mul(&rot_u1(p.phi3));
    Ok(rt.mul(&z).mul(&rf))
}

/// U-conjugated composition; exposed so callers can check the helicity block
/// assembly against the fundamental route.
pub fn compose_via_conjugation(p: &SqueezeRotParams) -> Result<CMat4> {
    let m = compose_bloch_messiah(p, Basis::Fundamental)?;
    let u = helicity_u();
    Ok(u.mul(&m).mul(&u.adjoint()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::omega;
    use proptest::prelude::*;

    fn series_expm(x: &CMat4) -> CMat4 {
        // scaling and squaring with a plain Taylor series; test oracle only
        let mut scaled = *x;
        let norm = x.max_abs();
        let mut squarings = 0;
        let mut s = 1.0;
        while norm * s > 0.25 {
            s /= 2.0;
            squarings += 1;
        }
        scaled = scaled.scale(C64::new(s, 0.0));
        let mut term = CMat4::identity();
        let mut sum = CMat4::identity();
        for k in 1..30 {
            term = term.mul(&scaled).scale(C64::new(1.0 / k as f64, 0.0));
            sum = sum.add(&term);
        }
        for _ in 0..squarings {
            sum = sum.mul(&sum);
        }
        sum
    }

    #[test]
    fn generator_one_is_diag() {
        let g = generator(1, Basis::Fundamental).unwrap();
        let expect = Mat4([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, -1.0, 0.0, 0.0],
            [0.0, 0.0, -1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ])
        .to_complex();
        assert_eq!(g.max_abs_diff(&expect), 0.0);
    }

    #[test]
    fn squeezing_generators_are_involutive() {
        for i in [1usize, 2] {
            let k = generator_int(i).unwrap();
            let m = Mat4::from_int(&k);
            assert_eq!(m.mul(&m).max_abs_diff(&Mat4::identity()), 0.0);
        }
    }

    #[test]
    fn l5_equals_k5() {
        let lf = generator(5, Basis::Fundamental).unwrap();
        let lh = generator(5, Basis::Helicity).unwrap();
        assert_eq!(lf.max_abs_diff(&lh), 0.0);
    }

    #[test]
    fn generator_index_out_of_range() {
        assert!(matches!(
            generator(0, Basis::Fundamental),
            Err(Error::GeneratorIndex(0))
        ));
        assert!(matches!(
            generator(11, Basis::Helicity),
            Err(Error::GeneratorIndex(11))
        ));
    }

    #[test]
    fn all_generators_satisfy_algebra_condition() {
        let om = omega();
        for i in 1..=10 {
            let k = Mat4::from_int(&generator_int(i).unwrap());
            let r = om.mul(&k).add(&k.transpose().mul(&om)).max_abs();
            assert_eq!(r, 0.0, "generator {i}");
        }
    }

    #[test]
    fn helicity_generators_match_conjugation() {
        let u = helicity_u();
        for i in 1..=10 {
            let k = Mat4::from_int(&generator_int(i).unwrap()).to_complex();
            let expect = u.mul(&k).mul(&u.adjoint());
            let l = generator(i, Basis::Helicity).unwrap();
            assert!(l.max_abs_diff(&expect) < 1e-15, "L{i}");
        }
    }

    #[test]
    fn commutator_table_exact() {
        for i in 1..=10 {
            for j in 1..=10 {
                let c = commutator(i, j).unwrap();
                let expect = expected_commutator(i, j).unwrap();
                let rhs = match expect {
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
                assert_eq!(c, rhs, "[K{i}, K{j}]");
            }
        }
    }

    #[test]
    fn commutator_examples() {
        // [K6, K4] = 2 K5
        let c = commutator(6, 4).unwrap();
        let k5 = generator_int(5).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(c[i][j], 2 * k5[i][j]);
            }
        }
        assert_eq!(commutator(1, 2).unwrap(), [[0i64; 4]; 4]);
        assert_eq!(commutator(7, 7).unwrap(), [[0i64; 4]; 4]);
    }

    #[test]
    fn su2_subalgebra_structure_constants() {
        // {K4, K5, K6} closes: [K5,K6]=2K4, [K6,K4]=2K5, [K4,K5]=2K6
        for (i, j, t) in [(5, 6, 4), (6, 4, 5), (4, 5, 6)] {
            let c = commutator(i, j).unwrap();
            let k = generator_int(t).unwrap();
            for a in 0..4 {
                for b in 0..4 {
                    assert_eq!(c[a][b], 2 * k[a][b]);
                }
            }
        }
    }

    #[test]
    fn exp_generator_squeezing_diagonal() {
        let d1 = 0.37;
        let m = exp_generator(1, d1).unwrap();
        let expect = Mat4([
            [d1.exp(), 0.0, 0.0, 0.0],
            [0.0, (-d1).exp(), 0.0, 0.0],
            [0.0, 0.0, (-d1).exp(), 0.0],
            [0.0, 0.0, 0.0, d1.exp()],
        ]);
        assert!(m.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn exp_generator_quarter_rotation_is_k3() {
        let m = exp_generator(3, std::f64::consts::FRAC_PI_2).unwrap();
        let k3 = Mat4::from_int(&generator_int(3).unwrap());
        assert!(m.max_abs_diff(&k3) < 1e-15);
    }

    #[test]
    fn exp_generator_boost_closed_form() {
        let a = 0.3;
        let m = exp_generator(7, a).unwrap();
        let k7 = Mat4::from_int(&generator_int(7).unwrap());
        let expect = Mat4::identity().scale(a.cosh()).add(&k7.scale(a.sinh()));
        assert!(m.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn exp_generator_matches_series_oracle() {
        for i in 1..=10 {
            for &angle in &[-2.0, -0.7, 0.0, 0.4, 1.3, 2.0] {
                let closed = exp_generator(i, angle).unwrap().to_complex();
                let x = Mat4::from_int(&generator_int(i).unwrap())
                    .scale(angle)
                    .to_complex();
                let series = series_expm(&x);
                assert!(
                    closed.max_abs_diff(&series) < 1e-10,
                    "generator {i} angle {angle}"
                );
                assert!(
                    symplectic_residual(&closed.real_part()) < 1e-12,
                    "generator {i} angle {angle} symplectic"
                );
            }
        }
    }

    #[test]
    fn mixing_factors_pure_phase_shift() {
        let f = MixingFactors::from_angles(0.5, 0.0, 0.0).unwrap();
        assert!(f.p_minus.norm() < 1e-15);
        assert!(f.p_plus.norm() < 1e-15);
        assert!((f.p_z - C64::new(0.0, 1.0)).norm() < 1e-14); // 2i*0.5
    }

    #[test]
    fn mixing_factors_identity() {
        let f = MixingFactors::from_angles(0.0, 0.0, 0.0).unwrap();
        assert!(f.p_z.norm() < 1e-15);
        assert!(f.p_minus.norm() < 1e-15);
        assert!(f.p_plus.norm() < 1e-15);
        assert!((f.tau_tilde - ONE_C).norm() < 1e-15);
    }

    #[test]
    fn mixing_factors_unit_modulus_identity() {
        for &(t4, t5, t6) in &[(0.4, 0.2, -0.1), (0.0, 0.9, 0.3), (-1.1, 0.05, 0.7)] {
            let f = MixingFactors::from_angles(t4, t5, t6).unwrap();
            let s = sinc(f.theta);
            let ident = f.tau_tilde.norm_sqr() + s * s * f.tau.norm_sqr();
            assert!((ident - 1.0).abs() < 1e-12);
            assert!((f.exp_minus_pz_half() - f.tau_tilde.conj()).norm() < 1e-15);
            assert!(f.theta >= t4.abs());
        }
    }

    #[test]
    fn mixing_factors_factorization_residual() {
        for &(t4, t5, t6) in &[(0.4, 0.2, -0.1), (0.0, 0.3, 0.0), (1.2, -0.8, 0.5)] {
            let f = MixingFactors::from_angles(t4, t5, t6).unwrap();
            assert!(f.residual_fundamental(t4, t5, t6) < 1e-12);
        }
    }

    #[test]
    fn mixing_factors_singular_configuration() {
        // theta4 = 0, |tau| = pi/2 puts cos(theta) = 0 and theta4 sinc = 0.
        let err = MixingFactors::from_angles(0.0, std::f64::consts::FRAC_PI_2, 0.0);
        assert!(matches!(err, Err(Error::SingularFactorization { .. })));
    }

    #[test]
    fn compose_identity() {
        let m = compose_bloch_messiah(&SqueezeRotParams::ZERO, Basis::Fundamental).unwrap();
        assert!(m.max_abs_diff(&CMat4::identity()) < 1e-15);
        let mh = compose_bloch_messiah(&SqueezeRotParams::ZERO, Basis::Helicity).unwrap();
        assert!(mh.max_abs_diff(&CMat4::identity()) < 1e-15);
    }

    #[test]
    fn compose_no_mixing_has_block_diagonal_helicity_blocks() {
        let mut p = SqueezeRotParams::ZERO;
        p.theta3 = 0.2;
        p.theta4 = 0.5;
        p.phi3 = -0.1;
        p.phi4 = 0.3;
        p.set_r(0.9, 0.4);
        let m = compose_bloch_messiah(&p, Basis::Helicity).unwrap();
        let a = m.block(0, 0);
        let b = m.block(0, 1);
        assert!(a.0[0][1].norm() < 1e-15 && a.0[1][0].norm() < 1e-15);
        assert!(b.0[0][1].norm() < 1e-15 && b.0[1][0].norm() < 1e-15);
    }

    #[test]
    fn factored_product_matches_closed_form() {
        let p = SqueezeRotParams {
            theta3: 0.3,
            theta4: 0.4,
            theta5: 0.2,
            theta6: -0.1,
            d1: 0.15,
            d2: 0.55,
            phi3: -0.2,
            phi4: 0.1,
            phi5: 0.35,
            phi6: 0.05,
        };
        let ten = compose_factored(&p).unwrap();
        let closed = compose_bloch_messiah(&p, Basis::Fundamental).unwrap();
        assert!(ten.max_abs_diff(&closed) < 1e-12);
        assert!(ten.max_imag() < 1e-12);
    }

    #[test]
    fn decompose_identity_recomposes() {
        let q = decompose_bloch_messiah(&Mat4::identity()).unwrap();
        let m = compose_bloch_messiah(&q, Basis::Fundamental).unwrap();
        assert!(m.max_abs_diff(&CMat4::identity()) < 1e-12);
    }

    #[test]
    fn decompose_single_squeezing_factor() {
        let m = exp_generator(2, 0.7).unwrap();
        let q = decompose_bloch_messiah(&m).unwrap();
        assert!((q.d2 - 0.7).abs() < 1e-10);
        assert!(q.d1.abs() < 1e-10);
        let back = compose_bloch_messiah(&q, Basis::Fundamental).unwrap();
        assert!(back.max_abs_diff(&m.to_complex()) < 1e-10);
    }

    #[test]
    fn decompose_rejects_non_symplectic() {
        let mut m = Mat4::identity();
        m.0[0][0] = 2.0;
        assert!(matches!(
            decompose_bloch_messiah(&m),
            Err(Error::NotSymplectic { .. })
        ));
    }

    #[test]
    fn decompose_degenerate_squeezing() {
        let mut p = SqueezeRotParams::ZERO;
        p.set_r(0.6, 0.6);
        p.theta3 = 0.4;
        p.phi3 = 0.9;
        let m = compose_bloch_messiah(&p, Basis::Fundamental).unwrap();
        let q = decompose_bloch_messiah(&m.real_part()).unwrap();
        let back = compose_bloch_messiah(&q, Basis::Fundamental).unwrap();
        assert!(back.max_abs_diff(&m) < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn composition_is_symplectic(raw in proptest::array::uniform10(-1.0f64..1.0)) {
            let p = SqueezeRotParams::from_array(raw);
            let m = compose_bloch_messiah(&p, Basis::Fundamental).unwrap().real_part();
            prop_assert!(symplectic_residual(&m) < 1e-12);
            prop_assert!((m.det() - 1.0).abs() < 1e-10);
            let mh = compose_bloch_messiah(&p, Basis::Helicity).unwrap();
            prop_assert!(helicity_symplectic_residual(&mh) < 1e-12);
            // lower blocks are conjugates of the upper ones
            prop_assert!(mh.block(1, 0).max_abs_diff(&mh.block(0, 1).conj()) < 1e-14);
            prop_assert!(mh.block(1, 1).max_abs_diff(&mh.block(0, 0).conj()) < 1e-14);
        }

        #[test]
        fn helicity_composition_matches_conjugation(raw in proptest::array::uniform10(-1.0f64..1.0)) {
            let p = SqueezeRotParams::from_array(raw);
            let direct = compose_bloch_messiah(&p, Basis::Helicity).unwrap();
            let conj = compose_via_conjugation(&p).unwrap();
            prop_assert!(direct.max_abs_diff(&conj) < 1e-12);
        }

        #[test]
        fn decompose_roundtrip(raw in proptest::array::uniform10(-1.2f64..1.2)) {
            let p = SqueezeRotParams::from_array(raw);
            let m = compose_bloch_messiah(&p, Basis::Fundamental).unwrap().real_part();
            let q = decompose_bloch_messiah(&m).unwrap();
            prop_assert!(q.r1() >= q.r2() && q.r2() >= -1e-12);
            let back = compose_bloch_messiah(&q, Basis::Fundamental).unwrap().real_part();
            prop_assert!(back.max_abs_diff(&m) < 1e-8);
        }

        #[test]
        fn su2_factorization_reproduces_rotation(
            t4 in -1.3f64..1.3, t5 in -1.3f64..1.3, t6 in -1.3f64..1.3,
        ) {
            let f = MixingFactors::from_angles(t4, t5, t6).unwrap();
            prop_assert!(f.residual_fundamental(t4, t5, t6) < 1e-10);
        }
    }
}
