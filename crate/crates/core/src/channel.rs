//! Single-qubit unitaries, channels, states and effects.
//!
//! Channels are stored as real 4x4 Pauli-transfer matrices (PTMs) in the
//! basis `{I, X, Y, Z}`: `ptm[i][j] = tr(σ_i E(σ_j)) / 2`. States are stored
//! as Pauli coefficient vectors `v` with `ρ = (v0 I + vx X + vy Y + vz Z) / 2`
//! and `v0 = 1`, so a channel acts on a state by plain matrix-vector product.

use std::f64::consts::PI;
use std::fmt;
use std::ops::Mul;

use nalgebra::{Matrix2, Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};

/// Tolerance for global-phase-insensitive unitary equality.
pub const PHASE_EQ_TOL: f64 = 1e-10;
/// Lowest Choi eigenvalue accepted as completely positive.
pub const CP_FLOOR: f64 = -1e-10;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);
const CI: Complex64 = Complex64::new(0.0, 1.0);

/// The four Pauli matrices in the order `I, X, Y, Z`.
pub fn paulis() -> [Matrix2<Complex64>; 4] {
    [
        Matrix2::new(C1, C0, C0, C1),
        Matrix2::new(C0, C1, C1, C0),
        Matrix2::new(C0, -CI, CI, C0),
        Matrix2::new(C1, C0, C0, -C1),
    ]
}

/// A 2x2 unitary. Equality is up to global phase.
#[derive(Clone, Copy, Debug)]
pub struct Unitary2(Matrix2<Complex64>);

impl Unitary2 {
    /// Wraps a matrix after checking `U†U = I` entrywise to 1e-12.
    pub fn new(m: Matrix2<Complex64>) -> Result<Self> {
        let dev = (m.adjoint() * m - Matrix2::identity()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if !dev.is_finite() || dev > 1e-12 {
            return Err(invalid(format!("matrix is not unitary (deviation {dev:.3e})")));
        }
        Ok(Self(m))
    }

    #[cfg(test)]
    pub(crate) fn from_matrix_unchecked(m: Matrix2<Complex64>) -> Self {
        Self(m)
    }

    pub fn identity() -> Self {
        Self(Matrix2::identity())
    }

    pub fn x() -> Self {
        Self(paulis()[1])
    }

    pub fn y() -> Self {
        Self(paulis()[2])
    }

    pub fn z() -> Self {
        Self(paulis()[3])
    }

    pub fn h() -> Self {
        let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self(Matrix2::new(r, r, r, -r))
    }

    /// The Clifford phase gate `diag(1, i)`.
    pub fn p() -> Self {
        Self(Matrix2::new(C1, C0, C0, CI))
    }

    /// Pauli `X^x Z^z`.
    pub fn pauli_xz(x: bool, z: bool) -> Self {
        let mut u = Self::identity();
        if z {
            u = Self::z();
        }
        if x {
            u = Self::x() * u;
        }
        u
    }

    /// Haar-random unitary drawn from a uniform point on the 3-sphere.
    pub fn haar_random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        let [a, b, c, d] = q.map(|v| v / norm);
        let alpha = Complex64::new(a, b);
        let beta = Complex64::new(c, d);
        Self(Matrix2::new(alpha, -beta.conj(), beta, alpha.conj()))
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.0
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    /// `|tr(U†V)|`, equal to 2 exactly when the two agree up to phase.
    pub fn overlap(&self, other: &Self) -> f64 {
        (self.0.adjoint() * other.0).trace().norm()
    }

    /// Largest entrywise deviation after removing the relative global phase.
    pub fn phase_distance(&self, other: &Self) -> f64 {
        let t = (self.0.adjoint() * other.0).trace();
        let phase = if t.norm() > 1e-300 { t / t.norm() } else { C1 };
        (self.0 * phase - other.0).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.phase_distance(other) <= tol
    }

    /// Integer power, `U^0 = I`.
    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::identity(), |acc, _| *self * acc)
    }

    /// Rescales so the first nonzero entry is real positive. Removes the
    /// global phase for hashing and display.
    pub fn canonical(&self) -> Self {
        let pivot = self.0.iter().copied().find(|c| c.norm() > 1e-8).unwrap_or(C1);
        Self(self.0 * (pivot.conj() / pivot.norm()))
    }
}

impl Mul for Unitary2 {
    type Output = Unitary2;
    fn mul(self, rhs: Unitary2) -> Unitary2 {
        Unitary2(self.0 * rhs.0)
    }
}

impl PartialEq for Unitary2 {
    fn eq(&self, other: &Self) -> bool {
        self.approx_eq(other, PHASE_EQ_TOL)
    }
}

impl fmt::Display for Unitary2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = |z: Complex64| format!("{:+.6}{:+.6}i", z.re, z.im);
        write!(f, "[[{}, {}], [{}, {}]]", c(self.0[(0, 0)]), c(self.0[(0, 1)]), c(self.0[(1, 0)]), c(self.0[(1, 1)]))
    }
}

/// `Z_θ = exp(-iθZ/2)`.
pub fn z_rotation(theta: f64) -> Result<Unitary2> {
    if !theta.is_finite() {
        return Err(invalid(format!("rotation angle must be finite, got {theta}")));
    }
    let half = theta / 2.0;
    Ok(Unitary2(Matrix2::new(Complex64::from_polar(1.0, -half), C0, C0, Complex64::from_polar(1.0, half))))
}

pub(crate) fn z_rot(theta: f64) -> Unitary2 {
    z_rotation(theta).expect("finite angle")
}

/// A CPTP map stored as its Pauli-transfer matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Channel {
    ptm: Matrix4<f64>,
}

impl Channel {
    /// Builds a channel from a PTM, checking trace preservation and complete
    /// positivity.
    pub fn from_ptm(ptm: Matrix4<f64>) -> Result<Self> {
        let c = Self { ptm };
        c.check_cptp()?;
        Ok(c)
    }

    pub(crate) fn from_ptm_unchecked(ptm: Matrix4<f64>) -> Self {
        Self { ptm }
    }

    pub fn identity() -> Self {
        Self { ptm: Matrix4::identity() }
    }

    /// Channel with Kraus operators `ks`; trace preservation is checked.
    pub fn from_kraus(ks: &[Matrix2<Complex64>]) -> Result<Self> {
        if ks.is_empty() {
            return Err(invalid("empty Kraus list"));
        }
        let sum: Matrix2<Complex64> = ks.iter().map(|k| k.adjoint() * k).sum();
        let dev = (sum - Matrix2::identity()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if dev > 1e-9 {
            return Err(invalid(format!("Kraus operators not trace preserving (deviation {dev:.3e})")));
        }
        let p = paulis();
        let ptm =
            Matrix4::from_fn(|i, j| ks.iter().map(|k| 0.5 * (p[i] * k * p[j] * k.adjoint()).trace().re).sum::<f64>());
        Ok(Self { ptm })
    }

    pub fn ptm(&self) -> &Matrix4<f64> {
        &self.ptm
    }

    /// Choi matrix `J = Σ_ij R_ij σ_j^T ⊗ σ_i / 2`, trace 2.
    pub fn choi(&self) -> nalgebra::Matrix4<Complex64> {
        let p = paulis();
        let mut j = nalgebra::Matrix4::<Complex64>::zeros();
        for a in 0..4 {
            for b in 0..4 {
                let r = self.ptm[(a, b)];
                if r == 0.0 {
                    continue;
                }
                j += p[b].transpose().kronecker(&p[a]) * Complex64::new(0.5 * r, 0.0);
            }
        }
        j
    }

    pub fn choi_min_eigenvalue(&self) -> f64 {
        let j = self.choi();
        // Symmetrize against round-off before the Hermitian solver.
        let h = (j + j.adjoint()) * Complex64::new(0.5, 0.0);
        SymmetricEigen::new(h).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn trace_deviation(&self) -> f64 {
        let row = self.ptm.row(0);
        (row[0] - 1.0).abs().max(row[1].abs()).max(row[2].abs()).max(row[3].abs())
    }

    pub fn check_cptp(&self) -> Result<()> {
        if self.ptm.iter().any(|v| !v.is_finite()) {
            return Err(invalid("channel has non-finite entries"));
        }
        let tp = self.trace_deviation();
        if tp > 1e-12 {
            return Err(invalid(format!("channel is not trace preserving (first-row deviation {tp:.3e})")));
        }
        let min = self.choi_min_eigenvalue();
        if min < CP_FLOOR {
            return Err(invalid(format!("channel is not completely positive (Choi eigenvalue {min:.3e})")));
        }
        Ok(())
    }

    pub fn is_cptp(&self) -> bool {
        self.check_cptp().is_ok()
    }

    /// Largest absolute PTM entry outside the diagonal.
    pub fn max_off_diagonal(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    m = m.max(self.ptm[(i, j)].abs());
                }
            }
        }
        m
    }

    /// Depolarizing parameter of the channel's twirl, `(tr R - 1) / 3`.
    pub fn depolarizing_parameter(&self) -> f64 {
        (self.ptm.trace() - 1.0) / 3.0
    }

    pub fn max_abs_diff(&self, other: &Channel) -> f64 {
        (self.ptm - other.ptm).abs().max()
    }

    /// Applies the channel `k` times.
    pub fn power(&self, k: usize) -> Channel {
        (0..k).fold(Channel::identity(), |acc, _| compose(self, &acc))
    }

    /// Convex mixture of channels.
    pub fn mixture(parts: &[(f64, Channel)]) -> Result<Channel> {
        let total: f64 = parts.iter().map(|(w, _)| *w).sum();
        if parts.is_empty() || (total - 1.0).abs() > 1e-9 || parts.iter().any(|(w, _)| *w < 0.0) {
            return Err(invalid("mixture weights must be nonnegative and sum to 1"));
        }
        let ptm = parts.iter().map(|(w, c)| c.ptm * *w).sum();
        Ok(Channel { ptm })
    }
}

/// Superoperator of `ρ ↦ UρU†`.
pub fn channel_from_unitary(u: &Unitary2) -> Channel {
    let p = paulis();
    let m = u.matrix();
    let ptm = Matrix4::from_fn(|i, j| 0.5 * (p[i] * m * p[j] * m.adjoint()).trace().re);
    Channel { ptm }
}

/// `second ∘ first`: apply `first`, then `second`.
pub fn compose(second: &Channel, first: &Channel) -> Channel {
    Channel { ptm: second.ptm * first.ptm }
}

/// `ρ ↦ pρ + (1-p) I/2`.
pub fn depolarizing(p: f64) -> Result<Channel> {
    check_unit("depolarizing parameter", p)?;
    Ok(Channel { ptm: Matrix4::from_diagonal(&Vector4::new(1.0, p, p, p)) })
}

/// `ρ ↦ (1-q)ρ + q ZρZ`.
pub fn dephasing(q: f64) -> Result<Channel> {
    check_unit("dephasing probability", q)?;
    let c = 1.0 - 2.0 * q;
    Ok(Channel { ptm: Matrix4::from_diagonal(&Vector4::new(1.0, c, c, 1.0)) })
}

/// Amplitude damping towards `|0⟩` with decay probability `gamma`.
pub fn amplitude_damping(gamma: f64) -> Result<Channel> {
    check_unit("damping probability", gamma)?;
    let s = (1.0 - gamma).sqrt();
    let mut ptm = Matrix4::zeros();
    ptm[(0, 0)] = 1.0;
    ptm[(1, 1)] = s;
    ptm[(2, 2)] = s;
    ptm[(3, 3)] = 1.0 - gamma;
    ptm[(3, 0)] = gamma;
    Ok(Channel { ptm })
}

fn check_unit(what: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(invalid(format!("{what} must lie in [0, 1], got {v}")));
    }
    Ok(())
}

/// Average gate fidelity of `noisy` against the unitary `ideal`, through the
/// process fidelity `tr(R_ideal^T R_noisy) / 4`.
pub fn avg_gate_fidelity(noisy: &Channel, ideal: &Unitary2) -> f64 {
    let r = channel_from_unitary(ideal);
    let f_pro = (r.ptm.transpose() * noisy.ptm).trace() / 4.0;
    ((2.0 * f_pro + 1.0) / 3.0).clamp(0.0, 1.0)
}

/// `(1/N) Σ_r U_r† ∘ E ∘ U_r`.
pub fn twirl(e: &Channel, gateset: &[Unitary2]) -> Result<Channel> {
    if gateset.is_empty() {
        return Err(invalid("cannot twirl over an empty gate set"));
    }
    let n = gateset.len() as f64;
    let ptm: Matrix4<f64> = gateset
        .iter()
        .map(|u| {
            let fwd = channel_from_unitary(u);
            let back = channel_from_unitary(&u.adjoint());
            back.ptm * e.ptm * fwd.ptm
        })
        .sum();
    Ok(Channel { ptm: ptm / n })
}

/// `(1/N²) Σ_{U,V} |tr(U†V)|^{2t}`; the Haar value for a qubit is 1 (t = 1)
/// and 2 (t = 2).
pub fn frame_potential(gateset: &[Unitary2], t: u32) -> Result<f64> {
    if gateset.is_empty() {
        return Err(invalid("frame potential of an empty gate set"));
    }
    if !(1..=2).contains(&t) {
        return Err(invalid(format!("frame potential order must be 1 or 2, got {t}")));
    }
    let n = gateset.len() as f64;
    let mut acc = 0.0;
    for u in gateset {
        for v in gateset {
            acc += u.overlap(v).powi(2 * t as i32);
        }
    }
    Ok(acc / (n * n))
}

/// Random CPTP channel from a random isometry into system ⊗ environment
/// (Kraus rank 2).
pub fn random_channel<R: Rng + ?Sized>(rng: &mut R) -> Channel {
    let cols: Vec<[Complex64; 4]> = gram_schmidt_columns(rng);
    // Isometry W: C^2 -> C^2 ⊗ C^2 with columns cols[0], cols[1]; Kraus K_e
    // has entries K_e[s][in] = W[(s, e)][in].
    let kraus: Vec<Matrix2<Complex64>> = (0..2).map(|e| Matrix2::from_fn(|s, i| cols[i][2 * s + e])).collect();
    Channel::from_kraus(&kraus).expect("isometry gives a trace-preserving channel")
}

fn gram_schmidt_columns<R: Rng + ?Sized>(rng: &mut R) -> Vec<[Complex64; 4]> {
    let mut out: Vec<[Complex64; 4]> = Vec::with_capacity(2);
    while out.len() < 2 {
        let mut v: [Complex64; 4] =
            std::array::from_fn(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        for u in &out {
            let dot: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for k in 0..4 {
                v[k] -= dot * u[k];
            }
        }
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        out.push(v.map(|c| c / norm));
    }
    out
}

/// A qubit state as Pauli coefficients `(1, x, y, z)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct State {
    bloch: Vector4<f64>,
}

impl State {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let r = (x * x + y * y + z * z).sqrt();
        if !r.is_finite() || r > 1.0 + 1e-12 {
            return Err(invalid(format!("Bloch vector norm {r} exceeds 1")));
        }
        Ok(Self { bloch: Vector4::new(1.0, x, y, z) })
    }

    /// `|+⟩⟨+|`.
    pub fn plus() -> Self {
        Self { bloch: Vector4::new(1.0, 1.0, 0.0, 0.0) }
    }

    pub fn zero() -> Self {
        Self { bloch: Vector4::new(1.0, 0.0, 0.0, 1.0) }
    }

    pub fn maximally_mixed() -> Self {
        Self { bloch: Vector4::new(1.0, 0.0, 0.0, 0.0) }
    }

    /// Uniformly random pure state (uniform on the Bloch sphere).
    pub fn random_pure<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let z: f64 = rng.gen_range(-1.0..=1.0);
        let phi: f64 = rng.gen_range(0.0..2.0 * PI);
        let r = (1.0 - z * z).max(0.0).sqrt();
        Self { bloch: Vector4::new(1.0, r * phi.cos(), r * phi.sin(), z) }
    }

    /// Pure state `U|0⟩`.
    pub fn from_unitary(u: &Unitary2) -> Self {
        apply(&channel_from_unitary(u), &Self::zero())
    }

    /// Pauli coefficient vector `(1, x, y, z)`.
    pub fn vector(&self) -> &Vector4<f64> {
        &self.bloch
    }

    pub fn bloch(&self) -> [f64; 3] {
        [self.bloch[1], self.bloch[2], self.bloch[3]]
    }

    /// Scales the Bloch vector, e.g. to model imperfect preparation.
    pub fn shrink(&self, factor: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&factor) {
            return Err(invalid(format!("shrink factor must lie in [0, 1], got {factor}")));
        }
        let [x, y, z] = self.bloch();
        Self::new(factor * x, factor * y, factor * z)
    }
}

/// A two-outcome POVM element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Effect {
    operator: Matrix2<Complex64>,
}

impl Effect {
    pub fn new(operator: Matrix2<Complex64>) -> Result<Self> {
        let herm = (operator - operator.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if herm > 1e-12 {
            return Err(invalid("effect operator must be Hermitian"));
        }
        let eig = SymmetricEigen::new(operator).eigenvalues;
        if eig.iter().any(|&e| !(-1e-12..=1.0 + 1e-12).contains(&e)) {
            return Err(invalid(format!("effect eigenvalues {eig:?} outside [0, 1]")));
        }
        Ok(Self { operator })
    }

    /// Projector onto `|+⟩`.
    pub fn plus_projector() -> Self {
        let h = Complex64::new(0.5, 0.0);
        Self { operator: Matrix2::new(h, h, h, h) }
    }

    /// `Π₊ + b (I - Π₊)`: the orthogonal state is misreported as surviving
    /// with probability `b`.
    pub fn biased_plus(b: f64) -> Result<Self> {
        check_unit("effect bias", b)?;
        let p = Self::plus_projector().operator;
        let id = Matrix2::<Complex64>::identity();
        Self::new(p + (id - p) * Complex64::new(b, 0.0))
    }

    pub fn operator(&self) -> &Matrix2<Complex64> {
        &self.operator
    }

    /// Pauli coefficients `tr(E σ_i)`.
    pub(crate) fn pauli_coefficients(&self) -> Vector4<f64> {
        let p = paulis();
        Vector4::from_fn(|i, _| (self.operator * p[i]).trace().re)
    }
}

pub fn apply(c: &Channel, s: &State) -> State {
    State { bloch: c.ptm * s.bloch }
}

/// Born probability `tr(Eρ)`, clamped to `[0, 1]`.
pub fn measure(e: &Effect, s: &State) -> f64 {
    (0.5 * e.pauli_coefficients().dot(&s.bloch)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn z_rotation_cases() {
        assert_eq!(z_rotation(0.0).unwrap(), Unitary2::identity());
        assert_eq!(z_rotation(FRAC_PI_2).unwrap(), Unitary2::p());
        assert_eq!(z_rotation(PI).unwrap(), Unitary2::z());
        assert!(z_rotation(f64::NAN).is_err());
        assert!(z_rotation(f64::INFINITY).is_err());
        let z = z_rotation(0.3).unwrap();
        assert!((z.entry(0, 0) - Complex64::from_polar(1.0, -0.15)).norm() < 1e-15);
        assert!((z.entry(1, 1) - Complex64::from_polar(1.0, 0.15)).norm() < 1e-15);
    }

    #[test]
    fn unitary_channel_cases() {
        assert_eq!(channel_from_unitary(&Unitary2::identity()).ptm, Matrix4::identity());
        let x = channel_from_unitary(&Unitary2::x());
        let expected = Matrix4::from_diagonal(&Vector4::new(1.0, 1.0, -1.0, -1.0));
        assert!((x.ptm - expected).abs().max() < 1e-15);
        let u = Unitary2::h() * Unitary2::p();
        let shifted = Unitary2::from_matrix_unchecked(u.matrix() * Complex64::from_polar(1.0, 0.7));
        assert!(channel_from_unitary(&u).max_abs_diff(&channel_from_unitary(&shifted)) < 1e-15);
    }

    #[test]
    fn composition_cases() {
        let c = amplitude_damping(0.3).unwrap();
        assert_eq!(compose(&Channel::identity(), &c), c);
        let x = channel_from_unitary(&Unitary2::x());
        assert!(compose(&x, &x).max_abs_diff(&Channel::identity()) < 1e-15);
        let pq = compose(&depolarizing(0.9).unwrap(), &depolarizing(0.8).unwrap());
        assert!(pq.max_abs_diff(&depolarizing(0.72).unwrap()) < 1e-15);
    }

    #[test]
    fn composition_order() {
        // first X-rotation-ish, then damping: damping ∘ H differs from H ∘ damping
        let h = channel_from_unitary(&Unitary2::h());
        let ad = amplitude_damping(0.5).unwrap();
        let s = State::zero();
        let direct = apply(&ad, &apply(&h, &s));
        let composed = apply(&compose(&ad, &h), &s);
        assert!((direct.vector() - composed.vector()).abs().max() < 1e-15);
        assert!((apply(&compose(&h, &ad), &s).vector() - composed.vector()).abs().max() > 1e-3);
    }

    #[test]
    fn depolarizing_cases() {
        assert_eq!(depolarizing(1.0).unwrap(), Channel::identity());
        assert_eq!(*depolarizing(0.0).unwrap().ptm(), Matrix4::from_diagonal(&Vector4::new(1.0, 0.0, 0.0, 0.0)));
        assert!(depolarizing(1.0 + 1e-12).is_err());
        assert!(depolarizing(-1e-12).is_err());
        for p in [0.0, 0.3, 0.96, 1.0] {
            let f = avg_gate_fidelity(&depolarizing(p).unwrap(), &Unitary2::identity());
            assert!((f - (1.0 + p) / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn cptp_checks() {
        for c in [
            depolarizing(0.0).unwrap(),
            dephasing(0.5).unwrap(),
            amplitude_damping(1.0).unwrap(),
            channel_from_unitary(&Unitary2::h()),
        ] {
            assert!(c.is_cptp(), "{c:?}");
        }
        // Not trace preserving.
        let mut m = Matrix4::identity();
        m[(0, 1)] = 0.1;
        assert!(Channel::from_ptm(m).is_err());
        // Transpose map is positive but not completely positive.
        let t = Matrix4::from_diagonal(&Vector4::new(1.0, 1.0, -1.0, 1.0));
        assert!(Channel::from_ptm(t).is_err());
        // Overshooting depolarization.
        let over = Matrix4::from_diagonal(&Vector4::new(1.0, -0.5, -0.5, -0.5));
        assert!(Channel::from_ptm(over).is_err());
    }

    #[test]
    fn twirl_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let set: Vec<Unitary2> = (0..5).map(|_| Unitary2::haar_random(&mut rng)).collect();
        let d = depolarizing(0.7).unwrap();
        assert!(twirl(&d, &set).unwrap().max_abs_diff(&d) < 1e-14);
        assert!(twirl(&d, &[]).is_err());
    }

    #[test]
    fn frame_potential_pauli() {
        let pauli = [Unitary2::identity(), Unitary2::x(), Unitary2::y(), Unitary2::z()];
        // Direct count: the 4 diagonal pairs give |tr|^2 = 4, the rest 0.
        assert!((frame_potential(&pauli, 1).unwrap() - 1.0).abs() < 1e-14);
        // Same pairs at t = 2: 4 * 16 / 16 = 4.
        assert!((frame_potential(&pauli, 2).unwrap() - 4.0).abs() < 1e-14);
        assert!(frame_potential(&pauli, 3).is_err());
        assert!(frame_potential(&[], 1).is_err());
    }

    #[test]
    fn measurement_cases() {
        let proj = Effect::plus_projector();
        assert!((measure(&proj, &State::plus()) - 1.0).abs() < 1e-15);
        assert!((measure(&proj, &State::maximally_mixed()) - 0.5).abs() < 1e-15);
        for p in [0.2, 0.9] {
            let s = apply(&depolarizing(p).unwrap(), &State::plus());
            assert!((measure(&proj, &s) - (1.0 + p) / 2.0).abs() < 1e-15);
        }
        let minus = State::new(-1.0, 0.0, 0.0).unwrap();
        assert!((measure(&Effect::biased_plus(0.05).unwrap(), &minus) - 0.05).abs() < 1e-15);
        assert!(State::new(1.0, 0.1, 0.0).is_err());
        assert!(Effect::biased_plus(1.5).is_err());
    }

    #[test]
    fn random_channels_are_cptp() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let c = random_channel(&mut rng);
            assert!(c.is_cptp());
            let u = Unitary2::haar_random(&mut rng);
            assert!(Unitary2::new(*u.matrix()).is_ok());
        }
    }
}
