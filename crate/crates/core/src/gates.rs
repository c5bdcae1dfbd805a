//! The two benchmarking gate sets.
//!
//! The single-qubit Clifford group is generated from `{P, H}` and every
//! element carries the three measurement angles (integer multiples of π/2)
//! that implement it on a linear cluster wire when all outcomes are zero.
//! The derandomized design is the 32-element set produced by a fixed
//! five-angle measurement pattern, indexed by the outcome bitstring.

use std::collections::VecDeque;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::{frame_potential, random_channel, twirl, z_rot, Unitary2};
use crate::error::{invalid, Error, Result};

/// Gate word and measurement angles in quarter turns `(n1, n2, n3)`, so the
/// angles are `n_k·π/2`. `n1` is measured first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AngleRow {
    pub word: &'static str,
    pub quarter_turns: [u8; 3],
}

const fn row(word: &'static str, n: [u8; 3]) -> AngleRow {
    AngleRow { word, quarter_turns: n }
}

/// Measurement angles for all 24 Clifford elements, keyed by generator word.
pub const CLIFFORD_ANGLE_TABLE: [AngleRow; 24] = [
    row("I", [1, 1, 1]),
    row("P", [0, 3, 3]),
    row("P^2", [1, 3, 3]),
    row("P^3", [0, 1, 1]),
    row("H", [0, 0, 0]),
    row("PH", [0, 1, 0]),
    row("P^2H", [0, 2, 0]),
    row("P^3H", [0, 3, 0]),
    row("HP", [0, 0, 1]),
    row("PHP", [1, 1, 0]),
    row("P^2HP", [0, 2, 3]),
    row("P^3HP", [1, 3, 0]),
    row("HP^2", [2, 0, 0]),
    row("PHP^2", [0, 3, 2]),
    row("P^2HP^2", [0, 2, 2]),
    row("P^3HP^2", [0, 1, 2]),
    row("HP^3", [0, 0, 3]),
    row("PHP^3", [1, 3, 2]),
    row("P^2HP^3", [0, 2, 1]),
    row("P^3HP^3", [1, 1, 2]),
    row("HP^2H", [1, 1, 3]),
    row("PHP^2H", [0, 1, 3]),
    row("P^2HP^2H", [1, 3, 1]),
    row("P^3HP^2H", [0, 3, 1]),
];

/// Words of the coset representatives of the Pauli subgroup.
pub const COSET_WORDS: [&str; 6] = ["I", "P", "H", "PH", "HP", "PHP"];

/// Evaluates a word such as `"P^2HP"` as the matrix product `P·P·H·P`
/// (rightmost letter acts first).
pub fn word_unitary(word: &str) -> Result<Unitary2> {
    let mut out = Unitary2::identity();
    let mut chars = word.chars().peekable();
    while let Some(c) = chars.next() {
        let g = match c {
            'I' => Unitary2::identity(),
            'P' => Unitary2::p(),
            'H' => Unitary2::h(),
            'X' => Unitary2::x(),
            'Y' => Unitary2::y(),
            'Z' => Unitary2::z(),
            _ => return Err(invalid(format!("unknown generator '{c}' in word {word:?}"))),
        };
        let mut power = 1;
        if chars.peek() == Some(&'^') {
            chars.next();
            let digit = chars.next().and_then(|d| d.to_digit(10));
            power = digit.ok_or_else(|| invalid(format!("bad exponent in word {word:?}")))?;
        }
        out = out * g.pow(power);
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct CliffordElement {
    pub index: usize,
    pub word: &'static str,
    pub unitary: Unitary2,
    pub quarter_turns: [u8; 3],
}

impl CliffordElement {
    /// Measurement angles in radians.
    pub fn angles(&self) -> [f64; 3] {
        self.quarter_turns.map(|n| f64::from(n) * FRAC_PI_2)
    }
}

/// Breadth-first closure of `{P, H}` with up-to-phase deduplication.
pub fn generate_clifford_closure() -> Vec<Unitary2> {
    let gens = [Unitary2::p(), Unitary2::h()];
    let mut found = vec![Unitary2::identity()];
    let mut queue = VecDeque::from([Unitary2::identity()]);
    while let Some(u) = queue.pop_front() {
        for g in &gens {
            let v = *g * u;
            if !found.contains(&v) {
                found.push(v);
                queue.push_back(v);
            }
        }
    }
    found
}

fn build_clifford_group() -> Vec<CliffordElement> {
    let closure = generate_clifford_closure();
    assert_eq!(closure.len(), 24, "P and H must generate 24 elements up to phase");
    let elements: Vec<CliffordElement> = CLIFFORD_ANGLE_TABLE
        .iter()
        .enumerate()
        .map(|(index, r)| CliffordElement {
            index,
            word: r.word,
            unitary: word_unitary(r.word).expect("table words are well formed"),
            quarter_turns: r.quarter_turns,
        })
        .collect();
    for u in &closure {
        assert!(
            elements.iter().filter(|e| e.unitary == *u).count() == 1,
            "table words must cover the generated group exactly once"
        );
    }
    elements
}

/// The 24 single-qubit Clifford elements in table order.
pub fn clifford_group() -> &'static [CliffordElement] {
    static GROUP: OnceLock<Vec<CliffordElement>> = OnceLock::new();
    GROUP.get_or_init(build_clifford_group)
}

/// Index of `u` in [`clifford_group`], if `u` is Clifford.
pub fn clifford_index(u: &Unitary2) -> Option<usize> {
    clifford_group().iter().position(|e| e.unitary == *u)
}

/// The coset representatives `{I, P, H, PH, HP, PHP}`.
pub fn coset_reps() -> Vec<CliffordElement> {
    COSET_WORDS
        .iter()
        .map(|w| clifford_group().iter().find(|e| e.word == *w).cloned().expect("coset words are table words"))
        .collect()
}

pub fn pauli_group() -> [Unitary2; 4] {
    [Unitary2::identity(), Unitary2::x(), Unitary2::y(), Unitary2::z()]
}

/// Converts an angle to quarter turns mod 4, rejecting angles that are not
/// multiples of π/2.
pub fn quarter_turns(theta: f64) -> Result<u8> {
    if !theta.is_finite() {
        return Err(invalid("angle must be finite"));
    }
    let k = theta / FRAC_PI_2;
    let r = k.round();
    if (k - r).abs() > 1e-9 {
        return Err(invalid(format!("angle {theta} is not a multiple of π/2")));
    }
    Ok((r as i64).rem_euclid(4) as u8)
}

/// `(H Z_θ3)(H Z_θ2)(H Z_θ1)`: the gate implemented by three measurements
/// with all outcomes zero.
pub fn angles_to_clifford(angles: [f64; 3]) -> Result<Unitary2> {
    for a in angles {
        quarter_turns(a)?;
    }
    Ok(angles.iter().fold(Unitary2::identity(), |acc, &t| Unitary2::h() * z_rot(t) * acc))
}

#[derive(Clone, Debug, Serialize)]
pub struct AngleRowCheck {
    pub word: &'static str,
    pub quarter_turns: [u8; 3],
    pub deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AngleTableReport {
    pub rows: Vec<AngleRowCheck>,
    pub max_deviation: f64,
}

/// Checks every row of the built-in angle table.
pub fn verify_angle_table() -> Result<AngleTableReport> {
    verify_angle_rows(&CLIFFORD_ANGLE_TABLE)
}

/// Checks that each row's angles reproduce the row's word up to phase.
pub fn verify_angle_rows(rows: &[AngleRow]) -> Result<AngleTableReport> {
    let mut checks = Vec::with_capacity(rows.len());
    for r in rows {
        let target = word_unitary(r.word)?;
        let built = angles_to_clifford(r.quarter_turns.map(|n| f64::from(n) * FRAC_PI_2))?;
        let deviation = target.phase_distance(&built);
        if deviation > 1e-10 {
            return Err(Error::Verification {
                check: format!("angle table row {}", r.word),
                detail: format!("angles {:?}·π/2 deviate by {deviation:.3e}", r.quarter_turns),
            });
        }
        checks.push(AngleRowCheck { word: r.word, quarter_turns: r.quarter_turns, deviation });
    }
    let max_deviation = checks.iter().map(|c| c.deviation).fold(0.0, f64::max);
    Ok(AngleTableReport { rows: checks, max_deviation })
}

/// Byproduct exponents `(b1, b2)` with `U(θ, m) ≡ X^b1 Z^b2 U(θ, 0)` for
/// Clifford angles `θ_k = n_k·π/2`.
pub fn byproduct_bits(n: [u8; 3], m: [u8; 3]) -> (u8, u8) {
    let [_, n2, n3] = n.map(|v| v % 4);
    let [m1, m2, m3] = m.map(|v| v & 1);
    let b1 = m3 + m2 * n3 + m1 * (n2 * n3 + 1);
    let b2 = m2 + m1 * n2;
    (b1 % 2, b2 % 2)
}

/// The gate applied by a run of measurements with the given outcomes:
/// `∏ X^{m_k} H Z_{θ_k}`, first angle acting first.
pub fn measurement_product(angles: &[f64], outcomes: &[u8]) -> Unitary2 {
    angles.iter().zip(outcomes).fold(Unitary2::identity(), |acc, (&t, &m)| {
        Unitary2::x().pow(u32::from(m & 1)) * Unitary2::h() * z_rot(t) * acc
    })
}

/// Number of measurements per derandomized design element.
pub const DESIGN_STEPS: usize = 5;
/// Number of design elements, one per outcome string.
pub const DESIGN_SIZE: usize = 1 << DESIGN_STEPS;

/// The design angle `arccos(1/√3)`.
pub fn design_middle_angle() -> f64 {
    (1.0 / 3f64.sqrt()).acos()
}

/// Outcome bits `(m1, …, m5)` packed with `m1` as the most significant bit,
/// so the string `"10000"` is index 16.
pub fn outcome_index(m: [u8; DESIGN_STEPS]) -> usize {
    m.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b & 1))
}

pub fn outcome_bits(index: usize) -> [u8; DESIGN_STEPS] {
    std::array::from_fn(|k| ((index >> (DESIGN_STEPS - 1 - k)) & 1) as u8)
}

#[derive(Clone, Debug)]
pub struct DerandomizedDesign {
    pub phi1: f64,
    pub phi2: f64,
    pub angles: [f64; DESIGN_STEPS],
    /// The π rotations `A1..A5`.
    pub a: [Unitary2; DESIGN_STEPS],
    /// Gate applied when every outcome is zero.
    pub q_gate: Unitary2,
    pub elements: [Unitary2; DESIGN_SIZE],
}

/// Builds the design for the pattern `(φ1, π/4, arccos(1/√3), π/4, φ2)`.
///
/// With `W_k = H Z_{θ_k}` the outcome on site `k` contributes an `X` after
/// `W_k`; moving it past `W_{k+1}, …, W_5` gives
/// `A_k = (W_5⋯W_{k+1}) X (W_5⋯W_{k+1})†`, so that
/// `U(m) = A5^{m5} A4^{m4} A3^{m3} A2^{m2} A1^{m1} Q`.
pub fn derandomized_design(phi1: f64, phi2: f64) -> Result<DerandomizedDesign> {
    if !phi1.is_finite() || !phi2.is_finite() {
        return Err(invalid("design phases must be finite"));
    }
    let angles = [phi1, FRAC_PI_4, design_middle_angle(), FRAC_PI_4, phi2];
    let w: Vec<Unitary2> = angles.iter().map(|&t| Unitary2::h() * z_rot(t)).collect();
    let q_gate = w.iter().fold(Unitary2::identity(), |acc, wk| *wk * acc);
    let a: [Unitary2; DESIGN_STEPS] = std::array::from_fn(|k| {
        let v = w[k + 1..].iter().fold(Unitary2::identity(), |acc, wj| *wj * acc);
        v * Unitary2::x() * v.adjoint()
    });
    let elements = std::array::from_fn(|idx| {
        let m = outcome_bits(idx);
        (0..DESIGN_STEPS).fold(q_gate, |acc, k| a[k].pow(u32::from(m[k])) * acc)
    });
    Ok(DerandomizedDesign { phi1, phi2, angles, a, q_gate, elements })
}

impl DerandomizedDesign {
    pub fn element(&self, m: [u8; DESIGN_STEPS]) -> Unitary2 {
        self.elements[outcome_index(m)]
    }
}

pub fn element_from_outcomes(design: &DerandomizedDesign, m: [u8; DESIGN_STEPS]) -> Unitary2 {
    design.element(m)
}

#[derive(Clone, Debug, Serialize)]
pub struct TwoDesignReport {
    pub frame_potential: f64,
    /// Worst off-target PTM magnitude over the twirled test channels,
    /// counting both off-diagonal entries and spread of the diagonal.
    pub max_off_target: f64,
    /// Worst `|(1+p)/2 - F̄(E)|` over the test channels.
    pub max_fidelity_gap: f64,
    pub channels: usize,
    pub passed: bool,
}

/// Frame potential plus twirls of `channels` random CPTP maps drawn from
/// `seed`.
pub fn two_design_report(gateset: &[Unitary2], tol: f64, channels: usize, seed: u64) -> Result<TwoDesignReport> {
    let fp = frame_potential(gateset, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_off_target = 0.0f64;
    let mut max_fidelity_gap = 0.0f64;
    for _ in 0..channels {
        let e = random_channel(&mut rng);
        let t = twirl(&e, gateset)?;
        let r = t.ptm();
        let spread = (r[(1, 1)] - r[(2, 2)]).abs().max((r[(1, 1)] - r[(3, 3)]).abs());
        max_off_target = max_off_target.max(t.max_off_diagonal()).max(spread);
        let p = r[(1, 1)];
        let f = crate::channel::avg_gate_fidelity(&e, &Unitary2::identity());
        max_fidelity_gap = max_fidelity_gap.max(((1.0 + p) / 2.0 - f).abs());
    }
    let passed = fp <= 2.0 + tol && max_off_target <= tol;
    Ok(TwoDesignReport { frame_potential: fp, max_off_target, max_fidelity_gap, channels, passed })
}

/// True iff the set passes the frame-potential and twirl tests at `tol`.
pub fn verify_2design(gateset: &[Unitary2], tol: f64) -> bool {
    two_design_report(gateset, tol, 10, 0x2de5_1a9e).map(|r| r.passed).unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn clifford_group_shape() {
        let g = clifford_group();
        assert_eq!(g.len(), 24);
        assert_eq!(g[0].unitary, Unitary2::identity());
        assert!(g.iter().any(|e| e.unitary == Unitary2::p()));
        assert!(g.iter().any(|e| e.unitary == Unitary2::h()));
        for (i, a) in g.iter().enumerate() {
            for b in &g[i + 1..] {
                assert!(a.unitary != b.unitary, "{} and {} coincide", a.word, b.word);
            }
        }
    }

    #[test]
    fn clifford_closure() {
        let g = clifford_group();
        for a in g {
            assert!(clifford_index(&a.unitary.adjoint()).is_some());
            for b in g {
                assert!(clifford_index(&(a.unitary * b.unitary)).is_some(), "{}·{}", a.word, b.word);
            }
        }
    }

    #[test]
    fn coset_partition() {
        let t1 = coset_reps();
        assert_eq!(t1.len(), 6);
        assert_eq!(t1[0].unitary, Unitary2::identity());
        let mut hits = [0usize; 24];
        for w in pauli_group() {
            for g in &t1 {
                hits[clifford_index(&(w * g.unitary)).unwrap()] += 1;
            }
        }
        assert!(hits.iter().all(|&h| h == 1), "{hits:?}");
    }

    #[test]
    fn angle_examples() {
        assert_eq!(angles_to_clifford([0.0; 3]).unwrap(), Unitary2::h());
        assert_eq!(angles_to_clifford([FRAC_PI_2; 3]).unwrap(), Unitary2::identity());
        let p = angles_to_clifford([0.0, 3.0 * FRAC_PI_2, 3.0 * FRAC_PI_2]).unwrap();
        assert_eq!(p, Unitary2::p());
        let z = angles_to_clifford([FRAC_PI_2, 3.0 * FRAC_PI_2, 3.0 * FRAC_PI_2]).unwrap();
        assert_eq!(z, Unitary2::z());
        assert!(angles_to_clifford([0.1, 0.0, 0.0]).is_err());
        assert!(angles_to_clifford([-FRAC_PI_2, 4.0 * PI, 0.0]).is_ok());
    }

    #[test]
    fn angle_table_passes() {
        let report = verify_angle_table().unwrap();
        assert_eq!(report.rows.len(), 24);
        assert!(report.max_deviation < 1e-10);
        for e in clifford_group() {
            assert_eq!(angles_to_clifford(e.angles()).unwrap(), e.unitary);
        }
    }

    #[test]
    fn corrupted_row_named() {
        let mut rows = CLIFFORD_ANGLE_TABLE;
        let h = rows.iter().position(|r| r.word == "H").unwrap();
        rows[h].quarter_turns = [0, 0, 1];
        match verify_angle_rows(&rows) {
            Err(Error::Verification { check, .. }) => assert!(check.ends_with(" H"), "{check}"),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn byproduct_examples() {
        for n1 in 0..4 {
            for n2 in 0..4 {
                for n3 in 0..4 {
                    assert_eq!(byproduct_bits([n1, n2, n3], [0, 0, 0]), (0, 0));
                }
            }
        }
        assert_eq!(byproduct_bits([0, 0, 0], [1, 0, 0]), (1, 0));
    }

    #[test]
    fn word_parsing() {
        assert_eq!(word_unitary("P^2").unwrap(), Unitary2::z());
        assert_eq!(word_unitary("HP^2H").unwrap(), Unitary2::x());
        assert!(word_unitary("Q").is_err());
        assert!(word_unitary("P^").is_err());
    }

    #[test]
    fn design_pi_rotations() {
        let d = derandomized_design(0.0, 0.0).unwrap();
        for a in &d.a {
            assert!(a.trace().norm() < 1e-12);
            assert!((a.matrix() - a.matrix().adjoint()).iter().all(|c| c.norm() < 1e-12));
            assert_eq!(a.pow(2), Unitary2::identity());
        }
        assert_eq!(d.a[3], Unitary2::z());
        assert_eq!(d.a[4], Unitary2::x());
        assert!((d.a[0].entry(0, 0).re.abs() - 1.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn design_outcome_indexing() {
        let d = derandomized_design(0.0, 0.0).unwrap();
        assert_eq!(element_from_outcomes(&d, [0; 5]), d.q_gate);
        assert_eq!(element_from_outcomes(&d, [1, 0, 0, 0, 0]), d.a[0] * d.q_gate);
        assert_eq!(outcome_index([1, 0, 0, 0, 0]), 16);
        for i in 0..DESIGN_SIZE {
            assert_eq!(outcome_index(outcome_bits(i)), i);
        }
        assert!(derandomized_design(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn design_checks() {
        let clifford: Vec<Unitary2> = clifford_group().iter().map(|e| e.unitary).collect();
        assert!(verify_2design(&clifford, 1e-9));
        let d = derandomized_design(0.0, 0.0).unwrap();
        assert!(verify_2design(&d.elements, 1e-9));
        assert!(!verify_2design(&pauli_group(), 1e-9));
    }
}
