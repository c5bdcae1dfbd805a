//! Logical-level simulation of a noisy linear cluster wire.
//!
//! Measuring a site at angle `θ` with outcome `m` applies `X^m H Z_θ` to the
//! logical qubit. Outcome probabilities are `(1/2 - bias, 1/2 + bias)`
//! independent of the logical state. With randomness injection a fair coin
//! `c` relabels the outcome axis, so the logical effect follows the
//! effective outcome `m ⊕ c`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{apply, channel_from_unitary, compose, measure, Channel, Effect, State, Unitary2};
use crate::error::{invalid, Result};
use crate::gates::{angles_to_clifford, byproduct_bits, quarter_turns};
use crate::noise::{NoiseContext, NoiseModel, Placement};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct InstrumentConfig {
    /// Outcome 1 occurs with probability `1/2 + bias`.
    pub bias: f64,
    pub inject_randomness: bool,
}

impl InstrumentConfig {
    pub fn new(bias: f64, inject_randomness: bool) -> Result<Self> {
        let c = Self { bias, inject_randomness };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(-0.5..=0.5).contains(&self.bias) {
            return Err(invalid(format!("instrument bias must lie in [-1/2, 1/2], got {}", self.bias)));
        }
        Ok(())
    }

    /// Probability of effective outcome 1.
    pub fn effective_one_probability(&self) -> f64 {
        if self.inject_randomness {
            0.5
        } else {
            0.5 + self.bias
        }
    }
}

/// Logical preparation and measurement imperfections.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpamConfig {
    /// Bloch-vector scale of the prepared `|+⟩`.
    pub prep_shrink: f64,
    /// Probability of reporting survival for the orthogonal state.
    pub effect_bias: f64,
}

impl Default for SpamConfig {
    fn default() -> Self {
        Self { prep_shrink: 1.0, effect_bias: 0.0 }
    }
}

impl SpamConfig {
    pub fn ideal() -> Self {
        Self::default()
    }

    pub fn prepared_state(&self) -> Result<State> {
        State::plus().shrink(self.prep_shrink)
    }

    pub fn effect(&self) -> Result<Effect> {
        Effect::biased_plus(self.effect_bias)
    }

    pub fn validate(&self) -> Result<()> {
        self.prepared_state()?;
        self.effect()?;
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct WireRun {
    pub state: State,
    /// Effective outcome of every executed step.
    pub outcomes: Vec<u8>,
    /// Injected coins, empty when injection is off.
    pub injected: Vec<u8>,
    /// Accumulated byproduct exponents `(x, z)`.
    pub pauli_frame: (u8, u8),
    /// Ideal unitary realized so far, including byproducts.
    pub logical: Unitary2,
    pub seed: u64,
}

impl WireRun {
    pub fn new(state: State, seed: u64) -> Self {
        Self {
            state,
            outcomes: Vec::new(),
            injected: Vec::new(),
            pauli_frame: (0, 0),
            logical: Unitary2::identity(),
            seed,
        }
    }
}

/// `X^m H Z_θ`.
pub fn step_unitary(theta: f64, m: u8) -> Unitary2 {
    Unitary2::x().pow(u32::from(m & 1)) * Unitary2::h() * crate::channel::z_rot(theta)
}

/// Samples one outcome and applies the corresponding measurement gate, then
/// the step noise if the model is placed after each step.
pub fn measure_step<R: Rng + ?Sized>(
    run: &mut WireRun,
    theta: f64,
    noise: &NoiseModel,
    instrument: &InstrumentConfig,
    rng: &mut R,
    gate: Option<usize>,
) -> u8 {
    let raw = u8::from(rng.gen_bool(0.5 + instrument.bias));
    let m = if instrument.inject_randomness {
        let c = u8::from(rng.gen_bool(0.5));
        run.injected.push(c);
        raw ^ c
    } else {
        raw
    };
    let u = step_unitary(theta, m);
    run.state = apply(&channel_from_unitary(&u), &run.state);
    run.logical = u * run.logical;
    if noise.placement == Placement::AfterEachStep {
        let ctx = NoiseContext { angles: &[theta], outcomes: &[m], gate };
        run.state = apply(&noise.realize(&ctx), &run.state);
    }
    run.outcomes.push(m);
    m
}

/// Executes one gate block. Block-placed noise is applied once after the
/// ideal steps. For three Clifford angles the Pauli frame is updated.
pub fn run_gate_block<R: Rng + ?Sized>(
    run: &mut WireRun,
    angles: &[f64],
    noise: &NoiseModel,
    instrument: &InstrumentConfig,
    rng: &mut R,
    gate: Option<usize>,
) -> Result<Vec<u8>> {
    if angles.is_empty() {
        return Err(invalid("a gate block needs at least one measurement"));
    }
    let outcomes: Vec<u8> = angles.iter().map(|&t| measure_step(run, t, noise, instrument, rng, gate)).collect();
    if noise.placement == Placement::AfterEachGateBlock {
        let ctx = NoiseContext { angles, outcomes: &outcomes, gate };
        run.state = apply(&noise.realize(&ctx), &run.state);
    }
    if let [a, b, c] = *angles {
        if [a, b, c].iter().all(|&t| quarter_turns(t).is_ok()) {
            let m = [outcomes[0], outcomes[1], outcomes[2]];
            run.pauli_frame = update_pauli_frame(run.pauli_frame, [a, b, c], m)?;
        }
    }
    Ok(outcomes)
}

/// Reduces a Pauli (up to phase) to its `(x, z)` exponents.
pub fn pauli_exponents(u: &Unitary2) -> Option<(u8, u8)> {
    [(0, 0), (1, 0), (0, 1), (1, 1)].into_iter().find(|&(x, z)| Unitary2::pauli_xz(x == 1, z == 1) == *u)
}

/// New frame after a Clifford block: the old frame `X^a Z^b` is pushed
/// through the block's ideal gate and combined with the block's byproduct.
pub fn update_pauli_frame(frame: (u8, u8), angles: [f64; 3], m: [u8; 3]) -> Result<(u8, u8)> {
    let mut n = [0u8; 3];
    for (k, &t) in angles.iter().enumerate() {
        n[k] = quarter_turns(t).map_err(|_| invalid(format!("Pauli frame tracking needs Clifford angles, got {t}")))?;
    }
    let ideal = angles_to_clifford(angles)?;
    let old = Unitary2::pauli_xz(frame.0 & 1 == 1, frame.1 & 1 == 1);
    let pushed = ideal * old * ideal.adjoint();
    let (x, z) = pauli_exponents(&pushed).expect("Clifford conjugation maps Paulis to Paulis");
    let (b1, b2) = byproduct_bits(n, m);
    Ok((b1 ^ x, b2 ^ z))
}

/// Unitary that undoes a Pauli frame before the final X-basis measurement.
pub fn frame_correction(frame: (u8, u8)) -> Unitary2 {
    Unitary2::pauli_xz(frame.0 & 1 == 1, frame.1 & 1 == 1).adjoint()
}

/// Survival probability of the final measurement: rotate by `basis`, apply
/// the inverse-step noise, then project with `effect`.
pub fn survival_probability(state: &State, basis: &Unitary2, noise_inv: &Channel, effect: &Effect) -> f64 {
    let c = compose(noise_inv, &channel_from_unitary(basis));
    measure(effect, &apply(&c, state))
}

/// Samples the final measurement; returns 1 for survival.
pub fn final_measurement<R: Rng + ?Sized>(
    run: &WireRun,
    basis: &Unitary2,
    noise_inv: &Channel,
    effect: &Effect,
    rng: &mut R,
) -> u8 {
    u8::from(rng.gen_bool(survival_probability(&run.state, basis, noise_inv, effect)))
}

/// Exact probability of every effective outcome string of length `q`,
/// indexed with the first outcome as the most significant bit.
pub fn effective_outcome_distribution(q: usize, instrument: &InstrumentConfig) -> Vec<f64> {
    let p1 = 0.5 + instrument.bias;
    let raw = |bit: u8| if bit == 1 { p1 } else { 1.0 - p1 };
    let step = |m: u8| {
        if instrument.inject_randomness {
            0.5 * raw(m) + 0.5 * raw(m ^ 1)
        } else {
            raw(m)
        }
    };
    (0..1usize << q).map(|idx| (0..q).map(|k| step(((idx >> (q - 1 - k)) & 1) as u8)).product()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::depolarizing;
    use crate::rng::stream;
    use std::f64::consts::FRAC_PI_2;

    fn outcome_rng() -> crate::rng::StreamRng {
        stream(42, 0, 0, 0)
    }

    #[test]
    fn zero_angle_step_maps_plus_to_zero() {
        let mut rng = outcome_rng();
        loop {
            let mut run = WireRun::new(State::plus(), 42);
            let m = measure_step(&mut run, 0.0, &NoiseModel::none(), &InstrumentConfig::default(), &mut rng, None);
            if m == 0 {
                assert!((run.state.vector() - State::zero().vector()).abs().max() < 1e-12);
                break;
            }
        }
    }

    #[test]
    fn outcome_one_adds_x() {
        let theta = 0.7;
        let s0 = apply(&channel_from_unitary(&step_unitary(theta, 0)), &State::plus());
        let s1 = apply(&channel_from_unitary(&step_unitary(theta, 1)), &State::plus());
        let x = channel_from_unitary(&Unitary2::x());
        assert!((apply(&x, &s0).vector() - s1.vector()).abs().max() < 1e-12);
    }

    #[test]
    fn hadamard_block_and_frame() {
        let mut rng = outcome_rng();
        for _ in 0..50 {
            let mut run = WireRun::new(State::plus(), 0);
            let m =
                run_gate_block(&mut run, &[0.0; 3], &NoiseModel::none(), &InstrumentConfig::default(), &mut rng, None)
                    .unwrap();
            let frame = Unitary2::pauli_xz(run.pauli_frame.0 == 1, run.pauli_frame.1 == 1);
            assert_eq!(run.logical, frame * Unitary2::h(), "outcomes {m:?}");
        }
    }

    #[test]
    fn frame_examples() {
        assert_eq!(update_pauli_frame((0, 0), [0.0; 3], [0, 0, 0]).unwrap(), (0, 0));
        assert_eq!(update_pauli_frame((0, 0), [0.0; 3], [1, 0, 0]).unwrap(), (1, 0));
        assert!(update_pauli_frame((0, 0), [0.3, 0.0, 0.0], [0, 0, 0]).is_err());
        // H maps an incoming X frame to Z.
        assert_eq!(update_pauli_frame((1, 0), [0.0; 3], [0, 0, 0]).unwrap(), (0, 1));
    }

    #[test]
    fn per_step_depolarizing_block() {
        let mut rng = outcome_rng();
        let noise = NoiseModel::depolarizing_per_step(0.9).unwrap();
        let mut run = WireRun::new(State::plus(), 0);
        run_gate_block(&mut run, &[0.0; 3], &noise, &InstrumentConfig::default(), &mut rng, None).unwrap();
        let ideal = apply(&channel_from_unitary(&run.logical), &State::plus());
        let expected = apply(&depolarizing(0.729).unwrap(), &ideal);
        assert!((run.state.vector() - expected.vector()).abs().max() < 1e-12);
    }

    #[test]
    fn final_measurement_probabilities() {
        let e = Effect::plus_projector();
        let id = Channel::identity();
        assert!((survival_probability(&State::plus(), &Unitary2::identity(), &id, &e) - 1.0).abs() < 1e-15);
        let d = depolarizing(0.8).unwrap();
        assert!((survival_probability(&State::plus(), &Unitary2::identity(), &d, &e) - 0.9).abs() < 1e-15);
        let mixed = State::maximally_mixed();
        for b in [Unitary2::h(), Unitary2::p(), Unitary2::y()] {
            assert!((survival_probability(&mixed, &b, &d, &e) - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn outcome_distribution_sums_to_one() {
        let inst = InstrumentConfig::new(0.2, false).unwrap();
        let d = effective_outcome_distribution(3, &inst);
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((d[7] - 0.7f64.powi(3)).abs() < 1e-15);
        assert!(InstrumentConfig::new(0.6, true).is_err());
    }

    #[test]
    fn clifford_angles_detected() {
        let mut rng = outcome_rng();
        let mut run = WireRun::new(State::plus(), 0);
        run_gate_block(
            &mut run,
            &[0.1, 0.2, FRAC_PI_2],
            &NoiseModel::none(),
            &InstrumentConfig::default(),
            &mut rng,
            None,
        )
        .unwrap();
        assert_eq!(run.pauli_frame, (0, 0));
        assert_eq!(run.outcomes.len(), 3);
        assert!(
            run_gate_block(&mut run, &[], &NoiseModel::none(), &InstrumentConfig::default(), &mut rng, None).is_err()
        );
    }
}
