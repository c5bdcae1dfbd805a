//! Exact sequence fidelities by enumeration, and the closed form for
//! gate-independent noise.
//!
//! Enumeration sums survival probabilities over every sequence and, for the
//! measurement-based protocols, every outcome string weighted by its
//! probability. Intermediate states are unnormalized Pauli vectors whose
//! identity component carries the path weight; because everything after a
//! block is linear in the state, paths that agree on the running ideal
//! Clifford product and Pauli frame are merged.

use std::collections::HashMap;

use nalgebra::{Matrix4, Vector4};
use serde::Serialize;

use crate::channel::{channel_from_unitary, compose, Channel, Effect, Unitary2};
use crate::engine::{Protocol, RBConfig, SequenceMode};
use crate::error::{Error, Result};
use crate::gates::{
    clifford_group, clifford_index, coset_reps, derandomized_design, measurement_product, outcome_bits,
    CliffordElement, DESIGN_SIZE, DESIGN_STEPS,
};
use crate::noise::{NoiseContext, NoiseModel, Placement};
use crate::wire::{effective_outcome_distribution, frame_correction, step_unitary, update_pauli_frame};

/// Largest length enumerated for the Clifford-based protocols.
pub const MAX_CLIFFORD_LENGTH: usize = 4;
/// Largest length enumerated for the derandomized protocol.
pub const MAX_DESIGN_LENGTH: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExactFidelity {
    pub length: usize,
    /// Uniform average over all sequences and outcome strings.
    pub enumerated: f64,
    /// `tr[Ẽ D_inv ∘ D_D^s (ψ̃)]` with `D_D` the twirl of the average
    /// per-element noise.
    pub analytic: f64,
    /// Depolarizing parameter of `D_D`.
    pub p: f64,
}

impl ExactFidelity {
    pub fn deviation(&self) -> f64 {
        (self.enumerated - self.analytic).abs()
    }
}

fn weighted_survival(effect: &Effect, v: &Vector4<f64>) -> f64 {
    0.5 * effect.pauli_coefficients().dot(v)
}

/// Noisy channel of one Clifford measurement block with outcomes `m`:
/// ideal steps interleaved with step noise, then block noise.
fn clifford_block_channel(noise: &NoiseModel, g: &CliffordElement, m: [u8; 3]) -> Channel {
    block_channel(noise, &g.angles(), &m, Some(g.index))
}

fn block_channel(noise: &NoiseModel, angles: &[f64], m: &[u8], gate: Option<usize>) -> Channel {
    let mut c = Channel::identity();
    for (&t, &mk) in angles.iter().zip(m) {
        c = compose(&channel_from_unitary(&step_unitary(t, mk)), &c);
        if noise.placement == Placement::AfterEachStep {
            c = compose(&noise.realize(&NoiseContext { angles: &[t], outcomes: &[mk], gate }), &c);
        }
    }
    if noise.placement == Placement::AfterEachGateBlock {
        c = compose(&noise.realize(&NoiseContext { angles, outcomes: m, gate }), &c);
    }
    c
}

fn triple(idx: usize) -> [u8; 3] {
    [((idx >> 2) & 1) as u8, ((idx >> 1) & 1) as u8, (idx & 1) as u8]
}

/// Per-element noise `Ũ ∘ U†` averaged over the gate set with sampling
/// weights, as `(weight, channel)` pairs summed into one PTM.
fn average_noise(parts: impl Iterator<Item = (f64, Channel, Unitary2)>) -> Channel {
    let ptm: Matrix4<f64> =
        parts.map(|(w, noisy, ideal)| compose(&noisy, &channel_from_unitary(&ideal.adjoint())).ptm() * w).sum();
    Channel::from_ptm_unchecked(ptm)
}

fn analytic_value(config: &RBConfig, s: usize, avg_noise: &Channel) -> Result<(f64, f64)> {
    let p = avg_noise.depolarizing_parameter();
    let ps = p.powi(s as i32);
    let decay = Channel::from_ptm_unchecked(Matrix4::from_diagonal(&Vector4::new(1.0, ps, ps, ps)));
    let prep = config.spam.prepared_state()?;
    let effect = config.spam.effect()?;
    let v = compose(&config.inverse_channel(), &decay).ptm() * prep.vector();
    Ok((weighted_survival(&effect, &v), p))
}

/// Exact sequence fidelity at length `s` for the configured protocol, noise
/// and SPAM.
pub fn exact_sequence_fidelity(config: &RBConfig, s: usize) -> Result<ExactFidelity> {
    config.validate()?;
    if s == 0 {
        return Err(crate::error::invalid("sequence length must be at least 1"));
    }
    match config.protocol {
        Protocol::Circuit => exact_circuit(config, s),
        Protocol::CliffordMbqc => exact_clifford_mbqc(config, s),
        Protocol::DerandomizedMbqc => exact_derandomized(config, s),
    }
}

fn check_limit(s: usize, max: usize, what: &str) -> Result<()> {
    if s > max {
        return Err(Error::SizeLimit(format!("{what} enumeration supports s <= {max}, got {s}")));
    }
    Ok(())
}

fn exact_circuit(config: &RBConfig, s: usize) -> Result<ExactFidelity> {
    check_limit(s, MAX_CLIFFORD_LENGTH, "circuit")?;
    let group = clifford_group();
    let w = 1.0 / group.len() as f64;
    let gate_channels: Vec<Channel> = group
        .iter()
        .map(|g| {
            let noise = config.noise.realize(&NoiseContext { gate: Some(g.index), ..Default::default() });
            compose(&noise, &channel_from_unitary(&g.unitary))
        })
        .collect();
    let mut layer: HashMap<usize, Vector4<f64>> = HashMap::from([(0, *config.spam.prepared_state()?.vector())]);
    for _ in 0..s {
        let mut next: HashMap<usize, Vector4<f64>> = HashMap::new();
        for (&prod, v) in &layer {
            for g in group {
                let key = clifford_index(&(g.unitary * group[prod].unitary)).expect("closed");
                *next.entry(key).or_insert_with(Vector4::zeros) += gate_channels[g.index].ptm() * v * w;
            }
        }
        layer = next;
    }
    let effect = config.spam.effect()?;
    let inv_noise = config.inverse_channel();
    let enumerated = layer
        .iter()
        .map(|(&prod, v)| {
            let inv = channel_from_unitary(&group[prod].unitary.adjoint());
            weighted_survival(&effect, &(compose(&inv_noise, &inv).ptm() * v))
        })
        .sum();
    let avg = average_noise(group.iter().zip(&gate_channels).map(|(g, c)| (w, *c, g.unitary)));
    let (analytic, p) = analytic_value(config, s, &avg)?;
    Ok(ExactFidelity { length: s, enumerated, analytic, p })
}

fn exact_clifford_mbqc(config: &RBConfig, s: usize) -> Result<ExactFidelity> {
    check_limit(s, MAX_CLIFFORD_LENGTH, "clifford-mbqc")?;
    let pool: Vec<CliffordElement> = match config.effective_mode() {
        SequenceMode::FullGroup => clifford_group().to_vec(),
        SequenceMode::CosetReps => coset_reps(),
    };
    let group = clifford_group();
    let draw_w = 1.0 / pool.len() as f64;
    let outcome_p = effective_outcome_distribution(3, &config.instrument);

    // Per drawn element and outcome string: noisy block channel, realized
    // ideal unitary and the frame update as a function of the old frame.
    struct Branch {
        weight: f64,
        channel: Channel,
        element: usize,
        angles: [f64; 3],
        m: [u8; 3],
    }
    let mut branches = Vec::with_capacity(pool.len() * 8);
    for g in &pool {
        for (mi, &pm) in outcome_p.iter().enumerate() {
            if pm == 0.0 {
                continue;
            }
            let m = triple(mi);
            branches.push(Branch {
                weight: draw_w * pm,
                channel: clifford_block_channel(&config.noise, g, m),
                element: g.index,
                angles: g.angles(),
                m,
            });
        }
    }

    // Key: (ideal product of drawn elements, Pauli frame).
    type Key = (usize, (u8, u8));
    let mut layer: HashMap<Key, Vector4<f64>> = HashMap::from([((0, (0, 0)), *config.spam.prepared_state()?.vector())]);
    for _ in 0..s {
        let mut next: HashMap<Key, Vector4<f64>> = HashMap::new();
        for (&(prod, frame), v) in &layer {
            for b in &branches {
                let key_prod = clifford_index(&(group[b.element].unitary * group[prod].unitary)).expect("closed");
                let key_frame = update_pauli_frame(frame, b.angles, b.m)?;
                *next.entry((key_prod, key_frame)).or_insert_with(Vector4::zeros) += b.channel.ptm() * v * b.weight;
            }
        }
        layer = next;
    }

    let effect = config.spam.effect()?;
    let inv_noise = config.inverse_channel();
    let mut enumerated = 0.0;
    for (&(prod, frame), v) in &layer {
        let inv = &group[clifford_index(&group[prod].unitary.adjoint()).expect("closed")];
        for (mi, &pm) in outcome_p.iter().enumerate() {
            if pm == 0.0 {
                continue;
            }
            let m = triple(mi);
            let ideal_block = channel_from_unitary(&measurement_product(&inv.angles(), &m));
            let final_frame = update_pauli_frame(frame, inv.angles(), m)?;
            let readout = compose(&inv_noise, &channel_from_unitary(&frame_correction(final_frame)));
            enumerated += pm * weighted_survival(&effect, &(compose(&readout, &ideal_block).ptm() * v));
        }
    }

    let avg = average_noise(branches.iter().map(|b| (b.weight, b.channel, measurement_product(&b.angles, &b.m))));
    let (analytic, p) = analytic_value(config, s, &avg)?;
    Ok(ExactFidelity { length: s, enumerated, analytic, p })
}

fn exact_derandomized(config: &RBConfig, s: usize) -> Result<ExactFidelity> {
    check_limit(s, MAX_DESIGN_LENGTH, "derandomized-mbqc")?;
    let design = derandomized_design(config.design_phis.0, config.design_phis.1)?;
    let outcome_p = effective_outcome_distribution(DESIGN_STEPS, &config.instrument);
    let blocks: Vec<Channel> =
        (0..DESIGN_SIZE).map(|idx| block_channel(&config.noise, &design.angles, &outcome_bits(idx), None)).collect();
    let effect = config.spam.effect()?;
    let inv_noise = config.inverse_channel();

    let mut enumerated = 0.0;
    let mut stack: Vec<(usize, f64, Vector4<f64>, Unitary2)> =
        vec![(0, 1.0, *config.spam.prepared_state()?.vector(), Unitary2::identity())];
    while let Some((depth, w, v, tracked)) = stack.pop() {
        if depth == s {
            let readout = compose(&inv_noise, &channel_from_unitary(&tracked.adjoint()));
            enumerated += w * weighted_survival(&effect, &(readout.ptm() * v));
            continue;
        }
        for idx in 0..DESIGN_SIZE {
            let pm = outcome_p[idx];
            if pm == 0.0 {
                continue;
            }
            stack.push((depth + 1, w * pm, blocks[idx].ptm() * v, design.elements[idx] * tracked));
        }
    }

    let avg = average_noise((0..DESIGN_SIZE).map(|idx| (outcome_p[idx], blocks[idx], design.elements[idx])));
    let (analytic, p) = analytic_value(config, s, &avg)?;
    Ok(ExactFidelity { length: s, enumerated, analytic, p })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseModel;

    fn cfg(protocol: Protocol, noise: NoiseModel) -> RBConfig {
        let mut c = RBConfig::new(protocol, vec![1], 1, 1);
        c.noise = noise;
        c.noise_inv = Some(NoiseModel::none());
        c
    }

    #[test]
    fn noiseless_is_one() {
        for p in [Protocol::Circuit, Protocol::CliffordMbqc, Protocol::DerandomizedMbqc] {
            let e = exact_sequence_fidelity(&cfg(p, NoiseModel::none()), 1).unwrap();
            assert!((e.enumerated - 1.0).abs() < 1e-12, "{p:?}");
            assert!((e.analytic - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn clifford_closed_form_value() {
        let c = cfg(Protocol::Circuit, NoiseModel::depolarizing_per_block(0.9).unwrap());
        let e = exact_sequence_fidelity(&c, 2).unwrap();
        assert!((e.enumerated - 0.905).abs() < 1e-12);
        assert!((e.analytic - 0.905).abs() < 1e-12);
    }

    #[test]
    fn size_limits() {
        let c = cfg(Protocol::CliffordMbqc, NoiseModel::none());
        assert!(matches!(exact_sequence_fidelity(&c, 5), Err(Error::SizeLimit(_))));
        let d = cfg(Protocol::DerandomizedMbqc, NoiseModel::none());
        assert!(matches!(exact_sequence_fidelity(&d, 4), Err(Error::SizeLimit(_))));
    }
}
