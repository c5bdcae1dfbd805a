//! The three benchmarking protocols and sequence-fidelity estimates.
//!
//! * `circuit`: Clifford gates applied directly as channels, each followed by
//!   the gate noise, and the inverse applied as one more gate.
//! * `clifford-mbqc`: each Clifford is a three-measurement block. The inverse
//!   is computed as if every outcome were zero and run as a final block; the
//!   accumulated Pauli frame is folded into the final X measurement.
//! * `derandomized-mbqc`: the fixed five-angle pattern is repeated `s` times
//!   and the outcomes select the design elements. The running product is
//!   tracked and undone by rotating the final measurement.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{apply, channel_from_unitary, compose, Channel, Effect, State, Unitary2};
use crate::error::{invalid, Error, Result};
use crate::gates::{
    clifford_group, clifford_index, coset_reps, derandomized_design, outcome_index, CliffordElement,
    DerandomizedDesign, DESIGN_STEPS,
};
use crate::noise::{NoiseContext, NoiseModel};
use crate::rng::{stream, SEQUENCE_SLOT};
use crate::wire::{final_measurement, frame_correction, run_gate_block, InstrumentConfig, SpamConfig, WireRun};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Circuit,
    CliffordMbqc,
    DerandomizedMbqc,
}

impl Protocol {
    /// Measurements per gate block (1 for the circuit model).
    pub fn steps_per_gate(self) -> usize {
        match self {
            Protocol::Circuit => 1,
            Protocol::CliffordMbqc => 3,
            Protocol::DerandomizedMbqc => DESIGN_STEPS,
        }
    }

    /// Cluster length used by a length-`s` sequence, input site included.
    pub fn cluster_length(self, s: usize) -> usize {
        match self {
            Protocol::Circuit => 0,
            Protocol::CliffordMbqc => 3 * s + 4,
            Protocol::DerandomizedMbqc => 5 * s + 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Circuit => "circuit",
            Protocol::CliffordMbqc => "clifford-mbqc",
            Protocol::DerandomizedMbqc => "derandomized-mbqc",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SequenceMode {
    FullGroup,
    #[default]
    CosetReps,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RBConfig {
    pub protocol: Protocol,
    pub lengths: Vec<usize>,
    pub sequences_per_length: usize,
    pub shots_per_sequence: usize,
    pub noise: NoiseModel,
    /// Noise of the inverse step; `None` reuses `noise`.
    pub noise_inv: Option<NoiseModel>,
    pub instrument: InstrumentConfig,
    pub spam: SpamConfig,
    pub seed: u64,
    pub design_phis: (f64, f64),
    /// Draw mode for `clifford-mbqc`; the circuit protocol always draws from
    /// the full group.
    pub sequence_mode: SequenceMode,
}

impl RBConfig {
    pub fn new(
        protocol: Protocol,
        lengths: Vec<usize>,
        sequences_per_length: usize,
        shots_per_sequence: usize,
    ) -> Self {
        Self {
            protocol,
            lengths,
            sequences_per_length,
            shots_per_sequence,
            noise: NoiseModel::none(),
            noise_inv: None,
            instrument: InstrumentConfig::default(),
            spam: SpamConfig::ideal(),
            seed: 0,
            design_phis: (0.0, 0.0),
            sequence_mode: SequenceMode::CosetReps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengths.is_empty() || self.lengths.contains(&0) {
            return Err(invalid("lengths must be nonempty and every length at least 1"));
        }
        if self.sequences_per_length == 0 {
            return Err(invalid("sequences_per_length must be at least 1"));
        }
        if self.shots_per_sequence == 0 {
            return Err(invalid("shots_per_sequence must be at least 1"));
        }
        self.noise.validate()?;
        if let Some(n) = &self.noise_inv {
            n.validate()?;
        }
        self.instrument.validate()?;
        self.spam.validate()?;
        if !self.design_phis.0.is_finite() || !self.design_phis.1.is_finite() {
            return Err(invalid("design phases must be finite"));
        }
        Ok(())
    }

    pub fn inverse_noise(&self) -> &NoiseModel {
        self.noise_inv.as_ref().unwrap_or(&self.noise)
    }

    /// The channel applied with the sequence inverse.
    pub fn inverse_channel(&self) -> Channel {
        self.inverse_noise().block_equivalent(self.protocol.steps_per_gate())
    }

    pub fn effective_mode(&self) -> SequenceMode {
        match self.protocol {
            Protocol::CliffordMbqc => self.sequence_mode,
            _ => SequenceMode::FullGroup,
        }
    }

    /// Conditions under which the protocol's gate set is not sampled
    /// uniformly.
    pub fn warnings(&self) -> Vec<String> {
        let biased = self.instrument.bias != 0.0 && !self.instrument.inject_randomness;
        let mut w = Vec::new();
        if biased && self.protocol == Protocol::DerandomizedMbqc {
            w.push(format!(
                "derandomized design requires equally probable outcomes; bias {} without injection",
                self.instrument.bias
            ));
        }
        if biased && self.protocol == Protocol::CliffordMbqc && self.sequence_mode == SequenceMode::CosetReps {
            w.push(format!(
                "coset sampling relies on uniform outcomes; bias {} without injection",
                self.instrument.bias
            ));
        }
        w
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub length: usize,
    pub index: usize,
    /// Drawn Clifford indices; empty for the derandomized protocol.
    pub sequence: Vec<usize>,
    /// FNV-1a digest of every realized gate index across all shots.
    pub realized_digest: u64,
    pub survivals: u64,
    pub shots: u64,
}

impl SequenceRecord {
    pub fn survival_fraction(&self) -> f64 {
        self.survivals as f64 / self.shots as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RBDataset {
    pub config: RBConfig,
    pub records: Vec<SequenceRecord>,
    pub warnings: Vec<String>,
}

impl RBDataset {
    pub fn lengths(&self) -> Vec<usize> {
        let mut l: Vec<usize> = self.records.iter().map(|r| r.length).collect();
        l.sort_unstable();
        l.dedup();
        l
    }

    pub fn records_at(&self, s: usize) -> impl Iterator<Item = &SequenceRecord> {
        self.records.iter().filter(move |r| r.length == s)
    }
}

/// Draws `s` elements uniformly from the full group or from the coset
/// representatives.
pub fn gen_clifford_sequence<R: Rng + ?Sized>(s: usize, mode: SequenceMode, rng: &mut R) -> Vec<CliffordElement> {
    let pool: Vec<CliffordElement> = match mode {
        SequenceMode::FullGroup => clifford_group().to_vec(),
        SequenceMode::CosetReps => coset_reps(),
    };
    (0..s).map(|_| pool.choose(rng).expect("nonempty pool").clone()).collect()
}

/// `(U_s ⋯ U_1)†` for `realized = [U_1, …, U_s]`.
pub fn sequence_inverse(realized: &[Unitary2]) -> Result<Unitary2> {
    if realized.is_empty() {
        return Err(invalid("sequence inverse of an empty sequence"));
    }
    Ok(realized.iter().fold(Unitary2::identity(), |acc, u| *u * acc).adjoint())
}

/// Outcome of a single shot.
#[derive(Clone, Debug, PartialEq)]
pub struct ShotResult {
    pub survived: bool,
    /// Index of each realized gate: Clifford index for the Clifford
    /// protocols, outcome index for the derandomized one.
    pub realized: Vec<usize>,
    /// Survival probability just before the final sampling.
    pub survival_probability: f64,
}

struct Prepared {
    state: State,
    effect: Effect,
    inverse_channel: Channel,
}

fn prepare(config: &RBConfig) -> Result<Prepared> {
    Ok(Prepared {
        state: config.spam.prepared_state()?,
        effect: config.spam.effect()?,
        inverse_channel: config.inverse_channel(),
    })
}

/// Runs one circuit-model shot for a drawn sequence.
pub fn circuit_shot<R: Rng + ?Sized>(
    config: &RBConfig,
    sequence: &[CliffordElement],
    rng: &mut R,
) -> Result<ShotResult> {
    let prep = prepare(config)?;
    circuit_shot_prepared(config, &prep, sequence, rng)
}

fn circuit_shot_prepared<R: Rng + ?Sized>(
    config: &RBConfig,
    prep: &Prepared,
    sequence: &[CliffordElement],
    rng: &mut R,
) -> Result<ShotResult> {
    let mut state = prep.state;
    for g in sequence {
        let noise = config.noise.realize(&NoiseContext { gate: Some(g.index), ..Default::default() });
        state = apply(&compose(&noise, &channel_from_unitary(&g.unitary)), &state);
    }
    let unitaries: Vec<Unitary2> = sequence.iter().map(|g| g.unitary).collect();
    let inv = sequence_inverse(&unitaries)?;
    state = apply(&compose(&prep.inverse_channel, &channel_from_unitary(&inv)), &state);
    let p = crate::channel::measure(&prep.effect, &state);
    Ok(ShotResult {
        survived: rng.gen_bool(p),
        realized: sequence.iter().map(|g| g.index).collect(),
        survival_probability: p,
    })
}

/// Runs one Clifford-MBQC shot for a drawn sequence.
pub fn clifford_mbqc_shot<R: Rng + ?Sized>(
    config: &RBConfig,
    sequence: &[CliffordElement],
    rng: &mut R,
) -> Result<ShotResult> {
    let prep = prepare(config)?;
    clifford_shot_prepared(config, &prep, sequence, rng, 0)
}

fn clifford_shot_prepared<R: Rng + ?Sized>(
    config: &RBConfig,
    prep: &Prepared,
    sequence: &[CliffordElement],
    rng: &mut R,
    seed: u64,
) -> Result<ShotResult> {
    let mut run = WireRun::new(prep.state, seed);
    let mut realized = Vec::with_capacity(sequence.len());
    for g in sequence {
        let before = run.logical;
        run_gate_block(&mut run, &g.angles(), &config.noise, &config.instrument, rng, Some(g.index))?;
        let block = run.logical * before.adjoint();
        realized.push(clifford_index(&block).expect("Clifford angles give Clifford blocks"));
    }
    let ideal: Vec<Unitary2> = sequence.iter().map(|g| g.unitary).collect();
    let inv = sequence_inverse(&ideal)?;
    let inv_element = &clifford_group()[clifford_index(&inv).expect("Clifford group is closed")];
    run_gate_block(
        &mut run,
        &inv_element.angles(),
        &NoiseModel::none(),
        &config.instrument,
        rng,
        Some(inv_element.index),
    )?;
    let basis = frame_correction(run.pauli_frame);
    let p = crate::wire::survival_probability(&run.state, &basis, &prep.inverse_channel, &prep.effect);
    let survived = final_measurement(&run, &basis, &prep.inverse_channel, &prep.effect, rng) == 1;
    Ok(ShotResult { survived, realized, survival_probability: p })
}

/// Runs one derandomized-MBQC shot of `s` design blocks.
pub fn derandomized_shot<R: Rng + ?Sized>(
    config: &RBConfig,
    design: &DerandomizedDesign,
    s: usize,
    rng: &mut R,
) -> Result<ShotResult> {
    let prep = prepare(config)?;
    derandomized_shot_prepared(config, &prep, design, s, rng, 0)
}

fn derandomized_shot_prepared<R: Rng + ?Sized>(
    config: &RBConfig,
    prep: &Prepared,
    design: &DerandomizedDesign,
    s: usize,
    rng: &mut R,
    seed: u64,
) -> Result<ShotResult> {
    let mut run = WireRun::new(prep.state, seed);
    let mut realized = Vec::with_capacity(s);
    let mut tracked = Unitary2::identity();
    for _ in 0..s {
        let m = run_gate_block(&mut run, &design.angles, &config.noise, &config.instrument, rng, None)?;
        let bits: [u8; DESIGN_STEPS] = m.try_into().expect("design blocks have five steps");
        let idx = outcome_index(bits);
        tracked = design.elements[idx] * tracked;
        realized.push(idx);
    }
    let basis = tracked.adjoint();
    let p = crate::wire::survival_probability(&run.state, &basis, &prep.inverse_channel, &prep.effect);
    let survived = final_measurement(&run, &basis, &prep.inverse_channel, &prep.effect, rng) == 1;
    Ok(ShotResult { survived, realized, survival_probability: p })
}

fn fnv1a(acc: u64, value: u64) -> u64 {
    value.to_le_bytes().iter().fold(acc, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;

fn run_sequence(
    config: &RBConfig,
    prep: &Prepared,
    design: Option<&DerandomizedDesign>,
    s: usize,
    i: usize,
) -> Result<SequenceRecord> {
    let mut seq_rng = stream(config.seed, s as u64, i as u64, SEQUENCE_SLOT);
    let sequence = match config.protocol {
        Protocol::DerandomizedMbqc => Vec::new(),
        _ => gen_clifford_sequence(s, config.effective_mode(), &mut seq_rng),
    };
    let mut survivals = 0u64;
    let mut digest = FNV_OFFSET;
    for shot in 0..config.shots_per_sequence {
        let mut rng = stream(config.seed, s as u64, i as u64, shot as u64);
        let r = match config.protocol {
            Protocol::Circuit => circuit_shot_prepared(config, prep, &sequence, &mut rng)?,
            Protocol::CliffordMbqc => clifford_shot_prepared(config, prep, &sequence, &mut rng, config.seed)?,
            Protocol::DerandomizedMbqc => {
                let d = design.expect("design built for derandomized runs");
                derandomized_shot_prepared(config, prep, d, s, &mut rng, config.seed)?
            }
        };
        survivals += u64::from(r.survived);
        digest = r.realized.iter().fold(digest, |h, &g| fnv1a(h, g as u64));
    }
    Ok(SequenceRecord {
        length: s,
        index: i,
        sequence: sequence.iter().map(|g| g.index).collect(),
        realized_digest: digest,
        survivals,
        shots: config.shots_per_sequence as u64,
    })
}

/// Runs every `(s, i)` work item; items run in parallel and each owns its
/// random streams, so the dataset depends only on the config.
pub fn run_protocol(config: &RBConfig) -> Result<RBDataset> {
    config.validate()?;
    let prep = prepare(config)?;
    let design = match config.protocol {
        Protocol::DerandomizedMbqc => Some(derandomized_design(config.design_phis.0, config.design_phis.1)?),
        _ => None,
    };
    let items: Vec<(usize, usize)> =
        config.lengths.iter().flat_map(|&s| (0..config.sequences_per_length).map(move |i| (s, i))).collect();
    let records = items
        .par_iter()
        .map(|&(s, i)| run_sequence(config, &prep, design.as_ref(), s, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(RBDataset { config: config.clone(), records, warnings: config.warnings() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityPoint {
    pub length: usize,
    pub mean: f64,
    pub stderr: f64,
}

/// Mean survival at `s` and the standard error over sequence means.
pub fn sequence_fidelity_estimate(dataset: &RBDataset, s: usize) -> Result<(f64, f64)> {
    let fractions: Vec<f64> = dataset.records_at(s).map(SequenceRecord::survival_fraction).collect();
    mean_and_stderr(&fractions).ok_or(Error::NotFound(s))
}

pub(crate) fn mean_and_stderr(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    Some((mean, (var / k).sqrt()))
}

/// One point per sequence length, sorted by length.
pub fn fidelity_points(dataset: &RBDataset) -> Vec<FidelityPoint> {
    dataset
        .lengths()
        .into_iter()
        .map(|s| {
            let (mean, stderr) = sequence_fidelity_estimate(dataset, s).expect("length taken from records");
            FidelityPoint { length: s, mean, stderr }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_examples() {
        assert_eq!(sequence_inverse(&[Unitary2::h()]).unwrap(), Unitary2::h());
        let inv = sequence_inverse(&[Unitary2::p(), Unitary2::h()]).unwrap();
        assert_eq!(inv, (Unitary2::h() * Unitary2::p()).adjoint());
        assert!(sequence_inverse(&[]).is_err());
    }

    #[test]
    fn coset_draws_stay_in_t1() {
        let mut rng = stream(1, 0, 0, 0);
        let t1: Vec<usize> = coset_reps().iter().map(|e| e.index).collect();
        for g in gen_clifford_sequence(3, SequenceMode::CosetReps, &mut rng) {
            assert!(t1.contains(&g.index));
        }
        let a: Vec<usize> = gen_clifford_sequence(10, SequenceMode::FullGroup, &mut stream(9, 1, 1, 1))
            .iter()
            .map(|g| g.index)
            .collect();
        let b: Vec<usize> = gen_clifford_sequence(10, SequenceMode::FullGroup, &mut stream(9, 1, 1, 1))
            .iter()
            .map(|g| g.index)
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        let ok = RBConfig::new(Protocol::Circuit, vec![1, 2], 1, 1);
        assert!(ok.validate().is_ok());
        for bad in [
            RBConfig::new(Protocol::Circuit, vec![], 1, 1),
            RBConfig::new(Protocol::Circuit, vec![0], 1, 1),
            RBConfig::new(Protocol::Circuit, vec![1], 0, 1),
            RBConfig::new(Protocol::Circuit, vec![1], 1, 0),
        ] {
            assert!(matches!(run_protocol(&bad), Err(Error::InvalidArgument(_))));
        }
    }

    #[test]
    fn estimate_arithmetic() {
        let mut cfg = RBConfig::new(Protocol::Circuit, vec![1], 2, 10);
        cfg.seed = 3;
        let rec = |index, survivals| SequenceRecord {
            length: 4,
            index,
            sequence: vec![],
            realized_digest: 0,
            survivals,
            shots: 10,
        };
        let ds = RBDataset { config: cfg, records: vec![rec(0, 6), rec(1, 8)], warnings: vec![] };
        let (mean, se) = sequence_fidelity_estimate(&ds, 4).unwrap();
        assert!((mean - 0.7).abs() < 1e-15);
        assert!((se - 0.1).abs() < 1e-12);
        assert_eq!(sequence_fidelity_estimate(&ds, 5), Err(Error::NotFound(5)));
    }

    #[test]
    fn warning_for_biased_design() {
        let mut cfg = RBConfig::new(Protocol::DerandomizedMbqc, vec![1], 1, 1);
        cfg.instrument = InstrumentConfig::new(0.1, false).unwrap();
        assert_eq!(cfg.warnings().len(), 1);
        cfg.instrument.inject_randomness = true;
        assert!(cfg.warnings().is_empty());
    }
}
