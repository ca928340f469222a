//! Transmission / test / partition skeleton of a cheat-sensitive 2-1
//! oblivious transfer, with pluggable sender strategies.
//!
//! One session runs in four phases:
//!
//! 1. Alice prepares `n_states` registers and hands Bob the last subsystem
//!    of each.
//! 2. Every index is tested independently with probability
//!    `test_fraction`. Alice reveals the bit she claims to have sent and Bob
//!    checks his qubit against `|ψ_bit⟩`. One failure aborts the session.
//! 3. Bob measures each untested qubit in the computational basis, giving
//!    `e`. Alice then performs whatever local observation her strategy has.
//! 4. Bob draws a choice bit `c`, fills `R_c` with `set_size` indices where
//!    `e = 1` and `R_{1-c}` with `set_size` indices where `e = 0`, and
//!    announces the pair as `(r0, r1)`. Alice may guess `c`.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{apply_on_subsystem, measure_subsystem, projective_test, Ket, UnitaryMatrix};
use crate::states::{
    correction_unitary, family_of_level, make_phi_prime, make_state, Beta, FamilyTag,
    StateFamily,
};

/// Alice's behaviour for a whole session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Sends `|ψ_b⟩` for uniform `b` and answers tests truthfully.
    #[serde(rename = "honest")]
    HonestAlice,
    /// Sends Bob's half of `|φ′⟩` and corrects tested indices.
    #[serde(rename = "epr")]
    EprAlice,
    /// Sends `|ψ′_s⟩` directly, with no entanglement, and reveals `s`.
    #[serde(rename = "naive")]
    NaiveCheatAlice,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::HonestAlice => "honest",
            Mode::EprAlice => "epr",
            Mode::NaiveCheatAlice => "naive",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "honest" => Ok(Mode::HonestAlice),
            "epr" => Ok(Mode::EprAlice),
            "naive" => Ok(Mode::NaiveCheatAlice),
            other => Err(Error::InvalidParams(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub beta: Beta,
    /// Number of transmitted indices.
    pub n_states: usize,
    /// Per-index test probability.
    pub test_fraction: f64,
    /// Size of each announced set.
    pub set_size: usize,
    pub mode: Mode,
    pub seed: u64,
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 {
            return Err(Error::InvalidParams("n_states must be positive".into()));
        }
        if !(self.test_fraction >= 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidParams(format!(
                "test_fraction must lie in [0, 1), got {}",
                self.test_fraction
            )));
        }
        if self.set_size == 0 {
            return Err(Error::InvalidParams("set_size must be positive".into()));
        }
        let expected_untested = self.n_states as f64 * (1.0 - self.test_fraction);
        if expected_untested < 2.0 * self.set_size as f64 {
            return Err(Error::InvalidParams(format!(
                "expected untested count {expected_untested} is below 2 * set_size = {}",
                2 * self.set_size
            )));
        }
        Ok(())
    }
}

/// What Alice put into the channel at one index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preparation {
    Family(StateFamily),
    /// Bob's half of `|φ′⟩`; the family is fixed only by Alice's later
    /// measurement.
    EprAttack,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexRecord {
    pub index: usize,
    pub prepared: Preparation,
    pub tested: bool,
    pub revealed_bit: Option<u8>,
    pub test_passed: Option<bool>,
    pub e_outcome: Option<u8>,
    pub alice_observation: Option<StateFamily>,
}

impl IndexRecord {
    /// Family Alice knows this index carries, if any.
    pub fn known_family(&self) -> Option<StateFamily> {
        match (self.alice_observation, self.prepared) {
            (Some(f), _) => Some(f),
            (None, Preparation::Family(f)) => Some(f),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub records: Vec<IndexRecord>,
    pub bob_choice: Option<u8>,
    pub r0: Vec<usize>,
    pub r1: Vec<usize>,
    pub alice_guess: Option<u8>,
    /// Some tested index failed.
    pub aborted: bool,
    /// Too few `e = 0` or `e = 1` indices to fill both sets; the session
    /// should be rerun on a fresh stream.
    pub insufficient_pool: bool,
}

impl Transcript {
    pub fn completed(&self) -> bool {
        !self.aborted && !self.insufficient_pool
    }

    pub fn tests_run(&self) -> usize {
        self.records.iter().filter(|r| r.test_passed.is_some()).count()
    }

    pub fn tests_passed(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.test_passed == Some(true))
            .count()
    }

    /// Indices of the set labelled by Bob's choice and of the other set.
    pub fn chosen_and_other(&self) -> Option<(&[usize], &[usize])> {
        match self.bob_choice? {
            0 => Some((&self.r0, &self.r1)),
            _ => Some((&self.r1, &self.r0)),
        }
    }
}

/// Sender behaviour. The joint ket passed around always has Bob's qubit as
/// its last subsystem.
pub trait AliceStrategy {
    fn prepare(&mut self, index: usize, rng: &mut dyn RngCore) -> Result<(Preparation, Ket)>;

    /// Returns the revealed bit and the joint state after any local action.
    fn answer_test(&mut self, index: usize, joint: &Ket, rng: &mut dyn RngCore)
        -> Result<(u8, Ket)>;

    /// Local observation after Bob's measurements.
    fn observe(
        &mut self,
        index: usize,
        joint: &Ket,
        rng: &mut dyn RngCore,
    ) -> Result<Option<StateFamily>>;

    fn guess_choice(
        &mut self,
        r0: &[usize],
        r1: &[usize],
        rng: &mut dyn RngCore,
    ) -> Result<Option<u8>>;
}

fn random_bit(rng: &mut dyn RngCore) -> u8 {
    rng.random_bool(0.5) as u8
}

/// Sends `|ψ_b⟩`, keeps no ancilla and never guesses.
#[derive(Debug, Clone)]
pub struct HonestAlice {
    beta: Beta,
    bits: BTreeMap<usize, u8>,
}

impl HonestAlice {
    pub fn new(beta: Beta) -> Self {
        HonestAlice {
            beta,
            bits: BTreeMap::new(),
        }
    }
}

impl AliceStrategy for HonestAlice {
    fn prepare(&mut self, index: usize, rng: &mut dyn RngCore) -> Result<(Preparation, Ket)> {
        let bit = random_bit(rng);
        self.bits.insert(index, bit);
        let family = StateFamily::new(FamilyTag::Honest, bit)?;
        Ok((Preparation::Family(family), make_state(family, self.beta)))
    }

    fn answer_test(&mut self, index: usize, joint: &Ket, _: &mut dyn RngCore) -> Result<(u8, Ket)> {
        let bit = self.bits[&index];
        Ok((bit, joint.clone()))
    }

    fn observe(&mut self, _: usize, _: &Ket, _: &mut dyn RngCore) -> Result<Option<StateFamily>> {
        Ok(None)
    }

    fn guess_choice(&mut self, _: &[usize], _: &[usize], _: &mut dyn RngCore) -> Result<Option<u8>> {
        Ok(None)
    }
}

/// Sends `|ψ′_s⟩` without entanglement and reveals `s` when tested.
#[derive(Debug, Clone)]
pub struct NaiveCheatAlice {
    beta: Beta,
    sent: BTreeMap<usize, StateFamily>,
}

impl NaiveCheatAlice {
    pub fn new(beta: Beta) -> Self {
        NaiveCheatAlice {
            beta,
            sent: BTreeMap::new(),
        }
    }
}

impl AliceStrategy for NaiveCheatAlice {
    fn prepare(&mut self, index: usize, rng: &mut dyn RngCore) -> Result<(Preparation, Ket)> {
        let family = StateFamily::new(FamilyTag::Prime, random_bit(rng))?;
        self.sent.insert(index, family);
        Ok((Preparation::Family(family), make_state(family, self.beta)))
    }

    fn answer_test(&mut self, index: usize, joint: &Ket, _: &mut dyn RngCore) -> Result<(u8, Ket)> {
        Ok((self.sent[&index].sign_bit(), joint.clone()))
    }

    fn observe(&mut self, index: usize, _: &Ket, _: &mut dyn RngCore) -> Result<Option<StateFamily>> {
        Ok(self.sent.get(&index).copied())
    }

    fn guess_choice(
        &mut self,
        r0: &[usize],
        r1: &[usize],
        rng: &mut dyn RngCore,
    ) -> Result<Option<u8>> {
        alice_infer_choice(&self.sent, r0, r1, rng).map(Some)
    }
}

/// Entanglement-based attacker: sends Bob's half of `|φ′⟩`, rotates tested
/// indices onto the honest purification and measures the rest.
#[derive(Debug, Clone)]
pub struct EprAlice {
    correction: UnitaryMatrix,
    observations: BTreeMap<usize, StateFamily>,
    beta: Beta,
}

impl EprAlice {
    pub fn new(beta: Beta) -> Result<Self> {
        Ok(EprAlice {
            correction: correction_unitary(beta)?,
            observations: BTreeMap::new(),
            beta,
        })
    }
}

impl AliceStrategy for EprAlice {
    fn prepare(&mut self, _: usize, _: &mut dyn RngCore) -> Result<(Preparation, Ket)> {
        Ok((Preparation::EprAttack, epr_prepare(self.beta)))
    }

    fn answer_test(&mut self, _: usize, joint: &Ket, rng: &mut dyn RngCore) -> Result<(u8, Ket)> {
        answer_with_correction(&self.correction, joint, rng)
    }

    fn observe(
        &mut self,
        index: usize,
        joint: &Ket,
        rng: &mut dyn RngCore,
    ) -> Result<Option<StateFamily>> {
        let family = epr_observe(joint, rng)?;
        self.observations.insert(index, family);
        Ok(Some(family))
    }

    fn guess_choice(
        &mut self,
        r0: &[usize],
        r1: &[usize],
        rng: &mut dyn RngCore,
    ) -> Result<Option<u8>> {
        alice_infer_choice(&self.observations, r0, r1, rng).map(Some)
    }
}

/// Joint attack state; Alice keeps subsystem 0, Bob receives subsystem 1.
pub fn epr_prepare(beta: Beta) -> Ket {
    make_phi_prime(beta)
}

fn answer_with_correction(
    correction: &UnitaryMatrix,
    joint: &Ket,
    rng: &mut dyn RngCore,
) -> Result<(u8, Ket)> {
    let rotated = apply_on_subsystem(correction, 0, joint)?;
    let m = measure_subsystem(&rotated, 0, rng)?;
    match m.outcome {
        0 | 1 => Ok((m.outcome as u8, m.post_state)),
        level => Err(Error::Invariant(format!(
            "corrected attack register collapsed to level {level}"
        ))),
    }
}

/// Rotates Alice's register onto the honest purification and measures it;
/// the outcome is the bit to reveal.
pub fn epr_answer_test<R: RngCore>(joint: &Ket, beta: Beta, rng: &mut R) -> Result<(u8, Ket)> {
    answer_with_correction(&correction_unitary(beta)?, joint, rng)
}

/// Measures Alice's four-level register: levels 0, 1 mean `ψ′`, levels
/// 2, 3 mean `ψ″`.
pub fn epr_observe<R: RngCore + ?Sized>(joint: &Ket, rng: &mut R) -> Result<StateFamily> {
    let m = measure_subsystem(joint, 0, rng)?;
    family_of_level(m.outcome)
}

/// Projective test of Bob's register (subsystem `target` of `state`)
/// against `|ψ_revealed⟩`.
pub fn bob_test<R: RngCore + ?Sized>(
    state: &Ket,
    target: usize,
    revealed_bit: u8,
    beta: Beta,
    rng: &mut R,
) -> Result<(bool, Ket)> {
    let reference = make_state(StateFamily::new(FamilyTag::Honest, revealed_bit)?, beta);
    projective_test(state, target, &reference, rng)
}

/// Draws `R_c` from the `e = 1` indices and `R_{1-c}` from the `e = 0`
/// indices, `set_size` each, and returns them as `(r0, r1)` with sorted
/// contents.
pub fn bob_partition<R: RngCore + ?Sized>(
    e_outcomes: &BTreeMap<usize, u8>,
    choice: u8,
    set_size: usize,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if choice > 1 {
        return Err(Error::InvalidBit(choice));
    }
    let ones: Vec<usize> = e_outcomes.iter().filter(|(_, &e)| e == 1).map(|(&i, _)| i).collect();
    let zeros: Vec<usize> = e_outcomes.iter().filter(|(_, &e)| e == 0).map(|(&i, _)| i).collect();
    if ones.len() < set_size || zeros.len() < set_size {
        return Err(Error::InsufficientPool {
            needed: set_size,
            ones: ones.len(),
            zeros: zeros.len(),
        });
    }
    let mut draw = |pool: &[usize]| {
        let mut set: Vec<usize> = sample(&mut *rng, pool.len(), set_size)
            .into_iter()
            .map(|k| pool[k])
            .collect();
        set.sort_unstable();
        set
    };
    let chosen = draw(&ones);
    let other = draw(&zeros);
    Ok(if choice == 0 {
        (chosen, other)
    } else {
        (other, chosen)
    })
}

/// Guesses the label of the set holding more `ψ′` indices; ties are broken
/// uniformly at random.
pub fn alice_infer_choice<R: RngCore + ?Sized>(
    observations: &BTreeMap<usize, StateFamily>,
    r0: &[usize],
    r1: &[usize],
    rng: &mut R,
) -> Result<u8> {
    let prime_count = |set: &[usize]| -> Result<usize> {
        set.iter().try_fold(0, |acc, i| {
            let family = observations.get(i).ok_or(Error::MissingObservation(*i))?;
            Ok(acc + usize::from(family.tag() == FamilyTag::Prime))
        })
    };
    let (c0, c1) = (prime_count(r0)?, prime_count(r1)?);
    Ok(match c0.cmp(&c1) {
        std::cmp::Ordering::Greater => 0,
        std::cmp::Ordering::Less => 1,
        std::cmp::Ordering::Equal => rng.random_bool(0.5) as u8,
    })
}

fn strategy_for(params: &ProtocolParams) -> Result<Box<dyn AliceStrategy>> {
    Ok(match params.mode {
        Mode::HonestAlice => Box::new(HonestAlice::new(params.beta)),
        Mode::NaiveCheatAlice => Box::new(NaiveCheatAlice::new(params.beta)),
        Mode::EprAlice => Box::new(EprAlice::new(params.beta)?),
    })
}

/// Runs one session with the strategy selected by `params.mode`.
pub fn run_session<R: RngCore>(params: &ProtocolParams, rng: &mut R) -> Result<Transcript> {
    params.validate()?;
    let mut alice = strategy_for(params)?;
    run_session_with(params, alice.as_mut(), rng)
}

/// Runs one session against an arbitrary strategy. `params.mode` is
/// ignored.
pub fn run_session_with(
    params: &ProtocolParams,
    alice: &mut dyn AliceStrategy,
    rng: &mut dyn RngCore,
) -> Result<Transcript> {
    params.validate()?;
    let n = params.n_states;

    let mut joints = Vec::with_capacity(n);
    let mut records = Vec::with_capacity(n);
    for index in 0..n {
        let (prepared, joint) = alice.prepare(index, rng)?;
        joints.push(joint);
        records.push(IndexRecord {
            index,
            prepared,
            tested: false,
            revealed_bit: None,
            test_passed: None,
            e_outcome: None,
            alice_observation: None,
        });
    }
    for record in &mut records {
        record.tested = rng.random_bool(params.test_fraction);
    }

    let mut transcript = Transcript {
        records,
        bob_choice: None,
        r0: Vec::new(),
        r1: Vec::new(),
        alice_guess: None,
        aborted: false,
        insufficient_pool: false,
    };

    for (index, slot) in joints.iter_mut().enumerate() {
        if !transcript.records[index].tested {
            continue;
        }
        let (bit, joint) = alice.answer_test(index, slot, rng)?;
        let bob = joint.dims().len() - 1;
        let (passed, joint) = bob_test(&joint, bob, bit, params.beta, rng)?;
        *slot = joint;
        let record = &mut transcript.records[index];
        record.revealed_bit = Some(bit);
        record.test_passed = Some(passed);
        if !passed {
            transcript.aborted = true;
            return Ok(transcript);
        }
    }

    let mut e_outcomes = BTreeMap::new();
    for (index, joint) in joints.iter().enumerate() {
        if transcript.records[index].tested {
            continue;
        }
        let bob = joint.dims().len() - 1;
        let m = measure_subsystem(joint, bob, rng)?;
        let e = m.outcome as u8;
        e_outcomes.insert(index, e);
        let observation = alice.observe(index, &m.post_state, rng)?;
        let record = &mut transcript.records[index];
        record.e_outcome = Some(e);
        record.alice_observation = observation;
    }

    let choice = random_bit(rng);
    transcript.bob_choice = Some(choice);
    match bob_partition(&e_outcomes, choice, params.set_size, rng) {
        Ok((r0, r1)) => {
            transcript.r0 = r0;
            transcript.r1 = r1;
        }
        Err(Error::InsufficientPool { .. }) => {
            transcript.insufficient_pool = true;
            return Ok(transcript);
        }
        Err(e) => return Err(e),
    }
    transcript.alice_guess = alice.guess_choice(&transcript.r0, &transcript.r1, rng)?;
    Ok(transcript)
}
