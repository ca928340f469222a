//! The single-qubit state families, their two purifications and the
//! Alice-side unitary relating them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{
    apply_on_subsystem, complete_to_unitary, partial_trace, reduced_eigenbasis,
    schmidt_in_basis, Ket, UnitaryMatrix, C64,
};

/// Bias parameter of the transmitted states, restricted to `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Beta(f64);

impl Beta {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 && value <= 1.0 {
            Ok(Beta(value))
        } else {
            Err(Error::BetaOutOfRange(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `{0.01, 0.02, .., 0.99}`.
    pub fn default_grid() -> Vec<Beta> {
        (1..=99).map(|k| Beta(k as f64 / 100.0)).collect()
    }
}

impl TryFrom<f64> for Beta {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Beta::new(value)
    }
}

impl From<Beta> for f64 {
    fn from(b: Beta) -> f64 {
        b.0
    }
}

impl fmt::Display for Beta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    /// `|1⟩` weight β/2.
    Honest,
    /// `|1⟩` weight 3β/4.
    Prime,
    /// `|1⟩` weight β/4.
    DoublePrime,
}

impl FamilyTag {
    pub const ALL: [FamilyTag; 3] = [FamilyTag::Honest, FamilyTag::Prime, FamilyTag::DoublePrime];

    /// Born weight of `|1⟩` for this family.
    pub fn one_weight(self, beta: Beta) -> f64 {
        let b = beta.value();
        match self {
            FamilyTag::Honest => b / 2.0,
            FamilyTag::Prime => 3.0 * b / 4.0,
            FamilyTag::DoublePrime => b / 4.0,
        }
    }
}

/// One of the six kets: a family tag plus the sign of the `|1⟩` amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StateFamily {
    tag: FamilyTag,
    sign_bit: u8,
}

impl StateFamily {
    pub fn new(tag: FamilyTag, sign_bit: u8) -> Result<Self> {
        if sign_bit > 1 {
            return Err(Error::InvalidBit(sign_bit));
        }
        Ok(StateFamily { tag, sign_bit })
    }

    pub fn tag(self) -> FamilyTag {
        self.tag
    }

    pub fn sign_bit(self) -> u8 {
        self.sign_bit
    }
}

/// `√(1-w)|0⟩ + (-1)^s √w |1⟩` with `w` set by the family tag.
pub fn make_state(family: StateFamily, beta: Beta) -> Ket {
    let w = family.tag.one_weight(beta);
    let sign = if family.sign_bit == 0 { 1.0 } else { -1.0 };
    Ket::from_real(&[(1.0 - w).sqrt(), sign * w.sqrt()])
        .expect("family states are unit vectors for beta in (0, 1]")
}

/// Probability that a computational-basis measurement of the family's
/// state yields 1.
pub fn prob_e1(family: StateFamily, beta: Beta) -> f64 {
    family.tag.one_weight(beta)
}

fn family(tag: FamilyTag, sign_bit: u8) -> StateFamily {
    StateFamily { tag, sign_bit }
}

fn branch_superposition(branches: &[StateFamily], beta: Beta) -> Ket {
    let scale = 1.0 / (branches.len() as f64).sqrt();
    let amplitudes = branches
        .iter()
        .flat_map(|&f| make_state(f, beta).amplitudes().to_vec())
        .map(|z| z * scale)
        .collect();
    Ket::normalized(amplitudes, vec![branches.len(), 2]).expect("non-empty branch list")
}

/// Honest purification `(|0⟩|ψ₀⟩ + |1⟩|ψ₁⟩)/√2`; subsystem 0 is Alice,
/// subsystem 1 is Bob.
pub fn make_phi(beta: Beta) -> Ket {
    branch_superposition(
        &[family(FamilyTag::Honest, 0), family(FamilyTag::Honest, 1)],
        beta,
    )
}

/// Attack state `(|0⟩|ψ′₀⟩ + |1⟩|ψ′₁⟩ + |2⟩|ψ″₀⟩ + |3⟩|ψ″₁⟩)/2` with a
/// four-level Alice register.
pub fn make_phi_prime(beta: Beta) -> Ket {
    branch_superposition(
        &[
            family(FamilyTag::Prime, 0),
            family(FamilyTag::Prime, 1),
            family(FamilyTag::DoublePrime, 0),
            family(FamilyTag::DoublePrime, 1),
        ],
        beta,
    )
}

/// Alice-register level of `|φ′⟩` holding the given family.
pub fn attack_level(family: StateFamily) -> Option<usize> {
    match family.tag {
        FamilyTag::Honest => None,
        FamilyTag::Prime => Some(family.sign_bit as usize),
        FamilyTag::DoublePrime => Some(2 + family.sign_bit as usize),
    }
}

/// Inverse of [`attack_level`].
pub fn family_of_level(level: usize) -> Result<StateFamily> {
    match level {
        0 | 1 => Ok(family(FamilyTag::Prime, level as u8)),
        2 | 3 => Ok(family(FamilyTag::DoublePrime, level as u8 - 2)),
        _ => Err(Error::InvalidSubsystem {
            index: level,
            count: 4,
        }),
    }
}

/// `|φ⟩` with Alice's qubit embedded in levels {0, 1} of a four-level
/// register.
pub fn embed_phi(beta: Beta) -> Ket {
    let phi = make_phi(beta);
    let mut amplitudes = phi.amplitudes().to_vec();
    amplitudes.resize(8, C64::new(0.0, 0.0));
    Ket::new(amplitudes, vec![4, 2]).expect("padding preserves the norm")
}

/// Unitary `U` on Alice's four-level register with `(U ⊗ I)|φ′⟩ =
/// embed(|φ⟩)` up to global phase.
///
/// Both states are expanded over one eigenbasis of Bob's reduced state of
/// `|φ⟩`; since the two reduced states agree, the Alice-side vectors of each
/// expansion are orthonormal families with matching weights, and `U` maps
/// one family onto the other.
pub fn correction_unitary(beta: Beta) -> Result<UnitaryMatrix> {
    let bob_basis: Vec<Ket> = reduced_eigenbasis(&make_phi(beta))?
        .into_iter()
        .map(|(_, v)| v)
        .collect();
    let source = schmidt_in_basis(&make_phi_prime(beta), &bob_basis)?;
    let target = schmidt_in_basis(&embed_phi(beta), &bob_basis)?;
    if source.coefficients.len() != target.coefficients.len()
        || source.basis_b != target.basis_b
    {
        return Err(Error::Invariant(
            "purifications have different Schmidt supports".into(),
        ));
    }
    let from = complete_to_unitary(&source.basis_a, 4)?;
    let to = complete_to_unitary(&target.basis_a, 4)?;
    to.mul(&from.adjoint())
}

/// Max-entry distance between Bob's reduced states of `|φ′⟩` and `|φ⟩`.
pub fn reduced_state_distance(beta: Beta) -> Result<f64> {
    let honest = partial_trace(&make_phi(beta), 1)?;
    let attack = partial_trace(&make_phi_prime(beta), 1)?;
    Ok(attack.max_entry_distance(&honest))
}

/// `1 - |⟨embed(φ)|(U ⊗ I)|φ′⟩|²`.
pub fn correction_fidelity_deficit(beta: Beta) -> Result<f64> {
    let u = correction_unitary(beta)?;
    let corrected = apply_on_subsystem(&u, 0, &make_phi_prime(beta))?;
    Ok((1.0 - embed_phi(beta).fidelity(&corrected)?).max(0.0))
}
