use serde::Serialize;

use crate::error::{Error, Result};
use crate::states::{
    correction_fidelity_deficit, prob_e1, reduced_state_distance, Beta, FamilyTag, StateFamily,
};

/// Bound on the reduced-state distance.
pub const REDUCED_STATE_TOLERANCE: f64 = 1e-12;
/// Bound on `1 - fidelity` after correction.
pub const FIDELITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub beta: f64,
    pub reduced_state_distance: f64,
    pub fidelity_deficit: f64,
    pub ordering_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<IdentityCheck>,
    pub violations: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks, for every β, that Bob's reduced states agree, that the
/// correction unitary reaches the honest purification, and that
/// `P(e=1)` orders the families as `ψ″ < ψ < ψ′`.
pub fn verify_identities(beta_grid: &[Beta]) -> Result<VerificationReport> {
    if beta_grid.is_empty() {
        return Err(Error::InvalidParams("beta grid is empty".into()));
    }
    let mut report = VerificationReport {
        checks: Vec::with_capacity(beta_grid.len()),
        violations: Vec::new(),
    };
    for &beta in beta_grid {
        let p = |tag| prob_e1(StateFamily::new(tag, 0).expect("bit 0"), beta);
        let check = IdentityCheck {
            beta: beta.value(),
            reduced_state_distance: reduced_state_distance(beta)?,
            fidelity_deficit: correction_fidelity_deficit(beta)?,
            ordering_holds: p(FamilyTag::DoublePrime) < p(FamilyTag::Honest)
                && p(FamilyTag::Honest) < p(FamilyTag::Prime),
        };
        if check.reduced_state_distance > REDUCED_STATE_TOLERANCE {
            report.violations.push(format!(
                "beta {}: reduced-state distance {:e}",
                beta, check.reduced_state_distance
            ));
        }
        if check.fidelity_deficit > FIDELITY_TOLERANCE {
            report.violations.push(format!(
                "beta {}: fidelity deficit {:e}",
                beta, check.fidelity_deficit
            ));
        }
        if !check.ordering_holds {
            report
                .violations
                .push(format!("beta {}: e=1 probability ordering fails", beta));
        }
        report.checks.push(check);
    }
    Ok(report)
}
