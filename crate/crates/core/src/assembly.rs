//! Assembly of the four decomposition atoms from a redundancy value and the
//! three mutual informations, plus the consistency checks every method must
//! satisfy.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::prob::{gaussian_mi, mutual_information, DiscreteTriple, GaussianTriple, InfoValue, VarSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Delta,
    Broja,
    Lambda,
    Ipid,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Delta => "delta",
            Method::Broja => "broja",
            Method::Lambda => "lambda",
            Method::Ipid => "ipid",
        }
    }
}

/// The decomposition atoms plus the totals they must reproduce. Raw solver
/// output is preserved: tiny negatives are not clamped here.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PidAtoms {
    pub method: Method,
    pub ui_x: InfoValue,
    pub ui_y: InfoValue,
    pub ri: InfoValue,
    pub si: InfoValue,
    pub i_mx: InfoValue,
    pub i_my: InfoValue,
    pub i_mxy: InfoValue,
}

/// Fills the remaining atoms from the redundancy: the two marginal identities
/// and the total then hold by construction.
pub fn assemble_from_ri(
    method: Method,
    i_mx: InfoValue,
    i_my: InfoValue,
    i_mxy: InfoValue,
    ri: InfoValue,
) -> PidAtoms {
    let ui_x = InfoValue::from_nats(i_mx.nats - ri.nats);
    let ui_y = InfoValue::from_nats(i_my.nats - ri.nats);
    let si = InfoValue::from_nats(i_mxy.nats - ui_x.nats - ui_y.nats - ri.nats);
    PidAtoms { method, ui_x, ui_y, ri, si, i_mx, i_my, i_mxy }
}

/// Residuals of the three defining identities against freshly computed
/// mutual informations, in bits, plus the smallest atom.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub residual_total: f64,
    pub residual_x: f64,
    pub residual_y: f64,
    pub min_atom_bits: f64,
}

impl ValidationReport {
    pub fn max_residual(&self) -> f64 {
        self.residual_total.max(self.residual_x).max(self.residual_y)
    }
}

fn validate_against(atoms: &PidAtoms, i_mx: f64, i_my: f64, i_mxy: f64) -> ValidationReport {
    let sum = atoms.ui_x.bits + atoms.ui_y.bits + atoms.ri.bits + atoms.si.bits;
    ValidationReport {
        residual_total: (sum - i_mxy).abs(),
        residual_x: (atoms.ui_x.bits + atoms.ri.bits - i_mx).abs(),
        residual_y: (atoms.ui_y.bits + atoms.ri.bits - i_my).abs(),
        min_atom_bits: atoms
            .ui_x
            .bits
            .min(atoms.ui_y.bits)
            .min(atoms.ri.bits)
            .min(atoms.si.bits),
    }
}

pub fn validate(atoms: &PidAtoms, dist: &DiscreteTriple) -> Result<ValidationReport> {
    let i_mx = mutual_information(dist, VarSet::M, VarSet::X, None)?;
    let i_my = mutual_information(dist, VarSet::M, VarSet::Y, None)?;
    let i_mxy = mutual_information(dist, VarSet::M, VarSet::XY, None)?;
    Ok(validate_against(atoms, i_mx.bits, i_my.bits, i_mxy.bits))
}

pub fn validate_gaussian(atoms: &PidAtoms, g: &GaussianTriple) -> Result<ValidationReport> {
    let i_mx = gaussian_mi(g, VarSet::M, VarSet::X, None)?;
    let i_my = gaussian_mi(g, VarSet::M, VarSet::Y, None)?;
    let i_mxy = gaussian_mi(g, VarSet::M, VarSet::XY, None)?;
    Ok(validate_against(atoms, i_mx.bits, i_my.bits, i_mxy.bits))
}

/// Display-side clamp: negatives beyond numerical dust are preserved.
pub fn clamp_atom(bits: f64) -> f64 {
    if bits < 0.0 && bits > -1e-6 {
        0.0
    } else {
        bits
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn assembled_atoms_satisfy_identities() {
        let d = corpus::and_gate();
        let i_mx = mutual_information(&d, VarSet::M, VarSet::X, None).unwrap();
        let i_my = mutual_information(&d, VarSet::M, VarSet::Y, None).unwrap();
        let i_mxy = mutual_information(&d, VarSet::M, VarSet::XY, None).unwrap();
        let atoms = assemble_from_ri(Method::Delta, i_mx, i_my, i_mxy, i_mx);
        let report = validate(&atoms, &d).unwrap();
        assert!(report.max_residual() < 1e-12);
        assert!((atoms.ui_x.bits - 0.0).abs() < 1e-12);
        assert!((atoms.si.bits - 0.5).abs() < 1e-12);
    }

    #[test]
    fn clamp_preserves_real_negatives() {
        assert_eq!(clamp_atom(-1e-9), 0.0);
        assert_eq!(clamp_atom(-1e-3), -1e-3);
        assert_eq!(clamp_atom(0.25), 0.25);
    }
}
