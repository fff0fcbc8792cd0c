use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::prob::{Channel, DiscreteTriple, VarSet, PROB_TOL, ZERO_EPS};

/// An information quantity carried in both units; `bits = nats / ln 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoValue {
    pub bits: f64,
    pub nats: f64,
}

impl InfoValue {
    pub const ZERO: InfoValue = InfoValue { bits: 0.0, nats: 0.0 };

    pub fn from_nats(nats: f64) -> InfoValue {
        InfoValue { bits: nats / std::f64::consts::LN_2, nats }
    }

    pub fn from_bits(bits: f64) -> InfoValue {
        InfoValue { bits, nats: bits * std::f64::consts::LN_2 }
    }
}

/// A KL divergence, which may be infinite when supports disagree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KlValue {
    Finite(InfoValue),
    Infinite,
}

impl KlValue {
    pub fn finite(self) -> Option<InfoValue> {
        match self {
            KlValue::Finite(v) => Some(v),
            KlValue::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, KlValue::Infinite)
    }
}

/// xlogy with the 0 log 0 := 0 convention, in nats.
#[inline]
pub(crate) fn xlny(x: f64, y: f64) -> f64 {
    if x < ZERO_EPS {
        0.0
    } else {
        x * y.ln()
    }
}

/// I(A; B | C) for disjoint variable subsets of a discrete triple, in both
/// units. `given = None` or an empty set yields plain mutual information.
pub fn mutual_information(
    dist: &DiscreteTriple,
    a: VarSet,
    b: VarSet,
    given: Option<VarSet>,
) -> Result<InfoValue> {
    let c = given.unwrap_or(VarSet::EMPTY);
    if a.is_empty() || b.is_empty() {
        return Err(invalid("mutual_information needs nonempty argument sets"));
    }
    if a.intersects(b) || a.intersects(c) || b.intersects(c) {
        return Err(invalid("mutual_information arguments must be disjoint"));
    }
    let mac = dist.marginalize(a.union(c));
    let mbc = dist.marginalize(b.union(c));
    let mabc = dist.marginalize(a.union(b).union(c));
    let mc = if c.is_empty() { None } else { Some(dist.marginalize(c)) };
    let mut nats = 0.0;
    for m in 0..dist.km() {
        for x in 0..dist.kx() {
            for y in 0..dist.ky() {
                let p_abc = mabc.at(dist, m, x, y);
                if p_abc < ZERO_EPS {
                    continue;
                }
                let p_ac = mac.at(dist, m, x, y);
                let p_bc = mbc.at(dist, m, x, y);
                let p_c = mc.as_ref().map_or(1.0, |mm| mm.at(dist, m, x, y));
                nats += p_abc * (p_abc * p_c / (p_ac * p_bc)).ln();
            }
        }
    }
    // Each (a,b,c) cell is visited once per dropped-coordinate combination.
    let over: usize = VarSet::ALL
        .vars()
        .filter(|v| !a.union(b).union(c).contains(*v))
        .map(|v| dist.dim(v))
        .product();
    Ok(InfoValue::from_nats(nats / over as f64))
}

/// I(M; X; Y) = I(M; X) - I(M; X | Y). Negative values mean synergy.
pub fn interaction_information(dist: &DiscreteTriple) -> Result<InfoValue> {
    let a = mutual_information(dist, VarSet::M, VarSet::X, None)?;
    let b = mutual_information(dist, VarSet::M, VarSet::X, Some(VarSet::Y))?;
    Ok(InfoValue::from_nats(a.nats - b.nats))
}

/// E_{m ~ prior} KL(p(.|m) || q(.|m)) over matching channels. Infinite when
/// some p-supported entry has q below the support threshold.
pub fn expected_kl(p: &Channel, q: &Channel, prior: &[f64]) -> Result<KlValue> {
    if p.out_size() != q.out_size() || p.in_size() != q.in_size() {
        return Err(invalid("expected_kl needs channels of matching shape"));
    }
    if prior.len() != p.in_size() {
        return Err(invalid(format!(
            "prior has {} entries, channels expect {}",
            prior.len(),
            p.in_size()
        )));
    }
    let s: f64 = prior.iter().sum();
    if (s - 1.0).abs() > PROB_TOL || prior.iter().any(|v| *v < 0.0) {
        return Err(invalid("prior must be a probability vector"));
    }
    let mut nats = 0.0;
    for inp in 0..p.in_size() {
        if prior[inp] < ZERO_EPS {
            continue;
        }
        for out in 0..p.out_size() {
            let pv = p.get(out, inp);
            if pv < ZERO_EPS {
                continue;
            }
            let qv = q.get(out, inp);
            if qv < ZERO_EPS {
                return Ok(KlValue::Infinite);
            }
            nats += prior[inp] * pv * (pv / qv).ln();
        }
    }
    Ok(KlValue::Finite(InfoValue::from_nats(nats)))
}
