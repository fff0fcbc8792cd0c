//! Decision problems on the message: bounded loss tables, Bayes rules, and
//! the audit connecting observed risk gaps to the deficiency bounds.

use crate::blackwell::lecam_deficiency;
use crate::config::{Direction, SolverConfig};
use crate::delta::deficiency;
use crate::error::{invalid, Error, Result};
use crate::prob::{Channel, DiscreteTriple, InfoValue, VarSet, DEGENERATE_EPS};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct LossTable {
    ka: usize,
    km: usize,
    /// values[a * km + m], sup-norm at most one.
    values: Vec<f64>,
}

impl LossTable {
    pub fn new(ka: usize, km: usize, values: Vec<f64>) -> Result<LossTable> {
        if ka == 0 || km == 0 || values.len() != ka * km {
            return Err(invalid("loss table shape mismatch"));
        }
        if values.iter().any(|v| !v.is_finite() || v.abs() > 1.0 + 1e-12) {
            return Err(invalid("loss entries must lie in [-1, 1]"));
        }
        Ok(LossTable { ka, km, values })
    }

    /// 1 - delta(a, m): the estimation loss on a k-symbol message.
    pub fn zero_one(k: usize) -> LossTable {
        let mut values = vec![1.0; k * k];
        for i in 0..k {
            values[i * k + i] = 0.0;
        }
        LossTable { ka: k, km: k, values }
    }

    pub fn random(rng: &mut impl Rng, ka: usize, km: usize) -> LossTable {
        let values = (0..ka * km).map(|_| rng.gen_range(-1.0..1.0)).collect();
        LossTable { ka, km, values }
    }

    pub fn ka(&self) -> usize {
        self.ka
    }

    pub fn km(&self) -> usize {
        self.km
    }

    #[inline]
    pub fn get(&self, a: usize, m: usize) -> f64 {
        self.values[a * self.km + m]
    }
}

/// A stochastic map from observations to actions.
#[derive(Debug, Clone)]
pub struct DecisionRule {
    pub kernel: Channel,
}

fn check_shapes(obs: &Channel, rule: &DecisionRule, loss: &LossTable, prior: &[f64]) -> Result<()> {
    if obs.in_size() != prior.len() || loss.km != prior.len() {
        return Err(invalid("observation channel, loss, and prior disagree on message size"));
    }
    if rule.kernel.in_size() != obs.out_size() || rule.kernel.out_size() != loss.ka {
        return Err(invalid("decision rule shape does not match channel and loss"));
    }
    Ok(())
}

/// E_{M,O} E_{A|O} L(A, M).
pub fn average_risk(
    obs: &Channel,
    rule: &DecisionRule,
    loss: &LossTable,
    prior: &[f64],
) -> Result<f64> {
    check_shapes(obs, rule, loss, prior)?;
    Ok((0..prior.len()).map(|m| prior[m] * message_risk(obs, rule, loss, m)).sum())
}

/// Risk conditioned on M = m; the per-message form entering the Le Cam
/// comparison.
pub fn message_risk(obs: &Channel, rule: &DecisionRule, loss: &LossTable, m: usize) -> f64 {
    let mut r = 0.0;
    for o in 0..obs.out_size() {
        let po = obs.get(o, m);
        if po == 0.0 {
            continue;
        }
        let mut c = 0.0;
        for a in 0..loss.ka {
            c += rule.kernel.get(a, o) * loss.get(a, m);
        }
        r += po * c;
    }
    r
}

#[derive(Debug, Clone)]
pub struct BayesRule {
    pub rule: DecisionRule,
    pub risk: f64,
    /// Observations carrying no probability mass; they get action 0 so the
    /// rule stays total and deterministic.
    pub unreached: Vec<usize>,
}

/// Per observation, the action minimizing posterior expected loss; ties go
/// to the lowest action index.
pub fn bayes_rule(obs: &Channel, loss: &LossTable, prior: &[f64]) -> Result<BayesRule> {
    if obs.in_size() != prior.len() || loss.km != prior.len() {
        return Err(invalid("observation channel, loss, and prior disagree on message size"));
    }
    let (ko, km, ka) = (obs.out_size(), prior.len(), loss.ka);
    let mut kernel = vec![0.0; ka * ko];
    let mut unreached = Vec::new();
    for o in 0..ko {
        let mass: f64 = (0..km).map(|m| prior[m] * obs.get(o, m)).sum();
        let best = if mass < DEGENERATE_EPS {
            unreached.push(o);
            0
        } else {
            let mut best = 0;
            let mut best_cost = f64::INFINITY;
            for a in 0..ka {
                let cost: f64 = (0..km).map(|m| prior[m] * obs.get(o, m) * loss.get(a, m)).sum();
                if cost < best_cost - 1e-15 {
                    best_cost = cost;
                    best = a;
                }
            }
            best
        };
        kernel[best * ko + o] = 1.0;
    }
    let rule = DecisionRule { kernel: Channel::new(ka, ko, kernel)? };
    let risk = average_risk(obs, &rule, loss, prior)?;
    Ok(BayesRule { rule, risk, unreached })
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditRow {
    pub loss_index: usize,
    pub zero_one: bool,
    pub risk_x: f64,
    pub risk_y: f64,
    /// Cap on risk_y - risk_x: g of the deficiency paid to emulate X from Y.
    pub bound_emulate_x: f64,
    /// Cap on risk_x - risk_y.
    pub bound_emulate_y: f64,
    pub violation: f64,
    pub slack: f64,
}

/// Both sides of the per-message Le Cam comparison for one emulation
/// direction: lhs is the worst message-conditional risk increase of the
/// emulation rule, rhs is twice the Le Cam deficiency.
#[derive(Debug, Clone, Serialize)]
pub struct LeCamSide {
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    /// The instantiation used for the risk cap, recorded to fix units.
    pub g_description: &'static str,
    pub n_losses: usize,
    /// delta(M : X \ Y), the cost of emulating X from Y.
    pub delta_xy: InfoValue,
    pub delta_yx: InfoValue,
    /// Worst-case total variation of the best garbling, per direction.
    pub lecam_emulate_y_from_x: f64,
    pub lecam_emulate_x_from_y: f64,
    pub max_violation: f64,
    pub min_slack: f64,
    /// 0-1 loss, observing X with a rule that emulates the Y-side Bayes
    /// rule through the Le Cam witness.
    pub lecam_x_side: LeCamSide,
    pub lecam_y_side: LeCamSide,
    pub rows: Vec<AuditRow>,
}

fn g_cap(z_nats: f64) -> f64 {
    (z_nats.max(0.0) / 2.0).sqrt()
}

/// Samples bounded losses and verifies that Bayes-risk gaps between the two
/// observation sides never exceed g(deficiency), plus the per-message Le Cam
/// form for the 0-1 loss. A violation is a solver or units bug and comes
/// back as an internal error carrying the offending loss.
pub fn risk_gap_audit(
    dist: &DiscreteTriple,
    cfg: &SolverConfig,
    n_losses: usize,
    seed: u64,
) -> Result<AuditReport> {
    if n_losses == 0 {
        return Err(invalid("n_losses must be at least 1"));
    }
    let px = dist.conditional_channel(VarSet::X, VarSet::M)?.channel;
    let py = dist.conditional_channel(VarSet::Y, VarSet::M)?.channel;
    let prior = dist.marginalize(VarSet::M).pmf().to_vec();
    let km = prior.len();

    let (dx, dy) = rayon::join(
        || deficiency(dist, Direction::XMinusY, cfg),
        || deficiency(dist, Direction::YMinusX, cfg),
    );
    let (dx, dy) = (dx?, dy?);
    let lec_y_from_x = lecam_deficiency(&px, &py)?;
    let lec_x_from_y = lecam_deficiency(&py, &px)?;

    let mut rng = crate::corpus::rng(seed);
    let losses: Vec<LossTable> = (0..n_losses)
        .map(|i| if i == 0 { LossTable::zero_one(km) } else { LossTable::random(&mut rng, km, km) })
        .collect();
    let bound_emulate_x = g_cap(dx.value.nats);
    let bound_emulate_y = g_cap(dy.value.nats);

    let rows: Vec<Result<AuditRow>> = losses
        .par_iter()
        .enumerate()
        .map(|(i, loss)| {
            let bx = bayes_rule(&px, loss, &prior)?;
            let by = bayes_rule(&py, loss, &prior)?;
            let v_x = by.risk - bx.risk - bound_emulate_x;
            let v_y = bx.risk - by.risk - bound_emulate_y;
            Ok(AuditRow {
                loss_index: i,
                zero_one: i == 0,
                risk_x: bx.risk,
                risk_y: by.risk,
                bound_emulate_x,
                bound_emulate_y,
                violation: v_x.max(v_y),
                slack: (-v_x).min(-v_y),
            })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;

    let mut max_violation = f64::NEG_INFINITY;
    let mut min_slack = f64::INFINITY;
    for row in &rows {
        if row.violation > 1e-6 {
            let serialized = serde_json::to_string(&losses[row.loss_index])
                .unwrap_or_else(|_| "<unserializable>".into());
            return Err(Error::Internal(format!(
                "risk bound violated by {:.3e} on loss {}",
                row.violation, serialized
            )));
        }
        max_violation = max_violation.max(row.violation);
        min_slack = min_slack.min(row.slack);
    }

    // Per-message comparison under 0-1 loss: the side lacking the other's
    // observation runs the other side's Bayes rule through the garbling.
    let zero_one = &losses[0];
    let bx = bayes_rule(&px, zero_one, &prior)?;
    let by = bayes_rule(&py, zero_one, &prior)?;
    let side = |obs_here: &Channel,
                obs_there: &Channel,
                bayes_there: &BayesRule,
                witness: &Channel,
                lecam: f64|
     -> Result<LeCamSide> {
        let emu = DecisionRule { kernel: bayes_there.rule.kernel.compose(witness)? };
        let mut lhs = f64::NEG_INFINITY;
        for m in 0..km {
            let here = message_risk(obs_here, &emu, zero_one, m);
            let there = message_risk(obs_there, &bayes_there.rule, zero_one, m);
            lhs = lhs.max(here - there);
        }
        Ok(LeCamSide { lhs, rhs: 2.0 * lecam })
    };
    let lecam_x_side = side(&px, &py, &by, &lec_y_from_x.witness, lec_y_from_x.value)?;
    let lecam_y_side = side(&py, &px, &bx, &lec_x_from_y.witness, lec_x_from_y.value)?;
    for (label, s) in [("x", &lecam_x_side), ("y", &lecam_y_side)] {
        if s.lhs > s.rhs + 1e-9 {
            return Err(Error::Internal(format!(
                "per-message Le Cam bound violated on the {label} side: {} > {}",
                s.lhs, s.rhs
            )));
        }
    }

    Ok(AuditReport {
        g_description: "g(z) = sqrt(z / 2), z in nats",
        n_losses,
        delta_xy: dx.value,
        delta_yx: dy.value,
        lecam_emulate_y_from_x: lec_y_from_x.value,
        lecam_emulate_x_from_y: lec_x_from_y.value,
        max_violation,
        min_slack,
        lecam_x_side,
        lecam_y_side,
        rows,
    })
}

/// True when the Bayes rule beats `n` random rules (half deterministic,
/// half stochastic) on the given instance.
pub fn bayes_beats_random(
    obs: &Channel,
    loss: &LossTable,
    prior: &[f64],
    n: usize,
    rng: &mut impl Rng,
) -> Result<bool> {
    let bayes = bayes_rule(obs, loss, prior)?;
    let (ko, ka) = (obs.out_size(), loss.ka);
    for i in 0..n {
        let kernel = if i % 2 == 0 {
            let mut k = vec![0.0; ka * ko];
            for o in 0..ko {
                k[rng.gen_range(0..ka) * ko + o] = 1.0;
            }
            k
        } else {
            let mut k = vec![0.0; ka * ko];
            for o in 0..ko {
                let col = crate::corpus::random_prob_vec(rng, ka);
                for a in 0..ka {
                    k[a * ko + o] = col[a];
                }
            }
            k
        };
        let rule = DecisionRule { kernel: Channel::new(ka, ko, kernel)? };
        if average_risk(obs, &rule, loss, prior)? < bayes.risk - 1e-12 {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn zero_loss_and_perfect_observation() {
        let zero = LossTable::new(2, 2, vec![0.0; 4]).unwrap();
        let id = Channel::identity(2);
        let rule = DecisionRule { kernel: Channel::identity(2) };
        assert_eq!(average_risk(&id, &rule, &zero, &[0.5, 0.5]).unwrap(), 0.0);
        let r = average_risk(&id, &rule, &LossTable::zero_one(2), &[0.5, 0.5]).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn bayes_on_canonical_channels() {
        let id = Channel::identity(3);
        let b = bayes_rule(&id, &LossTable::zero_one(3), &[0.2, 0.5, 0.3]).unwrap();
        assert!(b.risk.abs() < 1e-15);
        // An uninformative channel leaves only the best constant action.
        let flat = Channel::uniform(2, 4);
        let b = bayes_rule(&flat, &LossTable::zero_one(4), &[0.25; 4]).unwrap();
        assert!((b.risk - 0.75).abs() < 1e-12);
        // AND observed through X: the posterior at x = 1 ties, so a quarter
        // of the mass is always lost.
        let and = corpus::and_gate();
        let px = and.conditional_channel(VarSet::X, VarSet::M).unwrap().channel;
        let prior = and.marginalize(VarSet::M).pmf().to_vec();
        let b = bayes_rule(&px, &LossTable::zero_one(2), &prior).unwrap();
        assert!((b.risk - 0.25).abs() < 1e-12);
    }

    #[test]
    fn unreachable_observations_are_flagged() {
        let obs = Channel::new(3, 2, vec![0.6, 0.2, 0.4, 0.8, 0.0, 0.0]).unwrap();
        let b = bayes_rule(&obs, &LossTable::zero_one(2), &[0.5, 0.5]).unwrap();
        assert_eq!(b.unreached, vec![2]);
        assert_eq!(b.rule.kernel.get(0, 2), 1.0);
    }

    #[test]
    fn loss_table_validation() {
        assert!(LossTable::new(2, 2, vec![0.0, 0.5, 1.2, 0.0]).is_err());
        assert!(LossTable::new(2, 2, vec![0.0; 3]).is_err());
        let loss = LossTable::zero_one(2);
        let rule = DecisionRule { kernel: Channel::identity(3) };
        assert!(average_risk(&Channel::identity(2), &rule, &loss, &[0.5, 0.5]).is_err());
    }

    #[test]
    fn bayes_is_never_beaten_by_random_rules() {
        let mut rng = corpus::rng(41);
        for _ in 0..5 {
            let d = corpus::random_triple(&mut rng, 3, 4, 2);
            let obs = d.conditional_channel(VarSet::X, VarSet::M).unwrap().channel;
            let prior = d.marginalize(VarSet::M).pmf().to_vec();
            let loss = LossTable::random(&mut rng.clone(), 3, 3);
            assert!(bayes_beats_random(&obs, &loss, &prior, 1000, &mut rng).unwrap());
        }
    }

    #[test]
    fn audit_identical_sides_is_tight_at_zero() {
        let mut rng = corpus::rng(43);
        let ch = corpus::random_channel(&mut rng, 3, 3);
        let d = corpus::triple_from_channels(&[0.3, 0.3, 0.4], &ch, &ch);
        let rep = risk_gap_audit(&d, &SolverConfig::default(), 5, 7).unwrap();
        assert!(rep.max_violation <= 1e-9, "violation {}", rep.max_violation);
        assert!(rep.delta_xy.bits < 1e-6 && rep.delta_yx.bits < 1e-6);
    }

    #[test]
    fn audit_copy_with_constant_y_matches_closed_form() {
        let d = corpus::copy_with_constant_y();
        let rep = risk_gap_audit(&d, &SolverConfig::default(), 1, 7).unwrap();
        let row = &rep.rows[0];
        assert!(row.risk_x.abs() < 1e-12);
        assert!((row.risk_y - 0.5).abs() < 1e-12);
        // Binding direction: 0.5 <= sqrt(ln 2 / 2) ~ 0.589.
        let cap = (std::f64::consts::LN_2 / 2.0).sqrt();
        assert!((row.bound_emulate_x - cap).abs() < 1e-6);
        assert!((rep.min_slack - (cap - 0.5)).abs() < 1e-6);
        assert!(rep.max_violation <= 0.0);
    }

    #[test]
    fn audit_random_triples_never_violate() {
        let mut rng = corpus::rng(47);
        for i in 0..6 {
            let d = corpus::random_triple(&mut rng, 3, 3, 3);
            let rep = risk_gap_audit(&d, &SolverConfig::default(), 5, 100 + i).unwrap();
            assert!(rep.max_violation <= 1e-6);
            assert!(rep.lecam_x_side.lhs <= rep.lecam_x_side.rhs + 1e-9);
            assert!(rep.lecam_y_side.lhs <= rep.lecam_y_side.rhs + 1e-9);
        }
    }
}
