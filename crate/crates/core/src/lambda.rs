//! Relaxed deficiency: any emulation channel P_{X'|MY} is admitted, with a
//! penalty lambda * I(M;X'|Y) charging it for reading M. The family connects
//! the plain deficiency (lambda large) to the coupling optimum (lambda small).

use crate::assembly::{assemble_from_ri, Method, PidAtoms};
use crate::broja::{tilde_ui, Cmi};
use crate::config::{Direction, SolverConfig};
use crate::delta::deficiency;
use crate::error::{invalid, Result};
use crate::prob::{mutual_information, Channel, DiscreteTriple, InfoValue, VarSet, ZERO_EPS};
use rand::Rng;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct LambdaResult {
    pub lambda: f64,
    /// kl_part + lambda * cmi_part, the relaxed deficiency value.
    pub total: InfoValue,
    pub kl_part: InfoValue,
    pub cmi_part: InfoValue,
    /// Columns indexed by m * ky + y give P(x' | m, y) in the solved frame.
    pub optimizer: Channel,
    pub converged: bool,
    pub restarts_used: usize,
    /// Final objective of every restart, in nats, for diagnostics.
    pub restart_totals: Vec<f64>,
    pub iterations: usize,
}

/// delta^lambda(M : X \ Y) for XMinusY; the other direction swaps the roles
/// and reports the optimizer in the swapped frame.
pub fn delta_lambda(
    dist: &DiscreteTriple,
    direction: Direction,
    lambda: f64,
    cfg: &SolverConfig,
) -> Result<LambdaResult> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(invalid(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    let dist = match direction {
        Direction::XMinusY => dist.clone(),
        Direction::YMinusX => dist.swap_xy(),
    };
    if lambda == 0.0 {
        return Ok(exact_zero_lambda(&dist));
    }
    let obj = Objective::new(&dist);
    let mut inits = vec![obj.copy_kernel()];
    inits.extend(lifted_starts(&dist, cfg)?);
    solve(&obj, lambda, cfg, inits, cfg.restarts)
}

/// Structured sweep over an increasing lambda grid with warm starts; dips in
/// the total curve mark missed optima and trigger restart escalation, after
/// which each point is repaired from its right neighbor's optimizer.
pub fn lambda_sweep(
    dist: &DiscreteTriple,
    direction: Direction,
    grid: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<LambdaResult>> {
    for pair in grid.windows(2) {
        if pair[1] <= pair[0] {
            return Err(invalid("lambda grid must be strictly increasing"));
        }
    }
    if let Some(first) = grid.first() {
        if !first.is_finite() || *first < 0.0 {
            return Err(invalid(format!("lambda must be finite and >= 0, got {first}")));
        }
    }
    if let Some(last) = grid.last() {
        if !last.is_finite() {
            return Err(invalid("lambda grid must be finite"));
        }
    }
    let dist = match direction {
        Direction::XMinusY => dist.clone(),
        Direction::YMinusX => dist.swap_xy(),
    };
    let obj = Objective::new(&dist);
    let lifted = if grid.iter().any(|l| *l > 0.0) {
        lifted_starts(&dist, cfg)?
    } else {
        Vec::new()
    };

    let mut results: Vec<LambdaResult> = Vec::with_capacity(grid.len());
    for &lambda in grid {
        if lambda == 0.0 {
            results.push(exact_zero_lambda(&dist));
            continue;
        }
        let mut inits = vec![obj.copy_kernel()];
        if let Some(prev) = results.last() {
            inits.push(channel_to_v(&prev.optimizer, obj.km, obj.kx, obj.ky));
        }
        inits.extend(lifted.iter().cloned());
        results.push(solve(&obj, lambda, cfg, inits, cfg.restarts)?);
    }

    for _round in 0..2 {
        let mut escalated = false;
        for i in 1..results.len() {
            if results[i].total.nats + 1e-6 < results[i - 1].total.nats {
                let lambda = results[i - 1].lambda;
                let mut inits = vec![
                    obj.copy_kernel(),
                    channel_to_v(&results[i].optimizer, obj.km, obj.kx, obj.ky),
                    channel_to_v(&results[i - 1].optimizer, obj.km, obj.kx, obj.ky),
                ];
                inits.extend(lifted.iter().cloned());
                let redo = solve(&obj, lambda, cfg, inits, cfg.restarts * 2)?;
                if redo.total.nats < results[i - 1].total.nats {
                    results[i - 1] = redo;
                }
                escalated = true;
            }
        }
        if !escalated {
            break;
        }
    }
    // The right neighbor's optimizer evaluated at the smaller lambda always
    // costs no more than the neighbor's total, so this pass leaves the curve
    // non-decreasing up to evaluation noise.
    for i in (0..results.len().saturating_sub(1)).rev() {
        if results[i].lambda == 0.0 {
            continue;
        }
        let v = channel_to_v(&results[i + 1].optimizer, obj.km, obj.kx, obj.ky);
        let (kl, cmi) = obj.parts(&v);
        let total = kl + results[i].lambda * cmi;
        if total < results[i].total.nats {
            let converged = results[i + 1].converged;
            let optimizer = results[i + 1].optimizer.clone();
            let r = &mut results[i];
            r.total = InfoValue::from_nats(total);
            r.kl_part = InfoValue::from_nats(kl);
            r.cmi_part = InfoValue::from_nats(cmi);
            r.optimizer = optimizer;
            r.converged = converged;
        }
    }
    Ok(results)
}

#[derive(Debug, Clone)]
pub struct LambdaPid {
    pub atoms: PidAtoms,
    pub x: LambdaResult,
    pub y: LambdaResult,
}

/// Symmetrized decomposition with delta^lambda in the deficiency slot.
pub fn lambda_pid(dist: &DiscreteTriple, lambda: f64, cfg: &SolverConfig) -> Result<LambdaPid> {
    let i_mx = mutual_information(dist, VarSet::M, VarSet::X, None)?;
    let i_my = mutual_information(dist, VarSet::M, VarSet::Y, None)?;
    let i_mxy = mutual_information(dist, VarSet::M, VarSet::XY, None)?;
    let (rx, ry) = rayon::join(
        || delta_lambda(dist, Direction::XMinusY, lambda, cfg),
        || delta_lambda(dist, Direction::YMinusX, lambda, cfg),
    );
    let (rx, ry) = (rx?, ry?);
    let ri_nats = (i_mx.nats - rx.total.nats).min(i_my.nats - ry.total.nats);
    let atoms = assemble_from_ri(Method::Lambda, i_mx, i_my, i_mxy, InfoValue::from_nats(ri_nats));
    Ok(LambdaPid { atoms, x: rx, y: ry })
}

/// Shared data: p(x|m) targets, (M,Y) weights, and the conditional-MI helper
/// for joints induced by a kernel.
struct Objective {
    km: usize,
    kx: usize,
    ky: usize,
    /// px[m * kx + x] = P(x | m).
    px: Vec<f64>,
    /// pmy[m * ky + y] and pm[m] from the input.
    pmy: Vec<f64>,
    pm: Vec<f64>,
    cmi: Cmi,
}

impl Objective {
    fn new(dist: &DiscreteTriple) -> Objective {
        let (km, kx, ky) = (dist.km(), dist.kx(), dist.ky());
        let px_ch = dist
            .conditional_channel(VarSet::X, VarSet::M)
            .expect("dims already validated")
            .channel;
        let mut px = vec![0.0; km * kx];
        for m in 0..km {
            for x in 0..kx {
                px[m * kx + x] = px_ch.get(x, m);
            }
        }
        Objective {
            km,
            kx,
            ky,
            px,
            pmy: dist.marginalize(VarSet::M.union(VarSet::Y)).pmf().to_vec(),
            pm: dist.marginalize(VarSet::M).pmf().to_vec(),
            cmi: Cmi::new(dist),
        }
    }

    /// Start at the kernel that copies P_{X|M} regardless of y.
    fn copy_kernel(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.km * self.ky * self.kx];
        for m in 0..self.km {
            for y in 0..self.ky {
                for x in 0..self.kx {
                    v[(m * self.ky + y) * self.kx + x] = self.px[m * self.kx + x].max(1e-12);
                }
            }
        }
        normalize_v(&mut v, self.km * self.ky, self.kx);
        v
    }

    fn induced_joint(&self, v: &[f64], j: &mut [f64]) {
        let (km, kx, ky) = (self.km, self.kx, self.ky);
        for m in 0..km {
            for y in 0..ky {
                let w = self.pmy[m * ky + y];
                for x in 0..kx {
                    j[(m * kx + x) * ky + y] = w * v[(m * ky + y) * kx + x];
                }
            }
        }
    }

    /// v̄(x|m) = sum_y P(y|m) v(x|m,y).
    fn averaged(&self, v: &[f64], m: usize, x: usize) -> f64 {
        let w_m = self.pm[m];
        (0..self.ky)
            .map(|y| self.pmy[m * self.ky + y] / w_m * v[(m * self.ky + y) * self.kx + x])
            .sum()
    }

    /// (E_M KL(P_{X|M} || v̄), I(M;X'|Y)) in nats.
    fn parts(&self, v: &[f64]) -> (f64, f64) {
        let (km, kx, ky) = (self.km, self.kx, self.ky);
        let mut j = vec![0.0; km * kx * ky];
        self.induced_joint(v, &mut j);
        let mut jxy = vec![0.0; kx * ky];
        self.cmi.marg_xy(&j, &mut jxy);
        let cmi = self.cmi.value(&j, &jxy);
        let mut kl = 0.0;
        for m in 0..km {
            if self.pm[m] < ZERO_EPS {
                continue;
            }
            for x in 0..kx {
                let p = self.px[m * kx + x];
                if p < ZERO_EPS {
                    continue;
                }
                kl += self.pm[m] * p * (p / self.averaged(v, m, x).max(1e-300)).ln();
            }
        }
        (kl, cmi)
    }

    /// Per-column gradient of kl + lambda * cmi, scaled by 1/pmy so every
    /// column sees comparable step sizes.
    fn gradient(&self, v: &[f64], lambda: f64, j: &[f64], jxy: &[f64], out: &mut [f64]) {
        let (km, kx, ky) = (self.km, self.kx, self.ky);
        for m in 0..km {
            if self.pm[m] < ZERO_EPS {
                for i in 0..kx * ky {
                    out[m * kx * ky + i] = 0.0;
                }
                continue;
            }
            for x in 0..kx {
                let p = self.px[m * kx + x];
                let pull = if p < ZERO_EPS {
                    0.0
                } else {
                    p / self.averaged(v, m, x).max(1e-300)
                };
                for y in 0..ky {
                    let idx = (m * ky + y) * kx + x;
                    out[idx] = if self.pmy[m * ky + y] < ZERO_EPS {
                        0.0
                    } else {
                        let jv = j[(m * kx + x) * ky + y];
                        lambda * (jv.max(1e-300) / jxy[x * ky + y].max(1e-300)).ln() - pull
                    };
                }
            }
        }
    }
}

fn exact_zero_lambda(dist: &DiscreteTriple) -> LambdaResult {
    let obj = Objective::new(dist);
    let v = obj.copy_kernel();
    let (_, cmi) = obj.parts(&v);
    LambdaResult {
        lambda: 0.0,
        total: InfoValue::ZERO,
        kl_part: InfoValue::ZERO,
        cmi_part: InfoValue::from_nats(cmi),
        optimizer: v_to_channel(&v, obj.km, obj.kx, obj.ky),
        converged: true,
        restarts_used: 0,
        restart_totals: Vec::new(),
        iterations: 0,
    }
}

/// Feasible points lifted from the other two solvers: the coupling optimum
/// (zero KL part) and the plain-deficiency witness (zero CMI part). Their
/// objective values upper-bound every delta^lambda.
fn lifted_starts(dist: &DiscreteTriple, cfg: &SolverConfig) -> Result<Vec<Vec<f64>>> {
    let (km, kx, ky) = (dist.km(), dist.kx(), dist.ky());
    let pmy = dist.marginalize(VarSet::M.union(VarSet::Y));
    let mut starts = Vec::new();

    let broja = tilde_ui(dist, Direction::XMinusY, cfg)?;
    let mut v = vec![0.0; km * ky * kx];
    for m in 0..km {
        for y in 0..ky {
            let w = pmy.at(dist, m, 0, y);
            for x in 0..kx {
                v[(m * ky + y) * kx + x] = if w < ZERO_EPS {
                    1.0 / kx as f64
                } else {
                    (broja.q.p(m, x, y) / w).max(1e-12)
                };
            }
        }
    }
    normalize_v(&mut v, km * ky, kx);
    starts.push(v);

    let delta = deficiency(dist, Direction::XMinusY, cfg)?;
    let mut v = vec![0.0; km * ky * kx];
    for m in 0..km {
        for y in 0..ky {
            for x in 0..kx {
                v[(m * ky + y) * kx + x] = delta.witness.get(x, y).max(1e-12);
            }
        }
    }
    normalize_v(&mut v, km * ky, kx);
    starts.push(v);
    Ok(starts)
}

fn solve(
    obj: &Objective,
    lambda: f64,
    cfg: &SolverConfig,
    mut inits: Vec<Vec<f64>>,
    restarts: usize,
) -> Result<LambdaResult> {
    let mut rng = crate::corpus::rng(cfg.seed);
    while inits.len() < restarts.max(1) {
        let mut v = vec![0.0; obj.km * obj.ky * obj.kx];
        for col in 0..obj.km * obj.ky {
            let p = random_simplex(&mut rng, obj.kx);
            v[col * obj.kx..(col + 1) * obj.kx].copy_from_slice(&p);
        }
        inits.push(v);
    }
    let budget = (cfg.max_iter / inits.len().max(1)).max(1000);

    let runs: Vec<(Vec<f64>, f64, bool, usize)> = inits
        .into_par_iter()
        .map(|v0| descend(obj, lambda, v0, budget, cfg))
        .collect();
    let restart_totals: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let iterations = runs.iter().map(|r| r.3).sum();
    let best = runs
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one restart");
    let (v, _, converged, _) = best;
    let (kl, cmi) = obj.parts(&v);
    Ok(LambdaResult {
        lambda,
        total: InfoValue::from_nats(kl + lambda * cmi),
        kl_part: InfoValue::from_nats(kl),
        cmi_part: InfoValue::from_nats(cmi),
        optimizer: v_to_channel(&v, obj.km, obj.kx, obj.ky),
        converged,
        restarts_used: restart_totals.len(),
        restart_totals,
        iterations,
    })
}

/// Mirror descent on the product of per-(m,y) simplices with multiplicative
/// updates and monotone step acceptance.
fn descend(
    obj: &Objective,
    lambda: f64,
    mut v: Vec<f64>,
    budget: usize,
    cfg: &SolverConfig,
) -> (Vec<f64>, f64, bool, usize) {
    let (km, kx, ky) = (obj.km, obj.kx, obj.ky);
    let n = km * ky * kx;
    let eval = |v: &[f64]| -> f64 {
        let (kl, cmi) = obj.parts(v);
        kl + lambda * cmi
    };
    let mut f = eval(&v);
    let mut j = vec![0.0; n];
    let mut jxy = vec![0.0; kx * ky];
    let mut grad = vec![0.0; n];
    let mut history = vec![f];
    let mut eta = 0.5f64;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < budget {
        iterations += 1;
        obj.induced_joint(&v, &mut j);
        obj.cmi.marg_xy(&j, &mut jxy);
        obj.gradient(&v, lambda, &j, &jxy, &mut grad);

        let mut accepted = false;
        let mut trial = vec![0.0; n];
        while eta > 1e-16 {
            for col in 0..km * ky {
                let base = col * kx;
                let mut amax = f64::NEG_INFINITY;
                for x in 0..kx {
                    amax = amax.max(-eta * grad[base + x]);
                }
                let mut z = 0.0;
                for x in 0..kx {
                    let t = v[base + x] * (-eta * grad[base + x] - amax).exp();
                    trial[base + x] = t;
                    z += t;
                }
                for x in 0..kx {
                    trial[base + x] /= z;
                }
            }
            let f_trial = eval(&trial);
            if f_trial <= f {
                v.copy_from_slice(&trial);
                f = f_trial;
                eta = (eta * 1.5).min(1e3);
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        history.push(f);
        let k = history.len() - 1;
        if k >= cfg.window && history[k - cfg.window] - history[k] <= cfg.tol * f.abs().max(1.0) {
            converged = true;
            break;
        }
        if !accepted || f <= 1e-15 {
            converged = true;
            break;
        }
    }
    (v, f, converged, iterations)
}

fn random_simplex(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    let mut p: Vec<f64> = (0..k).map(|_| -rng.gen::<f64>().max(1e-12).ln()).collect();
    let s: f64 = p.iter().sum();
    for v in p.iter_mut() {
        *v /= s;
    }
    p
}

fn normalize_v(v: &mut [f64], cols: usize, kx: usize) {
    for col in 0..cols {
        let base = col * kx;
        let s: f64 = v[base..base + kx].iter().sum();
        for x in 0..kx {
            v[base + x] /= s;
        }
    }
}

fn v_to_channel(v: &[f64], km: usize, kx: usize, ky: usize) -> Channel {
    let columns: Vec<Vec<f64>> = (0..km * ky)
        .map(|col| v[col * kx..(col + 1) * kx].to_vec())
        .collect();
    Channel::from_columns(&columns).expect("kernel columns are normalized")
}

fn channel_to_v(ch: &Channel, km: usize, kx: usize, ky: usize) -> Vec<f64> {
    let mut v = vec![0.0; km * ky * kx];
    for col in 0..km * ky {
        for x in 0..kx {
            v[col * kx + x] = ch.get(x, col).max(1e-12);
        }
    }
    normalize_v(&mut v, km * ky, kx);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn zero_lambda_is_exact() {
        let r = delta_lambda(&corpus::and_gate(), Direction::XMinusY, 0.0, &cfg()).unwrap();
        assert_eq!(r.total.nats, 0.0);
        assert_eq!(r.kl_part.nats, 0.0);
        assert!(r.converged);
        assert_eq!(r.restarts_used, 0);
        // The optimizer copies P(x|m) into every (m, y) column.
        let d = corpus::and_gate();
        let px = d.conditional_channel(VarSet::X, VarSet::M).unwrap().channel;
        for m in 0..2 {
            for y in 0..2 {
                for x in 0..2 {
                    let got = r.optimizer.get(x, m * 2 + y);
                    assert!((got - px.get(x, m)).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn negative_lambda_is_rejected() {
        let err = delta_lambda(&corpus::xor(), Direction::XMinusY, -1.0, &cfg());
        assert!(err.is_err());
    }

    #[test]
    fn parts_identity_and_cross_solver_bounds() {
        let mut rng = corpus::rng(113);
        for _ in 0..4 {
            let d = corpus::random_triple(&mut rng, 3, 3, 3);
            let broja = tilde_ui(&d, Direction::XMinusY, &cfg()).unwrap();
            let delta = deficiency(&d, Direction::XMinusY, &cfg()).unwrap();
            for lambda in [0.1, 1.0, 10.0] {
                let r = delta_lambda(&d, Direction::XMinusY, lambda, &cfg()).unwrap();
                let recomposed = r.kl_part.nats + lambda * r.cmi_part.nats;
                assert!((r.total.nats - recomposed).abs() < 1e-9);
                assert!(r.kl_part.nats >= -1e-9 && r.cmi_part.nats >= -1e-9);
                // Feasible lifts of the other two optima cap the value.
                assert!(r.total.nats <= lambda * broja.value.nats + 1e-6);
                assert!(r.total.nats <= delta.value.nats + 1e-6);
            }
        }
    }

    #[test]
    fn large_lambda_recovers_plain_deficiency() {
        let d = corpus::copy_with_constant_y();
        let delta = deficiency(&d, Direction::XMinusY, &cfg()).unwrap();
        let r = delta_lambda(&d, Direction::XMinusY, 1e3, &cfg()).unwrap();
        assert!((delta.value.bits - 1.0).abs() < 1e-6);
        // The optimal tilt away from the witness costs 1/(lambda+1) nats of
        // kl_part, so the 1e-3 window is met with a structural margin.
        assert!(
            (r.kl_part.nats - delta.value.nats).abs() < 1e-3,
            "kl {} vs delta {}",
            r.kl_part.nats,
            delta.value.nats
        );
    }

    #[test]
    fn small_lambda_cmi_tracks_coupling_optimum() {
        // AND has no unique X information, so the penalty term empties out.
        let r = delta_lambda(&corpus::and_gate(), Direction::XMinusY, 1e-3, &cfg()).unwrap();
        assert!(r.cmi_part.bits.abs() < 2e-2, "cmi {}", r.cmi_part.bits);
        // The four-bit fixture has a full bit of unique X information.
        let r = delta_lambda(&corpus::four_bit(), Direction::XMinusY, 1e-3, &cfg()).unwrap();
        assert!((r.cmi_part.bits - 1.0).abs() < 2e-2, "cmi {}", r.cmi_part.bits);
    }

    fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
            .collect()
    }

    #[test]
    fn sweep_totals_are_monotone() {
        let grid = log_grid(1e-3, 1e3, 25);
        for d in [corpus::and_gate(), corpus::copy_with_constant_y()] {
            let rs = lambda_sweep(&d, Direction::XMinusY, &grid, &cfg()).unwrap();
            assert_eq!(rs.len(), grid.len());
            for pair in rs.windows(2) {
                assert!(
                    pair[1].total.nats >= pair[0].total.nats - 1e-9,
                    "dip at lambda {}: {} then {}",
                    pair[1].lambda,
                    pair[0].total.nats,
                    pair[1].total.nats
                );
            }
        }
    }

    #[test]
    fn sweep_endpoint_matches_delta() {
        let d = corpus::copy_with_constant_y();
        let grid = log_grid(1e-3, 1e3, 9);
        let rs = lambda_sweep(&d, Direction::XMinusY, &grid, &cfg()).unwrap();
        let delta = deficiency(&d, Direction::XMinusY, &cfg()).unwrap();
        let last = rs.last().unwrap();
        assert!((last.kl_part.nats - delta.value.nats).abs() <= 1e-3);
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let d = corpus::xor();
        assert!(lambda_sweep(&d, Direction::XMinusY, &[1.0, 0.5], &cfg()).is_err());
        assert!(lambda_sweep(&d, Direction::XMinusY, &[-0.5, 1.0], &cfg()).is_err());
        let zero = lambda_sweep(&d, Direction::XMinusY, &[0.0], &cfg()).unwrap();
        assert_eq!(zero.len(), 1);
        assert_eq!(zero[0].total.nats, 0.0);
    }

    #[test]
    fn warm_starts_never_worsen_points() {
        let mut rng = corpus::rng(127);
        let d = corpus::random_triple(&mut rng, 2, 3, 2);
        let grid = log_grid(1e-2, 1e2, 9);
        let swept = lambda_sweep(&d, Direction::XMinusY, &grid, &cfg()).unwrap();
        for (i, &lambda) in grid.iter().enumerate() {
            let solo = delta_lambda(&d, Direction::XMinusY, lambda, &cfg()).unwrap();
            assert!(
                swept[i].total.nats <= solo.total.nats + 1e-9,
                "lambda {}: sweep {} vs solo {}",
                lambda,
                swept[i].total.nats,
                solo.total.nats
            );
        }
    }

    #[test]
    fn pid_assembly_reduces_to_delta_at_large_lambda() {
        let pid = lambda_pid(&corpus::copy_with_constant_y(), 1e3, &cfg()).unwrap();
        assert!((pid.atoms.ui_x.bits - 1.0).abs() < 1e-3);
        assert!(pid.atoms.ui_y.bits.abs() < 1e-3);
        assert!(pid.atoms.ri.bits.abs() < 1e-3);
        let report = crate::assembly::validate(&pid.atoms, &corpus::copy_with_constant_y()).unwrap();
        assert!(report.max_residual() < 1e-9);
    }
}
