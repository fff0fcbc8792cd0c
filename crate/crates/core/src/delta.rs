//! Channel deficiency delta(M : X \ Y) and the decomposition built from it.
//! The inner problem minimizes E_M KL(P_{X|M} || W P_{Y|M}) over
//! column-stochastic W by mirror descent on each column simplex; the
//! objective is convex in W.

use crate::assembly::{assemble_from_ri, Method, PidAtoms};
use crate::config::{Direction, SolverConfig};
use crate::error::Result;
use crate::prob::{mutual_information, Channel, DiscreteTriple, InfoValue, VarSet, ZERO_EPS};

#[derive(Debug, Clone)]
pub struct DeficiencyResult {
    pub value: InfoValue,
    /// Emulation channel: unique-side alphabet given the other side.
    pub witness: Channel,
    pub iterations: usize,
    pub converged: bool,
}

/// delta(M : X \ Y) for XMinusY; the other direction swaps the roles.
pub fn deficiency(
    dist: &DiscreteTriple,
    direction: Direction,
    cfg: &SolverConfig,
) -> Result<DeficiencyResult> {
    match direction {
        Direction::XMinusY => deficiency_xy(dist, cfg),
        Direction::YMinusX => deficiency_xy(&dist.swap_xy(), cfg),
    }
}

fn deficiency_xy(dist: &DiscreteTriple, cfg: &SolverConfig) -> Result<DeficiencyResult> {
    let px = dist.conditional_channel(VarSet::X, VarSet::M)?.channel;
    let py = dist.conditional_channel(VarSet::Y, VarSet::M)?.channel;
    let prior = dist.marginalize(VarSet::M).pmf().to_vec();
    let (km, kx, ky) = (dist.km(), dist.kx(), dist.ky());

    // Objective in nats at W, via the composed emulation R = W py.
    let compose = |w: &[f64], r: &mut [f64]| {
        for x in 0..kx {
            for m in 0..km {
                let mut s = 0.0;
                for y in 0..ky {
                    s += w[x * ky + y] * py.get(y, m);
                }
                r[x * km + m] = s;
            }
        }
    };
    let objective = |r: &[f64]| -> f64 {
        let mut f = 0.0;
        for m in 0..km {
            if prior[m] < ZERO_EPS {
                continue;
            }
            for x in 0..kx {
                let p = px.get(x, m);
                if p < ZERO_EPS {
                    continue;
                }
                f += prior[m] * p * (p / r[x * km + m].max(1e-300)).ln();
            }
        }
        f
    };

    let mut w = vec![1.0 / kx as f64; kx * ky];
    let mut r = vec![0.0; kx * km];
    compose(&w, &mut r);
    let mut f = objective(&r);
    let mut grad = vec![0.0; kx * ky];
    let mut history: Vec<f64> = vec![f];
    let mut eta = 1.0f64;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iter {
        iterations += 1;
        for g in grad.iter_mut() {
            *g = 0.0;
        }
        for m in 0..km {
            if prior[m] < ZERO_EPS {
                continue;
            }
            for x in 0..kx {
                let p = px.get(x, m);
                if p < ZERO_EPS {
                    continue;
                }
                let coef = prior[m] * p / r[x * km + m].max(1e-300);
                for y in 0..ky {
                    grad[x * ky + y] -= coef * py.get(y, m);
                }
            }
        }
        // Backtracking on the multiplicative update; shifts per column keep
        // the exponentials in range.
        let mut accepted = false;
        let mut trial = vec![0.0; kx * ky];
        let mut r_trial = vec![0.0; kx * km];
        while eta > 1e-18 {
            for y in 0..ky {
                let mut amax = f64::NEG_INFINITY;
                for x in 0..kx {
                    amax = amax.max(-eta * grad[x * ky + y]);
                }
                let mut z = 0.0;
                for x in 0..kx {
                    let v = w[x * ky + y] * (-eta * grad[x * ky + y] - amax).exp();
                    trial[x * ky + y] = v;
                    z += v;
                }
                for x in 0..kx {
                    trial[x * ky + y] /= z;
                }
            }
            compose(&trial, &mut r_trial);
            let f_trial = objective(&r_trial);
            if f_trial <= f {
                w.copy_from_slice(&trial);
                r.copy_from_slice(&r_trial);
                f = f_trial;
                eta = (eta * 1.5).min(1e3);
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        history.push(f);
        let k = history.len() - 1;
        if k >= cfg.window {
            let drop = history[k - cfg.window] - history[k];
            if drop <= cfg.tol * f.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !accepted {
            converged = true;
            break;
        }
        if f <= 1e-15 {
            converged = true;
            break;
        }
    }

    Ok(DeficiencyResult {
        value: InfoValue::from_nats(f.max(0.0)),
        witness: Channel::new_unchecked(kx, ky, normalize_columns(w, kx, ky)),
        iterations,
        converged,
    })
}

/// W is stored row-major x-by-y; rebuild exact column sums.
fn normalize_columns(mut w: Vec<f64>, kx: usize, ky: usize) -> Vec<f64> {
    for y in 0..ky {
        let s: f64 = (0..kx).map(|x| w[x * ky + y]).sum();
        for x in 0..kx {
            w[x * ky + y] /= s;
        }
    }
    w
}

#[derive(Debug, Clone)]
pub struct CyanReport {
    /// UI_X - delta(M : X \ Y) >= 0: unique information on the X side not
    /// witnessed by any emulation failure.
    pub cyan_x: InfoValue,
    pub cyan_y: InfoValue,
}

#[derive(Debug, Clone)]
pub struct DeltaPid {
    pub atoms: PidAtoms,
    pub deficiency_x: DeficiencyResult,
    pub deficiency_y: DeficiencyResult,
    pub cyan: CyanReport,
}

pub fn delta_pid(dist: &DiscreteTriple, cfg: &SolverConfig) -> Result<DeltaPid> {
    let i_mx = mutual_information(dist, VarSet::M, VarSet::X, None)?;
    let i_my = mutual_information(dist, VarSet::M, VarSet::Y, None)?;
    let i_mxy = mutual_information(dist, VarSet::M, VarSet::XY, None)?;
    let (dx, dy) = rayon::join(
        || deficiency(dist, Direction::XMinusY, cfg),
        || deficiency(dist, Direction::YMinusX, cfg),
    );
    let (dx, dy) = (dx?, dy?);
    let ri_nats = (i_mx.nats - dx.value.nats).min(i_my.nats - dy.value.nats);
    let atoms = assemble_from_ri(Method::Delta, i_mx, i_my, i_mxy, InfoValue::from_nats(ri_nats));
    let cyan = CyanReport {
        cyan_x: InfoValue::from_nats(atoms.ui_x.nats - dx.value.nats),
        cyan_y: InfoValue::from_nats(atoms.ui_y.nats - dy.value.nats),
    };
    Ok(DeltaPid { atoms, deficiency_x: dx, deficiency_y: dy, cyan })
}
