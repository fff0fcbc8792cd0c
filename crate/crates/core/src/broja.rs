//! Unique information through coupling optimization: minimize I_Q(M;X|Y)
//! over the polytope of joints matching both pairwise (M,X) and (M,Y)
//! marginals. Solved by away-step Frank-Wolfe with an exact per-message
//! transportation oracle and a duality-gap certificate, plus a second route
//! that parametrizes the emulation channel directly and projects back.

use crate::assembly::{assemble_from_ri, Method, PidAtoms};
use crate::config::{Direction, SolverConfig};
use crate::error::{Error, Result};
use crate::lp::transportation;
use crate::prob::{
    interaction_information, mutual_information, DiscreteTriple, InfoValue, VarSet, ZERO_EPS,
};

const LOG_EPS: f64 = 1e-18;

#[derive(Debug, Clone)]
pub struct TildeUi {
    /// min I_Q(M;X|Y) over the marginal polytope (for XMinusY).
    pub value: InfoValue,
    /// The optimizing coupling; shares all pairwise-with-M marginals with
    /// the input.
    pub q: DiscreteTriple,
    /// Frank-Wolfe duality gap at termination, in bits via InfoValue.
    pub gap: InfoValue,
    pub iterations: usize,
    pub converged: bool,
}

pub fn tilde_ui(
    dist: &DiscreteTriple,
    direction: Direction,
    cfg: &SolverConfig,
) -> Result<TildeUi> {
    match direction {
        Direction::XMinusY => tilde_ui_xy(dist, cfg),
        Direction::YMinusX => {
            let r = tilde_ui_xy(&dist.swap_xy(), cfg)?;
            Ok(TildeUi { q: r.q.swap_xy(), ..r })
        }
    }
}

/// Objective and derivative helper over couplings stored like a triple pmf.
pub(crate) struct Cmi {
    /// Fixed terms: sum_my q_my ln q_my - sum_y q_y ln q_y (both marginals
    /// are pinned on the feasible set).
    fixed: f64,
    km: usize,
    kx: usize,
    ky: usize,
}

impl Cmi {
    pub(crate) fn new(dist: &DiscreteTriple) -> Cmi {
        let pmy = dist.marginalize(VarSet::M.union(VarSet::Y));
        let py = dist.marginalize(VarSet::Y);
        let ent = |v: &[f64]| -> f64 {
            v.iter().map(|p| crate::prob::info::xlny(*p, *p)).sum()
        };
        Cmi {
            fixed: -ent(pmy.pmf()) + ent(py.pmf()),
            km: dist.km(),
            kx: dist.kx(),
            ky: dist.ky(),
        }
    }

    pub(crate) fn marg_xy(&self, q: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for m in 0..self.km {
            let base = m * self.kx * self.ky;
            for i in 0..self.kx * self.ky {
                out[i] += q[base + i];
            }
        }
    }

    /// I_Q(M;X|Y) in nats.
    pub(crate) fn value(&self, q: &[f64], qxy: &[f64]) -> f64 {
        let mut f = self.fixed;
        for v in q {
            f += crate::prob::info::xlny(*v, *v);
        }
        for v in qxy {
            f -= crate::prob::info::xlny(*v, *v);
        }
        f
    }

    /// Directional derivative of the objective at q + t d along d. The
    /// fixed terms drop out, leaving sum_cells d ln(v(m|x,y)) grouped per
    /// column; boundary cells are resolved by their exact one-sided limits
    /// so the result can be infinite where the true slope diverges.
    fn dir_deriv(&self, q: &[f64], d: &[f64], t: f64) -> f64 {
        const TINY: f64 = 1e-300;
        let n = self.kx * self.ky;
        let mut g = 0.0;
        for i in 0..n {
            let (mut vxy, mut dxy) = (0.0, 0.0);
            for m in 0..self.km {
                vxy += (q[m * n + i] + t * d[m * n + i]).max(0.0);
                dxy += d[m * n + i];
            }
            if vxy > TINY {
                for m in 0..self.km {
                    let dv = d[m * n + i];
                    if dv == 0.0 {
                        continue;
                    }
                    let v = (q[m * n + i] + t * dv).max(0.0);
                    if v > TINY {
                        g += dv * (v / vxy).ln();
                    } else if dv < 0.0 {
                        // A cell empties while its column stays occupied.
                        return f64::INFINITY;
                    } else {
                        // Mass enters a fresh cell of an occupied column.
                        return f64::NEG_INFINITY;
                    }
                }
            } else if dxy.abs() > TINY {
                // The column itself appears or vanishes; conditional shares
                // tend to d(m)/dxy.
                for m in 0..self.km {
                    let dv = d[m * n + i];
                    if dv != 0.0 {
                        let ratio = (dv / dxy).max(TINY);
                        g += dv * ratio.ln();
                    }
                }
            }
        }
        g
    }
}

/// Marginal data shared by the solver and its certificates.
struct Polytope {
    km: usize,
    kx: usize,
    ky: usize,
    /// pmx[m*kx + x], pmy[m*ky + y], pm[m].
    pmx: Vec<f64>,
    pmy: Vec<f64>,
    pm: Vec<f64>,
}

impl Polytope {
    fn new(dist: &DiscreteTriple) -> Polytope {
        Polytope {
            km: dist.km(),
            kx: dist.kx(),
            ky: dist.ky(),
            pmx: dist.marginalize(VarSet::M.union(VarSet::X)).pmf().to_vec(),
            pmy: dist.marginalize(VarSet::M.union(VarSet::Y)).pmf().to_vec(),
            pm: dist.marginalize(VarSet::M).pmf().to_vec(),
        }
    }

    #[inline]
    fn feasible(&self, m: usize, x: usize, y: usize) -> bool {
        self.pmx[m * self.kx + x] > ZERO_EPS && self.pmy[m * self.ky + y] > ZERO_EPS
    }

    /// Linear minimization over the polytope: one exact transportation
    /// problem per message. Returns the vertex and the oracle value.
    fn oracle(&self, cost: &[f64]) -> Result<(Vec<f64>, f64)> {
        let (km, kx, ky) = (self.km, self.kx, self.ky);
        let mut s = vec![0.0; km * kx * ky];
        let mut total = 0.0;
        for m in 0..km {
            if self.pm[m] < ZERO_EPS {
                continue;
            }
            let rows = &self.pmx[m * kx..(m + 1) * kx];
            let cols = &self.pmy[m * ky..(m + 1) * ky];
            let block_cost = &cost[m * kx * ky..(m + 1) * kx * ky];
            let sol = transportation(block_cost, rows, cols)?;
            total += sol
                .iter()
                .zip(block_cost)
                .map(|(a, b)| a * b)
                .sum::<f64>();
            s[m * kx * ky..(m + 1) * kx * ky].copy_from_slice(&sol);
        }
        Ok((s, total))
    }
}

/// Sub-probability surrogate costs: per (x,y) column a conditional over
/// messages summing to at most one, so sum_cells s * cost lower-bounds the
/// objective at every feasible point. Inside the simplex this is the exact
/// gradient up to floor dust; on empty columns it falls back to the product
/// reference, which matches the limiting conditional when only one message
/// can use the column.
fn surrogate_costs(poly: &Polytope, q: &[f64], qxy: &[f64], out: &mut [f64]) {
    const FLOOR: f64 = 1e-15;
    const COL_EPS: f64 = 1e-12;
    let (km, kx, ky) = (poly.km, poly.kx, poly.ky);
    for x in 0..kx {
        for y in 0..ky {
            let col = x * ky + y;
            let feas: Vec<usize> = (0..km).filter(|&m| poly.feasible(m, x, y)).collect();
            if feas.is_empty() {
                for m in 0..km {
                    out[m * kx * ky + col] = 0.0;
                }
                continue;
            }
            let mut h = vec![0.0; km];
            if qxy[col] > COL_EPS {
                for &m in &feas {
                    h[m] = (q[m * kx * ky + col] / qxy[col]).max(FLOOR);
                }
            } else {
                for &m in &feas {
                    h[m] = poly.pmx[m * kx + x] * poly.pmy[m * ky + y];
                }
            }
            let z: f64 = feas.iter().map(|&m| h[m]).sum();
            for m in 0..km {
                out[m * kx * ky + col] = if h[m] > 0.0 { (h[m] / z).ln() } else { 0.0 };
            }
        }
    }
}

/// Dual certificate from additively separable potentials: fits
/// phi(m,x) + psi(m,y) to ln q(m|x,y) on the support, then shifts psi so the
/// per-column Gibbs constraint holds exactly. The returned value is a valid
/// lower bound on the optimum for any potentials, and is tight at vertex
/// optima where the plain linearization is not.
fn potential_bound(poly: &Polytope, q: &[f64], qxy: &[f64]) -> f64 {
    let (km, kx, ky) = (poly.km, poly.kx, poly.ky);
    let mut phi = vec![0.0; km * kx];
    let mut psi = vec![0.0; km * ky];
    for m in 0..km {
        if poly.pm[m] < ZERO_EPS {
            continue;
        }
        // Weighted alternating least squares on ln q(m|x,y).
        let mut w = vec![f64::NAN; kx * ky];
        for x in 0..kx {
            for y in 0..ky {
                let qv = q[m * kx * ky + x * ky + y];
                if qv > 1e-100 && qxy[x * ky + y] > 1e-100 {
                    w[x * ky + y] = (qv / qxy[x * ky + y]).ln();
                }
            }
        }
        for _ in 0..200 {
            let mut delta = 0.0f64;
            for x in 0..kx {
                let (mut s, mut c) = (0.0, 0usize);
                for y in 0..ky {
                    if w[x * ky + y].is_finite() {
                        s += w[x * ky + y] - psi[m * ky + y];
                        c += 1;
                    }
                }
                if c > 0 {
                    let new = s / c as f64;
                    delta = delta.max((new - phi[m * kx + x]).abs());
                    phi[m * kx + x] = new;
                }
            }
            for y in 0..ky {
                let (mut s, mut c) = (0.0, 0usize);
                for x in 0..kx {
                    if w[x * ky + y].is_finite() {
                        s += w[x * ky + y] - phi[m * kx + x];
                        c += 1;
                    }
                }
                if c > 0 {
                    let new = s / c as f64;
                    delta = delta.max((new - psi[m * ky + y]).abs());
                    psi[m * ky + y] = new;
                }
            }
            if delta < 1e-13 {
                break;
            }
        }
    }
    // Shift per y-column so ln sum_m exp(phi + psi) <= 0 for every (x,y).
    let mut shift = vec![0.0f64; ky];
    for y in 0..ky {
        let mut worst = f64::NEG_INFINITY;
        for x in 0..kx {
            let mut s = 0.0;
            for m in 0..km {
                if poly.pm[m] >= ZERO_EPS && poly.feasible(m, x, y) {
                    s += (phi[m * kx + x] + psi[m * ky + y]).min(50.0).exp();
                }
            }
            if s > 0.0 {
                worst = worst.max(s.ln());
            }
        }
        shift[y] = if worst.is_finite() { worst.max(0.0) } else { 0.0 };
    }
    let mut bound = 0.0;
    for m in 0..km {
        if poly.pm[m] < ZERO_EPS {
            continue;
        }
        for x in 0..kx {
            bound += phi[m * kx + x] * poly.pmx[m * kx + x];
        }
        for y in 0..ky {
            bound += (psi[m * ky + y] - shift[y]) * poly.pmy[m * ky + y];
        }
    }
    bound
}

/// Re-optimizes the convex combination of the stored atoms by multiplicative
/// weight updates with monotone acceptance. Removes the zigzag that plain
/// conditional-gradient steps exhibit near low-dimensional faces.
fn correct_weights(cmi: &Cmi, atoms: &mut [(Vec<f64>, f64)], rounds: usize) -> (Vec<f64>, f64) {
    let n = atoms[0].0.len();
    let cols = cmi.kx * cmi.ky;
    let build = |atoms: &[(Vec<f64>, f64)]| {
        let mut q = vec![0.0; n];
        for (v, w) in atoms {
            for (i, qv) in q.iter_mut().enumerate() {
                *qv += w * v[i];
            }
        }
        q
    };
    let mut q = build(atoms);
    let mut qxy = vec![0.0; cols];
    cmi.marg_xy(&q, &mut qxy);
    let mut f = cmi.value(&q, &qxy);
    if atoms.len() < 2 {
        return (q, f);
    }
    let mut eta = 1.0f64;
    let mut trial: Vec<(Vec<f64>, f64)> = atoms.to_vec();
    for _ in 0..rounds {
        let grads: Vec<f64> = atoms
            .iter()
            .map(|(v, _)| {
                v.iter()
                    .enumerate()
                    .map(|(i, vv)| {
                        if *vv > 0.0 {
                            vv * (q[i].max(LOG_EPS) / qxy[i % cols].max(LOG_EPS)).ln()
                        } else {
                            0.0
                        }
                    })
                    .sum()
            })
            .collect();
        let gmin = grads.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut improved = false;
        while eta > 1e-12 {
            trial.clone_from_slice(atoms);
            let mut z = 0.0;
            for ((_, w), g) in trial.iter_mut().zip(&grads) {
                *w *= (-eta * (g - gmin)).max(-60.0).exp();
                z += *w;
            }
            for (_, w) in trial.iter_mut() {
                *w /= z;
            }
            let qt = build(&trial);
            let mut qtxy = vec![0.0; cols];
            cmi.marg_xy(&qt, &mut qtxy);
            let ft = cmi.value(&qt, &qtxy);
            if ft <= f {
                let gain = f - ft;
                atoms.clone_from_slice(&trial);
                q = qt;
                qxy = qtxy;
                f = ft;
                eta *= 1.5;
                improved = gain > 0.0;
                break;
            }
            eta *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (q, f)
}

/// Exact coordinate descent along 2x2 transportation cycles of a single
/// message: the move (+t,-t,-t,+t) on cells (x1 y1, x1 y2, x2 y1, x2 y2)
/// preserves both pairwise marginals. Cycles span the tangent space of each
/// per-message polytope, so sweeping them rebalances conditional shares that
/// conditional-gradient steps are slow to fix.
fn cycle_polish(cmi: &Cmi, q: &mut [f64], qxy: &mut [f64], sweeps: usize) -> f64 {
    const TINY: f64 = 1e-300;
    let (km, kx, ky) = (cmi.km, cmi.kx, cmi.ky);
    let cell = |m: usize, x: usize, y: usize| (m * kx + x) * ky + y;
    for _ in 0..sweeps {
        let mut moved = false;
        for m in 0..km {
            for x1 in 0..kx {
                for x2 in x1 + 1..kx {
                    for y1 in 0..ky {
                        for y2 in y1 + 1..ky {
                            let idx = [
                                cell(m, x1, y1),
                                cell(m, x1, y2),
                                cell(m, x2, y1),
                                cell(m, x2, y2),
                            ];
                            let col = [x1 * ky + y1, x1 * ky + y2, x2 * ky + y1, x2 * ky + y2];
                            let sign = [1.0, -1.0, -1.0, 1.0];
                            let hi = q[idx[1]].min(q[idx[2]]);
                            let lo = -q[idx[0]].min(q[idx[3]]);
                            if hi - lo <= 0.0 {
                                continue;
                            }
                            let slope = |t: f64| -> f64 {
                                let mut s = 0.0;
                                for i in 0..4 {
                                    let v = (q[idx[i]] + sign[i] * t).max(0.0);
                                    let vxy = (qxy[col[i]] + sign[i] * t).max(0.0);
                                    if vxy > TINY {
                                        if v > TINY {
                                            s += sign[i] * (v / vxy).ln();
                                        } else {
                                            return if sign[i] > 0.0 {
                                                f64::NEG_INFINITY
                                            } else {
                                                f64::INFINITY
                                            };
                                        }
                                    }
                                }
                                s
                            };
                            let t = if slope(lo) >= 0.0 {
                                lo
                            } else if slope(hi) <= 0.0 {
                                hi
                            } else {
                                let (mut a, mut b) = (lo, hi);
                                for _ in 0..60 {
                                    let mid = 0.5 * (a + b);
                                    if slope(mid) <= 0.0 {
                                        a = mid;
                                    } else {
                                        b = mid;
                                    }
                                }
                                0.5 * (a + b)
                            };
                            if t.abs() > 1e-15 {
                                for i in 0..4 {
                                    q[idx[i]] = (q[idx[i]] + sign[i] * t).max(0.0);
                                    qxy[col[i]] = (qxy[col[i]] + sign[i] * t).max(0.0);
                                }
                                moved = true;
                            }
                        }
                    }
                }
            }
        }
        if !moved {
            break;
        }
    }
    cmi.value(q, qxy)
}

fn tilde_ui_xy(dist: &DiscreteTriple, cfg: &SolverConfig) -> Result<TildeUi> {
    let (km, kx, ky) = (dist.km(), dist.kx(), dist.ky());
    let n = km * kx * ky;
    let cmi = Cmi::new(dist);
    let poly = Polytope::new(dist);
    let gap_tol_nats = InfoValue::from_bits(cfg.tol).nats;

    // Active set of polytope points; the feasible start P itself is the
    // first atom even though it is generally not a vertex.
    let mut atoms: Vec<(Vec<f64>, f64)> = vec![(dist.pmf().to_vec(), 1.0)];
    let mut q = dist.pmf().to_vec();
    let mut qxy = vec![0.0; kx * ky];
    cmi.marg_xy(&q, &mut qxy);
    let mut f = cmi.value(&q, &qxy);
    let mut cost = vec![0.0; n];
    let mut best_lower = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let mut history = vec![f];

    while iterations < cfg.max_iter {
        iterations += 1;
        cmi.marg_xy(&q, &mut qxy);
        surrogate_costs(&poly, &q, &qxy, &mut cost);
        let (s, oracle_value) = poly.oracle(&cost)?;
        // Both certificates bound sum q ln q(m|x,y); the entropic terms in
        // the pinned marginals are the same for every feasible point.
        best_lower = best_lower.max(oracle_value + cmi.fixed);
        if f - best_lower <= gap_tol_nats {
            converged = true;
            break;
        }

        // Away atom: the stored point most aligned with the cost vector.
        let mut away_idx = 0;
        let mut away_score = f64::NEG_INFINITY;
        for (i, (v, _)) in atoms.iter().enumerate() {
            let score: f64 = v.iter().zip(&cost).map(|(a, g)| a * g).sum();
            if score > away_score {
                away_score = score;
                away_idx = i;
            }
        }
        let q_score: f64 = q.iter().zip(&cost).map(|(a, g)| a * g).sum();
        let fw_gap = q_score - oracle_value;
        let away_gap = away_score - q_score;

        let use_away = away_gap > fw_gap && atoms[away_idx].1 < 1.0 - 1e-12;
        let (dir, gamma_max): (Vec<f64>, f64) = if use_away {
            let w = atoms[away_idx].1;
            let d: Vec<f64> = q
                .iter()
                .zip(&atoms[away_idx].0)
                .map(|(qv, av)| qv - av)
                .collect();
            (d, w / (1.0 - w))
        } else {
            let d: Vec<f64> = s.iter().zip(&q).map(|(sv, qv)| sv - qv).collect();
            (d, 1.0)
        };

        // Exact line search: bisect the monotone directional derivative.
        let gamma = {
            let d_end = cmi.dir_deriv(&q, &dir, gamma_max);
            if d_end <= 0.0 {
                gamma_max
            } else if cmi.dir_deriv(&q, &dir, 0.0) >= 0.0 {
                0.0
            } else {
                let (mut lo, mut hi) = (0.0f64, gamma_max);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if cmi.dir_deriv(&q, &dir, mid) <= 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        };

        if gamma > 0.0 {
            // Weight updates keep sum(atoms) = 1 and q = sum w_i v_i.
            if use_away {
                for (_, w) in atoms.iter_mut() {
                    *w *= 1.0 + gamma;
                }
                atoms[away_idx].1 -= gamma;
            } else if (gamma - 1.0).abs() < 1e-15 {
                atoms.clear();
                atoms.push((s.clone(), 1.0));
            } else {
                for (_, w) in atoms.iter_mut() {
                    *w *= 1.0 - gamma;
                }
                match atoms
                    .iter_mut()
                    .find(|(v, _)| max_abs_diff(v, &s) < 1e-12)
                {
                    Some((_, w)) => *w += gamma,
                    None => atoms.push((s.clone(), gamma)),
                }
            }
            atoms.retain(|(_, w)| *w > 1e-14);
            for (idx, qv) in q.iter_mut().enumerate() {
                *qv = (*qv + gamma * dir[idx]).max(0.0);
            }
            if iterations % 64 == 0 {
                // Rebuild q from the atom combination to cancel drift.
                for v in q.iter_mut() {
                    *v = 0.0;
                }
                for (v, w) in &atoms {
                    for (idx, qv) in q.iter_mut().enumerate() {
                        *qv += w * v[idx];
                    }
                }
            }
            cmi.marg_xy(&q, &mut qxy);
            f = cmi.value(&q, &qxy);
        }
        history.push(f);
        let k = history.len() - 1;
        let stagnant = k >= cfg.window
            && history[k - cfg.window] - history[k] <= cfg.tol * f.abs().max(1.0);
        if stagnant || gamma <= 0.0 {
            // Conditional-gradient steps zigzag on low-dimensional faces;
            // re-solving over the active set and then polishing along
            // transportation cycles either restores progress or confirms
            // the stall.
            let before = f;
            let (cq, cf) = correct_weights(&cmi, &mut atoms, 200);
            if cf < f {
                q = cq;
                cmi.marg_xy(&q, &mut qxy);
                f = cf;
            }
            let pf = cycle_polish(&cmi, &mut q, &mut qxy, 50);
            if pf < f {
                f = pf;
                atoms.clear();
                atoms.push((q.clone(), 1.0));
            }
            history.push(f);
            if before - f > cfg.tol * f.abs().max(1.0) {
                continue;
            }
            // The plain linearization cannot certify vertex optima; refine
            // the bound with the separable-potential dual before stopping.
            best_lower = best_lower.max(potential_bound(&poly, &q, &qxy) + cmi.fixed);
            converged = true;
            break;
        }
        if iterations % 256 == 0 {
            best_lower = best_lower.max(potential_bound(&poly, &q, &qxy) + cmi.fixed);
            if f - best_lower <= gap_tol_nats {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        best_lower = best_lower.max(potential_bound(&poly, &q, &qxy) + cmi.fixed);
        converged = f - best_lower <= gap_tol_nats;
    }

    Ok(TildeUi {
        value: InfoValue::from_nats(f.max(0.0)),
        q: DiscreteTriple::new_unchecked(km, kx, ky, normalize_total(q)),
        gap: InfoValue::from_nats((f - best_lower).max(0.0)),
        iterations,
        converged,
    })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn normalize_total(mut q: Vec<f64>) -> Vec<f64> {
    let s: f64 = q.iter().sum();
    for v in q.iter_mut() {
        *v /= s;
    }
    q
}

#[derive(Debug, Clone)]
pub struct TildePid {
    pub atoms: PidAtoms,
    pub ui_x: TildeUi,
}

/// Decomposition from the X-direction solve: the redundancy is the
/// co-information of the optimizer, which here equals I(M;X) - UI_X.
pub fn tilde_pid(dist: &DiscreteTriple, cfg: &SolverConfig) -> Result<TildePid> {
    let i_mx = mutual_information(dist, VarSet::M, VarSet::X, None)?;
    let i_my = mutual_information(dist, VarSet::M, VarSet::Y, None)?;
    let i_mxy = mutual_information(dist, VarSet::M, VarSet::XY, None)?;
    let ui_x = tilde_ui(dist, Direction::XMinusY, cfg)?;
    let ri = InfoValue::from_nats(i_mx.nats - ui_x.value.nats);
    let atoms = assemble_from_ri(Method::Broja, i_mx, i_my, i_mxy, ri);
    Ok(TildePid { atoms, ui_x })
}

#[derive(Debug, Clone)]
pub struct SymmetryReport {
    /// |RI from the X solve - RI from the Y solve| in bits.
    pub ri_residual_bits: f64,
    /// |RI - co-information of the X-side optimizer| in bits.
    pub interaction_residual_bits: f64,
}

/// The redundancy must not depend on which direction was solved, and must
/// match the interaction information of the optimizing coupling.
pub fn symmetry_check(dist: &DiscreteTriple, cfg: &SolverConfig) -> Result<SymmetryReport> {
    let i_mx = mutual_information(dist, VarSet::M, VarSet::X, None)?;
    let i_my = mutual_information(dist, VarSet::M, VarSet::Y, None)?;
    let (rx, ry) = rayon::join(
        || tilde_ui(dist, Direction::XMinusY, cfg),
        || tilde_ui(dist, Direction::YMinusX, cfg),
    );
    let (rx, ry) = (rx?, ry?);
    let ri_x = i_mx.bits - rx.value.bits;
    let ri_y = i_my.bits - ry.value.bits;
    let co = interaction_information(&rx.q)?;
    Ok(SymmetryReport {
        ri_residual_bits: (ri_x - ri_y).abs(),
        interaction_residual_bits: (ri_x - co.bits).abs(),
    })
}

/// Second entry point: optimize the emulation channel P_{X'|MY} directly
/// with a penalty pushing the induced (M,X') marginal onto the required one,
/// then project the result into the coupling polytope by per-message
/// iterative proportional fitting.
pub fn tilde_ui_via_channel(
    dist: &DiscreteTriple,
    direction: Direction,
    cfg: &SolverConfig,
) -> Result<TildeUi> {
    match direction {
        Direction::XMinusY => via_channel_xy(dist, cfg),
        Direction::YMinusX => {
            let r = via_channel_xy(&dist.swap_xy(), cfg)?;
            Ok(TildeUi { q: r.q.swap_xy(), ..r })
        }
    }
}

fn via_channel_xy(dist: &DiscreteTriple, cfg: &SolverConfig) -> Result<TildeUi> {
    let (km, kx, ky) = (dist.km(), dist.kx(), dist.ky());
    let cmi = Cmi::new(dist);
    let px = dist.conditional_channel(VarSet::X, VarSet::M)?.channel;
    let pmy = dist.marginalize(VarSet::M.union(VarSet::Y));
    let pmx = dist.marginalize(VarSet::M.union(VarSet::X));
    let pm = dist.marginalize(VarSet::M);

    // v[(m*ky + y)*kx + x] = P(x' = x | m, y); start at the KL-exact copy.
    let mut v = vec![0.0; km * ky * kx];
    for m in 0..km {
        for y in 0..ky {
            for x in 0..kx {
                v[(m * ky + y) * kx + x] = px.get(x, m).max(1e-12);
            }
        }
    }
    normalize_v(&mut v, km, ky, kx);

    let joint_of = |v: &[f64]| -> Vec<f64> {
        let mut j = vec![0.0; km * kx * ky];
        for m in 0..km {
            for y in 0..ky {
                let w = pmy.at(dist, m, 0, y);
                for x in 0..kx {
                    j[(m * kx + x) * ky + y] = w * v[(m * ky + y) * kx + x];
                }
            }
        }
        j
    };
    // Penalty stage objective: CMI of the induced joint plus mu times the
    // marginal mismatch KL. Both pieces are convex in v.
    let objective = |v: &[f64], mu: f64| -> f64 {
        let j = joint_of(v);
        let mut qxy = vec![0.0; kx * ky];
        cmi.marg_xy(&j, &mut qxy);
        let mut val = cmi.value(&j, &qxy);
        for m in 0..km {
            let w = pm.pmf()[m];
            if w < ZERO_EPS {
                continue;
            }
            for x in 0..kx {
                let p = px.get(x, m);
                if p < ZERO_EPS {
                    continue;
                }
                let vbar: f64 = (0..ky)
                    .map(|y| pmy.at(dist, m, 0, y) / w * v[(m * ky + y) * kx + x])
                    .sum();
                val += mu * w * p * (p / vbar.max(1e-300)).ln();
            }
        }
        val
    };

    let stages = [1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6];
    let per_stage = (cfg.max_iter / stages.len()).max(200);
    let mut iterations = 0;
    let mut converged = true;
    for &mu in &stages {
        let mut f = objective(&v, mu);
        let mut eta = 0.5f64;
        let mut history = vec![f];
        let mut stage_converged = false;
        for _ in 0..per_stage {
            iterations += 1;
            // Gradient wrt v, in nats.
            let j = joint_of(&v);
            let mut qxy = vec![0.0; kx * ky];
            cmi.marg_xy(&j, &mut qxy);
            let mut grad = vec![0.0; km * ky * kx];
            for m in 0..km {
                let w_m = pm.pmf()[m];
                for y in 0..ky {
                    let w = pmy.at(dist, m, 0, y);
                    if w < ZERO_EPS {
                        continue;
                    }
                    for x in 0..kx {
                        let jv = j[(m * kx + x) * ky + y];
                        let g_cmi =
                            w * (jv.max(LOG_EPS).ln() - qxy[x * ky + y].max(LOG_EPS).ln());
                        let p = px.get(x, m);
                        let g_pen = if w_m < ZERO_EPS || p < ZERO_EPS {
                            0.0
                        } else {
                            let vbar: f64 = (0..ky)
                                .map(|yy| {
                                    pmy.at(dist, m, 0, yy) / w_m * v[(m * ky + yy) * kx + x]
                                })
                                .sum();
                            -mu * w * p / vbar.max(1e-300)
                        };
                        grad[(m * ky + y) * kx + x] = g_cmi + g_pen;
                    }
                }
            }
            let mut accepted = false;
            while eta > 1e-16 {
                let mut trial = v.clone();
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
                let f_trial = objective(&trial, mu);
                if f_trial <= f {
                    v = trial;
                    f = f_trial;
                    eta = (eta * 1.5).min(1e3);
                    accepted = true;
                    break;
                }
                eta *= 0.5;
            }
            history.push(f);
            let k = history.len() - 1;
            if !accepted
                || (k >= cfg.window
                    && history[k - cfg.window] - history[k] <= cfg.tol * f.abs().max(1.0))
            {
                stage_converged = true;
                break;
            }
        }
        converged &= stage_converged;
    }

    // Exact feasibility: per-message IPF onto the prescribed marginals.
    let mut q = joint_of(&v);
    for m in 0..km {
        if pm.pmf()[m] < ZERO_EPS {
            for i in 0..kx * ky {
                q[m * kx * ky + i] = 0.0;
            }
            continue;
        }
        let rows: Vec<f64> = (0..kx).map(|x| pmx.at(dist, m, x, 0)).collect();
        let cols: Vec<f64> = (0..ky).map(|y| pmy.at(dist, m, 0, y)).collect();
        let block = &mut q[m * kx * ky..(m + 1) * kx * ky];
        for v in block.iter_mut() {
            *v = v.max(1e-300);
        }
        for _ in 0..20_000 {
            let mut err = 0.0f64;
            for x in 0..kx {
                let s: f64 = (0..ky).map(|y| block[x * ky + y]).sum();
                let target = rows[x];
                if s > 0.0 {
                    let ratio = target / s;
                    for y in 0..ky {
                        block[x * ky + y] *= ratio;
                    }
                }
                err = err.max((s - target).abs());
            }
            for y in 0..ky {
                let s: f64 = (0..kx).map(|x| block[x * ky + y]).sum();
                let target = cols[y];
                if s > 0.0 {
                    let ratio = target / s;
                    for x in 0..kx {
                        block[x * ky + y] *= ratio;
                    }
                }
                err = err.max((s - target).abs());
            }
            if err < 1e-13 {
                break;
            }
        }
    }
    let mut qxy = vec![0.0; kx * ky];
    cmi.marg_xy(&q, &mut qxy);
    // The projection undoes part of the final penalty stage; a cycle sweep
    // restores the optimum inside the polytope.
    let value = cycle_polish(&cmi, &mut q, &mut qxy, 200);
    let poly = Polytope::new(dist);
    let lower = potential_bound(&poly, &q, &qxy) + cmi.fixed;
    Ok(TildeUi {
        value: InfoValue::from_nats(value.max(0.0)),
        q: DiscreteTriple::new_unchecked(km, kx, ky, normalize_total(q)),
        gap: InfoValue::from_nats((value - lower).max(0.0)),
        iterations,
        converged,
    })
}

fn normalize_v(v: &mut [f64], km: usize, ky: usize, kx: usize) {
    for col in 0..km * ky {
        let base = col * kx;
        let s: f64 = v[base..base + kx].iter().sum();
        for x in 0..kx {
            v[base + x] /= s;
        }
    }
}

/// Exhaustive oracle for tiny instances where the coupling polytope is a
/// low-dimensional box; used by tests. Only supports 2x2x2 supports whose
/// per-message blocks leave at most one degree of freedom.
pub fn exhaustive_ui_2x2x2(dist: &DiscreteTriple, steps: usize) -> Result<f64> {
    if dist.km() != 2 || dist.kx() != 2 || dist.ky() != 2 {
        return Err(Error::InvalidArgument(
            "exhaustive oracle needs a 2x2x2 triple".into(),
        ));
    }
    let cmi = Cmi::new(dist);
    let pmx = dist.marginalize(VarSet::M.union(VarSet::X));
    let pmy = dist.marginalize(VarSet::M.union(VarSet::Y));
    // Per message the block is determined by q(m, 0, 0) inside an interval.
    let bounds = |m: usize| -> (f64, f64) {
        let r0 = pmx.at(dist, m, 0, 0);
        let c0 = pmy.at(dist, m, 0, 0);
        let r1 = pmx.at(dist, m, 1, 0);
        let lo = (r0 + c0 - (r0 + r1)).max(0.0);
        let hi = r0.min(c0);
        (lo, hi)
    };
    let fill = |q: &mut [f64], m: usize, a: f64| {
        let r0 = pmx.at(dist, m, 0, 0);
        let c0 = pmy.at(dist, m, 0, 0);
        let r1 = pmx.at(dist, m, 1, 0);
        let base = m * 4;
        q[base] = a;
        q[base + 1] = r0 - a;
        q[base + 2] = c0 - a;
        q[base + 3] = r1 - (c0 - a);
    };
    let mut best = f64::INFINITY;
    let (lo0, hi0) = bounds(0);
    let (lo1, hi1) = bounds(1);
    let mut q = vec![0.0; 8];
    let mut qxy = vec![0.0; 4];
    for i in 0..=steps {
        let a0 = lo0 + (hi0 - lo0) * i as f64 / steps as f64;
        for j in 0..=steps {
            let a1 = lo1 + (hi1 - lo1) * j as f64 / steps as f64;
            fill(&mut q, 0, a0);
            fill(&mut q, 1, a1);
            if q.iter().any(|v| *v < -1e-12) {
                continue;
            }
            cmi.marg_xy(&q, &mut qxy);
            let f = cmi.value(&q, &qxy);
            if f < best {
                best = f;
            }
        }
    }
    Ok(best)
}
