use crate::error::{invalid, Result};
use crate::prob::{Channel, Var, VarSet, DEGENERATE_EPS, PROB_TOL};

/// A joint pmf over (M, X, Y) with finite alphabets. Stored flat, row-major
/// with m slowest and y fastest: `pmf[(m * kx + x) * ky + y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteTriple {
    km: usize,
    kx: usize,
    ky: usize,
    pmf: Vec<f64>,
}

/// A marginal over a subset of coordinates, flat row-major in canonical order.
#[derive(Debug, Clone)]
pub struct Marginal {
    vars: VarSet,
    dims: Vec<usize>,
    pmf: Vec<f64>,
}

/// A conditional kernel together with the inputs whose conditioning event
/// had probability below `DEGENERATE_EPS` (those columns are uniform).
#[derive(Debug, Clone)]
pub struct ConditionalChannel {
    pub channel: Channel,
    pub degenerate_inputs: Vec<usize>,
}

impl DiscreteTriple {
    pub fn new(km: usize, kx: usize, ky: usize, pmf: Vec<f64>) -> Result<DiscreteTriple> {
        if km == 0 || kx == 0 || ky == 0 {
            return Err(invalid("alphabet sizes must be positive"));
        }
        if pmf.len() != km * kx * ky {
            return Err(invalid(format!(
                "pmf has {} entries, expected {} ({km} x {kx} x {ky})",
                pmf.len(),
                km * kx * ky
            )));
        }
        let mut pmf = pmf;
        for (i, v) in pmf.iter_mut().enumerate() {
            if !v.is_finite() || *v < -1e-12 {
                return Err(invalid(format!("pmf entry {i} is {v}, must be >= 0")));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(invalid(format!(
                "pmf sums to {total}, must be 1 within {PROB_TOL}"
            )));
        }
        Ok(DiscreteTriple { km, kx, ky, pmf })
    }

    pub(crate) fn new_unchecked(km: usize, kx: usize, ky: usize, pmf: Vec<f64>) -> DiscreteTriple {
        debug_assert_eq!(pmf.len(), km * kx * ky);
        DiscreteTriple { km, kx, ky, pmf }
    }

    pub fn km(&self) -> usize {
        self.km
    }

    pub fn kx(&self) -> usize {
        self.kx
    }

    pub fn ky(&self) -> usize {
        self.ky
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn dim(&self, v: Var) -> usize {
        match v {
            Var::M => self.km,
            Var::X => self.kx,
            Var::Y => self.ky,
        }
    }

    #[inline]
    pub fn index(&self, m: usize, x: usize, y: usize) -> usize {
        (m * self.kx + x) * self.ky + y
    }

    #[inline]
    pub fn p(&self, m: usize, x: usize, y: usize) -> f64 {
        self.pmf[self.index(m, x, y)]
    }

    /// The same joint with the roles of X and Y exchanged.
    pub fn swap_xy(&self) -> DiscreteTriple {
        let mut pmf = vec![0.0; self.pmf.len()];
        for m in 0..self.km {
            for x in 0..self.kx {
                for y in 0..self.ky {
                    pmf[(m * self.ky + y) * self.kx + x] = self.p(m, x, y);
                }
            }
        }
        DiscreteTriple { km: self.km, kx: self.ky, ky: self.kx, pmf }
    }

    pub fn marginalize(&self, keep: VarSet) -> Marginal {
        let dims: Vec<usize> = keep.vars().map(|v| self.dim(v)).collect();
        let size = dims.iter().product::<usize>().max(1);
        let mut pmf = vec![0.0; size];
        for m in 0..self.km {
            for x in 0..self.kx {
                for y in 0..self.ky {
                    pmf[flat_index(keep, self, m, x, y)] += self.p(m, x, y);
                }
            }
        }
        Marginal { vars: keep, dims, pmf }
    }

    /// The kernel P_{target | given}. Inputs and outputs are flat indices in
    /// canonical coordinate order. Degenerate inputs get a uniform column.
    pub fn conditional_channel(&self, target: VarSet, given: VarSet) -> Result<ConditionalChannel> {
        if target.is_empty() || given.is_empty() {
            return Err(invalid("conditional_channel needs nonempty target and given"));
        }
        if target.intersects(given) {
            return Err(invalid("target and given must be disjoint"));
        }
        let joint = self.marginalize(target.union(given));
        let cond = self.marginalize(given);
        let out_size: usize = target.vars().map(|v| self.dim(v)).product();
        let in_size: usize = given.vars().map(|v| self.dim(v)).product();
        let mut kernel = vec![0.0; out_size * in_size];
        let mut degenerate_inputs = Vec::new();
        for inp in 0..in_size {
            if cond.pmf[inp] < DEGENERATE_EPS {
                degenerate_inputs.push(inp);
                for o in 0..out_size {
                    kernel[o * in_size + inp] = 1.0 / out_size as f64;
                }
            } else {
                for o in 0..out_size {
                    let j = joint_index(target, given, self, o, inp);
                    kernel[o * in_size + inp] = joint.pmf[j] / cond.pmf[inp];
                }
            }
        }
        Ok(ConditionalChannel {
            channel: Channel::new_unchecked(out_size, in_size, kernel),
            degenerate_inputs,
        })
    }

    /// Total mass on cells the support test calls zero; used by diagnostics.
    pub fn support_size(&self) -> usize {
        self.pmf.iter().filter(|v| **v >= crate::prob::ZERO_EPS).count()
    }
}

impl Marginal {
    pub fn vars(&self) -> VarSet {
        self.vars
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// Value at the cell selected by full coordinates (m, x, y); coordinates
    /// outside the marginal's variable set are ignored.
    #[inline]
    pub fn at(&self, dist: &DiscreteTriple, m: usize, x: usize, y: usize) -> f64 {
        self.pmf[flat_index(self.vars, dist, m, x, y)]
    }
}

/// Flat index of the (m, x, y) cell inside the marginal over `keep`.
#[inline]
fn flat_index(keep: VarSet, dist: &DiscreteTriple, m: usize, x: usize, y: usize) -> usize {
    let mut idx = 0;
    if keep.contains(Var::M) {
        idx = m;
    }
    if keep.contains(Var::X) {
        idx = idx * dist.kx + x;
    }
    if keep.contains(Var::Y) {
        idx = idx * dist.ky + y;
    }
    idx
}

/// Index into the (target ∪ given) marginal given flat target and given indices.
fn joint_index(
    target: VarSet,
    given: VarSet,
    dist: &DiscreteTriple,
    out: usize,
    inp: usize,
) -> usize {
    // Unpack flat indices back into per-variable coordinates.
    let unpack = |set: VarSet, mut flat: usize| {
        let mut coords = [0usize; 3];
        let vars: Vec<Var> = set.vars().collect();
        for v in vars.iter().rev() {
            let d = dist.dim(*v);
            coords[*v as usize] = flat % d;
            flat /= d;
        }
        coords
    };
    let t = unpack(target, out);
    let g = unpack(given, inp);
    let pick = |v: Var| {
        if target.contains(v) {
            t[v as usize]
        } else {
            g[v as usize]
        }
    };
    flat_index(
        target.union(given),
        dist,
        pick(Var::M),
        pick(Var::X),
        pick(Var::Y),
    )
}
