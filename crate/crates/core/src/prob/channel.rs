use crate::error::{invalid, Result};
use crate::prob::PROB_TOL;

/// A column-stochastic kernel: `kernel[out * in_size + inp]` is the
/// probability of `out` given input `inp`. Every column sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    out_size: usize,
    in_size: usize,
    kernel: Vec<f64>,
}

impl Channel {
    pub fn new(out_size: usize, in_size: usize, kernel: Vec<f64>) -> Result<Channel> {
        if out_size == 0 || in_size == 0 {
            return Err(invalid("channel dimensions must be positive"));
        }
        if kernel.len() != out_size * in_size {
            return Err(invalid(format!(
                "channel kernel has {} entries, expected {} ({} x {})",
                kernel.len(),
                out_size * in_size,
                out_size,
                in_size
            )));
        }
        let mut kernel = kernel;
        for (i, v) in kernel.iter_mut().enumerate() {
            if !v.is_finite() || *v < -1e-12 {
                return Err(invalid(format!("channel entry {i} is {v}, must be >= 0")));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        for inp in 0..in_size {
            let s: f64 = (0..out_size).map(|o| kernel[o * in_size + inp]).sum();
            if (s - 1.0).abs() > PROB_TOL {
                return Err(invalid(format!(
                    "channel column {inp} sums to {s}, must be 1 within {PROB_TOL}"
                )));
            }
        }
        Ok(Channel { out_size, in_size, kernel })
    }

    /// Caller guarantees stochasticity; used by solvers on normalized data.
    pub(crate) fn new_unchecked(out_size: usize, in_size: usize, kernel: Vec<f64>) -> Channel {
        debug_assert_eq!(kernel.len(), out_size * in_size);
        Channel { out_size, in_size, kernel }
    }

    /// Builds from per-input distributions: `columns[inp]` is over outputs.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Channel> {
        if columns.is_empty() {
            return Err(invalid("channel needs at least one column"));
        }
        let out_size = columns[0].len();
        let in_size = columns.len();
        let mut kernel = vec![0.0; out_size * in_size];
        for (inp, col) in columns.iter().enumerate() {
            if col.len() != out_size {
                return Err(invalid("channel columns must share one length"));
            }
            for (o, v) in col.iter().enumerate() {
                kernel[o * in_size + inp] = *v;
            }
        }
        Channel::new(out_size, in_size, kernel)
    }

    pub fn identity(n: usize) -> Channel {
        let mut kernel = vec![0.0; n * n];
        for i in 0..n {
            kernel[i * n + i] = 1.0;
        }
        Channel { out_size: n, in_size: n, kernel }
    }

    /// Every input is mapped to the same output distribution.
    pub fn constant(column: &[f64], in_size: usize) -> Result<Channel> {
        Channel::from_columns(&vec![column.to_vec(); in_size])
    }

    pub fn uniform(out_size: usize, in_size: usize) -> Channel {
        Channel {
            out_size,
            in_size,
            kernel: vec![1.0 / out_size as f64; out_size * in_size],
        }
    }

    pub fn out_size(&self) -> usize {
        self.out_size
    }

    pub fn in_size(&self) -> usize {
        self.in_size
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    #[inline]
    pub fn get(&self, out: usize, inp: usize) -> f64 {
        self.kernel[out * self.in_size + inp]
    }

    pub fn column(&self, inp: usize) -> Vec<f64> {
        (0..self.out_size).map(|o| self.get(o, inp)).collect()
    }

    /// `self` after `inner`: returns the channel input-of-inner -> output-of-self.
    pub fn compose(&self, inner: &Channel) -> Result<Channel> {
        if self.in_size != inner.out_size {
            return Err(invalid(format!(
                "compose mismatch: outer expects {} inputs, inner produces {} outputs",
                self.in_size, inner.out_size
            )));
        }
        let mut kernel = vec![0.0; self.out_size * inner.in_size];
        for o in 0..self.out_size {
            for i in 0..inner.in_size {
                let mut s = 0.0;
                for k in 0..self.in_size {
                    s += self.get(o, k) * inner.get(k, i);
                }
                kernel[o * inner.in_size + i] = s;
            }
        }
        Ok(Channel { out_size: self.out_size, in_size: inner.in_size, kernel })
    }

    /// Pushes an input distribution through, returning the output distribution.
    pub fn apply(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.in_size {
            return Err(invalid(format!(
                "input distribution has {} entries, channel expects {}",
                input.len(),
                self.in_size
            )));
        }
        let mut out = vec![0.0; self.out_size];
        for o in 0..self.out_size {
            let mut s = 0.0;
            for i in 0..self.in_size {
                s += self.get(o, i) * input[i];
            }
            out[o] = s;
        }
        Ok(out)
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &Channel) -> f64 {
        assert_eq!(self.kernel.len(), other.kernel.len());
        self.kernel
            .iter()
            .zip(&other.kernel)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_columns() {
        assert!(Channel::new(2, 1, vec![0.6, 0.5]).is_err());
        assert!(Channel::new(2, 1, vec![1.2, -0.2]).is_err());
        assert!(Channel::new(2, 2, vec![1.0, 0.0, 0.0]).is_err());
        assert!(Channel::new(2, 1, vec![0.5, 0.5]).is_ok());
    }

    #[test]
    fn compose_matches_bsc_cascade() {
        // BSC(0.1) after BSC(0.2) is BSC(0.26).
        let bsc = |e: f64| Channel::new(2, 2, vec![1.0 - e, e, e, 1.0 - e]).unwrap();
        let c = bsc(0.1).compose(&bsc(0.2)).unwrap();
        let want = bsc(0.26);
        assert!(c.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn apply_pushes_forward() {
        let c = Channel::new(2, 2, vec![0.9, 0.2, 0.1, 0.8]).unwrap();
        let out = c.apply(&[0.5, 0.5]).unwrap();
        assert!((out[0] - 0.55).abs() < 1e-12);
        assert!((out[1] - 0.45).abs() < 1e-12);
    }

    #[test]
    fn identity_is_neutral() {
        let c = Channel::new(3, 2, vec![0.2, 0.1, 0.3, 0.4, 0.5, 0.5]).unwrap();
        let left = Channel::identity(3).compose(&c).unwrap();
        let right = c.compose(&Channel::identity(2)).unwrap();
        assert!(left.max_abs_diff(&c) < 1e-15);
        assert!(right.max_abs_diff(&c) < 1e-15);
    }
}
