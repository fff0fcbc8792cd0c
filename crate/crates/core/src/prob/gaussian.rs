use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::prob::{InfoValue, Var, VarSet};

/// Minimum eigenvalue allowed before a full covariance counts as indefinite.
pub const PSD_TOL: f64 = 1e-9;
/// Blocks that must be invertible need eigenvalues at least this large
/// relative to the largest one.
const SINGULAR_REL: f64 = 1e-12;

/// A zero-mean jointly Gaussian triple (M, X, Y) given by its covariance,
/// with coordinates ordered M then X then Y.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianTriple {
    dm: usize,
    dx: usize,
    dy: usize,
    cov: DMatrix<f64>,
}

impl GaussianTriple {
    pub fn new(dm: usize, dx: usize, dy: usize, cov: DMatrix<f64>) -> Result<GaussianTriple> {
        if dm == 0 || dx == 0 || dy == 0 {
            return Err(invalid("gaussian dimensions must be positive"));
        }
        let d = dm + dx + dy;
        if cov.nrows() != d || cov.ncols() != d {
            return Err(invalid(format!(
                "covariance is {}x{}, expected {d}x{d}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        let mut asym = 0.0f64;
        for i in 0..d {
            for j in (i + 1)..d {
                asym = asym.max((cov[(i, j)] - cov[(j, i)]).abs());
            }
        }
        if asym > 1e-9 {
            return Err(invalid(format!(
                "covariance is asymmetric: max |a_ij - a_ji| = {asym:.3e}"
            )));
        }
        let cov = symmetrize(&cov);
        let eigs = nalgebra::SymmetricEigen::new(cov.clone()).eigenvalues;
        let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_TOL {
            return Err(invalid(format!(
                "covariance is not positive semidefinite: min eigenvalue {min_eig:.3e}"
            )));
        }
        let g = GaussianTriple { dm, dx, dy, cov };
        // The message block must be strictly positive definite.
        let sm = g.block(VarSet::M, VarSet::M);
        let m_eigs = nalgebra::SymmetricEigen::new(sm).eigenvalues;
        let m_min = m_eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        if m_min < 1e-9 {
            return Err(invalid(format!(
                "message covariance block is singular: min eigenvalue {m_min:.3e}"
            )));
        }
        Ok(g)
    }

    pub fn dm(&self) -> usize {
        self.dm
    }

    pub fn dx(&self) -> usize {
        self.dx
    }

    pub fn dy(&self) -> usize {
        self.dy
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn dim(&self, v: Var) -> usize {
        match v {
            Var::M => self.dm,
            Var::X => self.dx,
            Var::Y => self.dy,
        }
    }

    /// Row indices of a variable subset in the full covariance.
    pub fn indices(&self, set: VarSet) -> Vec<usize> {
        let mut out = Vec::new();
        let mut offset = 0;
        for v in Var::ALL {
            let d = self.dim(v);
            if set.contains(v) {
                out.extend(offset..offset + d);
            }
            offset += d;
        }
        out
    }

    /// The covariance block Sigma_{rows, cols}.
    pub fn block(&self, rows: VarSet, cols: VarSet) -> DMatrix<f64> {
        let ri = self.indices(rows);
        let ci = self.indices(cols);
        DMatrix::from_fn(ri.len(), ci.len(), |i, j| self.cov[(ri[i], ci[j])])
    }

    /// Sigma_{of|given} = Sigma_oo - Sigma_og Sigma_gg^{-1} Sigma_go.
    pub fn conditional_cov(&self, of: VarSet, given: VarSet) -> Result<DMatrix<f64>> {
        let soo = self.block(of, of);
        if given.is_empty() {
            return Ok(soo);
        }
        let sog = self.block(of, given);
        let sgg = self.block(given, given);
        let inv = invert_spd(&sgg, &format!("Sigma_{given}"))?;
        Ok(&soo - &sog * inv * sog.transpose())
    }

    /// The swapped triple (M, Y, X); block structure is permuted accordingly.
    pub fn swap_xy(&self) -> GaussianTriple {
        let order: Vec<usize> = self
            .indices(VarSet::M)
            .into_iter()
            .chain(self.indices(VarSet::Y))
            .chain(self.indices(VarSet::X))
            .collect();
        let d = order.len();
        let cov = DMatrix::from_fn(d, d, |i, j| self.cov[(order[i], order[j])]);
        GaussianTriple { dm: self.dm, dx: self.dy, dy: self.dx, cov }
    }
}

fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (a + a.transpose())
}

/// log det of a symmetric PSD matrix; errors with `label` when it is
/// singular relative to its scale. log det of the empty matrix is 0.
pub fn log_det_spd(a: &DMatrix<f64>, label: &str) -> Result<f64> {
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    let eigs = nalgebra::SymmetricEigen::new(symmetrize(a)).eigenvalues;
    let max = eigs.iter().cloned().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let floor = (max * SINGULAR_REL).max(f64::MIN_POSITIVE);
    let mut ld = 0.0;
    for v in eigs.iter() {
        if *v < floor {
            return Err(Error::SingularModel(format!(
                "{label} has eigenvalue {v:.3e} (scale {max:.3e})"
            )));
        }
        ld += v.ln();
    }
    Ok(ld)
}

/// Inverse of a symmetric positive definite matrix via its eigensystem.
pub fn invert_spd(a: &DMatrix<f64>, label: &str) -> Result<DMatrix<f64>> {
    if a.nrows() == 0 {
        return Ok(a.clone());
    }
    let eig = nalgebra::SymmetricEigen::new(symmetrize(a));
    let max = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    let floor = (max * SINGULAR_REL).max(f64::MIN_POSITIVE);
    if eig.eigenvalues.iter().any(|v| *v < floor) {
        return Err(Error::SingularModel(format!(
            "{label} is singular: min eigenvalue {:.3e} (scale {max:.3e})",
            eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
        )));
    }
    let inv_vals = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|v| 1.0 / v),
    );
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&inv_vals) * eig.eigenvectors.transpose())
}

/// Symmetric inverse square root, for whitening.
pub fn inv_sqrt_spd(a: &DMatrix<f64>, label: &str) -> Result<DMatrix<f64>> {
    let eig = nalgebra::SymmetricEigen::new(symmetrize(a));
    let max = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    let floor = (max * SINGULAR_REL).max(f64::MIN_POSITIVE);
    if eig.eigenvalues.iter().any(|v| *v < floor) {
        return Err(Error::SingularModel(format!(
            "{label} is singular and cannot be whitened"
        )));
    }
    let vals = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|v| 1.0 / v.sqrt()),
    );
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose())
}

/// I(A; B | C) for a Gaussian triple, via log determinants:
/// (log det S_{AC} + log det S_{BC} - log det S_C - log det S_{ABC}) / 2.
pub fn gaussian_mi(
    g: &GaussianTriple,
    a: VarSet,
    b: VarSet,
    given: Option<VarSet>,
) -> Result<InfoValue> {
    let c = given.unwrap_or(VarSet::EMPTY);
    if a.is_empty() || b.is_empty() {
        return Err(invalid("gaussian_mi needs nonempty argument sets"));
    }
    if a.intersects(b) || a.intersects(c) || b.intersects(c) {
        return Err(invalid("gaussian_mi arguments must be disjoint"));
    }
    let ld = |set: VarSet| -> Result<f64> {
        if set.is_empty() {
            Ok(0.0)
        } else {
            log_det_spd(&g.block(set, set), &format!("Sigma_{set}"))
        }
    };
    let nats = 0.5 * (ld(a.union(c))? + ld(b.union(c))? - ld(c)? - ld(a.union(b).union(c))?);
    Ok(InfoValue::from_nats(nats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn rejects_asymmetric_and_indefinite() {
        let mut a = DMatrix::identity(3, 3);
        a[(0, 1)] = 0.5;
        assert!(GaussianTriple::new(1, 1, 1, a).is_err());
        let mut b = DMatrix::identity(3, 3);
        b[(0, 1)] = 2.0;
        b[(1, 0)] = 2.0;
        assert!(GaussianTriple::new(1, 1, 1, b).is_err());
        assert!(GaussianTriple::new(1, 1, 1, DMatrix::identity(3, 3)).is_ok());
    }

    #[test]
    fn rejects_singular_message_block() {
        let mut c = DMatrix::identity(4, 4);
        c[(0, 0)] = 0.0;
        assert!(matches!(
            GaussianTriple::new(2, 1, 1, c),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn scalar_channel_mi_is_half_log_snr() {
        // X = M + N with Var M = 1, Var N = 1: I(M;X) = 0.5 log2(2) = 0.5 bits.
        let g = corpus::gaussian_scalar(1.0, 1.0);
        let v = gaussian_mi(&g, VarSet::M, VarSet::X, None).unwrap();
        assert!((v.bits - 0.5).abs() < 1e-12);
    }

    #[test]
    fn chain_rule_holds() {
        let g = corpus::random_gaussian(&mut corpus::rng(5), 2, 2, 2);
        let lhs = gaussian_mi(&g, VarSet::M, VarSet::XY, None).unwrap().nats;
        let rhs = gaussian_mi(&g, VarSet::M, VarSet::X, None).unwrap().nats
            + gaussian_mi(&g, VarSet::M, VarSet::Y, Some(VarSet::X)).unwrap().nats;
        assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn mi_matches_discretized_oracle() {
        // Scalar (M, X): compare against a fine-grid discretization of the
        // 2-D density. Grid oracle built independently of the log-det path.
        let g = corpus::gaussian_scalar(1.0, 0.5);
        let exact = gaussian_mi(&g, VarSet::M, VarSet::X, None).unwrap().bits;
        let cov = g.block(VarSet::M.union(VarSet::X), VarSet::M.union(VarSet::X));
        let (smm, sxx, smx) = (cov[(0, 0)], cov[(1, 1)], cov[(0, 1)]);
        let det = smm * sxx - smx * smx;
        let n = 401;
        let (lo, hi) = (-8.0f64, 8.0f64);
        let h = (hi - lo) / (n as f64 - 1.0);
        let mut joint = vec![0.0; n * n];
        let mut total = 0.0;
        for i in 0..n {
            let m = lo + h * i as f64;
            for j in 0..n {
                let x = lo + h * j as f64;
                let q = (sxx * m * m - 2.0 * smx * m * x + smm * x * x) / det;
                let p = (-0.5 * q).exp();
                joint[i * n + j] = p;
                total += p;
            }
        }
        for v in joint.iter_mut() {
            *v /= total;
        }
        let mut pm = vec![0.0; n];
        let mut px = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                pm[i] += joint[i * n + j];
                px[j] += joint[i * n + j];
            }
        }
        let mut mi_bits = 0.0;
        for i in 0..n {
            for j in 0..n {
                let p = joint[i * n + j];
                if p > 1e-300 {
                    mi_bits += p * (p / (pm[i] * px[j])).log2();
                }
            }
        }
        assert!(
            (mi_bits - exact).abs() < 0.02,
            "grid {mi_bits} vs exact {exact}"
        );
    }

    #[test]
    fn conditional_cov_of_independent_noise() {
        let g = corpus::gaussian_scalar(1.0, 1.0);
        // Sigma_{X|M} = Var N = 1.
        let c = g.conditional_cov(VarSet::X, VarSet::M).unwrap();
        assert!((c[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn swap_xy_permutes_blocks() {
        let g = corpus::random_gaussian(&mut corpus::rng(9), 2, 3, 1);
        let s = g.swap_xy();
        assert_eq!(s.dx(), 1);
        assert_eq!(s.dy(), 3);
        let a = g.block(VarSet::M, VarSet::X);
        let b = s.block(VarSet::M, VarSet::Y);
        assert!((a - b).abs().max() < 1e-15);
        let mi_g = gaussian_mi(&g, VarSet::M, VarSet::X, Some(VarSet::Y)).unwrap().nats;
        let mi_s = gaussian_mi(&s, VarSet::M, VarSet::Y, Some(VarSet::X)).unwrap().nats;
        assert!((mi_g - mi_s).abs() < 1e-12);
    }

    #[test]
    fn inv_sqrt_whitens() {
        let g = corpus::random_gaussian(&mut corpus::rng(13), 3, 2, 2);
        let sm = g.block(VarSet::M, VarSet::M);
        let w = inv_sqrt_spd(&sm, "Sigma_M").unwrap();
        let eye = &w * &sm * &w;
        assert!((eye - DMatrix::identity(3, 3)).abs().max() < 1e-9);
    }
}
