//! Blackwell sufficiency and Le Cam deficiency between two observation
//! channels px = P_{X|M} and py = P_{Y|M} sharing an input alphabet, and the
//! Gaussian informativeness order through the SNR matrices Lambda.

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::lp::{Lp, LpStatus};
use crate::prob::gaussian::{inv_sqrt_spd, invert_spd};
use crate::prob::{Channel, GaussianTriple, VarSet};

/// Max-norm residual below which a garbling witness counts as exact.
pub const SUFFICIENCY_TOL: f64 = 1e-7;
/// PSD margin for the Gaussian order: min eigenvalue >= -PSD_MARGIN.
pub const PSD_MARGIN: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct SufficiencyVerdict {
    pub sufficient: bool,
    /// Max-norm violation of the best garbling witness.
    pub residual: f64,
    /// The best witness W with W compose px closest to py.
    pub witness: Channel,
}

#[derive(Debug, Clone)]
pub struct LeCamResult {
    /// min over garblings W of max_m TV(W px(.|m), py(.|m)), in [0, 1].
    pub value: f64,
    pub witness: Channel,
}

/// Which side is claimed sufficient in a Gaussian order query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominant {
    X,
    Y,
}

fn check_shapes(px: &Channel, py: &Channel) -> Result<()> {
    if px.in_size() != py.in_size() {
        return Err(invalid(format!(
            "channels must share the input alphabet: {} vs {}",
            px.in_size(),
            py.in_size()
        )));
    }
    Ok(())
}

/// Rebuilds a clean column-stochastic channel from raw LP values.
fn channel_from_lp(values: &[f64], out_size: usize, in_size: usize) -> Channel {
    let mut kernel = vec![0.0; out_size * in_size];
    for inp in 0..in_size {
        let mut col: Vec<f64> = (0..out_size)
            .map(|o| values[o * in_size + inp].max(0.0))
            .collect();
        let s: f64 = col.iter().sum();
        if s <= 0.0 {
            col = vec![1.0 / out_size as f64; out_size];
        } else {
            for v in col.iter_mut() {
                *v /= s;
            }
        }
        for (o, v) in col.iter().enumerate() {
            kernel[o * in_size + inp] = *v;
        }
    }
    Channel::new_unchecked(out_size, in_size, kernel)
}

/// Tests whether X is sufficient for Y: some garbling W of X reproduces py.
/// Minimizes the max-norm violation of W px = py over column-stochastic W.
pub fn sufficiency_discrete(px: &Channel, py: &Channel) -> Result<SufficiencyVerdict> {
    check_shapes(px, py)?;
    let km = px.in_size();
    let (kx, ky) = (px.out_size(), py.out_size());
    let nw = ky * kx;
    // Variables: W entries (row-major ky x kx), then t.
    let mut cost = vec![0.0; nw + 1];
    cost[nw] = 1.0;
    let mut lp = Lp::minimize(cost);
    for y in 0..ky {
        for m in 0..km {
            let mut pos = vec![0.0; nw + 1];
            for x in 0..kx {
                pos[y * kx + x] = px.get(x, m);
            }
            pos[nw] = -1.0;
            let mut neg: Vec<f64> = pos.iter().map(|v| -v).collect();
            neg[nw] = -1.0;
            lp.le(pos, py.get(y, m));
            lp.le(neg, -py.get(y, m));
        }
    }
    for x in 0..kx {
        let mut a = vec![0.0; nw + 1];
        for y in 0..ky {
            a[y * kx + x] = 1.0;
        }
        lp.eq(a, 1.0);
    }
    let sol = lp.solve()?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!(
            "sufficiency LP ended {:?} on a feasible program",
            sol.status
        )));
    }
    let witness = channel_from_lp(&sol.x[..nw], ky, kx);
    let composed = witness.compose(px)?;
    let mut residual = 0.0f64;
    for y in 0..ky {
        for m in 0..km {
            residual = residual.max((composed.get(y, m) - py.get(y, m)).abs());
        }
    }
    Ok(SufficiencyVerdict { sufficient: residual <= SUFFICIENCY_TOL, residual, witness })
}

/// One-sided Le Cam deficiency: how well the best garbling of X emulates Y,
/// measured by the worst-case total variation over messages.
pub fn lecam_deficiency(px: &Channel, py: &Channel) -> Result<LeCamResult> {
    check_shapes(px, py)?;
    let km = px.in_size();
    let (kx, ky) = (px.out_size(), py.out_size());
    let nw = ky * kx;
    let ne = ky * km;
    // Variables: W (ky x kx), e (ky x km) slack for absolute values, t.
    let nv = nw + ne + 1;
    let mut cost = vec![0.0; nv];
    cost[nv - 1] = 1.0;
    let mut lp = Lp::minimize(cost);
    for y in 0..ky {
        for m in 0..km {
            let e_idx = nw + y * km + m;
            let mut pos = vec![0.0; nv];
            for x in 0..kx {
                pos[y * kx + x] = px.get(x, m);
            }
            pos[e_idx] = -1.0;
            lp.le(pos, py.get(y, m));
            let mut neg = vec![0.0; nv];
            for x in 0..kx {
                neg[y * kx + x] = -px.get(x, m);
            }
            neg[e_idx] = -1.0;
            lp.le(neg, -py.get(y, m));
        }
    }
    for m in 0..km {
        let mut a = vec![0.0; nv];
        for y in 0..ky {
            a[nw + y * km + m] = 1.0;
        }
        a[nv - 1] = -2.0;
        lp.le(a, 0.0);
    }
    for x in 0..kx {
        let mut a = vec![0.0; nv];
        for y in 0..ky {
            a[y * kx + x] = 1.0;
        }
        lp.eq(a, 1.0);
    }
    let sol = lp.solve()?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!(
            "Le Cam LP ended {:?} on a feasible program",
            sol.status
        )));
    }
    let witness = channel_from_lp(&sol.x[..nw], ky, kx);
    let composed = witness.compose(px)?;
    let mut value = 0.0f64;
    for m in 0..km {
        let tv: f64 = (0..ky)
            .map(|y| (composed.get(y, m) - py.get(y, m)).abs())
            .sum::<f64>()
            / 2.0;
        value = value.max(tv);
    }
    Ok(LeCamResult { value: value.min(1.0), witness })
}

#[derive(Debug, Clone)]
pub struct LambdaPair {
    pub lambda_x: DMatrix<f64>,
    pub lambda_y: DMatrix<f64>,
}

/// SNR matrices in whitened message coordinates:
/// Lambda_X = Sigma_M^{-1/2} Sigma_{XM}^T Sigma_{X|M}^{-1} Sigma_{XM} Sigma_M^{-1/2}.
pub fn lambda_matrices(g: &GaussianTriple) -> Result<LambdaPair> {
    let wm = inv_sqrt_spd(&g.block(VarSet::M, VarSet::M), "Sigma_M")?;
    let one = |obs: VarSet, label: &str| -> Result<DMatrix<f64>> {
        let sxm = g.block(obs, VarSet::M);
        let sx_cond = g.conditional_cov(obs, VarSet::M)?;
        let inv = invert_spd(&sx_cond, label)?;
        Ok(&wm * sxm.transpose() * inv * sxm * &wm)
    };
    Ok(LambdaPair {
        lambda_x: one(VarSet::X, "Sigma_{X|M}")?,
        lambda_y: one(VarSet::Y, "Sigma_{Y|M}")?,
    })
}

/// Gaussian informativeness order: the dominant side is sufficient iff its
/// Lambda dominates the other in the PSD order (within PSD_MARGIN).
pub fn sufficiency_gaussian(g: &GaussianTriple, dominant: Dominant) -> Result<bool> {
    let pair = lambda_matrices(g)?;
    let diff = match dominant {
        Dominant::X => &pair.lambda_x - &pair.lambda_y,
        Dominant::Y => &pair.lambda_y - &pair.lambda_x,
    };
    Ok(min_eig(&diff) >= -PSD_MARGIN)
}

pub(crate) fn min_eig(a: &DMatrix<f64>) -> f64 {
    let sym = 0.5 * (a + a.transpose());
    nalgebra::SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::prob::{gaussian_mi, VarSet};
    use rand::Rng;

    fn bsc(e: f64) -> Channel {
        Channel::new(2, 2, vec![1.0 - e, e, e, 1.0 - e]).unwrap()
    }

    #[test]
    fn bsc_cascade_order() {
        let (px, py) = (bsc(0.1), bsc(0.2));
        let v = sufficiency_discrete(&px, &py).unwrap();
        assert!(v.sufficient, "residual {}", v.residual);
        // The recovered witness must be near BSC(0.125).
        assert!(v.witness.max_abs_diff(&bsc(0.125)) < 1e-6);
        let back = sufficiency_discrete(&py, &px).unwrap();
        assert!(!back.sufficient);
        assert!(back.residual > 0.05);
    }

    #[test]
    fn lecam_identity_vs_constant() {
        let id = Channel::identity(2);
        let constant = Channel::constant(&[1.0], 2).unwrap();
        // A constant output is trivially emulated.
        let fwd = lecam_deficiency(&id, &constant).unwrap();
        assert!(fwd.value < 1e-9);
        // Emulating a perfect copy from nothing costs TV 1/2.
        let back = lecam_deficiency(&constant, &id).unwrap();
        assert!((back.value - 0.5).abs() < 1e-9);
    }

    #[test]
    fn lecam_bsc_pair() {
        let bad = lecam_deficiency(&bsc(0.2), &bsc(0.1)).unwrap();
        assert!(bad.value > 0.05);
        assert!(bad.value <= 0.1 + 1e-9);
        let good = lecam_deficiency(&bsc(0.1), &bsc(0.2)).unwrap();
        assert!(good.value < 1e-9);
    }

    #[test]
    fn garbling_chains_are_sufficient_and_lecam_zero() {
        let mut rng = corpus::rng(31);
        for _ in 0..50 {
            let km = rng.gen_range(2..4);
            let kx = rng.gen_range(2..5);
            let ky = rng.gen_range(2..4);
            let px = corpus::random_channel(&mut rng, kx, km);
            let w = corpus::random_channel(&mut rng, ky, kx);
            let py = w.compose(&px).unwrap();
            let v = sufficiency_discrete(&px, &py).unwrap();
            assert!(v.sufficient, "residual {}", v.residual);
            let lc = lecam_deficiency(&px, &py).unwrap();
            assert!(lc.value < 1e-7, "lecam {}", lc.value);
            // Reflexivity.
            let refl = lecam_deficiency(&px, &px).unwrap();
            assert!(refl.value < 1e-9);
        }
    }

    #[test]
    fn transitivity_of_sufficiency() {
        let mut rng = corpus::rng(37);
        for _ in 0..20 {
            let px = corpus::random_channel(&mut rng, 4, 3);
            let py = corpus::random_channel(&mut rng, 3, 4).compose(&px).unwrap();
            let pz = corpus::random_channel(&mut rng, 2, 3).compose(&py).unwrap();
            assert!(sufficiency_discrete(&px, &py).unwrap().sufficient);
            assert!(sufficiency_discrete(&py, &pz).unwrap().sufficient);
            assert!(sufficiency_discrete(&px, &pz).unwrap().sufficient);
        }
    }

    #[test]
    fn lecam_zero_iff_sufficient() {
        let mut rng = corpus::rng(41);
        for i in 0..40 {
            let (px, py) = if i % 2 == 0 {
                let px = corpus::random_channel(&mut rng, 3, 3);
                let py = corpus::random_channel(&mut rng, 3, 3).compose(&px).unwrap();
                (px, py)
            } else {
                (
                    corpus::random_channel(&mut rng, 3, 3),
                    corpus::random_channel(&mut rng, 3, 3),
                )
            };
            let suff = sufficiency_discrete(&px, &py).unwrap().sufficient;
            let lc = lecam_deficiency(&px, &py).unwrap().value;
            assert_eq!(suff, lc <= 1e-6, "suff {suff} lecam {lc}");
        }
    }

    #[test]
    fn lecam_matches_grid_oracle_2x2() {
        // Independent oracle: exhaustively refine the two free parameters of
        // a 2x2 garbling. Three refinement levels reach 1e-3 accuracy.
        let mut rng = corpus::rng(47);
        for _ in 0..10 {
            let px = corpus::random_channel(&mut rng, 2, 2);
            let py = corpus::random_channel(&mut rng, 2, 2);
            let objective = |w00: f64, w01: f64| -> f64 {
                let w = Channel::new_unchecked(2, 2, vec![w00, w01, 1.0 - w00, 1.0 - w01]);
                let c = w.compose(&px).unwrap();
                (0..2)
                    .map(|m| {
                        (0..2)
                            .map(|y| (c.get(y, m) - py.get(y, m)).abs())
                            .sum::<f64>()
                            / 2.0
                    })
                    .fold(0.0f64, f64::max)
            };
            let (mut lo0, mut hi0, mut lo1, mut hi1) = (0.0, 1.0, 0.0, 1.0);
            let mut best = (0.5, 0.5, f64::INFINITY);
            for _ in 0..4 {
                let n = 41;
                for i in 0..n {
                    for j in 0..n {
                        let a = lo0 + (hi0 - lo0) * i as f64 / (n - 1) as f64;
                        let b = lo1 + (hi1 - lo1) * j as f64 / (n - 1) as f64;
                        let v = objective(a, b);
                        if v < best.2 {
                            best = (a, b, v);
                        }
                    }
                }
                let span0 = (hi0 - lo0) / 10.0;
                let span1 = (hi1 - lo1) / 10.0;
                lo0 = (best.0 - span0).max(0.0);
                hi0 = (best.0 + span0).min(1.0);
                lo1 = (best.1 - span1).max(0.0);
                hi1 = (best.1 + span1).min(1.0);
            }
            let lp_value = lecam_deficiency(&px, &py).unwrap().value;
            assert!(
                (lp_value - best.2).abs() < 1e-3,
                "lp {lp_value} vs grid {}",
                best.2
            );
            assert!(lp_value <= best.2 + 1e-9);
        }
    }

    #[test]
    fn lambda_scalar_matches_mi_identity() {
        // Scalar case: Lambda_X = 2^{2 I(M;X)} - 1.
        let g = corpus::gaussian_scalar(0.7, 2.3);
        let pair = lambda_matrices(&g).unwrap();
        let ix = gaussian_mi(&g, VarSet::M, VarSet::X, None).unwrap().bits;
        let iy = gaussian_mi(&g, VarSet::M, VarSet::Y, None).unwrap().bits;
        assert!((pair.lambda_x[(0, 0)] - (2f64.powf(2.0 * ix) - 1.0)).abs() < 1e-9);
        assert!((pair.lambda_y[(0, 0)] - (2f64.powf(2.0 * iy) - 1.0)).abs() < 1e-9);
        // X = M + N(0, 0.7): SNR = 1/0.7.
        assert!((pair.lambda_x[(0, 0)] - 1.0 / 0.7).abs() < 1e-9);
    }

    #[test]
    fn gaussian_order_detects_extra_noise() {
        // Y = X + extra noise is a garbling of X, so X dominates.
        let b = nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 0.2, -0.3, 0.8]);
        let nx = nalgebra::DMatrix::identity(2, 2) * 0.5;
        let ny = nalgebra::DMatrix::identity(2, 2) * 1.5;
        let g = corpus::gaussian_from_loadings(&b, &b, &nx, &ny);
        assert!(sufficiency_gaussian(&g, Dominant::X).unwrap());
        assert!(!sufficiency_gaussian(&g, Dominant::Y).unwrap());
    }

    #[test]
    fn gaussian_order_incomparable_pair() {
        // Each side sees a different coordinate; neither dominates.
        let b = nalgebra::DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let c = nalgebra::DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
        let eye = nalgebra::DMatrix::identity(1, 1);
        let g = corpus::gaussian_from_loadings(&b, &c, &eye, &eye);
        assert!(!sufficiency_gaussian(&g, Dominant::X).unwrap());
        assert!(!sufficiency_gaussian(&g, Dominant::Y).unwrap());
    }
}
