//! Canonical distributions and seeded random generators shared by tests,
//! the acceptance suite, and examples.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::prob::{Channel, DiscreteTriple, GaussianTriple};

/// Fixed-seed generator; every consumer that wants reproducibility goes
/// through this so the stream implementation is pinned in one place.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// M = X xor Y with X, Y independent uniform bits: pure synergy.
pub fn xor() -> DiscreteTriple {
    let mut pmf = vec![0.0; 8];
    for x in 0..2usize {
        for y in 0..2usize {
            let m = x ^ y;
            pmf[(m * 2 + x) * 2 + y] = 0.25;
        }
    }
    DiscreteTriple::new(2, 2, 2, pmf).unwrap()
}

/// X = Y = M uniform bit: pure redundancy.
pub fn copy() -> DiscreteTriple {
    let mut pmf = vec![0.0; 8];
    for m in 0..2usize {
        pmf[(m * 2 + m) * 2 + m] = 0.5;
    }
    DiscreteTriple::new(2, 2, 2, pmf).unwrap()
}

/// M = X and Y with X, Y independent uniform bits.
pub fn and_gate() -> DiscreteTriple {
    let mut pmf = vec![0.0; 8];
    for x in 0..2usize {
        for y in 0..2usize {
            let m = x & y;
            pmf[(m * 2 + x) * 2 + y] = 0.25;
        }
    }
    DiscreteTriple::new(2, 2, 2, pmf).unwrap()
}

/// Four independent uniform bits M = (M1, M2, M3, M4) and an independent coin
/// Z; X = (M1, M3, M4 xor Z), Y = (M2, M3, Z). One bit of unique information
/// on each side, one redundant bit (M3), one synergistic bit (M4).
pub fn four_bit() -> DiscreteTriple {
    let mut pmf = vec![0.0; 16 * 8 * 8];
    for m1 in 0..2usize {
        for m2 in 0..2usize {
            for m3 in 0..2usize {
                for m4 in 0..2usize {
                    for z in 0..2usize {
                        let m = ((m1 * 2 + m2) * 2 + m3) * 2 + m4;
                        let x = (m1 * 2 + m3) * 2 + (m4 ^ z);
                        let y = (m2 * 2 + m3) * 2 + z;
                        pmf[(m * 8 + x) * 8 + y] += 1.0 / 32.0;
                    }
                }
            }
        }
    }
    DiscreteTriple::new(16, 8, 8, pmf).unwrap()
}

/// X copies the uniform bit M; Y is a constant symbol.
pub fn copy_with_constant_y() -> DiscreteTriple {
    DiscreteTriple::new(2, 2, 1, vec![0.5, 0.0, 0.0, 0.5]).unwrap()
}

/// Joint with X and Y conditionally independent given M, assembled from a
/// prior and two observation channels.
pub fn triple_from_channels(
    prior: &[f64],
    px: &Channel,
    py: &Channel,
) -> DiscreteTriple {
    let km = prior.len();
    let (kx, ky) = (px.out_size(), py.out_size());
    assert_eq!(px.in_size(), km);
    assert_eq!(py.in_size(), km);
    let mut pmf = vec![0.0; km * kx * ky];
    for m in 0..km {
        for x in 0..kx {
            for y in 0..ky {
                pmf[(m * kx + x) * ky + y] = prior[m] * px.get(x, m) * py.get(y, m);
            }
        }
    }
    DiscreteTriple::new(km, kx, ky, pmf).unwrap()
}

/// A probability vector with full support, Dirichlet(1)-distributed.
pub fn random_prob_vec(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..k)
            .map(|_| -(1.0 - rng.gen::<f64>()).ln())
            .collect();
        let s: f64 = v.iter().sum();
        if s > 1e-9 {
            for e in v.iter_mut() {
                *e /= s;
            }
            if v.iter().all(|e| *e > 1e-12) {
                return v;
            }
        }
    }
}

/// A random column-stochastic channel with full support.
pub fn random_channel(rng: &mut impl Rng, out_size: usize, in_size: usize) -> Channel {
    let cols: Vec<Vec<f64>> = (0..in_size)
        .map(|_| random_prob_vec(rng, out_size))
        .collect();
    Channel::from_columns(&cols).unwrap()
}

/// A fully supported random joint triple, Dirichlet(1) over all cells.
pub fn random_triple(rng: &mut impl Rng, km: usize, kx: usize, ky: usize) -> DiscreteTriple {
    let pmf = random_prob_vec(rng, km * kx * ky);
    DiscreteTriple::new(km, kx, ky, pmf).unwrap()
}

/// Scalar M ~ N(0,1) observed through two independent additive-noise
/// channels: X = M + Nx, Y = M + Ny.
pub fn gaussian_scalar(noise_x: f64, noise_y: f64) -> GaussianTriple {
    let cov = DMatrix::from_row_slice(
        3,
        3,
        &[
            1.0, 1.0, 1.0, //
            1.0, 1.0 + noise_x, 1.0, //
            1.0, 1.0, 1.0 + noise_y,
        ],
    );
    GaussianTriple::new(1, 1, 1, cov).unwrap()
}

/// X = B m + Nx, Y = C m + Ny with M ~ N(0, I) and independent noises.
pub fn gaussian_from_loadings(
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    noise_x: &DMatrix<f64>,
    noise_y: &DMatrix<f64>,
) -> GaussianTriple {
    let dm = b.ncols();
    assert_eq!(c.ncols(), dm);
    let (dx, dy) = (b.nrows(), c.nrows());
    let d = dm + dx + dy;
    let mut cov = DMatrix::zeros(d, d);
    let set = |cov: &mut DMatrix<f64>, r0: usize, c0: usize, m: &DMatrix<f64>| {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                cov[(r0 + i, c0 + j)] = m[(i, j)];
            }
        }
    };
    let eye = DMatrix::identity(dm, dm);
    set(&mut cov, 0, 0, &eye);
    set(&mut cov, 0, dm, &b.transpose());
    set(&mut cov, 0, dm + dx, &c.transpose());
    set(&mut cov, dm, 0, b);
    set(&mut cov, dm, dm, &(b * b.transpose() + noise_x));
    set(&mut cov, dm, dm + dx, &(b * c.transpose()));
    set(&mut cov, dm + dx, 0, c);
    set(&mut cov, dm + dx, dm, &(c * b.transpose()));
    set(&mut cov, dm + dx, dm + dx, &(c * c.transpose() + noise_y));
    GaussianTriple::new(dm, dx, dy, cov).unwrap()
}

/// A random nondegenerate Gaussian triple with identity-covariance M.
pub fn random_gaussian(
    rng: &mut impl Rng,
    dm: usize,
    dx: usize,
    dy: usize,
) -> GaussianTriple {
    let b = DMatrix::from_fn(dx, dm, |_, _| rng.gen_range(-1.0..1.0));
    let c = DMatrix::from_fn(dy, dm, |_, _| rng.gen_range(-1.0..1.0));
    let nx = random_spd(rng, dx);
    let ny = random_spd(rng, dy);
    gaussian_from_loadings(&b, &c, &nx, &ny)
}

fn random_spd(rng: &mut impl Rng, d: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d + 1, |_, _| rng.gen_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(d, d) * 0.1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_valid_distributions() {
        for d in [xor(), copy(), and_gate(), four_bit(), copy_with_constant_y()] {
            let s: f64 = d.pmf().iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rng_is_reproducible() {
        let a: Vec<f64> = {
            let mut r = rng(42);
            (0..4).map(|_| r.gen::<f64>()).collect()
        };
        let b: Vec<f64> = {
            let mut r = rng(42);
            (0..4).map(|_| r.gen::<f64>()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn triple_from_channels_reproduces_marginal_channels() {
        use crate::prob::VarSet;
        let mut r = rng(17);
        let prior = random_prob_vec(&mut r, 3);
        let px = random_channel(&mut r, 4, 3);
        let py = random_channel(&mut r, 2, 3);
        let d = triple_from_channels(&prior, &px, &py);
        let cx = d.conditional_channel(VarSet::X, VarSet::M).unwrap().channel;
        let cy = d.conditional_channel(VarSet::Y, VarSet::M).unwrap().channel;
        assert!(cx.max_abs_diff(&px) < 1e-12);
        assert!(cy.max_abs_diff(&py) < 1e-12);
    }
}
