//! Deterministic random generation of effects, states and unitaries.
//!
//! The generator is a 64-bit SplitMix-style stream with Box-Muller for
//! Gaussians, fully specified here so fuzz results reproduce bit-identically
//! across implementations given the same `(dim, seed)`.

use num_complex::Complex64;

use super::eig::reassemble;
use super::{CMatrix, RngSeed};
use crate::{Error, Result};

/// Smallest supported effect-space dimension.
pub const MIN_DIM: usize = 2;
/// Largest supported effect-space dimension.
pub const MAX_DIM: usize = 16;

/// SplitMix64: additive Weyl sequence with a 64-bit avalanche finalizer.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: impl Into<RngSeed>) -> Self {
        Self { state: seed.into().0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        mix64(self.state)
    }

    /// Uniform on `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard complex Gaussian via Box-Muller: real and imaginary parts
    /// are independent `N(0, 1)`.
    pub fn next_complex_gaussian(&mut self) -> Complex64 {
        let u1 = loop {
            let u = self.next_f64();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        Complex64::new(r * theta.cos(), r * theta.sin())
    }
}

/// SplitMix64 finalizer; also used to derive independent sub-streams.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a deterministic sub-stream seed from a base seed and tags, used
/// to make per-trial streams independent of evaluation schedule.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    let mut acc = mix64(seed ^ 0xA076_1D64_78BD_642F);
    for &t in tags {
        acc = mix64(acc ^ mix64(t.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    acc
}

fn check_dim(dim: usize) -> Result<()> {
    if !(MIN_DIM..=MAX_DIM).contains(&dim) {
        return Err(Error::UnsupportedDim { dim, min: MIN_DIM, max: MAX_DIM });
    }
    Ok(())
}

/// Square matrix of independent standard complex Gaussians.
pub fn ginibre_with(dim: usize, rng: &mut SplitMix64) -> CMatrix {
    let mut m = CMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            m.set(i, j, rng.next_complex_gaussian());
        }
    }
    m
}

/// Random Hermitian matrix `(G + G*)/2` from a Ginibre draw.
pub fn hermitian_with(dim: usize, rng: &mut SplitMix64) -> CMatrix {
    ginibre_with(dim, rng).hermitize()
}

/// Haar-distributed unitary: QR of a Ginibre matrix via modified
/// Gram-Schmidt with the R diagonal normalized positive (the diagonal-phase
/// correction that makes the distribution exactly Haar).
pub fn unitary_with(dim: usize, rng: &mut SplitMix64) -> CMatrix {
    let g = ginibre_with(dim, rng);
    let mut cols: Vec<Vec<Complex64>> = (0..dim)
        .map(|j| (0..dim).map(|i| g.get(i, j)).collect())
        .collect();
    for j in 0..dim {
        for _pass in 0..2 {
            for k in 0..j {
                let overlap: Complex64 =
                    (0..dim).map(|i| cols[k][i].conj() * cols[j][i]).sum();
                for i in 0..dim {
                    let correction = overlap * cols[k][i];
                    cols[j][i] -= correction;
                }
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut cols[j] {
            *z /= norm;
        }
    }
    let mut u = CMatrix::zeros(dim);
    for j in 0..dim {
        for i in 0..dim {
            u.set(i, j, cols[j][i]);
        }
    }
    u
}

/// Haar-random unit vector.
pub fn unit_vector_with(dim: usize, rng: &mut SplitMix64) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..dim).map(|_| rng.next_complex_gaussian()).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut v {
        *z /= norm;
    }
    v
}

/// Random effect `V diag(u) V*` with `u` uniform on `[0, 1]` and `V` Haar.
pub fn effect_with(dim: usize, rng: &mut SplitMix64) -> CMatrix {
    let v = unitary_with(dim, rng);
    let diag: Vec<f64> = (0..dim).map(|_| rng.next_f64()).collect();
    reassemble(&v, &diag).hermitize()
}

/// Random density operator: `G G*` normalized to unit trace.
pub fn density_with(dim: usize, rng: &mut SplitMix64) -> CMatrix {
    let g = ginibre_with(dim, rng);
    let gram = g.matmul(&g.adjoint());
    let trace = gram.trace().re;
    gram.scale_re(1.0 / trace).hermitize()
}

/// Rank-one projection `v v*` for a Haar-random unit vector.
pub fn rank1_projection_with(dim: usize, rng: &mut SplitMix64) -> CMatrix {
    CMatrix::from_outer(&unit_vector_with(dim, rng))
}

/// Seeded random effect. Bit-identical for identical `(dim, seed)`.
pub fn random_effect(dim: usize, seed: impl Into<RngSeed>) -> Result<CMatrix> {
    check_dim(dim)?;
    Ok(effect_with(dim, &mut SplitMix64::new(seed)))
}

/// Seeded random density operator.
pub fn random_density(dim: usize, seed: impl Into<RngSeed>) -> Result<CMatrix> {
    check_dim(dim)?;
    Ok(density_with(dim, &mut SplitMix64::new(seed)))
}

/// Seeded Haar-random unitary.
pub fn random_unitary(dim: usize, seed: impl Into<RngSeed>) -> Result<CMatrix> {
    check_dim(dim)?;
    Ok(unitary_with(dim, &mut SplitMix64::new(seed)))
}

/// Seeded random rank-one projection.
pub fn random_rank1_projection(dim: usize, seed: impl Into<RngSeed>) -> Result<CMatrix> {
    check_dim(dim)?;
    Ok(rank1_projection_with(dim, &mut SplitMix64::new(seed)))
}
