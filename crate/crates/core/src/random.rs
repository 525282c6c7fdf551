//! Random states, unitaries and channels for fuzzing and examples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::operator::{CMatrix, DensityOperator, HermitianOperator, PositiveOperator, C64};

/// FNV-1a, used to turn stream names into seeds.
fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Deterministic generator for trial `trial` of the named stream under `seed`.
pub fn trial_rng(seed: u64, stream: &str, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(stream));
    rng.set_stream(trial);
    rng
}

/// Matrix of i.i.d. standard complex Gaussians (`E|z|² = 1`).
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re * s, im * s)
    })
}

/// `rows × cols` isometry (`rows ≥ cols`) with Haar-distributed range.
pub fn random_isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    assert!(rows >= cols, "an isometry needs rows >= cols");
    let qr = ginibre(rng, rows, cols).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..cols {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..rows {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    random_isometry(rng, d, d)
}

/// Uniform point on the probability simplex of size `rank`, padded with zeros to `dim`.
pub fn dirichlet_spectrum<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> Vec<f64> {
    assert!(rank >= 1 && rank <= dim, "rank must lie in 1..=dim");
    let mut v: Vec<f64> = (0..rank).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    v.resize(dim, 0.0);
    v
}

fn conjugate(u: &CMatrix, spectrum: &[f64]) -> CMatrix {
    let mut scaled = u.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= C64::new(spectrum[j], 0.0);
    }
    &scaled * u.adjoint()
}

/// `U diag(λ) U*` with Dirichlet `λ` of the given rank and Haar `U`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> DensityOperator {
    let spec = dirichlet_spectrum(rng, dim, rank);
    let u = haar_unitary(rng, dim);
    DensityOperator::from_dense(conjugate(&u, &spec)).expect("random density is a state")
}

pub fn random_diagonal_density<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> DensityOperator {
    DensityOperator::from_diagonal(dirichlet_spectrum(rng, dim, rank)).expect("random spectrum is a state")
}

pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityOperator {
    let v = ginibre(rng, dim, 1);
    DensityOperator::pure(v.as_slice()).expect("Gaussian vector is non-zero")
}

/// Random positive operator of the given rank and trace.
pub fn random_positive<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize, trace: f64) -> PositiveOperator {
    random_density(rng, dim, rank).scaled(trace).expect("non-negative trace")
}

/// GUE-distributed Hermitian matrix.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianOperator {
    let g = ginibre(rng, dim, dim);
    HermitianOperator::new((&g + g.adjoint()) * C64::new(0.5, 0.0)).expect("symmetrized")
}

/// Channel with `kraus` operators cut from a Haar isometry `C^{d_in} → C^{d_out·kraus}`.
pub fn random_channel<R: Rng + ?Sized>(rng: &mut R, d_in: usize, d_out: usize, kraus: usize) -> Result<Channel> {
    if d_out * kraus < d_in {
        return Err(Error::InvalidArgument(format!(
            "a channel {d_in} -> {d_out} needs at least {} Kraus operators, got {kraus}",
            d_in.div_ceil(d_out)
        )));
    }
    let v = random_isometry(rng, d_out * kraus, d_in);
    let ops = (0..kraus).map(|k| v.rows(k * d_out, d_out).into_owned()).collect();
    Channel::from_kraus(ops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = trial_rng(7, "entropy", 3).random();
        let b: u64 = trial_rng(7, "entropy", 3).random();
        let c: u64 = trial_rng(7, "entropy", 4).random();
        let d: u64 = trial_rng(7, "channel", 3).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn isometry_and_channel_are_valid() {
        let mut rng = trial_rng(1, "t", 0);
        let v = random_isometry(&mut rng, 6, 3);
        let g = v.adjoint() * &v;
        assert!((g - CMatrix::identity(3, 3)).iter().all(|z| z.norm() < 1e-12));
        let ch = random_channel(&mut rng, 3, 2, 2).unwrap();
        assert!(ch.tp_deficit() < 1e-10);
        assert_eq!(ch.choi_rank(), 2);
    }

    #[test]
    fn random_state_has_requested_rank() {
        let mut rng = trial_rng(2, "t", 0);
        let rho = random_density(&mut rng, 5, 3);
        assert_eq!(rho.rank(None), 3);
        assert_abs_diff_eq!(rho.trace(), 1.0, epsilon = 1e-12);
    }
}
