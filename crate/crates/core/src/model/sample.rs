use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::coupling::Coupling;
use super::point::{QModelPoint, SpectralPoint, SpinFraming};
use crate::error::{CmError, Result};
use crate::kernel::CMatrix;
use crate::C64;

pub const MAX_ATTEMPTS: usize = 1000;
/// Minimum separation of the sampled `λ_j^m`.
pub const MIN_GAP: f64 = 1e-3;
/// Smallest admissible `|Σ_i [ṽ_i w̃_i]_{jj}|` before rescaling.
pub const MIN_DENOM: f64 = 1e-6;

/// Independent deterministic stream for case `case` of a run seeded with `seed`.
pub fn case_rng(seed: u64, case: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(case);
    rng
}

fn annulus<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let r = rng.gen_range(0.5..=2.0);
    let t = rng.gen_range(0.0..std::f64::consts::TAU);
    C64::from_polar(r, t)
}

fn disk<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let r: f64 = rng.gen::<f64>().sqrt();
    let t = rng.gen_range(0.0..std::f64::consts::TAU);
    C64::from_polar(r, t)
}

fn square<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn min_gap(x: &[C64], m: usize) -> f64 {
    let pw: Vec<C64> = x.iter().map(|z| z.powu(m as u32)).collect();
    let mut gap = f64::INFINITY;
    for j in 0..pw.len() {
        for k in j + 1..pw.len() {
            gap = gap.min((pw[j] - pw[k]).norm());
        }
    }
    gap
}

fn generic_annulus<R: Rng + ?Sized>(rng: &mut R, m: usize, n: usize) -> Result<Vec<C64>> {
    for _ in 0..MAX_ATTEMPTS {
        let x: Vec<C64> = (0..n).map(|_| annulus(rng)).collect();
        if min_gap(&x, m) >= MIN_GAP {
            return Ok(x);
        }
    }
    Err(CmError::SamplingFailed {
        attempts: MAX_ATTEMPTS,
    })
}

/// Framing on the constraint surface: entries uniform in the unit square, then
/// column `j` of every `w̃_i` rescaled by `|g| / Σ_i [ṽ_i w̃_i]_{jj}`.
pub fn sample_framing<R: Rng + ?Sized>(
    rng: &mut R,
    m: usize,
    n: usize,
    d: usize,
    abs_g: C64,
) -> Result<SpinFraming> {
    'attempt: for _ in 0..MAX_ATTEMPTS {
        let v: Vec<CMatrix> = (0..m).map(|_| CMatrix::from_fn(n, d, |_, _| square(rng))).collect();
        let mut w: Vec<CMatrix> = (0..m).map(|_| CMatrix::from_fn(d, n, |_, _| square(rng))).collect();
        for j in 0..n {
            let s: C64 = (0..m)
                .map(|i| (0..d).map(|a| v[i][(j, a)] * w[i][(a, j)]).sum::<C64>())
                .sum();
            if s.norm() < MIN_DENOM {
                continue 'attempt;
            }
            let f = abs_g / s;
            for wi in w.iter_mut() {
                for a in 0..d {
                    wi[(a, j)] *= f;
                }
            }
        }
        return SpinFraming::new(d, v, w);
    }
    Err(CmError::SamplingFailed {
        attempts: MAX_ATTEMPTS,
    })
}

/// Random point: `λ` in the annulus `0.5 ≤ |λ| ≤ 2`, `φ` in the unit disk, and a
/// spin framing on the constraint surface when `d > 0`.
pub fn sample_point<R: Rng + ?Sized>(
    rng: &mut R,
    m: usize,
    n: usize,
    coupling: &Coupling,
    d: usize,
) -> Result<(SpectralPoint, Option<SpinFraming>)> {
    if coupling.m() != m {
        return Err(CmError::Dimension("coupling does not match m".into()));
    }
    if coupling.abs_g().norm() == 0.0 {
        return Err(CmError::ZeroCoupling);
    }
    let lambda = generic_annulus(rng, m, n)?;
    let phi: Vec<C64> = (0..n).map(|_| disk(rng)).collect();
    let framing = if d > 0 {
        Some(sample_framing(rng, m, n, d, coupling.abs_g())?)
    } else {
        None
    };
    Ok((SpectralPoint::new(m, lambda, phi)?, framing))
}

/// Random point of the position model: `q` in the annulus, `p` in the unit disk.
pub fn sample_qpoint<R: Rng + ?Sized>(rng: &mut R, m: usize, n: usize) -> Result<QModelPoint> {
    let q = generic_annulus(rng, m, n)?;
    let p: Vec<C64> = (0..n).map(|_| disk(rng)).collect();
    QModelPoint::new(m, p, q)
}

/// Random real regular coupling with `|g|` bounded away from zero.
pub fn sample_coupling<R: Rng + ?Sized>(rng: &mut R, m: usize, eq_tol: f64) -> Result<Coupling> {
    for _ in 0..MAX_ATTEMPTS {
        let g: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.5)).collect();
        let k = Coupling::from_real(&g)?;
        if k.abs_g().norm() >= 0.3 && k.is_regular(eq_tol).regular {
            return Ok(k);
        }
    }
    Err(CmError::SamplingFailed {
        attempts: MAX_ATTEMPTS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let k = Coupling::from_real(&[1.0, 0.5]).unwrap();
        let a = sample_point(&mut case_rng(7, 3), 2, 3, &k, 2).unwrap();
        let b = sample_point(&mut case_rng(7, 3), 2, 3, &k, 2).unwrap();
        let c = sample_point(&mut case_rng(7, 4), 2, 3, &k, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn samples_are_valid() {
        let mut rng = case_rng(1, 0);
        for m in 1..=4 {
            let k = sample_coupling(&mut rng, m, 1e-10).unwrap();
            let (pt, fr) = sample_point(&mut rng, m, 5, &k, 3).unwrap();
            pt.validate(1e-9).unwrap();
            assert!(pt.lambda.iter().all(|z| (0.5..=2.0 + 1e-12).contains(&z.norm())));
            assert!(pt.phi.iter().all(|z| z.norm() <= 1.0));
            assert!(fr.unwrap().constraint_residual(k.abs_g()) <= 1e-10);
        }
    }

    #[test]
    fn zero_coupling_rejected() {
        let k = Coupling::from_real(&[1.0, -1.0]).unwrap();
        assert!(matches!(
            sample_point(&mut case_rng(0, 0), 2, 2, &k, 0),
            Err(CmError::ZeroCoupling)
        ));
    }
}
