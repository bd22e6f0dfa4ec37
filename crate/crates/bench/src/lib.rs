//! Seeded fixtures shared by the benchmarks under `benches/`.

use cyclic_cm::model::{case_rng, sample_coupling, sample_point};
use cyclic_cm::{CMatrix, Coupling, SpectralPoint, SpinFraming, C64};
use rand::Rng;

/// Dense `n×n` matrix with entries uniform in the square `[-1, 1]²`.
pub fn random_matrix(seed: u64, n: usize) -> CMatrix {
    let mut rng = case_rng(seed, 0);
    CMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// Random regular coupling and point with `m` vertices, `n` particles, spin `d`.
pub fn random_case(seed: u64, m: usize, n: usize, d: usize) -> (Coupling, SpectralPoint, Option<SpinFraming>) {
    let mut rng = case_rng(seed, 0);
    let k = sample_coupling(&mut rng, m, 1e-10).expect("coupling");
    let (pt, fr) = sample_point(&mut rng, m, n, &k, d).expect("point");
    (k, pt, fr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_seeded() {
        assert_eq!(random_matrix(1, 3), random_matrix(1, 3));
        let (_, pt, fr) = random_case(2, 3, 4, 2);
        assert_eq!(pt.n, 4);
        assert_eq!(fr.unwrap().d, 2);
    }
}
