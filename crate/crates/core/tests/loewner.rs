//! Monte Carlo check that the minimal information matrix is a Loewner lower
//! bound over every covariance dominated by the bounding structure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trendopt_core::model::{
    full_info_matrix, lambdas_from_components, loewner_geq, min_eigenvalue, minimal_info_matrix,
    sample_admissible_sigma, sigma_upper_bound, CovarianceMatrixSet, PSD_TOL,
};
use trendopt_core::{DesignArray, Variance};

fn random_design(rng: &mut ChaCha8Rng) -> DesignArray {
    let v = rng.gen_range(2..=5);
    let k = rng.gen_range(2..=6);
    let b = rng.gen_range(2..=6);
    let cells = (0..k * b).map(|_| rng.gen_range(1..=v)).collect();
    DesignArray::from_cells(v, k, b, cells).unwrap()
}

#[test]
fn minimal_matrix_is_a_lower_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..5 {
        let d = random_design(&mut rng);
        let k = d.k();
        let eps2 = rng.gen_range(0.5..2.0);
        let beta2 = rng.gen_range(0.0..3.0);
        let theta2 = rng.gen_range(0.0..3.0);
        let (l0, l1) =
            lambdas_from_components(eps2, Variance::Finite(beta2), Variance::Finite(theta2), k)
                .unwrap();
        let lower = minimal_info_matrix(&d, l0, l1).unwrap();
        let bound = sigma_upper_bound(eps2, beta2, theta2, k).unwrap();

        let at_bound = full_info_matrix(&d, &bound).unwrap();
        assert!((at_bound.matrix() * eps2 - lower.matrix()).amax() <= 1e-9);

        for _ in 0..100 {
            let sigma = sample_admissible_sigma(&bound, &mut rng);
            assert!(min_eigenvalue(&(&bound - &sigma)) >= -1e-9);
            let full = full_info_matrix(&d, &sigma).unwrap();
            let scaled = full.matrix() * eps2;
            assert!(min_eigenvalue(&(&scaled - lower.matrix())) >= -1e-8);
            assert!(loewner_geq(&scaled, lower.matrix(), PSD_TOL).unwrap());
        }
    }
}

#[test]
fn uncorrelated_structure_matches_bound() {
    let set = CovarianceMatrixSet::uncorrelated(5, 1.5, 0.4, 2.0);
    let sigma = set.assemble(5).unwrap();
    let bound = sigma_upper_bound(1.5, 0.4, 2.0, 5).unwrap();
    assert!((sigma - bound).amax() <= 1e-12);
}
