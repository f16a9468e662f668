use eprlab_core::fock::{
    expectation, number_distributions, partial_transpose, partial_transpose_entries, phase_rotation,
};
use eprlab_core::linalg::max_abs_diff;
use eprlab_core::{CMatrix, DensityMatrix, FockSpace, OperatorMatrix};
use num_complex::Complex64;
use proptest::prelude::*;

/// `G G^dagger / Tr`, a generic full-rank state.
fn random_state(n_cut: usize, entries: &[(f64, f64)]) -> DensityMatrix {
    let space = FockSpace::new(n_cut);
    let d = space.dim();
    let g = CMatrix::from_fn(d, d, |i, j| {
        let (re, im) = entries[(i * d + j) % entries.len()];
        Complex64::new(re + (i == j) as u8 as f64, im * ((i + 2 * j) as f64).cos())
    });
    DensityMatrix::normalized(space, &g * g.adjoint()).unwrap()
}

fn state_strategy() -> impl Strategy<Value = DensityMatrix> {
    (1usize..=4, prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..64))
        .prop_map(|(n, e)| random_state(n, &e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_states_are_valid(rho in state_strategy()) {
        rho.validate().unwrap();
        rho.rotated(0.37).validate().unwrap();
    }

    #[test]
    fn partial_transpose_is_an_involution(rho in state_strategy()) {
        let twice = partial_transpose_entries(rho.space(), &partial_transpose(&rho));
        prop_assert_eq!(&twice, rho.entries());
    }

    #[test]
    fn phase_rotations_compose(n_cut in 1usize..=5, t1 in -7.0..7.0f64, t2 in -7.0..7.0f64) {
        let s = FockSpace::new(n_cut);
        let lhs = phase_rotation(s, t1).mul(&phase_rotation(s, t2));
        let rhs = phase_rotation(s, t1 + t2);
        prop_assert!(max_abs_diff(lhs.entries(), rhs.entries()) < 1e-10);
    }

    #[test]
    fn json_round_trip_is_exact(rho in state_strategy()) {
        let back = DensityMatrix::from_json(&rho.to_json().unwrap()).unwrap();
        prop_assert_eq!(back.entries(), rho.entries());
    }
}

#[test]
fn partial_transpose_keeps_hermiticity() {
    let rho = random_state(3, &[(0.3, -0.2), (0.1, 0.7), (-0.5, 0.4)]);
    assert!(eprlab_core::linalg::hermiticity_residual(&partial_transpose(&rho)) < 1e-15);
}

#[test]
fn number_marginals_match_projector_expectations() {
    let rho = random_state(3, &[(0.2, 0.1), (-0.4, 0.3), (0.9, -0.6), (0.05, 0.5)]);
    let space = rho.space();
    let dist = number_distributions(&rho);
    let d = space.dim();
    for total in 0..=6usize {
        let proj = CMatrix::from_fn(d, d, |i, j| {
            if i == j && space.total(i) == total { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }
        });
        let e = expectation(&rho, &OperatorMatrix::new(space, proj).unwrap()).unwrap();
        assert!((e.re - dist.p_sum(total)).abs() < 1e-14);
    }
    for k in -3i64..=3 {
        let proj = CMatrix::from_fn(d, d, |i, j| {
            let (a, b) = space.occupations(i);
            if i == j && a as i64 - b as i64 == k { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }
        });
        let e = expectation(&rho, &OperatorMatrix::new(space, proj).unwrap()).unwrap();
        assert!((e.re - dist.p_diff(k)).abs() < 1e-14);
    }
    assert_eq!(dist.p_diff(4), 0.0);
}

#[test]
fn invalid_matrices_name_the_invariant() {
    let space = FockSpace::new(1);
    let mut m = DensityMatrix::maximally_mixed(space).entries().clone();
    m *= Complex64::new(0.9, 0.0);
    let err = DensityMatrix::new(space, m).unwrap_err().to_string();
    assert!(err.contains("trace"), "{err}");

    let mut m = DensityMatrix::maximally_mixed(space).entries().clone();
    m[(0, 1)] = Complex64::new(0.1, 0.0);
    let err = DensityMatrix::new(space, m).unwrap_err().to_string();
    assert!(err.contains("Hermitian"), "{err}");

    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = Complex64::new(1.5, 0.0);
    m[(1, 1)] = Complex64::new(-0.5, 0.0);
    let err = DensityMatrix::new(space, m).unwrap_err().to_string();
    assert!(err.contains("eigenvalue") || err.contains("positive"), "{err}");
}
