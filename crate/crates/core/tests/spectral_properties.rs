use dhym_core::spectral::{
    angle_and_radius, complex_volume_ratio, dim3_phase_identity_residual, elementary_symmetric,
    generalized_margins, relative_eigenvalues, subsolution_margins, HermitianPencil, Spectrum,
};
use dhym_core::Complex64;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn spectrum_strategy(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 1..=max_n)
}

fn complex_matrix(n: usize) -> impl Strategy<Value = DMatrix<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n)
        .prop_map(move |v| DMatrix::from_fn(n, n, |i, j| Complex64::new(v[i * n + j].0, v[i * n + j].1)))
}

/// Random Hermitian `α` and positive definite `ω = GG* + I/2`.
fn pencil_strategy() -> impl Strategy<Value = (DMatrix<Complex64>, DMatrix<Complex64>, DMatrix<Complex64>)> {
    (1usize..=5).prop_flat_map(|n| (complex_matrix(n), complex_matrix(n), complex_matrix(n)))
}

fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()).scale(0.5)
}

fn positive(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = m.nrows();
    m * m.adjoint() + DMatrix::<Complex64>::identity(n, n).scale(0.5)
}

fn sigma_by_subsets(l: &[f64]) -> Vec<f64> {
    let n = l.len();
    let mut sigma = vec![0.0; n + 1];
    for mask in 0u32..(1 << n) {
        let prod: f64 = (0..n).filter(|&i| mask & (1 << i) != 0).map(|i| l[i]).product();
        sigma[mask.count_ones() as usize] += prod;
    }
    sigma
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn product_identity(l in spectrum_strategy(6)) {
        let s = Spectrum::new(l).unwrap();
        let ar = angle_and_radius(&s);
        let z = complex_volume_ratio(&s);
        prop_assert!((z - Complex64::from_polar(ar.radius, ar.theta)).norm() < 1e-11 * ar.radius);
    }

    #[test]
    fn theta_is_increasing_in_each_eigenvalue(l in spectrum_strategy(6), pick in 0usize..6) {
        let j = pick % l.len();
        let base = angle_and_radius(&Spectrum::new(l.clone()).unwrap()).theta;
        let mut bumped = l.clone();
        bumped[j] += 1e-6;
        let up = angle_and_radius(&Spectrum::new(bumped).unwrap()).theta;
        prop_assert!(up > base);
    }

    #[test]
    fn oddness(l in spectrum_strategy(6)) {
        let a = angle_and_radius(&Spectrum::new(l.clone()).unwrap());
        let b = angle_and_radius(&Spectrum::new(l.iter().map(|x| -x).collect()).unwrap());
        prop_assert!((a.theta + b.theta).abs() < 1e-14);
        prop_assert!((a.radius - b.radius).abs() <= 1e-14 * a.radius);
    }

    #[test]
    fn congruence_invariance((w, a, g) in pencil_strategy()) {
        let n = w.nrows();
        let omega = positive(&w);
        let alpha = hermitian_part(&a).scale(4.0);
        // Keep G comfortably invertible.
        let g = g + DMatrix::<Complex64>::identity(n, n).scale(2.0);
        let before = relative_eigenvalues(&HermitianPencil::new(omega.clone(), alpha.clone()).unwrap());
        let t_omega = hermitian_part(&(g.adjoint() * &omega * &g));
        let t_alpha = hermitian_part(&(g.adjoint() * &alpha * &g));
        let after = relative_eigenvalues(&HermitianPencil::new(t_omega, t_alpha).unwrap());
        for (x, y) in before.lambdas().iter().zip(after.lambdas()) {
            prop_assert!((x - y).abs() < 1e-10 * (1.0 + x.abs()), "{x} vs {y}");
        }
    }

    #[test]
    fn relative_eigenvalues_solve_the_pencil((w, a, _g) in pencil_strategy()) {
        let omega = positive(&w);
        let alpha = hermitian_part(&a);
        let s = relative_eigenvalues(&HermitianPencil::new(omega.clone(), alpha.clone()).unwrap());
        for &l in s.lambdas() {
            let det = (&alpha - omega.scale(l)).determinant().norm();
            let scale = (alpha.norm() + l.abs() * omega.norm()).powi(omega.nrows() as i32);
            prop_assert!(det < 1e-9 * scale.max(1.0));
        }
    }

    #[test]
    fn dim3_identity(l in prop::collection::vec(-10.0f64..10.0, 3)) {
        let s = Spectrum::new(l).unwrap();
        let theta = angle_and_radius(&s).theta;
        prop_assume!(theta.cos().abs() > 0.1);
        prop_assert!(dim3_phase_identity_residual(&s, theta).unwrap().abs() < 1e-9);
    }

    #[test]
    fn subsolution_is_necessary(l in spectrum_strategy(8)) {
        let s = Spectrum::new(l).unwrap();
        let theta = angle_and_radius(&s).theta;
        prop_assert!(subsolution_margins(&s, theta).iter().all(|&m| m > 0.0));
        for p in 1..=s.dim() {
            prop_assert!(generalized_margins(&s, theta, p).iter().all(|m| m.margin > 0.0));
        }
    }

    #[test]
    fn symmetric_functions_match_subset_sums(l in prop::collection::vec(-3.0f64..3.0, 1..=8)) {
        let got = elementary_symmetric(&Spectrum::new(l.clone()).unwrap());
        let mut sorted = l.clone();
        sorted.sort_by(f64::total_cmp);
        let want = sigma_by_subsets(&sorted);
        for (g, w) in got.as_slice().iter().zip(&want) {
            prop_assert!((g - w).abs() < 1e-10 * (1.0 + w.abs()));
        }
    }
}
