use approx::assert_relative_eq;
use foldkit::tensor_ops::{
    arr, commutation_matrix, inverse_sqrt, kron, mat, pi_matrix, projection, regularized_inverse,
    sqrt_psd, subspace_distance, vec, vec_array, InversionMode, SubspaceBasis,
};
use nalgebra::{dmatrix, DMatrix, DVector};
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-5.0..5.0f64, rows * cols)
        .prop_map(move |v| DMatrix::from_column_slice(rows, cols, &v))
}

fn sized_matrix(max: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (1..=max, 1..=max).prop_flat_map(|(r, c)| matrix(r, c))
}

fn is_permutation(m: &DMatrix<f64>) -> bool {
    let ones_per_row = m.row_iter().all(|r| r.iter().filter(|&&x| x == 1.0).count() == 1);
    let ones_per_col = m.column_iter().all(|c| c.iter().filter(|&&x| x == 1.0).count() == 1);
    let binary = m.iter().all(|&x| x == 0.0 || x == 1.0);
    ones_per_row && ones_per_col && binary
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pi_rearranges_kronecker_of_vecs(b in sized_matrix(4), a in sized_matrix(4)) {
        let pi = pi_matrix(b.nrows(), b.ncols(), a.nrows(), a.ncols());
        let lhs = vec(&kron(&b, &a));
        let rhs = pi.apply(&vec(&b).kronecker(&vec(&a))).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn commuted_kronecker_product(a in sized_matrix(4), b in sized_matrix(4)) {
        // A ⊗ B = K_{r1,r3} (B ⊗ A) K_{r4,r2}
        let (r1, r2, r3, r4) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
        let inner = commutation_matrix(r1, r3).apply_rows(&kron(&b, &a)).unwrap();
        let rhs = commutation_matrix(r4, r2).right_apply(&inner).unwrap();
        let lhs = kron(&a, &b);
        prop_assert!((&lhs - &rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
    }

    #[test]
    fn mat_of_kronecker_product(r1 in 1usize..4, r2 in 1usize..4, c in 1usize..4, seed in any::<u64>()) {
        // mat_{r1}[(Cᵀ ⊗ A) b] = A mat_{r2}(b) C
        let mut rng = foldkit::rng::seeded(seed);
        let a = foldkit::rng::standard_normal_matrix(&mut rng, r1, r2);
        let cm = foldkit::rng::standard_normal_matrix(&mut rng, c, c);
        let b = foldkit::rng::standard_normal_matrix(&mut rng, r2 * c, 1);
        let lhs = mat((kron(&cm.transpose(), &a) * &b).as_slice(), r1).unwrap();
        let rhs = &a * mat(b.as_slice(), r2).unwrap() * &cm;
        prop_assert!((&lhs - &rhs).norm() <= 1e-12 * rhs.norm().max(1.0));
    }

    #[test]
    fn commutation_transposes(a in sized_matrix(5)) {
        let k = commutation_matrix(a.nrows(), a.ncols());
        prop_assert_eq!(k.apply(&vec(&a)).unwrap(), vec(&a.transpose()));
        prop_assert!(is_permutation(&k.to_dense()));
    }

    #[test]
    fn pi_is_a_permutation(p_r in 1usize..4, m_r in 1usize..4, p_l in 1usize..4, m_l in 1usize..4) {
        prop_assert!(is_permutation(&pi_matrix(p_r, m_r, p_l, m_l).to_dense()));
    }

    #[test]
    fn vec_mat_round_trip(m in sized_matrix(6)) {
        prop_assert_eq!(mat(vec(&m).as_slice(), m.nrows()).unwrap(), m.clone());
        let v = vec(&m);
        prop_assert_eq!(vec(&mat(v.as_slice(), m.nrows()).unwrap()), v);
    }

    #[test]
    fn arr_round_trip(dims in prop::collection::vec(1usize..4, 1..5), seed in any::<u64>()) {
        let len: usize = dims.iter().product();
        let mut rng = foldkit::rng::seeded(seed);
        let v = foldkit::rng::standard_normal_matrix(&mut rng, len, 1);
        let t = arr(v.as_slice(), &dims).unwrap();
        let flat = vec_array(&t);
        prop_assert_eq!(flat.as_slice(), v.as_slice());
        let again = arr(vec_array(&t).as_slice(), &dims).unwrap();
        prop_assert_eq!(again, t);
    }

    #[test]
    fn mixed_product(a in matrix(3, 2), b in matrix(3, 2)) {
        let lhs = kron(&(a.transpose() * &a), &(b.transpose() * &b));
        let ab = kron(&a, &b);
        let rhs = ab.transpose() * &ab;
        prop_assert!((&lhs - &rhs).norm() <= 1e-10 * lhs.norm().max(1.0));
    }

    #[test]
    fn projection_identities(n in 2usize..7, seed in any::<u64>()) {
        let mut rng = foldkit::rng::seeded(seed);
        let d = 1 + (seed as usize) % (n - 1);
        let b = foldkit::rng::standard_normal_matrix(&mut rng, n, d);
        let basis = SubspaceBasis::new(b.clone()).unwrap();
        let p = basis.projection();
        prop_assert!((&p - p.transpose()).norm() < 1e-10);
        prop_assert!((&p * &p - &p).norm() < 1e-10);
        prop_assert!((p.trace() - d as f64).abs() < 1e-10);
        prop_assert!((&p * &b - &b).norm() < 1e-10 * b.norm().max(1.0));
        let r = foldkit::rng::standard_normal_matrix(&mut rng, d, d) + DMatrix::identity(d, d) * 3.0;
        prop_assert!((projection(&(&b * r)) - &p).norm() < 1e-8);
    }

    #[test]
    fn distance_trace_identity(n in 2usize..7, seed in any::<u64>()) {
        let mut rng = foldkit::rng::seeded(seed);
        let d1 = 1 + (seed as usize) % n;
        let d2 = 1 + (seed as usize / 7) % n;
        let b1 = foldkit::rng::standard_normal_matrix(&mut rng, n, d1);
        let b2 = foldkit::rng::standard_normal_matrix(&mut rng, n, d2);
        let (p1, p2) = (projection(&b1), projection(&b2));
        let via_trace = p1.trace() + p2.trace() - 2.0 * (&p1 * &p2).trace();
        prop_assert!(via_trace >= -1e-10);
        let dist = subspace_distance(&b1, &b2).unwrap();
        prop_assert!((dist * dist - via_trace).abs() < 1e-10);
        prop_assert!((dist - subspace_distance(&b2, &b1).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn distance_examples() {
    let e1 = dmatrix![1.0; 0.0; 0.0];
    let e2 = dmatrix![0.0; 1.0; 0.0];
    assert_eq!(subspace_distance(&e1, &e1).unwrap(), 0.0);
    assert_relative_eq!(subspace_distance(&e1, &e2).unwrap(), 2f64.sqrt(), epsilon = 1e-14);
    let f1 = dmatrix![1.0; 0.0];
    let diag = dmatrix![1.0; 1.0] / 2f64.sqrt();
    assert_relative_eq!(subspace_distance(&f1, &diag).unwrap(), 1.0, epsilon = 1e-14);
    assert!(subspace_distance(&e1, &f1).is_err());
}

#[test]
fn coordinate_projection() {
    let p = SubspaceBasis::coordinate(4, 2).unwrap().projection();
    assert_eq!(p, DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 0.0, 0.0])));
}

#[test]
fn inverse_examples() {
    let s = DMatrix::identity(3, 3) * 4.0;
    assert_relative_eq!(regularized_inverse(&s, InversionMode::Exact).unwrap(), DMatrix::identity(3, 3) * 0.25);
    assert_relative_eq!(inverse_sqrt(&s, InversionMode::Exact).unwrap(), DMatrix::identity(3, 3) * 0.5);
    let d = dmatrix![1.0, 0.0; 0.0, 0.0];
    assert!(regularized_inverse(&d, InversionMode::Exact).unwrap_err().is_singular());
    assert_relative_eq!(regularized_inverse(&d, InversionMode::pseudo()).unwrap(), d.clone());
    let ridge = regularized_inverse(&d, InversionMode::ridge(0.5).unwrap()).unwrap();
    assert_relative_eq!(ridge, dmatrix![1.0 / 1.5, 0.0; 0.0, 2.0], epsilon = 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn roots_square_back(n in 1usize..6, seed in any::<u64>()) {
        let mut rng = foldkit::rng::seeded(seed);
        let g = foldkit::rng::standard_normal_matrix(&mut rng, n, n + 2);
        let s = &g * g.transpose();
        let root = sqrt_psd(&s, InversionMode::Exact).unwrap();
        prop_assert!((&root * &root - &s).norm() <= 1e-8 * s.norm());
        let inv_root = inverse_sqrt(&s, InversionMode::Exact).unwrap();
        let inv = regularized_inverse(&s, InversionMode::Exact).unwrap();
        prop_assert!((&inv_root * &inv_root - &inv).norm() <= 1e-8 * inv.norm());
        prop_assert!((&s * &inv - DMatrix::identity(n, n)).norm() < 1e-6);
    }

    #[test]
    fn pseudo_inverse_penrose_conditions(n in 2usize..6, seed in any::<u64>()) {
        let mut rng = foldkit::rng::seeded(seed);
        let g = foldkit::rng::standard_normal_matrix(&mut rng, n, n - 1);
        let s = &g * g.transpose();
        let pinv = regularized_inverse(&s, InversionMode::pseudo()).unwrap();
        prop_assert!((&s * &pinv * &s - &s).norm() <= 1e-8 * s.norm());
        prop_assert!((&pinv * &s * &pinv - &pinv).norm() <= 1e-8 * pinv.norm());
    }
}
