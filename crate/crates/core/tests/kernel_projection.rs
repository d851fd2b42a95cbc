use nalgebra::SymmetricEigen;
use proptest::prelude::*;

use uma::data::generate_synthetic;
use uma::kpca::{gaussian_gram, kpca_fit};
use uma::Features;

fn pairwise(rows: &[Vec<f64>]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            out.push(rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt());
        }
    }
    out
}

fn ranks(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    idx
}

#[test]
fn wide_kernel_preserves_distance_order() {
    let (data, _) = generate_synthetic(3, 5, 0.0, 9).unwrap();
    let x = data.features().to_dense();
    let proj = kpca_fit(&x, 100.0, 4).unwrap();
    let projected = proj.transform(&x).unwrap();
    let inputs: Vec<Vec<f64>> = (0..5).map(|i| x.row(i).to_dense(2)).collect();
    let outputs: Vec<Vec<f64>> = (0..5).map(|i| projected.row(i).iter().copied().collect()).collect();
    assert_eq!(ranks(&pairwise(&inputs)), ranks(&pairwise(&outputs)));
}

#[test]
fn projected_training_set_is_centred() {
    let (data, _) = generate_synthetic(4, 120, 0.0, 2).unwrap();
    let proj = kpca_fit(data.features(), 0.7, 10).unwrap();
    let z = proj.transform(data.features()).unwrap();
    for col in z.column_iter() {
        assert!(col.mean().abs() < 1e-8);
    }
    let eig = proj.eigenvalues();
    assert!(eig.windows(2).all(|w| w[0] >= w[1]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gram_is_symmetric_psd(
        rows in prop::collection::vec(prop::collection::vec(-3.0..3.0f64, 3), 2..30),
        sigma in 0.05..5.0f64,
    ) {
        let x = Features::from_rows(3, &rows).unwrap();
        let k = gaussian_gram(&x, &x, sigma).unwrap();
        prop_assert!((&k - k.transpose()).amax() < 1e-15);
        prop_assert!(k.diagonal().iter().all(|&d| d == 1.0));
        prop_assert!(SymmetricEigen::new(k).eigenvalues.min() >= -1e-8);
    }
}
