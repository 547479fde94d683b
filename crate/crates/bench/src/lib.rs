//! Shared fixtures for the benchmarks.

use delaystab::{Dilation, Monomial, PolyVectorField, SystemModel, TimeKind};

/// `x1' = -5 x1^3 + 2 x1 x2 + x1(t - tau) x2(t - tau)`,
/// `x2' = x1^2 x2 - 4 x2^2 + 2 x1(t - tau)^4`, homogeneous of degree 2
/// for the weights `(1, 2)`.
pub fn reference_system() -> SystemModel {
    let f = PolyVectorField::new(
        2,
        vec![
            vec![
                Monomial::new(-5.0, vec![3, 0]),
                Monomial::new(2.0, vec![1, 1]),
            ],
            vec![
                Monomial::new(1.0, vec![2, 1]),
                Monomial::new(-4.0, vec![0, 2]),
            ],
        ],
    )
    .expect("valid field");
    let g = PolyVectorField::new(
        2,
        vec![
            vec![Monomial::new(1.0, vec![1, 1])],
            vec![Monomial::new(2.0, vec![4, 0])],
        ],
    )
    .expect("valid field");
    SystemModel::new(
        TimeKind::Continuous,
        f,
        vec![g],
        Dilation::new(vec![1.0, 2.0]).expect("weights"),
        2.0,
    )
    .expect("valid model")
}

/// A stable Metzler pair `(A, B)` of size `n` with a tridiagonal coupling.
pub fn chain_pair(n: usize) -> (Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>) {
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![vec![0.0; n]; n];
    for i in 0..n {
        a[i][i] = -2.0;
        if i + 1 < n {
            a[i][i + 1] = 0.4;
            b[i + 1][i] = 0.3;
        }
        b[i][i] = 0.5;
    }
    (a, vec![b])
}
