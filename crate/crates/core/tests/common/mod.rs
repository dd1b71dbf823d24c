#![allow(dead_code)]

use gem_core::datamodel::{AlignedStudy, Dataset, DesignVariable};
use gem_core::linalg::Matrix;
use gem_core::rng::substream;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    substream(seed, "tests")
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Matrix {
    Matrix::from_fn(n, m, |_, _| StandardNormal.sample(rng))
}

pub fn to_na(m: &Matrix) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn rel_frobenius(a: &Matrix, b: &Matrix) -> f64 {
    a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm().max(f64::MIN_POSITIVE)
}

/// Random study with `vars` design variables cycling through two-level,
/// continuous, three-level and two-level kinds; every level is observed.
pub fn random_study(rng: &mut ChaCha8Rng, n: usize, m: usize, vars: usize) -> AlignedStudy {
    let y = Matrix::from_fn(n, m, |_, _| { let z: f64 = StandardNormal.sample(rng); 5.0 + 2.0 * z });
    let ids = (0..n).map(|i| format!("S{i}")).collect();
    let names = (0..m).map(|j| format!("V{j}")).collect();
    let mut design = Vec::new();
    for k in 0..vars {
        let name = format!("d{}", k + 1);
        let v = match k % 4 {
            1 => DesignVariable::continuous(&name, (0..n).map(|_| rng.random_range(18.0..51.0)).collect())
                .unwrap(),
            2 => {
                let mut labels: Vec<&str> = (0..n).map(|_| ["x", "y", "z"][rng.random_range(0..3)]).collect();
                labels[0] = "x";
                labels[1] = "y";
                labels[2] = "z";
                DesignVariable::categorical(&name, &labels, Some(vec!["x".into(), "y".into(), "z".into()]))
                    .unwrap()
            }
            _ => {
                let mut labels: Vec<&str> = (0..n).map(|_| if rng.random_bool(0.5) { "a" } else { "b" }).collect();
                labels[k % n] = "a";
                labels[(k + 1) % n] = "b";
                DesignVariable::categorical(&name, &labels, Some(vec!["a".into(), "b".into()])).unwrap()
            }
        };
        design.push(v);
    }
    AlignedStudy::new(Dataset::new(ids, names, y).unwrap(), design).unwrap()
}

pub fn study_from(y: Matrix, design: Vec<DesignVariable>) -> AlignedStudy {
    let ids = (0..y.nrows()).map(|i| format!("S{i}")).collect();
    let names = (0..y.ncols()).map(|j| format!("V{j}")).collect();
    AlignedStudy::new(Dataset::new(ids, names, y).unwrap(), design).unwrap()
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}
