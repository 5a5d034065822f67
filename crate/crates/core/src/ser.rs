//! Serde helpers for nalgebra and complex values.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::ser::{SerializeSeq, Serializer};

pub fn matrix<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for i in 0..m.nrows() {
        let row: Vec<f64> = (0..m.ncols()).map(|j| m[(i, j)]).collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

pub fn opt_matrix<S: Serializer>(m: &Option<DMatrix<f64>>, s: S) -> Result<S::Ok, S::Error> {
    match m {
        Some(m) => matrix(m, s),
        None => s.serialize_none(),
    }
}

pub fn vector<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v.iter() {
        seq.serialize_element(x)?;
    }
    seq.end()
}

pub fn complex_vec<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for z in v {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

pub fn complex_vecs<S: Serializer>(v: &[Vec<Complex64>], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for col in v {
        let pairs: Vec<[f64; 2]> = col.iter().map(|z| [z.re, z.im]).collect();
        seq.serialize_element(&pairs)?;
    }
    seq.end()
}

pub fn complex<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&[z.re, z.im], s)
}
