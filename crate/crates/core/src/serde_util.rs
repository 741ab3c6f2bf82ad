//! JSON shapes for complex data: scalars as `[re, im]`, matrices as
//! `{"rows", "cols", "re", "im"}` in row-major order.

use crate::{CMat, CVec, C64};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct MatrixRepr {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&CMat> for MatrixRepr {
    fn from(m: &CMat) -> Self {
        let mut re = Vec::with_capacity(m.len());
        let mut im = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        MatrixRepr { rows: m.nrows(), cols: m.ncols(), re, im }
    }
}

impl MatrixRepr {
    pub fn to_matrix(&self) -> Result<CMat, String> {
        let n = self.rows * self.cols;
        if self.re.len() != n || self.im.len() != n {
            return Err(format!(
                "matrix {}x{} needs {} entries, got re={} im={}",
                self.rows,
                self.cols,
                n,
                self.re.len(),
                self.im.len()
            ));
        }
        Ok(CMat::from_fn(self.rows, self.cols, |i, j| {
            let k = i * self.cols + j;
            C64::new(self.re[k], self.im[k])
        }))
    }
}

pub mod cvec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &CVec, s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CVec, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(CVec::from_iterator(pairs.len(), pairs.into_iter().map(|[a, b]| C64::new(a, b))))
    }
}

pub mod cvec_list {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[CVec], s: S) -> Result<S::Ok, S::Error> {
        let all: Vec<Vec<[f64; 2]>> =
            v.iter().map(|x| x.iter().map(|z| [z.re, z.im]).collect()).collect();
        all.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CVec>, D::Error> {
        let all: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        Ok(all
            .into_iter()
            .map(|p| CVec::from_iterator(p.len(), p.into_iter().map(|[a, b]| C64::new(a, b))))
            .collect())
    }
}

pub mod c64_list {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(pairs.into_iter().map(|[a, b]| C64::new(a, b)).collect())
    }
}

pub mod c64_pair {
    use super::*;

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        let [a, b] = <[f64; 2]>::deserialize(d)?;
        Ok(C64::new(a, b))
    }
}

pub mod cmat {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> Result<S::Ok, S::Error> {
        MatrixRepr::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMat, D::Error> {
        let r = MatrixRepr::deserialize(d)?;
        r.to_matrix().map_err(serde::de::Error::custom)
    }
}
