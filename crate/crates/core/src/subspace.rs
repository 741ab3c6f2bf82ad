//! Subspaces: an ordered basis plus an orthonormal Euclidean frame used for
//! rank, kernel and intersection arithmetic.

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, RANK_TOL};
use crate::operators::Operator;
use crate::serde_util::cmat;
use crate::spaces::{basis_vec, gaussian_vec, Space};
use crate::{CMat, CVec};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Subspace {
    ambient: Space,
    #[serde(with = "cmat")]
    basis: CMat,
    #[serde(skip, default = "empty")]
    frame: CMat,
}

fn empty() -> CMat {
    CMat::zeros(0, 0)
}

impl Subspace {
    /// Subspace spanned by the columns of `basis`, which must be independent.
    pub fn new(ambient: Space, basis: CMat) -> Result<Subspace> {
        check_len(ambient.dim(), basis.nrows())?;
        let frame = linalg::column_space(&basis, RANK_TOL);
        if frame.ncols() < basis.ncols() {
            return Err(Error::RankDeficient { rank: frame.ncols(), expected: basis.ncols() });
        }
        Ok(Subspace { ambient, basis, frame })
    }

    pub fn from_vectors(ambient: Space, vs: &[CVec]) -> Result<Subspace> {
        let n = ambient.dim();
        for v in vs {
            check_len(n, v.len())?;
        }
        let basis = if vs.is_empty() { CMat::zeros(n, 0) } else { CMat::from_columns(vs) };
        Subspace::new(ambient, basis)
    }

    /// Span of possibly dependent vectors; the basis is the orthonormal frame.
    pub fn span_of(ambient: Space, m: &CMat, rel_tol: f64) -> Result<Subspace> {
        check_len(ambient.dim(), m.nrows())?;
        let frame = linalg::column_space(m, rel_tol);
        Ok(Subspace { ambient, basis: frame.clone(), frame })
    }

    /// From an orthonormal frame.
    pub fn from_frame(ambient: Space, frame: CMat) -> Subspace {
        Subspace { ambient, basis: frame.clone(), frame }
    }

    pub fn zero(ambient: Space) -> Subspace {
        let n = ambient.dim();
        Subspace::from_frame(ambient, CMat::zeros(n, 0))
    }

    pub fn full(ambient: Space) -> Subspace {
        let n = ambient.dim();
        Subspace::from_frame(ambient, CMat::identity(n, n))
    }

    pub fn coordinates(ambient: Space, idx: &[usize]) -> Result<Subspace> {
        let n = ambient.dim();
        if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
            return Err(Error::DimensionMismatch { expected: n, got: bad + 1 });
        }
        let vs: Vec<CVec> = idx.iter().map(|&i| basis_vec(n, i)).collect();
        Subspace::from_vectors(ambient, &vs)
    }

    /// Rebuild the frame after deserialization.
    pub fn restore(self) -> Result<Subspace> {
        Subspace::new(self.ambient, self.basis)
    }

    pub fn ambient(&self) -> &Space {
        &self.ambient
    }

    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    pub fn frame(&self) -> &CMat {
        &self.frame
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn basis_vectors(&self) -> Vec<CVec> {
        (0..self.basis.ncols()).map(|j| self.basis.column(j).into_owned()).collect()
    }

    /// Euclidean distance from `v` to the subspace relative to `|v|_2`.
    pub fn relative_offset(&self, v: &CVec) -> f64 {
        let nv = v.norm();
        if nv == 0.0 {
            return 0.0;
        }
        let p = &self.frame * (self.frame.adjoint() * v);
        (v - p).norm() / nv
    }

    pub fn contains(&self, v: &CVec, tol: f64) -> bool {
        self.relative_offset(v) <= tol
    }

    /// Largest principal angle to another subspace.
    pub fn distance(&self, other: &Subspace) -> f64 {
        linalg::principal_angle(&self.frame, &other.frame)
    }

    /// Largest angle by which this subspace sticks out of `other`; zero iff
    /// `self` is contained in `other`.
    pub fn excess_over(&self, other: &Subspace) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let r = &self.frame - &other.frame * (other.frame.adjoint() * &self.frame);
        linalg::spectral_norm(&r).min(1.0).asin()
    }

    pub fn intersect(&self, other: &Subspace, tol: f64) -> Subspace {
        Subspace::from_frame(self.ambient.clone(), linalg::intersect(&self.frame, &other.frame, tol))
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        Subspace::from_frame(self.ambient.clone(), linalg::span_sum(&self.frame, &other.frame, 1e-9))
    }

    /// Euclidean orthogonal complement.
    pub fn complement(&self) -> Subspace {
        let n = self.ambient.dim();
        Subspace::from_frame(self.ambient.clone(), linalg::orth_complement(&self.frame, n))
    }

    /// `T(self)` as a subspace of the codomain.
    pub fn image(&self, t: &Operator) -> Subspace {
        let m = t.entries() * &self.frame;
        Subspace::from_frame(t.codomain().clone(), linalg::column_space(&m, 1e-9))
    }

    /// Euclidean projector onto the subspace.
    pub fn projector(&self) -> CMat {
        &self.frame * self.frame.adjoint()
    }

    /// Random unit vector (in the ambient norm) with Gaussian frame coefficients.
    pub fn random_unit_with<R: Rng>(&self, rng: &mut R) -> Option<CVec> {
        if self.is_zero() {
            return None;
        }
        loop {
            let c = gaussian_vec(self.dim(), rng);
            let v = &self.frame * c;
            let n = self.ambient.norm_slice(v.as_slice());
            if n > 1e-9 {
                return Some(v.unscale(n));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::real_vec;

    #[test]
    fn rank_deficient_basis_is_rejected() {
        let s = Space::lpf(3, 2.0).unwrap();
        let r = Subspace::from_vectors(s, &[real_vec(&[1.0, 1.0, 0.0]), real_vec(&[2.0, 2.0, 0.0])]);
        assert!(matches!(r, Err(Error::RankDeficient { rank: 1, expected: 2 })));
    }

    #[test]
    fn intersection_and_sum() {
        let s = Space::lpf(4, 3.0).unwrap();
        let a = Subspace::coordinates(s.clone(), &[0, 1]).unwrap();
        let b = Subspace::coordinates(s.clone(), &[1, 2]).unwrap();
        assert_eq!(a.intersect(&b, 1e-9).dim(), 1);
        assert_eq!(a.sum(&b).dim(), 3);
        assert!(a.intersect(&b, 1e-9).distance(&Subspace::coordinates(s, &[1]).unwrap()) < 1e-12);
    }

    #[test]
    fn json_roundtrip() {
        let s = Space::lpf(3, 1.5).unwrap();
        let a = Subspace::from_vectors(s, &[real_vec(&[1.0, 1.0, 0.0])]).unwrap();
        let js = serde_json::to_string(&a).unwrap();
        let back: Subspace = serde_json::from_str::<Subspace>(&js).unwrap().restore().unwrap();
        assert!(back.distance(&a) < 1e-14);
    }
}
