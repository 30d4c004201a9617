use nalgebra::DMatrix;

use crate::error::{Result, SmmsError};

/// Which index symmetries a tensor value is known to carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryTag {
    None,
    Sym2,
    RiemannLike,
}

/// Pointwise value of a covariant tensor of rank 0..=4 in coordinate
/// components, stored densely in row-major index order.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorValue {
    dim: usize,
    rank: usize,
    components: Vec<f64>,
    symmetry: SymmetryTag,
}

impl TensorValue {
    pub fn zeros(dim: usize, rank: usize) -> Self {
        Self {
            dim,
            rank,
            components: vec![0.0; dim.pow(rank as u32)],
            symmetry: SymmetryTag::None,
        }
    }

    pub fn from_components(dim: usize, rank: usize, components: Vec<f64>) -> Result<Self> {
        if components.len() != dim.pow(rank as u32) {
            return Err(SmmsError::RankMismatch(format!(
                "{} components for rank {rank} in dimension {dim}",
                components.len()
            )));
        }
        if let Some(bad) = components.iter().position(|x| !x.is_finite()) {
            return Err(SmmsError::NonFinite {
                point: vec![],
                what: format!("tensor component #{bad}"),
            });
        }
        Ok(Self {
            dim,
            rank,
            components,
            symmetry: SymmetryTag::None,
        })
    }

    /// Rank-2 value from a matrix, stored as its exact symmetric part.
    pub fn sym2_from_matrix(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut components = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                components[i * n + j] = 0.5 * (m[(i, j)] + m[(j, i)]);
            }
        }
        Self {
            dim: n,
            rank: 2,
            components,
            symmetry: SymmetryTag::Sym2,
        }
    }

    pub fn covector(components: Vec<f64>) -> Self {
        Self {
            dim: components.len(),
            rank: 1,
            components,
            symmetry: SymmetryTag::None,
        }
    }

    /// Projects a rank-4 value onto the tensors with curvature symmetries
    /// (antisymmetric in each pair, symmetric under pair exchange).
    pub fn riemann_projection(raw: &TensorValue) -> Result<Self> {
        if raw.rank != 4 {
            return Err(SmmsError::RankMismatch(format!(
                "riemann projection needs rank 4, got {}",
                raw.rank
            )));
        }
        let n = raw.dim;
        let mut out = TensorValue::zeros(n, 4);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let v = raw.get4(a, b, c, d) - raw.get4(b, a, c, d) - raw.get4(a, b, d, c)
                            + raw.get4(b, a, d, c)
                            + raw.get4(c, d, a, b)
                            - raw.get4(d, c, a, b)
                            - raw.get4(c, d, b, a)
                            + raw.get4(d, c, b, a);
                        out.set(&[a, b, c, d], v / 8.0);
                    }
                }
            }
        }
        out.symmetry = SymmetryTag::RiemannLike;
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn symmetry(&self) -> SymmetryTag {
        self.symmetry
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn into_components(self) -> Vec<f64> {
        self.components
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.components[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let k = self.offset(idx);
        self.components[k] = value;
    }

    #[inline]
    pub fn get2(&self, i: usize, j: usize) -> f64 {
        self.components[i * self.dim + j]
    }

    #[inline]
    pub fn get3(&self, i: usize, j: usize, k: usize) -> f64 {
        self.components[(i * self.dim + j) * self.dim + k]
    }

    #[inline]
    pub fn get4(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.components[((i * self.dim + j) * self.dim + k) * self.dim + l]
    }

    /// Rank-2 value as a matrix.
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.rank != 2 {
            return Err(SmmsError::RankMismatch(format!(
                "expected rank 2, got {}",
                self.rank
            )));
        }
        Ok(DMatrix::from_row_slice(self.dim, self.dim, &self.components))
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    fn check_same_shape(&self, other: &TensorValue) -> Result<()> {
        if self.dim != other.dim || self.rank != other.rank {
            return Err(SmmsError::RankMismatch(format!(
                "shape ({}, rank {}) vs ({}, rank {})",
                self.dim, self.rank, other.dim, other.rank
            )));
        }
        Ok(())
    }

    pub fn sub(&self, other: &TensorValue) -> Result<TensorValue> {
        self.check_same_shape(other)?;
        Ok(self.combine(other, |a, b| a - b))
    }

    pub fn add(&self, other: &TensorValue) -> Result<TensorValue> {
        self.check_same_shape(other)?;
        Ok(self.combine(other, |a, b| a + b))
    }

    fn combine(&self, other: &TensorValue, op: impl Fn(f64, f64) -> f64) -> TensorValue {
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| op(*a, *b))
            .collect();
        let symmetry = if self.symmetry == other.symmetry {
            self.symmetry
        } else {
            SymmetryTag::None
        };
        TensorValue {
            dim: self.dim,
            rank: self.rank,
            components,
            symmetry,
        }
    }

    pub fn scale(&self, s: f64) -> TensorValue {
        TensorValue {
            components: self.components.iter().map(|x| x * s).collect(),
            ..self.clone()
        }
    }

    /// Components `T(E_a, E_b, ...)` in the frame whose vectors are the
    /// columns of `frame` (coordinate components).
    pub fn in_frame(&self, frame: &DMatrix<f64>) -> TensorValue {
        let n = self.dim;
        let mut current = self.components.clone();
        // Contract one slot at a time; slot s has stride n^(rank-1-s).
        for slot in 0..self.rank {
            let stride = n.pow((self.rank - 1 - slot) as u32);
            let mut next = vec![0.0; current.len()];
            for (k, out) in next.iter_mut().enumerate() {
                let a = (k / stride) % n;
                let base = k - a * stride;
                let mut acc = 0.0;
                for i in 0..n {
                    acc += frame[(i, a)] * current[base + i * stride];
                }
                *out = acc;
            }
            current = next;
        }
        TensorValue {
            dim: n,
            rank: self.rank,
            components: current,
            symmetry: self.symmetry,
        }
    }

    /// Largest violation of the curvature symmetries, relative to `max_abs`.
    pub fn riemann_symmetry_defect(&self) -> f64 {
        assert_eq!(self.rank, 4, "riemann symmetry defect needs rank 4");
        let n = self.dim;
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let r = self.get4(a, b, c, d);
                        worst = worst
                            .max((r + self.get4(b, a, c, d)).abs())
                            .max((r + self.get4(a, b, d, c)).abs())
                            .max((r - self.get4(c, d, a, b)).abs());
                    }
                }
            }
        }
        worst / scale
    }

    /// Largest cyclic sum `R_abcd + R_bcad + R_cabd`.
    pub fn first_bianchi_defect(&self) -> f64 {
        assert_eq!(self.rank, 4, "bianchi defect needs rank 4");
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let s = self.get4(a, b, c, d) + self.get4(b, c, a, d) + self.get4(c, a, b, d);
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }
}

/// Kulkarni–Nomizu product of two symmetric 2-tensors:
/// `(S⊘T)(X,Y,Z,U) = T(X,Z)S(Y,U) + T(Y,U)S(X,Z) - T(X,U)S(Y,Z) - T(Y,Z)S(X,U)`.
pub fn kulkarni_nomizu(s: &TensorValue, t: &TensorValue) -> Result<TensorValue> {
    if s.rank != 2 || t.rank != 2 || s.dim != t.dim {
        return Err(SmmsError::RankMismatch(format!(
            "kulkarni-nomizu needs two rank-2 tensors of equal dimension, got (dim {}, rank {}) and (dim {}, rank {})",
            s.dim, s.rank, t.dim, t.rank
        )));
    }
    let n = s.dim;
    let mut out = TensorValue::zeros(n, 4);
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                for u in 0..n {
                    let v = t.get2(x, z) * s.get2(y, u) + t.get2(y, u) * s.get2(x, z)
                        - t.get2(x, u) * s.get2(y, z)
                        - t.get2(y, z) * s.get2(x, u);
                    out.set(&[x, y, z, u], v);
                }
            }
        }
    }
    out.symmetry = SymmetryTag::RiemannLike;
    Ok(out)
}

/// `ι_X T (...) = T(X, ...)` with `x` given by its vector components.
pub fn interior_product(x: &TensorValue, t: &TensorValue) -> Result<TensorValue> {
    if x.rank != 1 || t.rank == 0 || x.dim != t.dim {
        return Err(SmmsError::RankMismatch(format!(
            "interior product needs a vector and a tensor of rank >= 1 in the same dimension, got (dim {}, rank {}) and (dim {}, rank {})",
            x.dim, x.rank, t.dim, t.rank
        )));
    }
    let n = t.dim;
    let tail = n.pow((t.rank - 1) as u32);
    let mut components = vec![0.0; tail];
    for (i, xi) in x.components.iter().enumerate() {
        if *xi == 0.0 {
            continue;
        }
        for (k, c) in components.iter_mut().enumerate() {
            *c += xi * t.components[i * tail + k];
        }
    }
    Ok(TensorValue {
        dim: n,
        rank: t.rank - 1,
        components,
        symmetry: SymmetryTag::None,
    })
}
