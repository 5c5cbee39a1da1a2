//! Dense third-order complex tensors.
//!
//! Entry `(i, j, k)` of a `d1 × d2 × d3` tensor is stored at
//! `i + d1·j + d1·d2·k`. That layout makes the mode-1 unfolding (a
//! `d1 × d2·d3` column-major matrix) a view of the raw storage, so mode-1
//! contraction is a single matrix product.

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut};

use crate::error::{invalid, Result};
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor3 {
    dims: [usize; 3],
    data: Vec<C64>,
}

impl ComplexTensor3 {
    pub fn zeros(d1: usize, d2: usize, d3: usize) -> Self {
        Self {
            dims: [d1, d2, d3],
            data: vec![C64::new(0.0, 0.0); d1 * d2 * d3],
        }
    }

    pub fn from_vec(dims: [usize; 3], data: Vec<C64>) -> Result<Self> {
        if data.len() != dims[0] * dims[1] * dims[2] {
            return Err(invalid(format!(
                "{} entries cannot fill a {}x{}x{} tensor",
                data.len(),
                dims[0],
                dims[1],
                dims[2]
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn from_fn(dims: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    data.push(f(i, j, k));
                }
            }
        }
        Self { dims, data }
    }

    /// Rebuilds a tensor from its mode-1 unfolding.
    pub fn from_unfolding(dims: [usize; 3], unfolding: &DMatrix<C64>) -> Result<Self> {
        if unfolding.nrows() != dims[0] || unfolding.ncols() != dims[1] * dims[2] {
            return Err(invalid("unfolding shape does not match tensor dimensions"));
        }
        Ok(Self {
            dims,
            data: unfolding.as_slice().to_vec(),
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.dims[0] && j < self.dims[1] && k < self.dims[2]);
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> C64 {
        self.data[self.offset(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, value: C64) {
        let o = self.offset(i, j, k);
        self.data[o] = value;
    }

    /// Mode-1 unfolding `d1 × (d2·d3)`, column `j + d2·k`.
    pub fn unfold_mode1(&self) -> DMatrixView<'_, C64> {
        DMatrixView::from_slice(&self.data, self.dims[0], self.dims[1] * self.dims[2])
    }

    pub fn unfold_mode1_mut(&mut self) -> DMatrixViewMut<'_, C64> {
        DMatrixViewMut::from_slice(&mut self.data, self.dims[0], self.dims[1] * self.dims[2])
    }

    /// Frontal slice `[:, :, k]` as a `d1 × d2` matrix.
    pub fn frontal_slice(&self, k: usize) -> DMatrixView<'_, C64> {
        let n = self.dims[0] * self.dims[1];
        DMatrixView::from_slice(&self.data[k * n..(k + 1) * n], self.dims[0], self.dims[1])
    }

    pub fn set_frontal_slice(&mut self, k: usize, slice: &DMatrix<C64>) {
        let n = self.dims[0] * self.dims[1];
        assert_eq!(slice.shape(), (self.dims[0], self.dims[1]));
        self.data[k * n..(k + 1) * n].copy_from_slice(slice.as_slice());
    }

    pub fn scale_mut(&mut self, c: C64) {
        for x in &mut self.data {
            *x *= c;
        }
    }
}

impl std::ops::Sub<&ComplexTensor3> for &ComplexTensor3 {
    type Output = ComplexTensor3;

    fn sub(self, rhs: &ComplexTensor3) -> ComplexTensor3 {
        assert_eq!(self.dims, rhs.dims, "tensor dimensions differ");
        ComplexTensor3 {
            dims: self.dims,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// `out[i, q, k] = Σ_g A[i, g] T[g, q, k]`.
pub fn contract_mode1(a: &DMatrix<C64>, t: &ComplexTensor3) -> Result<ComplexTensor3> {
    if a.ncols() != t.dims[0] {
        return Err(invalid(format!(
            "cannot contract a {}x{} matrix with a tensor of leading dimension {}",
            a.nrows(),
            a.ncols(),
            t.dims[0]
        )));
    }
    let product = a * t.unfold_mode1();
    Ok(ComplexTensor3 {
        dims: [a.nrows(), t.dims[1], t.dims[2]],
        data: product.as_slice().to_vec(),
    })
}

/// Squared ℓ1 norm of the horizontal slice `[g, :, :]`.
pub fn slice_l1_energy(t: &ComplexTensor3, g: usize) -> Result<f64> {
    if g >= t.dims[0] {
        return Err(invalid(format!("slice {g} outside leading dimension {}", t.dims[0])));
    }
    let d1 = t.dims[0];
    let l1: f64 = t.data[g..].iter().step_by(d1).map(|x| x.norm()).sum();
    Ok(l1 * l1)
}

/// Squared ℓ1 norms of every horizontal slice, in one pass.
pub fn slice_l1_energies(t: &ComplexTensor3) -> Vec<f64> {
    let d1 = t.dims[0];
    let mut l1 = vec![0.0; d1];
    for column in t.data.chunks_exact(d1.max(1)) {
        for (acc, x) in l1.iter_mut().zip(column) {
            *acc += x.norm();
        }
    }
    l1.into_iter().map(|s| s * s).collect()
}

pub fn frobenius_norm_sq(t: &ComplexTensor3) -> f64 {
    t.data.iter().map(|x| x.norm_sqr()).sum()
}
