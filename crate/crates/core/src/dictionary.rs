//! Over-complete DFT steering dictionaries and sparse reconstruction.
//!
//! Atom `g` of a size-`G` dictionary is the steering vector with argument
//! `-π + 2πg/G`, so the grid covers `[-π, π)` uniformly. The sparse
//! coefficient matrix of a cascaded channel is never formed densely; an
//! estimate is a list of [`PathAtom`]s.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};
use crate::geometry::{steering_unchecked, wrap_phase, ChannelMatrix, LinkRole};
use crate::C64;

#[derive(Debug, Clone)]
pub struct Dictionary {
    atoms: DMatrix<C64>,
    grid_args: Vec<f64>,
    gram: OnceLock<DMatrix<C64>>,
}

/// Builds the `n_elements × grid_size` dictionary.
pub fn build_dictionary(n_elements: usize, grid_size: usize) -> Result<Dictionary> {
    if grid_size == 0 {
        return Err(invalid("dictionary grid needs at least one point"));
    }
    if n_elements == 0 {
        return Err(invalid("dictionary atoms need at least one element"));
    }
    let step = 2.0 * PI / grid_size as f64;
    let grid_args: Vec<f64> = (0..grid_size).map(|g| -PI + step * g as f64).collect();
    let mut atoms = DMatrix::zeros(n_elements, grid_size);
    for (g, &arg) in grid_args.iter().enumerate() {
        atoms.set_column(g, &steering_unchecked(arg, n_elements));
    }
    Ok(Dictionary {
        atoms,
        grid_args,
        gram: OnceLock::new(),
    })
}

impl Dictionary {
    pub fn n_elements(&self) -> usize {
        self.atoms.nrows()
    }

    pub fn grid_size(&self) -> usize {
        self.atoms.ncols()
    }

    pub fn atoms(&self) -> &DMatrix<C64> {
        &self.atoms
    }

    pub fn grid_args(&self) -> &[f64] {
        &self.grid_args
    }

    pub fn atom(&self, g: usize) -> DVector<C64> {
        self.atoms.column(g).into_owned()
    }

    /// Columns at `indices`, in order.
    pub fn select(&self, indices: &[usize]) -> Result<DMatrix<C64>> {
        self.check(indices)?;
        Ok(self.atoms.select_columns(indices))
    }

    /// Gram matrix `A^H A`, computed on first use.
    pub fn gram(&self) -> &DMatrix<C64> {
        self.gram.get_or_init(|| self.atoms.ad_mul(&self.atoms))
    }

    /// Grid index closest (on the circle) to a phase argument.
    pub fn nearest_index(&self, phase_arg: f64) -> usize {
        let g = self.grid_size() as f64;
        let pos = (wrap_phase(phase_arg) + PI) * g / (2.0 * PI);
        (pos.round() as usize) % self.grid_size()
    }

    fn check(&self, indices: &[usize]) -> Result<()> {
        match indices.iter().find(|&&i| i >= self.grid_size()) {
            Some(i) => Err(invalid(format!(
                "atom index {i} outside a grid of {}",
                self.grid_size()
            ))),
            None => Ok(()),
        }
    }
}

/// Atom indices with aligned coefficients (one coefficient row per index).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SupportSet {
    pub indices: Vec<usize>,
    pub coefficients: DMatrix<C64>,
}

impl SupportSet {
    pub fn new(indices: Vec<usize>, coefficients: DMatrix<C64>) -> Result<Self> {
        if coefficients.nrows() != indices.len() {
            return Err(invalid(format!(
                "{} indices but {} coefficient rows",
                indices.len(),
                coefficients.nrows()
            )));
        }
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("support indices must be unique"));
        }
        Ok(Self { indices, coefficients })
    }

    pub fn empty() -> Self {
        Self {
            indices: Vec::new(),
            coefficients: DMatrix::zeros(0, 1),
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// One nonzero of the virtual channel: RIS-side grid index, BS-side grid
/// index and complex gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathAtom {
    pub aoa: usize,
    pub aod: usize,
    pub gain: C64,
}

/// `Σ gain · a_R(aoa) a_T(aod)^H`, i.e. `A_R X A_T^H` for the sparse X the
/// atoms describe.
pub fn reconstruct_cascaded(atoms: &[PathAtom], dict_r: &Dictionary, dict_t: &Dictionary) -> Result<ChannelMatrix> {
    let mut g = DMatrix::zeros(dict_r.n_elements(), dict_t.n_elements());
    for atom in atoms {
        dict_r.check(&[atom.aoa])?;
        dict_t.check(&[atom.aod])?;
        g.gerc(
            atom.gain,
            &dict_r.atoms.column(atom.aoa),
            &dict_t.atoms.column(atom.aod),
            C64::new(1.0, 0.0),
        );
    }
    Ok(ChannelMatrix::new(g, LinkRole::Cascaded))
}
