//! Husimi distributions on the cell torus.
//!
//! Coherent states are periodized Gaussians of width `σ_q² = 1/(2πD)` on the
//! position grid `q_j = (j + 1/2)/D`, with alternating image signs for the
//! antiperiodic boundary conditions.

use std::f64::consts::PI;

use crate::cell::{CellDensity, CellState};
use crate::transport::LatticeState;
use crate::{CMatrix, CVector, Error, Result, C64};

/// Number of periodic images kept on each side.
pub const IMAGE_RANGE: i32 = 3;

pub fn default_resolution(dim: usize) -> usize {
    ((4.0 * (dim as f64).sqrt()).ceil() as usize).max(64)
}

fn coherent_amplitudes(dim: usize, q0: f64, p0: f64, images: i32) -> CVector {
    let d = dim as f64;
    CVector::from_fn(dim, |j, _| {
        let q = (j as f64 + 0.5) / d;
        (-images..=images)
            .map(|n| {
                let dq = q - q0 + n as f64;
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                C64::from_polar(sign * (-PI * d * dq * dq).exp(), 2.0 * PI * d * p0 * dq)
            })
            .sum()
    })
}

/// Torus coherent state centred at `(q0, p0) ∈ [0, 1)²`.
pub fn coherent_state(dim: usize, q0: f64, p0: f64) -> Result<CellState> {
    if dim == 0 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "dimension must be positive",
        });
    }
    if !(0.0..1.0).contains(&q0) || !(0.0..1.0).contains(&p0) {
        return Err(Error::Domain(format!("centre ({q0}, {p0}) outside [0,1)^2")));
    }
    CellState::normalized(coherent_amplitudes(dim, q0, p0, IMAGE_RANGE))
}

/// `H(q_i, p_j)` on the grid `q_i = (i + 1/2)/R`, `p_j = (j + 1/2)/R`.
#[derive(Debug, Clone, PartialEq)]
pub struct HusimiGrid {
    pub resolution: usize,
    /// Row-major in `q`: entry `i * R + j` is `H(q_i, p_j)`.
    pub values: Vec<f64>,
    /// Lattice cell of the panel, if it came from a lattice state.
    pub cell: Option<i64>,
    /// Trace of the (possibly unnormalized) state the grid was computed from.
    pub mass: f64,
}

impl HusimiGrid {
    pub fn coordinate(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.resolution as f64
    }

    pub fn value(&self, qi: usize, pj: usize) -> f64 {
        self.values[qi * self.resolution + pj]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Mean over `q` at fixed momentum index `pj`.
    pub fn momentum_row_mean(&self, pj: usize) -> f64 {
        (0..self.resolution).map(|qi| self.value(qi, pj)).sum::<f64>() / self.resolution as f64
    }

    /// Values divided by the panel maximum (all zero for an empty panel).
    pub fn max_normalized(&self) -> Vec<f64> {
        let m = self.max();
        if m > 0.0 {
            self.values.iter().map(|v| v / m).collect()
        } else {
            vec![0.0; self.values.len()]
        }
    }
}

/// Rows are `⟨z_{q_i, p_j}|` over the `R × R` grid.
struct CoherentBra {
    resolution: usize,
    bras: CMatrix,
}

impl CoherentBra {
    fn new(dim: usize, resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::Parameter(format!("Husimi resolution {resolution} < 2")));
        }
        let r = resolution as f64;
        let mut bras = CMatrix::zeros(resolution * resolution, dim);
        for qi in 0..resolution {
            for pj in 0..resolution {
                let z = coherent_state(dim, (qi as f64 + 0.5) / r, (pj as f64 + 0.5) / r)?;
                bras.row_mut(qi * resolution + pj).copy_from(&z.amplitudes().adjoint());
            }
        }
        Ok(Self { resolution, bras })
    }

    /// `Σ_c w_c |⟨z|ψ_c⟩|²` at every grid point.
    fn accumulate<'a>(&self, ensemble: impl IntoIterator<Item = (f64, &'a CVector)>) -> Vec<f64> {
        let mut values = vec![0.0; self.resolution * self.resolution];
        for (w, psi) in ensemble {
            let amps = &self.bras * psi;
            for (v, a) in values.iter_mut().zip(amps.iter()) {
                *v += w * a.norm_sqr();
            }
        }
        values
    }
}

/// Input accepted by [`husimi_grid`].
#[derive(Debug, Clone, Copy)]
pub enum CellInput<'a> {
    Pure(&'a CellState),
    Mixed(&'a CellDensity),
}

impl<'a> From<&'a CellState> for CellInput<'a> {
    fn from(s: &'a CellState) -> Self {
        Self::Pure(s)
    }
}

impl<'a> From<&'a CellDensity> for CellInput<'a> {
    fn from(d: &'a CellDensity) -> Self {
        Self::Mixed(d)
    }
}

/// `H(q, p) = ⟨z_{q,p}|ρ|z_{q,p}⟩`.
pub fn husimi_grid<'a>(input: impl Into<CellInput<'a>>, resolution: usize) -> Result<HusimiGrid> {
    let (dim, ensemble): (usize, Vec<(f64, &CVector)>) = match input.into() {
        CellInput::Pure(st) => (st.dim(), vec![(1.0, st.amplitudes())]),
        CellInput::Mixed(rho) => (
            rho.dim(),
            rho.components().iter().map(|(w, st)| (*w, st.amplitudes())).collect(),
        ),
    };
    let mass = ensemble.iter().map(|(w, a)| w * a.norm_squared()).sum();
    let basis = CoherentBra::new(dim, resolution)?;
    Ok(HusimiGrid {
        resolution,
        values: basis.accumulate(ensemble),
        cell: None,
        mass,
    })
}

/// Husimi panels of the reduced (unnormalized) cell states `Σ_c w_c |ψ_x^c⟩⟨ψ_x^c|`.
pub fn lattice_husimi(
    components: &[(f64, LatticeState)],
    cells: &[i64],
    resolution: usize,
) -> Result<Vec<HusimiGrid>> {
    let Some((_, first)) = components.first() else {
        return Err(Error::Parameter("no lattice components".into()));
    };
    let dim = first.cell_dim();
    let basis = CoherentBra::new(dim, resolution)?;
    cells
        .iter()
        .map(|&x| {
            let blocks = components
                .iter()
                .map(|(w, st)| {
                    if st.cell_dim() != dim {
                        return Err(Error::DimensionMismatch {
                            expected: dim,
                            found: st.cell_dim(),
                        });
                    }
                    let (lo, hi) = st.window();
                    st.cell(x).map(|v| (*w, v)).ok_or_else(|| {
                        Error::Parameter(format!("cell {x} outside the evolved window [{lo}, {hi}]"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let mass = blocks.iter().map(|(w, v)| w * v.norm_squared()).sum();
            Ok(HusimiGrid {
                resolution,
                values: basis.accumulate(blocks.iter().map(|(w, v)| (*w, v))),
                cell: Some(x),
                mass,
            })
        })
        .collect()
}
