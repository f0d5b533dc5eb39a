//! The D-dimensional Hilbert space of one lattice cell.
//!
//! Positions live on the half-integer grid `q_j = (j + 1/2)/D` and momenta on
//! `p_m = (m + 1/2)/D` (antiperiodic boundary conditions). The lower half of
//! the position basis, `j < D/2`, is the half that is translated to `x + 1`.

use std::f64::consts::PI;

use crate::{linalg, CMatrix, CVector, Error, Result, C64};

/// Hermiticity, trace and positivity tolerance for densities.
pub const DENSITY_TOL: f64 = 1e-12;

/// Cell dimension `D` (even) and the width `D1` of the first baker branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellDims {
    dim: usize,
    d1: usize,
}

impl CellDims {
    pub fn new(dim: usize, d1: usize) -> Result<Self> {
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::InvalidDimension {
                dim,
                reason: "cell dimension must be even and positive",
            });
        }
        if d1 == 0 || d1 >= dim {
            return Err(Error::InvalidAsymmetry { dim, d1 });
        }
        Ok(Self { dim, d1 })
    }

    /// The symmetric map, `D1 = D/2`.
    pub fn symmetric(dim: usize) -> Result<Self> {
        Self::new(dim, dim / 2)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.dim - self.d1
    }

    /// Asymmetry parameter `s = D1/D`.
    pub fn s(&self) -> f64 {
        self.d1 as f64 / self.dim as f64
    }

    /// Effective Planck constant `h = 1/D`.
    pub fn hbar_eff(&self) -> f64 {
        1.0 / self.dim as f64
    }

    /// The dims of the reflected map, `s -> 1 - s`.
    pub fn mirrored(&self) -> Self {
        Self {
            dim: self.dim,
            d1: self.dim - self.d1,
        }
    }
}

/// A dense operator on one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellOperator {
    matrix: CMatrix,
}

impl CellOperator {
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        Ok(Self { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// `max |(O†O - I)_ij|`.
    pub fn unitarity_defect(&self) -> f64 {
        linalg::unitarity_defect(&self.matrix)
    }

    pub fn apply(&self, state: &CellState) -> Result<CellState> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: state.dim(),
            });
        }
        Ok(CellState {
            amplitudes: &self.matrix * &state.amplitudes,
        })
    }
}

/// A pure cell state.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    amplitudes: CVector,
}

impl CellState {
    pub fn from_amplitudes(amplitudes: CVector) -> Self {
        Self { amplitudes }
    }

    /// Normalizes the amplitudes; fails on the zero vector.
    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Domain("cannot normalize a zero state".into()));
        }
        Ok(Self {
            amplitudes: amplitudes.unscale(norm),
        })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &CellState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}

/// A mixed cell state, kept together with an ensemble of pure components
/// `ρ = Σ_c w_c |ψ_c⟩⟨ψ_c|`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellDensity {
    matrix: CMatrix,
    components: Vec<(f64, CellState)>,
}

impl CellDensity {
    /// Builds `Σ w_c |ψ_c⟩⟨ψ_c|`; the states are normalized and the weights
    /// must be nonnegative and sum to one.
    pub fn from_ensemble(ensemble: Vec<(f64, CellState)>) -> Result<Self> {
        let dim = match ensemble.first() {
            Some((_, st)) => st.dim(),
            None => return Err(Error::NotDensity("empty ensemble".into())),
        };
        let mut total = 0.0;
        let mut components = Vec::with_capacity(ensemble.len());
        for (w, st) in ensemble {
            if st.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: st.dim(),
                });
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::NotDensity(format!("negative weight {w}")));
            }
            total += w;
            if w > 0.0 {
                components.push((w, CellState::normalized(st.amplitudes)?));
            }
        }
        if (total - 1.0).abs() > DENSITY_TOL {
            return Err(Error::NotDensity(format!("weights sum to {total}")));
        }
        let mut matrix = CMatrix::zeros(dim, dim);
        for (w, st) in &components {
            let a = st.amplitudes();
            matrix += (a * a.adjoint()).scale(*w);
        }
        Ok(Self { matrix, components })
    }

    /// Validates a density matrix and splits it into its eigen-ensemble.
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        let dim = matrix.nrows();
        if dim == 0 || matrix.ncols() != dim {
            return Err(Error::NotDensity("matrix must be square and nonempty".into()));
        }
        let herm = (&matrix - matrix.adjoint()).camax();
        if herm > DENSITY_TOL {
            return Err(Error::NotDensity(format!("not Hermitian (defect {herm:e})")));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > DENSITY_TOL || trace.im.abs() > DENSITY_TOL {
            return Err(Error::NotDensity(format!("trace {trace} != 1")));
        }
        let eig = matrix.clone().symmetric_eigen();
        let mut components = Vec::new();
        for (i, &w) in eig.eigenvalues.iter().enumerate() {
            if w < -DENSITY_TOL {
                return Err(Error::NotDensity(format!("negative eigenvalue {w:e}")));
            }
            if w > DENSITY_TOL * 1e-3 {
                components.push((w, CellState::from_amplitudes(eig.eigenvectors.column(i).into_owned())));
            }
        }
        Ok(Self { matrix, components })
    }

    pub fn pure(state: CellState) -> Result<Self> {
        Self::from_ensemble(vec![(1.0, state)])
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn components(&self) -> &[(f64, CellState)] {
        &self.components
    }
}

/// `(G_D)_{kl} = D^{-1/2} exp(-i 2π (k+1/2)(l+1/2)/D)`.
pub fn make_dft(dim: usize) -> Result<CellOperator> {
    if dim == 0 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "DFT dimension must be positive",
        });
    }
    Ok(CellOperator {
        matrix: dft_matrix(dim),
    })
}

fn dft_matrix(dim: usize) -> CMatrix {
    let d = dim as f64;
    let amp = 1.0 / d.sqrt();
    // Reduce the integer part of (2k+1)(2l+1) mod 4D before scaling, so the
    // phase stays accurate for large D.
    let period = 4 * dim;
    CMatrix::from_fn(dim, dim, |k, l| {
        let n = ((2 * k + 1) * (2 * l + 1)) % period;
        C64::from_polar(amp, -PI * n as f64 / (2.0 * d))
    })
}

/// Asymmetric quantum baker `B_s = G_D† diag(G_{D1}, G_{D2})` in the position basis.
pub fn make_baker(dims: &CellDims) -> CellOperator {
    let (dim, d1, d2) = (dims.dim(), dims.d1(), dims.d2());
    let mut blocks = CMatrix::zeros(dim, dim);
    blocks.view_mut((0, 0), (d1, d1)).copy_from(&dft_matrix(d1));
    blocks.view_mut((d1, d1), (d2, d2)).copy_from(&dft_matrix(d2));
    CellOperator {
        matrix: dft_matrix(dim).adjoint() * blocks,
    }
}

/// Half-cell projectors and the displacement sign `Z = P_plus - P_minus`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfProjectors {
    /// Projects on positions `j < D/2` (moved to `x + 1`).
    pub plus: CellOperator,
    /// Projects on positions `j >= D/2` (moved to `x - 1`).
    pub minus: CellOperator,
    pub z: CellOperator,
}

pub fn make_half_projectors(dim: usize) -> Result<HalfProjectors> {
    if dim == 0 || dim % 2 != 0 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "half projectors need an even dimension",
        });
    }
    let half = dim / 2;
    let diag = |f: fn(bool) -> f64| {
        CMatrix::from_diagonal(&CVector::from_fn(dim, |j, _| C64::new(f(j < half), 0.0)))
    };
    Ok(HalfProjectors {
        plus: CellOperator {
            matrix: diag(|lower| if lower { 1.0 } else { 0.0 }),
        },
        minus: CellOperator {
            matrix: diag(|lower| if lower { 0.0 } else { 1.0 }),
        },
        z: CellOperator {
            matrix: diag(|lower| if lower { 1.0 } else { -1.0 }),
        },
    })
}

/// Position reversal `j -> D - 1 - j`, the operator form of `q -> 1 - q`.
pub fn position_reversal(dim: usize) -> CellOperator {
    CellOperator {
        matrix: CMatrix::from_fn(dim, dim, |r, c| {
            if r + c + 1 == dim {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }),
    }
}

/// Momentum eigenstate `⟨j|p_m⟩ = D^{-1/2} exp(+i 2π (j+1/2)(m+1/2)/D)`.
pub fn momentum_eigenstate(dim: usize, m: usize) -> Result<CellState> {
    if dim == 0 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "dimension must be positive",
        });
    }
    if m >= dim {
        return Err(Error::IndexOutOfRange { index: m, dim });
    }
    let d = dim as f64;
    let amp = 1.0 / d.sqrt();
    let period = 4 * dim;
    Ok(CellState {
        amplitudes: CVector::from_fn(dim, |j, _| {
            let n = ((2 * j + 1) * (2 * m + 1)) % period;
            C64::from_polar(amp, PI * n as f64 / (2.0 * d))
        }),
    })
}

/// Momentum indices and weights of a strip of `width` states centred on `p = 1/2`.
///
/// Even widths cover `[D/2 - w/2, D/2 + w/2)` with weight `1/w` each. Odd widths
/// cover the `w - 1` innermost states fully and the two flanking states by
/// half, which keeps the mixture invariant under `m -> D - 1 - m`.
pub fn central_momentum_weights(dim: usize, width: usize) -> Result<Vec<(usize, f64)>> {
    if width == 0 || width > dim {
        return Err(Error::InvalidWidth { dim, width });
    }
    let centre = dim / 2;
    let w = 1.0 / width as f64;
    let reach = width.div_ceil(2);
    Ok((centre - reach..centre + reach)
        .map(|m| {
            let edge = width % 2 == 1 && (m + reach == centre || m + 1 == centre + reach);
            (m, if edge { 0.5 * w } else { w })
        })
        .collect())
}

/// Mixture of the central momentum eigenstates, weighted as in
/// [`central_momentum_weights`].
pub fn central_momentum_mixture(dim: usize, width: usize) -> Result<CellDensity> {
    let ensemble = central_momentum_weights(dim, width)?
        .into_iter()
        .map(|(m, w)| momentum_eigenstate(dim, m).map(|st| (w, st)))
        .collect::<Result<Vec<_>>>()?;
    CellDensity::from_ensemble(ensemble)
}
