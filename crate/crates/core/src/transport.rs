//! Quantum transport on the lattice.
//!
//! The multibaker propagator is diagonal in lattice quasimomentum `k`, where it
//! reduces to the cell operator `B_{s,k} = diag(e^{-ik} P_plus + e^{ik} P_minus) B_s`.
//! The asymptotic current follows from the eigenbasis of `B_{s,k}`:
//! `J∞ = ∫ dk/2π Σ_l a_ll(k) Z_ll(k)`, with exactly (or nearly) degenerate
//! clusters contributing their full `a_{ll'} Z_{l'l}` block.

use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::cell::{make_baker, CellDensity, CellDims, CellState};
use crate::linalg::{self, phase_clusters};
use crate::table::{CellTable, CoarseGrained};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Default number of quadrature nodes in `k`.
pub const DEFAULT_N_K: usize = 256;
/// Default gap below which unit-circle eigenvalues are treated as degenerate.
pub const DEFAULT_EPS_DEG: f64 = 1e-8;
/// Largest accepted eigenpair residual `‖Bφ - e^{iθ}φ‖`.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-9;
/// Tag describing which half of the cell moves to `x + 1`.
pub const TRANSLATION_CONVENTION: &str = "q<1/2 -> x+1";

/// Midpoint rule for `∫_0^{2π} dk/2π` with nodes `k_j = 2π(j + 1/2)/n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KGrid {
    n: usize,
}

impl KGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("k-grid needs at least one node".into()));
        }
        Ok(Self { n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn node(&self, j: usize) -> f64 {
        TAU * (j as f64 + 0.5) / self.n as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|j| self.node(j))
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn doubled(&self) -> Self {
        Self { n: 2 * self.n }
    }
}

impl Default for KGrid {
    fn default() -> Self {
        Self { n: DEFAULT_N_K }
    }
}

/// `B_s` together with the half split, ready to produce `B_{s,k}` for any `k`.
#[derive(Debug, Clone)]
pub struct BlochFamily {
    dims: CellDims,
    baker: CMatrix,
}

impl BlochFamily {
    pub fn new(dims: CellDims) -> Self {
        Self {
            dims,
            baker: make_baker(&dims).into_matrix(),
        }
    }

    pub fn dims(&self) -> CellDims {
        self.dims
    }

    pub fn baker(&self) -> &CMatrix {
        &self.baker
    }

    pub fn at(&self, k: f64) -> BlochOperator {
        let k = k.rem_euclid(TAU);
        let half = self.dims.dim() / 2;
        let down = C64::from_polar(1.0, -k);
        let up = C64::from_polar(1.0, k);
        let mut matrix = self.baker.clone();
        for (r, mut row) in matrix.row_iter_mut().enumerate() {
            row *= if r < half { down } else { up };
        }
        BlochOperator {
            dims: self.dims,
            k,
            matrix,
        }
    }
}

/// The Bloch block `B_{s,k}` of the lattice propagator.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochOperator {
    dims: CellDims,
    k: f64,
    matrix: CMatrix,
}

impl BlochOperator {
    pub fn dims(&self) -> CellDims {
        self.dims
    }

    /// Quasimomentum, reduced to `[0, 2π)`.
    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn unitarity_defect(&self) -> f64 {
        linalg::unitarity_defect(&self.matrix)
    }
}

pub fn bloch_operator(dims: CellDims, k: f64) -> BlochOperator {
    BlochFamily::new(dims).at(k)
}

/// Eigenphases `θ_l(k)` (ascending, in `[0, 2π)`) and eigenvectors of `B_{s,k}`.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub dims: CellDims,
    pub k: f64,
    pub thetas: Vec<f64>,
    /// Orthonormal eigenvectors as columns, ordered like `thetas`.
    pub eigenvectors: CMatrix,
    pub residuals: Vec<f64>,
    pub eigenvalue_moduli: Vec<f64>,
}

impl SpectralData {
    pub fn eigenvector(&self, l: usize) -> CellState {
        CellState::from_amplitudes(self.eigenvectors.column(l).into_owned())
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// `max |Φ†Φ - I|` of the eigenvector matrix.
    pub fn orthonormality_defect(&self) -> f64 {
        linalg::unitarity_defect(&self.eigenvectors)
    }
}

pub fn eigendecompose_unitary(op: &BlochOperator) -> Result<SpectralData> {
    let failure = |residual: f64| Error::EigenFailure {
        dim: op.dims.dim(),
        d1: op.dims.d1(),
        k: op.k,
        residual,
    };
    let eig = linalg::unitary_eigen(&op.matrix).ok_or_else(|| failure(f64::NAN))?;
    let moduli: Vec<f64> = eig.eigenvalues.iter().map(|z| z.norm()).collect();
    let worst = eig.residuals.iter().copied().fold(0.0, f64::max);
    let worst_modulus = moduli.iter().map(|m| (m - 1.0).abs()).fold(0.0, f64::max);
    if !(worst < EIGEN_RESIDUAL_TOL) || !(worst_modulus < EIGEN_RESIDUAL_TOL) {
        return Err(failure(worst.max(worst_modulus)));
    }
    Ok(SpectralData {
        dims: op.dims,
        k: op.k,
        thetas: eig.phases,
        eigenvectors: eig.vectors,
        residuals: eig.residuals,
        eigenvalue_moduli: moduli,
    })
}

/// Midpoint-rule estimate of `J∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentEstimate {
    pub value: f64,
    /// Number of (k, cluster) pairs where more than one eigenvalue fell
    /// within the degeneracy tolerance.
    pub degenerate_clusters: usize,
    pub largest_cluster: usize,
}

impl CurrentEstimate {
    /// Set when the nondegenerate-spectrum assumption failed somewhere on the grid.
    pub fn degeneracy_warning(&self) -> bool {
        self.largest_cluster > 1
    }
}

/// `Σ_C Tr[(Φ_C† ρ Φ_C)(Φ_C† Z Φ_C)]` for one `k`, for each density.
fn diagonal_current_terms(
    spec: &SpectralData,
    rhos: &[CellDensity],
    eps_deg: f64,
) -> (Vec<f64>, usize, usize) {
    let dim = spec.dims.dim();
    let half = dim / 2;
    let phi = &spec.eigenvectors;
    let clusters = phase_clusters(&spec.thetas, eps_deg);
    let degenerate = clusters.iter().filter(|c| c.len() > 1).count();
    let largest = clusters.iter().map(Vec::len).max().unwrap_or(0);

    // Z-weighted inner products, Z = +1 on the lower half, -1 on the upper.
    let z_elem = |l: usize, lp: usize| -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..dim {
            let term = phi[(j, l)].conj() * phi[(j, lp)];
            if j < half {
                acc += term;
            } else {
                acc -= term;
            }
        }
        acc
    };
    let z_blocks: Vec<Vec<C64>> = clusters
        .iter()
        .map(|c| {
            c.iter()
                .flat_map(|&l| c.iter().map(move |&lp| (l, lp)))
                .map(|(l, lp)| z_elem(l, lp))
                .collect()
        })
        .collect();

    let values = rhos
        .iter()
        .map(|rho| {
            // overlaps[c][l] = ⟨φ_l|ψ_c⟩
            let overlaps: Vec<(f64, CVector)> = rho
                .components()
                .iter()
                .map(|(w, st)| (*w, phi.ad_mul(st.amplitudes())))
                .collect();
            let mut total = 0.0;
            for (c, zb) in clusters.iter().zip(&z_blocks) {
                let n = c.len();
                for (a, &l) in c.iter().enumerate() {
                    for (b, &lp) in c.iter().enumerate() {
                        // a_{l lp} = ⟨φ_l|ρ|φ_lp⟩ = Σ_c w ⟨φ_l|ψ⟩⟨ψ|φ_lp⟩
                        let a_elem: C64 = overlaps
                            .iter()
                            .map(|(w, v)| v[l] * v[lp].conj() * *w)
                            .sum();
                        total += (a_elem * zb[b * n + a]).re;
                    }
                }
            }
            total
        })
        .collect();
    (values, degenerate, largest)
}

/// `J∞` for several initial cell states sharing one set of eigendecompositions.
pub fn asymptotic_currents(
    rhos: &[CellDensity],
    dims: CellDims,
    grid: KGrid,
    eps_deg: f64,
) -> Result<Vec<CurrentEstimate>> {
    for rho in rhos {
        if rho.dim() != dims.dim() {
            return Err(Error::DimensionMismatch {
                expected: dims.dim(),
                found: rho.dim(),
            });
        }
    }
    let family = BlochFamily::new(dims);
    let per_k = (0..grid.len())
        .into_par_iter()
        .map(|j| {
            let spec = eigendecompose_unitary(&family.at(grid.node(j)))?;
            Ok(diagonal_current_terms(&spec, rhos, eps_deg))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out: Vec<CurrentEstimate> = rhos
        .iter()
        .map(|_| CurrentEstimate {
            value: 0.0,
            degenerate_clusters: 0,
            largest_cluster: 0,
        })
        .collect();
    // Sequential reduction keeps the result independent of thread count.
    for (values, degenerate, largest) in &per_k {
        for (est, v) in out.iter_mut().zip(values) {
            est.value += v * grid.weight();
            est.degenerate_clusters += degenerate;
            est.largest_cluster = est.largest_cluster.max(*largest);
        }
    }
    Ok(out)
}

pub fn asymptotic_current(
    rho0: &CellDensity,
    dims: CellDims,
    grid: KGrid,
    eps_deg: f64,
) -> Result<CurrentEstimate> {
    asymptotic_currents(std::slice::from_ref(rho0), dims, grid, eps_deg).map(|mut v| v.remove(0))
}

/// Result of refining the k-grid until successive `J∞` estimates agree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergedCurrent {
    pub estimate: CurrentEstimate,
    pub grid: KGrid,
    /// `|J∞(n_k) - J∞(n_k/2)|` at the returned grid.
    pub last_change: f64,
    pub converged: bool,
}

/// Doubles `n_k` from `start` until `|ΔJ∞| < tol` or `max_nodes` is reached.
pub fn converged_asymptotic_current(
    rho0: &CellDensity,
    dims: CellDims,
    start: KGrid,
    eps_deg: f64,
    tol: f64,
    max_nodes: usize,
) -> Result<ConvergedCurrent> {
    let mut grid = start;
    let mut prev = asymptotic_current(rho0, dims, grid, eps_deg)?;
    loop {
        let next_grid = grid.doubled();
        if next_grid.len() > max_nodes {
            return Ok(ConvergedCurrent {
                estimate: prev,
                grid,
                last_change: f64::INFINITY,
                converged: false,
            });
        }
        let next = asymptotic_current(rho0, dims, next_grid, eps_deg)?;
        let change = (next.value - prev.value).abs();
        grid = next_grid;
        prev = next;
        if change < tol {
            return Ok(ConvergedCurrent {
                estimate: prev,
                grid,
                last_change: change,
                converged: true,
            });
        }
    }
}

/// A coarse-grained moment from the k-space formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub value: f64,
    /// The grid cannot integrate the degree-`2t` trigonometric integrand exactly.
    pub accuracy_warning: bool,
}

/// `⟨x^m⟩_t` by k-quadrature.
///
/// `m = 1` uses `⟨x⟩_t = Σ_{j=1}^t ∫ dk/2π Tr[ρ (B_k†)^j Z B_k^j]`, which the
/// midpoint rule integrates exactly when `n_k >= 2t + 1`. Higher moments use
/// `i^m ∫ dk/2π Tr[ρ (B_k†)^t ∂_k^m B_k^t]` with a central finite difference of
/// step `2π/(8 n_k)` and are approximate.
pub fn moment_via_quadrature(
    rho0: &CellDensity,
    dims: CellDims,
    grid: KGrid,
    t: usize,
    m: u32,
) -> Result<MomentEstimate> {
    if m == 0 {
        return Err(Error::Parameter("moment order must be at least 1".into()));
    }
    if rho0.dim() != dims.dim() {
        return Err(Error::DimensionMismatch {
            expected: dims.dim(),
            found: rho0.dim(),
        });
    }
    let accuracy_warning = grid.len() < 2 * t + 1;
    if t == 0 {
        return Ok(MomentEstimate {
            value: 0.0,
            accuracy_warning: false,
        });
    }
    let family = BlochFamily::new(dims);
    let half = dims.dim() / 2;
    let per_k: Vec<f64> = if m == 1 {
        (0..grid.len())
            .into_par_iter()
            .map(|j| {
                let b = family.at(grid.node(j)).matrix;
                let mut acc = 0.0;
                for (w, st) in rho0.components() {
                    let mut v = st.amplitudes().clone();
                    for _ in 0..t {
                        v = &b * v;
                        let lower: f64 = v.rows(0, half).norm_squared();
                        let upper: f64 = v.rows(half, half).norm_squared();
                        acc += w * (lower - upper);
                    }
                }
                acc
            })
            .collect()
    } else {
        let h = TAU / (8.0 * grid.len() as f64);
        let coeffs = finite_difference_stencil(m);
        let propagate = |k: f64, v0: &CVector| {
            let b = family.at(k).matrix;
            (0..t).fold(v0.clone(), |v, _| &b * v)
        };
        (0..grid.len())
            .into_par_iter()
            .map(|j| {
                let k = grid.node(j);
                let mut acc = C64::new(0.0, 0.0);
                for (w, st) in rho0.components() {
                    let u = propagate(k, st.amplitudes());
                    let mut deriv = CVector::zeros(dims.dim());
                    for (offset, c) in &coeffs {
                        deriv += propagate(k + offset * h, st.amplitudes()) * C64::new(*c, 0.0);
                    }
                    acc += u.dotc(&deriv) * *w / h.powi(m as i32);
                }
                (C64::i().powu(m) * acc).re
            })
            .collect()
    };
    Ok(MomentEstimate {
        value: per_k.iter().sum::<f64>() * grid.weight(),
        accuracy_warning,
    })
}

/// Central difference for the `m`-th derivative: `(offset, coefficient)` pairs,
/// offsets in units of the step.
fn finite_difference_stencil(m: u32) -> Vec<(f64, f64)> {
    let mut binom = 1.0;
    (0..=m)
        .map(|j| {
            let c = if j % 2 == 0 { binom } else { -binom };
            let entry = (m as f64 / 2.0 - j as f64, c);
            binom = binom * (m - j) as f64 / (j + 1) as f64;
            entry
        })
        .collect()
}

/// One pure component of the lattice state on the window `[x_min, x_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    x_min: i64,
    /// Column `i` holds the cell `x_min + i`.
    amplitudes: CMatrix,
}

impl LatticeState {
    /// The state `|0⟩ ⊗ |ψ⟩` on the window `[-radius, radius]`.
    pub fn localized(state: &CellState, radius: usize) -> Self {
        let mut amplitudes = CMatrix::zeros(state.dim(), 2 * radius + 1);
        amplitudes.set_column(radius, state.amplitudes());
        Self {
            x_min: -(radius as i64),
            amplitudes,
        }
    }

    pub fn window(&self) -> (i64, i64) {
        (self.x_min, self.x_min + self.amplitudes.ncols() as i64 - 1)
    }

    pub fn cell_dim(&self) -> usize {
        self.amplitudes.nrows()
    }

    pub fn cell(&self, x: i64) -> Option<CVector> {
        let i = x - self.x_min;
        (0..self.amplitudes.ncols() as i64)
            .contains(&i)
            .then(|| self.amplitudes.column(i as usize).into_owned())
    }

    /// `‖ψ_x‖²`, zero outside the window.
    pub fn probability(&self, x: i64) -> f64 {
        let i = x - self.x_min;
        if (0..self.amplitudes.ncols() as i64).contains(&i) {
            self.amplitudes.column(i as usize).norm_squared()
        } else {
            0.0
        }
    }

    pub fn total_norm(&self) -> f64 {
        self.amplitudes.norm_squared().sqrt()
    }

    /// One application of the multibaker map: apply `B_s` in every cell, then
    /// move the lower half to `x + 1` and the upper half to `x - 1`. `active`
    /// bounds the columns (relative to the centre) that can be nonzero.
    fn step(&mut self, baker: &CMatrix, active: usize) {
        let n = self.amplitudes.ncols();
        let centre = (-self.x_min) as usize;
        let lo = centre.saturating_sub(active);
        let hi = (centre + active).min(n - 1);
        let dim = self.amplitudes.nrows();
        let half = dim / 2;
        let mapped = baker * self.amplitudes.columns(lo, hi - lo + 1);
        let mut next = CMatrix::zeros(dim, n);
        for (c, col) in mapped.column_iter().enumerate() {
            let i = lo + c;
            assert!(i + 1 < n && i >= 1, "lattice window overflow");
            next.view_mut((0, i + 1), (half, 1)).copy_from(&col.rows(0, half));
            next.view_mut((half, i - 1), (half, 1)).copy_from(&col.rows(half, half));
        }
        self.amplitudes = next;
    }
}

/// Pure components `(w_c, ψ_c(t))` of the state evolved from `|0⟩⟨0| ⊗ ρ`.
pub fn evolve_components(
    rho0: &CellDensity,
    dims: CellDims,
    t: usize,
) -> Result<Vec<(f64, LatticeState)>> {
    let mut out = Vec::new();
    walk_components(rho0, dims, t, |_, _| {}, |w, st| out.push((w, st)))?;
    Ok(out)
}

/// Evolves each pure component to time `t`, reporting `(t', state)` after every
/// step (including `t' = 0`) and handing back the final states.
fn walk_components(
    rho0: &CellDensity,
    dims: CellDims,
    t: usize,
    mut each_step: impl FnMut(usize, &[(f64, LatticeState)]),
    mut finish: impl FnMut(f64, LatticeState),
) -> Result<()> {
    if rho0.dim() != dims.dim() {
        return Err(Error::DimensionMismatch {
            expected: dims.dim(),
            found: rho0.dim(),
        });
    }
    let baker = make_baker(&dims).into_matrix();
    let radius = t + 1;
    let mut states: Vec<(f64, LatticeState)> = rho0
        .components()
        .iter()
        .map(|(w, st)| (*w, LatticeState::localized(st, radius)))
        .collect();
    each_step(0, &states);
    for step in 1..=t {
        states
            .par_iter_mut()
            .for_each(|(_, st)| st.step(&baker, step - 1));
        each_step(step, &states);
    }
    for (w, st) in states {
        finish(w, st);
    }
    Ok(())
}

/// Quantum `p(x, t)` from the initial state `|0⟩⟨0| ⊗ ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTable {
    pub dims: CellDims,
    pub convention: &'static str,
    cells: CellTable,
}

impl CoarseGrained for ProbabilityTable {
    fn cells(&self) -> &CellTable {
        &self.cells
    }
}

pub fn lattice_evolve(rho0: &CellDensity, dims: CellDims, t_max: usize) -> Result<ProbabilityTable> {
    let mut rows = Vec::with_capacity(t_max + 1);
    walk_components(
        rho0,
        dims,
        t_max,
        |_, states| {
            let mut row = vec![0.0; 2 * t_max + 1];
            for (w, st) in states {
                for (i, p) in row.iter_mut().enumerate() {
                    *p += w * st.probability(i as i64 - t_max as i64);
                }
            }
            rows.push(row);
        },
        |_, _| {},
    )?;
    Ok(ProbabilityTable {
        dims,
        convention: TRANSLATION_CONVENTION,
        cells: CellTable::from_rows(t_max, rows),
    })
}

/// `J(t) = ⟨x⟩_t - ⟨x⟩_{t-1}` for `t = 1..=t_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentSeries {
    pub times: Vec<usize>,
    pub values: Vec<f64>,
    /// Mean of `J(t)` over `window`.
    pub asymptotic: f64,
    pub std_error: f64,
    /// Inclusive time window of the asymptotic estimate (the final half).
    pub window: (usize, usize),
}

impl CurrentSeries {
    pub fn current(&self, t: usize) -> Option<f64> {
        t.checked_sub(1).and_then(|i| self.values.get(i).copied())
    }

    /// Mean and standard error of `J(t)` over `lo..=hi`.
    pub fn window_stats(&self, lo: usize, hi: usize) -> Result<(f64, f64)> {
        if lo == 0 || hi < lo || hi > self.values.len() {
            return Err(Error::Parameter(format!(
                "window [{lo}, {hi}] outside [1, {}]",
                self.values.len()
            )));
        }
        Ok(mean_and_error(&self.values[lo - 1..hi]))
    }
}

fn mean_and_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn current_series<T: CoarseGrained + ?Sized>(table: &T) -> Result<CurrentSeries> {
    let t_max = table.t_max();
    if t_max < 1 {
        return Err(Error::Parameter("current series needs t_max >= 1".into()));
    }
    let means: Vec<f64> = (0..=t_max).map(|t| table.mean(t)).collect();
    let values: Vec<f64> = means.windows(2).map(|w| w[1] - w[0]).collect();
    let window = (t_max / 2 + 1, t_max);
    let (asymptotic, std_error) = mean_and_error(&values[window.0 - 1..]);
    Ok(CurrentSeries {
        times: (1..=t_max).collect(),
        values,
        asymptotic,
        std_error,
        window,
    })
}
