//! Eigenphase bands of `B_{s,k}` and their nearest-neighbour spacing statistics.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use statrs::function::erf::erf;

use crate::cell::CellDims;
use crate::transport::{eigendecompose_unitary, BlochFamily, KGrid};
use crate::{Error, Result};

/// `θ_l(k)` on a k-grid; row `j` holds the sorted eigenphases at node `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenphaseBands {
    pub dims: CellDims,
    pub grid: KGrid,
    pub thetas: Vec<Vec<f64>>,
}

impl EigenphaseBands {
    /// Smallest circular gap between neighbouring eigenphases over the grid.
    pub fn min_gap(&self) -> f64 {
        self.thetas
            .iter()
            .flat_map(|row| circular_gaps(row))
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn eigenphase_bands(dims: CellDims, grid: KGrid) -> Result<EigenphaseBands> {
    let family = BlochFamily::new(dims);
    let thetas = (0..grid.len())
        .into_par_iter()
        .map(|j| eigendecompose_unitary(&family.at(grid.node(j))).map(|s| s.thetas))
        .collect::<Result<Vec<_>>>()?;
    Ok(EigenphaseBands { dims, grid, thetas })
}

/// Gaps between sorted phases, closing the circle with `2π - (θ_max - θ_min)`.
fn circular_gaps(sorted: &[f64]) -> impl Iterator<Item = f64> + '_ {
    let wrap = match (sorted.first(), sorted.last()) {
        (Some(lo), Some(hi)) => Some(TAU - (hi - lo)),
        _ => None,
    };
    sorted.windows(2).map(|w| w[1] - w[0]).chain(wrap)
}

/// Spacings in units of the mean spacing `2π/D`, pooled over k.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacingSample {
    pub values: Vec<f64>,
    /// Spacings contributed by each k node (`D`).
    pub per_k: usize,
}

impl SpacingSample {
    /// Mean normalized spacing of each k node's block.
    pub fn per_k_means(&self) -> Vec<f64> {
        self.values
            .chunks(self.per_k)
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .collect()
    }
}

pub fn spacing_sample(bands: &EigenphaseBands) -> SpacingSample {
    let dim = bands.dims.dim();
    let scale = dim as f64 / TAU;
    let values = bands
        .thetas
        .iter()
        .flat_map(|row| circular_gaps(row).map(move |g| g * scale))
        .collect();
    SpacingSample { values, per_k: dim }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    Poisson,
    /// Wigner surmise for the unitary class, `P(θ) = (32/π²) θ² e^{-4θ²/π}`.
    Cue,
}

impl ReferenceKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Poisson => "poisson",
            Self::Cue => "cue",
        }
    }
}

/// Reference spacing density `P(θ)`.
pub fn reference_density(kind: ReferenceKind, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok(match kind {
        ReferenceKind::Poisson => (-theta).exp(),
        ReferenceKind::Cue => 32.0 / (PI * PI) * theta * theta * (-4.0 * theta * theta / PI).exp(),
    })
}

/// Reference cumulative `I(θ) = ∫_0^θ P`.
pub fn reference_cumulative(kind: ReferenceKind, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    if theta.is_infinite() {
        return Ok(1.0);
    }
    Ok(match kind {
        ReferenceKind::Poisson => -(-theta).exp_m1(),
        ReferenceKind::Cue => {
            erf(2.0 * theta / PI.sqrt()) - 4.0 * theta / PI * (-4.0 * theta * theta / PI).exp()
        }
    })
}

fn check_theta(theta: f64) -> Result<()> {
    if theta >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("spacing {theta} must be nonnegative")))
    }
}

/// Empirical `I(θ)` (fraction of spacings `<= θ`) at the given abscissae.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeCurve {
    pub abscissae: Vec<f64>,
    pub empirical: Vec<f64>,
}

impl CumulativeCurve {
    pub fn reference(&self, kind: ReferenceKind) -> Vec<f64> {
        self.abscissae
            .iter()
            .map(|&th| reference_cumulative(kind, th.max(0.0)).expect("nonnegative abscissa"))
            .collect()
    }
}

/// Abscissae `0, 0.01, ..., 4`.
pub fn default_abscissae() -> Vec<f64> {
    (0..=400).map(|i| i as f64 / 100.0).collect()
}

pub fn cumulative_curve(sample: &SpacingSample, abscissae: &[f64]) -> Result<CumulativeCurve> {
    if abscissae.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Parameter("abscissae must be nondecreasing".into()));
    }
    let mut sorted = sample.values.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let empirical = abscissae
        .iter()
        .map(|&th| sorted.partition_point(|&v| v <= th) as f64 / n)
        .collect();
    Ok(CumulativeCurve {
        abscissae: abscissae.to_vec(),
        empirical,
    })
}

/// `max_i |I_emp(θ_i) - I_ref(θ_i)|` over the curve's abscissae.
pub fn ks_distance(curve: &CumulativeCurve, kind: ReferenceKind) -> f64 {
    curve
        .empirical
        .iter()
        .zip(curve.reference(kind))
        .map(|(e, r)| (e - r).abs())
        .fold(0.0, f64::max)
}
