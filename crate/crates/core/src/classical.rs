//! Classical asymmetric multibaker map.
//!
//! The map is `M_s = T ∘ B_s`: the asymmetric baker acts inside the cell and
//! the translation `T` sends post-map positions `q < 1/2` to `x + 1` and
//! `q >= 1/2` to `x - 1`. Because the `q` dynamics does not depend on `p`, the
//! coarse-grained distribution of an ensemble spread uniformly over `q` can be
//! computed exactly by refining intervals in `q`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::table::{CellTable, CoarseGrained};
use crate::{Error, Result};

/// Deepest itinerary refinement accepted by [`exact_distribution`].
pub const MAX_EXACT_DEPTH: usize = 26;
/// Name of the generator behind [`monte_carlo_distribution`].
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha), one stream per 65536-particle chunk";

const MC_CHUNK: u64 = 1 << 16;

fn check_s(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("asymmetry s = {s} must lie in (0, 1)")))
    }
}

/// A point `(x, q, p)`: cell index and position/momentum inside the cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub x: i64,
    pub q: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn new(x: i64, q: f64, p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&q) || !(0.0..1.0).contains(&p) {
            return Err(Error::Domain(format!("(q, p) = ({q}, {p}) outside [0,1)^2")));
        }
        Ok(Self { x, q, p })
    }
}

/// Largest double below one; keeps mapped coordinates inside `[0, 1)`.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

fn baker(q: f64, p: f64, s: f64) -> (f64, f64) {
    let (q, p) = if q < s {
        (q / s, s * p)
    } else {
        ((q - s) / (1.0 - s), (1.0 - s) * p + s)
    };
    (q.min(BELOW_ONE), p.min(BELOW_ONE))
}

/// One step of `M_s = T ∘ B_s`.
pub fn step_point(pt: PhasePoint, s: f64) -> Result<PhasePoint> {
    check_s(s)?;
    let (q, p) = baker(pt.q, pt.p, s);
    let x = if q < 0.5 { pt.x + 1 } else { pt.x - 1 };
    Ok(PhasePoint { x, q, p })
}

/// `(λ1, λ2) = (-ln s, -ln(1 - s))`.
pub fn lyapunov_exponents(s: f64) -> Result<(f64, f64)> {
    check_s(s)?;
    Ok((-s.ln(), -(1.0 - s).ln()))
}

/// An initial-position interval `[start, end)` whose points share one
/// displacement after `depth` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItineraryInterval {
    pub start: f64,
    pub end: f64,
    pub displacement: i64,
    pub depth: usize,
}

impl ItineraryInterval {
    pub fn measure(&self) -> f64 {
        self.end - self.start
    }
}

/// Error-free `x + y = s + e`.
fn two_sum(x: f64, y: f64) -> (f64, f64) {
    let s = x + y;
    let bp = s - x;
    (s, (x - (s - bp)) + (y - bp))
}

/// Original interval `[a, b)` mapped affinely onto the current image `[c, d)`.
///
/// Endpoints are kept as unevaluated sums `a + a_lo`: the leaves are ~2^t
/// intervals of width ~s^t, and plain doubles would leave an absolute error of
/// ~1e-16 in each of them.
#[derive(Clone, Copy)]
struct Piece {
    a: f64,
    a_lo: f64,
    b: f64,
    b_lo: f64,
    c: f64,
    d: f64,
    /// Preimage length per unit image length, `Π s_i` over the branches taken.
    jac: f64,
    disp: i64,
}

impl Piece {
    fn mass(&self) -> f64 {
        (self.b - self.a) + (self.b_lo - self.a_lo)
    }

    /// `a + (w - c)·jac` in double-double.
    fn preimage(&self, w: f64) -> (f64, f64) {
        let (hi, lo) = two_sum(self.a, (w - self.c) * self.jac);
        two_sum(hi, lo + self.a_lo)
    }

    /// The sub-piece whose image is `[u, v) ⊂ [c, d)`.
    fn restrict(&self, u: f64, v: f64) -> Piece {
        let (a, a_lo) = if u == self.c { (self.a, self.a_lo) } else { self.preimage(u) };
        let (b, b_lo) = if v == self.d { (self.b, self.b_lo) } else { self.preimage(v) };
        Piece {
            a,
            a_lo,
            b,
            b_lo,
            c: u,
            d: v,
            ..*self
        }
    }
}

fn split(c: f64, d: f64, at: f64) -> impl Iterator<Item = (f64, f64)> {
    let pieces = if c < at && at < d {
        [(c, at), (at, d)]
    } else {
        [(c, d), (d, d)]
    };
    pieces.into_iter().filter(|(u, v)| u < v)
}

/// Depth-first refinement of `[0, 1)`, visiting every piece at every depth.
fn refine(s: f64, piece: Piece, depth: usize, t: usize, visit: &mut impl FnMut(usize, &Piece)) {
    visit(depth, &piece);
    if depth == t {
        return;
    }
    for (u, v) in split(piece.c, piece.d, s) {
        let branch = piece.restrict(u, v);
        let (c, d, width) = if u < s {
            (u / s, v / s, s)
        } else {
            ((u - s) / (1.0 - s), (v - s) / (1.0 - s), 1.0 - s)
        };
        let mapped = Piece {
            c,
            d,
            jac: branch.jac * width,
            ..branch
        };
        for (u2, v2) in split(c, d, 0.5) {
            let mut child = mapped.restrict(u2, v2);
            child.disp += if u2 < 0.5 { 1 } else { -1 };
            refine(s, child, depth + 1, t, visit);
        }
    }
}

fn check_depth(t: usize) -> Result<()> {
    if t > MAX_EXACT_DEPTH {
        Err(Error::Budget {
            depth: t,
            max: MAX_EXACT_DEPTH,
        })
    } else {
        Ok(())
    }
}

const UNIT: Piece = Piece {
    a: 0.0,
    a_lo: 0.0,
    b: 1.0,
    b_lo: 0.0,
    c: 0.0,
    d: 1.0,
    jac: 1.0,
    disp: 0,
};

/// The itinerary partition of `[0, 1)` at depth `t`.
pub fn itinerary_intervals(s: f64, t: usize) -> Result<Vec<ItineraryInterval>> {
    check_s(s)?;
    check_depth(t)?;
    let mut out = Vec::new();
    refine(s, UNIT, 0, t, &mut |depth, p| {
        if depth == t {
            out.push(ItineraryInterval {
                start: p.a,
                end: p.b,
                displacement: p.disp,
                depth,
            });
        }
    });
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassicalMethod {
    /// Itinerary-interval refinement.
    Exact,
    /// Piecewise-constant transfer operator on the density in `q`.
    TransferOperator,
    MonteCarlo,
}

impl ClassicalMethod {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::TransferOperator => "transfer-operator",
            Self::MonteCarlo => "monte-carlo",
        }
    }
}

/// Classical coarse-grained `p_class(x, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalTable {
    pub s: f64,
    pub method: ClassicalMethod,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub rng: Option<&'static str>,
    cells: CellTable,
}

impl CoarseGrained for ClassicalTable {
    fn cells(&self) -> &CellTable {
        &self.cells
    }
}

impl ClassicalTable {
    fn analytic(s: f64, method: ClassicalMethod, cells: CellTable) -> Self {
        Self {
            s,
            method,
            samples: None,
            seed: None,
            rng: None,
            cells,
        }
    }
}

/// Exact `p_class(x, t)` for the ensemble uniform in `q` (any momentum band).
pub fn exact_distribution(s: f64, t: usize) -> Result<ClassicalTable> {
    check_s(s)?;
    check_depth(t)?;
    // ~2^t tiny masses per row: Neumaier-compensated sums keep ⟨x⟩_t at rounding level
    let width = 2 * t + 1;
    let mut sum = vec![vec![0.0; width]; t + 1];
    let mut comp = vec![vec![0.0; width]; t + 1];
    refine(s, UNIT, 0, t, &mut |depth, p| {
        let i = (p.disp + t as i64) as usize;
        let (acc, m) = (sum[depth][i], p.mass());
        let next = acc + m;
        comp[depth][i] += if acc.abs() >= m.abs() {
            (acc - next) + m
        } else {
            (m - next) + acc
        };
        sum[depth][i] = next;
    });
    let rows = sum
        .iter()
        .zip(&comp)
        .map(|(r, c)| r.iter().zip(c).map(|(a, b)| a + b).collect())
        .collect();
    Ok(ClassicalTable::analytic(
        s,
        ClassicalMethod::Exact,
        CellTable::from_rows(t, rows),
    ))
}

/// Exact `p_class(x, t)` by pushing the piecewise-constant density in `q`
/// through the Perron-Frobenius operator. Breakpoints grow by one per step,
/// so long times are cheap.
pub fn transfer_distribution(s: f64, t: usize) -> Result<ClassicalTable> {
    check_s(s)?;
    let width = 2 * t + 1;
    let centre = t;
    let mut breaks = vec![0.0, 1.0];
    // densities[i][j]: density of cell i - centre on [breaks[j], breaks[j+1])
    let mut densities: Vec<Option<Vec<f64>>> = vec![None; width];
    densities[centre] = Some(vec![1.0]);
    let mut rows = Vec::with_capacity(t + 1);
    let mass_row = |densities: &[Option<Vec<f64>>], breaks: &[f64]| -> Vec<f64> {
        densities
            .iter()
            .map(|d| match d {
                Some(rho) => rho
                    .iter()
                    .zip(breaks.windows(2))
                    .map(|(r, w)| r * (w[1] - w[0]))
                    .sum(),
                None => 0.0,
            })
            .collect()
    };
    rows.push(mass_row(&densities, &breaks));

    for _ in 0..t {
        let mut next_breaks: Vec<f64> = breaks
            .iter()
            .filter(|&&b| b > 0.0 && b < 1.0)
            .map(|&b| if b < s { b / s } else { (b - s) / (1.0 - s) })
            .chain([0.0, 0.5, 1.0])
            .collect();
        next_breaks.sort_by(f64::total_cmp);
        next_breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        *next_breaks.last_mut().unwrap() = 1.0;
        next_breaks[0] = 0.0;

        let lookup = |rho: &[f64], q: f64| {
            let j = breaks.partition_point(|&b| b <= q).clamp(1, rho.len());
            rho[j - 1]
        };
        let n_int = next_breaks.len() - 1;
        let mut next: Vec<Option<Vec<f64>>> = vec![None; width];
        for (i, d) in densities.iter().enumerate() {
            let Some(rho) = d else { continue };
            for j in 0..n_int {
                let (y0, y1) = (next_breaks[j], next_breaks[j + 1]);
                let y = 0.5 * (y0 + y1);
                let val = s * lookup(rho, s * y) + (1.0 - s) * lookup(rho, s + (1.0 - s) * y);
                if val == 0.0 {
                    continue;
                }
                let target = if y < 0.5 { i + 1 } else { i - 1 };
                next[target].get_or_insert_with(|| vec![0.0; n_int])[j] += val;
            }
        }
        breaks = next_breaks;
        densities = next;
        rows.push(mass_row(&densities, &breaks));
    }
    Ok(ClassicalTable::analytic(
        s,
        ClassicalMethod::TransferOperator,
        CellTable::from_rows(t, rows),
    ))
}

/// Histogram of `n` particles started at `x = 0` with `q` uniform in `[0, 1)`
/// and `p` uniform in the centred band of width `delta_p`.
pub fn monte_carlo_distribution(
    s: f64,
    t: usize,
    n: u64,
    seed: u64,
    delta_p: f64,
) -> Result<ClassicalTable> {
    check_s(s)?;
    if n == 0 {
        return Err(Error::Parameter("Monte Carlo needs at least one particle".into()));
    }
    if !(delta_p > 0.0 && delta_p <= 1.0) {
        return Err(Error::Parameter(format!("band width {delta_p} must lie in (0, 1]")));
    }
    let width = 2 * t + 1;
    let chunks = n.div_ceil(MC_CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let size = MC_CHUNK.min(n - chunk * MC_CHUNK);
            let mut counts = vec![vec![0u64; width]; t + 1];
            for _ in 0..size {
                let q: f64 = rng.random();
                let p = (0.5 + delta_p * (rng.random::<f64>() - 0.5)).min(BELOW_ONE);
                let mut pt = PhasePoint { x: 0, q, p };
                counts[0][t] += 1;
                for row in counts.iter_mut().skip(1) {
                    let (q, p) = baker(pt.q, pt.p, s);
                    pt = PhasePoint {
                        x: if q < 0.5 { pt.x + 1 } else { pt.x - 1 },
                        q,
                        p,
                    };
                    row[(pt.x + t as i64) as usize] += 1;
                }
            }
            counts
        })
        .reduce(
            || vec![vec![0u64; width]; t + 1],
            |mut a, b| {
                for (ra, rb) in a.iter_mut().zip(b) {
                    for (x, y) in ra.iter_mut().zip(rb) {
                        *x += y;
                    }
                }
                a
            },
        );
    let rows = counts
        .into_iter()
        .map(|r| r.into_iter().map(|c| c as f64 / n as f64).collect())
        .collect();
    Ok(ClassicalTable {
        s,
        method: ClassicalMethod::MonteCarlo,
        samples: Some(n),
        seed: Some(seed),
        rng: Some(RNG_ALGORITHM),
        cells: CellTable::from_rows(t, rows),
    })
}

/// `Σ_x |p(x,t) - q(x,t)| / 2` at time `t`.
pub fn total_variation<A: CoarseGrained + ?Sized, B: CoarseGrained + ?Sized>(
    a: &A,
    b: &B,
    t: usize,
) -> f64 {
    let span = a.t_max().max(b.t_max()) as i64;
    0.5 * (-span..=span)
        .map(|x| (a.probability(x, t) - b.probability(x, t)).abs())
        .sum::<f64>()
}
