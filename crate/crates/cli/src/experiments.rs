//! The four experiments. Each returns its files in memory; nothing touches
//! the filesystem until every computation has succeeded.

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use multibaker::cell::{central_momentum_mixture, CellDims};
use multibaker::classical::{
    exact_distribution, monte_carlo_distribution, total_variation, transfer_distribution, ClassicalTable,
};
use multibaker::husimi::lattice_husimi;
use multibaker::spectral::{
    cumulative_curve, default_abscissae, eigenphase_bands, ks_distance, spacing_sample, EigenphaseBands,
    ReferenceKind,
};
use multibaker::table::CoarseGrained;
use multibaker::transport::{
    asymptotic_currents, current_series, evolve_components, lattice_evolve, KGrid, DEFAULT_EPS_DEG,
    TRANSLATION_CONVENTION,
};

use crate::config::{Experiment, RunSpec};
use crate::error::CliResult;
use crate::output::{csv_bytes, fmt_f64, OutputFile};
use crate::svg::{Plot, Series, Style};

/// Classical tables up to this time use the interval method; longer runs use
/// the (equally exact) transfer operator.
pub const EXACT_CLASSICAL_MAX_T: usize = 20;

pub fn run(spec: &RunSpec) -> CliResult<Vec<OutputFile>> {
    match spec.experiment {
        Experiment::CurrentSweep => current_sweep(spec),
        Experiment::Spectrum => spectrum(spec),
        Experiment::LevelStats => level_stats(spec),
        Experiment::Evolve => evolve(spec),
    }
}

fn per_d1_name(stem: &str, d1: usize, many: bool) -> String {
    if many {
        format!("{stem}_D1_{d1}.csv")
    } else {
        format!("{stem}.csv")
    }
}

// ---------------------------------------------------------------- current sweep

#[derive(Debug, Clone, Serialize)]
struct SweepCurve {
    dim: usize,
    delta_p_states: usize,
    /// `|J∞|` at the largest D1 of the sweep.
    abs_j_at_max_d1: Option<f64>,
    /// Median `|J∞|` over `D1 ∈ [D/2 + 1, D - 3]` (when swept).
    median_abs_interior: Option<f64>,
    degenerate_points: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
struct SweepSummary {
    n_k: usize,
    eps_deg: f64,
    translation_convention: &'static str,
    curves: Vec<SweepCurve>,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// One row of `current_sweep.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub dim: usize,
    pub d1: usize,
    pub delta_p: usize,
    pub j_inf: f64,
    pub degenerate: bool,
}

/// `J∞` for every `(D, D1, Δp)`, sorted by that key. The eigendecompositions
/// at each `(D, D1, k)` are shared by all `Δp`.
pub fn sweep_rows(spec: &RunSpec) -> CliResult<Vec<SweepRow>> {
    let grid = KGrid::new(spec.n_k)?;
    let mut rows = Vec::new();
    for plan in &spec.plans {
        let rhos = plan
            .delta_p
            .iter()
            .map(|&dp| central_momentum_mixture(plan.dim, dp))
            .collect::<Result<Vec<_>, _>>()?;
        for &d1 in &plan.d1 {
            let dims = CellDims::new(plan.dim, d1)?;
            let ests = asymptotic_currents(&rhos, dims, grid, DEFAULT_EPS_DEG)?;
            for (&dp, est) in plan.delta_p.iter().zip(ests) {
                rows.push(SweepRow {
                    dim: plan.dim,
                    d1,
                    delta_p: dp,
                    j_inf: est.value,
                    degenerate: est.degeneracy_warning(),
                });
            }
        }
    }
    rows.sort_by_key(|r| (r.dim, r.d1, r.delta_p));
    Ok(rows)
}

fn current_sweep(spec: &RunSpec) -> CliResult<Vec<OutputFile>> {
    let rows = sweep_rows(spec)?;
    let csv = csv_bytes(
        &["D", "D1", "s", "delta_p_states", "n_k", "J_inf"],
        rows.iter().map(|r| {
            vec![
                r.dim.to_string(),
                r.d1.to_string(),
                fmt_f64(r.d1 as f64 / r.dim as f64),
                r.delta_p.to_string(),
                spec.n_k.to_string(),
                fmt_f64(r.j_inf),
            ]
        }),
    );

    let mut curves = Vec::new();
    let mut plot = Plot::new("Asymptotic current J∞ vs s", "s = D1/D", "J∞");
    for plan in &spec.plans {
        for &dp in &plan.delta_p {
            let curve: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| r.dim == plan.dim && r.delta_p == dp)
                .collect();
            let interior: Vec<f64> = curve
                .iter()
                .filter(|r| r.d1 > plan.dim / 2 && r.d1 + 3 <= plan.dim)
                .map(|r| r.j_inf.abs())
                .collect();
            curves.push(SweepCurve {
                dim: plan.dim,
                delta_p_states: dp,
                abs_j_at_max_d1: curve.last().map(|r| r.j_inf.abs()),
                median_abs_interior: median(interior),
                degenerate_points: curve.iter().filter(|r| r.degenerate).map(|r| r.d1).collect(),
            });
            plot = plot.with(Series::new(
                format!("D={} Δp={dp}", plan.dim),
                if curve.len() > 1 { Style::Line } else { Style::Dots },
                curve
                    .iter()
                    .map(|r| (r.d1 as f64 / r.dim as f64, r.j_inf))
                    .collect(),
            ));
        }
    }
    let mut files = vec![
        OutputFile::new("current_sweep.csv", csv),
        OutputFile::json(
            "current_sweep_summary.json",
            &SweepSummary {
                n_k: spec.n_k,
                eps_deg: DEFAULT_EPS_DEG,
                translation_convention: TRANSLATION_CONVENTION,
                curves,
            },
        ),
    ];
    if spec.svg {
        files.push(OutputFile::new("current_sweep.svg", plot.render().into_bytes()));
    }
    Ok(files)
}

// ---------------------------------------------------------------- spectrum

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Largest phase mismatch between the spectra at `k` and `2π - k`.
fn reflection_defect(bands: &EigenphaseBands) -> f64 {
    let n = bands.thetas.len();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let (a, b) = (&bands.thetas[j], &bands.thetas[n - 1 - j]);
        let mut used = vec![false; b.len()];
        for &x in a {
            let (idx, d) = b
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i])
                .map(|(i, &y)| (i, circular_distance(x, y)))
                .min_by(|p, q| p.1.total_cmp(&q.1))
                .expect("equal multiset sizes");
            used[idx] = true;
            worst = worst.max(d);
        }
    }
    worst
}

#[derive(Debug, Clone, Serialize)]
struct SpectrumEntry {
    d1: usize,
    s: f64,
    file: String,
    min_gap: f64,
    reflection_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
struct SpectrumSummary {
    dim: usize,
    n_k: usize,
    entries: Vec<SpectrumEntry>,
}

fn spectrum(spec: &RunSpec) -> CliResult<Vec<OutputFile>> {
    let plan = &spec.plans[0];
    let grid = KGrid::new(spec.n_k)?;
    let many = plan.d1.len() > 1;
    let mut files = Vec::new();
    let mut entries = Vec::new();
    for &d1 in &plan.d1 {
        let bands = eigenphase_bands(CellDims::new(plan.dim, d1)?, grid)?;
        let name = per_d1_name("spectrum", d1, many);
        let rows = bands.thetas.iter().enumerate().flat_map(|(j, row)| {
            let k = grid.node(j);
            row.iter()
                .enumerate()
                .map(move |(l, &th)| vec![j.to_string(), fmt_f64(k), l.to_string(), fmt_f64(th)])
        });
        files.push(OutputFile::new(
            name.clone(),
            csv_bytes(&["k_index", "k", "level_index", "theta"], rows),
        ));
        if spec.svg {
            let pts = bands
                .thetas
                .iter()
                .enumerate()
                .flat_map(|(j, row)| row.iter().map(move |&th| (grid.node(j) / PI, th / PI)))
                .collect();
            let plot = Plot::new(
                format!("Eigenphases, D={} D1={d1}", plan.dim),
                "k/π",
                "θ/π",
            )
            .with(Series::new("θ_l(k)", Style::Dots, pts));
            files.push(OutputFile::new(
                name.replace(".csv", ".svg"),
                plot.render().into_bytes(),
            ));
        }
        entries.push(SpectrumEntry {
            d1,
            s: d1 as f64 / plan.dim as f64,
            file: name,
            min_gap: bands.min_gap(),
            reflection_defect: reflection_defect(&bands),
        });
    }
    files.push(OutputFile::json(
        "spectrum_summary.json",
        &SpectrumSummary {
            dim: plan.dim,
            n_k: spec.n_k,
            entries,
        },
    ));
    Ok(files)
}

// ---------------------------------------------------------------- level statistics

#[derive(Debug, Clone, Serialize)]
pub struct LevelStatsEntry {
    pub d1: usize,
    pub s: f64,
    pub file: String,
    pub spacings: usize,
    pub ks_poisson: f64,
    pub ks_cue: f64,
    /// `"poisson"` or `"cue"`, whichever reference is nearer.
    pub closer_to: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelStatsSummary {
    pub dim: usize,
    pub n_k: usize,
    pub abscissae: String,
    pub entries: Vec<LevelStatsEntry>,
    /// D1 values ordered by increasing KS distance to Poisson.
    pub poisson_ranking: Vec<usize>,
    pub closest_to_poisson: usize,
}

pub fn level_stats_summary(spec: &RunSpec) -> CliResult<(LevelStatsSummary, Vec<OutputFile>)> {
    let plan = &spec.plans[0];
    let grid = KGrid::new(spec.n_k)?;
    let abscissae = default_abscissae();
    let many = plan.d1.len() > 1;
    let mut files = Vec::new();
    let mut entries = Vec::new();
    for &d1 in &plan.d1 {
        let bands = eigenphase_bands(CellDims::new(plan.dim, d1)?, grid)?;
        let sample = spacing_sample(&bands);
        let curve = cumulative_curve(&sample, &abscissae)?;
        let poisson = curve.reference(ReferenceKind::Poisson);
        let cue = curve.reference(ReferenceKind::Cue);
        let name = per_d1_name("level_stats", d1, many);
        let rows = (0..abscissae.len()).map(|i| {
            vec![
                fmt_f64(abscissae[i]),
                fmt_f64(curve.empirical[i]),
                fmt_f64(poisson[i]),
                fmt_f64(cue[i]),
            ]
        });
        files.push(OutputFile::new(
            name.clone(),
            csv_bytes(&["theta", "I_empirical", "I_poisson", "I_cue"], rows),
        ));
        if spec.svg {
            let zip = |ys: &[f64]| abscissae.iter().copied().zip(ys.iter().copied()).collect();
            let plot = Plot::new(
                format!("Cumulative spacing distribution, D={} D1={d1}", plan.dim),
                "θ (mean spacing units)",
                "I(θ)",
            )
            .with(Series::new("empirical", Style::Line, zip(&curve.empirical)))
            .with(Series::new("Poisson", Style::Line, zip(&poisson)))
            .with(Series::new("CUE", Style::Line, zip(&cue)));
            files.push(OutputFile::new(
                name.replace(".csv", ".svg"),
                plot.render().into_bytes(),
            ));
        }
        let ks_poisson = ks_distance(&curve, ReferenceKind::Poisson);
        let ks_cue = ks_distance(&curve, ReferenceKind::Cue);
        entries.push(LevelStatsEntry {
            d1,
            s: d1 as f64 / plan.dim as f64,
            file: name,
            spacings: sample.values.len(),
            ks_poisson,
            ks_cue,
            closer_to: if ks_poisson < ks_cue { "poisson" } else { "cue" },
        });
    }
    let mut ranking: Vec<&LevelStatsEntry> = entries.iter().collect();
    ranking.sort_by(|a, b| a.ks_poisson.total_cmp(&b.ks_poisson).then(a.d1.cmp(&b.d1)));
    let poisson_ranking: Vec<usize> = ranking.iter().map(|e| e.d1).collect();
    let summary = LevelStatsSummary {
        dim: plan.dim,
        n_k: spec.n_k,
        abscissae: "0..=4 step 0.01".into(),
        closest_to_poisson: poisson_ranking[0],
        poisson_ranking,
        entries,
    };
    Ok((summary, files))
}

fn level_stats(spec: &RunSpec) -> CliResult<Vec<OutputFile>> {
    let (summary, mut files) = level_stats_summary(spec)?;
    files.push(OutputFile::json("level_stats_summary.json", &summary));
    Ok(files)
}

// ---------------------------------------------------------------- evolution

#[derive(Debug, Clone, Serialize)]
struct MonteCarloCheck {
    samples: u64,
    seed: u64,
    rng: &'static str,
    /// Largest total-variation distance to the exact classical table over t.
    max_total_variation: f64,
}

#[derive(Debug, Clone, Serialize)]
struct HusimiPanel {
    x: i64,
    file: String,
    /// `p(x, t)`: trace of the reduced cell state.
    mass: f64,
    /// Raw maximum before per-panel normalization.
    raw_max: f64,
}

#[derive(Debug, Clone, Serialize)]
struct EvolveSummary {
    dim: usize,
    d1: usize,
    s: f64,
    delta_p_states: usize,
    delta_p_width: f64,
    t_max: usize,
    translation_convention: &'static str,
    classical_method: &'static str,
    mean_x_quantum: Vec<f64>,
    mean_x_classical: Vec<f64>,
    max_abs_diff: f64,
    late_current_mean: f64,
    late_current_std_error: f64,
    late_window: (usize, usize),
    quantum_normalization_defect: f64,
    quantum_light_cone_violation: f64,
    monte_carlo: Option<MonteCarloCheck>,
    husimi_t: usize,
    husimi_resolution: usize,
    husimi_panels: Vec<HusimiPanel>,
}

fn classical_table(s: f64, t_max: usize) -> CliResult<ClassicalTable> {
    Ok(if t_max <= EXACT_CLASSICAL_MAX_T {
        exact_distribution(s, t_max)?
    } else {
        transfer_distribution(s, t_max)?
    })
}

fn evolve(spec: &RunSpec) -> CliResult<Vec<OutputFile>> {
    let (dim, d1, dp) = spec.single();
    let dims = CellDims::new(dim, d1)?;
    let s = dims.s();
    let t_max = spec.t_max;
    let rho = central_momentum_mixture(dim, dp)?;
    let quantum = lattice_evolve(&rho, dims, t_max)?;
    let classical = classical_table(s, t_max)?;

    let mut max_abs_diff: f64 = 0.0;
    let mut rows = Vec::new();
    for t in 0..=t_max {
        for x in -(t as i64)..=t as i64 {
            let (pq, pc) = (quantum.probability(x, t), classical.probability(x, t));
            max_abs_diff = max_abs_diff.max((pq - pc).abs());
            rows.push(vec![
                t.to_string(),
                x.to_string(),
                fmt_f64(pq),
                fmt_f64(pc),
                fmt_f64(pq - pc),
            ]);
        }
    }
    let mut files = vec![OutputFile::new(
        "pxt.csv",
        csv_bytes(&["t", "x", "p_quantum", "p_classical", "diff"], rows),
    )];

    let monte_carlo = if spec.mc_samples > 0 {
        let mc = monte_carlo_distribution(s, t_max, spec.mc_samples, spec.seed, dp as f64 / dim as f64)?;
        Some(MonteCarloCheck {
            samples: spec.mc_samples,
            seed: spec.seed,
            rng: mc.rng.unwrap_or(""),
            max_total_variation: (0..=t_max)
                .map(|t| total_variation(&mc, &classical, t))
                .fold(0.0, f64::max),
        })
    } else {
        None
    };

    let mut husimi_panels = Vec::new();
    if !spec.husimi_cells.is_empty() {
        let comps = evolve_components(&rho, dims, spec.husimi_t)?;
        let r = spec.husimi_resolution;
        for panel in lattice_husimi(&comps, &spec.husimi_cells, r)? {
            let x = panel.cell.expect("lattice panel");
            let file = format!("husimi_x{x}.csv");
            let normalized = panel.max_normalized();
            let rows = (0..r).flat_map(|qi| {
                let normalized = &normalized;
                (0..r).map(move |pj| vec![qi.to_string(), pj.to_string(), fmt_f64(normalized[qi * r + pj])])
            });
            files.push(OutputFile::new(file.clone(), csv_bytes(&["qi", "pi", "value"], rows)));
            husimi_panels.push(HusimiPanel {
                x,
                file,
                mass: panel.mass,
                raw_max: panel.max(),
            });
        }
    }

    let series = current_series(&quantum)?;
    let summary = EvolveSummary {
        dim,
        d1,
        s,
        delta_p_states: dp,
        delta_p_width: dp as f64 / dim as f64,
        t_max,
        translation_convention: TRANSLATION_CONVENTION,
        classical_method: classical.method.name(),
        mean_x_quantum: (0..=t_max).map(|t| quantum.mean(t)).collect(),
        mean_x_classical: (0..=t_max).map(|t| classical.mean(t)).collect(),
        max_abs_diff,
        late_current_mean: series.asymptotic,
        late_current_std_error: series.std_error,
        late_window: series.window,
        quantum_normalization_defect: quantum.normalization_defect(),
        quantum_light_cone_violation: quantum.light_cone_violation(),
        monte_carlo,
        husimi_t: spec.husimi_t,
        husimi_resolution: spec.husimi_resolution,
        husimi_panels,
    };
    files.push(OutputFile::json("evolve_summary.json", &summary));

    if spec.svg {
        let cells = || (-(t_max as i64)..=t_max as i64).filter(|x| (x + t_max as i64) % 2 == 0);
        let plot = Plot::new(
            format!("p(x, t={t_max}), D={dim} s={s}"),
            "x",
            "probability",
        )
        .with(Series::new(
            "quantum",
            Style::Bars,
            cells().map(|x| (x as f64, quantum.probability(x, t_max))).collect(),
        ))
        .with(Series::new(
            "classical",
            Style::Bars,
            cells().map(|x| (x as f64, classical.probability(x, t_max))).collect(),
        ));
        files.push(OutputFile::new("pxt.svg", plot.render().into_bytes()));
    }
    Ok(files)
}
