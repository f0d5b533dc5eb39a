//! Coarse-grained distributions `p(x, t)` over lattice cells.

/// Probabilities `p(x, t)` for `t = 0..=t_max` and `x ∈ [-t_max, t_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTable {
    t_max: usize,
    rows: Vec<Vec<f64>>,
}

impl CellTable {
    pub fn zeros(t_max: usize) -> Self {
        Self {
            t_max,
            rows: vec![vec![0.0; 2 * t_max + 1]; t_max + 1],
        }
    }

    pub(crate) fn from_rows(t_max: usize, rows: Vec<Vec<f64>>) -> Self {
        debug_assert_eq!(rows.len(), t_max + 1);
        debug_assert!(rows.iter().all(|r| r.len() == 2 * t_max + 1));
        Self { t_max, rows }
    }

    pub(crate) fn slot(x: i64, t_max: usize) -> Option<usize> {
        let i = x + t_max as i64;
        (0..=2 * t_max as i64).contains(&i).then_some(i as usize)
    }

    #[cfg(test)]
    pub(crate) fn add(&mut self, t: usize, x: i64, mass: f64) {
        let i = Self::slot(x, self.t_max).expect("cell outside the light cone");
        self.rows[t][i] += mass;
    }
}

/// Read access shared by the quantum and classical tables.
pub trait CoarseGrained {
    fn cells(&self) -> &CellTable;

    fn t_max(&self) -> usize {
        self.cells().t_max
    }

    /// Row `t`, indexed by `x + t_max`.
    fn row(&self, t: usize) -> &[f64] {
        &self.cells().rows[t]
    }

    /// `p(x, t)`, zero outside the stored window.
    fn probability(&self, x: i64, t: usize) -> f64 {
        match CellTable::slot(x, self.t_max()) {
            Some(i) if t <= self.t_max() => self.row(t)[i],
            _ => 0.0,
        }
    }

    /// Nonzero-width iterator over `(x, p(x, t))` for `|x| <= t_max`.
    fn entries(&self, t: usize) -> Box<dyn Iterator<Item = (i64, f64)> + '_> {
        let off = self.t_max() as i64;
        Box::new(
            self.row(t)
                .iter()
                .enumerate()
                .map(move |(i, &p)| (i as i64 - off, p)),
        )
    }

    fn total(&self, t: usize) -> f64 {
        self.row(t).iter().sum()
    }

    /// `⟨x^m⟩_t = Σ_x x^m p(x, t)`.
    fn moment(&self, t: usize, m: u32) -> f64 {
        self.entries(t).map(|(x, p)| (x as f64).powi(m as i32) * p).sum()
    }

    fn mean(&self, t: usize) -> f64 {
        self.moment(t, 1)
    }

    /// Largest `|p(x, t)|` over cells that must be empty: `|x| > t` or `x + t` odd.
    fn light_cone_violation(&self) -> f64 {
        (0..=self.t_max())
            .flat_map(|t| {
                self.entries(t)
                    .filter(move |(x, _)| x.unsigned_abs() as usize > t || (x + t as i64) % 2 != 0)
                    .map(|(_, p)| p.abs())
            })
            .fold(0.0, f64::max)
    }

    /// Largest `|Σ_x p(x, t) - 1|` over all times.
    fn normalization_defect(&self) -> f64 {
        (0..=self.t_max())
            .map(|t| (self.total(t) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

impl CoarseGrained for CellTable {
    fn cells(&self) -> &CellTable {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_and_structure() {
        let mut t = CellTable::zeros(2);
        t.add(0, 0, 1.0);
        t.add(1, 1, 0.25);
        t.add(1, -1, 0.75);
        t.add(2, 2, 0.5);
        t.add(2, -2, 0.5);
        assert_eq!(t.mean(1), -0.5);
        assert_eq!(t.moment(2, 2), 4.0);
        assert_eq!(t.probability(-1, 1), 0.75);
        assert_eq!(t.probability(7, 1), 0.0);
        assert_eq!(t.normalization_defect(), 0.0);
        assert_eq!(t.light_cone_violation(), 0.0);
        t.add(2, 1, 1e-3);
        assert_eq!(t.light_cone_violation(), 1e-3);
    }
}
