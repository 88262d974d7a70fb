use crate::data::Dataset;
use crate::models::Classifier;

/// k-nearest-neighbour vote fraction under Euclidean distance in raw feature
/// units. Distance ties are broken by lower training-row index.
///
/// Queries are exact. Partial distances over the fewest highest-variance
/// columns carrying 95% of the total variance are computed for every
/// training point first; the full distances of the
/// `k` best partial candidates bound the answer, and only points whose
/// partial distance is within that bound get a full distance.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    k: usize,
    n_rows: usize,
    n_features: usize,
    rows: Vec<f64>,
    /// Screening columns, highest variance first.
    screen: Vec<usize>,
    /// The screening columns stored column-major.
    screen_columns: Vec<f64>,
    labels: Vec<u8>,
}

impl KnnModel {
    pub fn fit(d: &Dataset, k: usize) -> Self {
        let (n, f) = (d.n_rows(), d.n_features());
        let stats = crate::data::feature_stats(d);
        let mut order: Vec<usize> = (0..f).collect();
        order.sort_by(|&a, &b| stats.stddev[b].total_cmp(&stats.stddev[a]).then(a.cmp(&b)));
        let total: f64 = stats.stddev.iter().map(|s| s * s).sum();
        let mut covered = 0.0;
        let mut screen = Vec::new();
        for j in order {
            if !screen.is_empty() && covered >= 0.95 * total {
                break;
            }
            covered += stats.stddev[j] * stats.stddev[j];
            screen.push(j);
        }
        let screen_columns = screen
            .iter()
            .flat_map(|&j| d.rows().map(move |r| r[j]))
            .collect();
        Self {
            k: k.min(n),
            n_rows: n,
            n_features: f,
            rows: d.features().as_slice().to_vec(),
            screen,
            screen_columns,
            labels: d.labels().to_vec(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn distance(&self, i: usize, x: &[f64]) -> f64 {
        let p = &self.rows[i * self.n_features..(i + 1) * self.n_features];
        p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    /// Indices of the `k` nearest training rows, nearest first.
    pub fn neighbors(&self, x: &[f64]) -> Vec<usize> {
        let n = self.n_rows;
        let mut partial = vec![0.0; n];
        for (col, &j) in self.screen_columns.chunks_exact(n).zip(&self.screen) {
            let q = x[j];
            let mut acc = partial.chunks_exact_mut(8);
            let mut src = col.chunks_exact(8);
            for (a, c) in (&mut acc).zip(&mut src) {
                for l in 0..8 {
                    let t = c[l] - q;
                    a[l] += t * t;
                }
            }
            for (a, &c) in acc.into_remainder().iter_mut().zip(src.remainder()) {
                let t = c - q;
                *a += t * t;
            }
        }
        // Any k points bound the k-th distance; the best partials are a good guess.
        let guess = smallest(self.k, partial.iter().copied().enumerate());
        let bound = guess
            .iter()
            .map(|&(_, i)| self.distance(i, x))
            .fold(0.0, f64::max);
        // Slack covers rounding between the partial and full sums.
        let cutoff = bound * (1.0 + 1e-12);
        let survivors = partial
            .iter()
            .enumerate()
            .filter(|&(_, &p)| p <= cutoff)
            .map(|(i, _)| (i, self.distance(i, x)));
        let best = smallest(self.k, survivors);
        best.into_iter().map(|(_, i)| i).collect()
    }
}

/// The `k` smallest `(row, value)` pairs as `(value, row)`, ascending. Rows
/// arrive in increasing order, so the strict comparison keeps the lower row
/// on ties.
fn smallest(k: usize, items: impl Iterator<Item = (usize, f64)>) -> Vec<(f64, usize)> {
    let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
    let mut worst = f64::INFINITY;
    for (i, d) in items {
        if d < worst || best.len() < k {
            let pos = best.partition_point(|&(b, _)| b <= d);
            best.insert(pos, (d, i));
            best.truncate(k);
            if best.len() == k {
                worst = best[k - 1].0;
            }
        }
    }
    best
}

impl Classifier for KnnModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn proba(&self, x: &[f64]) -> f64 {
        let nb = self.neighbors(x);
        let pos = nb.iter().filter(|&&i| self.labels[i] == 1).count();
        pos as f64 / nb.len() as f64
    }
}
