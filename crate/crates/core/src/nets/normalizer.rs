use ndarray::{Array2, ArrayView2};

/// Running per-dimension mean/variance (parallel Welford merge).
#[derive(Clone, Debug, PartialEq)]
pub struct RunningNorm {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub count: f64,
    pub clip: f64,
    pub frozen: bool,
}

impl RunningNorm {
    pub const EPS: f64 = 1e-8;

    pub fn new(dim: usize) -> Self {
        RunningNorm {
            mean: vec![0.0; dim],
            var: vec![1.0; dim],
            count: 0.0,
            clip: 10.0,
            frozen: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Folds a batch of rows into the statistics (no-op when frozen).
    pub fn update(&mut self, batch: ArrayView2<f64>) {
        if self.frozen || batch.nrows() == 0 {
            return;
        }
        let n = batch.nrows() as f64;
        let total = self.count + n;
        for (j, col) in batch.columns().into_iter().enumerate() {
            let bm = col.sum() / n;
            let bv = col.iter().map(|x| (x - bm) * (x - bm)).sum::<f64>() / n;
            let delta = bm - self.mean[j];
            let m2 = if self.count > 0.0 { self.var[j] * self.count } else { 0.0 };
            let m2 = m2 + bv * n + delta * delta * self.count * n / total;
            self.mean[j] += delta * n / total;
            self.var[j] = m2 / total;
        }
        self.count = total;
    }

    pub fn normalize_in_place(&self, row: &mut [f64]) {
        for ((x, m), v) in row.iter_mut().zip(&self.mean).zip(&self.var) {
            *x = ((*x - m) / (v + Self::EPS).sqrt()).clamp(-self.clip, self.clip);
        }
    }

    pub fn normalize(&self, row: &[f64]) -> Vec<f64> {
        let mut out = row.to_vec();
        self.normalize_in_place(&mut out);
        out
    }

    pub fn normalize_batch(&self, batch: ArrayView2<f64>) -> Array2<f64> {
        let mut out = batch.to_owned();
        for mut row in out.rows_mut() {
            self.normalize_in_place(row.as_slice_mut().expect("standard layout"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn merged_statistics_match_direct() {
        let data = array![[1.0, 10.0], [2.0, 12.0], [4.0, 9.0], [7.0, 1.0], [0.5, 3.0]];
        let mut n = RunningNorm::new(2);
        n.update(data.slice(ndarray::s![0..2, ..]));
        n.update(data.slice(ndarray::s![2..5, ..]));
        for j in 0..2 {
            let col = data.column(j);
            let m = col.sum() / 5.0;
            let v = col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 5.0;
            assert!((n.mean[j] - m).abs() < 1e-12);
            assert!((n.var[j] - v).abs() < 1e-12);
        }
        n.frozen = true;
        let frozen_before = n.clone();
        n.update(data.view());
        assert_eq!(n, frozen_before);
    }

    #[test]
    fn normalisation_clips() {
        let mut n = RunningNorm::new(1);
        n.var[0] = 1e-4;
        assert_eq!(n.normalize(&[5.0])[0], 10.0);
    }
}
