use serde::Serialize;

/// Joint outcome probabilities `P(i, j)` for Alice's outcome `i` and Bob's
/// outcome `j`, stored row-major, with optional standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointTable {
    pub rows: usize,
    pub cols: usize,
    pub probs: Vec<f64>,
    pub std_errors: Option<Vec<f64>>,
}

impl JointTable {
    pub fn new(rows: usize, cols: usize, probs: Vec<f64>) -> Self {
        assert_eq!(probs.len(), rows * cols);
        JointTable {
            rows,
            cols,
            probs,
            std_errors: None,
        }
    }

    pub fn with_std_errors(mut self, se: Vec<f64>) -> Self {
        assert_eq!(se.len(), self.probs.len());
        self.std_errors = Some(se);
        self
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.probs[i * self.cols + j]
    }

    pub fn se(&self, i: usize, j: usize) -> Option<f64> {
        self.std_errors.as_ref().map(|s| s[i * self.cols + j])
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Alice's marginal `Σ_j P(i, j)`.
    pub fn row_marginal(&self) -> Vec<f64> {
        self.probs.chunks(self.cols).map(|r| r.iter().sum()).collect()
    }

    /// Bob's marginal `Σ_i P(i, j)`.
    pub fn col_marginal(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j)).sum())
            .collect()
    }

    pub fn max_abs_diff(&self, other: &JointTable) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `|self - reference| / se` per entry; requires standard errors.
    pub fn z_scores(&self, reference: &JointTable) -> Vec<f64> {
        let se = self.std_errors.as_ref().expect("table has no standard errors");
        self.probs
            .iter()
            .zip(&reference.probs)
            .zip(se)
            .map(|((a, b), s)| {
                let diff = (a - b).abs();
                if diff <= 1e-12 {
                    0.0
                } else {
                    diff / s
                }
            })
            .collect()
    }
}
