use crate::error::{check_dim, Result};

/// Running sufficient statistics `Σ x xᵀ`, `Σ x y`, `Σ y²` of the selected features.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignState {
    t: usize,
    d: usize,
    gram: Vec<f64>,
    xty: Vec<f64>,
    yty: f64,
}

impl DesignState {
    pub fn new(d: usize) -> Self {
        Self {
            t: 0,
            d,
            gram: vec![0.0; d * d],
            xty: vec![0.0; d],
            yty: 0.0,
        }
    }

    /// Rank-one accumulation of one `(x, y)` pair, `O(d²)`.
    pub fn update(&mut self, x: &[f64], y: f64) -> Result<()> {
        check_dim(self.d, x.len())?;
        let d = self.d;
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &mut self.gram[i * d..(i + 1) * d];
            for (g, &xj) in row.iter_mut().zip(x) {
                *g += xi * xj;
            }
            self.xty[i] += xi * y;
        }
        self.yty += y * y;
        self.t += 1;
        Ok(())
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Row-major `d × d` Gram matrix.
    pub fn gram(&self) -> &[f64] {
        &self.gram
    }

    pub fn gram_at(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.d + j]
    }

    pub fn xty(&self) -> &[f64] {
        &self.xty
    }

    pub fn yty(&self) -> f64 {
        self.yty
    }

    pub fn trace(&self) -> f64 {
        (0..self.d).map(|i| self.gram_at(i, i)).sum()
    }

    /// `gram / t`, the sample covariance of the selected features.
    pub fn covariance(&self) -> Vec<f64> {
        if self.t == 0 {
            return vec![0.0; self.d * self.d];
        }
        let n = self.t as f64;
        self.gram.iter().map(|g| g / n).collect()
    }
}
