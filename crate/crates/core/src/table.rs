//! Clamped piecewise-linear lookup tables ("graphical converters").
//!
//! A table is exact at its breakpoints, linear between neighbours and constant
//! beyond either end. Validation happens once, at construction.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TableFunction {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl TableFunction {
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidTable(format!(
                "need at least 2 breakpoints, got {}",
                points.len()
            )));
        }
        for (k, &(x, y)) in points.iter().enumerate() {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::InvalidTable(format!(
                    "breakpoint {k} is not finite: ({x}, {y})"
                )));
            }
        }
        for (k, w) in points.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidTable(format!(
                    "x must be strictly increasing: breakpoint {} has x={} after x={}",
                    k + 1,
                    w[1].0,
                    w[0].0
                )));
            }
        }
        Ok(Self {
            xs: points.iter().map(|p| p.0).collect(),
            ys: points.iter().map(|p| p.1).collect(),
        })
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    pub fn eval(&self, x: f64) -> f64 {
        let last = self.xs.len() - 1;
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[last] {
            return self.ys[last];
        }
        // first index with xs[idx] > x; 1 <= idx <= last here
        let idx = self.xs.partition_point(|&bx| bx <= x);
        let (x0, y0) = (self.xs[idx - 1], self.ys[idx - 1]);
        if x == x0 {
            return y0;
        }
        let (x1, y1) = (self.xs[idx], self.ys[idx]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Same breakpoints with every y multiplied by `factor`.
    pub fn scale_y(&self, factor: f64) -> Self {
        Self {
            xs: self.xs.clone(),
            ys: self.ys.iter().map(|y| y * factor).collect(),
        }
    }
}

/// K-L ratio (relative) to underutilisation onset-rate multiplier.
pub const ETA_POINTS: [(f64, f64); 11] = [
    (0.000, 0.000),
    (0.500, 0.291),
    (1.000, 1.000),
    (1.500, 1.990),
    (2.000, 3.083),
    (2.500, 4.029),
    (3.000, 4.636),
    (3.500, 4.976),
    (4.000, 5.000),
    (4.500, 5.000),
    (5.000, 5.000),
];

/// K-L ratio (relative) to MFP growth multiplier.
pub const MFP_POINTS: [(f64, f64); 11] = [
    (0.000, 0.000),
    (0.500, 0.415),
    (1.000, 1.000),
    (1.500, 1.524),
    (2.000, 2.214),
    (2.500, 3.135),
    (3.000, 4.093),
    (3.500, 4.667),
    (4.000, 4.929),
    (4.500, 5.000),
    (5.000, 5.000),
];

/// MFP level to price level.
pub const PRICE_POINTS: [(f64, f64); 11] = [
    (0.000, 1.3890),
    (0.500, 1.1500),
    (1.000, 1.0000),
    (1.500, 0.9223),
    (2.000, 0.8870),
    (2.500, 0.8560),
    (3.000, 0.8332),
    (3.500, 0.8083),
    (4.000, 0.8000),
    (4.500, 0.8000),
    (5.000, 0.8000),
];

/// Relative underutilisation to disposable-income multiplier (Phillips-curve shape).
pub const THETA_POINTS: [(f64, f64); 11] = [
    (0.000, 1.359),
    (0.500, 1.152),
    (1.000, 1.000),
    (1.500, 0.876),
    (2.000, 0.796),
    (2.500, 0.748),
    (3.000, 0.705),
    (3.500, 0.676),
    (4.000, 0.648),
    (4.500, 0.631),
    (5.000, 0.612),
];

/// The four converters the model reads.
#[derive(Debug, Clone, PartialEq)]
pub struct Converters {
    pub eta: TableFunction,
    pub mfp: TableFunction,
    pub prices: TableFunction,
    pub theta: TableFunction,
}

impl Default for Converters {
    fn default() -> Self {
        // built-in point lists are statically valid
        Self {
            eta: TableFunction::new(&ETA_POINTS).expect("eta table"),
            mfp: TableFunction::new(&MFP_POINTS).expect("mfp table"),
            prices: TableFunction::new(&PRICE_POINTS).expect("price table"),
            theta: TableFunction::new(&THETA_POINTS).expect("theta table"),
        }
    }
}
