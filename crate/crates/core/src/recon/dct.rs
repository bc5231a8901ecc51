//! Orthonormal DCT-II / DCT-III pair on top of `rustdct`.

use std::fmt;
use std::sync::Arc;

use rustdct::{DctPlanner, TransformType2And3};

/// Orthonormal DCT-II (analysis) and its inverse (synthesis) for a fixed
/// length. `inverse(forward(x)) == x` up to rounding.
#[derive(Clone)]
pub struct OrthoDct {
    len: usize,
    plan: Arc<dyn TransformType2And3<f64>>,
    dc_scale: f64,
    ac_scale: f64,
}

impl fmt::Debug for OrthoDct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OrthoDct").field("len", &self.len).finish()
    }
}

impl OrthoDct {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "transform length must be positive");
        let plan = DctPlanner::new().plan_dct2(len);
        let n = len as f64;
        Self {
            len,
            plan,
            dc_scale: (1.0 / n).sqrt(),
            ac_scale: (2.0 / n).sqrt(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place analysis: time samples to coefficients.
    pub fn forward_in_place(&self, buf: &mut [f64]) {
        assert_eq!(buf.len(), self.len);
        self.plan.process_dct2(buf);
        buf[0] *= self.dc_scale;
        for v in &mut buf[1..] {
            *v *= self.ac_scale;
        }
    }

    /// In-place synthesis: coefficients to time samples.
    pub fn inverse_in_place(&self, buf: &mut [f64]) {
        assert_eq!(buf.len(), self.len);
        // The unnormalised DCT-III halves the DC term.
        buf[0] *= std::f64::consts::SQRT_2;
        self.plan.process_dct3(buf);
        for v in buf.iter_mut() {
            *v *= self.ac_scale;
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut buf = x.to_vec();
        self.forward_in_place(&mut buf);
        buf
    }

    pub fn inverse(&self, c: &[f64]) -> Vec<f64> {
        let mut buf = c.to_vec();
        self.inverse_in_place(&mut buf);
        buf
    }

    /// Sample `n` of synthesis atom `k`.
    pub fn atom(&self, k: usize, n: usize) -> f64 {
        let scale = if k == 0 { self.dc_scale } else { self.ac_scale };
        let arg = std::f64::consts::PI * k as f64 * (2 * n + 1) as f64 / (2 * self.len) as f64;
        scale * arg.cos()
    }
}
