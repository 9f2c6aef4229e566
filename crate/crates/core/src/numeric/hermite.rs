//! Piecewise cubic Hermite interpolation with Fritsch–Carlson slope limiting,
//! so monotone data gives a monotone interpolant.

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    /// Builds the interpolant through `(x, y)`. `slopes` may carry known
    /// derivatives at the nodes; otherwise they are estimated from the data.
    /// Panics unless `x` is strictly increasing and `y` is monotone.
    pub fn new(x: Vec<f64>, y: Vec<f64>, slopes: Option<Vec<f64>>) -> Self {
        assert!(
            x.len() >= 2 && x.len() == y.len(),
            "need at least two nodes"
        );
        assert!(x.windows(2).all(|w| w[1] > w[0]), "abscissae must increase");
        let n = x.len();
        let secants: Vec<f64> = (0..n - 1)
            .map(|k| (y[k + 1] - y[k]) / (x[k + 1] - x[k]))
            .collect();
        let mut m = slopes.unwrap_or_else(|| estimate_slopes(&x, &secants));
        assert_eq!(m.len(), n);
        for k in 0..n - 1 {
            let delta = secants[k];
            if delta == 0.0 {
                m[k] = 0.0;
                m[k + 1] = 0.0;
                continue;
            }
            if m[k] / delta < 0.0 {
                m[k] = 0.0;
            }
            if m[k + 1] / delta < 0.0 {
                m[k + 1] = 0.0;
            }
            let alpha = m[k] / delta;
            let beta = m[k + 1] / delta;
            let r2 = alpha * alpha + beta * beta;
            if r2 > 9.0 {
                let tau = 3.0 / r2.sqrt();
                m[k] = tau * alpha * delta;
                m[k + 1] = tau * beta * delta;
            }
        }
        Self { x, y, slopes: m }
    }

    pub fn nodes(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.y)
    }

    pub fn node_slopes(&self) -> &[f64] {
        &self.slopes
    }

    fn locate(&self, t: f64) -> usize {
        let k = self.x.partition_point(|&xi| xi <= t);
        k.clamp(1, self.x.len() - 1) - 1
    }

    /// Value at `t`, clamped to the end values outside the node range.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= *self.x.last().expect("nodes") {
            return *self.y.last().expect("nodes");
        }
        let k = self.locate(t);
        let h = self.x[k + 1] - self.x[k];
        let u = (t - self.x[k]) / h;
        let u2 = u * u;
        let u3 = u2 * u;
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        h00 * self.y[k]
            + h10 * h * self.slopes[k]
            + h01 * self.y[k + 1]
            + h11 * h * self.slopes[k + 1]
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let t = t.clamp(self.x[0], *self.x.last().expect("nodes"));
        let k = self.locate(t);
        let h = self.x[k + 1] - self.x[k];
        let u = (t - self.x[k]) / h;
        let u2 = u * u;
        let d00 = (6.0 * u2 - 6.0 * u) / h;
        let d10 = 3.0 * u2 - 4.0 * u + 1.0;
        let d01 = (-6.0 * u2 + 6.0 * u) / h;
        let d11 = 3.0 * u2 - 2.0 * u;
        d00 * self.y[k] + d10 * self.slopes[k] + d01 * self.y[k + 1] + d11 * self.slopes[k + 1]
    }
}

// Three-point weighted harmonic mean (PCHIP).
fn estimate_slopes(x: &[f64], secants: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    m[0] = secants[0];
    m[n - 1] = secants[n - 2];
    for k in 1..n - 1 {
        let (d0, d1) = (secants[k - 1], secants[k]);
        if d0 * d1 <= 0.0 {
            continue;
        }
        let h0 = x[k] - x[k - 1];
        let h1 = x[k + 1] - x[k];
        let w0 = 2.0 * h1 + h0;
        let w1 = h1 + 2.0 * h0;
        m[k] = (w0 + w1) / (w0 / d0 + w1 / d1);
    }
    m
}
