//! Monotone piecewise-cubic Hermite interpolation.

#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

fn cap(m: f64, d: f64) -> f64 {
    if m.abs() > 3.0 * d.abs() {
        3.0 * d
    } else {
        m
    }
}

impl Pchip {
    /// Slopes from the Fritsch–Butland harmonic mean; exact through monotone data.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        assert_eq!(x.len(), y.len());
        assert!(x.len() >= 2, "need at least two nodes");
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(h.iter().all(|&v| v > 0.0), "abscissas must be strictly increasing");
        let d: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut m = vec![0.0; n];
        if n == 2 {
            m[0] = d[0];
            m[1] = d[0];
        } else {
            for i in 1..n - 1 {
                if d[i - 1] * d[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
                }
            }
            m[0] = end_slope(h[0], h[1], d[0], d[1]);
            m[n - 1] = end_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
        }
        Self { x, y, m }
    }

    /// Hermite interpolant through known derivatives. On segments where both end slopes
    /// agree in sign with the secant, slopes are capped at 3x the secant (Fritsch–Carlson) so
    /// the piece stays monotone; segments bracketing a genuine extremum keep the exact slopes.
    pub fn with_slopes(x: Vec<f64>, y: Vec<f64>, slopes: Vec<f64>) -> Self {
        assert_eq!(x.len(), y.len());
        assert_eq!(x.len(), slopes.len());
        assert!(x.len() >= 2, "need at least two nodes");
        assert!(x.windows(2).all(|w| w[1] > w[0]), "abscissas must be strictly increasing");
        let n = x.len();
        let mut m = slopes;
        for i in 0..n - 1 {
            let d = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
            if d != 0.0 && m[i] * d >= 0.0 && m[i + 1] * d >= 0.0 {
                m[i] = cap(m[i], d);
                m[i + 1] = cap(m[i + 1], d);
            }
        }
        Self { x, y, m }
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }

    /// Evaluate; outside the node range the end cubic is extended.
    pub fn eval(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.m[i] + h01 * self.y[i + 1] + h11 * h * self.m[i + 1]
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let s2 = s * s;
        let d00 = 6.0 * s2 - 6.0 * s;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = -6.0 * s2 + 6.0 * s;
        let d11 = 3.0 * s2 - 2.0 * s;
        (d00 * self.y[i] + d01 * self.y[i + 1]) / h + d10 * self.m[i] + d11 * self.m[i + 1]
    }
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes() {
        let x = vec![0.0, 0.3, 1.0, 2.0];
        let y = vec![1.0, 2.0, 2.0, -1.0];
        let p = Pchip::new(x.clone(), y.clone());
        for (a, b) in x.iter().zip(&y) {
            assert!((p.eval(*a) - b).abs() < 1e-15);
        }
    }

    #[test]
    fn monotone_data_stays_monotone() {
        let x: Vec<f64> = (0..20).map(|i| (i as f64).powf(1.5)).collect();
        let y: Vec<f64> = x.iter().map(|v| (v / 10.0).tanh()).collect();
        let p = Pchip::new(x.clone(), y);
        let mut prev = p.eval(0.0);
        for k in 1..2000 {
            let t = x[19] * k as f64 / 2000.0;
            let v = p.eval(t);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn exact_slopes_give_fourth_order_accuracy() {
        let f = |x: f64| x.sin();
        let err = |n: usize| {
            let x: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
            let y = x.iter().map(|&v| f(v)).collect();
            let m = x.iter().map(|&v| v.cos()).collect();
            let p = Pchip::with_slopes(x, y, m);
            (0..997)
                .map(|k| {
                    let t = k as f64 / 997.0;
                    (p.eval(t) - f(t)).abs()
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(10) / err(20);
        assert!(ratio > 12.0, "ratio {ratio}");
    }
}
