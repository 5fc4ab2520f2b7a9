//! Quadrature building blocks on uniform grids in `ln t`.

use std::sync::OnceLock;

/// Gaussian elimination with partial pivoting for small dense systems.
pub(crate) fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    x
}

/// Weights integrating the quintic through nodes `off..off+6` over the unit panel `[0, 1]`.
fn panel_weights(off: i64) -> [f64; 6] {
    static TABLE: OnceLock<Vec<[f64; 6]>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let (x, w) = gauss_legendre(8);
        (-5..=0)
            .map(|o: i64| {
                let mut out = [0.0; 6];
                for (slot, i) in out.iter_mut().zip(o..o + 6) {
                    *slot = x
                        .iter()
                        .zip(&w)
                        .map(|(xg, wg)| {
                            let s = 0.5 * (xg + 1.0);
                            let l: f64 = (o..o + 6)
                                .filter(|&j| j != i)
                                .map(|j| (s - j as f64) / (i - j) as f64)
                                .product();
                            0.5 * wg * l
                        })
                        .sum();
                }
                out
            })
            .collect()
    });
    table[(off + 5) as usize]
}

/// Integral over the panel between samples `i` and `i + 1`.
fn panel(values: &[f64], i: usize) -> f64 {
    let n = values.len();
    if n < 6 {
        return 0.5 * (values[i] + values[i + 1]);
    }
    let base = (i as i64 - 2).clamp(0, n as i64 - 6);
    let w = panel_weights(base - i as i64);
    w.iter().zip(&values[base as usize..base as usize + 6]).map(|(a, b)| a * b).sum()
}

/// Integral over the whole sample range with spacing `h`.
///
/// Each panel integrates the local quintic interpolant, centred where possible.
pub fn integrate(values: &[f64], h: f64) -> f64 {
    (0..values.len().saturating_sub(1)).map(|i| panel(values, i)).sum::<f64>() * h
}

/// `out[i]` is the integral from the first sample to sample `i`.
pub fn cumulative(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    if !values.is_empty() {
        out.push(0.0);
    }
    for i in 0..values.len().saturating_sub(1) {
        acc += panel(values, i) * h;
        out.push(acc);
    }
    out
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Cached 32-point rule.
pub fn gl32() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(32))
}

fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Six-point Lagrange interpolation on the uniform abscissae `x0 + i h`.
pub fn lagrange(values: &[f64], x0: f64, h: f64, x: f64) -> f64 {
    let n = values.len();
    if n == 1 {
        return values[0];
    }
    let width = n.min(6);
    let pos = (x - x0) / h;
    let base = (pos.floor() as i64 - (width as i64 / 2 - 1)).clamp(0, (n - width) as i64) as usize;
    let mut out = 0.0;
    for i in base..base + width {
        let mut l = 1.0;
        for j in base..base + width {
            if j != i {
                l *= (pos - j as f64) / (i as f64 - j as f64);
            }
        }
        out += l * values[i];
    }
    out
}

/// Model `v(t) = A t^α u^{-β}` with `u = 1 + ln(T/t)`, fitted near the small-time end.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailModel {
    pub sign: f64,
    pub ln_a: f64,
    pub alpha: f64,
    pub beta: f64,
    pub horizon: f64,
}

fn log_u(t: f64, horizon: f64) -> f64 {
    (1.0 + (horizon / t).ln()).ln()
}

impl TailModel {
    /// Fit through three samples; `None` when they vanish or change sign.
    pub fn fit(t: [f64; 3], v: [f64; 3], horizon: f64) -> Option<Self> {
        let sign = if v.iter().all(|&x| x > 0.0) {
            1.0
        } else if v.iter().all(|&x| x < 0.0) {
            -1.0
        } else {
            return None;
        };
        let a: Vec<Vec<f64>> = t
            .iter()
            .map(|&ti| vec![1.0, ti.ln(), -log_u(ti, horizon)])
            .collect();
        let b: Vec<f64> = v.iter().map(|x| (sign * x).ln()).collect();
        let sol = solve_dense(a, b);
        if sol.iter().any(|x| !x.is_finite()) {
            return None;
        }
        Some(Self { sign, ln_a: sol[0], alpha: sol[1], beta: sol[2], horizon })
    }

    pub fn value(&self, t: f64) -> f64 {
        self.sign * (self.ln_a + self.alpha * t.ln() - self.beta * log_u(t, self.horizon)).exp()
    }

    /// `∫_0^{tb} τ^extra v(τ) dτ/τ`, or `None` when the integral diverges.
    pub fn integral_below(&self, tb: f64, extra: f64) -> Option<f64> {
        let alpha = self.alpha + extra;
        let vb = self.value(tb) * tb.powf(extra);
        let ub = 1.0 + (self.horizon / tb).ln();
        if alpha < -1e-6 {
            return None;
        }
        if alpha.abs() <= 1e-6 {
            if self.beta <= 1.0 + 1e-9 {
                return None;
            }
            return Some(vb * ub / (self.beta - 1.0));
        }
        // ∫_0^∞ e^{-α w} (1 + w/u_b)^{-β} dw on doubling panels.
        let (x, w) = gl16();
        let f = |s: f64| (-alpha * s).exp() * (1.0 + s / ub).powf(-self.beta);
        let mut lo = 0.0;
        let mut width = (0.25 / alpha).min(ub);
        let mut acc = 0.0;
        for _ in 0..400 {
            let hi = lo + width;
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * width;
            let part: f64 = x.iter().zip(w).map(|(xi, wi)| wi * f(mid + half * xi)).sum::<f64>() * half;
            acc += part;
            if part.abs() <= 1e-17 * acc.abs() && alpha * hi > 1.0 {
                break;
            }
            lo = hi;
            width *= 1.5;
        }
        Some(vb * acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centred_panel_weights() {
        let w = panel_weights(-2);
        let want = [11.0, -93.0, 802.0, 802.0, -93.0, 11.0];
        for (a, b) in w.iter().zip(want) {
            assert!((a * 1440.0 - b).abs() < 1e-11);
        }
    }

    #[test]
    fn panel_rule_is_sixth_order() {
        let err = |h: f64| {
            let n = (3.0 / h).round() as usize;
            let vals: Vec<f64> = (0..=n).map(|i| (i as f64 * h).exp()).collect();
            (integrate(&vals, h) - (3f64.exp() - 1.0)).abs()
        };
        assert!(err(0.1) < 1e-7);
        assert!(err(0.1) / err(0.05) > 50.0);
        let poly: Vec<f64> = (0..=12).map(|i| (i as f64).powi(5)).collect();
        assert!((integrate(&poly, 1.0) - 12f64.powi(6) / 6.0).abs() < 1e-6);
        let vals: Vec<f64> = (0..=30).map(|i| (i as f64 * 0.1).exp()).collect();
        let cum = cumulative(&vals, 0.1);
        assert!((cum[10] - (1f64.exp() - 1.0)).abs() < 1e-8);
        assert_eq!(cum[0], 0.0);
    }

    #[test]
    fn gauss_legendre_exactness() {
        let (x, w) = gauss_legendre(32);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(62)).sum();
        assert!((m - 2.0 / 63.0).abs() < 1e-14);
    }

    #[test]
    fn lagrange_is_exact_for_quintics() {
        let f = |x: f64| 1.0 - 2.0 * x + x.powi(5);
        let vals: Vec<f64> = (0..10).map(|i| f(0.5 * i as f64)).collect();
        for &x in &[0.1, 1.3, 3.7, 4.4] {
            assert!((lagrange(&vals, 0.0, 0.5, x) - f(x)).abs() < 1e-10);
        }
    }

    #[test]
    fn tail_model_recovers_power_log_law() {
        let horizon = 2.0;
        let truth = |t: f64| 3.0 * t.powf(0.3) * (1.0 + (horizon / t).ln()).powf(-1.7);
        let t = [1e-6, 1e-5, 1e-4];
        let m = TailModel::fit(t, t.map(truth), horizon).unwrap();
        assert!((m.alpha - 0.3).abs() < 1e-9 && (m.beta - 1.7).abs() < 1e-8);
        // Pure log law has a closed-form tail.
        let log_law = |t: f64| (1.0 + (horizon / t).ln()).powf(-2.0);
        let m = TailModel::fit(t, t.map(log_law), horizon).unwrap();
        let tail = m.integral_below(1e-6, 0.0).unwrap();
        assert!((tail - 1.0 / (1.0 + (horizon / 1e-6).ln())).abs() < 1e-9);
        // t^{1/2}: ∫_0^b τ^{1/2} dτ/τ = 2 √b.
        let m = TailModel::fit(t, t.map(f64::sqrt), horizon).unwrap();
        assert!((m.integral_below(1e-6, 0.0).unwrap() - 2e-3).abs() < 1e-12);
        assert!(TailModel::fit(t, [1.0, 1.0, 1.0], horizon).unwrap().integral_below(1e-6, 0.0).is_none());
        assert!(TailModel::fit(t, [1.0, 0.0, 1.0], horizon).is_none());
    }
}
