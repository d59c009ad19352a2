//! Steady-state Kalman–Bucy covariance for two-dimensional linear models.

use crate::error::{Error, Result};
use crate::params::DerivedQuantities;

pub type Mat2 = [[f64; 2]; 2];

/// `dx = A x dt + dW` with `E[dW dWᵀ] = D dt`, observed through
/// `dy = C x dt + dV` with `E[dV dVᵀ] = r I dt` and `E[dW dVᵀ] = S dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    pub drift: Mat2,
    pub diffusion: Mat2,
    /// One row per measurement channel.
    pub measurement: Vec<[f64; 2]>,
    pub measurement_noise_psd: f64,
    /// Column of `S` for each measurement channel.
    pub noise_correlation: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Newton,
    Bisection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateCovariance {
    pub matrix: Mat2,
    /// Largest stationarity-equation residual, each entry divided by the
    /// magnitude of the terms that cancel in it.
    pub residual: f64,
    pub method: SolveMethod,
    pub iterations: usize,
}

impl SteadyStateCovariance {
    pub fn v_qq(&self) -> f64 {
        self.matrix[0][0]
    }
    pub fn v_pp(&self) -> f64 {
        self.matrix[1][1]
    }
    pub fn c_qp(&self) -> f64 {
        self.matrix[0][1]
    }
}

pub const MAX_ITERATIONS: usize = 200;

/// Oscillator in the lab frame, position measured at rate `4ηΓC`.
pub fn build_full_model(d: &DerivedQuantities) -> StateSpaceModel {
    StateSpaceModel {
        drift: [[0.0, d.omega], [-d.omega, -d.gamma]],
        diffusion: [[0.0, 0.0], [0.0, 4.0 * d.gamma * d.n_tot]],
        measurement: vec![[d.record_gain(), 0.0]],
        measurement_noise_psd: 1.0,
        noise_correlation: vec![[0.0, 0.0]],
    }
}

/// Rotating-frame model: both quadratures decay at `Γ/2`, are heated
/// isotropically, and are each measured at rate `2ηΓC`.
pub fn build_rwa_model(d: &DerivedQuantities) -> StateSpaceModel {
    let h = (2.0 * d.eta * d.gamma * d.c).sqrt();
    let k = 2.0 * d.gamma * d.n_tot;
    StateSpaceModel {
        drift: [[-0.5 * d.gamma, 0.0], [0.0, -0.5 * d.gamma]],
        diffusion: [[k, 0.0], [0.0, k]],
        measurement: vec![[h, 0.0], [0.0, h]],
        measurement_noise_psd: 1.0,
        noise_correlation: vec![[0.0, 0.0], [0.0, 0.0]],
    }
}

impl StateSpaceModel {
    pub fn validate(&self) -> Result<()> {
        let all = self
            .drift
            .iter()
            .chain(self.diffusion.iter())
            .chain(self.measurement.iter());
        if all.flatten().any(|x| !x.is_finite()) {
            return Err(Error::invalid("model", "entries must be finite"));
        }
        let d = self.diffusion;
        if d[0][1] != d[1][0] {
            return Err(Error::invalid("diffusion", "must be symmetric"));
        }
        if d[0][0] < 0.0 || d[1][1] < 0.0 || d[0][0] * d[1][1] < d[0][1] * d[0][1] {
            return Err(Error::invalid("diffusion", "must be positive semidefinite"));
        }
        if d[0][0] + d[1][1] == 0.0 {
            return Err(Error::invalid(
                "diffusion",
                "zero diffusion has no positive-definite steady state",
            ));
        }
        if !(self.measurement_noise_psd > 0.0) {
            return Err(Error::invalid("measurement_noise_psd", "must be positive"));
        }
        if self.noise_correlation.len() != self.measurement.len() {
            return Err(Error::invalid(
                "noise_correlation",
                "needs one entry per measurement row",
            ));
        }
        Ok(())
    }

    /// Copy with drift and diffusion divided by `s`, rows by `√s`; same steady state.
    fn rescaled(&self, s: f64) -> StateSpaceModel {
        let m = |a: Mat2, f: f64| [[a[0][0] * f, a[0][1] * f], [a[1][0] * f, a[1][1] * f]];
        let r = 1.0 / s.sqrt();
        StateSpaceModel {
            drift: m(self.drift, 1.0 / s),
            diffusion: m(self.diffusion, 1.0 / s),
            measurement: self
                .measurement
                .iter()
                .map(|c| [c[0] * r, c[1] * r])
                .collect(),
            measurement_noise_psd: self.measurement_noise_psd,
            noise_correlation: self
                .noise_correlation
                .iter()
                .map(|c| [c[0] * r, c[1] * r])
                .collect(),
        }
    }

    fn rate_scale(&self) -> f64 {
        self.drift
            .iter()
            .flatten()
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Residual of the stationarity equation and the entrywise magnitude of its terms.
    fn residual(&self, v: &Mat2) -> (Mat2, Mat2) {
        let a = self.drift;
        let mut f = [[0.0; 2]; 2];
        let mut t = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let mut s = self.diffusion[i][j];
                let mut m = s.abs();
                for k in 0..2 {
                    s += a[i][k] * v[k][j] + v[i][k] * a[j][k];
                    m += (a[i][k] * v[k][j]).abs() + (v[i][k] * a[j][k]).abs();
                }
                f[i][j] = s;
                t[i][j] = m;
            }
        }
        let r = self.measurement_noise_psd;
        for (c, s) in self.measurement.iter().zip(&self.noise_correlation) {
            let g = gain(v, c, s);
            for i in 0..2 {
                for j in 0..2 {
                    f[i][j] -= g[i] * g[j] / r;
                    t[i][j] += (g[i] * g[j] / r).abs();
                }
            }
        }
        (f, t)
    }

    /// Derivative of the residual along symmetric direction `e`.
    fn derivative(&self, v: &Mat2, e: &Mat2) -> Mat2 {
        let a = self.drift;
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    out[i][j] += a[i][k] * e[k][j] + e[i][k] * a[j][k];
                }
            }
        }
        let r = self.measurement_noise_psd;
        for (c, s) in self.measurement.iter().zip(&self.noise_correlation) {
            let g = gain(v, c, s);
            let ec = [
                e[0][0] * c[0] + e[0][1] * c[1],
                e[1][0] * c[0] + e[1][1] * c[1],
            ];
            for i in 0..2 {
                for j in 0..2 {
                    out[i][j] -= (ec[i] * g[j] + g[i] * ec[j]) / r;
                }
            }
        }
        out
    }
}

fn gain(v: &Mat2, c: &[f64; 2], s: &[f64; 2]) -> [f64; 2] {
    [
        v[0][0] * c[0] + v[0][1] * c[1] + s[0],
        v[1][0] * c[0] + v[1][1] * c[1] + s[1],
    ]
}

fn sym(x: [f64; 3]) -> Mat2 {
    [[x[0], x[1]], [x[1], x[2]]]
}

fn unsym(m: &Mat2) -> [f64; 3] {
    [m[0][0], 0.5 * (m[0][1] + m[1][0]), m[1][1]]
}

fn positive_definite(v: &Mat2) -> bool {
    v[0][0] > 0.0 && v[1][1] > 0.0 && v[0][0] * v[1][1] - v[0][1] * v[1][0] > 0.0
}

fn frobenius(f: &Mat2) -> f64 {
    f.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

fn scaled_residual(f: &Mat2, t: &Mat2) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            if t[i][j] > 0.0 {
                worst = worst.max(f[i][j].abs() / t[i][j]);
            } else if f[i][j] != 0.0 {
                return f64::INFINITY;
            }
        }
    }
    worst
}

/// Gaussian elimination with partial pivoting.
pub(crate) fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col] == 0.0 || !m[piv][col].is_finite() {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            let pivot_row = m[col];
            for (x, p) in m[row].iter_mut().zip(pivot_row).skip(col) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / m[row][row];
    }
    Some(x)
}

fn jacobian(model: &StateSpaceModel, v: &Mat2) -> [[f64; 3]; 3] {
    let basis = [
        sym([1.0, 0.0, 0.0]),
        sym([0.0, 1.0, 0.0]),
        sym([0.0, 0.0, 1.0]),
    ];
    let mut j = [[0.0; 3]; 3];
    for (col, e) in basis.iter().enumerate() {
        let d = unsym(&model.derivative(v, e));
        for row in 0..3 {
            j[row][col] = d[row];
        }
    }
    j
}

/// Unconditional stationary covariance, `A V + V Aᵀ + D = 0`.
pub fn lyapunov(drift: &Mat2, diffusion: &Mat2) -> Result<Mat2> {
    let model = StateSpaceModel {
        drift: *drift,
        diffusion: *diffusion,
        measurement: vec![],
        measurement_noise_psd: 1.0,
        noise_correlation: vec![],
    };
    let zero = [[0.0; 2]; 2];
    let j = jacobian(&model, &zero);
    let d = unsym(diffusion);
    let x = solve3(j, [-d[0], -d[1], -d[2]])
        .ok_or_else(|| Error::Numerical("drift is singular for the Lyapunov equation".into()))?;
    let v = sym(x);
    if !positive_definite(&v) {
        return Err(Error::Numerical(
            "Lyapunov solution is not positive definite; drift unstable?".into(),
        ));
    }
    Ok(v)
}

/// Newton on `(v_qq, c_qp, v_pp)` from the unconditional covariance, with
/// the scalar bisection chain as fallback for oscillator-shaped models.
pub fn steady_state(model: &StateSpaceModel) -> Result<SteadyStateCovariance> {
    model.validate()?;
    match steady_state_newton(model) {
        Ok(s) => Ok(s),
        Err(newton_err) => steady_state_bisection(model).map_err(|_| newton_err),
    }
}

pub fn steady_state_newton(model: &StateSpaceModel) -> Result<SteadyStateCovariance> {
    model.validate()?;
    let scale = model.rate_scale();
    let m = if scale > 0.0 {
        model.rescaled(scale)
    } else {
        model.clone()
    };
    let mut v = lyapunov(&m.drift, &m.diffusion)?;
    let (mut f, t) = m.residual(&v);
    let mut norm = scaled_residual(&f, &t);
    let mut merit = frobenius(&f);
    for it in 1..=MAX_ITERATIONS {
        let j = jacobian(&m, &v);
        let rhs = unsym(&f);
        let Some(dx) = solve3(j, [-rhs[0], -rhs[1], -rhs[2]]) else {
            return Err(Error::Numerical("singular Newton Jacobian".into()));
        };
        let x = unsym(&v);
        let step_rel = (0..3)
            .map(|k| {
                if x[k] != 0.0 {
                    (dx[k] / x[k]).abs()
                } else {
                    dx[k].abs()
                }
            })
            .fold(0.0, f64::max);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand = sym([
                x[0] + alpha * dx[0],
                x[1] + alpha * dx[1],
                x[2] + alpha * dx[2],
            ]);
            if positive_definite(&cand) {
                let (cf, ct) = m.residual(&cand);
                let cn = scaled_residual(&cf, &ct);
                let cm = frobenius(&cf);
                if cm < merit || cn < norm || (cn <= 1e-13 && alpha == 1.0) {
                    accepted = Some((cand, cf, cn, cm));
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((cand, cf, cn, cm)) => {
                v = cand;
                f = cf;
                norm = cn;
                merit = cm;
            }
            None if norm <= 1e-12 => return finish(&v, norm, SolveMethod::Newton, it),
            None => {
                return Err(Error::NoConvergence {
                    what: "Riccati Newton iteration",
                    iterations: it,
                })
            }
        }
        if step_rel <= 1e-14 && norm <= 1e-12 {
            return finish(&v, norm, SolveMethod::Newton, it);
        }
    }
    Err(Error::NoConvergence {
        what: "Riccati Newton iteration",
        iterations: MAX_ITERATIONS,
    })
}

fn finish(
    v: &Mat2,
    residual: f64,
    method: SolveMethod,
    iterations: usize,
) -> Result<SteadyStateCovariance> {
    let matrix = [
        [v[0][0], 0.5 * (v[0][1] + v[1][0])],
        [0.5 * (v[0][1] + v[1][0]), v[1][1]],
    ];
    if !positive_definite(&matrix) {
        return Err(Error::Numerical(
            "steady-state covariance is indefinite".into(),
        ));
    }
    Ok(SteadyStateCovariance {
        matrix,
        residual,
        method,
        iterations,
    })
}

/// Bisection on `v_qq` through `c_qp = h²v_qq²/(2 a₁₂ r)` and the (1,2) equation.
/// Requires drift `[[0, a₁₂], [a₂₁, a₂₂]]`, diffusion only on `p`, a single
/// position-only measurement row and no noise correlation.
pub fn steady_state_bisection(model: &StateSpaceModel) -> Result<SteadyStateCovariance> {
    model.validate()?;
    let a = model.drift;
    let d = model.diffusion;
    let shape_ok = a[0][0] == 0.0
        && a[0][1] != 0.0
        && d[0][0] == 0.0
        && d[0][1] == 0.0
        && model.measurement.len() == 1
        && model.measurement[0][1] == 0.0
        && model.noise_correlation[0] == [0.0, 0.0];
    if !shape_ok {
        return Err(Error::invalid(
            "model",
            "bisection chain needs an oscillator-shaped model",
        ));
    }
    let scale = model.rate_scale();
    let m = model.rescaled(scale);
    let (a, d22) = (m.drift, m.diffusion[1][1]);
    let k = m.measurement[0][0].powi(2) / m.measurement_noise_psd;
    let chain = |v11: f64| {
        let v12 = k * v11 * v11 / (2.0 * a[0][1]);
        let v22 = (k * v11 * v12 - a[1][0] * v11 - a[1][1] * v12) / a[0][1];
        let f = 2.0 * a[1][0] * v12 + 2.0 * a[1][1] * v22 + d22 - k * v12 * v12;
        (v12, v22, f)
    };
    // f(0) = d22 > 0; find the first sign change going up.
    let mut hi = lyapunov(&m.drift, &m.diffusion)?[0][0].max(f64::MIN_POSITIVE);
    let mut grow = 0;
    while chain(hi).2 > 0.0 {
        hi *= 2.0;
        grow += 1;
        if grow > 2000 || !hi.is_finite() {
            return Err(Error::NoConvergence {
                what: "Riccati bisection bracket",
                iterations: grow,
            });
        }
    }
    let mut lo = f64::MIN_POSITIVE;
    let mut it = 0;
    while it < MAX_ITERATIONS {
        it += 1;
        let mid = if lo > 0.0 && hi / lo > 4.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            break;
        }
        if chain(mid).2 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if hi - lo > 4.0 * f64::EPSILON * hi {
        return Err(Error::NoConvergence {
            what: "Riccati bisection",
            iterations: it,
        });
    }
    let v11 = 0.5 * (lo + hi);
    let (v12, v22, _) = chain(v11);
    let v = sym([v11, v12, v22]);
    let (f, t) = m.residual(&v);
    finish(&v, scaled_residual(&f, &t), SolveMethod::Bisection, it)
}
