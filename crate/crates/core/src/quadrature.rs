//! Globally adaptive Gauss–Kronrod (7/15) quadrature for small vector integrands.

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 0.0,
            rel: 1e-10,
            max_intervals: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<const N: usize> {
    pub value: [f64; N],
    pub error: [f64; N],
}

struct Piece<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    error: [f64; N],
    key: f64,
}

impl<const N: usize> PartialEq for Piece<N> {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}
impl<const N: usize> Eq for Piece<N> {}
impl<const N: usize> PartialOrd for Piece<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const N: usize> Ord for Piece<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.total_cmp(&other.key)
    }
}

fn gk15<const N: usize, F: Fn(f64) -> [f64; N]>(f: &F, a: f64, b: f64) -> ([f64; N], [f64; N]) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = [0.0; N];
    let mut g = [0.0; N];
    for i in 0..N {
        k[i] = WGK[7] * fc[i];
        g[i] = WG[3] * fc[i];
    }
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        for i in 0..N {
            let s = f1[i] + f2[i];
            k[i] += WGK[j] * s;
            if j % 2 == 1 {
                g[i] += WG[j / 2] * s;
            }
        }
    }
    let mut value = [0.0; N];
    let mut err = [0.0; N];
    for i in 0..N {
        value[i] = k[i] * h;
        // |K15 − G7| bounds the G7 error; conservative for K15.
        err[i] = ((k[i] - g[i]) * h)
            .abs()
            .max(50.0 * f64::EPSILON * value[i].abs());
    }
    (value, err)
}

/// Integrate over consecutive intervals `[points[i], points[i+1]]`, refining
/// globally until every component meets `max(abs, rel·|I|)`.
pub fn integrate<const N: usize, F>(f: F, points: &[f64], tol: Tolerance) -> Result<Estimate<N>>
where
    F: Fn(f64) -> [f64; N],
{
    if points.len() < 2 {
        return Err(Error::invalid("points", "need at least two breakpoints"));
    }
    let mut heap = BinaryHeap::new();
    let mut total = [0.0; N];
    let mut total_err = [0.0; N];
    let mut raw = Vec::new();
    for w in points.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::invalid(
                "points",
                "breakpoints must be strictly increasing",
            ));
        }
        let (v, e) = gk15(&f, w[0], w[1]);
        for i in 0..N {
            total[i] += v[i];
            total_err[i] += e[i];
        }
        raw.push((w[0], w[1], v, e));
    }
    let scale = |t: &[f64; N]| -> [f64; N] {
        let mut s = [0.0; N];
        for i in 0..N {
            s[i] = tol.abs.max(tol.rel * t[i].abs()).max(f64::MIN_POSITIVE);
        }
        s
    };
    let key = |e: &[f64; N], s: &[f64; N]| (0..N).map(|i| e[i] / s[i]).fold(0.0, f64::max);
    let mut s = scale(&total);
    for (a, b, value, error) in raw {
        heap.push(Piece {
            a,
            b,
            value,
            error,
            key: key(&error, &s),
        });
    }
    let mut count = heap.len();
    loop {
        s = scale(&total);
        if (0..N).all(|i| total_err[i] <= s[i]) {
            break;
        }
        if count >= tol.max_intervals {
            return Err(Error::NoConvergence {
                what: "adaptive quadrature",
                iterations: count,
            });
        }
        let Some(worst) = heap.pop() else { break };
        let m = 0.5 * (worst.a + worst.b);
        if !(m > worst.a && m < worst.b) {
            // Interval exhausted in floating point; accept its contribution.
            heap.push(Piece { key: 0.0, ..worst });
            if heap.iter().all(|p| p.key == 0.0) {
                break;
            }
            continue;
        }
        let (v1, e1) = gk15(&f, worst.a, m);
        let (v2, e2) = gk15(&f, m, worst.b);
        for i in 0..N {
            total[i] += v1[i] + v2[i] - worst.value[i];
            total_err[i] += e1[i] + e2[i] - worst.error[i];
        }
        heap.push(Piece {
            a: worst.a,
            b: m,
            value: v1,
            error: e1,
            key: key(&e1, &s),
        });
        heap.push(Piece {
            a: m,
            b: worst.b,
            value: v2,
            error: e2,
            key: key(&e2, &s),
        });
        count += 1;
    }
    // Re-sum from pieces to shed accumulated update rounding.
    let mut value = [0.0; N];
    let mut error = [0.0; N];
    for p in heap.iter() {
        for i in 0..N {
            value[i] += p.value[i];
            error[i] += p.error[i];
        }
    }
    Ok(Estimate { value, error })
}

pub fn integrate_scalar<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    tol: Tolerance,
) -> Result<(f64, f64)> {
    let e = integrate(|x| [f(x)], points, tol)?;
    Ok((e.value[0], e.error[0]))
}

/// Gauss–Legendre nodes and weights on [−1, 1], via Newton on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
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
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}
