//! Rational functions of ω: real-coefficient power spectra and complex
//! zero-pole-gain forms, with partial fractions and causal splitting.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Roots of `Σ a_k x^k` (ascending coefficients) by Aberth–Ehrlich iteration.
pub fn poly_roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    let mut a: Vec<C64> = coeffs.to_vec();
    while a.last().is_some_and(|c| c.norm() == 0.0) {
        a.pop();
    }
    if a.is_empty() {
        return Err(Error::invalid(
            "polynomial",
            "zero polynomial has no isolated roots",
        ));
    }
    let mut zero_roots = 0;
    while a.len() > 1 && a[0].norm() == 0.0 {
        a.remove(0);
        zero_roots += 1;
    }
    let n = a.len() - 1;
    let mut out = vec![C64::new(0.0, 0.0); zero_roots];
    if n == 0 {
        return Ok(out);
    }
    // x = s·z puts the roots near the unit circle.
    let s = (a[0].norm() / a[n].norm()).powf(1.0 / n as f64);
    let b: Vec<C64> = a
        .iter()
        .enumerate()
        .map(|(k, c)| c * s.powi(k as i32) / a[n])
        .collect();
    let eval = |z: C64| {
        let mut p = b[n];
        let mut dp = C64::new(0.0, 0.0);
        for k in (0..n).rev() {
            dp = dp * z + p;
            p = p * z + b[k];
        }
        (p, dp)
    };
    let mut z: Vec<C64> = (0..n)
        .map(|k| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4))
        .collect();
    let mut converged = false;
    for _ in 0..1000 {
        let mut biggest = 0.0f64;
        for i in 0..n {
            let (p, dp) = eval(z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let sum: C64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| 1.0 / (z[i] - z[j]))
                .sum();
            let w = ratio / (1.0 - ratio * sum);
            z[i] -= w;
            biggest = biggest.max(w.norm() / z[i].norm().max(1e-300));
        }
        if biggest < 1e-15 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            what: "polynomial root finder",
            iterations: 1000,
        });
    }
    for zi in z.iter_mut() {
        for _ in 0..2 {
            let (p, dp) = eval(*zi);
            if dp.norm() > 0.0 {
                *zi -= p / dp;
            }
        }
    }
    out.extend(z.into_iter().map(|r| r * s));
    Ok(out)
}

/// Ascending coefficients of `Π (x − r)`.
pub fn poly_from_roots(roots: &[C64]) -> Vec<C64> {
    let mut p = vec![C64::new(1.0, 0.0)];
    for r in roots {
        let mut q = vec![C64::new(0.0, 0.0); p.len() + 1];
        for (k, c) in p.iter().enumerate() {
            q[k + 1] += c;
            q[k] -= c * r;
        }
        p = q;
    }
    p
}

/// `num(ω)/den(ω)` with real ascending coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalSpectrum {
    pub numerator: Vec<f64>,
    pub denominator: Vec<f64>,
}

fn horner(c: &[f64], w: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * w + a)
}

impl RationalSpectrum {
    pub fn eval(&self, omega: f64) -> f64 {
        horner(&self.numerator, omega) / horner(&self.denominator, omega)
    }

    pub fn to_zpk(&self) -> Result<Zpk> {
        let lead = |c: &[f64]| c.iter().rev().copied().find(|x| *x != 0.0);
        let (Some(an), Some(bm)) = (lead(&self.numerator), lead(&self.denominator)) else {
            return Ok(Zpk::zero());
        };
        let cx = |c: &[f64]| c.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>();
        Ok(Zpk {
            gain: C64::new(an / bm, 0.0),
            zeros: poly_roots(&cx(&self.numerator))?,
            poles: poly_roots(&cx(&self.denominator))?,
        })
    }
}

/// `gain · Π(ω − z) / Π(ω − p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Zpk {
    pub gain: C64,
    pub zeros: Vec<C64>,
    pub poles: Vec<C64>,
}

impl Zpk {
    pub fn zero() -> Self {
        Zpk {
            gain: C64::new(0.0, 0.0),
            zeros: vec![],
            poles: vec![],
        }
    }

    pub fn constant(k: C64) -> Self {
        Zpk {
            gain: k,
            zeros: vec![],
            poles: vec![],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.gain.norm() == 0.0
    }

    pub fn eval(&self, omega: C64) -> C64 {
        let num: C64 = self.zeros.iter().map(|z| omega - z).product();
        let den: C64 = self.poles.iter().map(|p| omega - p).product();
        self.gain * num / den
    }

    pub fn eval_real(&self, omega: f64) -> C64 {
        self.eval(C64::new(omega, 0.0))
    }

    /// `conj(f(conj ω))`, which equals `f(ω)*` on the real axis.
    pub fn conj_reflect(&self) -> Self {
        Zpk {
            gain: self.gain.conj(),
            zeros: self.zeros.iter().map(|z| z.conj()).collect(),
            poles: self.poles.iter().map(|p| p.conj()).collect(),
        }
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::Numerical("reciprocal of the zero function".into()));
        }
        Ok(Zpk {
            gain: 1.0 / self.gain,
            zeros: self.poles.clone(),
            poles: self.zeros.clone(),
        })
    }

    pub fn mul(&self, other: &Zpk) -> Self {
        let mut z = self.zeros.clone();
        z.extend_from_slice(&other.zeros);
        let mut p = self.poles.clone();
        p.extend_from_slice(&other.poles);
        Zpk {
            gain: self.gain * other.gain,
            zeros: z,
            poles: p,
        }
        .cancel(1e-9)
    }

    pub fn scale(&self, k: C64) -> Self {
        Zpk {
            gain: self.gain * k,
            ..self.clone()
        }
    }

    /// Drop zero/pole pairs closer than `rel_tol` relative to their magnitude.
    pub fn cancel(mut self, rel_tol: f64) -> Self {
        if self.is_zero() {
            return Zpk::zero();
        }
        let mut i = 0;
        while i < self.zeros.len() {
            let z = self.zeros[i];
            let hit = self
                .poles
                .iter()
                .enumerate()
                .filter(|(_, p)| {
                    (z - *p).norm() <= rel_tol * z.norm().max(p.norm()).max(f64::MIN_POSITIVE)
                })
                .min_by(|a, b| (z - a.1).norm().total_cmp(&(z - b.1).norm()))
                .map(|(j, _)| j);
            match hit {
                Some(j) => {
                    self.zeros.remove(i);
                    self.poles.remove(j);
                }
                None => i += 1,
            }
        }
        self
    }

    pub fn relative_degree(&self) -> isize {
        self.poles.len() as isize - self.zeros.len() as isize
    }

    /// Expansion `direct + Σ r_j/(ω − p_j)`; needs simple poles and `deg num ≤ deg den`.
    pub fn partial_fractions(&self) -> Result<PartialFractions> {
        if self.is_zero() {
            return Ok(PartialFractions {
                direct: C64::new(0.0, 0.0),
                terms: vec![],
            });
        }
        if self.relative_degree() < 0 {
            return Err(Error::Numerical(
                "function does not decay at large |omega|".into(),
            ));
        }
        let direct = if self.relative_degree() == 0 {
            self.gain
        } else {
            C64::new(0.0, 0.0)
        };
        let mut terms = Vec::with_capacity(self.poles.len());
        for (j, &pj) in self.poles.iter().enumerate() {
            let mut r = self.gain;
            for z in &self.zeros {
                r *= pj - z;
            }
            for (k, &pk) in self.poles.iter().enumerate() {
                if k != j {
                    let d = pj - pk;
                    if d.norm() <= 1e-12 * pj.norm().max(pk.norm()) {
                        return Err(Error::Numerical(
                            "repeated pole in partial fractions".into(),
                        ));
                    }
                    r /= d;
                }
            }
            terms.push((pj, r));
        }
        Ok(PartialFractions { direct, terms })
    }

    /// Part analytic in the upper half-plane (supported on t ≥ 0).
    pub fn causal_part(&self) -> Result<PartialFractions> {
        self.partial_fractions()?.causal()
    }

    pub fn anticausal_part(&self) -> Result<PartialFractions> {
        self.partial_fractions()?.anticausal()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartialFractions {
    pub direct: C64,
    /// `(pole, residue)`.
    pub terms: Vec<(C64, C64)>,
}

impl PartialFractions {
    pub fn eval(&self, omega: C64) -> C64 {
        self.direct + self.terms.iter().map(|(p, r)| r / (omega - p)).sum::<C64>()
    }

    fn split(&self, keep_lower: bool) -> Result<Self> {
        let mut terms = Vec::new();
        for &(p, r) in &self.terms {
            if p.im == 0.0 {
                return Err(Error::Numerical(format!("pole on the real axis at {p}")));
            }
            if (p.im < 0.0) == keep_lower {
                terms.push((p, r));
            }
        }
        Ok(PartialFractions {
            direct: 0.5 * self.direct,
            terms,
        })
    }

    /// Lower-half-plane poles plus half the constant (the t = 0 mass).
    pub fn causal(&self) -> Result<Self> {
        self.split(true)
    }

    pub fn anticausal(&self) -> Result<Self> {
        self.split(false)
    }

    pub fn to_zpk(&self) -> Result<Zpk> {
        let poles: Vec<C64> = self.terms.iter().map(|t| t.0).collect();
        let mut num = vec![C64::new(0.0, 0.0); poles.len() + 1];
        for (k, c) in poly_from_roots(&poles).iter().enumerate() {
            num[k] += self.direct * c;
        }
        for (j, &(_, r)) in self.terms.iter().enumerate() {
            let others: Vec<C64> = poles
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != j)
                .map(|(_, p)| *p)
                .collect();
            for (k, c) in poly_from_roots(&others).iter().enumerate() {
                num[k] += r * c;
            }
        }
        // Trim numerically vanishing leading coefficients.
        let scale = num.iter().map(|c| c.norm()).fold(0.0, f64::max);
        while num.len() > 1 && num.last().unwrap().norm() <= 1e-14 * scale {
            num.pop();
        }
        if scale == 0.0 {
            return Ok(Zpk::zero());
        }
        let gain = *num.last().unwrap();
        Ok(Zpk {
            gain,
            zeros: poly_roots(&num)?,
            poles,
        }
        .cancel(1e-9))
    }

    /// `h(t)` for `t > 0`, excluding the delta from the constant term.
    pub fn impulse_at(&self, t: f64) -> C64 {
        if t < 0.0 {
            return C64::new(0.0, 0.0);
        }
        self.terms
            .iter()
            .filter(|(p, _)| p.im < 0.0)
            .map(|(p, r)| C64::new(0.0, -1.0) * r * (C64::new(0.0, -1.0) * p * t).exp())
            .sum()
    }
}

/// Causal factor `M` with `|M|² = S`: lower-half-plane zeros and poles, positive gain.
pub fn spectral_factor_rational(s: &RationalSpectrum) -> Result<Zpk> {
    let z = s.to_zpk()?;
    if z.is_zero() || !(z.gain.re > 0.0) {
        return Err(Error::NonPositiveSpectrum { omega: f64::NAN });
    }
    let pick = |roots: &[C64], what: &str| -> Result<Vec<C64>> {
        let mut lower = Vec::new();
        for r in roots {
            if r.im.abs() <= 1e-12 * r.norm().max(f64::MIN_POSITIVE) {
                return Err(Error::Numerical(format!(
                    "{what} root on the real axis at {r}"
                )));
            }
            if r.im < 0.0 {
                lower.push(*r);
            }
        }
        if 2 * lower.len() != roots.len() {
            return Err(Error::Numerical(format!(
                "{what} roots are not in conjugate pairs"
            )));
        }
        Ok(lower)
    };
    Ok(Zpk {
        gain: C64::new(z.gain.re.sqrt(), 0.0),
        zeros: pick(&z.zeros, "numerator")?,
        poles: pick(&z.poles, "denominator")?,
    })
}
