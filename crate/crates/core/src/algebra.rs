//! Arithmetic shared by plain fields, scalars and truncated time-Taylor jets,
//! so that nonlinear formulas can be written once and evaluated either on
//! values or on their time derivatives.

use crate::spectral::SpectralField;

/// Operations needed by the modulation formulas.
pub trait FieldAlgebra: Clone {
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn scale(&self, s: f64) -> Self;
    fn offset(&self, c: f64) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn recip(&self) -> Self;
    /// Spatial derivative.
    fn dx(&self) -> Self;

    fn square(&self) -> Self {
        self.mul(self)
    }

    fn dxn(&self, n: u32) -> Self {
        (0..n).fold(self.clone(), |u, _| u.dx())
    }

    /// `self + s * other`.
    fn axpy(&self, s: f64, other: &Self) -> Self {
        self.add(&other.scale(s))
    }
}

impl FieldAlgebra for f64 {
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn scale(&self, s: f64) -> Self {
        self * s
    }
    fn offset(&self, c: f64) -> Self {
        self + c
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn recip(&self) -> Self {
        1.0 / self
    }
    fn dx(&self) -> Self {
        0.0
    }
}

impl FieldAlgebra for SpectralField {
    fn add(&self, o: &Self) -> Self {
        SpectralField::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        SpectralField::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        SpectralField::mul(self, o)
    }
    fn scale(&self, s: f64) -> Self {
        SpectralField::scale(self, s)
    }
    fn offset(&self, c: f64) -> Self {
        self.add_constant(c)
    }
    fn exp(&self) -> Self {
        if self.is_real() {
            self.map_real(f64::exp)
        } else {
            self.map_complex(|z| z.exp())
        }
    }
    fn ln(&self) -> Self {
        if self.is_real() {
            self.map_real(f64::ln)
        } else {
            self.map_complex(|z| z.ln())
        }
    }
    fn recip(&self) -> Self {
        if self.is_real() {
            self.map_real(|v| 1.0 / v)
        } else {
            self.map_complex(|z| z.inv())
        }
    }
    fn dx(&self) -> Self {
        self.derivative(1)
    }
    fn axpy(&self, s: f64, other: &Self) -> Self {
        SpectralField::axpy(self, s, other)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Truncated jet `(u, u_T, u_TT, ...)` of a time-dependent quantity.
///
/// Products and elementary functions propagate derivatives by the Leibniz
/// and Faa di Bruno recursions; results are truncated to the shorter operand.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet<F> {
    terms: Vec<F>,
}

impl<F: FieldAlgebra> Jet<F> {
    pub fn new(terms: Vec<F>) -> Self {
        assert!(!terms.is_empty(), "a jet needs at least its value");
        Self { terms }
    }

    pub fn constant(value: F) -> Self {
        Self { terms: vec![value] }
    }

    /// Highest time derivative carried.
    pub fn order(&self) -> usize {
        self.terms.len() - 1
    }

    pub fn value(&self) -> &F {
        &self.terms[0]
    }

    /// The `n`-th time derivative.
    pub fn term(&self, n: usize) -> &F {
        &self.terms[n]
    }

    pub fn terms(&self) -> &[F] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<F> {
        self.terms
    }

    /// Jet of the time derivative (drops the value, lowers the order by one).
    pub fn derivative(&self) -> Self {
        assert!(self.order() >= 1, "jet of order 0 has no time derivative");
        Self { terms: self.terms[1..].to_vec() }
    }

    /// Drops derivatives above `order`.
    pub fn truncate(&self, order: usize) -> Self {
        Self { terms: self.terms[..=order.min(self.order())].to_vec() }
    }

    /// Appends the next time derivative.
    pub fn push(&mut self, term: F) {
        self.terms.push(term);
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&F, &F) -> F) -> Self {
        let n = self.terms.len().min(other.terms.len());
        Self { terms: (0..n).map(|i| f(&self.terms[i], &other.terms[i])).collect() }
    }
}

impl<F: FieldAlgebra> FieldAlgebra for Jet<F> {
    fn add(&self, o: &Self) -> Self {
        self.zip_with(o, |a, b| a.add(b))
    }

    fn sub(&self, o: &Self) -> Self {
        self.zip_with(o, |a, b| a.sub(b))
    }

    fn mul(&self, o: &Self) -> Self {
        let n = self.terms.len().min(o.terms.len());
        let terms = (0..n)
            .map(|p| {
                let mut acc = self.terms[0].mul(&o.terms[p]);
                for k in 1..=p {
                    acc = acc.axpy(binomial(p, k), &self.terms[k].mul(&o.terms[p - k]));
                }
                acc
            })
            .collect();
        Self { terms }
    }

    fn scale(&self, s: f64) -> Self {
        Self { terms: self.terms.iter().map(|t| t.scale(s)).collect() }
    }

    fn offset(&self, c: f64) -> Self {
        let mut terms = self.terms.clone();
        terms[0] = terms[0].offset(c);
        Self { terms }
    }

    fn exp(&self) -> Self {
        let f = &self.terms;
        let mut g = vec![f[0].exp()];
        for n in 1..f.len() {
            let mut acc = f[1].mul(&g[n - 1]);
            for k in 1..n {
                acc = acc.axpy(binomial(n - 1, k), &f[k + 1].mul(&g[n - 1 - k]));
            }
            g.push(acc);
        }
        Self { terms: g }
    }

    fn ln(&self) -> Self {
        let f = &self.terms;
        let inv = f[0].recip();
        let mut h = vec![f[0].ln()];
        for n in 1..f.len() {
            let mut acc = f[n].clone();
            for k in 0..n.saturating_sub(1) {
                acc = acc.axpy(-binomial(n - 1, k), &h[k + 1].mul(&f[n - 1 - k]));
            }
            h.push(acc.mul(&inv));
        }
        Self { terms: h }
    }

    fn recip(&self) -> Self {
        let f = &self.terms;
        let inv = f[0].recip();
        let mut g = vec![inv.clone()];
        for n in 1..f.len() {
            let mut acc = f[1].mul(&g[n - 1]).scale(binomial(n, 1));
            for k in 2..=n {
                acc = acc.axpy(binomial(n, k), &f[k].mul(&g[n - k]));
            }
            g.push(acc.mul(&inv).scale(-1.0));
        }
        Self { terms: g }
    }

    fn dx(&self) -> Self {
        Self { terms: self.terms.iter().map(|t| t.dx()).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Jets of explicit functions of t at t = 0.7, against closed-form derivatives.
    fn jet_of(vals: [f64; 4]) -> Jet<f64> {
        Jet::new(vals.to_vec())
    }

    fn close(a: &Jet<f64>, b: [f64; 4]) {
        for (x, y) in a.terms().iter().zip(b) {
            assert!((x - y).abs() < 1e-12 * (1.0 + y.abs()), "{x} vs {y}");
        }
    }

    #[test]
    fn leibniz_product() {
        let t: f64 = 0.7;
        let s = jet_of([t.sin(), t.cos(), -t.sin(), -t.cos()]);
        let p = jet_of([t * t, 2.0 * t, 2.0, 0.0]);
        // d^n (t^2 sin t)
        let exact = [
            t * t * t.sin(),
            2.0 * t * t.sin() + t * t * t.cos(),
            2.0 * t.sin() + 4.0 * t * t.cos() - t * t * t.sin(),
            6.0 * t.cos() - 6.0 * t * t.sin() - t * t * t.cos(),
        ];
        close(&s.mul(&p), exact);
    }

    #[test]
    fn exp_ln_recip_chains() {
        let t: f64 = 0.7;
        let f = jet_of([t * t, 2.0 * t, 2.0, 0.0]);
        // e^{t^2}
        let e = (t * t).exp();
        let exact_exp = [
            e,
            2.0 * t * e,
            (2.0 + 4.0 * t * t) * e,
            (12.0 * t + 8.0 * t * t * t) * e,
        ];
        close(&f.exp(), exact_exp);

        let g = jet_of([1.0 + t * t, 2.0 * t, 2.0, 0.0]);
        let u = 1.0 + t * t;
        // ln(1 + t^2)
        let exact_ln = [
            u.ln(),
            2.0 * t / u,
            (2.0 - 2.0 * t * t) / (u * u),
            (4.0 * t * t * t - 12.0 * t) / (u * u * u),
        ];
        close(&g.ln(), exact_ln);
        // 1/(1 + t^2)
        let exact_recip = [
            1.0 / u,
            -2.0 * t / (u * u),
            (6.0 * t * t - 2.0) / (u * u * u),
            (24.0 * t - 24.0 * t * t * t) / (u * u * u * u),
        ];
        close(&g.recip(), exact_recip);
        close(&g.ln().exp(), [u, 2.0 * t, 2.0, 0.0]);
    }

    #[test]
    fn truncation_and_derivative() {
        let j = jet_of([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(j.derivative().terms(), &[2.0, 3.0, 4.0]);
        assert_eq!(j.truncate(1).terms(), &[1.0, 2.0]);
        let short = Jet::new(vec![1.0, 1.0]);
        assert_eq!(j.mul(&short).order(), 1);
    }
}
