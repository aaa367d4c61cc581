//! Polynomials in the monomial basis, blossoms and Marsden's identity.

use crate::boxmesh::AxisBox;
use crate::bspline::{KnotVector, TensorBSpline};
use crate::error::{Error, Result};
use crate::multiindex::{binomial, box_indices, MultiIndex};

/// Multivariate polynomial Σ c_α x^α stored densely over the box [0, degree].
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    degree: Vec<usize>,
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Polynomial { degree: vec![0; dim], coeffs: vec![0.0] }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Polynomial { degree: vec![0; dim], coeffs: vec![c] }
    }

    pub fn from_terms<I: IntoIterator<Item = (MultiIndex, f64)>>(dim: usize, terms: I) -> Result<Self> {
        let terms: Vec<(MultiIndex, f64)> = terms.into_iter().collect();
        let mut degree = vec![0; dim];
        for (m, _) in &terms {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: m.dim() });
            }
            for (d, &a) in degree.iter_mut().zip(m.entries()) {
                *d = (*d).max(a);
            }
        }
        let mut p = Polynomial { coeffs: vec![0.0; degree.iter().map(|d| d + 1).product()], degree };
        for (m, c) in terms {
            let i = p.offset(m.entries());
            p.coeffs[i] += c;
        }
        Ok(p)
    }

    pub fn monomial(alpha: &MultiIndex) -> Self {
        Polynomial::from_terms(alpha.dim(), [(alpha.clone(), 1.0)]).expect("dimension matches")
    }

    /// ∏ (xᵢ − aᵢ)^{kᵢ} / Lᵢ^{kᵢ} expanded in monomials.
    pub fn scaled_shifted_power(k: &[usize], a: &[f64], l: &[f64]) -> Self {
        let n = k.len();
        let mut p = Polynomial::constant(n, 1.0);
        for i in 0..n {
            let mut terms = Vec::new();
            for j in 0..=k[i] {
                let mut e = vec![0; n];
                e[i] = j;
                let c = binomial(k[i], j).unwrap() as f64 * (-a[i]).powi((k[i] - j) as i32) / l[i].powi(k[i] as i32);
                terms.push((MultiIndex::new(e), c));
            }
            p = p.mul(&Polynomial::from_terms(n, terms).unwrap());
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.degree.len()
    }

    /// Maximal exponent per axis of the storage box.
    pub fn degree(&self) -> &[usize] {
        &self.degree
    }

    fn offset(&self, e: &[usize]) -> usize {
        let mut o = 0;
        for (i, &a) in e.iter().enumerate() {
            o = o * (self.degree[i] + 1) + a;
        }
        o
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> f64 {
        if alpha.entries().iter().zip(&self.degree).any(|(a, d)| a > d) {
            return 0.0;
        }
        self.coeffs[self.offset(alpha.entries())]
    }

    /// Nonzero terms in lexicographic order.
    pub fn terms(&self) -> Vec<(MultiIndex, f64)> {
        box_indices(&self.degree)
            .into_iter()
            .zip(&self.coeffs)
            .filter(|(_, &c)| c != 0.0)
            .map(|(m, &c)| (m, c))
            .collect()
    }

    /// Horner evaluation, innermost over the last axis.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut cur = self.coeffs.clone();
        for axis in (0..self.dim()).rev() {
            let m = self.degree[axis] + 1;
            let outer = cur.len() / m;
            let mut next = Vec::with_capacity(outer);
            for o in 0..outer {
                let slice = &cur[o * m..(o + 1) * m];
                next.push(slice.iter().rev().fold(0.0, |acc, &c| acc * x[axis] + c));
            }
            cur = next;
        }
        cur[0]
    }

    /// ∂^σ p.
    pub fn derivative(&self, sigma: &[usize]) -> Self {
        let n = self.dim();
        let terms = self.terms().into_iter().filter_map(|(m, c)| {
            let mut e = Vec::with_capacity(n);
            let mut f = c;
            for (i, &a) in m.entries().iter().enumerate() {
                if a < sigma[i] {
                    return None;
                }
                for k in 0..sigma[i] {
                    f *= (a - k) as f64;
                }
                e.push(a - sigma[i]);
            }
            Some((MultiIndex::new(e), f))
        });
        let t: Vec<_> = terms.collect();
        if t.is_empty() {
            return Polynomial::zero(n);
        }
        Polynomial::from_terms(n, t).unwrap()
    }

    pub fn add(&self, other: &Polynomial) -> Self {
        let mut t = self.terms();
        t.extend(other.terms());
        if t.is_empty() {
            return Polynomial::zero(self.dim());
        }
        Polynomial::from_terms(self.dim(), t).unwrap()
    }

    pub fn scale(&self, s: f64) -> Self {
        Polynomial { degree: self.degree.clone(), coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn mul(&self, other: &Polynomial) -> Self {
        let mut t = Vec::new();
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                t.push((a.add(&b), ca * cb));
            }
        }
        if t.is_empty() {
            return Polynomial::zero(self.dim());
        }
        Polynomial::from_terms(self.dim(), t).unwrap()
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

pub fn poly_eval(g: &Polynomial, x: &[f64]) -> f64 {
    g.eval(x)
}

/// Elementary symmetric polynomials e_0..e_m of the values.
pub fn elementary_symmetric(values: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; values.len() + 1];
    e[0] = 1.0;
    for (j, &v) in values.iter().enumerate() {
        for k in (1..=j + 1).rev() {
            e[k] += v * e[k - 1];
        }
    }
    e
}

/// Blossom of x^k, k ≤ d, at the d interior knots: e_k(θ₂..θ_{d+1}) / C(d,k).
pub fn blossom_monomial(k: usize, interior: &[f64]) -> f64 {
    let d = interior.len();
    if k > d {
        return f64::NAN;
    }
    elementary_symmetric(interior)[k] / binomial(d, k).unwrap() as f64
}

/// 𝔠(g, φ): coefficient of φ in the B-spline expansion of g ∈ 𝒫_d.
pub fn blossom(g: &Polynomial, phi: &TensorBSpline) -> Result<f64> {
    if g.dim() != phi.dim() {
        return Err(Error::DimensionMismatch { expected: phi.dim(), got: g.dim() });
    }
    let d = phi.degree();
    let sym: Vec<Vec<f64>> = phi.axes().iter().map(|k| elementary_symmetric(k.interior())).collect();
    let mut acc = 0.0;
    for (m, c) in g.terms() {
        let mut v = c;
        for (i, &a) in m.entries().iter().enumerate() {
            if a > d[i] {
                return Err(Error::InvalidIndex(format!("monomial {m} exceeds degree {:?}", d)));
            }
            v *= sym[i][a] / binomial(d[i], a).unwrap() as f64;
        }
        acc += v;
    }
    Ok(acc)
}

/// ∏_{i=2}^{d+1} (y − θᵢ): the coefficient of φ in (y − x)^d.
pub fn marsden_coeff(y: f64, phi: &KnotVector) -> f64 {
    phi.interior().iter().map(|t| y - t).product()
}

/// Bernstein polynomials of degree d on Ω as tensor B-splines, lexicographic order.
pub fn bernstein_generators(degree: &[usize], omega: &AxisBox) -> Result<Vec<TensorBSpline>> {
    if degree.len() != omega.dim() {
        return Err(Error::DimensionMismatch { expected: omega.dim(), got: degree.len() });
    }
    let mut out = Vec::new();
    for idx in box_indices(degree) {
        let axes = idx
            .entries()
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                let d = degree[i];
                let mut knots = vec![omega.lo()[i]; d + 1 - k];
                knots.extend(std::iter::repeat(omega.hi()[i]).take(k + 1));
                KnotVector::new(knots)
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(TensorBSpline::new(axes)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bspline::OpenKnotVector;
    use proptest::prelude::*;

    fn kv(k: &[f64]) -> KnotVector {
        KnotVector::new(k.to_vec()).unwrap()
    }

    #[test]
    fn eval_examples() {
        let p = Polynomial::from_terms(2, [(MultiIndex::new(vec![1, 2]), 3.0), (MultiIndex::new(vec![0, 0]), 1.0)]).unwrap();
        assert_eq!(p.eval(&[2.0, 3.0]), 55.0);
        assert_eq!(p.derivative(&[0, 1]).eval(&[2.0, 3.0]), 36.0);
        assert_eq!(p.derivative(&[2, 0]), Polynomial::zero(2));
    }

    #[test]
    fn blossom_examples() {
        let phi = TensorBSpline::new(vec![kv(&[0.0, 1.0, 2.0, 3.0])]).unwrap();
        let x = Polynomial::monomial(&MultiIndex::new(vec![1]));
        assert!((blossom(&x, &phi).unwrap() - 1.5).abs() < 1e-15);
        let x2 = Polynomial::monomial(&MultiIndex::new(vec![2]));
        assert!((blossom(&x2, &phi).unwrap() - 2.0).abs() < 1e-15);
        let x3 = Polynomial::monomial(&MultiIndex::new(vec![3]));
        assert!(blossom(&x3, &phi).is_err());
    }

    #[test]
    fn marsden_example() {
        assert_eq!(marsden_coeff(0.5, &kv(&[0.0, 1.0, 2.0, 3.0])), (0.5 - 1.0) * (0.5 - 2.0));
    }

    #[test]
    fn bernstein_count_and_unity() {
        let g = bernstein_generators(&[2, 3], &AxisBox::unit(2)).unwrap();
        assert_eq!(g.len(), 12);
        let s: f64 = g.iter().map(|b| b.eval(&[0.3, 0.8])).sum();
        assert!((s - 1.0).abs() < 1e-14);
    }

    fn arb_open(max_degree: usize) -> impl Strategy<Value = OpenKnotVector> {
        (1..=max_degree, proptest::collection::vec(0.05f64..1.0, 1..6)).prop_map(|(d, gaps)| {
            let mut b = vec![0.0];
            for g in gaps {
                let last = *b.last().unwrap();
                b.push(last + g);
            }
            OpenKnotVector::from_breakpoints(&b, d).unwrap()
        })
    }

    proptest! {
        #[test]
        fn horner_matches_naive(c in proptest::collection::vec(-1.0f64..1.0, 9), x in -2.0f64..2.0, y in -2.0f64..2.0) {
            let terms: Vec<_> = box_indices(&[2, 2]).into_iter().zip(c.iter().cloned()).collect();
            let p = Polynomial::from_terms(2, terms.clone()).unwrap();
            let naive: f64 = terms.iter().map(|(m, c)| c * x.powi(m.entries()[0] as i32) * y.powi(m.entries()[1] as i32)).sum();
            prop_assert!((p.eval(&[x, y]) - naive).abs() < 1e-12);
        }

        #[test]
        fn marsden_reproduces_power(open in arb_open(5), yfrac in -1.0f64..2.0, xfrac in 0.0f64..1.0) {
            let (a, b) = open.domain();
            let y = a + yfrac * (b - a);
            let x = a + xfrac * (b - a);
            let d = open.degree() as i32;
            let s: f64 = (0..open.basis_count()).map(|j| marsden_coeff(y, &open.basis(j)) * open.basis(j).eval(x)).sum();
            prop_assert!((s - (y - x).powi(d)).abs() < 1e-10 * (1.0 + (y - x).abs().powi(d)));
        }

        #[test]
        fn blossom_expansion_reproduces(open in arb_open(4), c in proptest::collection::vec(-1.0f64..1.0, 5), xfrac in 0.0f64..1.0) {
            let d = open.degree();
            let terms: Vec<_> = (0..=d).map(|k| (MultiIndex::new(vec![k]), c[k])).collect();
            let g = Polynomial::from_terms(1, terms).unwrap();
            let (a, b) = open.domain();
            let x = a + xfrac * (b - a);
            let mut s = 0.0;
            for j in 0..open.basis_count() {
                let phi = TensorBSpline::new(vec![open.basis(j)]).unwrap();
                s += blossom(&g, &phi).unwrap() * phi.eval(&[x]);
            }
            prop_assert!((s - g.eval(&[x])).abs() < 1e-10);
        }

        #[test]
        fn blossom_is_symmetric_multiaffine(open in arb_open(4), j in 0usize..3) {
            // Permuting interior knots leaves the blossom unchanged.
            let j = j.min(open.basis_count() - 1);
            let phi = open.basis(j);
            let mut rev = phi.interior().to_vec();
            rev.reverse();
            let d = phi.degree();
            for k in 0..=d {
                prop_assert!((blossom_monomial(k, phi.interior()) - blossom_monomial(k, &rev)).abs() < 1e-12);
            }
        }
    }
}
