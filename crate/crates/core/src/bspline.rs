//! Univariate and tensor-product B-splines: evaluation, knot insertion, norms and nesting.

use crate::boxmesh::AxisBox;
use crate::error::{Error, Result};
use crate::multiindex::factorial;

/// Which one-sided limit to take at a breakpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Local knot vector θ₁ ≤ … ≤ θ_{d+2} of a single univariate B-spline of degree d.
#[derive(Clone, Debug, PartialEq)]
pub struct KnotVector {
    knots: Vec<f64>,
}

/// Result of inserting one knot: φ = a·φ̂ + b·φ̃.
#[derive(Clone, Debug, PartialEq)]
pub struct KnotInsertion {
    pub a: f64,
    pub left: KnotVector,
    pub b: f64,
    pub right: KnotVector,
}

impl KnotVector {
    pub fn new(knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidKnots("at least two knots are required".into()));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidKnots("non-finite knot".into()));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidKnots("knots must be nondecreasing".into()));
        }
        if !(knots[knots.len() - 1] > knots[0]) {
            return Err(Error::InvalidKnots("empty support".into()));
        }
        Ok(KnotVector { knots })
    }

    pub fn degree(&self) -> usize {
        self.knots.len() - 2
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn start(&self) -> f64 {
        self.knots[0]
    }

    pub fn end(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    pub fn width(&self) -> f64 {
        self.end() - self.start()
    }

    /// θ₂, …, θ_{d+1}.
    pub fn interior(&self) -> &[f64] {
        &self.knots[1..self.knots.len() - 1]
    }

    pub fn multiplicity(&self, x: f64) -> usize {
        self.knots.iter().filter(|&&k| k == x).count()
    }

    /// Value with the right-continuous convention, using the left limit at the right
    /// support endpoint.
    pub fn eval(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }

    pub fn derivative(&self, x: f64, order: usize) -> f64 {
        let side = if x == self.end() { Side::Left } else { Side::Right };
        self.derivative_side(x, order, side)
    }

    pub fn eval_side(&self, x: f64, side: Side) -> f64 {
        self.derivative_side(x, 0, side)
    }

    /// One-sided derivative of the given order.
    pub fn derivative_side(&self, x: f64, order: usize, side: Side) -> f64 {
        let d = self.degree();
        if order > d || x < self.start() || x > self.end() {
            return 0.0;
        }
        let t = &self.knots;
        let p = d - order;
        // Degree-0 indicators on [t_k, t_{k+1}).
        let mut n: Vec<f64> = (0..=d)
            .map(|k| {
                let inside = match side {
                    Side::Right => t[k] <= x && x < t[k + 1],
                    Side::Left => t[k] < x && x <= t[k + 1],
                };
                if inside {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        for l in 1..=p {
            for j in 0..=(d - l) {
                let mut v = 0.0;
                let den1 = t[j + l] - t[j];
                if den1 > 0.0 {
                    v += (x - t[j]) / den1 * n[j];
                }
                let den2 = t[j + l + 1] - t[j + 1];
                if den2 > 0.0 {
                    v += (t[j + l + 1] - x) / den2 * n[j + 1];
                }
                n[j] = v;
            }
        }
        // n[j] = B_{j,p}, j = 0..=order; differentiate up to degree d.
        for k in 1..=order {
            let l = p + k;
            for j in 0..=(order - k) {
                let mut v = 0.0;
                let den1 = t[j + l] - t[j];
                if den1 > 0.0 {
                    v += n[j] / den1;
                }
                let den2 = t[j + l + 1] - t[j + 1];
                if den2 > 0.0 {
                    v -= n[j + 1] / den2;
                }
                n[j] = l as f64 * v;
            }
        }
        n[0]
    }

    /// ∫φ = h/(d+1).
    pub fn integral(&self) -> f64 {
        self.width() / (self.degree() + 1) as f64
    }

    /// Insert t̄ ∈ (θ₁, θ_{d+2}).
    pub fn insert(&self, t: f64) -> Result<KnotInsertion> {
        if !(t > self.start() && t < self.end()) {
            return Err(Error::InsertionOutsideSupport(t));
        }
        let d = self.degree();
        let th = &self.knots;
        let a = ((t - th[0]) / (th[d] - th[0])).min(1.0);
        let b = ((th[d + 1] - t) / (th[d + 1] - th[1])).min(1.0);
        let mut merged = th.clone();
        let pos = merged.partition_point(|&k| k <= t);
        merged.insert(pos, t);
        let left = KnotVector { knots: merged[..d + 2].to_vec() };
        let right = KnotVector { knots: merged[1..].to_vec() };
        Ok(KnotInsertion { a, left, b, right })
    }

    /// Δ_k = min_{ℓ=k+1..d+2} (θ_ℓ − θ_{ℓ−k}) for 1 ≤ k ≤ d+1.
    pub fn knot_difference(&self, k: usize) -> Result<f64> {
        let d = self.degree();
        if k == 0 || k > d + 1 {
            return Err(Error::InvalidIndex(format!("knot difference order {k} outside 1..={}", d + 1)));
        }
        Ok((k..=d + 1).map(|l| self.knots[l] - self.knots[l - k]).fold(f64::INFINITY, f64::min))
    }

    /// (lower, upper) bounds for ‖φ‖_p.
    pub fn norm_bounds(&self, p: f64) -> (f64, f64) {
        let h = self.width();
        let d1 = (self.degree() + 1) as f64;
        if p.is_infinite() {
            (1.0 / d1, 1.0)
        } else {
            (h.powf(1.0 / p) / d1, h.powf(1.0 / p) / d1.powf(1.0 / p))
        }
    }

    /// Upper bound for ‖∂^σφ‖_∞.
    pub fn derivative_bound(&self, sigma: usize) -> f64 {
        let d = self.degree();
        if sigma > d {
            return 0.0;
        }
        let mut b = factorial(d) * 2f64.powi(sigma as i32) / factorial(d - sigma);
        for k in (d + 1 - sigma)..=d {
            b /= self.knot_difference(k).unwrap_or(0.0);
        }
        b
    }
}

/// Open knot vector Ξ with end multiplicity d+1 and ξ_{i+d+1} > ξ_i.
#[derive(Clone, Debug, PartialEq)]
pub struct OpenKnotVector {
    knots: Vec<f64>,
    degree: usize,
}

impl OpenKnotVector {
    pub fn new(knots: Vec<f64>, degree: usize) -> Result<Self> {
        let m = knots.len();
        if m < 2 * (degree + 1) {
            return Err(Error::InvalidKnots(format!("{m} knots are too few for degree {degree}")));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) || knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidKnots("knots must be finite and nondecreasing".into()));
        }
        let (a, b) = (knots[0], knots[m - 1]);
        if !(b > a) {
            return Err(Error::InvalidKnots("empty domain".into()));
        }
        if knots[..=degree].iter().any(|&k| k != a) || knots[m - degree - 1..].iter().any(|&k| k != b) {
            return Err(Error::InvalidKnots("end knots must have multiplicity d+1".into()));
        }
        for i in 0..m - degree - 1 {
            if !(knots[i + degree + 1] > knots[i]) {
                return Err(Error::InvalidKnots("interior multiplicity exceeds d+1".into()));
            }
        }
        Ok(OpenKnotVector { knots, degree })
    }

    /// Open knot vector with simple interior knots at the given breakpoints.
    pub fn from_breakpoints(breaks: &[f64], degree: usize) -> Result<Self> {
        Self::with_multiplicity(breaks, degree, 1)
    }

    /// Open knot vector with every interior breakpoint repeated `mult` times.
    pub fn with_multiplicity(breaks: &[f64], degree: usize, mult: usize) -> Result<Self> {
        if breaks.len() < 2 {
            return Err(Error::InvalidKnots("at least two breakpoints are required".into()));
        }
        if breaks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidKnots("breakpoints must be strictly increasing".into()));
        }
        if mult == 0 || mult > degree + 1 {
            return Err(Error::InvalidKnots(format!("multiplicity {mult} outside 1..=d+1")));
        }
        let mut k = vec![breaks[0]; degree + 1];
        for &b in &breaks[1..breaks.len() - 1] {
            k.extend(std::iter::repeat(b).take(mult));
        }
        k.extend(std::iter::repeat(breaks[breaks.len() - 1]).take(degree + 1));
        Self::new(k, degree)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn basis_count(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn basis(&self, i: usize) -> KnotVector {
        KnotVector { knots: self.knots[i..i + self.degree + 2].to_vec() }
    }

    /// Distinct knot values.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.knots.clone();
        b.dedup();
        b
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }
}

/// Tensor-product B-spline φ(x) = ∏ φᵢ(xᵢ).
#[derive(Clone, Debug, PartialEq)]
pub struct TensorBSpline {
    axes: Vec<KnotVector>,
}

impl TensorBSpline {
    pub fn new(axes: Vec<KnotVector>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Empty("tensor B-spline axes"));
        }
        Ok(TensorBSpline { axes })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[KnotVector] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &KnotVector {
        &self.axes[i]
    }

    pub fn degree(&self) -> Vec<usize> {
        self.axes.iter().map(KnotVector::degree).collect()
    }

    pub fn support(&self) -> AxisBox {
        AxisBox::new(self.axes.iter().map(KnotVector::start).collect(), self.axes.iter().map(KnotVector::end).collect())
            .expect("knot vectors have nonempty support")
    }

    pub fn size(&self) -> Vec<f64> {
        self.axes.iter().map(KnotVector::width).collect()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.axes.iter().zip(x).map(|(k, &xi)| k.eval(xi)).product()
    }

    pub fn derivative(&self, x: &[f64], sigma: &[usize]) -> f64 {
        self.axes.iter().zip(x).zip(sigma).map(|((k, &xi), &s)| k.derivative(xi, s)).product()
    }

    pub fn derivative_side(&self, x: &[f64], sigma: &[usize], sides: &[Side]) -> f64 {
        let mut v = 1.0;
        for i in 0..self.dim() {
            v *= self.axes[i].derivative_side(x[i], sigma[i], sides[i]);
            if v == 0.0 {
                break;
            }
        }
        v
    }

    pub fn integral(&self) -> f64 {
        self.axes.iter().map(KnotVector::integral).product()
    }

    /// Tensor norm bounds: products of the univariate bounds.
    pub fn norm_bounds(&self, p: f64) -> (f64, f64) {
        self.axes.iter().map(|k| k.norm_bounds(p)).fold((1.0, 1.0), |(l, u), (a, b)| (l * a, u * b))
    }

    pub fn derivative_bound(&self, sigma: &[usize]) -> f64 {
        self.axes.iter().zip(sigma).map(|(k, &s)| k.derivative_bound(s)).product()
    }

    /// Knot regularity max_i Δ_{d+1}/Δ_{d−σ+1}; ∞ when a denominator vanishes.
    pub fn knot_regularity(&self, sigma: &[usize]) -> Result<f64> {
        knot_regularity(self, sigma)
    }
}

/// Minimal k-step knot difference along axis i.
pub fn knot_differences(phi: &TensorBSpline, i: usize, k: usize) -> Result<f64> {
    let axis = phi.axes.get(i).ok_or(Error::InvalidIndex(format!("axis {i}")))?;
    axis.knot_difference(k)
}

pub fn knot_regularity(phi: &TensorBSpline, sigma: &[usize]) -> Result<f64> {
    if sigma.len() != phi.dim() {
        return Err(Error::DimensionMismatch { expected: phi.dim(), got: sigma.len() });
    }
    let mut r: f64 = 1.0;
    for (axis, &s) in phi.axes.iter().zip(sigma) {
        let d = axis.degree();
        if s > d {
            return Err(Error::InvalidIndex(format!("σ = {s} exceeds degree {d}")));
        }
        let num = axis.knot_difference(d + 1)?;
        let den = axis.knot_difference(d + 1 - s)?;
        r = r.max(if den == 0.0 { f64::INFINITY } else { num / den });
    }
    Ok(r)
}

pub fn bspline_eval(phi: &TensorBSpline, x: &[f64]) -> f64 {
    phi.eval(x)
}

pub fn bspline_derivative(phi: &TensorBSpline, sigma: &[usize], x: &[f64]) -> f64 {
    phi.derivative(x, sigma)
}

pub fn bspline_integral(phi: &TensorBSpline) -> f64 {
    phi.integral()
}

pub fn knot_insert(phi: &KnotVector, t: f64) -> Result<KnotInsertion> {
    phi.insert(t)
}

pub fn norm_bounds(phi: &TensorBSpline, p: f64) -> Result<(f64, f64)> {
    if !(p >= 1.0) {
        return Err(Error::InvalidExponent(format!("p = {p}")));
    }
    Ok(phi.norm_bounds(p))
}

/// Refine a local knot sequence by inserting knots one at a time (Boehm). Returns the refined
/// sequence and the coefficients of the original B-spline in the B-splines of the refined one.
pub fn refine_univariate(coarse: &KnotVector, inserts: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    insert_knots(&coarse.knots, coarse.degree(), &[1.0], inserts)
}

/// Boehm insertion on a spline Σ cⱼ Bⱼ over the knot sequence `knots` of degree `degree`,
/// where Bⱼ has knots `knots[j..=j+degree+1]`.
pub fn insert_knots(knots: &[f64], degree: usize, coeffs: &[f64], inserts: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = degree;
    if knots.len() != coeffs.len() + d + 1 {
        return Err(Error::DimensionMismatch { expected: knots.len().saturating_sub(d + 1), got: coeffs.len() });
    }
    let mut tau = knots.to_vec();
    let mut c = coeffs.to_vec();
    for &t in inserts {
        if !(t > tau[0] && t < tau[tau.len() - 1]) {
            return Err(Error::InsertionOutsideSupport(t));
        }
        let m = c.len();
        let k = tau.partition_point(|&x| x <= t) - 1;
        let get = |j: isize| if j >= 0 && (j as usize) < m { c[j as usize] } else { 0.0 };
        let mut nc = Vec::with_capacity(m + 1);
        for j in 0..=m {
            let ji = j as isize;
            let v = if ji <= k as isize - d as isize {
                get(ji)
            } else if j <= k {
                let alpha = (t - tau[j]) / (tau[j + d] - tau[j]);
                alpha * get(ji) + (1.0 - alpha) * get(ji - 1)
            } else {
                get(ji - 1)
            };
            nc.push(v);
        }
        tau.insert(k + 1, t);
        c = nc;
    }
    Ok((tau, c))
}

fn count_eq(v: &[f64], x: f64) -> usize {
    v.iter().filter(|&&k| k == x).count()
}

/// Univariate refinement coefficient of φ in ψ; `None` unless φ is obtained from ψ by knot
/// insertion (or equals ψ).
pub fn nesting_coefficient_1d(phi: &KnotVector, psi: &KnotVector) -> Result<Option<f64>> {
    if phi.degree() != psi.degree() {
        return Ok(None);
    }
    let (a, b) = (psi.start(), psi.end());
    if phi.start() < a || phi.end() > b {
        return Ok(None);
    }
    if count_eq(&phi.knots, a) > count_eq(&psi.knots, a) || count_eq(&phi.knots, b) > count_eq(&psi.knots, b) {
        return Ok(None);
    }
    let mut inserts = Vec::new();
    let mut vals: Vec<f64> = phi.knots.iter().cloned().filter(|&x| x > a && x < b).collect();
    vals.dedup();
    for x in vals {
        let extra = count_eq(&phi.knots, x).saturating_sub(count_eq(&psi.knots, x));
        inserts.extend(std::iter::repeat(x).take(extra));
    }
    let (fine, coef) = refine_univariate(psi, &inserts)?;
    let d2 = phi.knots.len();
    for j in 0..coef.len() {
        if fine[j..j + d2] == phi.knots[..] {
            return Ok((coef[j] > 0.0).then_some(coef[j]));
        }
    }
    Ok(None)
}

/// c_{ψ,φ} when φ ≺ ψ (strictly), otherwise `None`.
pub fn nesting_relation(phi: &TensorBSpline, psi: &TensorBSpline) -> Result<Option<f64>> {
    if phi.dim() != psi.dim() {
        return Err(Error::DimensionMismatch { expected: psi.dim(), got: phi.dim() });
    }
    if phi == psi {
        return Ok(None);
    }
    let mut c = 1.0;
    for (f, s) in phi.axes.iter().zip(&psi.axes) {
        match nesting_coefficient_1d(f, s)? {
            Some(v) => c *= v,
            None => return Ok(None),
        }
    }
    Ok(Some(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kv(k: &[f64]) -> KnotVector {
        KnotVector::new(k.to_vec()).unwrap()
    }

    /// Degree-d B-spline from the truncated-power divided-difference definition.
    fn divided_difference_oracle(knots: &[f64], x: f64) -> f64 {
        let d = knots.len() - 2;
        let f = |t: f64| if t > x { (t - x).powi(d as i32) } else { 0.0 };
        let mut table: Vec<f64> = knots.iter().map(|&t| f(t)).collect();
        for level in 1..knots.len() {
            for j in 0..knots.len() - level {
                table[j] = (table[j + 1] - table[j]) / (knots[j + level] - knots[j]);
            }
        }
        table[0] * (knots[d + 1] - knots[0])
    }

    #[test]
    fn quadratic_midpoint() {
        assert!((kv(&[0.0, 1.0, 2.0, 3.0]).eval(1.5) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn matches_divided_differences() {
        let k = [0.0, 0.3, 1.1, 1.7, 2.0, 3.2];
        let phi = kv(&k);
        for i in 0..97 {
            let x = 3.2 * i as f64 / 97.0 + 1e-3;
            assert!((phi.eval(x) - divided_difference_oracle(&k, x)).abs() < 1e-12);
        }
    }

    #[test]
    fn insertion_example() {
        let r = kv(&[0.0, 1.0, 2.0, 3.0]).insert(1.5).unwrap();
        assert!((r.a - 0.75).abs() < 1e-15 && (r.b - 0.75).abs() < 1e-15);
        assert_eq!(r.left.knots(), &[0.0, 1.0, 1.5, 2.0]);
        assert_eq!(r.right.knots(), &[1.0, 1.5, 2.0, 3.0]);
        assert!(kv(&[0.0, 1.0, 2.0, 3.0]).insert(3.0).is_err());
        let near_end = kv(&[0.0, 1.0, 2.0, 3.0]).insert(3.0 - 1e-9).unwrap();
        assert!((near_end.a - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partition_of_unity_on_closed_domain() {
        let open = OpenKnotVector::new(vec![0.0, 0.0, 0.0, 0.4, 0.4, 1.0, 2.0, 2.0, 2.0], 2).unwrap();
        for i in 0..=1000 {
            let x = 2.0 * i as f64 / 1000.0;
            let s: f64 = (0..open.basis_count()).map(|j| open.basis(j).eval(x)).sum();
            assert!((s - 1.0).abs() < 1e-12, "x = {x}: {s}");
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let phi = kv(&[0.0, 0.5, 1.5, 2.0, 3.5]);
        for &x in &[0.2, 0.9, 1.7, 2.8] {
            let h = 1e-6;
            let fd = (phi.eval(x + h) - phi.eval(x - h)) / (2.0 * h);
            assert!((phi.derivative(x, 1) - fd).abs() < 1e-7);
            let fd2 = (phi.derivative(x + h, 1) - phi.derivative(x - h, 1)) / (2.0 * h);
            assert!((phi.derivative(x, 2) - fd2).abs() < 1e-6);
        }
    }

    #[test]
    fn knot_differences_and_regularity() {
        let phi = TensorBSpline::new(vec![kv(&[0.0, 1.0, 1.0, 3.0])]).unwrap();
        assert_eq!(knot_differences(&phi, 0, 1).unwrap(), 0.0);
        assert_eq!(knot_differences(&phi, 0, 3).unwrap(), 3.0);
        assert_eq!(knot_regularity(&phi, &[2]).unwrap(), f64::INFINITY);
        assert_eq!(knot_regularity(&phi, &[0]).unwrap(), 1.0);
        assert!(knot_differences(&phi, 0, 4).is_err());
    }

    #[test]
    fn nesting_single_insertion() {
        let psi = kv(&[0.0, 1.0, 2.0, 3.0]);
        let r = psi.insert(1.5).unwrap();
        assert!((nesting_coefficient_1d(&r.left, &psi).unwrap().unwrap() - r.a).abs() < 1e-15);
        assert!((nesting_coefficient_1d(&r.right, &psi).unwrap().unwrap() - r.b).abs() < 1e-15);
        // φ shares no insertion path with ψ.
        assert_eq!(nesting_coefficient_1d(&kv(&[0.0, 0.0, 1.0, 2.0]), &psi).unwrap(), None);
        assert_eq!(nesting_coefficient_1d(&kv(&[0.5, 1.5, 2.0, 3.0]), &psi).unwrap(), None);
    }

    #[test]
    fn nesting_is_path_independent() {
        // Refining with the same knots in two orders yields the same coefficients.
        let psi = kv(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let (f1, c1) = refine_univariate(&psi, &[1.5, 2.5, 2.5]).unwrap();
        let (f2, c2) = refine_univariate(&psi, &[2.5, 1.5, 2.5]).unwrap();
        assert_eq!(f1, f2);
        for (a, b) in c1.iter().zip(&c2) {
            assert!((a - b).abs() < 1e-14);
        }
        // Sum over the two insertion paths reaching the middle child.
        let first = psi.insert(1.5).unwrap();
        let l2 = first.left.insert(2.5).unwrap();
        let r2 = first.right.insert(2.5).unwrap();
        assert_eq!(l2.right, r2.left);
        let two_paths = first.a * l2.b + first.b * r2.a;
        let c = nesting_coefficient_1d(&l2.right, &psi).unwrap().unwrap();
        assert!((c - two_paths).abs() < 1e-14);
    }

    fn arb_knots(max_degree: usize) -> impl Strategy<Value = Vec<f64>> {
        (0..=max_degree).prop_flat_map(|d| {
            proptest::collection::vec(0u32..8, d + 2).prop_map(|mut v| {
                v.sort_unstable();
                if v[0] == v[v.len() - 1] {
                    let last = v.len() - 1;
                    v[last] += 1;
                }
                v.into_iter().map(|k| k as f64 * 0.25).collect()
            })
        })
    }

    fn lattice(phi: &KnotVector, m: usize) -> impl Iterator<Item = f64> + '_ {
        (0..=m).map(move |i| phi.start() + phi.width() * i as f64 / m as f64)
    }

    proptest! {
        #[test]
        fn insertion_identity(k in arb_knots(6), frac in 0.001f64..0.999) {
            let phi = kv(&k);
            let t = phi.start() + frac * phi.width();
            let r = phi.insert(t).unwrap();
            prop_assert!(r.a > 0.0 && r.a <= 1.0 && r.b > 0.0 && r.b <= 1.0);
            for x in lattice(&phi, 200) {
                let res = phi.eval(x) - r.a * r.left.eval(x) - r.b * r.right.eval(x);
                prop_assert!(res.abs() < 1e-12, "x = {}, residual {}", x, res);
            }
        }

        #[test]
        fn integral_and_positivity(k in arb_knots(6)) {
            let phi = kv(&k);
            let (xs, ws) = crate::functionals::gauss_legendre_1d(12);
            let mut breaks = k.clone();
            breaks.dedup();
            let mut integral = 0.0;
            for w in breaks.windows(2) {
                for (x, wt) in xs.iter().zip(&ws) {
                    let y = 0.5 * (w[0] + w[1]) + 0.5 * (w[1] - w[0]) * x;
                    let v = phi.eval(y);
                    prop_assert!(v >= -1e-15);
                    integral += 0.5 * (w[1] - w[0]) * wt * v;
                }
            }
            prop_assert!((integral - phi.integral()).abs() < 1e-12);
        }

        #[test]
        fn derivative_bound_holds(k in arb_knots(5), s in 0usize..3) {
            let phi = kv(&k);
            prop_assume!(s <= phi.degree());
            let bound = phi.derivative_bound(s);
            for x in lattice(&phi, 300) {
                for side in [Side::Left, Side::Right] {
                    prop_assert!(phi.derivative_side(x, s, side).abs() <= bound * (1.0 + 1e-12));
                }
            }
        }

        #[test]
        fn nesting_implies_support_inclusion(k in arb_knots(4), f1 in 0.01f64..0.99, f2 in 0.01f64..0.99) {
            let psi = kv(&k);
            let r = psi.insert(psi.start() + f1 * psi.width()).unwrap();
            let child = r.left;
            let t2 = child.start() + f2 * child.width();
            let r2 = child.insert(t2).unwrap();
            let big = TensorBSpline::new(vec![psi.clone()]).unwrap();
            for grand in [r2.left.clone(), r2.right.clone()] {
                let phi = TensorBSpline::new(vec![grand.clone()]).unwrap();
                let c = nesting_relation(&phi, &big).unwrap();
                prop_assert!(c.is_some());
                let c = c.unwrap();
                prop_assert!(big.support().contains_box(&phi.support(), 0.0));
                prop_assert!(c > 0.0 && c <= 1.0 + 1e-15);
            }
            // Refinement coefficients reproduce ψ pointwise.
            let (fine, coef) = refine_univariate(&psi, &[psi.start() + f1 * psi.width(), psi.start() + f2 * psi.width()]).unwrap();
            let d2 = psi.degree() + 2;
            for x in lattice(&psi, 100) {
                let s: f64 = (0..coef.len()).map(|j| coef[j] * kv(&fine[j..j + d2]).eval(x)).sum();
                prop_assert!((s - psi.eval(x)).abs() < 1e-12);
            }
        }

        #[test]
        fn smoothness_across_knots(k in arb_knots(5)) {
            let phi = kv(&k);
            let d = phi.degree();
            let mut distinct = k.clone();
            distinct.dedup();
            for &x in &distinct[1..distinct.len() - 1] {
                let m = phi.multiplicity(x);
                if m > d { continue; }
                for order in 0..=(d - m) {
                    let l = phi.derivative_side(x, order, Side::Left);
                    let r = phi.derivative_side(x, order, Side::Right);
                    let scale = 1.0 + phi.derivative_bound(order);
                    prop_assert!((l - r).abs() <= 1e-9 * scale, "order {} at {}: {} vs {}", order, x, l, r);
                }
            }
        }
    }
}
