//! Dual functionals G_{φ,η}, exact Hilbert inverses and Gauss–Legendre quadrature.

use std::collections::BTreeMap;

use crate::boxmesh::{AxisBox, BoxMesh};
use crate::bspline::{KnotVector, TensorBSpline};
use crate::error::{Error, Result};
use crate::multiindex::{binomial, box_indices};
use crate::polyblossom::blossom_monomial;

/// Largest degree supported by the exact Hilbert inverse.
pub const MAX_HILBERT_DEGREE: usize = 10;

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre_1d(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order.max(1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor Gauss–Legendre rule on a box.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Per-axis nodes and weights mapped to the box.
    pub axis_nodes: Vec<Vec<f64>>,
    pub axis_weights: Vec<Vec<f64>>,
}

/// Exact for polynomials of degree ≤ 2·order − 1 per axis.
pub fn gauss_legendre(order: usize, b: &AxisBox) -> QuadratureRule {
    let (x, w) = gauss_legendre_1d(order);
    let n = b.dim();
    let mut axis_nodes = Vec::with_capacity(n);
    let mut axis_weights = Vec::with_capacity(n);
    for i in 0..n {
        let (lo, hi) = (b.lo()[i], b.hi()[i]);
        let half = 0.5 * (hi - lo);
        axis_nodes.push(x.iter().map(|t| lo + half * (t + 1.0)).collect::<Vec<_>>());
        axis_weights.push(w.iter().map(|wi| wi * half).collect::<Vec<_>>());
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for m in box_indices(&vec![x.len() - 1; n]) {
        let e = m.entries();
        points.push((0..n).map(|i| axis_nodes[i][e[i]]).collect());
        weights.push((0..n).map(|i| axis_weights[i][e[i]]).product());
    }
    QuadratureRule { points, weights, axis_nodes, axis_weights }
}

/// Exact inverse of the Hilbert matrix H_d = [1/(s+t−1)]_{s,t=1}^{d+1}.
pub fn hilbert_inverse(d: usize) -> Result<Vec<Vec<i128>>> {
    if d > MAX_HILBERT_DEGREE {
        return Err(Error::DegreeTooLarge(d, MAX_HILBERT_DEGREE));
    }
    let n = d + 1;
    let b = |a: usize, k: usize| binomial(a, k).unwrap() as i128;
    let mut out = vec![vec![0i128; n]; n];
    for i in 1..=n {
        for j in 1..=n {
            let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
            let c = b(i + j - 2, i - 1);
            out[i - 1][j - 1] = sign * (i + j - 1) as i128 * b(n + i - 1, n - j) * b(n + j - 1, n - i) * c * c;
        }
    }
    Ok(out)
}

/// ‖H_d⁻¹‖_∞ (maximal absolute row sum).
pub fn hilbert_inverse_norm(d: usize) -> Result<f64> {
    let h = hilbert_inverse(d)?;
    Ok(h.iter().map(|row| row.iter().map(|v| v.unsigned_abs() as f64).sum::<f64>()).fold(0.0, f64::max))
}

fn split_i128(v: i128) -> (f64, f64) {
    let hi = v as f64;
    let lo = (v - hi as i128) as f64;
    (hi, lo)
}

/// Compensated dot product of an integer row with a float vector.
fn exact_row_dot(row: &[i128], b: &[f64]) -> f64 {
    let (mut s, mut comp) = (0.0f64, 0.0f64);
    let mut add = |x: f64| {
        let t = s + x;
        if s.abs() >= x.abs() {
            comp += (s - t) + x;
        } else {
            comp += (x - t) + s;
        }
        s = t;
    };
    for (&h, &bv) in row.iter().zip(b) {
        let (hi, lo) = split_i128(h);
        for part in [hi, lo] {
            let p = part * bv;
            let e = part.mul_add(bv, -p);
            add(p);
            add(e);
        }
    }
    s + comp
}

/// Maps x ∈ η to t = (x − min η)/|η|.
fn to_local(x: f64, a: f64, l: f64) -> f64 {
    (x - a) / l
}

/// Monomial weight coefficients c with H_d c = b, bᵣ = 𝔠(tʳ, φ), in the local variable of [a, a+l].
pub fn hilbert_weights(phi: &KnotVector, a: f64, l: f64) -> Result<Vec<f64>> {
    let d = phi.degree();
    let hinv = hilbert_inverse(d)?;
    let u: Vec<f64> = phi.interior().iter().map(|&x| to_local(x, a, l)).collect();
    let b: Vec<f64> = (0..=d).map(|r| blossom_monomial(r, &u)).collect();
    Ok(hinv.iter().map(|row| exact_row_dot(row, &b)).collect())
}

/// Bernstein coefficients of the shifted Legendre polynomial P̃_j elevated to degree d.
fn shifted_legendre_bernstein(j: usize, d: usize) -> Vec<f64> {
    let mut beta: Vec<f64> = (0..=j)
        .map(|k| {
            let s = if (j - k) % 2 == 0 { 1.0 } else { -1.0 };
            s * binomial(j, k).unwrap() as f64
        })
        .collect();
    for m in j..d {
        let mut next = vec![0.0; m + 2];
        for k in 0..=m + 1 {
            let r = k as f64 / (m + 1) as f64;
            let left = if k > 0 { beta[k - 1] } else { 0.0 };
            let right = if k <= m { beta[k] } else { 0.0 };
            next[k] = r * left + (1.0 - r) * right;
        }
        beta = next;
    }
    beta
}

/// Polar form of a Bernstein polynomial on [0,1] at (u₁, …, u_d).
fn bernstein_polar(beta: &[f64], u: &[f64]) -> f64 {
    let mut b = beta.to_vec();
    for (r, &ur) in u.iter().enumerate() {
        for k in 0..b.len() - 1 - r {
            b[k] = (1.0 - ur) * b[k] + ur * b[k + 1];
        }
    }
    b[0]
}

/// Orthonormal Legendre coefficients of the weight w with ∫₀¹ w tʳ dt = 𝔠(tʳ, φ).
pub fn legendre_weights(phi: &KnotVector, a: f64, l: f64) -> Vec<f64> {
    let d = phi.degree();
    let u: Vec<f64> = phi.interior().iter().map(|&x| to_local(x, a, l)).collect();
    (0..=d)
        .map(|j| ((2 * j + 1) as f64).sqrt() * bernstein_polar(&shifted_legendre_bernstein(j, d), &u))
        .collect()
}

/// Σ aⱼ √(2j+1) P̃ⱼ(t).
pub fn eval_legendre_series(a: &[f64], t: f64) -> f64 {
    let s = 2.0 * t - 1.0;
    let (mut p0, mut p1) = (1.0, s);
    let mut acc = a[0];
    if a.len() > 1 {
        acc += a[1] * 3f64.sqrt() * p1;
    }
    for k in 1..a.len().saturating_sub(1) {
        let p2 = ((2 * k + 1) as f64 * s * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
        acc += a[k + 1] * ((2 * k + 3) as f64).sqrt() * p1;
    }
    acc
}

/// G_{φ,η}(f) = (1/μ(η)) ∫_η ∏ wᵢ f.
#[derive(Clone, Debug, PartialEq)]
pub struct GFunctional {
    generator: TensorBSpline,
    eta: AxisBox,
    weights: Vec<Vec<f64>>,
    cells: Vec<AxisBox>,
    order: usize,
}

impl GFunctional {
    pub fn generator(&self) -> &TensorBSpline {
        &self.generator
    }

    pub fn eta(&self) -> &AxisBox {
        &self.eta
    }

    /// Integration cells: η split along mesh lines.
    pub fn cells(&self) -> &[AxisBox] {
        &self.cells
    }

    /// Legendre coefficients of the weight per axis.
    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn weight(&self, x: &[f64]) -> f64 {
        (0..x.len())
            .map(|i| {
                let (a, l) = (self.eta.lo()[i], self.eta.size()[i]);
                eval_legendre_series(&self.weights[i], to_local(x[i], a, l))
            })
            .product()
    }

    pub fn apply(&self, f: &dyn Fn(&[f64]) -> f64) -> f64 {
        let n = self.eta.dim();
        let (a, l): (Vec<f64>, Vec<f64>) = (self.eta.lo().to_vec(), self.eta.size());
        let mut acc = 0.0;
        for cell in &self.cells {
            let q = gauss_legendre(self.order, cell);
            let w_axis: Vec<Vec<f64>> = (0..n)
                .map(|i| q.axis_nodes[i].iter().map(|&x| eval_legendre_series(&self.weights[i], to_local(x, a[i], l[i]))).collect())
                .collect();
            let m = q.axis_nodes[0].len();
            for (k, idx) in box_indices(&vec![m - 1; n]).into_iter().enumerate() {
                let e = idx.entries();
                let w: f64 = (0..n).map(|i| w_axis[i][e[i]]).product();
                acc += q.weights[k] * w * f(&q.points[k]);
            }
        }
        acc / self.eta.volume()
    }

    /// Upper bound for ‖G‖_{*p}·‖φ‖_p.
    pub fn norm_bound(&self, p: f64) -> Result<f64> {
        let inv_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
        let hphi = self.generator.size();
        let heta = self.eta.size();
        let mut c = 1.0;
        for (i, d) in self.generator.degree().into_iter().enumerate() {
            c *= ((d + 1) as f64).powf(1.0 - inv_p) * (hphi[i] / heta[i]).powf(d as f64 + inv_p) * hilbert_inverse_norm(d)?;
        }
        Ok(c)
    }
}

/// Build G_{φ,η}; η must lie in the support of φ. Quadrature is split along the mesh lines
/// of `mesh` when given.
pub fn build_g(phi: &TensorBSpline, eta: &AxisBox, mesh: Option<&BoxMesh>) -> Result<GFunctional> {
    if eta.dim() != phi.dim() {
        return Err(Error::DimensionMismatch { expected: phi.dim(), got: eta.dim() });
    }
    let supp = phi.support();
    let tol = 1e-12 * supp.diameter();
    if !supp.contains_box(eta, tol) {
        return Err(Error::EtaOutsideSupport);
    }
    let degree = phi.degree();
    if let Some(&d) = degree.iter().find(|&&d| d > MAX_HILBERT_DEGREE) {
        return Err(Error::DegreeTooLarge(d, MAX_HILBERT_DEGREE));
    }
    let weights = (0..phi.dim()).map(|i| legendre_weights(phi.axis(i), eta.lo()[i], eta.size()[i])).collect();
    let cells = match mesh {
        Some(m) => {
            let c: Vec<AxisBox> = m.elements_intersecting(eta).into_iter().filter_map(|w| m.element(w).intersection(eta)).collect();
            if c.is_empty() {
                vec![eta.clone()]
            } else {
                c
            }
        }
        None => vec![eta.clone()],
    };
    let order = degree.iter().max().copied().unwrap_or(0) + 2;
    Ok(GFunctional { generator: phi.clone(), eta: eta.clone(), weights, cells, order })
}

/// A dual functional: a single G or a linear combination of G's.
#[derive(Clone, Debug, PartialEq)]
pub enum DualFunctional {
    G(GFunctional),
    Composite(Vec<(f64, GFunctional)>),
}

impl DualFunctional {
    pub fn apply(&self, f: &dyn Fn(&[f64]) -> f64) -> f64 {
        match self {
            DualFunctional::G(g) => g.apply(f),
            DualFunctional::Composite(terms) => terms.iter().map(|(c, g)| c * g.apply(f)).sum(),
        }
    }

    pub fn members(&self) -> Vec<(f64, &GFunctional)> {
        match self {
            DualFunctional::G(g) => vec![(1.0, g)],
            DualFunctional::Composite(terms) => terms.iter().map(|(c, g)| (*c, g)).collect(),
        }
    }

    /// Bounding box of the integration domains.
    pub fn support(&self) -> AxisBox {
        let m = self.members();
        let mut b = m[0].1.eta.clone();
        for (_, g) in &m[1..] {
            b = b.hull(&g.eta);
        }
        b
    }

    pub fn norm_bound(&self, p: f64) -> Result<f64> {
        functional_norm_bound(self, p)
    }
}

pub fn apply_functional(lambda: &DualFunctional, f: &dyn Fn(&[f64]) -> f64) -> f64 {
    lambda.apply(f)
}

/// Closed-form bound for ‖λ‖_{*p}‖φ‖_p; composites use the triangle inequality.
pub fn functional_norm_bound(lambda: &DualFunctional, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidExponent(format!("p = {p}")));
    }
    let mut s = 0.0;
    for (c, g) in lambda.members() {
        s += c.abs() * g.norm_bound(p)?;
    }
    Ok(s)
}

/// Unfolds l(φ) = e_φ − Σ_{ψ∈N_φ} c_{ψ,φ} l(ψ) into flat coefficients z_{ψ,φ}.
/// `nesting[φ]` lists (ψ, c_{ψ,φ}) for ψ ∈ N_φ.
pub fn lr_coefficients(nesting: &[Vec<(usize, f64)>]) -> Result<Vec<BTreeMap<usize, f64>>> {
    let n = nesting.len();
    let mut memo: Vec<Option<BTreeMap<usize, f64>>> = vec![None; n];
    let mut state = vec![0u8; n];
    for start in 0..n {
        if memo[start].is_some() {
            continue;
        }
        // Iterative post-order DFS; state 1 = on stack, 2 = done.
        let mut stack = vec![(start, 0usize)];
        state[start] = 1;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if *next < nesting[v].len() {
                let (u, _) = nesting[v][*next];
                *next += 1;
                match state[u] {
                    0 => {
                        state[u] = 1;
                        stack.push((u, 0));
                    }
                    1 => return Err(Error::NestingCycle),
                    _ => {}
                }
            } else {
                let mut l = BTreeMap::new();
                l.insert(v, 1.0);
                for &(u, c) in &nesting[v] {
                    for (&k, &val) in memo[u].as_ref().expect("children are finished") {
                        *l.entry(k).or_insert(0.0) -= c * val;
                    }
                }
                memo[v] = Some(l);
                state[v] = 2;
                stack.pop();
            }
        }
    }
    Ok(memo
        .into_iter()
        .enumerate()
        .map(|(i, m)| {
            let mut m = m.expect("all visited");
            m.remove(&i);
            m
        })
        .collect())
}

/// λ_φ = G_{φ,η_φ} + Σ_{ψ∈N_φ} z_{ψ,φ} G_{ψ, supp φ}.
pub fn lr_lambda(
    target: usize,
    generators: &[TensorBSpline],
    eta: &AxisBox,
    z: &BTreeMap<usize, f64>,
    mesh: Option<&BoxMesh>,
) -> Result<DualFunctional> {
    let phi = &generators[target];
    let main = build_g(phi, eta, mesh)?;
    if z.is_empty() {
        return Ok(DualFunctional::G(main));
    }
    let supp = phi.support();
    let mut terms = vec![(1.0, main)];
    for (&psi, &c) in z {
        terms.push((c, build_g(&generators[psi], &supp, mesh)?));
    }
    Ok(DualFunctional::Composite(terms))
}
