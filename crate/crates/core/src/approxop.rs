//! The quasi-interpolant ℵf = Σ λ_φ(f)φ, averaged Taylor expansions and error norms.

use rayon::prelude::*;

use crate::boxmesh::AxisBox;
use crate::error::{Error, Result};
use crate::functionals::gauss_legendre;
use crate::multiindex::{binomial, box_indices, factorial, mi_binomial, vec_pow, IndexSet, KSets, MultiIndex};
use crate::polyblossom::Polynomial;
use crate::spaces::SplineSpace;

/// A function with (optionally) closed-form partial derivatives.
pub trait FunctionOracle: Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> f64;

    fn derivative(&self, alpha: &[usize], x: &[f64]) -> Result<f64> {
        if alpha.iter().all(|&a| a == 0) {
            Ok(self.eval(x))
        } else {
            Err(Error::DerivativeUnavailable(alpha.to_vec()))
        }
    }

    /// Largest total derivative order the oracle provides.
    fn derivative_order(&self) -> usize {
        0
    }
}

/// Oracle from a closure, without derivatives.
pub struct FnOracle<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnOracle<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnOracle { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> FunctionOracle for FnOracle<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

impl FunctionOracle for Polynomial {
    fn dim(&self) -> usize {
        Polynomial::dim(self)
    }

    fn eval(&self, x: &[f64]) -> f64 {
        Polynomial::eval(self, x)
    }

    fn derivative(&self, alpha: &[usize], x: &[f64]) -> Result<f64> {
        if alpha.len() != Polynomial::dim(self) {
            return Err(Error::DimensionMismatch { expected: Polynomial::dim(self), got: alpha.len() });
        }
        Ok(Polynomial::derivative(self, alpha).eval(x))
    }

    fn derivative_order(&self) -> usize {
        usize::MAX
    }
}

/// Largest relative discrepancy between first derivatives and central differences at
/// `points` (step h relative to the box size).
pub fn derivative_consistency(f: &dyn FunctionOracle, points: &[Vec<f64>], h: f64) -> Result<f64> {
    let n = f.dim();
    let mut worst: f64 = 0.0;
    for x in points {
        for i in 0..n {
            let mut e = vec![0; n];
            e[i] = 1;
            let exact = f.derivative(&e, x)?;
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[i] += h;
            xm[i] -= h;
            let fd = (f.eval(&xp) - f.eval(&xm)) / (2.0 * h);
            let scale = exact.abs().max(f.eval(x).abs()).max(1.0);
            worst = worst.max((exact - fd).abs() / scale);
        }
    }
    Ok(worst)
}

/// The operator ℵ on a spline space.
#[derive(Clone, Debug)]
pub struct QuasiInterpolant {
    space: SplineSpace,
}

impl QuasiInterpolant {
    pub fn new(space: SplineSpace) -> Self {
        QuasiInterpolant { space }
    }

    pub fn space(&self) -> &SplineSpace {
        &self.space
    }

    pub fn into_space(self) -> SplineSpace {
        self.space
    }

    /// Coefficients λ_φ(f) in generator order.
    pub fn apply(&self, f: &dyn FunctionOracle) -> Vec<f64> {
        let g = |x: &[f64]| f.eval(x);
        self.space.generators().par_iter().map(|phi| phi.functional().apply(&g)).collect()
    }

    pub fn eval(&self, coeffs: &[f64], x: &[f64], sigma: &[usize]) -> Result<f64> {
        self.space.eval(coeffs, x, sigma)
    }

    /// Per-generator bounds ‖λ_φ‖_{*p}‖φ‖_p; their maximum is a value for C_λ.
    pub fn functional_bounds(&self, p: f64) -> Result<Vec<f64>> {
        self.space.generators().iter().map(|g| g.functional().norm_bound(p)).collect()
    }

    /// max_φ max_i h_{esupp φ,i} / h_{φ,i}.
    pub fn c_esupp(&self) -> f64 {
        self.space
            .generators()
            .iter()
            .flat_map(|g| g.esupp().size().into_iter().zip(g.support().size()).map(|(e, s)| e / s))
            .fold(0.0, f64::max)
    }
}

pub fn apply_quasi_interp(q: &QuasiInterpolant, f: &dyn FunctionOracle) -> Vec<f64> {
    q.apply(f)
}

pub fn eval_quasi_interp(q: &QuasiInterpolant, coeffs: &[f64], x: &[f64], sigma: &[usize]) -> Result<f64> {
    q.eval(coeffs, x, sigma)
}

fn inv(p: f64) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidExponent(format!("{p}")))
    }
}

fn lattice(e: &AxisBox, m: usize) -> Vec<Vec<f64>> {
    (0..e.dim())
        .map(|i| (0..m).map(|k| e.lo()[i] + (e.hi()[i] - e.lo()[i]) * k as f64 / (m - 1) as f64).collect())
        .collect()
}

fn grid_points(coords: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let bound: Vec<usize> = coords.iter().map(|c| c.len() - 1).collect();
    box_indices(&bound).into_iter().map(|m| m.entries().iter().enumerate().map(|(i, &k)| coords[i][k]).collect()).collect()
}

fn oracle_values(f: &dyn FunctionOracle, sigma: &[usize], points: &[Vec<f64>]) -> Result<Vec<f64>> {
    points.iter().map(|x| f.derivative(sigma, x)).collect()
}

fn max_degree(space: &SplineSpace) -> usize {
    space.degree().iter().copied().max().unwrap_or(0)
}

/// ‖∂^σ(f − ℵf)‖_p over Ω: Gauss–Legendre of order max(d)+3 per element for p < ∞, a lattice
/// of 2·max(d)+5 points per axis and element for p = ∞.
pub fn error_norm(f: &dyn FunctionOracle, q: &QuasiInterpolant, coeffs: &[f64], p: f64, sigma: &[usize]) -> Result<f64> {
    check_exponent(p)?;
    let space = q.space();
    if p.is_infinite() {
        return lattice_error_max(f, q, coeffs, sigma, 2 * max_degree(space) + 5);
    }
    let order = max_degree(space) + 3;
    let mesh = space.mesh();
    let parts: Vec<Result<f64>> = (0..mesh.len())
        .into_par_iter()
        .map(|w| {
            let rule = gauss_legendre(order, mesh.element(w));
            let s = space.eval_element_grid(coeffs, w, &rule.axis_nodes, sigma);
            let fv = oracle_values(f, sigma, &rule.points)?;
            Ok(rule.weights.iter().zip(fv.iter().zip(&s)).map(|(wt, (a, b))| wt * (a - b).abs().powf(p)).sum())
        })
        .collect();
    let mut total = 0.0;
    for r in parts {
        total += r?;
    }
    Ok(total.powf(1.0 / p))
}

/// max |∂^σ(f − ℵf)| over an m-per-axis lattice on every element.
pub fn lattice_error_max(f: &dyn FunctionOracle, q: &QuasiInterpolant, coeffs: &[f64], sigma: &[usize], m: usize) -> Result<f64> {
    let space = q.space();
    let mesh = space.mesh();
    let m = m.max(2);
    let parts: Vec<Result<f64>> = (0..mesh.len())
        .into_par_iter()
        .map(|w| {
            let coords = lattice(mesh.element(w), m);
            let s = space.eval_element_grid(coeffs, w, &coords, sigma);
            let fv = oracle_values(f, sigma, &grid_points(&coords))?;
            Ok(fv.iter().zip(&s).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        })
        .collect();
    let mut worst: f64 = 0.0;
    for r in parts {
        worst = worst.max(r?);
    }
    Ok(worst)
}

/// ‖g‖_{q} of an elementwise-weighted derivative: g|_ω = weight(ω) · ∂^k f.
fn weighted_norm(f: &dyn FunctionOracle, space: &SplineSpace, k: &[usize], weight: &[f64], q: f64) -> Result<f64> {
    let mesh = space.mesh();
    let d = max_degree(space);
    let parts: Vec<Result<f64>> = (0..mesh.len())
        .into_par_iter()
        .map(|w| {
            let e = mesh.element(w);
            if q.is_infinite() {
                let pts = grid_points(&lattice(e, 2 * d + 5));
                let v = oracle_values(f, k, &pts)?;
                Ok(weight[w] * v.iter().map(|x| x.abs()).fold(0.0, f64::max))
            } else {
                let rule = gauss_legendre(d + 3, e);
                let v = oracle_values(f, k, &rule.points)?;
                Ok(weight[w].powf(q) * rule.weights.iter().zip(&v).map(|(a, b)| a * b.abs().powf(q)).sum::<f64>())
            }
        })
        .collect();
    let mut acc: f64 = 0.0;
    for r in parts {
        let v = r?;
        acc = if q.is_infinite() { acc.max(v) } else { acc + v };
    }
    Ok(if q.is_infinite() { acc } else { acc.powf(1.0 / q) })
}

/// Which right-hand side of the global estimate to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RhsForm {
    /// Σ_{K_σ} ‖h_M^{k−σ+ν₋} ∂^k f‖_q + Σ_{K_0} ‖ρ_{k,σ} ∂^k f‖_q.
    Global,
    /// Σ_{K_0} ‖h_Φ^k ∂^k f‖_q.
    Anisotropic,
}

/// Right-hand side seminorm of the global error estimate, with ν = 1/p − 1/q.
pub fn rhs_seminorm(
    f: &dyn FunctionOracle,
    q_op: &QuasiInterpolant,
    k: &KSets,
    sigma: &[usize],
    p: f64,
    q: f64,
    form: RhsForm,
) -> Result<f64> {
    check_exponent(p)?;
    check_exponent(q)?;
    let space = q_op.space();
    let mesh = space.mesh();
    let n = space.dim();
    let nu_minus = (inv(p) - inv(q)).min(0.0);
    let sets = space.active_sets();
    let esupps = space.esupps();
    let mut total = 0.0;
    match form {
        RhsForm::Global => {
            for kk in k.k_sigma.iter() {
                let expo: Vec<f64> = (0..n).map(|i| kk.entries()[i] as f64 - sigma[i] as f64 + nu_minus).collect();
                let wts: Vec<f64> =
                    mesh.elements().iter().map(|e| vec_pow(&e.size(), &expo)).collect::<Result<_>>()?;
                total += weighted_norm(f, space, kk.entries(), &wts, q)?;
            }
            for kk in k.k0.iter() {
                let expo: Vec<f64> = (0..n).map(|i| kk.entries()[i] as f64 - sigma[i] as f64 + nu_minus).collect();
                let mut wts = Vec::with_capacity(mesh.len());
                for gens in &sets.e {
                    let mut m: f64 = 0.0;
                    for &g in gens {
                        m = m.max(vec_pow(&esupps[g].size(), &expo)?);
                    }
                    wts.push(m);
                }
                total += weighted_norm(f, space, kk.entries(), &wts, q)?;
            }
        }
        RhsForm::Anisotropic => {
            let res = crate::boxmesh::local_resolution(mesh, &esupps, &sets)?;
            for kk in k.k0.iter() {
                let expo = kk.as_f64();
                let wts: Vec<f64> = res.h_phi.iter().map(|h| vec_pow(h, &expo)).collect::<Result<_>>()?;
                total += weighted_norm(f, space, kk.entries(), &wts, q)?;
            }
        }
    }
    Ok(total)
}

/// Weight of an averaged Taylor expansion: ψ_η = μ(η)⁻¹·1_η, or a smooth bump on η.
#[derive(Clone, Debug, PartialEq)]
pub enum TaylorWeight {
    Constant(AxisBox),
    Bump(AxisBox),
}

/// C_{α,A} = (−1)^{|α|} Σ_{β∈A, β≥α} binom(β, α).
pub fn taylor_constant(alpha: &MultiIndex, a: &IndexSet) -> Result<f64> {
    let mut s: f64 = 0.0;
    for beta in a.iter() {
        if alpha.le(beta) {
            s += mi_binomial(beta, alpha)? as f64;
        }
    }
    Ok(if alpha.order() % 2 == 0 { s } else { -s })
}

/// Coefficients of u^m(1−u)^m in the monomial basis.
fn bump_coeffs(m: usize) -> Vec<f64> {
    let mut c = vec![0.0; 2 * m + 1];
    for j in 0..=m {
        let b = binomial(m, j).expect("small binomial") as f64;
        c[m + j] = if j % 2 == 0 { b } else { -b };
    }
    c
}

fn poly1_derivative_eval(c: &[f64], k: usize, u: f64) -> f64 {
    let mut acc = 0.0;
    for j in (k..c.len()).rev() {
        let mut fall = 1.0;
        for t in 0..k {
            fall *= (j - t) as f64;
        }
        acc = acc * u + c[j] * fall;
    }
    acc
}

struct Bump {
    coeffs: Vec<Vec<f64>>,
    norm: f64,
    order: usize,
}

impl Bump {
    fn new(maxa: &[usize]) -> Self {
        let ms: Vec<usize> = maxa.iter().map(|m| m + 1).collect();
        let norm = ms.iter().map(|&m| factorial(2 * m + 1) / factorial(m).powi(2)).product();
        let order = 2 * ms.iter().copied().max().unwrap_or(1) + maxa.iter().copied().max().unwrap_or(0) + 8;
        Bump { coeffs: ms.iter().map(|&m| bump_coeffs(m)).collect(), norm, order }
    }

    /// ∂^α of ψ̂ at u ∈ [0,1]ⁿ.
    fn derivative(&self, alpha: &[usize], u: &[f64]) -> f64 {
        self.norm * (0..u.len()).map(|i| poly1_derivative_eval(&self.coeffs[i], alpha[i], u[i])).product::<f64>()
    }
}

fn taylor_setup(a: &IndexSet, f: &dyn FunctionOracle, x: &[f64]) -> Result<()> {
    if !a.is_downward_closed() {
        return Err(Error::NotDownwardClosed);
    }
    let n = a.dim();
    if x.len() != n || f.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len().min(f.dim()) });
    }
    Ok(())
}

/// T_{A,ψ}f(x). The constant weight uses derivatives of f; the bump weight only values of f,
/// through the integrated-by-parts form with the constants C_{α,A}.
pub fn averaged_taylor(a: &IndexSet, weight: &TaylorWeight, f: &dyn FunctionOracle, x: &[f64]) -> Result<f64> {
    taylor_setup(a, f, x)?;
    let eta = match weight {
        TaylorWeight::Constant(_) => return averaged_taylor_derivative_form(a, weight, f, x),
        TaylorWeight::Bump(eta) => eta,
    };
    let n = a.dim();
    let bump = Bump::new(&a.max_componentwise());
    let rule = gauss_legendre(bump.order, eta);
    let h = eta.size();
    let vol = eta.volume();
    let fvals: Vec<f64> = rule.points.iter().map(|y| f.eval(y)).collect();
    let mut acc = 0.0;
    for alpha in a.iter() {
        let c = taylor_constant(alpha, a)?;
        let ae = alpha.entries();
        let scale: f64 = (0..n).map(|i| h[i].powi(ae[i] as i32)).product();
        let mut s = 0.0;
        for ((y, wt), fv) in rule.points.iter().zip(&rule.weights).zip(&fvals) {
            let u: Vec<f64> = (0..n).map(|i| (y[i] - eta.lo()[i]) / h[i]).collect();
            let mono: f64 = (0..n).map(|i| (x[i] - y[i]).powi(ae[i] as i32)).product();
            s += wt * bump.derivative(ae, &u) / scale * mono * fv;
        }
        acc += c * s / (vol * alpha.factorial());
    }
    Ok(acc)
}

/// T_{A,ψ}f(x) = Σ_α ∫ ψ(y) (x−y)^α/α! ∂^α f(y) dy for either weight.
pub fn averaged_taylor_derivative_form(a: &IndexSet, weight: &TaylorWeight, f: &dyn FunctionOracle, x: &[f64]) -> Result<f64> {
    taylor_setup(a, f, x)?;
    let n = a.dim();
    let maxa = a.max_componentwise();
    let (eta, bump) = match weight {
        TaylorWeight::Constant(eta) => (eta, None),
        TaylorWeight::Bump(eta) => (eta, Some(Bump::new(&maxa))),
    };
    let order = bump.as_ref().map_or((maxa.iter().copied().max().unwrap_or(0) + 8).max(20), |b| b.order);
    let rule = gauss_legendre(order, eta);
    let h = eta.size();
    let vol = eta.volume();
    let zero = vec![0; n];
    let mut acc = 0.0;
    for (y, wt) in rule.points.iter().zip(&rule.weights) {
        let psi = match &bump {
            None => 1.0 / vol,
            Some(b) => {
                let u: Vec<f64> = (0..n).map(|i| (y[i] - eta.lo()[i]) / h[i]).collect();
                b.derivative(&zero, &u) / vol
            }
        };
        for alpha in a.iter() {
            let ae = alpha.entries();
            let mono: f64 = (0..n).map(|i| (x[i] - y[i]).powi(ae[i] as i32)).product();
            acc += wt * psi * mono / alpha.factorial() * f.derivative(ae, y)?;
        }
    }
    Ok(acc)
}

/// Whether (1/q, 1/p) lies in the region R_r of admissible exponent pairs.
pub fn sobolev_region_contains(r: usize, n: usize, p: f64, q: f64) -> bool {
    if r >= n {
        return true;
    }
    let (ip, iq) = (inv(p), inv(q));
    let rn = r as f64 / n as f64;
    let eps = 1e-14;
    if ip - iq + rn < -eps {
        return false;
    }
    let at = |a: f64, b: f64| (iq - a).abs() < eps && (ip - b).abs() < eps;
    !(at(rn, 0.0) || at(1.0, 1.0 - rn))
}
