//! Spline spaces on box meshes: tensor-product (TPS), truncated hierarchical (THB) and
//! locally refined (LR) generating systems with their dual functionals.

mod lr;
mod thb;
mod tps;

pub use lr::{build_lr, lr_nesting_sets, traverses, Meshline};
pub use thb::{build_thb, thb_admissibility, ThbLevel};
pub use tps::build_tps;

use std::cmp::Ordering;

use crate::approxop::QuasiInterpolant;
use crate::boxmesh::{ActiveSets, AxisBox, BoxMesh, RegularityReport, TruncatedBox};
use crate::bspline::{Side, TensorBSpline};
use crate::error::{Error, Result};
use crate::functionals::{build_g, lr_coefficients, lr_lambda, DualFunctional};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    Tps,
    Thb,
    Lr,
}

/// Choice of the integration box η_φ of G_{φ,η_φ}.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum EtaPolicy {
    /// Largest mesh element in the support; for THB restricted to the generator's level.
    #[default]
    LargestElement,
    /// The whole support of the (untruncated) B-spline.
    Support,
}

/// One generator φ: a nonnegative combination of tensor B-splines (a single term unless
/// truncated) together with its dual functional.
#[derive(Clone, Debug)]
pub struct Generator {
    terms: Vec<(f64, TensorBSpline)>,
    base: TensorBSpline,
    level: usize,
    support: AxisBox,
    elements: Vec<usize>,
    esupp: TruncatedBox,
    functional: DualFunctional,
}

impl Generator {
    pub fn terms(&self) -> &[(f64, TensorBSpline)] {
        &self.terms
    }

    /// The untruncated B-spline the generator comes from.
    pub fn base(&self) -> &TensorBSpline {
        &self.base
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn is_truncated(&self) -> bool {
        self.terms.len() != 1 || self.terms[0].1 != self.base
    }

    /// Bounding box of the support.
    pub fn support(&self) -> &AxisBox {
        &self.support
    }

    /// M_φ.
    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    pub fn esupp(&self) -> &TruncatedBox {
        &self.esupp
    }

    pub fn functional(&self) -> &DualFunctional {
        &self.functional
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(c, b)| c * b.eval(x)).sum()
    }

    pub fn derivative_side(&self, x: &[f64], sigma: &[usize], sides: &[Side]) -> f64 {
        self.terms.iter().map(|(c, b)| c * b.derivative_side(x, sigma, sides)).sum()
    }
}

/// A generating system Φ on a box mesh.
#[derive(Clone, Debug)]
pub struct SplineSpace {
    kind: SpaceKind,
    degree: Vec<usize>,
    mesh: BoxMesh,
    generators: Vec<Generator>,
    element_level: Vec<usize>,
    active: Vec<Vec<usize>>,
    nesting: Vec<Vec<(usize, f64)>>,
    policy: EtaPolicy,
}

/// Generator data before functionals are assigned.
#[derive(Clone, Debug)]
pub(crate) struct RawGenerator {
    pub terms: Vec<(f64, TensorBSpline)>,
    pub base: TensorBSpline,
    pub level: usize,
}

impl RawGenerator {
    pub fn single(b: TensorBSpline, level: usize) -> Self {
        RawGenerator { terms: vec![(1.0, b.clone())], base: b, level }
    }
}

pub(crate) struct Assembly {
    pub kind: SpaceKind,
    pub degree: Vec<usize>,
    pub mesh: BoxMesh,
    pub raws: Vec<RawGenerator>,
    pub element_level: Vec<usize>,
    pub nesting: Vec<Vec<(usize, f64)>>,
}

impl SplineSpace {
    pub(crate) fn assemble(a: Assembly, policy: EtaPolicy) -> Result<Self> {
        let Assembly { kind, degree, mesh, raws, element_level, nesting } = a;
        let mut pre = Vec::with_capacity(raws.len());
        for (i, r) in raws.into_iter().enumerate() {
            let mut support = r.terms[0].1.support();
            for (_, t) in &r.terms[1..] {
                support = support.hull(&t.support());
            }
            let elements = if r.terms.len() == 1 {
                mesh.elements_intersecting(&support)
            } else {
                let mut e: Vec<usize> = r
                    .terms
                    .iter()
                    .filter(|(c, _)| *c > 0.0)
                    .flat_map(|(_, t)| mesh.elements_intersecting(&t.support()))
                    .collect();
                e.sort_unstable();
                e.dedup();
                e
            };
            if elements.is_empty() {
                return Err(Error::NoElementInSupport(i));
            }
            pre.push((r, support, elements));
        }
        let mut active = vec![Vec::new(); mesh.len()];
        for (g, (_, _, elems)) in pre.iter().enumerate() {
            for &w in elems {
                active[w].push(g);
            }
        }
        let mut space = SplineSpace {
            kind,
            degree,
            mesh,
            generators: Vec::with_capacity(pre.len()),
            element_level,
            active,
            nesting,
            policy,
        };
        let placeholder = |b: &TensorBSpline| build_g(b, &b.support(), None);
        for (r, support, elements) in pre {
            let functional = DualFunctional::G(placeholder(&r.base)?);
            let esupp = TruncatedBox::plain(support.clone());
            space.generators.push(Generator {
                terms: r.terms,
                base: r.base,
                level: r.level,
                support,
                elements,
                esupp,
                functional,
            });
        }
        space.assign(policy)?;
        Ok(space)
    }

    fn assign(&mut self, policy: EtaPolicy) -> Result<()> {
        let z = if self.kind == SpaceKind::Lr { Some(lr_coefficients(&self.nesting)?) } else { None };
        let bases: Vec<TensorBSpline> = self.generators.iter().map(|g| g.base.clone()).collect();
        let omega = self.mesh.bounding_box().clone();
        let mut out = Vec::with_capacity(self.generators.len());
        for (i, g) in self.generators.iter().enumerate() {
            let eta = self.choose_eta(g, policy);
            let functional = match &z {
                Some(z) => lr_lambda(i, &bases, &eta, &z[i], Some(&self.mesh))?,
                None => DualFunctional::G(build_g(&g.base, &eta, Some(&self.mesh))?),
            };
            let hull = g.support.hull(&functional.support());
            let esupp = TruncatedBox::plain(hull.intersection(&omega).unwrap_or(hull));
            out.push((functional, esupp));
        }
        for (g, (functional, esupp)) in self.generators.iter_mut().zip(out) {
            g.functional = functional;
            g.esupp = esupp;
        }
        self.policy = policy;
        Ok(())
    }

    fn choose_eta(&self, g: &Generator, policy: EtaPolicy) -> AxisBox {
        let supp = g.base.support();
        if policy == EtaPolicy::Support {
            return supp;
        }
        let center = supp.center();
        let dist = |b: &AxisBox| -> f64 { b.center().iter().zip(&center).map(|(a, c)| (a - c) * (a - c)).sum() };
        let tol = self.mesh.tol();
        let best = g
            .elements
            .iter()
            .copied()
            .filter(|&w| self.kind != SpaceKind::Thb || self.element_level[w] == g.level)
            .filter(|&w| supp.contains_box(self.mesh.element(w), tol))
            .min_by(|&a, &b| {
                let (ea, eb) = (self.mesh.element(a), self.mesh.element(b));
                eb.volume()
                    .partial_cmp(&ea.volume())
                    .unwrap_or(Ordering::Equal)
                    .then(dist(ea).partial_cmp(&dist(eb)).unwrap_or(Ordering::Equal))
                    .then(a.cmp(&b))
            });
        match best {
            Some(w) => self.mesh.element(w).clone(),
            None => supp,
        }
    }

    /// Rebuild all functionals with another η policy.
    pub fn with_eta_policy(mut self, policy: EtaPolicy) -> Result<Self> {
        self.assign(policy)?;
        Ok(self)
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn degree(&self) -> &[usize] {
        &self.degree
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    pub fn mesh(&self) -> &BoxMesh {
        &self.mesh
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn generator(&self, i: usize) -> &Generator {
        &self.generators[i]
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// Hierarchy level of each mesh element (all zero outside THB).
    pub fn element_levels(&self) -> &[usize] {
        &self.element_level
    }

    /// A_ω: generators that do not vanish on element ω.
    pub fn active(&self, w: usize) -> &[usize] {
        &self.active[w]
    }

    /// N_φ with c_{ψ,φ}; empty lists outside LR.
    pub fn nesting(&self) -> &[Vec<(usize, f64)>] {
        &self.nesting
    }

    pub fn eta_policy(&self) -> EtaPolicy {
        self.policy
    }

    pub fn esupps(&self) -> Vec<TruncatedBox> {
        self.generators.iter().map(|g| g.esupp.clone()).collect()
    }

    pub fn active_sets(&self) -> ActiveSets {
        ActiveSets::from_elements(&self.mesh, self.generators.iter().map(|g| g.elements.clone()).collect(), &self.esupps())
    }

    pub fn regularity_report(&self, gamma: &[f64], p: f64) -> Result<RegularityReport> {
        crate::boxmesh::regularity_report(&self.mesh, &self.active_sets(), &self.esupps(), gamma, p)
    }

    /// One-sided evaluation directions for a point of element w.
    pub fn sides_in(&self, w: usize, x: &[f64]) -> Vec<Side> {
        let e = self.mesh.element(w);
        let tol = self.mesh.tol();
        (0..x.len()).map(|i| if x[i] >= e.hi()[i] - tol { Side::Left } else { Side::Right }).collect()
    }

    /// Σ c_φ ∂^σφ(x); on shared faces the upper element's polynomial piece is used.
    pub fn eval(&self, coeffs: &[f64], x: &[f64], sigma: &[usize]) -> Result<f64> {
        if coeffs.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: coeffs.len() });
        }
        if x.len() != self.dim() || sigma.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len().min(sigma.len()) });
        }
        let w = self.mesh.locate(x).ok_or(Error::OutsideDomain)?;
        Ok(self.eval_in(coeffs, w, x, sigma))
    }

    /// Evaluation using the polynomial piece of element w.
    pub fn eval_in(&self, coeffs: &[f64], w: usize, x: &[f64], sigma: &[usize]) -> f64 {
        let e = self.mesh.element(w);
        let xc: Vec<f64> = (0..x.len()).map(|i| x[i].clamp(e.lo()[i], e.hi()[i])).collect();
        let sides = self.sides_in(w, &xc);
        self.active[w].iter().map(|&g| coeffs[g] * self.generators[g].derivative_side(&xc, sigma, &sides)).sum()
    }

    /// Values on the tensor lattice `coords[0] × … × coords[n−1]` inside element w, last axis
    /// fastest.
    pub fn eval_element_grid(&self, coeffs: &[f64], w: usize, coords: &[Vec<f64>], sigma: &[usize]) -> Vec<f64> {
        let n = self.dim();
        let e = self.mesh.element(w);
        let tol = self.mesh.tol();
        let local: Vec<Vec<(f64, Side)>> = (0..n)
            .map(|i| {
                coords[i]
                    .iter()
                    .map(|&x| {
                        let x = x.clamp(e.lo()[i], e.hi()[i]);
                        (x, if x >= e.hi()[i] - tol { Side::Left } else { Side::Right })
                    })
                    .collect()
            })
            .collect();
        let total: usize = coords.iter().map(Vec::len).product();
        let mut out = vec![0.0; total];
        let mut vals: Vec<Vec<f64>> = vec![Vec::new(); n];
        for &g in &self.active[w] {
            let c = coeffs[g];
            if c == 0.0 {
                continue;
            }
            for (s, b) in &self.generators[g].terms {
                let mut zero = false;
                for i in 0..n {
                    let kv = b.axis(i);
                    vals[i].clear();
                    vals[i].extend(local[i].iter().map(|&(x, side)| kv.derivative_side(x, sigma[i], side)));
                    if vals[i].iter().all(|&v| v == 0.0) {
                        zero = true;
                        break;
                    }
                }
                if !zero {
                    accumulate_outer(&mut out, c * s, &vals);
                }
            }
        }
        out
    }
}

/// out += s · vals[0] ⊗ … ⊗ vals[n−1].
fn accumulate_outer(out: &mut [f64], s: f64, vals: &[Vec<f64>]) {
    fn rec(out: &mut [f64], s: f64, vals: &[Vec<f64>]) {
        if vals.len() == 1 {
            for (o, v) in out.iter_mut().zip(&vals[0]) {
                *o += s * v;
            }
            return;
        }
        let stride = out.len() / vals[0].len();
        for (k, &v) in vals[0].iter().enumerate() {
            if v != 0.0 {
                rec(&mut out[k * stride..(k + 1) * stride], s * v, &vals[1..]);
            }
        }
    }
    rec(out, s, vals)
}

/// Wrap a space into the operator ℵ, rebuilding functionals with the given η policy.
pub fn assign_functionals(space: SplineSpace, policy: EtaPolicy) -> Result<QuasiInterpolant> {
    let space = if space.eta_policy() == policy { space } else { space.with_eta_policy(policy)? };
    Ok(QuasiInterpolant::new(space))
}
