use std::cmp::Ordering;
use std::collections::HashSet;

use super::{Assembly, EtaPolicy, RawGenerator, SpaceKind, SplineSpace};
use crate::boxmesh::{AxisBox, BoxMesh};
use crate::bspline::{nesting_relation, TensorBSpline};
use crate::error::{Error, Result};
use crate::polyblossom::bernstein_generators;

/// An axis-aligned mesh-line segment {x_axis = position} × span, where the span lists
/// `[span_lo, span_hi]` for the remaining axes in increasing axis order.
#[derive(Clone, Debug, PartialEq)]
pub struct Meshline {
    pub axis: usize,
    pub position: f64,
    pub span_lo: Vec<f64>,
    pub span_hi: Vec<f64>,
    pub multiplicity: usize,
}

impl Meshline {
    pub fn new(axis: usize, position: f64, span_lo: Vec<f64>, span_hi: Vec<f64>) -> Self {
        Meshline { axis, position, span_lo, span_hi, multiplicity: 1 }
    }

    fn others(&self, n: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..n).filter(move |&a| a != self.axis).enumerate()
    }

    fn validate(&self, degree: &[usize], omega: &AxisBox) -> Result<()> {
        let n = degree.len();
        let bad = |m: &str| Err(Error::InvalidMeshline(m.to_string()));
        if self.axis >= n {
            return bad("axis out of range");
        }
        if self.span_lo.len() != n - 1 || self.span_hi.len() != n - 1 {
            return bad("span must have one interval per remaining axis");
        }
        if !(self.position > omega.lo()[self.axis] && self.position < omega.hi()[self.axis]) {
            return bad("position must lie inside the domain");
        }
        if self.multiplicity == 0 || self.multiplicity > degree[self.axis] + 1 {
            return bad("multiplicity must be between 1 and d+1");
        }
        for (k, a) in self.others(n) {
            if !(self.span_lo[k] < self.span_hi[k]) || self.span_lo[k] < omega.lo()[a] || self.span_hi[k] > omega.hi()[a] {
                return bad("span must be a nonempty interval inside the domain");
            }
        }
        Ok(())
    }

    /// Union with a collinear segment when the union is again a segment.
    fn merge(&self, other: &Meshline) -> Option<Meshline> {
        if self.axis != other.axis || self.position != other.position || self.multiplicity != other.multiplicity {
            return None;
        }
        let m = self.span_lo.len();
        let differing: Vec<usize> =
            (0..m).filter(|&k| self.span_lo[k] != other.span_lo[k] || self.span_hi[k] != other.span_hi[k]).collect();
        match differing.as_slice() {
            [] => Some(self.clone()),
            [k] => {
                let k = *k;
                if self.span_hi[k] < other.span_lo[k] || other.span_hi[k] < self.span_lo[k] {
                    return None;
                }
                let mut out = self.clone();
                out.span_lo[k] = self.span_lo[k].min(other.span_lo[k]);
                out.span_hi[k] = self.span_hi[k].max(other.span_hi[k]);
                Some(out)
            }
            _ => None,
        }
    }
}

/// Whether the segment cuts through the support of φ without being one of its knots (with
/// the segment's multiplicity).
pub fn traverses(line: &Meshline, phi: &TensorBSpline, tol: f64) -> bool {
    let kv = phi.axis(line.axis);
    if !(line.position > kv.start() && line.position < kv.end()) {
        return false;
    }
    if kv.multiplicity(line.position) >= line.multiplicity {
        return false;
    }
    line.others(phi.dim()).all(|(k, a)| {
        let s = phi.axis(a);
        line.span_lo[k] <= s.start() + tol && s.end() <= line.span_hi[k] + tol
    })
}

fn split(phi: &TensorBSpline, axis: usize, t: f64) -> Result<[TensorBSpline; 2]> {
    let ins = phi.axis(axis).insert(t)?;
    let mut left = phi.axes().to_vec();
    let mut right = phi.axes().to_vec();
    left[axis] = ins.left;
    right[axis] = ins.right;
    Ok([TensorBSpline::new(left)?, TensorBSpline::new(right)?])
}

fn key(phi: &TensorBSpline) -> Vec<u64> {
    let mut k = Vec::new();
    for a in phi.axes() {
        k.push(a.knots().len() as u64);
        k.extend(a.knots().iter().map(|v| v.to_bits()));
    }
    k
}

fn split_elements(elements: Vec<AxisBox>, line: &Meshline, tol: f64) -> Result<Vec<AxisBox>> {
    let n = line.span_lo.len() + 1;
    let mut out = Vec::with_capacity(elements.len() + 4);
    for e in elements {
        let (a, t) = (line.axis, line.position);
        let crosses = e.lo()[a] + tol < t && t < e.hi()[a] - tol;
        let meets = line.others(n).all(|(k, b)| line.span_lo[k] < e.hi()[b] - tol && e.lo()[b] + tol < line.span_hi[k]);
        if !(crosses && meets) {
            out.push(e);
            continue;
        }
        let covers = line.others(n).all(|(k, b)| line.span_lo[k] <= e.lo()[b] + tol && e.hi()[b] <= line.span_hi[k] + tol);
        if !covers {
            return Err(Error::InvalidMeshline(format!("segment at x{} = {t} ends inside an element", a + 1)));
        }
        let mut hi = e.hi().to_vec();
        hi[a] = t;
        let mut lo = e.lo().to_vec();
        lo[a] = t;
        out.push(AxisBox::new(e.lo().to_vec(), hi)?);
        out.push(AxisBox::new(lo, e.hi().to_vec())?);
    }
    Ok(out)
}

/// LR B-splines: Bernstein seeds on Ω split along each inserted segment until no generator
/// support is traversed by a segment; duplicates are merged.
pub fn build_lr(degree: &[usize], omega: &AxisBox, insertions: &[Meshline]) -> Result<SplineSpace> {
    if degree.len() != omega.dim() {
        return Err(Error::DimensionMismatch { expected: omega.dim(), got: degree.len() });
    }
    let tol = 1e-12 * omega.diameter();
    let mut gens = bernstein_generators(degree, omega)?;
    let mut elements = vec![omega.clone()];
    let mut lines: Vec<Meshline> = Vec::new();
    for ins in insertions {
        ins.validate(degree, omega)?;
        elements = split_elements(elements, ins, tol)?;
        lines.push(ins.clone());
        loop {
            let mut merged = false;
            'outer: for i in 0..lines.len() {
                for j in i + 1..lines.len() {
                    if let Some(m) = lines[i].merge(&lines[j]) {
                        lines[i] = m;
                        lines.remove(j);
                        merged = true;
                        break 'outer;
                    }
                }
            }
            if !merged {
                break;
            }
        }
        loop {
            let mut changed = false;
            let mut next = Vec::with_capacity(gens.len() + 8);
            let mut seen = HashSet::new();
            for g in gens {
                let parts = match lines.iter().find(|l| traverses(l, &g, tol)) {
                    Some(l) => {
                        changed = true;
                        split(&g, l.axis, l.position)?.to_vec()
                    }
                    None => vec![g],
                };
                for p in parts {
                    if seen.insert(key(&p)) {
                        next.push(p);
                    }
                }
            }
            gens = next;
            if !changed {
                break;
            }
        }
    }
    gens.sort_by(|a, b| {
        for (x, y) in a.axes().iter().zip(b.axes()) {
            for (u, v) in x.knots().iter().zip(y.knots()) {
                match u.total_cmp(v) {
                    Ordering::Equal => {}
                    o => return o,
                }
            }
        }
        Ordering::Equal
    });
    let mesh = BoxMesh::new(elements)?;
    let mut nesting = Vec::with_capacity(gens.len());
    for phi in &gens {
        let mut row = Vec::new();
        for (j, psi) in gens.iter().enumerate() {
            if let Some(c) = nesting_relation(phi, psi)? {
                row.push((j, c));
            }
        }
        nesting.push(row);
    }
    let element_level = vec![0; mesh.len()];
    let assembly = Assembly {
        kind: SpaceKind::Lr,
        degree: degree.to_vec(),
        mesh,
        raws: gens.into_iter().map(|g| RawGenerator::single(g, 0)).collect(),
        element_level,
        nesting,
    };
    SplineSpace::assemble(assembly, EtaPolicy::default())
}

/// N_φ with the coefficients c_{ψ,φ}, for every generator φ.
pub fn lr_nesting_sets(space: &SplineSpace) -> Vec<Vec<(usize, f64)>> {
    space.nesting().to_vec()
}
