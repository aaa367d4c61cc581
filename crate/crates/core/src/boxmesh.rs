//! Axis-aligned boxes, truncated boxes, box meshes and mesh-regularity constants.

use crate::error::{Error, Result};
use crate::multiindex::vec_pow;

/// Closed axis-aligned box ∏[loᵢ, hiᵢ] with loᵢ < hiᵢ.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        if lo.is_empty() {
            return Err(Error::Empty("box dimension"));
        }
        for i in 0..lo.len() {
            if !(lo[i] < hi[i]) || !lo[i].is_finite() || !hi[i].is_finite() {
                return Err(Error::DegenerateBox { axis: i });
            }
        }
        Ok(AxisBox { lo, hi })
    }

    pub fn unit(dim: usize) -> Self {
        AxisBox { lo: vec![0.0; dim], hi: vec![1.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    /// h_η = hi − lo.
    pub fn size(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).collect()
    }

    pub fn volume(&self) -> f64 {
        self.size().iter().product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn diameter(&self) -> f64 {
        self.size().iter().map(|h| h * h).sum::<f64>().sqrt()
    }

    pub fn contains_point(&self, x: &[f64], tol: f64) -> bool {
        x.iter().enumerate().all(|(i, &xi)| xi >= self.lo[i] - tol && xi <= self.hi[i] + tol)
    }

    pub fn contains_box(&self, other: &AxisBox, tol: f64) -> bool {
        (0..self.dim()).all(|i| other.lo[i] >= self.lo[i] - tol && other.hi[i] <= self.hi[i] + tol)
    }

    /// True when the open interiors intersect.
    pub fn interiors_intersect(&self, other: &AxisBox, tol: f64) -> bool {
        (0..self.dim()).all(|i| self.lo[i].max(other.lo[i]) < self.hi[i].min(other.hi[i]) - tol)
    }

    /// Intersection with nonempty interior, if any.
    pub fn intersection(&self, other: &AxisBox) -> Option<AxisBox> {
        let lo: Vec<f64> = (0..self.dim()).map(|i| self.lo[i].max(other.lo[i])).collect();
        let hi: Vec<f64> = (0..self.dim()).map(|i| self.hi[i].min(other.hi[i])).collect();
        AxisBox::new(lo, hi).ok()
    }

    /// Smallest box containing both.
    pub fn hull(&self, other: &AxisBox) -> AxisBox {
        AxisBox {
            lo: (0..self.dim()).map(|i| self.lo[i].min(other.lo[i])).collect(),
            hi: (0..self.dim()).map(|i| self.hi[i].max(other.hi[i])).collect(),
        }
    }
}

/// h_η for a box.
pub fn box_size(b: &AxisBox) -> Vec<f64> {
    b.size()
}

/// Smallest box containing all inputs.
pub fn bounding_box(boxes: &[AxisBox]) -> Result<AxisBox> {
    let first = boxes.first().ok_or(Error::Empty("bounding_box input"))?;
    let mut acc = first.clone();
    for b in &boxes[1..] {
        if b.dim() != acc.dim() {
            return Err(Error::DimensionMismatch { expected: acc.dim(), got: b.dim() });
        }
        acc = acc.hull(b);
    }
    Ok(acc)
}

/// closure(η \ β) where β is a corner box of η, or η itself.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedBox {
    outer: AxisBox,
    corner: Option<AxisBox>,
}

impl TruncatedBox {
    pub fn plain(outer: AxisBox) -> Self {
        TruncatedBox { outer, corner: None }
    }

    /// η with a corner β removed; β must lie in η, share a vertex with η and differ from η.
    pub fn new(outer: AxisBox, corner: AxisBox) -> Result<Self> {
        if corner.dim() != outer.dim() {
            return Err(Error::DimensionMismatch { expected: outer.dim(), got: corner.dim() });
        }
        if !outer.contains_box(&corner, 0.0) {
            return Err(Error::InvalidTruncatedBox("corner box is not inside the outer box".into()));
        }
        let mut proper = 0;
        for i in 0..outer.dim() {
            let at_lo = corner.lo[i] == outer.lo[i];
            let at_hi = corner.hi[i] == outer.hi[i];
            if !at_lo && !at_hi {
                return Err(Error::InvalidTruncatedBox(format!("corner box does not touch a vertex on axis {i}")));
            }
            if !(at_lo && at_hi) {
                proper += 1;
            }
        }
        if proper == 0 {
            return Err(Error::InvalidTruncatedBox("corner box equals the outer box".into()));
        }
        Ok(TruncatedBox { outer, corner: Some(corner) })
    }

    pub fn outer(&self) -> &AxisBox {
        &self.outer
    }

    pub fn corner(&self) -> Option<&AxisBox> {
        self.corner.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.outer.dim()
    }

    /// Size of the bounding box, which is the outer box.
    pub fn size(&self) -> Vec<f64> {
        self.outer.size()
    }

    pub fn measure(&self) -> f64 {
        self.outer.volume() - self.corner.as_ref().map_or(0.0, AxisBox::volume)
    }

    /// ω ⊆ closure(η \ β).
    pub fn contains_box(&self, b: &AxisBox, tol: f64) -> bool {
        if !self.outer.contains_box(b, tol) {
            return false;
        }
        match &self.corner {
            None => true,
            Some(c) => !c.interiors_intersect(b, tol),
        }
    }

    /// Shape classification: −1 for a box, 0 for an L-shape (2D) or Fichera corner (3D),
    /// 1 for an L-shape times an interval (3D).
    pub fn classify(&self) -> i32 {
        classify_truncated_box(self)
    }
}

pub fn classify_truncated_box(t: &TruncatedBox) -> i32 {
    let Some(c) = &t.corner else { return -1 };
    let n = t.dim();
    let proper = (0..n).filter(|&i| !(c.lo[i] == t.outer.lo[i] && c.hi[i] == t.outer.hi[i])).count();
    if proper <= 1 {
        -1
    } else {
        (n - proper) as i32
    }
}

/// Finite set of boxes with pairwise disjoint interiors.
#[derive(Clone, Debug)]
pub struct BoxMesh {
    elements: Vec<AxisBox>,
    bbox: AxisBox,
    tol: f64,
    breaks: Vec<Vec<f64>>,
    cell_owner: Vec<u32>,
}

const NO_ELEMENT: u32 = u32::MAX;

impl BoxMesh {
    /// Validates disjointness, sorts elements lexicographically by their lower corner
    /// and builds a point locator.
    pub fn new(mut elements: Vec<AxisBox>) -> Result<Self> {
        let bbox = bounding_box(&elements)?;
        let n = bbox.dim();
        for e in &elements {
            if e.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, got: e.dim() });
            }
        }
        elements.sort_by(|a, b| {
            for i in 0..n {
                match a.lo[i].partial_cmp(&b.lo[i]).unwrap() {
                    std::cmp::Ordering::Equal => continue,
                    o => return o,
                }
            }
            std::cmp::Ordering::Equal
        });
        let tol = 1e-12 * bbox.diameter();
        let mut breaks = Vec::with_capacity(n);
        for i in 0..n {
            let mut v: Vec<f64> = elements.iter().flat_map(|e| [e.lo[i], e.hi[i]]).collect();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut d: Vec<f64> = Vec::with_capacity(v.len());
            for x in v {
                if d.last().map_or(true, |&l| x - l > tol) {
                    d.push(x);
                }
            }
            breaks.push(d);
        }
        let dims: Vec<usize> = breaks.iter().map(|b| b.len() - 1).collect();
        let total: usize = dims.iter().product();
        let mut cell_owner = vec![NO_ELEMENT; total];
        let mut mesh = BoxMesh { elements, bbox, tol, breaks, cell_owner: Vec::new() };
        for (id, e) in mesh.elements.iter().enumerate() {
            let ranges = mesh.cell_ranges(e);
            for cell in cells_in(&ranges, &dims) {
                if cell_owner[cell] != NO_ELEMENT {
                    return Err(Error::OverlappingElements(cell_owner[cell] as usize, id));
                }
                cell_owner[cell] = id as u32;
            }
        }
        mesh.cell_owner = cell_owner;
        Ok(mesh)
    }

    /// Tensor mesh from strictly increasing breakpoints per axis.
    pub fn tensor(breaks: &[Vec<f64>]) -> Result<Self> {
        if breaks.is_empty() {
            return Err(Error::Empty("tensor mesh axes"));
        }
        let counts: Vec<usize> = breaks.iter().map(|b| b.len().saturating_sub(1)).collect();
        if counts.iter().any(|&c| c == 0) {
            return Err(Error::Empty("tensor mesh breakpoints"));
        }
        let mut elements = Vec::with_capacity(counts.iter().product());
        for idx in crate::multiindex::box_indices(&counts.iter().map(|c| c - 1).collect::<Vec<_>>()) {
            let lo = idx.entries().iter().enumerate().map(|(i, &k)| breaks[i][k]).collect();
            let hi = idx.entries().iter().enumerate().map(|(i, &k)| breaks[i][k + 1]).collect();
            elements.push(AxisBox::new(lo, hi)?);
        }
        BoxMesh::new(elements)
    }

    pub fn dim(&self) -> usize {
        self.bbox.dim()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[AxisBox] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &AxisBox {
        &self.elements[i]
    }

    pub fn bounding_box(&self) -> &AxisBox {
        &self.bbox
    }

    /// Geometric tolerance 1e-12 · diameter.
    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn measure(&self) -> f64 {
        self.elements.iter().map(AxisBox::volume).sum()
    }

    /// Distinct element boundary coordinates along an axis.
    pub fn breakpoints(&self, axis: usize) -> &[f64] {
        &self.breaks[axis]
    }

    fn grid_dims(&self) -> Vec<usize> {
        self.breaks.iter().map(|b| b.len() - 1).collect()
    }

    fn cell_ranges(&self, b: &AxisBox) -> Vec<(usize, usize)> {
        (0..self.dim())
            .map(|i| {
                // Cells [br[k], br[k+1]] whose interior meets (lo, hi).
                let br = &self.breaks[i];
                let cells = br.len() - 1;
                let first = br.partition_point(|&x| x <= b.lo[i] + self.tol).saturating_sub(1);
                let end = br.partition_point(|&x| x < b.hi[i] - self.tol).min(cells);
                (first, end)
            })
            .collect()
    }

    fn collect_owners(&self, b: &AxisBox) -> Vec<usize> {
        let ranges = self.cell_ranges(b);
        let mut ids: Vec<usize> = cells_in(&ranges, &self.grid_dims())
            .filter_map(|c| {
                let o = self.cell_owner[c];
                (o != NO_ELEMENT).then_some(o as usize)
            })
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Elements ω with ω ⊆ b.
    pub fn elements_in_box(&self, b: &AxisBox) -> Vec<usize> {
        self.collect_owners(b).into_iter().filter(|&i| b.contains_box(&self.elements[i], self.tol)).collect()
    }

    /// Elements ω with interior intersecting the interior of b.
    pub fn elements_intersecting(&self, b: &AxisBox) -> Vec<usize> {
        self.collect_owners(b).into_iter().filter(|&i| b.interiors_intersect(&self.elements[i], self.tol)).collect()
    }

    /// Element containing x; on shared faces the element on the upper side is chosen.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.dim() {
            return None;
        }
        let dims = self.grid_dims();
        let mut cell = 0;
        for i in 0..self.dim() {
            let br = &self.breaks[i];
            if x[i] < br[0] - self.tol || x[i] > br[br.len() - 1] + self.tol {
                return None;
            }
            let k = br.partition_point(|&b| b <= x[i]).saturating_sub(1).min(dims[i] - 1);
            cell = cell * dims[i] + k;
        }
        let o = self.cell_owner[cell];
        (o != NO_ELEMENT).then_some(o as usize)
    }
}

fn cells_in<'a>(ranges: &'a [(usize, usize)], dims: &'a [usize]) -> impl Iterator<Item = usize> + 'a {
    let bound: Vec<usize> = ranges.iter().map(|(a, b)| b.saturating_sub(*a)).collect();
    let empty = ranges.iter().any(|(a, b)| b <= a);
    let idx = if empty { Vec::new() } else { crate::multiindex::box_indices(&bound.iter().map(|b| b - 1).collect::<Vec<_>>()) };
    idx.into_iter().map(move |m| {
        let mut cell = 0;
        for (i, &k) in m.entries().iter().enumerate() {
            cell = cell * dims[i] + ranges[i].0 + k;
        }
        cell
    })
}

/// Elements of the mesh contained in a truncated box.
pub fn elements_in(mesh: &BoxMesh, region: &TruncatedBox) -> Vec<usize> {
    mesh.elements_in_box(region.outer())
        .into_iter()
        .filter(|&i| region.contains_box(mesh.element(i), mesh.tol()))
        .collect()
}

/// Incidence between generators and elements.
#[derive(Clone, Debug, PartialEq)]
pub struct ActiveSets {
    /// M_φ: elements in the support of each generator.
    pub m: Vec<Vec<usize>>,
    /// A_ω: generators whose support contains each element.
    pub a: Vec<Vec<usize>>,
    /// E_ω: generators whose extended support contains each element.
    pub e: Vec<Vec<usize>>,
}

impl ActiveSets {
    pub fn from_elements(mesh: &BoxMesh, m: Vec<Vec<usize>>, esupps: &[TruncatedBox]) -> Self {
        let mut a = vec![Vec::new(); mesh.len()];
        for (g, elems) in m.iter().enumerate() {
            for &w in elems {
                a[w].push(g);
            }
        }
        let mut e = vec![Vec::new(); mesh.len()];
        for (g, es) in esupps.iter().enumerate() {
            for w in elements_in(mesh, es) {
                e[w].push(g);
            }
        }
        ActiveSets { m, a, e }
    }
}

/// A_ω, E_ω and M_φ from support and extended-support regions.
pub fn active_sets(mesh: &BoxMesh, supports: &[TruncatedBox], esupps: &[TruncatedBox]) -> Result<ActiveSets> {
    if supports.len() != esupps.len() {
        return Err(Error::DimensionMismatch { expected: supports.len(), got: esupps.len() });
    }
    let m = supports.iter().map(|s| elements_in(mesh, s)).collect();
    Ok(ActiveSets::from_elements(mesh, m, esupps))
}

/// Per-element resolution vectors h_Φ|ω and h_M|ω.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolutionField {
    pub h_phi: Vec<Vec<f64>>,
    pub h_mesh: Vec<Vec<f64>>,
}

pub fn local_resolution(mesh: &BoxMesh, esupps: &[TruncatedBox], sets: &ActiveSets) -> Result<ResolutionField> {
    let mut h_phi = Vec::with_capacity(mesh.len());
    for (w, gens) in sets.e.iter().enumerate() {
        if gens.is_empty() {
            return Err(Error::Config(format!("element {w} lies in no extended support")));
        }
        let mut h = vec![0.0f64; mesh.dim()];
        for &g in gens {
            for (hi, si) in h.iter_mut().zip(esupps[g].size()) {
                *hi = hi.max(si);
            }
        }
        h_phi.push(h);
    }
    let h_mesh = mesh.elements().iter().map(AxisBox::size).collect();
    Ok(ResolutionField { h_phi, h_mesh })
}

/// Mesh-regularity constants of a generating system.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularityReport {
    pub gamma: Vec<f64>,
    pub p: f64,
    /// Γ_φ per generator.
    pub gamma_phi: Vec<f64>,
    pub gamma_max: f64,
    pub c_sharp: usize,
    pub c_m: f64,
    pub c_o: f64,
    pub c_a: f64,
    pub c_e: usize,
    pub c_g: f64,
}

/// One checked inequality value ≤ bound.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundCheck {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl BoundCheck {
    pub fn le(name: impl Into<String>, value: f64, bound: f64) -> Self {
        let pass = value <= bound * (1.0 + 1e-12) + 1e-300;
        BoundCheck { name: name.into(), value, bound, pass }
    }
}

fn aspect(h: &[f64]) -> f64 {
    let max = h.iter().cloned().fold(f64::MIN, f64::max);
    let min = h.iter().cloned().fold(f64::MAX, f64::min);
    max / min
}

pub fn regularity_report(
    mesh: &BoxMesh,
    sets: &ActiveSets,
    esupps: &[TruncatedBox],
    gamma: &[f64],
    p: f64,
) -> Result<RegularityReport> {
    let n = mesh.dim();
    if gamma.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: gamma.len() });
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidExponent(format!("p = {p}")));
    }
    let mut gamma_phi = Vec::with_capacity(esupps.len());
    for (g, elems) in sets.m.iter().enumerate() {
        let he = esupps[g].size();
        let val = if p.is_infinite() {
            let mut m: f64 = 0.0;
            for &w in elems {
                let ratio: Vec<f64> = mesh.element(w).size().iter().zip(&he).map(|(a, b)| a / b).collect();
                m = m.max(vec_pow(&ratio, gamma)?);
            }
            m
        } else {
            let expo: Vec<f64> = gamma.iter().map(|gi| gi * p + 1.0).collect();
            let mut s = 0.0;
            for &w in elems {
                let ratio: Vec<f64> = mesh.element(w).size().iter().zip(&he).map(|(a, b)| a / b).collect();
                s += vec_pow(&ratio, &expo)?;
            }
            s.powf(1.0 / p)
        };
        gamma_phi.push(val);
    }
    let gamma_max = gamma_phi.iter().cloned().fold(0.0, f64::max);
    let c_sharp = sets.m.iter().map(Vec::len).max().unwrap_or(0);
    let mut c_m: f64 = 0.0;
    let mut c_g: f64 = 0.0;
    for (w, gens) in sets.a.iter().enumerate() {
        let hw = mesh.element(w).size();
        let mut vmax: f64 = 0.0;
        let mut vmin = f64::INFINITY;
        for &g in gens {
            let he = esupps[g].size();
            for i in 0..n {
                c_m = c_m.max(he[i] / hw[i]);
            }
            let v: f64 = he.iter().product();
            vmax = vmax.max(v);
            vmin = vmin.min(v);
        }
        if !gens.is_empty() {
            c_g = c_g.max(vmax / vmin);
        }
    }
    let c_o = mesh.elements().iter().map(|e| aspect(&e.size())).fold(0.0, f64::max);
    let c_a = esupps.iter().map(|e| aspect(&e.size())).fold(0.0, f64::max);
    let c_e = sets.e.iter().map(Vec::len).max().unwrap_or(0);
    Ok(RegularityReport { gamma: gamma.to_vec(), p, gamma_phi, gamma_max, c_sharp, c_m, c_o, c_a, c_e, c_g })
}

impl RegularityReport {
    /// Upper bounds on Γ implied by the mesh constants, plus the shape-regularity sandwich.
    pub fn bound_checks(&self) -> Vec<BoundCheck> {
        let n = self.gamma.len() as f64;
        let inv_p = if self.p.is_infinite() { 0.0 } else { 1.0 / self.p };
        let mut out = Vec::new();
        if self.gamma.iter().all(|&g| g >= 0.0) {
            out.push(BoundCheck::le("gamma_nonnegative", self.gamma_max, 1.0));
        }
        if self.gamma.iter().all(|&g| g >= -inv_p - 1e-15) {
            let gmin = self.gamma.iter().cloned().fold(f64::INFINITY, f64::min);
            out.push(BoundCheck::le("gamma_above_minus_inv_p", self.gamma_max, (self.c_sharp as f64).powf(-gmin.min(0.0))));
        }
        let neg: f64 = self.gamma.iter().map(|g| (g + inv_p).min(0.0).abs()).sum();
        out.push(BoundCheck::le("gamma_general", self.gamma_max, self.c_m.powf(neg + n * inv_p)));
        out.push(BoundCheck::le("shape_lower", self.c_a / self.c_m, self.c_o));
        out.push(BoundCheck::le("shape_upper", self.c_o, self.c_m * self.c_a));
        out
    }
}
