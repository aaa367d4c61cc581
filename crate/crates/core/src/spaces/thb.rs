use std::collections::{BTreeMap, HashMap};

use super::{Assembly, EtaPolicy, RawGenerator, SpaceKind, SplineSpace};
use crate::boxmesh::{AxisBox, BoxMesh};
use crate::bspline::{insert_knots, OpenKnotVector, TensorBSpline};
use crate::error::{Error, Result};
use crate::multiindex::box_indices;

/// One level of a hierarchy: a TPS basis Ψᵢ and its domain Ωᵢ, given as half-open ranges of
/// level-i cell indices `(lo, hi)` per axis. The domain of the first level is the whole box
/// and its range list must be empty.
#[derive(Clone, Debug, PartialEq)]
pub struct ThbLevel {
    pub knots: Vec<OpenKnotVector>,
    pub domain: Vec<(Vec<usize>, Vec<usize>)>,
}

struct Level {
    knots: Vec<OpenKnotVector>,
    breaks: Vec<Vec<f64>>,
    cells: Vec<usize>,
    /// Cell of this level lies in Ωᵢ / in Ωᵢ₊₁.
    inside: Vec<bool>,
    inside_next: Vec<bool>,
}

impl Level {
    fn cell_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.cells).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    fn cell_box(&self, idx: &[usize]) -> AxisBox {
        let lo = (0..idx.len()).map(|a| self.breaks[a][idx[a]]).collect();
        let hi = (0..idx.len()).map(|a| self.breaks[a][idx[a] + 1]).collect();
        AxisBox::new(lo, hi).expect("breakpoints are distinct")
    }

    /// Per-axis half-open cell ranges covered by the support of basis function j.
    fn support_cells(&self, j: &[usize]) -> Vec<(usize, usize)> {
        (0..j.len())
            .map(|a| {
                let k = self.knots[a].knots();
                let d = self.knots[a].degree();
                let br = &self.breaks[a];
                let lo = br.partition_point(|&x| x < k[j[a]]);
                let hi = br.partition_point(|&x| x < k[j[a] + d + 1]);
                (lo, hi)
            })
            .collect()
    }

    fn support_flags(&self, j: &[usize]) -> (bool, bool) {
        let ranges = self.support_cells(j);
        let bound: Vec<usize> = ranges.iter().map(|(a, b)| b - a - 1).collect();
        let mut all_inside = true;
        let mut meets_ring = false;
        for off in box_indices(&bound) {
            let idx: Vec<usize> = off.entries().iter().zip(&ranges).map(|(o, r)| r.0 + o).collect();
            let c = self.cell_index(&idx);
            all_inside &= self.inside[c];
            meets_ring |= self.inside[c] && !self.inside_next[c];
        }
        (all_inside, meets_ring)
    }

    fn basis(&self, j: &[usize]) -> TensorBSpline {
        TensorBSpline::new(j.iter().zip(&self.knots).map(|(&ji, k)| k.basis(ji)).collect()).expect("nonempty axes")
    }
}

fn in_any(boxes: &[AxisBox], x: &[f64]) -> bool {
    boxes.iter().any(|b| b.contains_point(x, 0.0))
}

fn multiset_difference(fine: &[f64], coarse: &[f64]) -> Option<Vec<f64>> {
    let mut out = Vec::new();
    let mut i = 0;
    for &x in fine {
        if i < coarse.len() && coarse[i] == x {
            i += 1;
        } else {
            out.push(x);
        }
    }
    (i == coarse.len()).then_some(out)
}

/// Sparse refinement rows: coarse basis j ↦ [(fine index, coefficient)].
fn refinement_rows(coarse: &OpenKnotVector, fine: &OpenKnotVector) -> Result<Vec<Vec<(usize, f64)>>> {
    let inserts = multiset_difference(fine.knots(), coarse.knots())
        .ok_or_else(|| Error::InvalidHierarchy("knot vectors of consecutive levels are not nested".into()))?;
    let n = coarse.basis_count();
    let mut rows = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let (_, c) = insert_knots(coarse.knots(), coarse.degree(), &e, &inserts)?;
        rows.push(c.into_iter().enumerate().filter(|(_, v)| *v != 0.0).collect());
    }
    Ok(rows)
}

fn prepare(levels: &[ThbLevel]) -> Result<Vec<Level>> {
    let first = levels.first().ok_or(Error::Empty("hierarchy levels"))?;
    let n = first.knots.len();
    if n == 0 {
        return Err(Error::Empty("knot vectors"));
    }
    let mut omega: Vec<Vec<AxisBox>> = Vec::with_capacity(levels.len());
    let mut out: Vec<Level> = Vec::with_capacity(levels.len());
    for (l, lev) in levels.iter().enumerate() {
        if lev.knots.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: lev.knots.len() });
        }
        for a in 0..n {
            if lev.knots[a].degree() != first.knots[a].degree() || lev.knots[a].domain() != first.knots[a].domain() {
                return Err(Error::InvalidHierarchy(format!("level {l} changes degree or domain on axis {a}")));
            }
        }
        let breaks: Vec<Vec<f64>> = lev.knots.iter().map(OpenKnotVector::breakpoints).collect();
        let cells: Vec<usize> = breaks.iter().map(|b| b.len() - 1).collect();
        if l == 0 && !lev.domain.is_empty() {
            let full = lev.domain.len() == 1 && lev.domain[0].0.iter().all(|&v| v == 0) && lev.domain[0].1 == cells;
            if !full {
                return Err(Error::InvalidHierarchy("the first level must cover the whole domain".into()));
            }
        }
        let mut boxes = Vec::new();
        if l > 0 {
            for (lo, hi) in &lev.domain {
                if lo.len() != n || hi.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: lo.len().min(hi.len()) });
                }
                if (0..n).any(|a| lo[a] >= hi[a] || hi[a] > cells[a]) {
                    return Err(Error::InvalidHierarchy(format!("bad cell range on level {l}")));
                }
                let b = AxisBox::new(
                    (0..n).map(|a| breaks[a][lo[a]]).collect(),
                    (0..n).map(|a| breaks[a][hi[a]]).collect(),
                )?;
                let prev = &out[l - 1].breaks;
                for a in 0..n {
                    for v in [b.lo()[a], b.hi()[a]] {
                        if !prev[a].contains(&v) {
                            return Err(Error::InvalidHierarchy(format!(
                                "domain of level {l} is not aligned with the cells of level {}",
                                l - 1
                            )));
                        }
                    }
                }
                boxes.push(b);
            }
        }
        omega.push(boxes);
        out.push(Level { knots: lev.knots.clone(), breaks, cells, inside: Vec::new(), inside_next: Vec::new() });
    }
    let nl = out.len();
    for l in 0..nl {
        let bound: Vec<usize> = out[l].cells.iter().map(|c| c - 1).collect();
        let mut inside = Vec::new();
        let mut inside_next = Vec::new();
        for idx in box_indices(&bound) {
            let ctr = out[l].cell_box(idx.entries()).center();
            inside.push(l == 0 || in_any(&omega[l], &ctr));
            inside_next.push(l + 1 < nl && in_any(&omega[l + 1], &ctr));
        }
        for (c, (&a, &b)) in inside.iter().zip(&inside_next).enumerate() {
            if b && !a {
                return Err(Error::InvalidHierarchy(format!("domain of level {} leaves the domain of level {l} (cell {c})", l + 1)));
            }
        }
        out[l].inside = inside;
        out[l].inside_next = inside_next;
    }
    Ok(out)
}

/// Truncated hierarchical B-splines. Truncated functions are stored by their expansion in the
/// finest-level basis.
pub fn build_thb(levels: &[ThbLevel]) -> Result<SplineSpace> {
    let lv = prepare(levels)?;
    let n = lv[0].knots.len();
    let nl = lv.len();
    let mut rows: Vec<Vec<Vec<Vec<(usize, f64)>>>> = Vec::with_capacity(nl.saturating_sub(1));
    for l in 0..nl - 1 {
        rows.push((0..n).map(|a| refinement_rows(&lv[l].knots[a], &lv[l + 1].knots[a])).collect::<Result<_>>()?);
    }

    let mut elements = Vec::new();
    let mut element_level = Vec::new();
    for (l, level) in lv.iter().enumerate() {
        let bound: Vec<usize> = level.cells.iter().map(|c| c - 1).collect();
        for idx in box_indices(&bound) {
            let c = level.cell_index(idx.entries());
            if level.inside[c] && !level.inside_next[c] {
                elements.push(level.cell_box(idx.entries()));
                element_level.push(l);
            }
        }
    }
    let level_of: HashMap<Vec<u64>, usize> =
        elements.iter().zip(&element_level).map(|(e, &l)| (e.lo().iter().map(|v| v.to_bits()).collect(), l)).collect();
    let mesh = BoxMesh::new(elements)?;
    let levels_sorted: Vec<usize> =
        mesh.elements().iter().map(|e| level_of[&e.lo().iter().map(|v| v.to_bits()).collect::<Vec<u64>>()]).collect();

    let mut raws = Vec::new();
    for (l, level) in lv.iter().enumerate() {
        let counts: Vec<usize> = level.knots.iter().map(|k| k.basis_count() - 1).collect();
        for j in box_indices(&counts) {
            let (inside, ring) = level.support_flags(j.entries());
            if !(inside && ring) {
                continue;
            }
            raws.push(truncate(&lv, &rows, l, j.entries().to_vec()));
        }
    }
    let degree = lv[0].knots.iter().map(OpenKnotVector::degree).collect();
    let assembly = Assembly {
        kind: SpaceKind::Thb,
        degree,
        mesh,
        nesting: vec![Vec::new(); raws.len()],
        raws,
        element_level: levels_sorted,
    };
    SplineSpace::assemble(assembly, EtaPolicy::default())
}

fn truncate(lv: &[Level], rows: &[Vec<Vec<Vec<(usize, f64)>>>], level: usize, j: Vec<usize>) -> RawGenerator {
    let base = lv[level].basis(&j);
    if level + 1 == lv.len() {
        return RawGenerator::single(base, level);
    }
    let mut map: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    map.insert(j, 1.0);
    let mut dropped = false;
    for m in level + 1..lv.len() {
        let mut next: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for (k, c) in &map {
            let per_axis: Vec<&Vec<(usize, f64)>> = k.iter().enumerate().map(|(a, &ka)| &rows[m - 1][a][ka]).collect();
            let bound: Vec<usize> = per_axis.iter().map(|r| r.len() - 1).collect();
            for sel in box_indices(&bound) {
                let mut idx = Vec::with_capacity(k.len());
                let mut v = *c;
                for (a, &s) in sel.entries().iter().enumerate() {
                    let (fi, fc) = per_axis[a][s];
                    idx.push(fi);
                    v *= fc;
                }
                *next.entry(idx).or_insert(0.0) += v;
            }
        }
        let before = next.len();
        next.retain(|k, c| *c > 0.0 && !lv[m].support_flags(k).0);
        dropped |= next.len() != before;
        map = next;
    }
    if !dropped {
        return RawGenerator::single(base, level);
    }
    let last = lv.len() - 1;
    let terms = map.into_iter().map(|(k, c)| (c, lv[last].basis(&k))).collect();
    RawGenerator { terms, base, level }
}

/// Smallest k such that every element of level j only meets HB functions of levels
/// j−k < i ≤ j.
pub fn thb_admissibility(space: &SplineSpace) -> usize {
    let mesh = space.mesh();
    let mut k = 1;
    for (w, e) in mesh.elements().iter().enumerate() {
        let j = space.element_levels()[w];
        for g in space.generators() {
            if g.level() <= j && g.base().support().interiors_intersect(e, mesh.tol()) {
                k = k.max(j - g.level() + 1);
            }
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::build_tps;

    fn uniform(n: usize, d: usize) -> OpenKnotVector {
        let br: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        OpenKnotVector::from_breakpoints(&br, d).unwrap()
    }

    fn two_level(d: usize, n0: usize, lo: Vec<usize>, hi: Vec<usize>) -> Vec<ThbLevel> {
        vec![
            ThbLevel { knots: vec![uniform(n0, d), uniform(n0, d)], domain: vec![] },
            ThbLevel { knots: vec![uniform(2 * n0, d), uniform(2 * n0, d)], domain: vec![(lo, hi)] },
        ]
    }

    #[test]
    fn one_level_matches_tps() {
        let k = vec![uniform(4, 2), uniform(3, 2)];
        let t = build_thb(&[ThbLevel { knots: k.clone(), domain: vec![] }]).unwrap();
        let p = build_tps(&k).unwrap();
        assert_eq!(t.len(), p.len());
        for (a, b) in t.generators().iter().zip(p.generators()) {
            assert_eq!(a.base(), b.base());
            assert!(!a.is_truncated());
        }
        assert_eq!(thb_admissibility(&t), 1);
    }

    #[test]
    fn quadrant_refinement() {
        let s = build_thb(&two_level(2, 4, vec![0, 0], vec![4, 4])).unwrap();
        assert_eq!(s.mesh().len(), 12 + 16);
        let truncated: Vec<_> = s.generators().iter().filter(|g| g.is_truncated()).collect();
        assert!(!truncated.is_empty());
        for g in truncated {
            let b = g.base();
            let mut strictly_smaller = false;
            for i in 0..=20 {
                for j in 0..=20 {
                    let x = [i as f64 / 20.0, j as f64 / 20.0];
                    let (t, u) = (g.eval(&x), b.eval(&x));
                    assert!(t <= u + 1e-14 && t >= -1e-14);
                    strictly_smaller |= t < u - 1e-12;
                }
            }
            assert!(strictly_smaller);
        }
        let coeffs = vec![1.0; s.len()];
        for i in 0..=10 {
            for j in 0..=10 {
                let x = [i as f64 / 10.0, j as f64 / 10.0];
                assert!((s.eval(&coeffs, &x, &[0, 0]).unwrap() - 1.0).abs() < 1e-13);
            }
        }
        assert_eq!(thb_admissibility(&s), 2);
    }

    #[test]
    fn selection_brute_force() {
        let levels = two_level(2, 4, vec![2, 2], vec![8, 6]);
        let s = build_thb(&levels).unwrap();
        let lv = prepare(&levels).unwrap();
        let omega2 = AxisBox::new(vec![0.25, 0.25], vec![1.0, 0.75]).unwrap();
        let full = AxisBox::unit(2);
        let mut expected = Vec::new();
        for (l, dom) in [(0, full.clone()), (1, omega2.clone())] {
            let next = if l == 0 { Some(&omega2) } else { None };
            let counts: Vec<usize> = lv[l].knots.iter().map(|k| k.basis_count() - 1).collect();
            for j in box_indices(&counts) {
                let b = lv[l].basis(j.entries());
                let supp = b.support();
                let inside = dom.contains_box(&supp, 1e-14);
                let ring = match next {
                    None => true,
                    Some(o) => !o.contains_box(&supp, 1e-14),
                };
                if inside && ring {
                    expected.push(b);
                }
            }
        }
        let got: Vec<TensorBSpline> = s.generators().iter().map(|g| g.base().clone()).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn rejects_misaligned_domain() {
        let err = build_thb(&two_level(2, 4, vec![1, 0], vec![4, 4])).unwrap_err();
        assert!(matches!(err, Error::InvalidHierarchy(_)));
        let bad = vec![
            ThbLevel { knots: vec![uniform(4, 2)], domain: vec![] },
            ThbLevel { knots: vec![uniform(3, 2)], domain: vec![(vec![0], vec![2])] },
        ];
        assert!(build_thb(&bad).is_err());
    }

    #[test]
    fn truncation_is_idempotent() {
        let levels = two_level(3, 4, vec![2, 2], vec![6, 6]);
        let lv = prepare(&levels).unwrap();
        let s = build_thb(&levels).unwrap();
        let mut seen = 0;
        for g in s.generators().iter().filter(|g| g.is_truncated()) {
            for (_, t) in g.terms() {
                let idx: Vec<usize> = (0..2)
                    .map(|a| {
                        let kv = lv[1].knots[a].knots();
                        let w = t.axis(a).knots();
                        (0..=kv.len() - w.len()).find(|&i| kv[i..i + w.len()] == *w).unwrap()
                    })
                    .collect();
                assert!(!lv[1].support_flags(&idx).0);
                seen += 1;
            }
        }
        assert!(seen > 0);
    }
}
