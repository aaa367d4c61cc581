#![allow(dead_code)]

use qispline::bspline::OpenKnotVector;
use qispline::multiindex::box_indices;
use qispline::{build_lr, build_thb, build_tps, AxisBox, Meshline, Polynomial, SplineSpace, ThbLevel};
use rand::Rng;

pub fn uniform(n: usize, d: usize) -> OpenKnotVector {
    let br: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    OpenKnotVector::from_breakpoints(&br, d).unwrap()
}

pub fn tps_uniform(n: usize, d: &[usize]) -> SplineSpace {
    build_tps(&d.iter().map(|&di| uniform(n, di)).collect::<Vec<_>>()).unwrap()
}

/// Strictly increasing breakpoints on [0, 1] with `cells` cells of random widths.
pub fn random_breaks<R: Rng>(rng: &mut R, cells: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..cells).map(|_| rng.gen_range(0.3..1.0)).collect();
    let total: f64 = w.iter().sum();
    let mut b = vec![0.0];
    let mut acc = 0.0;
    for wi in &w[..cells - 1] {
        acc += wi / total;
        b.push(acc);
    }
    b.push(1.0);
    b
}

pub fn tps_random<R: Rng>(rng: &mut R, cells: usize, d: &[usize]) -> SplineSpace {
    let knots: Vec<OpenKnotVector> =
        d.iter().map(|&di| OpenKnotVector::from_breakpoints(&random_breaks(rng, cells), di).unwrap()).collect();
    build_tps(&knots).unwrap()
}

/// Two-level THB on [0,1]², 4×4 base cells, the finer level over `cells` (level-1 indices).
pub fn thb_two_level(d: usize, cells: Vec<(Vec<usize>, Vec<usize>)>) -> SplineSpace {
    build_thb(&[
        ThbLevel { knots: vec![uniform(4, d), uniform(4, d)], domain: vec![] },
        ThbLevel { knots: vec![uniform(8, d), uniform(8, d)], domain: cells },
    ])
    .unwrap()
}

pub fn thb_block(d: usize) -> SplineSpace {
    thb_two_level(d, vec![(vec![2, 2], vec![8, 8])])
}

pub fn thb_l_shape(d: usize) -> SplineSpace {
    thb_two_level(d, vec![(vec![0, 0], vec![4, 8]), (vec![4, 0], vec![8, 4])])
}

fn seg(axis: usize, position: f64, lo: f64, hi: f64) -> Meshline {
    Meshline::new(axis, position, vec![lo], vec![hi])
}

/// Biquadratic LR mesh on the unit square whose T-junctions create nested generators.
pub fn lr_nested_quadratic() -> SplineSpace {
    let lines = vec![
        seg(1, 0.375, 0.0, 1.0),
        seg(0, 0.625, 0.0, 0.375),
        seg(0, 0.875, 0.0, 0.375),
        seg(1, 0.125, 0.625, 1.0),
        seg(0, 0.5, 0.375, 1.0),
    ];
    build_lr(&[2, 2], &AxisBox::unit(2), &lines).unwrap()
}

/// Bicubic LR mesh on the unit square with nested generators.
pub fn lr_nested_cubic() -> SplineSpace {
    let lines = vec![seg(0, 0.875, 0.0, 1.0), seg(1, 0.625, 0.0, 0.875), seg(1, 0.5, 0.0, 0.875), seg(0, 0.5, 0.0, 0.625)];
    build_lr(&[3, 3], &AxisBox::unit(2), &lines).unwrap()
}

/// Bilinear LR mesh refined towards a corner.
pub fn lr_corner_linear() -> SplineSpace {
    let lines = vec![
        seg(0, 0.5, 0.0, 1.0),
        seg(1, 0.5, 0.0, 1.0),
        seg(0, 0.25, 0.0, 0.5),
        seg(1, 0.25, 0.0, 0.5),
        seg(0, 0.125, 0.0, 0.25),
    ];
    build_lr(&[1, 1], &AxisBox::unit(2), &lines).unwrap()
}

/// Biquadratic mesh on [0,5]×[2,5] with full lines x = 1..4, y = 3, 4 and two segments
/// y = 3.5 ∓ ε/2 over x ∈ [1,4], leaving a strip of 1×ε elements.
pub fn lr_thin_strip(eps: f64) -> SplineSpace {
    let mut lines = Vec::new();
    for x in [1.0, 2.0, 3.0, 4.0] {
        lines.push(seg(0, x, 2.0, 5.0));
    }
    for y in [3.0, 4.0] {
        lines.push(seg(1, y, 0.0, 5.0));
    }
    lines.push(seg(1, 3.5 - eps / 2.0, 1.0, 4.0));
    lines.push(seg(1, 3.5 + eps / 2.0, 1.0, 4.0));
    let omega = AxisBox::new(vec![0.0, 2.0], vec![5.0, 5.0]).unwrap();
    build_lr(&[2, 2], &omega, &lines).unwrap()
}

/// Random polynomial of coordinate degree ≤ d with coefficients in [−1, 1].
pub fn random_poly<R: Rng>(rng: &mut R, d: &[usize]) -> Polynomial {
    let terms = box_indices(d).into_iter().map(|a| (a, rng.gen_range(-1.0..1.0)));
    Polynomial::from_terms(d.len(), terms).unwrap()
}

/// m points per axis spanning the box, endpoints included.
pub fn lattice(b: &AxisBox, m: usize) -> Vec<Vec<f64>> {
    let n = b.dim();
    box_indices(&vec![m - 1; n])
        .into_iter()
        .map(|k| (0..n).map(|i| b.lo()[i] + (b.hi()[i] - b.lo()[i]) * k.entries()[i] as f64 / (m - 1) as f64).collect())
        .collect()
}
