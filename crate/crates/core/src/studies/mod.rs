//! Convergence, mesh-regularity and dimension studies driven by TOML configurations, with
//! CSV output.

mod catalog;
mod config;
mod table;

pub use catalog::TestFunction;
pub use config::{Expectations, SpaceDescription, StudyConfig};
pub use table::{format_g17, Cell, Table};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::approxop::{derivative_consistency, error_norm, rhs_seminorm, FunctionOracle, QuasiInterpolant};
use crate::boxmesh::{local_resolution, AxisBox};
use crate::error::{Error, Result};
use crate::multiindex::{sobolev_k, MultiIndex};
use crate::spaces::{thb_admissibility, EtaPolicy, SpaceKind, SplineSpace};

/// Errors below this value are treated as rounding noise and left out of fits.
pub const ROUNDING_FLOOR: f64 = 1e-13;

/// One pass/fail assertion of a study.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Check { name: name.to_string(), pass, detail }
    }
}

/// The table written to CSV plus fitted scalars and assertions.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyReport {
    pub table: Table,
    pub summary: Vec<(String, f64)>,
    pub checks: Vec<Check>,
}

impl StudyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn summary_value(&self, name: &str) -> Option<f64> {
        self.summary.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }
}

/// Least-squares line y ≈ a + b x: returns (b, a, R²).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

fn random_points(b: &AxisBox, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..b.dim()).map(|i| b.lo()[i] + (b.hi()[i] - b.lo()[i]) * rng.gen_range(0.1..0.9)).collect())
        .collect()
}

/// Builds the base space and checks the function oracle against it.
pub fn validate(cfg: &StudyConfig) -> Result<SplineSpace> {
    let space = cfg.space.build(cfg.eta.unwrap_or_default())?;
    if cfg.function.dim() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), got: cfg.function.dim() });
    }
    let pts = random_points(space.mesh().bounding_box(), 8, cfg.seed);
    let h = 1e-5 * space.mesh().bounding_box().diameter();
    let worst = derivative_consistency(&cfg.function, &pts, h)?;
    if worst > 1e-4 {
        return Err(Error::Config(format!("derivatives of `{}` disagree with differences ({worst:e})", cfg.function.id())));
    }
    Ok(space)
}

fn h_max(space: &SplineSpace) -> f64 {
    space.mesh().elements().iter().flat_map(|e| e.size()).fold(0.0, f64::max)
}

/// One refinement level of an h-study.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelResult {
    pub elements: usize,
    pub dofs: usize,
    pub h_max: f64,
    pub error: f64,
    pub rhs: Option<f64>,
}

impl LevelResult {
    pub fn effectivity(&self) -> Option<f64> {
        self.rhs.map(|r| self.error / r)
    }
}

/// Error (and optionally the right-hand side of the estimate) of ℵf on one space.
pub fn measure(cfg: &StudyConfig, space: SplineSpace) -> Result<LevelResult> {
    let f = &cfg.function;
    let q = QuasiInterpolant::new(space);
    let coeffs = q.apply(f);
    let error = error_norm(f, &q, &coeffs, cfg.p, &cfg.sigma)?;
    let rhs = match cfg.rhs {
        None => None,
        Some(form) => {
            let n = q.space().dim();
            let d = q.space().degree().iter().copied().min().unwrap_or(0);
            let k = sobolev_k(d, n, &MultiIndex::new(cfg.sigma.clone()))?;
            Some(rhs_seminorm(f, &q, &k, &cfg.sigma, cfg.p, cfg.q, form)?)
        }
    };
    let s = q.space();
    Ok(LevelResult { elements: s.mesh().len(), dofs: s.len(), h_max: h_max(s), error, rhs })
}

/// Errors under dyadic refinement, with running and fitted orders.
pub fn run_h_study(cfg: &StudyConfig) -> Result<StudyReport> {
    validate(cfg)?;
    if cfg.levels == 0 {
        return Err(Error::Config("an h-study needs at least one level".into()));
    }
    let mut desc = cfg.space.clone();
    let mut results = Vec::with_capacity(cfg.levels);
    for level in 0..cfg.levels {
        if level > 0 {
            desc = desc.refined()?;
        }
        results.push(measure(cfg, desc.build(cfg.eta.unwrap_or_default())?)?);
    }
    let mut table = Table::new(&["level", "elements", "dofs", "h_max", "error", "order", "rhs", "effectivity"]);
    for (l, r) in results.iter().enumerate() {
        let order = (l > 0).then(|| {
            let prev = &results[l - 1];
            (prev.error / r.error).ln() / (prev.h_max / r.h_max).ln()
        });
        table.push(vec![
            l.into(),
            r.elements.into(),
            r.dofs.into(),
            r.h_max.into(),
            r.error.into(),
            order.into(),
            r.rhs.into(),
            r.effectivity().into(),
        ]);
    }
    let tail: Vec<&LevelResult> = results.iter().rev().take(3).filter(|r| r.error > ROUNDING_FLOOR).collect();
    let fitted = if tail.len() >= 2 {
        let x: Vec<f64> = tail.iter().map(|r| r.h_max.ln()).collect();
        let y: Vec<f64> = tail.iter().map(|r| r.error.ln()).collect();
        linear_fit(&x, &y).0
    } else {
        f64::NAN
    };
    let mut summary = vec![("fitted_order".to_string(), fitted)];
    let growth = match (results.first().and_then(LevelResult::effectivity), results.last().and_then(LevelResult::effectivity)) {
        (Some(a), Some(b)) => Some(b / a),
        _ => None,
    };
    if let Some(g) = growth {
        summary.push(("effectivity_growth".into(), g));
    }
    let mut checks = Vec::new();
    if let Some([lo, hi]) = cfg.expect.order {
        checks.push(Check::new("fitted_order", fitted >= lo && fitted <= hi, format!("{fitted:.4} in [{lo}, {hi}]")));
    }
    if let Some(m) = cfg.expect.max_error {
        let worst = results.iter().map(|r| r.error).fold(0.0, f64::max);
        checks.push(Check::new("max_error", worst <= m, format!("{worst:e} <= {m:e}")));
    }
    if let Some(m) = cfg.expect.max_effectivity_growth {
        match growth {
            Some(g) => checks.push(Check::new("effectivity_growth", g <= m, format!("{g:.4} <= {m}"))),
            None => checks.push(Check::new("effectivity_growth", false, "no rhs form configured".into())),
        }
    }
    Ok(StudyReport { table, summary, checks })
}

/// Errors for increasing degree on a fixed mesh, with fits against d and (dim Φ_d)^{1/n}.
/// Functionals integrate over the whole support unless the config says otherwise.
pub fn run_p_study(cfg: &StudyConfig) -> Result<StudyReport> {
    validate(cfg)?;
    let policy = cfg.eta.unwrap_or(EtaPolicy::Support);
    let n = cfg.space.dim();
    let (lo, hi) = cfg.degrees.ok_or_else(|| Error::Config("a p-study needs `degrees = [lo, hi]`".into()))?;
    let mut rows = Vec::new();
    for d in lo..=hi {
        let r = measure(cfg, cfg.space.with_degree(d).build(policy)?)?;
        rows.push((d, r.dofs, r.error));
    }
    let mut table = Table::new(&["degree", "dim", "error", "ratio"]);
    for (i, &(d, dim, e)) in rows.iter().enumerate() {
        let ratio = (i > 0).then(|| e / rows[i - 1].2);
        table.push(vec![d.into(), dim.into(), e.into(), ratio.into()]);
    }
    let usable: Vec<&(usize, usize, f64)> = rows.iter().filter(|r| r.2 > ROUNDING_FLOOR).collect();
    let y: Vec<f64> = usable.iter().map(|r| r.2.log10()).collect();
    let xd: Vec<f64> = usable.iter().map(|r| r.0 as f64).collect();
    let xs: Vec<f64> = usable.iter().map(|r| (r.1 as f64).powf(1.0 / n as f64)).collect();
    let (slope, _, r2) = if usable.len() >= 2 { linear_fit(&xd, &y) } else { (f64::NAN, f64::NAN, f64::NAN) };
    let (slope_s, _, r2_s) = if usable.len() >= 2 { linear_fit(&xs, &y) } else { (f64::NAN, f64::NAN, f64::NAN) };
    let summary = vec![
        ("slope".to_string(), slope),
        ("r2".to_string(), r2),
        ("tau".to_string(), 10f64.powf(slope)),
        ("slope_sharp".to_string(), slope_s),
        ("r2_sharp".to_string(), r2_s),
        ("tau_sharp".to_string(), 10f64.powf(slope_s)),
    ];
    let mut checks = Vec::new();
    let ratios: Vec<f64> = rows.windows(2).filter(|w| w[0].2 > ROUNDING_FLOOR).map(|w| w[1].2 / w[0].2).collect();
    if let Some(m) = cfg.expect.max_error {
        let worst = rows.iter().map(|r| r.2).fold(0.0, f64::max);
        checks.push(Check::new("max_error", worst <= m, format!("{worst:e} <= {m:e}")));
    } else {
        let worst = ratios.iter().copied().fold(0.0, f64::max);
        let detail = if ratios.is_empty() { "all errors at the rounding floor".to_string() } else { format!("largest ratio {worst:.4}") };
        checks.push(Check::new("strictly_decreasing", worst < 1.0, detail));
    }
    if let Some(m) = cfg.expect.max_ratio {
        let worst = ratios.iter().copied().fold(0.0, f64::max);
        checks.push(Check::new("max_ratio", worst <= m, format!("{worst:.4} <= {m}")));
    }
    if let Some(m) = cfg.expect.min_r2 {
        checks.push(Check::new("min_r2", r2 >= m, format!("{r2:.5} >= {m}")));
    }
    Ok(StudyReport { table, summary, checks })
}

/// ℓ: largest ratio h_ψ/h_φ over ψ ∈ N_φ (1 when no nesting occurs).
pub fn lr_level_ratio(space: &SplineSpace) -> f64 {
    let mut ell: f64 = 1.0;
    for (phi, row) in space.generators().iter().zip(space.nesting()) {
        let hp = phi.base().size();
        for &(j, _) in row {
            let hq = space.generator(j).base().size();
            for (a, b) in hq.iter().zip(&hp) {
                ell = ell.max(a / b);
            }
        }
    }
    ell
}

/// Regularity constants and Γ bounds for p ∈ {1, 2, ∞}, γ ∈ {0, −1/p}.
pub fn run_mesh_report(cfg: &StudyConfig) -> Result<StudyReport> {
    let space = cfg.space.build(cfg.eta.unwrap_or_default())?;
    mesh_report(&space)
}

pub fn mesh_report(space: &SplineSpace) -> Result<StudyReport> {
    let n = space.dim();
    let mut table = Table::new(&["quantity", "p", "gamma", "value", "bound", "pass"]);
    let mut checks = Vec::new();
    let base = space.regularity_report(&vec![0.0; n], 2.0)?;
    let mut summary = vec![
        ("c_sharp".to_string(), base.c_sharp as f64),
        ("c_m".to_string(), base.c_m),
        ("c_o".to_string(), base.c_o),
        ("c_a".to_string(), base.c_a),
        ("c_e".to_string(), base.c_e as f64),
        ("c_g".to_string(), base.c_g),
    ];
    for (name, v) in &summary {
        table.push(vec![name.as_str().into(), Cell::Empty, Cell::Empty, (*v).into(), Cell::Empty, Cell::Empty]);
    }
    for p in [1.0, 2.0, f64::INFINITY] {
        let inv_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
        let gammas: &[f64] = if inv_p == 0.0 { &[0.0] } else { &[0.0, -inv_p] };
        for &g in gammas {
            let r = space.regularity_report(&vec![g; n], p)?;
            table.push(vec!["gamma_max".into(), p.into(), g.into(), r.gamma_max.into(), Cell::Empty, Cell::Empty]);
            for b in r.bound_checks() {
                table.push(vec![b.name.as_str().into(), p.into(), g.into(), b.value.into(), b.bound.into(), b.pass.into()]);
                checks.push(Check::new(&format!("{} p={p} gamma={g}", b.name), b.pass, format!("{:e} <= {:e}", b.value, b.bound)));
            }
        }
    }
    match space.kind() {
        SpaceKind::Thb => {
            let k = thb_admissibility(space);
            let bound = k as f64 * space.degree().iter().map(|&d| (d + 1) as f64).product::<f64>();
            summary.push(("thb_k".into(), k as f64));
            table.push(vec!["thb_k".into(), Cell::Empty, Cell::Empty, k.into(), Cell::Empty, Cell::Empty]);
            let pass = base.c_e as f64 <= bound;
            table.push(vec!["c_e_thb".into(), Cell::Empty, Cell::Empty, base.c_e.into(), bound.into(), pass.into()]);
            checks.push(Check::new("c_e_thb", pass, format!("{} <= {bound}", base.c_e)));
        }
        SpaceKind::Lr => {
            let ell = lr_level_ratio(space);
            summary.push(("lr_ell".into(), ell));
            table.push(vec!["lr_ell".into(), Cell::Empty, Cell::Empty, ell.into(), Cell::Empty, Cell::Empty]);
        }
        SpaceKind::Tps => {}
    }
    Ok(StudyReport { table, summary, checks })
}

/// The cardinality bounds (d+1)^1 ∫ h_Φ^{-1} ≤ |Φ| ≤ C_g C_E ∫ h_Φ^{-1}.
pub fn run_dim_bound_check(cfg: &StudyConfig) -> Result<StudyReport> {
    let space = cfg.space.build(cfg.eta.unwrap_or_default())?;
    dim_bound_report(&space)
}

pub fn dim_bound_report(space: &SplineSpace) -> Result<StudyReport> {
    let esupps = space.esupps();
    let boxes = esupps.iter().all(|e| e.corner().is_none());
    let sets = space.active_sets();
    let res = local_resolution(space.mesh(), &esupps, &sets)?;
    let integral: f64 =
        space.mesh().elements().iter().zip(&res.h_phi).map(|(e, h)| e.volume() / h.iter().product::<f64>()).sum();
    let r = space.regularity_report(&vec![0.0; space.dim()], 2.0)?;
    let card = space.len() as f64;
    let dp1: f64 = space.degree().iter().map(|&d| (d + 1) as f64).product();
    let lower = dp1 * integral;
    let upper = r.c_g * r.c_e as f64 * integral;
    let tol = 1e-12 * card;
    let mut table = Table::new(&["quantity", "value", "bound", "pass"]);
    table.push(vec!["cardinality".into(), space.len().into(), Cell::Empty, Cell::Empty]);
    table.push(vec!["integral".into(), integral.into(), Cell::Empty, Cell::Empty]);
    table.push(vec!["c_e".into(), r.c_e.into(), Cell::Empty, Cell::Empty]);
    table.push(vec!["c_g".into(), r.c_g.into(), Cell::Empty, Cell::Empty]);
    let mut checks = Vec::new();
    if !boxes {
        table.push(vec!["boxes".into(), Cell::Empty, Cell::Empty, false.into()]);
        checks.push(Check::new("esupps_are_boxes", false, "some extended support is a truncated box".into()));
    } else {
        let lp = lower <= card + tol;
        let up = card <= upper + tol;
        table.push(vec!["lower_bound".into(), lower.into(), card.into(), lp.into()]);
        table.push(vec!["upper_bound".into(), card.into(), upper.into(), up.into()]);
        checks.push(Check::new("lower_bound", lp, format!("{lower} <= {card}")));
        checks.push(Check::new("upper_bound", up, format!("{card} <= {upper}")));
    }
    let summary = vec![
        ("cardinality".to_string(), card),
        ("integral".to_string(), integral),
        ("lower_bound".to_string(), lower),
        ("upper_bound".to_string(), upper),
    ];
    Ok(StudyReport { table, summary, checks })
}
