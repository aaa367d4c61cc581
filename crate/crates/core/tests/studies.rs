mod common;

use std::path::Path;

use qispline::studies::{dim_bound_report, mesh_report, run_h_study, run_p_study, validate, SpaceDescription, StudyConfig};
use qispline::{Error, SpaceKind};

fn cfg(text: &str) -> StudyConfig {
    StudyConfig::from_toml_str(text, Path::new(".")).unwrap()
}

#[test]
fn space_file_is_resolved_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("space.toml"), "kind = \"tps\"\ndegree = [3]\nbreakpoints = [[0.0, 0.25, 1.0]]\n").unwrap();
    let path = dir.path().join("study.toml");
    std::fs::write(&path, "dimension = 1\nspace = \"space.toml\"\n[study]\nfunction = \"poly:3\"\nlevels = 2\n").unwrap();
    let c = StudyConfig::load(&path).unwrap();
    assert_eq!(c.space, SpaceDescription::Tps { degree: vec![3], breaks: vec![vec![0.0, 0.25, 1.0]] });
    let r = run_h_study(&c).unwrap();
    assert_eq!(r.table.rows.len(), 2);
    for row in &r.table.rows {
        match row[4] {
            qispline::studies::Cell::Num(e) => assert!(e <= 1e-9, "{e}"),
            ref other => panic!("{other:?}"),
        }
    }
}

#[test]
fn dimension_mismatch_is_rejected() {
    let e = StudyConfig::from_toml_str(
        "dimension = 3\n[space]\nkind = \"tps\"\ndegree = [1, 1]\nelements = [2, 2]\n[study]\n",
        Path::new("."),
    )
    .unwrap_err();
    assert!(matches!(e, Error::DimensionMismatch { expected: 3, got: 2 }));
}

#[test]
fn unknown_keys_are_rejected() {
    let e = StudyConfig::from_toml_str("[space]\nkind = \"tps\"\ndegree = [1]\nelements = [2]\ncolour = 1\n[study]\n", Path::new("."))
        .unwrap_err();
    assert!(matches!(e, Error::Config(_)));
}

#[test]
fn validate_builds_every_kind() {
    let tps = cfg("[space]\nkind = \"tps\"\ndegree = [2, 1]\nelements = [3, 2]\n[study]\n");
    assert_eq!(validate(&tps).unwrap().kind(), SpaceKind::Tps);
    let thb = cfg("[space]\nkind = \"thb\"\ndegree = [1, 1]\nelements = [2, 2]\n[[space.levels]]\ncells = [{ lo = [0, 0], hi = [2, 2] }]\n[study]\n");
    assert_eq!(validate(&thb).unwrap().kind(), SpaceKind::Thb);
    let lr = cfg(
        "[space]\nkind = \"lr\"\ndegree = [1, 1]\ninsertions = [{ axis = 0, position = 0.5, span_lo = [0.0], span_hi = [1.0] }]\n[study]\n",
    );
    assert_eq!(validate(&lr).unwrap().len(), 6);
}

#[test]
fn lr_h_study_is_unsupported() {
    let lr = cfg("[space]\nkind = \"lr\"\ndegree = [1, 1]\n[study]\nlevels = 2\n");
    assert!(matches!(run_h_study(&lr), Err(Error::Unsupported(_))));
}

#[test]
fn p_study_on_polynomial_sits_at_rounding_floor() {
    let c = cfg("[space]\nkind = \"tps\"\ndegree = [2, 2]\nelements = [2, 2]\n[study]\nfunction = \"poly:2\"\ndegrees = [2, 5]\n");
    let r = run_p_study(&c).unwrap();
    assert!(r.passed(), "{:?}", r.checks);
}

#[test]
fn csv_is_reproducible() {
    let c = cfg("[space]\nkind = \"tps\"\ndegree = [1, 2]\nelements = [3, 3]\n[study]\nfunction = \"runge\"\np = 1\nq = 2\nlevels = 3\nseed = 4\n");
    let a = run_h_study(&c).unwrap().table.to_csv();
    let b = run_h_study(&c).unwrap().table.to_csv();
    assert_eq!(a, b);
    assert!(a.starts_with("level,elements,dofs,h_max,error,order,rhs,effectivity\n"));
}

#[test]
fn reports_pass_on_fixtures() {
    for s in [common::thb_block(2), common::thb_l_shape(1), common::lr_nested_cubic(), common::tps_uniform(3, &[1, 4])] {
        assert!(mesh_report(&s).unwrap().passed());
        assert!(dim_bound_report(&s).unwrap().passed());
    }
}

#[test]
fn thin_strip_anisotropy_scales_with_inverse_width() {
    for k in 2..6 {
        let eps = 0.5f64.powi(k);
        let r = mesh_report(&common::lr_thin_strip(eps)).unwrap();
        assert!((r.summary_value("c_o").unwrap() - 1.0 / eps).abs() < 1e-9);
        assert_eq!(r.summary_value("c_a"), Some(3.0));
    }
}
