use std::sync::Arc;

use hgroup::algebra::catalog;
use hgroup::expr;
use hgroup::manifold::{analyze_tangent, ParamMap, PointAnalysis, PointClass};
use hgroup::{GradedGroup, Policy};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn projector(a: &PointAnalysis) -> DMatrix<f64> {
    let cols: Vec<DVector<f64>> = a
        .htangent
        .as_ref()
        .expect("homogeneous tangent")
        .iter()
        .map(|c| DVector::from_column_slice(c))
        .collect();
    let b = DMatrix::from_columns(&cols);
    &b * b.transpose()
}

fn same_analysis(a: &PointAnalysis, b: &PointAnalysis) {
    assert_eq!(a.degree, b.degree);
    assert_eq!(a.regular, b.regular);
    assert_eq!(a.classification, b.classification);
    assert_eq!(a.alpha, b.alpha);
    let diff = (projector(a) - projector(b)).abs().max();
    assert!(diff < 1e-7, "tangent spaces differ by {diff}");
}

struct Case {
    group: Arc<GradedGroup>,
    src: &'static str,
    n: usize,
}

fn cases() -> Vec<Case> {
    let h1 = Arc::new(catalog::heisenberg(1).unwrap());
    let h2 = Arc::new(catalog::heisenberg(2).unwrap());
    let engel = Arc::new(catalog::engel().unwrap());
    vec![
        Case { group: h1.clone(), src: "y1; 0; y2", n: 2 },
        Case { group: h1.clone(), src: "y1; y2; y1^2 + y2^2", n: 2 },
        Case { group: h1, src: "cos(y1); sin(y1); y1", n: 1 },
        Case { group: h2, src: "y1; y2; 2*y1*y2; y1^2; y1^2*y2", n: 2 },
        Case { group: engel, src: "y1; y2; y1*y2; y2^3", n: 2 },
    ]
}

fn map_of(c: &Case) -> ParamMap {
    ParamMap::parse(c.group.clone(), c.src, c.n, &vec![[-1.0, 1.0]; c.n]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn left_translation_preserves_analysis(
        which in 0usize..5,
        y in prop::collection::vec(-0.8f64..0.8, 2),
        p in prop::collection::vec(-1.5f64..1.5, 5),
    ) {
        let c = &cases()[which];
        let map = map_of(c);
        let policy = Policy::default();
        let y = &y[..c.n];
        let p = &p[..c.group.dim()];
        let reference = map.sampled_max_degree(&policy).unwrap();
        let base = map.classify_point(y, &policy, Some(reference)).unwrap();
        let t = map.translated(p);
        let moved = analyze_tangent(&c.group, y, &t.eval(y).unwrap(), &t.jacobian(y).unwrap(), &policy, Some(reference)).unwrap();
        same_analysis(&base, &moved);
    }

    #[test]
    fn affine_reparametrization_preserves_analysis(
        which in 0usize..5,
        z in prop::collection::vec(-0.2f64..0.2, 2),
        m in prop::collection::vec(-0.3f64..0.3, 4),
        b in prop::collection::vec(-0.3f64..0.3, 2),
    ) {
        let c = &cases()[which];
        let map = map_of(c);
        let policy = Policy::default();
        let n = c.n;
        // y = (I + M) z + b keeps a positive determinant for |M| < 1/2.
        let mat: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| m[i * 2 + j] + if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let subst: Vec<String> = (0..n)
            .map(|i| {
                let terms: Vec<String> = (0..n).map(|j| format!("{:.17}*y{}", mat[i][j], j + 1)).collect();
                format!("{} + {:.17}", terms.join(" + "), b[i])
            })
            .collect();
        let src = expr::rename_identifiers(c.src, |name| {
            name.strip_prefix('y')
                .and_then(|k| k.parse::<usize>().ok())
                .map(|k| subst[k - 1].clone())
        })
        .unwrap();
        let re = ParamMap::parse(c.group.clone(), &src, n, &vec![[-0.2, 0.2]; n]).unwrap();
        let z = &z[..n];
        let y: Vec<f64> = (0..n).map(|i| (0..n).map(|j| mat[i][j] * z[j]).sum::<f64>() + b[i]).collect();
        let reference = map.sampled_max_degree(&policy).unwrap();
        let base = map.classify_point(&y, &policy, Some(reference)).unwrap();
        let other = re.classify_point(z, &policy, Some(reference)).unwrap();
        same_analysis(&base, &other);
    }
}

#[test]
fn horizontal_tangency_matches_regular_horizontal_tangent() {
    let policy = Policy::default();
    for (i, c) in cases().iter().enumerate() {
        let map = map_of(c);
        let grid = map.degree_map(&vec![7; c.n], &policy).unwrap();
        for gp in &grid.points {
            let a = gp.analysis.as_ref().unwrap();
            let via_tangent = a.regular && a.htangent_class.is_some_and(|k| k.horizontal);
            // Helix and Legendrian chart: horizontal submanifolds.
            if i == 2 || i == 3 {
                assert!(a.horizontal_tangency && via_tangent, "{} at {:?}", c.src, a.y);
            } else if via_tangent {
                assert!(a.horizontal_tangency);
            }
            assert_eq!(a.alpha.iter().sum::<usize>(), c.n);
            let weighted: usize = a.alpha.iter().enumerate().map(|(j, v)| (j + 1) * v).sum();
            assert_eq!(weighted, a.degree);
        }
    }
}

#[test]
fn legendrian_chart_is_horizontal_on_a_grid() {
    let c = &cases()[3];
    let map = map_of(c);
    let grid = map.degree_map(&[5, 5], &Policy::default()).unwrap();
    assert_eq!(grid.points.len(), 25);
    for gp in &grid.points {
        let a = gp.analysis.as_ref().unwrap();
        assert_eq!(a.classification, PointClass::Horizontal);
        assert!(a.htangent_class.unwrap().subalgebra);
    }
}
