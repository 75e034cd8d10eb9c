use std::sync::Arc;

use hgroup::algebra::catalog;
use hgroup::manifold::ParamMap;
use hgroup::measure::{
    hypersurface_density, intrinsic_measure, section_area, IntrinsicDensity, Quadrature,
};
use hgroup::metrics::{DistanceKind, DistanceSpec, HomogeneousDistance};
use hgroup::{GradedGroup, Policy, Subspace};
use proptest::prelude::*;

fn h(n: usize) -> Arc<GradedGroup> {
    Arc::new(catalog::heisenberg(n).unwrap())
}

fn hypersurfaces() -> Vec<ParamMap> {
    vec![
        ParamMap::parse(h(1), "y1; y2; y1^2 + y2^2", 2, &[[-1.0, 1.0]; 2]).unwrap(),
        ParamMap::parse(h(1), "y1; sin(y1 + y2); y2", 2, &[[-1.0, 1.0]; 2]).unwrap(),
        ParamMap::parse(h(2), "y1; y2; y3; y4; y1*y3 - y2^2", 4, &[[-1.0, 1.0]; 4]).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hypersurface_density_matches_multivector_route(
        which in 0usize..3,
        y in prop::collection::vec(-0.95f64..0.95, 4),
    ) {
        let map = &hypersurfaces()[which];
        let y = &y[..map.n()];
        let degree = map.group().homogeneous_dim() - 1;
        // The normal formula is per unit Euclidean area; rescale by |τ|.
        let j = map.jacobian(y).unwrap();
        let area = (j.transpose() * &j).determinant().sqrt();
        let route = IntrinsicDensity::new(map, degree).eval(y).unwrap() / area;
        let normal = hypersurface_density(map, y).unwrap();
        prop_assert!((route - normal).abs() <= 1e-9 * (1.0 + route.abs()), "{route} vs {normal}");
    }

    #[test]
    fn intrinsic_measure_scales_under_dilation(r in 0.2f64..3.0) {
        // δ_r of the paraboloid patch: (r y1, r y2, r² (y1² + y2²)).
        let g = h(1);
        let base = ParamMap::parse(g.clone(), "y1; y2; y1^2 + y2^2", 2, &[[0.2, 1.0]; 2]).unwrap();
        let src = format!("{r:.17}*y1; {r:.17}*y2; {:.17}*(y1^2 + y2^2)", r * r);
        let scaled = ParamMap::parse(g, &src, 2, &[[0.2, 1.0]; 2]).unwrap();
        let quad = Quadrature::TensorGrid { resolution: 16 };
        let policy = Policy::default();
        let a = intrinsic_measure(&base, &[[0.2, 1.0]; 2], quad, Some(3), None, &policy).unwrap();
        let b = intrinsic_measure(&scaled, &[[0.2, 1.0]; 2], quad, Some(3), None, &policy).unwrap();
        let expected = a.value * r.powi(3);
        prop_assert!((b.value - expected).abs() <= 1e-8 * expected, "{} vs {expected}", b.value);
    }

    #[test]
    fn horizontal_restriction_is_a_vector_norm(
        x in prop::collection::vec(-2.0f64..2.0, 2),
        y in prop::collection::vec(-2.0f64..2.0, 2),
        kind in 0usize..3,
    ) {
        // span{e1, e2} is a commutative horizontal subgroup of H².
        let g = h(2);
        let d = match kind {
            0 => HomogeneousDistance::new(g.clone(), DistanceKind::Box { eps: vec![1.0, 0.5] }).unwrap(),
            1 => HomogeneousDistance::new(g.clone(), DistanceKind::CyganKoranyi { weight: 16.0 }).unwrap(),
            _ => HomogeneousDistance::from_spec(g.clone(), &DistanceSpec {
                kind: "multiradial".into(),
                params: vec![],
                phi_expr: Some("max(a1, 2*a2^0.5)".into()),
            }).unwrap(),
        };
        let embed = |v: &[f64]| vec![v[0], v[1], 0.0, 0.0, 0.0];
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        let lhs = d.norm(&embed(&sum));
        let rhs = d.norm(&embed(&x)) + d.norm(&embed(&y));
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-15);
        // Products inside the subgroup are vector sums.
        let prod = g.mul(&embed(&x), &embed(&y));
        prop_assert!(prod.iter().zip(embed(&sum)).all(|(a, b)| (a - b).abs() < 1e-14));
    }
}

#[test]
fn quadrupled_samples_halve_the_stderr() {
    let g = h(1);
    let d = HomogeneousDistance::new(g.clone(), DistanceKind::CyganKoranyi { weight: 16.0 }).unwrap();
    let s = Subspace::coordinate(&g, &[0, 2]).unwrap();
    let a = section_area(&d, &s, &[0.1, 0.0, 0.1], 50_000, 4).unwrap();
    let b = section_area(&d, &s, &[0.1, 0.0, 0.1], 200_000, 4).unwrap();
    let ratio = b.stderr / a.stderr;
    assert!((0.375..=0.625).contains(&ratio), "{ratio}");

    let map = ParamMap::parse(g, "y1; y2; y1^2 + y2^2", 2, &[[-1.0, 1.0]; 2]).unwrap();
    let policy = Policy::default();
    let mc = |samples| {
        intrinsic_measure(&map, &[[-1.0, 1.0]; 2], Quadrature::MonteCarlo { samples, seed: 8 }, Some(3), None, &policy)
            .unwrap()
    };
    let (a, b) = (mc(40_000), mc(160_000));
    let ratio = b.stderr / a.stderr;
    assert!((0.375..=0.625).contains(&ratio), "{ratio}");
    assert!(a.z_score(&b) < 4.0);
}
