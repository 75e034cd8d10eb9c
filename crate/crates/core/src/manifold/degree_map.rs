use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::analysis::analyze_tangent;
use super::{ParamMap, PointAnalysis, PointClass};
use crate::error::{Error, Result};
use crate::numeric::Policy;
use crate::sampling::map_indexed;

/// Upper bound on grid nodes in one map.
pub const MAX_NODES: usize = 4_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub y: Vec<f64>,
    pub analysis: Option<PointAnalysis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeMapSummary {
    pub points: usize,
    pub failures: usize,
    pub max_degree: usize,
    pub low_degree_fraction: f64,
    pub class_counts: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeMap {
    pub counts: Vec<usize>,
    pub points: Vec<GridPoint>,
    pub summary: DegreeMapSummary,
}

impl DegreeMap {
    /// One row per node: y1..yn, degree, class (empty fields on failure).
    pub fn to_csv(&self) -> String {
        let n = self.counts.len();
        let mut out = String::new();
        for i in 1..=n {
            let _ = write!(out, "y{i},");
        }
        out.push_str("degree,class\n");
        for p in &self.points {
            for v in &p.y {
                let _ = write!(out, "{v},");
            }
            match &p.analysis {
                Some(a) => {
                    let _ = writeln!(out, "{},{}", a.degree, a.classification.label());
                }
                None => out.push_str(",\n"),
            }
        }
        out
    }
}

impl ParamMap {
    /// Node coordinates of an inclusive grid with `counts[i]` nodes on axis i
    /// (a single node sits at the interval midpoint).
    pub fn grid_node(&self, counts: &[usize], index: usize) -> Vec<f64> {
        let mut k = index;
        self.domain
            .iter()
            .zip(counts)
            .map(|([lo, hi], &c)| {
                let i = k % c;
                k /= c;
                if c == 1 {
                    0.5 * (lo + hi)
                } else {
                    lo + (hi - lo) * i as f64 / (c - 1) as f64
                }
            })
            .collect()
    }

    /// Pointwise analysis over a grid; low-degree classification is relative
    /// to the maximum degree found on the grid.
    pub fn degree_map(&self, counts: &[usize], policy: &Policy) -> Result<DegreeMap> {
        if counts.len() != self.n || counts.contains(&0) {
            return Err(Error::ArityError(format!(
                "grid needs {} positive per-axis counts",
                self.n
            )));
        }
        let total = counts.iter().try_fold(1usize, |acc, &c| acc.checked_mul(c));
        let total = match total {
            Some(t) if t <= MAX_NODES => t,
            _ => return Err(Error::InvalidArgument(format!("grid exceeds {MAX_NODES} nodes"))),
        };
        let mut points = map_indexed(total, |idx| {
            let y = self.grid_node(counts, idx);
            let res = self
                .eval(&y)
                .and_then(|p| Ok((p, self.jacobian(&y)?)))
                .and_then(|(p, j)| analyze_tangent(&self.group, &y, &p, &j, policy, None));
            match res {
                Ok(a) => GridPoint { y, analysis: Some(a), error: None },
                Err(e) => GridPoint { y, analysis: None, error: Some(e.to_string()) },
            }
        });
        let max_degree = points
            .iter()
            .filter_map(|p| p.analysis.as_ref().map(|a| a.degree))
            .max()
            .unwrap_or(0);
        let mut low = 0;
        let mut analyzed = 0;
        let mut class_counts = BTreeMap::new();
        for p in &mut points {
            if let Some(a) = &mut p.analysis {
                analyzed += 1;
                if a.degree < max_degree {
                    low += 1;
                    if a.classification == PointClass::VerticalRegular {
                        a.classification = PointClass::LowDegree;
                    }
                }
                *class_counts.entry(a.classification.label().to_string()).or_insert(0) += 1;
            }
        }
        let summary = DegreeMapSummary {
            points: total,
            failures: total - analyzed,
            max_degree,
            low_degree_fraction: if analyzed > 0 { low as f64 / analyzed as f64 } else { 0.0 },
            class_counts,
        };
        Ok(DegreeMap { counts: counts.to_vec(), points, summary })
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::algebra::catalog;

    #[test]
    fn plane_and_paraboloid_maps() {
        let g = Arc::new(catalog::heisenberg(1).unwrap());
        let dom = [[-1.0, 1.0], [-1.0, 1.0]];
        let plane = ParamMap::parse(g.clone(), "y1; 0; y2", 2, &dom).unwrap();
        let m = plane.degree_map(&[5, 5], &Policy::default()).unwrap();
        assert_eq!(m.summary.max_degree, 3);
        assert_eq!(m.summary.low_degree_fraction, 0.0);
        assert_eq!(m.summary.class_counts["transversal"], 25);

        let par = ParamMap::parse(g, "y1; y2; y1^2 + y2^2", 2, &dom).unwrap();
        let m = par.degree_map(&[9, 9], &Policy::default()).unwrap();
        assert_eq!(m.summary.max_degree, 3);
        let low: Vec<&GridPoint> = m
            .points
            .iter()
            .filter(|p| p.analysis.as_ref().unwrap().degree < 3)
            .collect();
        assert_eq!(low.len(), 1);
        assert_eq!(low[0].y, vec![0.0, 0.0]);
        let csv = m.to_csv();
        assert!(csv.starts_with("y1,y2,degree,class\n"));
        assert_eq!(csv.lines().count(), 82);
    }

    #[test]
    fn abelian_degree_constant() {
        let g = Arc::new(catalog::abelian(4).unwrap());
        let m = ParamMap::parse(g, "y1; y2; y3; y1*y2*y3 + cos(y1)", 3, &[[-1.0, 1.0]; 3]).unwrap();
        let d = m.degree_map(&[4, 3, 3], &Policy::default()).unwrap();
        assert!(d.points.iter().all(|p| p.analysis.as_ref().unwrap().degree == 3));
    }
}
