//! Built-in groups.

use super::{GradedGroup, GroupDefinition};
use crate::error::{Error, Result};

/// Commutative group R^n.
pub fn abelian(n: usize) -> Result<GradedGroup> {
    GradedGroup::load(&GroupDefinition {
        name: format!("abelian({n})"),
        layers: vec![n],
        brackets: vec![],
    })
}

/// Heisenberg group H^n with `[e_i, e_{i+n}] = 2 e_{2n+1}`, so that the
/// product has last coordinate `x_q + y_q + Σ (x_i y_{i+n} − x_{i+n} y_i)`.
pub fn heisenberg(n: usize) -> Result<GradedGroup> {
    if n == 0 {
        return Err(Error::BadDimensions("heisenberg(n) needs n >= 1".into()));
    }
    let brackets = (1..=n).map(|i| (i, i + n, 2 * n + 1, 2.0)).collect();
    GradedGroup::load(&GroupDefinition {
        name: format!("heisenberg({n})"),
        layers: vec![2 * n, 1],
        brackets,
    })
}

/// Composition algebras used for H-type groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompositionAlgebra {
    Complex,
    Quaternion,
    Octonion,
}

impl CompositionAlgebra {
    pub fn dim(self) -> usize {
        match self {
            Self::Complex => 2,
            Self::Quaternion => 4,
            Self::Octonion => 8,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "complex" => Some(Self::Complex),
            "quaternion" => Some(Self::Quaternion),
            "octonion" => Some(Self::Octonion),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Complex => "complex",
            Self::Quaternion => "quaternion",
            Self::Octonion => "octonion",
        }
    }
}

fn conj(a: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = a.iter().map(|v| -v).collect();
    out[0] = a[0];
    out
}

/// Cayley–Dickson product: (a,b)(c,d) = (ac − d*b, da + bc*).
fn cd_mul(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 1 {
        return vec![x[0] * y[0]];
    }
    let h = n / 2;
    let (a, b) = x.split_at(h);
    let (c, d) = y.split_at(h);
    let ac = cd_mul(a, c);
    let db = cd_mul(&conj(d), b);
    let da = cd_mul(d, a);
    let bc = cd_mul(b, &conj(c));
    let mut out = Vec::with_capacity(n);
    out.extend(ac.iter().zip(&db).map(|(p, q)| p - q));
    out.extend(da.iter().zip(&bc).map(|(p, q)| p + q));
    out
}

/// H-type group built on a composition algebra A: first layer A, second
/// layer Im A, with `<Z, [X, Y]> = <Z X, Y>` for imaginary units Z.
pub fn htype(algebra: CompositionAlgebra) -> Result<GradedGroup> {
    let m = algebra.dim();
    let k = m - 1;
    let unit = |i: usize| {
        let mut v = vec![0.0; m];
        v[i] = 1.0;
        v
    };
    let mut brackets = Vec::new();
    for a in 0..m {
        for b in (a + 1)..m {
            for z in 0..k {
                let za = cd_mul(&unit(z + 1), &unit(a));
                let c = za[b];
                if c != 0.0 {
                    brackets.push((a + 1, b + 1, m + z + 1, c));
                }
            }
        }
    }
    GradedGroup::load(&GroupDefinition {
        name: format!("htype({})", algebra.label()),
        layers: vec![m, k],
        brackets,
    })
}

/// Engel group: layers [2,1,1], `[e1,e2]=e3`, `[e1,e3]=e4`.
pub fn engel() -> Result<GradedGroup> {
    GradedGroup::load(&GroupDefinition {
        name: "engel".into(),
        layers: vec![2, 1, 1],
        brackets: vec![(1, 2, 3, 1.0), (1, 3, 4, 1.0)],
    })
}

/// Free step-2 group on m generators, `[e_i, e_j] = e_{ij}` for i < j.
pub fn free2(m: usize) -> Result<GradedGroup> {
    if m < 2 {
        return Err(Error::BadDimensions("free2(m) needs m >= 2".into()));
    }
    let mut brackets = Vec::new();
    let mut k = m;
    for i in 1..=m {
        for j in (i + 1)..=m {
            k += 1;
            brackets.push((i, j, k, 1.0));
        }
    }
    GradedGroup::load(&GroupDefinition {
        name: format!("free2({m})"),
        layers: vec![m, m * (m - 1) / 2],
        brackets,
    })
}

/// Model filiform group of dimension n: `[e1, e_k] = e_{k+1}` for 2 ≤ k < n.
pub fn filiform(n: usize) -> Result<GradedGroup> {
    if n < 3 {
        return Err(Error::BadDimensions("filiform(n) needs n >= 3".into()));
    }
    let mut layers = vec![2];
    layers.extend(std::iter::repeat_n(1, n - 2));
    let brackets = (2..n).map(|k| (1, k, k + 1, 1.0)).collect();
    GradedGroup::load(&GroupDefinition {
        name: format!("filiform({n})"),
        layers,
        brackets,
    })
}

/// Resolves names such as `heisenberg(2)`, `engel`, `htype(quaternion)`.
pub fn by_name(name: &str) -> Result<GradedGroup> {
    let name = name.trim();
    let (head, arg) = match name.find('(') {
        Some(open) if name.ends_with(')') => {
            (&name[..open], Some(name[open + 1..name.len() - 1].trim()))
        }
        Some(_) => return Err(Error::InvalidArgument(format!("malformed group name '{name}'"))),
        None => (name, None),
    };
    let count = |arg: Option<&str>| -> Result<usize> {
        arg.and_then(|a| a.parse().ok())
            .ok_or_else(|| Error::InvalidArgument(format!("'{name}' needs an integer argument")))
    };
    match head {
        "abelian" => abelian(count(arg)?),
        "heisenberg" => heisenberg(count(arg)?),
        "free2" => free2(count(arg)?),
        "filiform" => filiform(count(arg)?),
        "engel" if arg.is_none() => engel(),
        "htype" => {
            let alg = arg
                .and_then(CompositionAlgebra::parse)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown composition algebra in '{name}'")))?;
            htype(alg)
        }
        _ => Err(Error::InvalidArgument(format!("unknown catalog group '{name}'"))),
    }
}

/// Representative catalog entries listed by the CLI.
pub fn listing() -> Vec<String> {
    vec![
        "abelian(3)".into(),
        "heisenberg(1)".into(),
        "heisenberg(2)".into(),
        "htype(complex)".into(),
        "htype(quaternion)".into(),
        "htype(octonion)".into(),
        "engel".into(),
        "free2(3)".into(),
        "filiform(5)".into(),
    ]
}
