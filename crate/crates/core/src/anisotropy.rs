//! Norms `φ` and the anisotropic perimeter `Per_φ(P) = Σ_i φ(ν_i)·|F_i|`
//! of a polytope with facets `F_i` and unit outward normals `ν_i`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::voronoi::VoronoiCell;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum NormKind {
    #[serde(rename = "euclidean")]
    Euclidean,
    /// ℓᵖ norm, `p ∈ [1, ∞]`.
    #[serde(rename = "p")]
    P {
        #[serde(with = "p_exponent")]
        p: f64,
    },
    /// `φ(x) = (Σ w_i x_i²)^{1/2}`
    #[serde(rename = "weighted")]
    Weighted { w: Vec<f64> },
    /// `φ(x) = Σ_j c_j |u_j · x|`
    #[serde(rename = "polyhedral")]
    Polyhedral {
        dirs: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
}

/// A validated norm. The `smooth` flag records whether `φ²` is uniformly
/// convex and C²; it is carried along, not verified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NormSpecJson", into = "NormSpecJson")]
pub struct NormSpec {
    kind: NormKind,
    smooth: bool,
}

#[derive(Serialize, Deserialize)]
struct NormSpecJson {
    #[serde(flatten)]
    kind: NormKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    smooth: Option<bool>,
}

impl TryFrom<NormSpecJson> for NormSpec {
    type Error = Error;
    fn try_from(json: NormSpecJson) -> Result<Self> {
        let mut spec = NormSpec::new(json.kind)?;
        if let Some(smooth) = json.smooth {
            spec.smooth = smooth;
        }
        Ok(spec)
    }
}

impl From<NormSpec> for NormSpecJson {
    fn from(spec: NormSpec) -> Self {
        let default = NormSpec::default_smoothness(&spec.kind);
        NormSpecJson {
            smooth: (spec.smooth != default).then_some(spec.smooth),
            kind: spec.kind,
        }
    }
}

mod p_exponent {
    use super::*;

    pub fn serialize<S: Serializer>(p: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if p.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*p)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(p) => Ok(p),
            Raw::Str(s) if matches!(s.as_str(), "inf" | "infinity" | "Infinity") => {
                Ok(f64::INFINITY)
            }
            Raw::Str(s) => Err(serde::de::Error::custom(format!("bad exponent `{s}`"))),
        }
    }
}

impl NormSpec {
    pub fn new(kind: NormKind) -> Result<Self> {
        match &kind {
            NormKind::Euclidean => {}
            NormKind::P { p } => {
                if !(*p >= 1.0) {
                    return Err(Error::InvalidNormSpec(format!("p must be >= 1, got {p}")));
                }
            }
            NormKind::Weighted { w } => {
                if w.is_empty() || w.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
                    return Err(Error::InvalidNormSpec(
                        "weights must be positive and finite".into(),
                    ));
                }
            }
            NormKind::Polyhedral { dirs, weights } => {
                if dirs.is_empty() || dirs.len() != weights.len() {
                    return Err(Error::InvalidNormSpec(
                        "polyhedral norm needs one weight per direction".into(),
                    ));
                }
                if weights.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
                    return Err(Error::InvalidNormSpec("weights must be positive".into()));
                }
                let n = dirs[0].len();
                if n == 0 || dirs.iter().any(|u| u.len() != n) {
                    return Err(Error::InvalidNormSpec(
                        "directions must share one nonzero dimension".into(),
                    ));
                }
                let m = nalgebra::DMatrix::from_fn(dirs.len(), n, |i, j| dirs[i][j]);
                if m.rank(1e-12 * m.norm()) < n {
                    return Err(Error::InvalidNormSpec(
                        "directions must span the space".into(),
                    ));
                }
            }
        }
        let smooth = Self::default_smoothness(&kind);
        Ok(NormSpec { kind, smooth })
    }

    pub fn euclidean() -> Self {
        NormSpec {
            kind: NormKind::Euclidean,
            smooth: true,
        }
    }

    pub fn p_norm(p: f64) -> Result<Self> {
        Self::new(NormKind::P { p })
    }

    pub fn weighted(w: Vec<f64>) -> Result<Self> {
        Self::new(NormKind::Weighted { w })
    }

    pub fn polyhedral(dirs: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        Self::new(NormKind::Polyhedral { dirs, weights })
    }

    pub fn with_smooth(mut self, smooth: bool) -> Self {
        self.smooth = smooth;
        self
    }

    fn default_smoothness(kind: &NormKind) -> bool {
        match kind {
            NormKind::Euclidean | NormKind::Weighted { .. } => true,
            NormKind::P { p } => *p == 2.0,
            NormKind::Polyhedral { .. } => false,
        }
    }

    pub fn kind(&self) -> &NormKind {
        &self.kind
    }

    pub fn is_smooth(&self) -> bool {
        self.smooth
    }

    /// Rotation invariant, i.e. a multiple of the Euclidean norm.
    pub fn is_isotropic(&self) -> bool {
        match &self.kind {
            NormKind::Euclidean => true,
            NormKind::P { p } => *p == 2.0,
            NormKind::Weighted { w } => w.iter().all(|x| *x == w[0]),
            NormKind::Polyhedral { .. } => false,
        }
    }

    /// Dimension the norm is tied to, if any.
    pub fn fixed_dim(&self) -> Option<usize> {
        match &self.kind {
            NormKind::Weighted { w } => Some(w.len()),
            NormKind::Polyhedral { dirs, .. } => Some(dirs[0].len()),
            _ => None,
        }
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        match self.fixed_dim() {
            Some(d) if d != n => Err(Error::InvalidNormSpec(format!(
                "norm is defined on R^{d}, applied in R^{n}"
            ))),
            _ => Ok(()),
        }
    }

    /// Short label used in reports.
    pub fn label(&self) -> String {
        match &self.kind {
            NormKind::Euclidean => "euclidean".into(),
            NormKind::P { p } if p.is_infinite() => "p:inf".into(),
            NormKind::P { p } => format!("p:{p}"),
            NormKind::Weighted { w } => format!(
                "weighted:{}",
                w.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
            ),
            NormKind::Polyhedral { dirs, .. } => format!("polyhedral:{}", dirs.len()),
        }
    }
}

impl std::str::FromStr for NormSpec {
    type Err = Error;

    /// Accepts a JSON object or one of `euclidean`, `p:<p>`, `p:inf`,
    /// `weighted:<w1>,<w2>,…`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return serde_json::from_str(s).map_err(|e| Error::InvalidNormSpec(e.to_string()));
        }
        let bad = || Error::InvalidNormSpec(format!("cannot parse norm `{s}`"));
        match s.split_once(':') {
            None if s == "euclidean" => Ok(Self::euclidean()),
            Some(("p", p)) => {
                let p = if p == "inf" {
                    f64::INFINITY
                } else {
                    p.parse().map_err(|_| bad())?
                };
                Self::p_norm(p)
            }
            Some(("weighted", w)) => {
                let w = w
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| bad())?;
                Self::weighted(w)
            }
            _ => Err(bad()),
        }
    }
}

/// `φ(x)`. Even and positively 1-homogeneous.
pub fn eval_norm(spec: &NormSpec, x: &[f64]) -> f64 {
    match &spec.kind {
        NormKind::Euclidean => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        NormKind::P { p } => {
            let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if scale == 0.0 || p.is_infinite() {
                return scale;
            }
            let sum: f64 = x.iter().map(|v| (v.abs() / scale).powf(*p)).sum();
            scale * sum.powf(1.0 / p)
        }
        NormKind::Weighted { w } => w
            .iter()
            .zip(x)
            .map(|(wi, xi)| wi * xi * xi)
            .sum::<f64>()
            .sqrt(),
        NormKind::Polyhedral { dirs, weights } => dirs
            .iter()
            .zip(weights)
            .map(|(u, c)| c * crate::lattice::dot(u, x).abs())
            .sum(),
    }
}

/// `Per_φ` of the cell: the φ-weighted sum of facet measures.
pub fn perimeter(cell: &VoronoiCell, spec: &NormSpec) -> Result<f64> {
    spec.check_dim(cell.dim())?;
    let terms: Vec<f64> = cell
        .facets
        .iter()
        .map(|f| eval_norm(spec, &f.normal) * f.measure)
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Summation in a fixed binary-tree order.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        len => {
            let (a, b) = xs.split_at(len / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}
