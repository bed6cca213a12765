//! Labels, model parameters and the dynamic-edge machinery shared by the
//! samplers and the likelihood evaluator.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Community labels, one `+1` or `-1` per node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct LabelVector(Vec<i8>);

impl LabelVector {
    pub fn new(labels: Vec<i8>) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::range("n", format!("need at least 2 nodes, got {}", labels.len())));
        }
        if let Some(bad) = labels.iter().find(|&&l| l != 1 && l != -1) {
            return Err(Error::range("labels", format!("label {bad} is not +1 or -1")));
        }
        Ok(LabelVector(labels))
    }

    /// Labeling number `code` in binary order: bit `i` set means node `i` is `-1`.
    pub fn from_code(n: usize, code: u64) -> Self {
        debug_assert!(n <= 64);
        LabelVector((0..n).map(|i| if code >> i & 1 == 1 { -1 } else { 1 }).collect())
    }

    /// Inverse of [`LabelVector::from_code`]; only meaningful for `n <= 64`.
    pub fn code(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == -1)
            .fold(0, |acc, (i, _)| acc | 1 << i)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn get(&self, i: usize) -> i8 {
        self.0[i]
    }

    pub fn same(&self, i: usize, j: usize) -> bool {
        self.0[i] == self.0[j]
    }

    /// The globally flipped labeling `-y`.
    pub fn flipped(&self) -> Self {
        LabelVector(self.0.iter().map(|l| -l).collect())
    }
}

impl TryFrom<Vec<i8>> for LabelVector {
    type Error = Error;

    fn try_from(v: Vec<i8>) -> Result<Self> {
        LabelVector::new(v)
    }
}

impl From<LabelVector> for Vec<i8> {
    fn from(y: LabelVector) -> Self {
        y.0
    }
}

/// A history-dependent edge factor `f_k : {0,1}^k -> (0,1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Modifier {
    /// `f ≡ 1`; the dynamic model reduces to its static counterpart.
    One,
    /// `f ≡ value`.
    Constant { value: f64 },
    /// `f(a) = max(floor, gamma^{Σa})`.
    Geometric { gamma: f64, floor: f64 },
    /// `f(a) = 1 / (1 + Σa)`.
    Harmonic,
}

impl Modifier {
    pub fn validate(&self) -> Result<()> {
        let unit = |field, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::range(field, format!("{v} not in (0, 1]")))
            }
        };
        match *self {
            Modifier::One | Modifier::Harmonic => Ok(()),
            Modifier::Constant { value } => unit("modifier.value", value),
            Modifier::Geometric { gamma, floor } => {
                unit("modifier.gamma", gamma)?;
                unit("modifier.floor", floor)
            }
        }
    }

    /// Evaluates the factor on the predecessor edges `history`.
    pub fn evaluate(&self, history: &[bool]) -> Result<f64> {
        let ones = history.iter().filter(|&&a| a).count();
        let value = match *self {
            Modifier::One => 1.0,
            Modifier::Constant { value } => value,
            Modifier::Geometric { gamma, floor } => gamma.powi(ones as i32).max(floor),
            Modifier::Harmonic => 1.0 / (1.0 + ones as f64),
        };
        if value > 0.0 && value <= 1.0 {
            Ok(value)
        } else {
            Err(Error::ModifierRange { value })
        }
    }
}

/// Which earlier edges an edge's distribution may depend on.
///
/// Undirected pairs `(i, j)`, `i < j`, are generated in lexicographic order;
/// every choice here selects a subset of the pairs generated before `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Predecessors {
    /// Every lexicographically earlier pair.
    #[default]
    Full,
    /// The last `size` generated pairs.
    Window { size: usize },
}

impl Predecessors {
    /// Positions, in generation order, of the predecessors of the `t`-th pair.
    pub fn range(&self, t: usize) -> Range<usize> {
        match *self {
            Predecessors::Full => 0..t,
            Predecessors::Window { size } => t.saturating_sub(size)..t,
        }
    }

    /// The predecessor set of pair `(i, j)` as explicit node pairs.
    pub fn pairs(&self, n: usize, i: usize, j: usize) -> Vec<(usize, usize)> {
        let order = undirected_pairs(n);
        let t = order
            .iter()
            .position(|&p| p == (i, j))
            .expect("pair must satisfy i < j < n");
        order[self.range(t)].to_vec()
    }
}

/// All pairs `(i, j)` with `i < j < n`, in lexicographic generation order.
pub fn undirected_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// All pairs `(j, i)` with `j < i < n` (edge `j -> i`), ordered by target
/// node `i`, then source `j`: the order in which the directed models attach.
pub fn directed_pairs(n: usize) -> Vec<(usize, usize)> {
    (1..n).flat_map(|i| (0..i).map(move |j| (j, i))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Sbm,
    Ergm,
    Lsm,
    Dsbm,
    Dlsm,
    Dpam,
    Dswm,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModelKind::Sbm => "sbm",
            ModelKind::Ergm => "ergm",
            ModelKind::Lsm => "lsm",
            ModelKind::Dsbm => "dsbm",
            ModelKind::Dlsm => "dlsm",
            ModelKind::Dpam => "dpam",
            ModelKind::Dswm => "dswm",
        };
        f.write_str(s)
    }
}

/// Parameters of one of the seven generative models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Sbm {
        p: f64,
        q: f64,
    },
    Ergm {
        beta: f64,
    },
    Lsm {
        d: usize,
        mu: Vec<f64>,
        sigma: f64,
    },
    Dsbm {
        p: f64,
        q: f64,
        modifier: Modifier,
        #[serde(default)]
        predecessors: Predecessors,
    },
    Dlsm {
        d: usize,
        mu: Vec<f64>,
        sigma: f64,
        modifier: Modifier,
        #[serde(default)]
        predecessors: Predecessors,
    },
    Dpam {
        m: usize,
        s: f64,
    },
    Dswm {
        m: usize,
        s: f64,
        p_mix: f64,
    },
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Sbm { .. } => ModelKind::Sbm,
            ModelSpec::Ergm { .. } => ModelKind::Ergm,
            ModelSpec::Lsm { .. } => ModelKind::Lsm,
            ModelSpec::Dsbm { .. } => ModelKind::Dsbm,
            ModelSpec::Dlsm { .. } => ModelKind::Dlsm,
            ModelSpec::Dpam { .. } => ModelKind::Dpam,
            ModelSpec::Dswm { .. } => ModelKind::Dswm,
        }
    }

    pub fn is_directed(&self) -> bool {
        matches!(self, ModelSpec::Dpam { .. } | ModelSpec::Dswm { .. })
    }

    /// True when edges are conditionally independent given the labels.
    pub fn has_independent_edges(&self) -> bool {
        matches!(self, ModelSpec::Sbm { .. } | ModelSpec::Ergm { .. } | ModelSpec::Lsm { .. })
    }

    pub fn has_latents(&self) -> bool {
        matches!(self, ModelSpec::Lsm { .. } | ModelSpec::Dlsm { .. })
    }

    /// Generation order of the candidate edges for `n` nodes.
    pub fn pair_order(&self, n: usize) -> Vec<(usize, usize)> {
        if self.is_directed() {
            directed_pairs(n)
        } else {
            undirected_pairs(n)
        }
    }

    /// Checks every parameter range for a graph on `n` nodes.
    pub fn validate(&self, n: usize) -> Result<()> {
        if n < 2 {
            return Err(Error::range("n", format!("need at least 2 nodes, got {n}")));
        }
        match self {
            ModelSpec::Sbm { p, q } | ModelSpec::Dsbm { p, q, .. } => check_pq(*p, *q)?,
            ModelSpec::Ergm { beta } => {
                if !(beta.is_finite() && *beta > 0.0) {
                    return Err(Error::range("beta", format!("{beta} must be > 0")));
                }
            }
            ModelSpec::Lsm { d, mu, sigma } | ModelSpec::Dlsm { d, mu, sigma, .. } => {
                check_latent(*d, mu, *sigma)?
            }
            ModelSpec::Dpam { m, s } => check_attachment(*m, *s, n)?,
            ModelSpec::Dswm { m, s, p_mix } => {
                check_attachment(*m, *s, n)?;
                if !(*p_mix > 0.0 && *p_mix < 1.0) {
                    return Err(Error::range("p_mix", format!("{p_mix} not in (0, 1)")));
                }
            }
        }
        if let ModelSpec::Dsbm { modifier, .. } | ModelSpec::Dlsm { modifier, .. } = self {
            modifier.validate()?;
        }
        Ok(())
    }

    /// Sweepable parameter names with their current values, in column order.
    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match self {
            ModelSpec::Sbm { p, q } | ModelSpec::Dsbm { p, q, .. } => vec![("p", *p), ("q", *q)],
            ModelSpec::Ergm { beta } => vec![("beta", *beta)],
            ModelSpec::Lsm { d, mu, sigma } | ModelSpec::Dlsm { d, mu, sigma, .. } => {
                vec![("d", *d as f64), ("sigma", *sigma), ("mu_norm", norm(mu))]
            }
            ModelSpec::Dpam { m, s } => vec![("m", *m as f64), ("s", *s)],
            ModelSpec::Dswm { m, s, p_mix } => {
                vec![("m", *m as f64), ("s", *s), ("p_mix", *p_mix)]
            }
        }
    }

    /// Returns a copy with parameter `name` set to `value`.
    ///
    /// `mu_norm` rescales `mu` to the requested Euclidean norm, keeping its
    /// direction; `d` resizes `mu`, keeping its norm along the first axis.
    pub fn with_param(&self, name: &str, value: f64) -> Result<ModelSpec> {
        let mut spec = self.clone();
        let unknown = || Error::Config(format!("model `{}` has no parameter `{name}`", self.kind()));
        let as_count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!("parameter `{name}` must be a whole number, got {v}")))
            }
        };
        match (&mut spec, name) {
            (ModelSpec::Sbm { p, .. } | ModelSpec::Dsbm { p, .. }, "p") => *p = value,
            (ModelSpec::Sbm { q, .. } | ModelSpec::Dsbm { q, .. }, "q") => *q = value,
            (ModelSpec::Ergm { beta }, "beta") => *beta = value,
            (ModelSpec::Lsm { sigma, .. } | ModelSpec::Dlsm { sigma, .. }, "sigma") => {
                *sigma = value
            }
            (ModelSpec::Lsm { mu, .. } | ModelSpec::Dlsm { mu, .. }, "mu_norm") => {
                let current = norm(mu);
                if current > 0.0 {
                    mu.iter_mut().for_each(|x| *x *= value / current);
                } else if let Some(first) = mu.first_mut() {
                    *first = value;
                }
            }
            (ModelSpec::Lsm { d, mu, .. } | ModelSpec::Dlsm { d, mu, .. }, "d") => {
                let dim = as_count(value)?;
                let len = norm(mu);
                *d = dim;
                *mu = vec![0.0; dim];
                if let Some(first) = mu.first_mut() {
                    *first = len;
                }
            }
            (ModelSpec::Dpam { m, .. } | ModelSpec::Dswm { m, .. }, "m") => *m = as_count(value)?,
            (ModelSpec::Dpam { s, .. } | ModelSpec::Dswm { s, .. }, "s") => *s = value,
            (ModelSpec::Dswm { p_mix, .. }, "p_mix") => *p_mix = value,
            _ => return Err(unknown()),
        }
        Ok(spec)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_pq(p: f64, q: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::range("q", format!("{q} not in (0, 1)")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::range("p", format!("{p} not in (0, 1)")));
    }
    if q >= p {
        return Err(Error::range("q", "q<p violated"));
    }
    Ok(())
}

fn check_latent(d: usize, mu: &[f64], sigma: f64) -> Result<()> {
    if d == 0 {
        return Err(Error::range("d", "dimension must be at least 1"));
    }
    if mu.len() != d {
        return Err(Error::Dimension {
            expected: d,
            actual: mu.len(),
        });
    }
    if mu.iter().any(|x| !x.is_finite()) {
        return Err(Error::range("mu", "entries must be finite"));
    }
    if mu.iter().all(|&x| x == 0.0) {
        return Err(Error::range("mu", "μ ≠ 0 required"));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::range("sigma", format!("{sigma} must be > 0")));
    }
    Ok(())
}

fn check_attachment(m: usize, s: f64, n: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::range("m", "must be a positive integer"));
    }
    if n < m + 1 {
        return Err(Error::range("m", format!("need n ≥ m + 1, got n = {n}, m = {m}")));
    }
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::range("s", format!("{s} must be ≥ 0")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(e: Error) -> &'static str {
        match e {
            Error::Range { field, .. } => field,
            other => panic!("expected range error, got {other:?}"),
        }
    }

    #[test]
    fn validate_examples() {
        assert!(ModelSpec::Sbm { p: 0.6, q: 0.4 }.validate(10).is_ok());
        let err = ModelSpec::Sbm { p: 0.4, q: 0.6 }.validate(10).unwrap_err();
        assert!(err.to_string().contains("q<p violated"));
        let lsm = ModelSpec::Lsm {
            d: 2,
            mu: vec![0.0, 0.0],
            sigma: 1.0,
        };
        let err = lsm.validate(5).unwrap_err();
        assert!(err.to_string().contains("μ ≠ 0 required"));
        assert_eq!(field(err), "mu");
    }

    #[test]
    fn dimension_mismatch() {
        let lsm = ModelSpec::Lsm {
            d: 3,
            mu: vec![1.0, 0.0],
            sigma: 1.0,
        };
        assert!(matches!(
            lsm.validate(4),
            Err(Error::Dimension {
                expected: 3,
                actual: 2
            })
        ));
        let zero_d = ModelSpec::Lsm {
            d: 0,
            mu: vec![],
            sigma: 1.0,
        };
        assert_eq!(field(zero_d.validate(4).unwrap_err()), "d");
    }

    #[test]
    fn directed_models_need_room() {
        assert!(ModelSpec::Dpam { m: 3, s: 1.0 }.validate(4).is_ok());
        assert_eq!(field(ModelSpec::Dpam { m: 3, s: 1.0 }.validate(3).unwrap_err()), "m");
        assert_eq!(field(ModelSpec::Dpam { m: 0, s: 1.0 }.validate(3).unwrap_err()), "m");
        let dswm = ModelSpec::Dswm {
            m: 2,
            s: 1.0,
            p_mix: 1.0,
        };
        assert_eq!(field(dswm.validate(5).unwrap_err()), "p_mix");
    }

    #[test]
    fn modifier_ranges() {
        let bad = ModelSpec::Dsbm {
            p: 0.6,
            q: 0.4,
            modifier: Modifier::Geometric { gamma: 1.5, floor: 0.1 },
            predecessors: Predecessors::Full,
        };
        assert_eq!(field(bad.validate(4).unwrap_err()), "modifier.gamma");
        assert_eq!(Modifier::Harmonic.evaluate(&[true, true, false]).unwrap(), 1.0 / 3.0);
        let g = Modifier::Geometric { gamma: 0.5, floor: 0.2 };
        assert_eq!(g.evaluate(&[true]).unwrap(), 0.5);
        assert_eq!(g.evaluate(&[true; 5]).unwrap(), 0.2);
        assert!(matches!(
            Modifier::Constant { value: 0.0 }.evaluate(&[]),
            Err(Error::ModifierRange { .. })
        ));
    }

    #[test]
    fn predecessor_sets_are_lexicographic_predecessors() {
        let n = 6;
        for tau in [Predecessors::Full, Predecessors::Window { size: 3 }] {
            for (i, j) in undirected_pairs(n) {
                for (k, l) in tau.pairs(n, i, j) {
                    assert!(k < l && (k < i || (k == i && l < j)), "({k},{l}) before ({i},{j})");
                }
            }
        }
        assert_eq!(Predecessors::Full.pairs(3, 1, 2), vec![(0, 1), (0, 2)]);
        assert_eq!(Predecessors::Window { size: 1 }.pairs(3, 1, 2), vec![(0, 2)]);
    }

    #[test]
    fn label_codes() {
        let y = LabelVector::new(vec![1, -1, -1]).unwrap();
        assert_eq!(y.code(), 0b110);
        assert_eq!(LabelVector::from_code(3, 0b110), y);
        assert_eq!(y.flipped().code(), 0b001);
        assert!(LabelVector::new(vec![1, 0]).is_err());
        assert!(LabelVector::new(vec![1]).is_err());
    }

    #[test]
    fn spec_json_shape() {
        let spec: ModelSpec =
            serde_json::from_str(r#"{"kind":"dsbm","p":0.8,"q":0.2,"modifier":{"kind":"harmonic"}}"#)
                .unwrap();
        assert_eq!(
            spec,
            ModelSpec::Dsbm {
                p: 0.8,
                q: 0.2,
                modifier: Modifier::Harmonic,
                predecessors: Predecessors::Full
            }
        );
        assert!(serde_json::from_str::<ModelSpec>(r#"{"kind":"sbm","p":0.8,"q":0.2,"r":1}"#).is_err());
    }

    #[test]
    fn with_param() {
        let spec = ModelSpec::Lsm {
            d: 2,
            mu: vec![3.0, 4.0],
            sigma: 1.0,
        };
        let scaled = spec.with_param("mu_norm", 1.0).unwrap();
        assert_eq!(scaled.params()[2], ("mu_norm", 1.0));
        assert!(spec.with_param("p", 0.5).is_err());
        assert!(ModelSpec::Dpam { m: 2, s: 1.0 }.with_param("m", 2.5).is_err());
    }
}
