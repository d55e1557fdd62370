//! Finitely generated matrix groups given by labelled generators.
//!
//! Generators carry single lowercase labels; the uppercase letter is the
//! inverse. Words are plain strings over these letters.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cartan::{kappa, LinearFunctional};
use crate::error::{Error, Result};
use crate::matrix::{matrix_from_rows, matrix_rows, GroupElement, Matrix};
use crate::trajectory::Trajectory;

/// Default node cap for [`word_ball`].
pub const DEFAULT_NODE_CAP: usize = 2_000_000;
/// Quantization step of the dedup hash.
pub const DEFAULT_DEDUP_TOL: f64 = 1e-8;
/// Two elements hashed together are merged when they agree to this,
/// relative to the entry scale.
pub const CONFIRM_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relations {
    Free,
    Unknown,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSet {
    labels: Vec<char>,
    gens: Vec<GroupElement>,
    invs: Vec<GroupElement>,
    relations: Relations,
    /// Only positive words: the generated semigroup.
    semigroup: bool,
    dim: usize,
}

impl GeneratorSet {
    pub fn new(labels: Vec<char>, gens: Vec<GroupElement>, relations: Relations, dim: usize) -> Result<Self> {
        if labels.len() != gens.len() {
            return Err(Error::DimensionMismatch { expected: labels.len(), found: gens.len() });
        }
        for (i, c) in labels.iter().enumerate() {
            if !c.is_ascii_lowercase() {
                return Err(Error::InvalidArgument(format!("label {c:?} is not a lowercase letter")));
            }
            if labels[..i].contains(c) {
                return Err(Error::InvalidArgument(format!("label {c:?} repeated")));
            }
        }
        let mut invs = Vec::with_capacity(gens.len());
        for g in &gens {
            if g.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: g.dim() });
            }
            let scale = g.matrix().amax() * g.inverse_matrix().amax();
            let err = (g.matrix() * g.inverse_matrix() - Matrix::identity(dim, dim)).amax();
            if err > CONFIRM_TOL * scale.max(1.0) {
                return Err(Error::InvalidArgument(format!("generator inverse off by {err:.3e}")));
            }
            invs.push(g.inverse());
        }
        Ok(GeneratorSet { labels, gens, invs, relations, semigroup: false, dim })
    }

    /// Restricts word enumeration to positive words.
    pub fn as_semigroup(mut self) -> Self {
        self.semigroup = true;
        self
    }

    pub fn labels(&self) -> &[char] {
        &self.labels
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.gens
    }

    pub fn relations(&self) -> Relations {
        self.relations
    }

    pub fn is_semigroup(&self) -> bool {
        self.semigroup
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Letters usable in words, in a fixed order: generators, then inverses.
    pub fn alphabet(&self) -> Vec<char> {
        let mut a = self.labels.clone();
        if !self.semigroup {
            a.extend(self.labels.iter().map(|c| c.to_ascii_uppercase()));
        }
        a
    }

    pub fn letter(&self, c: char) -> Result<&GroupElement> {
        let lower = c.to_ascii_lowercase();
        let i = self
            .labels
            .iter()
            .position(|&l| l == lower)
            .ok_or_else(|| Error::Parse(format!("unknown letter {c:?}")))?;
        Ok(if c.is_ascii_uppercase() { &self.invs[i] } else { &self.gens[i] })
    }

    /// Product of the letters of `word`; the empty word is the identity.
    pub fn evaluate(&self, word: &str) -> Result<GroupElement> {
        let mut g = GroupElement::identity(self.dim);
        for c in word.chars() {
            g = g.compose(self.letter(c)?);
        }
        Ok(g)
    }

    /// `{labels, matrices}` with optional `relations` and `semigroup`.
    pub fn to_json(&self) -> Value {
        json!({
            "labels": self.labels.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "matrices": self.gens.iter().map(|g| matrix_rows(g.matrix())).collect::<Vec<_>>(),
            "relations": self.relations,
            "semigroup": self.semigroup,
            "dim": self.dim,
        })
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Repr {
            labels: Vec<String>,
            matrices: Vec<Vec<Vec<f64>>>,
            relations: Option<Relations>,
            #[serde(default)]
            semigroup: bool,
            dim: Option<usize>,
        }
        let r: Repr = serde_json::from_value(value.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        let mut labels = Vec::new();
        for l in &r.labels {
            let mut chars = l.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => labels.push(c),
                _ => return Err(Error::Parse(format!("label {l:?} must be one character"))),
            }
        }
        let gens = r
            .matrices
            .iter()
            .map(|rows| GroupElement::new(matrix_from_rows(rows)?))
            .collect::<Result<Vec<_>>>()?;
        let dim = r.dim.or(gens.first().map(|g| g.dim())).ok_or(Error::EmptyInput)?;
        let set = GeneratorSet::new(labels, gens, r.relations.unwrap_or(Relations::Unknown), dim)?;
        Ok(if r.semigroup { set.as_semigroup() } else { set })
    }
}

fn inverse_letter(c: char) -> char {
    if c.is_ascii_uppercase() {
        c.to_ascii_lowercase()
    } else {
        c.to_ascii_uppercase()
    }
}

/// Formal inverse: reversed with letters inverted.
pub fn inverse_word(word: &str) -> String {
    word.chars().rev().map(inverse_letter).collect()
}

/// Free reduction: cancels adjacent `xX` and `Xx`.
pub fn reduce_word(word: &str) -> String {
    let mut out: Vec<char> = Vec::with_capacity(word.len());
    for c in word.chars() {
        if out.last() == Some(&inverse_letter(c)) {
            out.pop();
        } else {
            out.push(c);
        }
    }
    out.into_iter().collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct WordNode {
    pub word: String,
    pub element: GroupElement,
    pub length: usize,
}

impl WordNode {
    pub fn to_json(&self) -> Value {
        json!({ "word": self.word, "length": self.length, "matrix": matrix_rows(self.element.matrix()) })
    }
}

fn quantize(g: &GroupElement, tol: f64) -> Vec<i64> {
    let scale = g.matrix().amax().max(1.0);
    g.matrix().iter().map(|x| (x / (tol * scale)).round() as i64).collect()
}

/// Ball of the given word radius with the default node cap.
pub fn word_ball(gens: &GeneratorSet, radius: usize, dedup_tol: f64) -> Result<Vec<WordNode>> {
    word_ball_capped(gens, radius, dedup_tol, DEFAULT_NODE_CAP)
}

/// Breadth-first enumeration of reduced words up to `radius`.
///
/// Each level is generated, sorted by word and then merged into a table
/// keyed by entries quantized at `dedup_tol`; a key hit counts as the same
/// element only when entries agree to [`CONFIRM_TOL`]. The first word to
/// reach an element keeps it, so survivors are the shortest and then the
/// lexicographically smallest words. Output is sorted by (length, word).
pub fn word_ball_capped(gens: &GeneratorSet, radius: usize, dedup_tol: f64, cap: usize) -> Result<Vec<WordNode>> {
    if !(dedup_tol > 0.0) {
        return Err(Error::InvalidArgument("dedup tolerance must be positive".into()));
    }
    let alphabet = gens.alphabet();
    let mut nodes = vec![WordNode { word: String::new(), element: GroupElement::identity(gens.dim()), length: 0 }];
    let mut table: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    table.entry(quantize(&nodes[0].element, dedup_tol)).or_default().push(0);
    let mut frontier = vec![0usize];
    for len in 1..=radius {
        let mut candidates: Vec<(String, GroupElement)> = Vec::new();
        for &i in &frontier {
            let last = nodes[i].word.chars().last();
            for &c in &alphabet {
                if last == Some(inverse_letter(c)) {
                    continue;
                }
                let mut w = nodes[i].word.clone();
                w.push(c);
                candidates.push((w, nodes[i].element.compose(gens.letter(c)?)));
            }
            if nodes.len() + candidates.len() > cap {
                return Err(Error::ExplosionGuard(cap));
            }
        }
        candidates.sort_by(|a, b| a.0.cmp(&b.0));
        let mut next = Vec::new();
        for (word, element) in candidates {
            let key = quantize(&element, dedup_tol);
            let scale = element.matrix().amax().max(1.0);
            let bucket = table.entry(key).or_default();
            if bucket.iter().any(|&j| nodes[j].element.max_abs_diff(&element) <= CONFIRM_TOL * scale) {
                continue;
            }
            bucket.push(nodes.len());
            next.push(nodes.len());
            nodes.push(WordNode { word, element, length: len });
        }
        frontier = next;
    }
    nodes.sort_by(|a, b| a.length.cmp(&b.length).then_with(|| a.word.cmp(&b.word)));
    Ok(nodes)
}

/// An eventually periodic infinite word `pre(period)`, e.g. `(a)` for a^∞
/// or `ba(ab)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RayPattern {
    pub prefix: String,
    pub period: String,
}

impl RayPattern {
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let open = spec.find('(').ok_or_else(|| Error::Parse(format!("pattern {spec:?} needs a (period)")))?;
        if !spec.ends_with(')') || open + 1 >= spec.len() - 1 {
            return Err(Error::Parse(format!("pattern {spec:?} must end with a non-empty (period)")));
        }
        let prefix = spec[..open].to_string();
        let period = spec[open + 1..spec.len() - 1].to_string();
        if prefix.chars().chain(period.chars()).any(|c| !c.is_ascii_alphabetic()) {
            return Err(Error::Parse(format!("pattern {spec:?} has non-letter symbols")));
        }
        Ok(RayPattern { prefix, period })
    }

    /// First n letters.
    pub fn letters(&self, n: usize) -> String {
        self.prefix.chars().chain(self.period.chars().cycle()).take(n).collect()
    }

    /// Reduced means no cancellation anywhere in the infinite word.
    pub fn check_reduced(&self) -> Result<()> {
        let probe = self.letters(self.prefix.len() + 2 * self.period.len() + 1);
        if reduce_word(&probe).len() != probe.len() {
            return Err(Error::NotReduced(format!("{}({})", self.prefix, self.period)));
        }
        Ok(())
    }
}

/// Prefix products `w₁, w₁w₂, …` of length 1..=n.
pub fn geodesic_ray_words(gens: &GeneratorSet, pattern: &RayPattern, n: usize) -> Result<Vec<GroupElement>> {
    pattern.check_reduced()?;
    let letters = pattern.letters(n);
    let mut out = Vec::with_capacity(n);
    let mut g = GroupElement::identity(gens.dim());
    for c in letters.chars() {
        g = g.compose(gens.letter(c)?);
        out.push(g.clone());
    }
    Ok(out)
}

/// Sequence of words whose displacement `w_m⁻¹w_n` is freely reduced
/// before it is multiplied out.
pub struct WordSequence<'a> {
    gens: &'a GeneratorSet,
    words: Vec<String>,
}

impl<'a> WordSequence<'a> {
    pub fn new(gens: &'a GeneratorSet, words: Vec<String>) -> Result<Self> {
        for w in &words {
            for c in w.chars() {
                gens.letter(c)?;
            }
        }
        Ok(WordSequence { gens, words })
    }

    /// Prefixes of length 1..=n of a ray pattern.
    pub fn ray(gens: &'a GeneratorSet, pattern: &RayPattern, n: usize) -> Result<Self> {
        pattern.check_reduced()?;
        let letters = pattern.letters(n);
        Self::new(gens, (1..=n).map(|k| letters[..k].to_string()).collect())
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

impl Trajectory for WordSequence<'_> {
    fn len(&self) -> usize {
        self.words.len()
    }

    fn dim(&self) -> usize {
        self.gens.dim()
    }

    fn element(&self, n: usize) -> GroupElement {
        self.gens.evaluate(&self.words[n]).expect("letters checked")
    }

    fn displacement(&self, m: usize, n: usize) -> GroupElement {
        let w = reduce_word(&(inverse_word(&self.words[m]) + &self.words[n]));
        self.gens.evaluate(&w).expect("letters checked")
    }
}

/// `φ(κ(γ))` for each node; round-off negatives above −1e−9 become 0.
pub fn phi_values(ball: &[WordNode], phi: &LinearFunctional) -> Result<Vec<f64>> {
    ball.iter()
        .map(|n| {
            let v = phi.apply(&kappa(&n.element)?)?;
            Ok(if v < 0.0 && v > -1e-9 { 0.0 } else { v })
        })
        .collect()
}

/// `Σ exp(−s·φ(κ(γ)))` over the ball.
pub fn poincare_partial(ball: &[WordNode], phi: &LinearFunctional, s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::InvalidArgument("s must be non-negative".into()));
    }
    Ok(poincare_from_values(&phi_values(ball, phi)?, s))
}

pub fn poincare_from_values(values: &[f64], s: f64) -> f64 {
    // summed in ascending order of the terms for reproducible rounding
    let mut terms: Vec<f64> = values.iter().map(|v| (-s * v).exp()).collect();
    terms.sort_by(|a, b| a.total_cmp(b));
    terms.iter().sum()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnnulusRow {
    pub length: usize,
    pub count: usize,
    pub log_count: f64,
    /// Mean of φ(κ) over the annulus.
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadiusEstimate {
    pub radius: usize,
    pub slope: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalExponent {
    pub delta_low: f64,
    pub delta_high: f64,
    pub annuli: Vec<AnnulusRow>,
    pub per_radius: Vec<RadiusEstimate>,
    /// Largest standard error among the radii used for the bracket.
    pub slack: f64,
}

/// Per-length counts and mean φ-scales from a ball.
pub fn annulus_table(ball: &[WordNode], values: &[f64]) -> Vec<AnnulusRow> {
    let max_len = ball.iter().map(|n| n.length).max().unwrap_or(0);
    (0..=max_len)
        .filter_map(|l| {
            let vs: Vec<f64> = ball.iter().zip(values).filter(|(n, _)| n.length == l).map(|(_, v)| *v).collect();
            if vs.is_empty() {
                return None;
            }
            Some(AnnulusRow {
                length: l,
                count: vs.len(),
                log_count: (vs.len() as f64).ln(),
                scale: vs.iter().sum::<f64>() / vs.len() as f64,
            })
        })
        .collect()
}

/// Least-squares slope of y on x with its standard error.
fn regress(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 1e-12 * (1.0 + mx * mx) {
        return (0.0, 0.0);
    }
    let slope = sxy / sxx;
    if pts.len() < 3 {
        return (slope, 0.0);
    }
    let rss: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    (slope, (rss / (n - 2.0) / sxx).sqrt())
}

/// Growth-rate estimate of δ_φ.
///
/// For each radius R the slope of `log N_ℓ` against the mean φ-scale of
/// the length-ℓ annulus is fitted over ℓ ∈ [⌈R/2⌉, R]. The bracket spans
/// `slope ± 2·stderr` over the last half of the radius list.
pub fn critical_exponent_estimate(gens: &GeneratorSet, phi: &LinearFunctional, radii: &[usize]) -> Result<CriticalExponent> {
    if radii.len() < 2 || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("radii must be increasing with at least two entries".into()));
    }
    let rmax = *radii.last().unwrap();
    let ball = word_ball(gens, rmax, DEFAULT_DEDUP_TOL)?;
    let values = phi_values(&ball, phi)?;
    let annuli = annulus_table(&ball, &values);
    let mut per_radius = Vec::new();
    for &r in radii {
        let lo = r.div_ceil(2).max(1);
        let pts: Vec<(f64, f64)> = annuli
            .iter()
            .filter(|a| a.length >= lo && a.length <= r)
            .map(|a| (a.scale, a.log_count))
            .collect();
        let (slope, stderr) = if pts.len() >= 2 { regress(&pts) } else { (0.0, 0.0) };
        per_radius.push(RadiusEstimate { radius: r, slope, stderr });
    }
    let used = &per_radius[radii.len() / 2..];
    let delta_low = used.iter().map(|e| e.slope - 2.0 * e.stderr).fold(f64::INFINITY, f64::min).max(0.0);
    let delta_high = used.iter().map(|e| e.slope + 2.0 * e.stderr).fold(f64::NEG_INFINITY, f64::max).max(delta_low);
    let slack = used.iter().map(|e| 2.0 * e.stderr).fold(0.0, f64::max);
    Ok(CriticalExponent { delta_low, delta_high, annuli, per_radius, slack })
}

/// `R_z(b)·R_x(a)·R_z(b)`; all entries non-zero, so conjugated flags are
/// in general position.
fn rot_xz(a: f64, b: f64) -> Matrix {
    let rx = Matrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, a.cos(), -a.sin(), 0.0, a.sin(), a.cos()]);
    let rz = Matrix::from_row_slice(3, 3, &[b.cos(), -b.sin(), 0.0, b.sin(), b.cos(), 0.0, 0.0, 0.0, 1.0]);
    &rz * rx * &rz
}

fn conj(k: &Matrix, g: &GroupElement) -> GroupElement {
    let kk = GroupElement::orthogonal(k.clone()).expect("rotation");
    kk.compose(g).compose(&kk.inverse())
}

/// Boost of the Klein model along the axis at angle `phi` through the
/// centre, translating by `l`.
pub fn klein_boost(l: f64, phi: f64) -> GroupElement {
    let (c, s) = (l.cosh(), l.sinh());
    let b = GroupElement::with_inverse(
        Matrix::from_row_slice(3, 3, &[c, 0.0, s, 0.0, 1.0, 0.0, s, 0.0, c]),
        Matrix::from_row_slice(3, 3, &[c, 0.0, -s, 0.0, 1.0, 0.0, -s, 0.0, c]),
    )
    .expect("boost inverse");
    let r = Matrix::from_row_slice(3, 3, &[phi.cos(), -phi.sin(), 0.0, phi.sin(), phi.cos(), 0.0, 0.0, 0.0, 1.0]);
    conj(&r, &b)
}

/// Irreducible SL(2) → SL(3) image of [[p, q], [r, s]] on quadratic forms.
pub fn principal_sl3(p: f64, q: f64, r: f64, s: f64) -> GroupElement {
    let m = |p: f64, q: f64, r: f64, s: f64| {
        Matrix::from_row_slice(
            3,
            3,
            &[p * p, 2.0 * p * q, q * q, p * r, p * s + q * r, q * s, r * r, 2.0 * r * s, s * s],
        )
    };
    // inverse of [[p,q],[r,s]] in SL(2) is [[s,−q],[−r,p]]
    GroupElement::with_inverse(m(p, q, r, s), m(s, -q, -r, p)).expect("principal image inverse")
}

pub const GALLERY: &[(&str, &str)] = &[
    ("diag-schottky", "SL(3) Schottky pair of conjugated diag(e^3, 1, e^-3); Anosov"),
    ("klein-schottky", "SO(2,1) boosts of length 2 along perpendicular axes of the Klein disk"),
    ("principal-hyperbolic", "principal SL(2)->SL(3) image of a hyperbolic Schottky pair"),
    ("principal-parabolic", "principal image of the level-2 congruence pair; contains unipotents, not Anosov"),
    ("block-unipotent", "J2 (+) J2 in SL(4); first and third gaps vanish"),
    ("reducible-block", "diag(A, R) in SL(4), A hyperbolic, R a rotation; middle gap stays 0"),
    ("cyclic-diagonal", "the cyclic group of diag(e, 1, 1/e)"),
    ("proximal-semigroup", "free semigroup on two proximal SL(3) elements with equal Cartan projection"),
    ("trivial", "no generators in SL(3)"),
];

/// Built-in generator sets by name.
pub fn gallery(name: &str) -> Result<GeneratorSet> {
    let lam = 3.0;
    let set = match name {
        "diag-schottky" => {
            let a = GroupElement::diag_exp(&[lam, 0.0, -lam]);
            let b = conj(&rot_xz(0.9, 0.7), &a);
            GeneratorSet::new(vec!['a', 'b'], vec![a, b], Relations::Free, 3)?
        }
        "klein-schottky" => GeneratorSet::new(
            vec!['a', 'b'],
            vec![klein_boost(2.0, 0.0), klein_boost(2.0, std::f64::consts::FRAC_PI_2)],
            Relations::Free,
            3,
        )?,
        "principal-hyperbolic" => {
            let (c, s) = (1.5f64.cosh(), 1.5f64.sinh());
            // two hyperbolics of translation length 3 with perpendicular axes
            let a = principal_sl3(c + s, 0.0, 0.0, c - s);
            let b = principal_sl3(c, s, s, c);
            GeneratorSet::new(vec!['a', 'b'], vec![a, b], Relations::Free, 3)?
        }
        "principal-parabolic" => GeneratorSet::new(
            vec!['a', 'b'],
            vec![principal_sl3(1.0, 2.0, 0.0, 1.0), principal_sl3(1.0, 0.0, 2.0, 1.0)],
            Relations::Free,
            3,
        )?,
        "block-unipotent" => {
            let mut m = Matrix::identity(4, 4);
            let mut inv = Matrix::identity(4, 4);
            m[(0, 1)] = 1.0;
            m[(2, 3)] = 1.0;
            inv[(0, 1)] = -1.0;
            inv[(2, 3)] = -1.0;
            GeneratorSet::new(vec!['a'], vec![GroupElement::with_inverse(m, inv)?], Relations::Free, 4)?
        }
        "reducible-block" => {
            let t = 0.8f64;
            let mut m = Matrix::zeros(4, 4);
            m[(0, 0)] = 1f64.exp();
            m[(1, 1)] = (-1f64).exp();
            m[(2, 2)] = t.cos();
            m[(2, 3)] = -t.sin();
            m[(3, 2)] = t.sin();
            m[(3, 3)] = t.cos();
            GeneratorSet::new(vec!['a'], vec![GroupElement::new(m)?], Relations::Free, 4)?
        }
        "cyclic-diagonal" => {
            GeneratorSet::new(vec!['a'], vec![GroupElement::diag_exp(&[1.0, 0.0, -1.0])], Relations::Free, 3)?
        }
        "proximal-semigroup" => {
            let a = GroupElement::diag_exp(&[lam, 0.0, -lam]);
            let k = rot_xz(0.9, 0.7);
            let a1 = conj(&k, &a);
            let a2 = conj(&k.transpose(), &a);
            GeneratorSet::new(vec!['a', 'b'], vec![a1, a2], Relations::Free, 3)?.as_semigroup()
        }
        "trivial" => GeneratorSet::new(vec![], vec![], Relations::Free, 3)?,
        other => return Err(Error::InvalidArgument(format!("unknown gallery group {other:?}"))),
    };
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_and_inverse() {
        assert_eq!(reduce_word("abBAc"), "c");
        assert_eq!(reduce_word("aAbB"), "");
        assert_eq!(inverse_word("abC"), "cBA");
    }

    #[test]
    fn free_ball_counts() {
        let g = gallery("klein-schottky").unwrap();
        assert_eq!(word_ball(&g, 0, DEFAULT_DEDUP_TOL).unwrap().len(), 1);
        assert_eq!(word_ball(&g, 3, DEFAULT_DEDUP_TOL).unwrap().len(), 53);
        let ball = word_ball(&g, 2, DEFAULT_DEDUP_TOL).unwrap();
        assert_eq!(ball[1].word, "A");
        assert!(ball.windows(2).all(|w| (w[0].length, &w[0].word) < (w[1].length, &w[1].word)));
    }

    #[test]
    fn hidden_relation_merges() {
        let t = 2.0 * std::f64::consts::PI / 3.0;
        let r = GroupElement::orthogonal(Matrix::from_row_slice(
            3,
            3,
            &[t.cos(), -t.sin(), 0.0, t.sin(), t.cos(), 0.0, 0.0, 0.0, 1.0],
        ))
        .unwrap();
        let a = GroupElement::diag_exp(&[2.0, 0.0, -2.0]);
        let g = GeneratorSet::new(vec!['a', 'r'], vec![a, r], Relations::Free, 3).unwrap();
        let ball = word_ball(&g, 3, DEFAULT_DEDUP_TOL).unwrap();
        assert!(ball.len() < 53);
        // rr = R, so "rr" never survives
        assert!(ball.iter().all(|n| n.word != "rr"));
    }

    #[test]
    fn explosion_guard() {
        let g = gallery("diag-schottky").unwrap();
        assert_eq!(word_ball_capped(&g, 5, DEFAULT_DEDUP_TOL, 100), Err(Error::ExplosionGuard(100)));
    }

    #[test]
    fn ray_patterns() {
        let g = gallery("diag-schottky").unwrap();
        let p = RayPattern::parse("(a)").unwrap();
        let ray = geodesic_ray_words(&g, &p, 5).unwrap();
        let a = g.letter('a').unwrap();
        assert!(ray[2].max_abs_diff(&a.compose(a).compose(a)) < 1e-6);
        assert_eq!(RayPattern::parse("b(ab)").unwrap().letters(6), "bababa");
        assert!(matches!(RayPattern::parse("(aA)").unwrap().check_reduced(), Err(Error::NotReduced(_))));
        assert!(matches!(RayPattern::parse("(aba)").unwrap().check_reduced(), Ok(())));
        assert!(matches!(RayPattern::parse("(abA)").unwrap().check_reduced(), Err(Error::NotReduced(_))));
    }

    #[test]
    fn poincare_trivial_cases() {
        let phi = LinearFunctional::new(vec![1.0, 1.0]);
        let id = word_ball(&gallery("trivial").unwrap(), 4, DEFAULT_DEDUP_TOL).unwrap();
        assert_eq!(poincare_partial(&id, &phi, 3.0).unwrap(), 1.0);
        let ball = word_ball(&gallery("diag-schottky").unwrap(), 3, DEFAULT_DEDUP_TOL).unwrap();
        assert_eq!(poincare_partial(&ball, &phi, 0.0).unwrap(), ball.len() as f64);
        assert!((poincare_partial(&ball, &phi, 10.0).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn principal_is_a_homomorphism() {
        let (a, b) = ((1.2, 0.5, -0.3, 0.7), (0.4, -1.1, 0.9, 0.0));
        let a = (a.0, a.1, a.2, (1.0 + a.1 * a.2) / a.0);
        let b = (b.0, b.1, b.2, (1.0 + b.1 * b.2) / b.0);
        let ab = (a.0 * b.0 + a.1 * b.2, a.0 * b.1 + a.1 * b.3, a.2 * b.0 + a.3 * b.2, a.2 * b.1 + a.3 * b.3);
        let lhs = principal_sl3(a.0, a.1, a.2, a.3).compose(&principal_sl3(b.0, b.1, b.2, b.3));
        assert!(lhs.max_abs_diff(&principal_sl3(ab.0, ab.1, ab.2, ab.3)) < 1e-12);
    }

    #[test]
    fn schottky_roots_grow() {
        for name in ["diag-schottky", "klein-schottky", "principal-hyperbolic"] {
            let ball = word_ball(&gallery(name).unwrap(), 6, DEFAULT_DEDUP_TOL).unwrap();
            let mins: Vec<f64> = (0..=6)
                .map(|l| {
                    ball.iter()
                        .filter(|n| n.length == l)
                        .map(|n| kappa(&n.element).unwrap().roots().into_iter().fold(f64::INFINITY, f64::min))
                        .fold(f64::INFINITY, f64::min)
                })
                .collect();
            assert!(mins.windows(2).all(|w| w[1] > w[0]), "{name}: {mins:?}");
        }
    }

    #[test]
    fn json_round_trip() {
        let g = gallery("proximal-semigroup").unwrap();
        let back = GeneratorSet::from_json(&g.to_json()).unwrap();
        assert!(back.is_semigroup());
        assert_eq!(back.labels(), g.labels());
        assert!(back.generators()[1].max_abs_diff(&g.generators()[1]) < 1e-9);
    }
}
