//! Deterministic model networks and their closed-form Kemeny constants.
//!
//! Vertices are numbered in creation order. Families built by iterated
//! growth (pseudofractal, Koch, Cayley) append each generation's new vertices
//! after the existing ones, in the order of the edges, triangles or
//! periphery vertices that spawn them. Hanoi-type graphs number the label
//! `(s_1, ..., s_g)` as the base-3 integer with `s_1` most significant,
//! which coincides with building generation `g` from three relabelled copies
//! of generation `g - 1`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_unweighted, WeightedGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelFamily {
    Pseudofractal,
    Koch,
    Cayley,
    Hanoi,
    ExtendedHanoi,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 5] = [
        ModelFamily::Pseudofractal,
        ModelFamily::Koch,
        ModelFamily::Cayley,
        ModelFamily::Hanoi,
        ModelFamily::ExtendedHanoi,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ModelFamily::Pseudofractal => "pseudofractal",
            ModelFamily::Koch => "koch",
            ModelFamily::Cayley => "cayley",
            ModelFamily::Hanoi => "hanoi",
            ModelFamily::ExtendedHanoi => "extended-hanoi",
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown model family '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: ModelFamily,
    pub generation: u32,
    /// Branching factor; Cayley trees only.
    pub branching: Option<u32>,
}

impl ModelSpec {
    pub fn new(family: ModelFamily, generation: u32) -> Self {
        Self {
            family,
            generation,
            branching: None,
        }
    }

    pub fn cayley(branching: u32, generation: u32) -> Self {
        Self {
            family: ModelFamily::Cayley,
            generation,
            branching: Some(branching),
        }
    }

    fn cayley_branching(&self) -> Result<u32> {
        match self.branching {
            Some(b) if b >= 3 => Ok(b),
            Some(b) => Err(Error::InvalidParameter(format!(
                "cayley trees need branching b >= 3, got {b}"
            ))),
            None => Err(Error::InvalidParameter("cayley trees need a branching b".into())),
        }
    }

    /// Vertex and edge counts from the family's counting formulas.
    pub fn counts(&self) -> Result<(u128, u128)> {
        let g = self.generation;
        let p3 = |e: u32| 3u128.checked_pow(e);
        let overflow = || Error::InvalidParameter(format!("generation {g} is too large"));
        match self.family {
            ModelFamily::Pseudofractal => {
                let e = p3(g + 1).ok_or_else(overflow)?;
                Ok(((e + 3) / 2, e))
            }
            ModelFamily::Koch => {
                let f = 4u128.checked_pow(g).ok_or_else(overflow)?;
                Ok((2 * f + 1, 3 * f))
            }
            ModelFamily::Cayley => {
                let b = self.cayley_branching()? as u128;
                if g == 0 {
                    return Ok((1, 0));
                }
                let n = (b * (b - 1).checked_pow(g).ok_or_else(overflow)? - 2) / (b - 2);
                Ok((n, n - 1))
            }
            ModelFamily::Hanoi => {
                check_generation(self, 1)?;
                let n = p3(g).ok_or_else(overflow)?;
                Ok((n, 3 * (n - 1) / 2))
            }
            ModelFamily::ExtendedHanoi => {
                check_generation(self, 2)?;
                let n = p3(g - 1).ok_or_else(overflow)?;
                Ok((4 * n, 6 * n))
            }
        }
    }
}

fn check_generation(spec: &ModelSpec, min: u32) -> Result<()> {
    if spec.generation < min {
        Err(Error::InvalidParameter(format!(
            "{} graphs need generation >= {min}, got {}",
            spec.family, spec.generation
        )))
    } else {
        Ok(())
    }
}

/// Upper limit on generated sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneratorBudget {
    pub max_vertices: u128,
    pub max_edges: u128,
}

impl Default for GeneratorBudget {
    fn default() -> Self {
        Self {
            max_vertices: 20_000_000,
            max_edges: 60_000_000,
        }
    }
}

/// Build a model graph within the default budget.
pub fn generate(spec: &ModelSpec) -> Result<WeightedGraph> {
    generate_within(spec, &GeneratorBudget::default())
}

pub fn generate_within(spec: &ModelSpec, budget: &GeneratorBudget) -> Result<WeightedGraph> {
    let (n, m) = spec.counts()?;
    for (what, requested, limit) in [
        ("generated vertices", n, budget.max_vertices),
        ("generated edges", m, budget.max_edges),
    ] {
        if requested > limit {
            return Err(Error::CapExceeded {
                what,
                requested,
                limit,
                hint: "; lower the generation",
            });
        }
    }
    let g = spec.generation;
    let edges = match spec.family {
        ModelFamily::Pseudofractal => pseudofractal_edges(g),
        ModelFamily::Koch => koch_edges(g),
        ModelFamily::Cayley => cayley_edges(spec.cayley_branching()? as usize, g),
        ModelFamily::Hanoi => hanoi_edges(g),
        ModelFamily::ExtendedHanoi => extended_hanoi_edges(g),
    };
    let graph = build_unweighted(&edges, n as usize)?;
    debug_assert_eq!(graph.m() as u128, m);
    Ok(graph)
}

pub fn pseudofractal(g: u32) -> Result<WeightedGraph> {
    generate(&ModelSpec::new(ModelFamily::Pseudofractal, g))
}

pub fn koch(g: u32) -> Result<WeightedGraph> {
    generate(&ModelSpec::new(ModelFamily::Koch, g))
}

pub fn cayley_tree(b: u32, g: u32) -> Result<WeightedGraph> {
    generate(&ModelSpec::cayley(b, g))
}

pub fn hanoi(g: u32) -> Result<WeightedGraph> {
    generate(&ModelSpec::new(ModelFamily::Hanoi, g))
}

pub fn extended_hanoi(g: u32) -> Result<WeightedGraph> {
    generate(&ModelSpec::new(ModelFamily::ExtendedHanoi, g))
}

/// Start from a triangle; each generation, every edge gets a new vertex
/// joined to both of its ends.
fn pseudofractal_edges(g: u32) -> Vec<(usize, usize)> {
    let mut edges = vec![(0, 1), (1, 2), (0, 2)];
    let mut n = 3;
    for _ in 0..g {
        let mut next = Vec::with_capacity(edges.len() * 3);
        for &(u, v) in &edges {
            next.push((u, v));
            next.push((u, n));
            next.push((v, n));
            n += 1;
        }
        edges = next;
    }
    edges
}

/// Start from a triangle; each generation, each vertex of every triangle
/// present so far spawns two new vertices that form a new triangle with it.
fn koch_edges(g: u32) -> Vec<(usize, usize)> {
    let mut edges = vec![(0, 1), (1, 2), (0, 2)];
    let mut triangles = vec![[0usize, 1, 2]];
    let mut n = 3;
    for _ in 0..g {
        let mut spawned = Vec::with_capacity(triangles.len() * 3);
        for tri in &triangles {
            for &v in tri {
                let (a, b) = (n, n + 1);
                n += 2;
                edges.extend([(v, a), (v, b), (a, b)]);
                spawned.push([v, a, b]);
            }
        }
        triangles.extend(spawned);
    }
    edges
}

/// Generation 1 is a star with `b` leaves; afterwards each periphery vertex
/// gets `b - 1` children.
fn cayley_edges(b: usize, g: u32) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    if g == 0 {
        return edges;
    }
    let mut periphery: Vec<usize> = (1..=b).collect();
    edges.extend(periphery.iter().map(|&v| (0, v)));
    let mut n = b + 1;
    for _ in 1..g {
        let mut next = Vec::with_capacity(periphery.len() * (b - 1));
        for &p in &periphery {
            for _ in 0..b - 1 {
                edges.push((p, n));
                next.push(n);
                n += 1;
            }
        }
        periphery = next;
    }
    edges
}

/// Index of the label whose `len` digits are all `digit`, within a base-3
/// numbering.
fn constant_label(digit: usize, len: u32) -> usize {
    digit * (3usize.pow(len) - 1) / 2
}

/// Labels `u, v` are adjacent iff for some position `h` they agree before
/// `h`, differ at `h`, and after `h` `u` is constantly `v_h` and `v` is
/// constantly `u_h`. Recursively: three copies of generation `g - 1`, with
/// copy `i`'s extreme vertex `(i, j, ..., j)` joined to `(j, i, ..., i)`.
fn hanoi_edges(g: u32) -> Vec<(usize, usize)> {
    let mut edges = vec![(0, 1), (1, 2), (0, 2)];
    for level in 2..=g {
        let size = 3usize.pow(level - 1);
        let mut next = Vec::with_capacity(3 * edges.len() + 3);
        for c in 0..3 {
            next.extend(edges.iter().map(|&(u, v)| (c * size + u, c * size + v)));
        }
        for i in 0..3 {
            for j in i + 1..3 {
                next.push((
                    i * size + constant_label(j, level - 1),
                    j * size + constant_label(i, level - 1),
                ));
            }
        }
        edges = next;
    }
    edges
}

/// Four copies of the Hanoi graph of generation `g - 1`; copy `c` is labelled
/// over the alphabet `{0, 1, 2, 3} \ {c}`, and its extreme vertex labelled
/// constantly `j` is joined to copy `j`'s extreme vertex labelled constantly
/// `c`, so the four copies are linked like `K4`.
fn extended_hanoi_edges(g: u32) -> Vec<(usize, usize)> {
    let base = hanoi_edges(g - 1);
    let size = 3usize.pow(g - 1);
    let mut edges = Vec::with_capacity(4 * base.len() + 6);
    for c in 0..4 {
        edges.extend(base.iter().map(|&(u, v)| (c * size + u, c * size + v)));
    }
    // Local digit of symbol `s` in copy `c`'s alphabet.
    let local = |c: usize, s: usize| if s < c { s } else { s - 1 };
    for c in 0..4 {
        for j in c + 1..4 {
            edges.push((
                c * size + constant_label(local(c, j), g - 1),
                j * size + constant_label(local(j, c), g - 1),
            ));
        }
    }
    edges
}

fn big(v: i64) -> BigInt {
    BigInt::from(v)
}

fn pow(base: i64, e: u32) -> BigInt {
    num_traits::pow(big(base), e as usize)
}

fn ratio(num: BigInt, den: BigInt) -> BigRational {
    BigRational::new(num, den)
}

/// The published Kemeny constant of a model graph, evaluated exactly.
///
/// Supported: pseudofractal, Koch, Cayley with `b = 3`, extended Hanoi with
/// `g >= 2`. The Cayley tree of generation 0 is a single vertex, whose
/// Kemeny constant is 0; the formula itself is `0/0` there.
pub fn closed_form_kemeny_exact(spec: &ModelSpec) -> Result<BigRational> {
    let g = spec.generation;
    let r = match spec.family {
        ModelFamily::Pseudofractal => {
            ratio(big(5) * pow(3, g), big(2)) - ratio(big(5) * pow(2, g), big(3))
                + ratio(big(1), big(2))
        }
        ModelFamily::Koch => {
            BigRational::from_integer(big(1 + 2 * g as i64) * pow(4, g)) + ratio(big(1), big(3))
        }
        ModelFamily::Cayley => {
            if spec.cayley_branching()? != 3 {
                return Err(Error::InvalidParameter(
                    "closed-form Kemeny constant is only known for b = 3 Cayley trees".into(),
                ));
            }
            if g == 0 {
                return Ok(BigRational::zero());
            }
            let num = big(3 * g as i64) * pow(4, g + 1) - big(13) * pow(2, 2 * g + 1)
                + big(35) * pow(2, g)
                - big(9);
            ratio(num, big(2) * (pow(2, g) - big(1)))
        }
        ModelFamily::ExtendedHanoi => {
            check_generation(spec, 2)?;
            let num = big(32) * pow(5, g) * pow(3, g - 1)
                - big(64) * pow(3, 2 * g - 2)
                - big(2) * pow(3, g);
            ratio(num, big(10) * (pow(3, g) + pow(3, g - 1) - big(1)))
        }
        ModelFamily::Hanoi => {
            return Err(Error::InvalidParameter(
                "no closed-form Kemeny constant for hanoi graphs".into(),
            ))
        }
    };
    Ok(r)
}

pub fn closed_form_kemeny(spec: &ModelSpec) -> Result<f64> {
    to_f64(&closed_form_kemeny_exact(spec)?)
}

/// Convert a mean hitting time over ordered pairs of *distinct* vertices to
/// the Kemeny constant of a regular graph, whose stationary distribution is
/// uniform: `K = (n - 1)/n * mean`.
///
/// The published extended-Hanoi formula evaluates to this pairwise mean
/// rather than to `K`; this helper recovers `K` from it.
pub fn kemeny_from_pairwise_mean(n: u128, mean: &BigRational) -> BigRational {
    let n = BigInt::from(n);
    mean * ratio(&n - BigInt::one(), n)
}

/// `K` of the extended Hanoi graph, from the published formula through
/// [`kemeny_from_pairwise_mean`].
pub fn extended_hanoi_kemeny_exact(g: u32) -> Result<BigRational> {
    let spec = ModelSpec::new(ModelFamily::ExtendedHanoi, g);
    let (n, _) = spec.counts()?;
    Ok(kemeny_from_pairwise_mean(n, &closed_form_kemeny_exact(&spec)?))
}

pub(crate) fn to_f64(r: &BigRational) -> Result<f64> {
    r.to_f64()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Numerical("closed form does not fit in f64".into()))
}

/// Integer part (toward zero) of an exact rational.
pub fn truncate_exact(r: &BigRational) -> BigInt {
    r.to_integer()
}

/// Nearest integer, halves away from zero.
pub fn round_exact(r: &BigRational) -> BigInt {
    r.round().to_integer()
}
