//! Permutation combinatorics for interval exchanges: irreducibility, Rauzy moves and
//! classes, the intersection form `Ω_π`, the vertex permutation `σ`, genus.
//!
//! Letters are indexed `0..d` in alphabetical order of their labels; positions are
//! 0-based internally and 1-based in the formulas quoted in doc comments.

use crate::error::{Error, Result};
use crate::lattice::integer_rank;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, VecDeque};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Top,
    Bottom,
}

impl StepKind {
    pub fn other(self) -> StepKind {
        match self {
            StepKind::Top => StepKind::Bottom,
            StepKind::Bottom => StepKind::Top,
        }
    }
}

/// A pair of orderings `(π_t, π_b)` of a labelled alphabet.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    labels: Vec<char>,
    top: Vec<usize>,
    bottom: Vec<usize>,
    top_pos: Vec<usize>,
    bottom_pos: Vec<usize>,
}

fn inverse(order: &[usize]) -> Vec<usize> {
    let mut pos = vec![0; order.len()];
    for (i, &l) in order.iter().enumerate() {
        pos[l] = i;
    }
    pos
}

impl Permutation {
    /// Parses `"TOP/BOTTOM"`; both rows must use the same distinct labels, `d >= 2`.
    pub fn parse(s: &str) -> Result<Permutation> {
        let (t, b) = s.trim().split_once('/').ok_or_else(|| Error::Parse(format!("expected TOP/BOTTOM, got {s:?}")))?;
        let t: Vec<char> = t.trim().chars().collect();
        let b: Vec<char> = b.trim().chars().collect();
        let mut labels = t.clone();
        labels.sort_unstable();
        labels.dedup();
        if labels.len() != t.len() || labels.len() < 2 {
            return Err(Error::Parse(format!("top row of {s:?} must have at least two distinct letters")));
        }
        let mut bl = b.clone();
        bl.sort_unstable();
        if bl != labels {
            return Err(Error::Parse(format!("rows of {s:?} use different letters")));
        }
        if labels.iter().any(|c| !c.is_alphanumeric()) {
            return Err(Error::Parse(format!("labels of {s:?} must be alphanumeric")));
        }
        let idx = |c: &char| labels.binary_search(c).unwrap();
        let top = t.iter().map(idx).collect();
        let bottom = b.iter().map(idx).collect();
        Ok(Self::from_orders(labels, top, bottom))
    }

    /// Parses and rejects reducible permutations.
    pub fn parse_irreducible(s: &str) -> Result<Permutation> {
        let p = Self::parse(s)?;
        p.ensure_irreducible()?;
        Ok(p)
    }

    pub fn from_orders(labels: Vec<char>, top: Vec<usize>, bottom: Vec<usize>) -> Permutation {
        let d = labels.len();
        assert!(top.len() == d && bottom.len() == d);
        let top_pos = inverse(&top);
        let bottom_pos = inverse(&bottom);
        Permutation { labels, top, bottom, top_pos, bottom_pos }
    }

    /// Standard irreducible rotation class representative `A..Z / Z..A`.
    pub fn symmetric(d: usize) -> Permutation {
        let labels: Vec<char> = (0..d).map(|i| (b'A' + i as u8) as char).collect();
        Self::from_orders(labels, (0..d).collect(), (0..d).rev().collect())
    }

    pub fn d(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[char] {
        &self.labels
    }

    pub fn label(&self, letter: usize) -> char {
        self.labels[letter]
    }

    pub fn letter(&self, label: char) -> Option<usize> {
        self.labels.binary_search(&label).ok()
    }

    pub fn top(&self) -> &[usize] {
        &self.top
    }

    pub fn bottom(&self) -> &[usize] {
        &self.bottom
    }

    /// 0-based position of `letter` in the top row.
    pub fn top_pos(&self, letter: usize) -> usize {
        self.top_pos[letter]
    }

    pub fn bottom_pos(&self, letter: usize) -> usize {
        self.bottom_pos[letter]
    }

    pub fn alpha_t(&self) -> usize {
        self.top[self.d() - 1]
    }

    pub fn alpha_b(&self) -> usize {
        self.bottom[self.d() - 1]
    }

    /// Irreducible iff no proper prefix of the top row equals, as a set, the prefix of the bottom row.
    pub fn is_irreducible(&self) -> bool {
        let d = self.d();
        let mut max_b = 0;
        for k in 0..d - 1 {
            max_b = max_b.max(self.bottom_pos[self.top[k]]);
            if max_b == k {
                return false;
            }
        }
        true
    }

    pub fn ensure_irreducible(&self) -> Result<()> {
        if self.is_irreducible() {
            Ok(())
        } else {
            Err(Error::Reducible(self.to_string()))
        }
    }

    /// Winner and loser letters of a move of the given type.
    pub fn winner_loser(&self, kind: StepKind) -> (usize, usize) {
        match kind {
            StepKind::Top => (self.alpha_t(), self.alpha_b()),
            StepKind::Bottom => (self.alpha_b(), self.alpha_t()),
        }
    }

    pub fn successor(&self, kind: StepKind) -> Permutation {
        let mut p = self.clone();
        p.apply_in_place(kind);
        p
    }

    /// Top: `α_b` moves to just after `α_t` in the bottom row. Bottom: symmetric.
    pub fn apply_in_place(&mut self, kind: StepKind) {
        let d = self.d();
        let (row, pos, winner) = match kind {
            StepKind::Top => (&mut self.bottom, &mut self.bottom_pos, self.top[d - 1]),
            StepKind::Bottom => (&mut self.top, &mut self.top_pos, self.bottom[d - 1]),
        };
        let k = pos[winner];
        let loser = row[d - 1];
        for i in (k + 1..d - 1).rev() {
            row[i + 1] = row[i];
            pos[row[i + 1]] = i + 1;
        }
        row[k + 1] = loser;
        pos[loser] = k + 1;
    }

    /// `Ω_π[α][β]`: +1 if β is right of α on top and left of α on bottom, −1 in the mirrored case.
    pub fn omega(&self) -> DMatrix<i64> {
        let d = self.d();
        DMatrix::from_fn(d, d, |a, b| {
            let (ta, tb) = (self.top_pos[a], self.top_pos[b]);
            let (ba, bb) = (self.bottom_pos[a], self.bottom_pos[b]);
            if tb > ta && bb < ba {
                1
            } else if tb < ta && bb > ba {
                -1
            } else {
                0
            }
        })
    }

    /// Monodromy `π = π_b ∘ π_t^{-1}` in 1-based positions: `pi(i)` for `i in 1..=d`.
    pub fn monodromy(&self, i: usize) -> usize {
        self.bottom_pos[self.top[i - 1]] + 1
    }

    pub fn monodromy_inverse(&self, j: usize) -> usize {
        self.top_pos[self.bottom[j - 1]] + 1
    }

    pub fn sigma(&self) -> SigmaDecomposition {
        SigmaDecomposition::new(self)
    }

    /// `(genus, κ)`; errors if the cycle count disagrees with `1 + dim ker Ω_π`.
    pub fn genus_kappa(&self) -> Result<(usize, usize)> {
        self.ensure_irreducible()?;
        let kappa = self.sigma().kappa();
        let expected = 1 + self.d() - integer_rank(&self.omega());
        if kappa != expected {
            return Err(Error::SigmaConvention { kappa, expected });
        }
        let twice = self.d() + 1 - kappa;
        debug_assert!(twice.is_multiple_of(2));
        Ok((twice / 2, kappa))
    }

    pub fn rauzy_class(&self) -> Result<RauzyClass> {
        RauzyClass::new(self)
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t: String = self.top.iter().map(|&l| self.labels[l]).collect();
        let b: String = self.bottom.iter().map(|&l| self.labels[l]).collect();
        write!(f, "{t}/{b}")
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation({self})")
    }
}

/// Which rule fixed `σ(d)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaConvention {
    /// `σ(d) = π^{-1}(d)`, the unique value completing the `i < d` branch to a bijection.
    Completion,
}

/// Vertex permutation `σ` on `{0, …, d}` and its cycles.
#[derive(Clone, Debug, Serialize)]
pub struct SigmaDecomposition {
    pub sigma: Vec<usize>,
    /// Literal closed form at `i = d`, `π^{-1}(π(d)+1) − 1`; `None` when `π(d) = d`.
    pub literal_last: Option<usize>,
    pub literal_is_bijective: bool,
    pub convention: SigmaConvention,
    /// Cycles in increasing order of their least vertex; cycle 0 contains vertex 0.
    pub cycles: Vec<Vec<usize>>,
    pub cycle_of_vertex: Vec<usize>,
}

impl SigmaDecomposition {
    fn new(p: &Permutation) -> Self {
        let d = p.d();
        let mut sigma = vec![0; d + 1];
        for (i, slot) in sigma.iter_mut().enumerate().take(d) {
            let m = p.monodromy(i + 1);
            *slot = if m == 1 { 0 } else { p.monodromy_inverse(m - 1) };
        }
        sigma[d] = p.monodromy_inverse(d);
        let pd = p.monodromy(d);
        let literal_last = if pd < d { Some(p.monodromy_inverse(pd + 1) - 1) } else { None };
        let literal_is_bijective = literal_last == Some(sigma[d]);

        let mut cycle_of_vertex = vec![usize::MAX; d + 1];
        let mut cycles = Vec::new();
        for start in 0..=d {
            if cycle_of_vertex[start] != usize::MAX {
                continue;
            }
            let mut cycle = vec![];
            let mut v = start;
            while cycle_of_vertex[v] == usize::MAX {
                cycle_of_vertex[v] = cycles.len();
                cycle.push(v);
                v = sigma[v];
            }
            debug_assert_eq!(v, start);
            cycles.push(cycle);
        }
        SigmaDecomposition {
            sigma,
            literal_last,
            literal_is_bijective,
            convention: SigmaConvention::Completion,
            cycles,
            cycle_of_vertex,
        }
    }

    pub fn kappa(&self) -> usize {
        self.cycles.len()
    }

    /// Index of the distinguished cycle (the one through vertex 0).
    pub fn marked(&self) -> usize {
        self.cycle_of_vertex[0]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RauzyEdge {
    pub from: usize,
    pub to: usize,
    #[serde(rename = "type")]
    pub kind: StepKind,
    pub winner: usize,
    pub loser: usize,
}

/// Rauzy class: all permutations reachable by top and bottom moves.
#[derive(Clone, Debug)]
pub struct RauzyClass {
    pub members: Vec<Permutation>,
    pub edges: Vec<RauzyEdge>,
    pub genus: usize,
    pub kappa: usize,
}

impl RauzyClass {
    fn new(start: &Permutation) -> Result<RauzyClass> {
        start.ensure_irreducible()?;
        let (genus, kappa) = start.genus_kappa()?;
        let mut index: HashMap<Permutation, usize> = HashMap::new();
        let mut members = vec![start.clone()];
        index.insert(start.clone(), 0);
        let mut queue = VecDeque::from([0usize]);
        let mut edges = Vec::new();
        while let Some(i) = queue.pop_front() {
            for kind in [StepKind::Top, StepKind::Bottom] {
                let p = &members[i];
                let (winner, loser) = p.winner_loser(kind);
                let q = p.successor(kind);
                let j = match index.get(&q) {
                    Some(&j) => j,
                    None => {
                        if q.genus_kappa()? != (genus, kappa) {
                            return Err(Error::Invariant(format!("genus changes along the class at {q}")));
                        }
                        let j = members.len();
                        index.insert(q.clone(), j);
                        members.push(q);
                        queue.push_back(j);
                        j
                    }
                };
                edges.push(RauzyEdge { from: i, to: j, kind, winner, loser });
            }
        }
        Ok(RauzyClass { members, edges, genus, kappa })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Every member reaches every other member.
    pub fn is_strongly_connected(&self) -> bool {
        let n = self.members.len();
        let reach = |forward: bool| {
            let mut seen = vec![false; n];
            seen[0] = true;
            let mut stack = vec![0];
            while let Some(v) = stack.pop() {
                for e in &self.edges {
                    let (a, b) = if forward { (e.from, e.to) } else { (e.to, e.from) };
                    if a == v && !seen[b] {
                        seen[b] = true;
                        stack.push(b);
                    }
                }
            }
            seen.into_iter().all(|x| x)
        };
        reach(true) && reach(false)
    }

    pub fn report(&self) -> ClassReport {
        let p0 = &self.members[0];
        let sigma = p0.sigma();
        let label = |l: usize| p0.label(l).to_string();
        ClassReport {
            permutation: p0.to_string(),
            genus: self.genus,
            kappa: self.kappa,
            sigma: sigma.sigma.clone(),
            sigma_cycles: sigma.cycles.clone(),
            sigma_convention: sigma.convention,
            members: self.members.iter().map(|p| p.to_string()).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeReport {
                    from: e.from,
                    to: e.to,
                    kind: e.kind,
                    winner: label(e.winner),
                    loser: label(e.loser),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EdgeReport {
    pub from: usize,
    pub to: usize,
    #[serde(rename = "type")]
    pub kind: StepKind,
    pub winner: String,
    pub loser: String,
}

/// Serializable summary of a class.
#[derive(Clone, Debug, Serialize)]
pub struct ClassReport {
    pub permutation: String,
    pub genus: usize,
    pub kappa: usize,
    pub sigma: Vec<usize>,
    pub sigma_cycles: Vec<Vec<usize>>,
    pub sigma_convention: SigmaConvention,
    pub members: Vec<String>,
    pub edges: Vec<EdgeReport>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Permutation {
        Permutation::parse(s).unwrap()
    }

    #[test]
    fn parse_roundtrip_and_errors() {
        assert_eq!(p("ABCD/DCBA").to_string(), "ABCD/DCBA");
        assert!(matches!(Permutation::parse("AB/AC"), Err(Error::Parse(_))));
        assert!(matches!(Permutation::parse("ABC"), Err(Error::Parse(_))));
        assert!(matches!(Permutation::parse("AAB/ABA"), Err(Error::Parse(_))));
        assert!(matches!(Permutation::parse_irreducible("ABC/ACB"), Err(Error::Reducible(_))));
    }

    #[test]
    fn irreducibility() {
        assert!(p("AB/BA").is_irreducible());
        assert!(p("ABC/CBA").is_irreducible());
        assert!(!p("AB/AB").is_irreducible());
        assert!(!p("ABC/BAC").is_irreducible());
        assert!(p("ABCD/DBCA").is_irreducible());
    }

    #[test]
    fn moves() {
        assert_eq!(p("ABC/CBA").successor(StepKind::Top).to_string(), "ABC/CAB");
        assert_eq!(p("ABC/CBA").successor(StepKind::Bottom).to_string(), "ACB/CBA");
        assert_eq!(p("AB/BA").successor(StepKind::Top), p("AB/BA"));
    }

    #[test]
    fn omega_follows_case_table() {
        let o = p("ABC/CBA").omega();
        assert_eq!(o, DMatrix::from_row_slice(3, 3, &[0, 1, 1, -1, 0, 1, -1, -1, 0]));
        assert_eq!(p("AB/BA").omega(), DMatrix::from_row_slice(2, 2, &[0, 1, -1, 0]));
        assert_eq!(o.transpose(), -o);
    }

    #[test]
    fn sigma_cycles_and_genus() {
        let s = p("ABC/CBA").sigma();
        assert_eq!(s.cycles, vec![vec![0, 2], vec![1, 3]]);
        assert!(s.literal_is_bijective);
        assert_eq!(p("ABC/CBA").genus_kappa().unwrap(), (1, 2));
        assert_eq!(p("AB/BA").genus_kappa().unwrap(), (1, 1));
        assert_eq!(p("ABCD/DCBA").sigma().cycles.len(), 1);
        assert!(!p("ABCD/DCBA").sigma().literal_is_bijective);
        assert_eq!(p("ABCD/DCBA").genus_kappa().unwrap(), (2, 1));
        assert_eq!(p("ABCDE/EDCBA").sigma().cycles, vec![vec![0, 2, 4], vec![1, 3, 5]]);
        assert_eq!(p("ABCDE/EDCBA").genus_kappa().unwrap(), (2, 2));
        assert_eq!(p("ABCD/DBCA").sigma().cycles, vec![vec![0, 3], vec![1, 4], vec![2]]);
        assert_eq!(p("ABCD/DBCA").genus_kappa().unwrap(), (1, 3));
    }

    #[test]
    fn class_sizes() {
        for (s, n) in [("AB/BA", 1), ("ABC/CBA", 3), ("ABCD/DCBA", 7), ("ABCDE/EDCBA", 15)] {
            let c = p(s).rauzy_class().unwrap();
            assert_eq!(c.len(), n, "{s}");
            assert!(c.is_strongly_connected());
            assert_eq!(c.edges.len(), 2 * n);
            for m in &c.members {
                assert!(m.is_irreducible());
                assert_eq!(m.genus_kappa().unwrap(), (c.genus, c.kappa));
            }
        }
    }
}
