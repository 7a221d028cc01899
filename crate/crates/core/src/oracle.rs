//! 101-colorings of triple systems: assign 0/1 to points so that every
//! triple holds exactly one 1. Purely combinatorial; shares nothing with the
//! derivation engine.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use thiserror::Error;

/// Exhaustive enumeration is refused above this many points.
pub const EXHAUSTIVE_MAX_POINTS: usize = 25;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("triple {index} refers to point {point}, but there are only {points} points")]
    OutOfRange { index: usize, point: usize, points: usize },
    #[error("triple {0} repeats a point")]
    RepeatedPoint(usize),
    #[error("triple {0} occurs twice")]
    DuplicateTriple(usize),
    #[error("exhaustive mode is limited to {EXHAUSTIVE_MAX_POINTS} points, got {0}")]
    TooManyPoints(usize),
    #[error("point {0} pinned to both 0 and 1")]
    ContradictoryPin(usize),
    #[error("pin on point {0} is out of range")]
    PinOutOfRange(usize),
    #[error("pin value for point {0} must be 0 or 1")]
    BadPinValue(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mode {
    Exhaustive,
    #[default]
    Backtracking,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColoringProblem {
    points: usize,
    triples: Vec<[usize; 3]>,
}

impl ColoringProblem {
    pub fn new(points: usize, triples: Vec<[usize; 3]>) -> Result<Self, OracleError> {
        let mut seen = BTreeSet::new();
        for (index, t) in triples.iter().enumerate() {
            for &point in t {
                if point >= points {
                    return Err(OracleError::OutOfRange { index, point, points });
                }
            }
            if t[0] == t[1] || t[0] == t[2] || t[1] == t[2] {
                return Err(OracleError::RepeatedPoint(index));
            }
            let mut key = *t;
            key.sort_unstable();
            if !seen.insert(key) {
                return Err(OracleError::DuplicateTriple(index));
            }
        }
        Ok(ColoringProblem { points, triples })
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn triples(&self) -> &[[usize; 3]] {
        &self.triples
    }

    /// Copy without triple `index`.
    pub fn without_triple(&self, index: usize) -> ColoringProblem {
        let mut triples = self.triples.clone();
        triples.remove(index);
        ColoringProblem {
            points: self.points,
            triples,
        }
    }

    /// Every triple has exactly one 1 and every pin is respected.
    pub fn is_coloring(&self, values: &[u8], pins: &[(usize, u8)]) -> bool {
        values.len() == self.points
            && values.iter().all(|&v| v <= 1)
            && self
                .triples
                .iter()
                .all(|t| t.iter().map(|&p| values[p]).sum::<u8>() == 1)
            && pins.iter().all(|&(p, v)| values[p] == v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Colorable(Vec<u8>),
    Uncolorable,
}

impl Verdict {
    pub fn is_uncolorable(&self) -> bool {
        matches!(self, Verdict::Uncolorable)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    /// Search nodes (exhaustive: assignments tried).
    pub nodes: u64,
    pub propagations: u64,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColoringResult {
    pub verdict: Verdict,
    pub stats: Stats,
}

pub fn check_coloring(p: &ColoringProblem, mode: Mode) -> Result<ColoringResult, OracleError> {
    check_consistency(p, &[], mode)
}

/// Like [`check_coloring`], restricted to colorings that extend `pins`.
pub fn check_consistency(p: &ColoringProblem, pins: &[(usize, u8)], mode: Mode) -> Result<ColoringResult, OracleError> {
    let mut fixed = vec![None; p.points];
    for &(pt, v) in pins {
        if pt >= p.points {
            return Err(OracleError::PinOutOfRange(pt));
        }
        if v > 1 {
            return Err(OracleError::BadPinValue(pt));
        }
        match fixed[pt] {
            Some(old) if old != v => return Err(OracleError::ContradictoryPin(pt)),
            _ => fixed[pt] = Some(v),
        }
    }
    let start = Instant::now();
    let (verdict, mut stats) = match mode {
        Mode::Exhaustive => exhaustive(p, &fixed, false)?,
        Mode::Backtracking => Search::new(p).run(&fixed),
    };
    stats.elapsed = start.elapsed();
    if let Verdict::Colorable(w) = &verdict {
        assert!(p.is_coloring(w, pins), "oracle produced an invalid witness");
    }
    Ok(ColoringResult { verdict, stats })
}

/// Number of colorings, by enumeration.
pub fn count_colorings(p: &ColoringProblem) -> Result<u64, OracleError> {
    let fixed = vec![None; p.points];
    let (_, stats) = exhaustive(p, &fixed, true)?;
    Ok(stats.propagations)
}

/// Enumerates all assignments; with `count` it keeps going and reports the
/// number of colorings in `stats.propagations`.
fn exhaustive(p: &ColoringProblem, fixed: &[Option<u8>], count: bool) -> Result<(Verdict, Stats), OracleError> {
    if p.points > EXHAUSTIVE_MAX_POINTS {
        return Err(OracleError::TooManyPoints(p.points));
    }
    let masks: Vec<u32> = p
        .triples
        .iter()
        .map(|t| t.iter().fold(0u32, |m, &i| m | (1 << i)))
        .collect();
    let mut stats = Stats::default();
    let mut first = None;
    for bits in 0u64..(1u64 << p.points) {
        let bits = bits as u32;
        stats.nodes += 1;
        if fixed
            .iter()
            .enumerate()
            .any(|(i, f)| f.is_some_and(|v| ((bits >> i) & 1) as u8 != v))
        {
            continue;
        }
        if masks.iter().all(|m| (m & bits).count_ones() == 1) {
            if first.is_none() {
                first = Some(bits);
            }
            if !count {
                break;
            }
            stats.propagations += 1;
        }
    }
    let verdict = match first {
        Some(bits) => Verdict::Colorable((0..p.points).map(|i| ((bits >> i) & 1) as u8).collect()),
        None => Verdict::Uncolorable,
    };
    Ok((verdict, stats))
}

const UNSET: u8 = 2;

/// Literal `2 * point + neg`: `neg = 0` asserts the point is 1.
type Lit = u32;

fn lit(pt: usize, v: u8) -> Lit {
    (2 * pt + usize::from(v == 0)) as Lit
}

fn var(l: Lit) -> usize {
    (l >> 1) as usize
}

/// Conflict-driven clause learning on the CNF of the triple constraints:
/// one at-least-one clause and three at-most-one pairs per triple.
/// Two watched literals, first-UIP learning, activity-ordered branching
/// with saved phases (0 first), geometric restarts.
struct Search {
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<usize>>,
    value: Vec<u8>,
    level: Vec<u32>,
    reason: Vec<Option<usize>>,
    phase: Vec<u8>,
    activity: Vec<f64>,
    bump: f64,
    seen: Vec<bool>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    head: usize,
    stats: Stats,
}

impl Search {
    fn new(p: &ColoringProblem) -> Self {
        let n = p.points;
        let mut s = Search {
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * n],
            value: vec![UNSET; n],
            level: vec![0; n],
            reason: vec![None; n],
            phase: vec![0; n],
            activity: vec![0.0; n],
            bump: 1.0,
            seen: vec![false; n],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            head: 0,
            stats: Stats::default(),
        };
        for t in &p.triples {
            s.add_clause(t.iter().map(|&q| lit(q, 1)).collect());
            for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                s.add_clause(vec![lit(t[a], 0), lit(t[b], 0)]);
            }
            for &q in t {
                s.activity[q] += 1.0;
            }
        }
        s
    }

    fn add_clause(&mut self, c: Vec<Lit>) -> usize {
        let i = self.clauses.len();
        self.watches[c[0] as usize].push(i);
        self.watches[c[1] as usize].push(i);
        self.clauses.push(c);
        i
    }

    fn lit_value(&self, l: Lit) -> u8 {
        match self.value[var(l)] {
            UNSET => UNSET,
            v => u8::from((v == 1) == (l & 1 == 0)),
        }
    }

    fn enqueue(&mut self, l: Lit, reason: Option<usize>) {
        let x = var(l);
        self.value[x] = u8::from(l & 1 == 0);
        self.level[x] = self.trail_lim.len() as u32;
        self.reason[x] = reason;
        self.trail.push(l);
    }

    /// Returns a falsified clause, if any.
    fn propagate(&mut self) -> Option<usize> {
        while self.head < self.trail.len() {
            let falsified = self.trail[self.head] ^ 1;
            self.head += 1;
            let ws = std::mem::take(&mut self.watches[falsified as usize]);
            let mut keep = Vec::with_capacity(ws.len());
            let mut conflict = None;
            for (k, &ci) in ws.iter().enumerate() {
                if conflict.is_some() {
                    keep.extend_from_slice(&ws[k..]);
                    break;
                }
                let c = &mut self.clauses[ci];
                if c[0] == falsified {
                    c.swap(0, 1);
                }
                let first = c[0];
                if self.lit_value(first) == 1 {
                    keep.push(ci);
                    continue;
                }
                let c = &self.clauses[ci];
                if let Some(j) = (2..c.len()).find(|&j| self.lit_value(c[j]) != 0) {
                    let c = &mut self.clauses[ci];
                    c.swap(1, j);
                    let w = c[1] as usize;
                    self.watches[w].push(ci);
                    continue;
                }
                keep.push(ci);
                if self.lit_value(first) == 0 {
                    conflict = Some(ci);
                } else {
                    self.stats.propagations += 1;
                    self.enqueue(first, Some(ci));
                }
            }
            self.watches[falsified as usize] = keep;
            if conflict.is_some() {
                return conflict;
            }
        }
        None
    }

    /// First-UIP clause and the level to return to.
    fn analyze(&mut self, mut confl: usize) -> (Vec<Lit>, u32) {
        let current = self.trail_lim.len() as u32;
        let mut learnt = vec![0];
        let mut pending = 0;
        let mut p: Option<Lit> = None;
        let mut idx = self.trail.len();
        loop {
            for k in 0..self.clauses[confl].len() {
                let q = self.clauses[confl][k];
                if Some(q) == p {
                    continue;
                }
                let x = var(q);
                if self.seen[x] || self.level[x] == 0 {
                    continue;
                }
                self.seen[x] = true;
                self.activity[x] += self.bump;
                if self.level[x] == current {
                    pending += 1;
                } else {
                    learnt.push(q);
                }
            }
            loop {
                idx -= 1;
                if self.seen[var(self.trail[idx])] {
                    break;
                }
            }
            let l = self.trail[idx];
            self.seen[var(l)] = false;
            pending -= 1;
            if pending == 0 {
                learnt[0] = l ^ 1;
                break;
            }
            p = Some(l);
            confl = self.reason[var(l)].expect("implied literal has a reason");
        }
        for &q in &learnt[1..] {
            self.seen[var(q)] = false;
        }
        let mut back = 0;
        for k in 1..learnt.len() {
            let lv = self.level[var(learnt[k])];
            if lv > back {
                back = lv;
                learnt.swap(1, k);
            }
        }
        self.bump /= 0.95;
        if self.bump > 1e100 {
            self.activity.iter_mut().for_each(|a| *a *= 1e-100);
            self.bump *= 1e-100;
        }
        (learnt, back)
    }

    fn backtrack(&mut self, lv: u32) {
        if self.trail_lim.len() as u32 <= lv {
            return;
        }
        let mark = self.trail_lim[lv as usize];
        for l in self.trail.drain(mark..) {
            let x = var(l);
            self.phase[x] = self.value[x];
            self.value[x] = UNSET;
        }
        self.trail_lim.truncate(lv as usize);
        self.head = mark;
    }

    fn pick(&self) -> Option<usize> {
        (0..self.value.len())
            .filter(|&x| self.value[x] == UNSET)
            .max_by(|&a, &b| self.activity[a].total_cmp(&self.activity[b]).then(b.cmp(&a)))
    }

    fn run(mut self, fixed: &[Option<u8>]) -> (Verdict, Stats) {
        for (pt, f) in fixed.iter().enumerate() {
            if let Some(v) = *f {
                self.enqueue(lit(pt, v), None);
            }
        }
        let mut budget = 100.0;
        let mut since_restart = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                if self.trail_lim.is_empty() {
                    return (Verdict::Uncolorable, self.stats);
                }
                let (learnt, back) = self.analyze(confl);
                self.backtrack(back);
                since_restart += 1;
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let first = learnt[0];
                    let ci = self.add_clause(learnt);
                    self.enqueue(first, Some(ci));
                }
                continue;
            }
            if since_restart as f64 >= budget {
                since_restart = 0;
                budget *= 1.5;
                self.backtrack(0);
                continue;
            }
            let Some(x) = self.pick() else {
                let w = self.value.clone();
                return (Verdict::Colorable(w), self.stats);
            };
            self.stats.nodes += 1;
            self.trail_lim.push(self.trail.len());
            let v = if self.phase[x] == 1 { 1 } else { 0 };
            self.enqueue(lit(x, v), None);
        }
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    fn both(p: &ColoringProblem, pins: &[(usize, u8)]) -> bool {
        let a = check_consistency(p, pins, Mode::Exhaustive).unwrap();
        let b = check_consistency(p, pins, Mode::Backtracking).unwrap();
        assert_eq!(a.verdict.is_uncolorable(), b.verdict.is_uncolorable());
        a.verdict.is_uncolorable()
    }

    #[test]
    fn single_triple() {
        let p = ColoringProblem::new(3, vec![[0, 1, 2]]).unwrap();
        assert!(!both(&p, &[]));
        assert_eq!(count_colorings(&p).unwrap(), 3);
        let r = check_consistency(&p, &[(0, 1)], Mode::Backtracking).unwrap();
        assert_eq!(r.verdict, Verdict::Colorable(vec![1, 0, 0]));
        assert!(both(&p, &[(0, 1), (1, 1)]));
    }

    #[test]
    fn empty_is_colorable() {
        let p = ColoringProblem::new(4, Vec::new()).unwrap();
        let r = check_coloring(&p, Mode::Backtracking).unwrap();
        assert_eq!(r.verdict, Verdict::Colorable(vec![0; 4]));
    }

    #[test]
    fn input_validation() {
        assert!(matches!(ColoringProblem::new(2, vec![[0, 1, 2]]), Err(OracleError::OutOfRange { .. })));
        assert!(matches!(
            ColoringProblem::new(3, vec![[0, 1, 2], [2, 0, 1]]),
            Err(OracleError::DuplicateTriple(1))
        ));
        let p = ColoringProblem::new(3, vec![[0, 1, 2]]).unwrap();
        assert_eq!(
            check_consistency(&p, &[(0, 1), (0, 0)], Mode::Backtracking),
            Err(OracleError::ContradictoryPin(0))
        );
        let big = ColoringProblem::new(30, Vec::new()).unwrap();
        assert_eq!(check_coloring(&big, Mode::Exhaustive), Err(OracleError::TooManyPoints(30)));
    }

    #[test]
    fn odd_cover_is_uncolorable() {
        // 7 points, 7 triples of the Fano plane: every point in 3 triples, so a
        // coloring would need 7 ones counted 3 times each = 7, impossible.
        let fano = vec![[0, 1, 2], [0, 3, 4], [0, 5, 6], [1, 3, 5], [1, 4, 6], [2, 3, 6], [2, 4, 5]];
        let p = ColoringProblem::new(7, fano).unwrap();
        assert!(both(&p, &[]));
    }
}
