//! Todd-Coxeter coset enumeration for the trivial subgroup.
//!
//! When the enumeration closes, cosets are exactly group elements, so word
//! triviality and left multiplication become table lookups. The enumeration
//! terminates iff the presented group is finite; a row budget bounds the
//! attempt.

use crate::rips::Word;

/// A closed coset table: `table[coset][col]` where col = 2*gen for the
/// generator and 2*gen+1 for its inverse. Coset 0 is the identity.
#[derive(Debug, Clone)]
pub struct ClosedTable {
    pub n_gens: usize,
    pub table: Vec<Vec<u32>>,
    /// A representative word per coset, discovered by BFS from the identity.
    pub reps: Vec<Word>,
}

impl ClosedTable {
    pub fn order(&self) -> usize {
        self.table.len()
    }

    fn step(&self, coset: u32, letter: i32) -> u32 {
        let gen = (letter.unsigned_abs() as usize) - 1;
        let col = if letter > 0 { 2 * gen } else { 2 * gen + 1 };
        self.table[coset as usize][col]
    }

    /// Trace a word from a coset.
    pub fn trace(&self, from: u32, word: &Word) -> u32 {
        debug_assert!(word.check(self.n_gens).is_ok());
        let mut c = from;
        for &l in &word.0 {
            c = self.step(c, l);
        }
        c
    }

    /// The coset of a word (its group element).
    pub fn element_of(&self, word: &Word) -> u32 {
        self.trace(0, word)
    }

    /// Left multiplication on elements: g * h, both given as cosets.
    pub fn left_mul(&self, g: u32, h: u32) -> u32 {
        self.trace(g, &self.reps[h as usize].clone())
    }

    pub fn is_identity_word(&self, word: &Word) -> bool {
        self.element_of(word) == 0
    }
}

struct Enumerator {
    n_cols: usize,
    table: Vec<u32>, // row-major, UNDEF for empty
    alive: Vec<bool>,
    parent: Vec<u32>, // union-find for coincidences
    queue: std::collections::VecDeque<(u32, u32)>,
    max_rows: usize,
}

const UNDEF: u32 = u32::MAX;

impl Enumerator {
    fn new(n_gens: usize, max_rows: usize) -> Self {
        let n_cols = 2 * n_gens.max(1);
        let mut e = Enumerator {
            n_cols,
            table: Vec::new(),
            alive: Vec::new(),
            parent: Vec::new(),
            queue: std::collections::VecDeque::new(),
            max_rows,
        };
        e.new_coset();
        e
    }

    fn new_coset(&mut self) -> Option<u32> {
        let id = self.alive.len() as u32;
        if self.alive.len() >= self.max_rows {
            return None;
        }
        self.alive.push(true);
        self.parent.push(id);
        self.table.extend(std::iter::repeat_n(UNDEF, self.n_cols));
        Some(id)
    }

    fn find(&mut self, mut c: u32) -> u32 {
        while self.parent[c as usize] != c {
            let p = self.parent[c as usize];
            self.parent[c as usize] = self.parent[p as usize];
            c = self.parent[c as usize];
        }
        c
    }

    fn get(&self, c: u32, col: usize) -> u32 {
        self.table[c as usize * self.n_cols + col]
    }

    fn set(&mut self, c: u32, col: usize, v: u32) {
        self.table[c as usize * self.n_cols + col] = v;
    }

    fn inv_col(col: usize) -> usize {
        col ^ 1
    }

    /// Record c . col = d (and d . col^-1 = c), queueing coincidences.
    fn deduce(&mut self, c: u32, col: usize, d: u32) {
        let cur = self.get(c, col);
        if cur == UNDEF {
            self.set(c, col, d);
        } else if cur != d {
            self.queue.push_back((cur, d));
        }
        let icol = Self::inv_col(col);
        let cur = self.get(d, icol);
        if cur == UNDEF {
            self.set(d, icol, c);
        } else if cur != c {
            self.queue.push_back((cur, c));
        }
    }

    fn process_coincidences(&mut self) {
        while let Some((a, b)) = self.queue.pop_front() {
            let (a, b) = (self.find(a), self.find(b));
            if a == b {
                continue;
            }
            // merge the larger id into the smaller
            let (keep, drop) = if a < b { (a, b) } else { (b, a) };
            self.parent[drop as usize] = keep;
            self.alive[drop as usize] = false;
            for col in 0..self.n_cols {
                let v = self.get(drop, col);
                if v != UNDEF {
                    let v = self.find(v);
                    let cur = self.get(keep, col);
                    if cur == UNDEF {
                        self.set(keep, col, v);
                        let icol = Self::inv_col(col);
                        // mirror entry
                        let mirror = self.get(v, icol);
                        if mirror == UNDEF {
                            self.set(v, icol, keep);
                        } else {
                            let m = self.find(mirror);
                            if m != keep {
                                self.queue.push_back((m, keep));
                            }
                        }
                    } else {
                        let cur = self.find(cur);
                        if cur != v {
                            self.queue.push_back((cur, v));
                        }
                    }
                }
            }
        }
    }

    fn col_of(letter: i32) -> usize {
        let gen = (letter.unsigned_abs() as usize) - 1;
        if letter > 0 {
            2 * gen
        } else {
            2 * gen + 1
        }
    }

    /// Scan a relator at a coset, defining new cosets to fill the gap.
    /// Returns false when the row budget is exhausted.
    fn scan_and_fill(&mut self, start: u32, relator: &Word) -> bool {
        if relator.0.is_empty() {
            return true;
        }
        loop {
            let start = self.find(start);
            // forward scan
            let mut f = start;
            let mut fi = 0usize;
            while fi < relator.0.len() {
                let next = self.get(f, Self::col_of(relator.0[fi]));
                if next == UNDEF {
                    break;
                }
                f = self.find(next);
                fi += 1;
            }
            if fi == relator.0.len() {
                if f != start {
                    self.queue.push_back((f, start));
                    self.process_coincidences();
                }
                return true;
            }
            // backward scan: stepping back along `letter` applies its inverse
            let mut b = start;
            let mut bi = relator.0.len();
            while bi > fi {
                let letter = relator.0[bi - 1];
                let p = self.get(b, Self::col_of(-letter));
                if p == UNDEF {
                    break;
                }
                b = self.find(p);
                bi -= 1;
            }
            if bi == fi {
                // scans met at the same position: the cosets coincide
                if f != b {
                    self.queue.push_back((f, b));
                    self.process_coincidences();
                }
                return true;
            }
            if bi == fi + 1 {
                self.deduce(f, Self::col_of(relator.0[fi]), b);
                self.process_coincidences();
                return true;
            }
            // fill one gap entry with a fresh coset and rescan
            let Some(fresh) = self.new_coset() else {
                return false;
            };
            self.deduce(f, Self::col_of(relator.0[fi]), fresh);
            self.process_coincidences();
        }
    }
}

/// Enumerate the cosets of the trivial subgroup. `Some(table)` when the
/// table closes within `max_rows` total cosets; `None` otherwise.
pub fn enumerate_trivial(n_gens: usize, relators: &[Word], max_rows: usize) -> Option<ClosedTable> {
    let mut e = Enumerator::new(n_gens, max_rows.max(1));
    // With no relators the group is free: infinite unless rank 0.
    if n_gens > 0 && relators.iter().all(|r| r.0.is_empty()) {
        return None;
    }
    let mut scanned = 0u32;
    loop {
        // next alive unscanned coset
        let total = e.alive.len() as u32;
        let mut next = None;
        while scanned < total {
            if e.alive[scanned as usize] {
                next = Some(scanned);
                break;
            }
            scanned += 1;
        }
        let Some(c) = next else {
            break;
        };
        for r in relators {
            if !e.scan_and_fill(c, r) {
                return None;
            }
            if !e.alive[c as usize] {
                break;
            }
        }
        // ensure the row is complete so the table closes
        if e.alive[c as usize] {
            for col in 0..(2 * n_gens) {
                let c = e.find(c);
                if e.get(c, col) == UNDEF {
                    let fresh = e.new_coset()?;
                    e.deduce(c, col, fresh);
                    e.process_coincidences();
                }
            }
        }
        scanned += 1;
    }
    // compact
    let mut remap = vec![UNDEF; e.alive.len()];
    let mut order = 0u32;
    for i in 0..e.alive.len() {
        if e.alive[i] {
            remap[i] = order;
            order += 1;
        }
    }
    let mut table = vec![vec![UNDEF; 2 * n_gens]; order as usize];
    for i in 0..e.alive.len() {
        if !e.alive[i] {
            continue;
        }
        for col in 0..(2 * n_gens) {
            let v = e.get(i as u32, col);
            debug_assert_ne!(v, UNDEF);
            let v = e.find(v);
            table[remap[i] as usize][col] = remap[v as usize];
        }
    }
    // representative words by BFS from the identity
    let mut reps: Vec<Option<Word>> = vec![None; order as usize];
    reps[0] = Some(Word::identity());
    let mut queue = std::collections::VecDeque::from([0u32]);
    while let Some(c) = queue.pop_front() {
        for gen in 0..n_gens {
            for (col, letter) in [
                (2 * gen, (gen + 1) as i32),
                (2 * gen + 1, -((gen + 1) as i32)),
            ] {
                let d = table[c as usize][col];
                if reps[d as usize].is_none() {
                    let mut w = reps[c as usize].clone().unwrap();
                    w.0.push(letter);
                    reps[d as usize] = Some(w);
                    queue.push_back(d);
                }
            }
        }
    }
    Some(ClosedTable {
        n_gens,
        table,
        reps: reps.into_iter().map(|r| r.unwrap_or_default()).collect(),
    })
}
