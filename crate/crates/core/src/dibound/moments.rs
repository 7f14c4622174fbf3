//! Moment matrices over projector monomials.
//!
//! Generators are projectors grouped into parties. Operators of different
//! parties commute, so a word is brought to canonical form by a stable sort by
//! party followed by collapsing adjacent repeats (`P^2 = P`). Moments are taken
//! real, so a moment and its adjoint are identified by keeping the smaller of
//! the word and its reversal.

use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A single projector: `index` within party `party`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Gen {
    pub party: u8,
    pub index: u8,
}

impl Gen {
    pub fn new(party: usize, index: usize) -> Self {
        Self {
            party: party as u8,
            index: index as u8,
        }
    }
}

/// A canonical operator product; the empty word is the identity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial {
    word: Vec<Gen>,
}

impl Monomial {
    pub fn identity() -> Self {
        Self::default()
    }

    /// Canonical operator form of an arbitrary generator sequence.
    pub fn new(gens: impl IntoIterator<Item = Gen>) -> Self {
        let mut word: Vec<Gen> = gens.into_iter().collect();
        word.sort_by_key(|g| g.party);
        word.dedup();
        Self { word }
    }

    pub fn from_gen(g: Gen) -> Self {
        Self { word: vec![g] }
    }

    pub fn word(&self) -> &[Gen] {
        &self.word
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    /// Operator product `self * other`.
    pub fn mul(&self, other: &Self) -> Self {
        Self::new(self.word.iter().chain(&other.word).copied())
    }

    /// Adjoint: each party's sub-word reversed.
    pub fn adjoint(&self) -> Self {
        let mut word = Vec::with_capacity(self.word.len());
        let mut start = 0;
        while start < self.word.len() {
            let party = self.word[start].party;
            let end = start + self.word[start..].iter().take_while(|g| g.party == party).count();
            word.extend(self.word[start..end].iter().rev());
            start = end;
        }
        Self { word }
    }

    /// Representative of `{w, w^dagger}` used to label real moments.
    pub fn moment_key(&self) -> Self {
        let adj = self.adjoint();
        if adj < *self {
            adj
        } else {
            self.clone()
        }
    }

    /// Sub-word belonging to one party.
    pub fn party_part(&self, party: u8) -> Vec<Gen> {
        self.word.iter().copied().filter(|g| g.party == party).collect()
    }

    pub fn display_with(&self, names: &[char]) -> String {
        if self.word.is_empty() {
            return "1".into();
        }
        self.word
            .iter()
            .map(|g| format!("{}{}", names.get(g.party as usize).copied().unwrap_or('?'), g.index))
            .collect::<Vec<_>>()
            .join("*")
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with(&['A', 'B', 'E', 'F', 'G']))
    }
}

/// All canonical words of length at most `level` over the given party sizes.
pub fn words_up_to(parties: &[usize], level: usize) -> Vec<Monomial> {
    let gens: Vec<Gen> = parties
        .iter()
        .enumerate()
        .flat_map(|(p, &n)| (0..n).map(move |i| Gen::new(p, i)))
        .collect();
    let mut seen: BTreeSet<Monomial> = BTreeSet::new();
    seen.insert(Monomial::identity());
    let mut frontier = vec![Monomial::identity()];
    for len in 1..=level {
        let mut next = Vec::new();
        for w in &frontier {
            for &g in &gens {
                let m = w.mul(&Monomial::from_gen(g));
                if m.len() == len && seen.insert(m.clone()) {
                    next.push(m);
                }
            }
        }
        frontier = next;
    }
    let mut out: Vec<Monomial> = seen.into_iter().collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Largest hierarchy level accepted by the builder.
pub const MAX_LEVEL: usize = 3;

/// Largest moment-matrix order accepted by the solver.
pub const MAX_ORDER: usize = 400;

/// Moment matrix `Gamma[u, v] = <u^dagger v>` with pinned entries and a linear objective.
#[derive(Debug, Clone)]
pub struct MomentProblem<T> {
    party_names: Vec<char>,
    parties: Vec<usize>,
    level: usize,
    basis: Vec<Monomial>,
    classes: Vec<Monomial>,
    class_index: HashMap<Monomial, usize>,
    /// Row-major class of each entry.
    entry_class: Vec<usize>,
    pins: Vec<Option<T>>,
    objective: Vec<(usize, T)>,
    objective_constant: T,
}

impl<T: Real> MomentProblem<T> {
    /// Basis of all words of length `<= level` plus `extra_words`.
    pub fn new(party_names: &[char], parties: &[usize], level: usize, extra_words: &[Monomial]) -> Result<Self> {
        if level == 0 || level > MAX_LEVEL {
            return Err(Error::Capacity {
                what: "hierarchy level".into(),
                needed: level,
                cap: MAX_LEVEL,
            });
        }
        if party_names.len() != parties.len() || parties.iter().any(|&n| n == 0 || n > 255) {
            return Err(Error::Validation("each party needs a name and 1..=255 generators".into()));
        }
        let mut basis = words_up_to(parties, level);
        for w in extra_words {
            let w = Monomial::new(w.word().iter().copied());
            if w.word().iter().any(|g| g.party as usize >= parties.len() || g.index as usize >= parties[g.party as usize]) {
                return Err(Error::Validation(format!("extra word {w} uses an unknown generator")));
            }
            if !basis.contains(&w) {
                basis.push(w);
            }
        }
        let n = basis.len();
        if n > MAX_ORDER {
            return Err(Error::Capacity {
                what: "moment matrix order".into(),
                needed: n,
                cap: MAX_ORDER,
            });
        }
        let mut classes = Vec::new();
        let mut class_index = HashMap::new();
        let mut entry_class = vec![0; n * n];
        for i in 0..n {
            let adj = basis[i].adjoint();
            for j in i..n {
                let key = adj.mul(&basis[j]).moment_key();
                let k = *class_index.entry(key.clone()).or_insert_with(|| {
                    classes.push(key);
                    classes.len() - 1
                });
                entry_class[i * n + j] = k;
                entry_class[j * n + i] = k;
            }
        }
        let pins = vec![None; classes.len()];
        let mut p = Self {
            party_names: party_names.to_vec(),
            parties: parties.to_vec(),
            level,
            basis,
            classes,
            class_index,
            entry_class,
            pins,
            objective: Vec::new(),
            objective_constant: T::zero(),
        };
        p.pin(&Monomial::identity(), T::one())?;
        Ok(p)
    }

    pub fn order(&self) -> usize {
        self.basis.len()
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn parties(&self) -> &[usize] {
        &self.parties
    }

    pub fn basis(&self) -> &[Monomial] {
        &self.basis
    }

    pub fn classes(&self) -> &[Monomial] {
        &self.classes
    }

    pub fn pins(&self) -> &[Option<T>] {
        &self.pins
    }

    pub fn entry_class(&self, i: usize, j: usize) -> usize {
        self.entry_class[i * self.order() + j]
    }

    /// Class of a moment, if it occurs in the matrix.
    pub fn class_of(&self, m: &Monomial) -> Option<usize> {
        self.class_index.get(&Monomial::new(m.word().iter().copied()).moment_key()).copied()
    }

    /// Fix a moment to a value.
    pub fn pin(&mut self, m: &Monomial, value: T) -> Result<()> {
        let k = self
            .class_of(m)
            .ok_or_else(|| Error::Validation(format!("moment {m} does not occur in the moment matrix")))?;
        if !value.is_finite() {
            return Err(Error::Validation(format!("pinned value for {m} is not finite")));
        }
        self.pins[k] = Some(value);
        Ok(())
    }

    /// Objective `constant + sum coeff <m>`; every moment must occur in the matrix.
    pub fn set_objective(&mut self, terms: &[(Monomial, T)], constant: T) -> Result<()> {
        let mut acc: Vec<T> = vec![T::zero(); self.classes.len()];
        for (m, c) in terms {
            let k = self
                .class_of(m)
                .ok_or_else(|| Error::Validation(format!("objective moment {m} does not occur in the moment matrix")))?;
            acc[k] = acc[k] + *c;
        }
        self.objective = acc.into_iter().enumerate().filter(|(_, c)| *c != T::zero()).collect();
        self.objective_constant = constant;
        Ok(())
    }

    pub fn objective(&self) -> (&[(usize, T)], T) {
        (&self.objective, self.objective_constant)
    }

    /// Classes left free, in class order.
    pub fn free_classes(&self) -> Vec<usize> {
        (0..self.classes.len()).filter(|&k| self.pins[k].is_none()).collect()
    }

    /// Moment matrix for given values of every class.
    pub fn matrix_from_classes(&self, values: &[T]) -> Vec<T> {
        self.entry_class.iter().map(|&k| values[k]).collect()
    }

    /// Objective at given class values.
    pub fn objective_value(&self, values: &[T]) -> T {
        self.objective.iter().fold(self.objective_constant, |acc, &(k, c)| acc + c * values[k])
    }

    /// Plain-text listing: header, basis, classes with pins, upper-triangle entries, objective.
    pub fn export_text(&self) -> String {
        let names = &self.party_names;
        let mut s = String::new();
        let _ = writeln!(s, "# moment problem: Gamma[i,j] = <basis_i^dagger basis_j>, maximize objective");
        let parties: Vec<String> = names.iter().zip(&self.parties).map(|(c, n)| format!("{c}:{n}")).collect();
        let _ = writeln!(s, "parties {}", parties.join(" "));
        let _ = writeln!(s, "level {}", self.level);
        let _ = writeln!(s, "order {}", self.order());
        let _ = writeln!(s, "basis");
        for (i, w) in self.basis.iter().enumerate() {
            let _ = writeln!(s, "{i} {}", w.display_with(names));
        }
        let _ = writeln!(s, "variables {}", self.classes.len());
        for (k, m) in self.classes.iter().enumerate() {
            match self.pins[k] {
                Some(v) => {
                    let _ = writeln!(s, "{k} {} pin {:.17e}", m.display_with(names), v.as_f64());
                }
                None => {
                    let _ = writeln!(s, "{k} {} free", m.display_with(names));
                }
            }
        }
        let _ = writeln!(s, "entries");
        let n = self.order();
        for i in 0..n {
            for j in i..n {
                let _ = writeln!(s, "{i} {j} {}", self.entry_class[i * n + j]);
            }
        }
        let _ = writeln!(s, "objective {:.17e}", self.objective_constant.as_f64());
        for &(k, c) in &self.objective {
            let _ = writeln!(s, "{k} {:.17e}", c.as_f64());
        }
        s
    }

    /// SDPA sparse format: minimize `c^T x` s.t. `sum_i F_i x_i - F_0 >= 0`.
    ///
    /// The free moments are the variables, `c` is the negated objective, so the
    /// maximum equals the objective constant minus the SDPA optimum.
    pub fn export_sdpa(&self) -> String {
        let free = self.free_classes();
        let var_of: HashMap<usize, usize> = free.iter().enumerate().map(|(i, &k)| (k, i + 1)).collect();
        let mut c = vec![T::zero(); free.len()];
        for &(k, coeff) in &self.objective {
            if let Some(&v) = var_of.get(&k) {
                c[v - 1] = -coeff;
            }
        }
        let mut s = String::new();
        let mut constant = self.objective_constant;
        for &(k, coeff) in &self.objective {
            if let Some(v) = self.pins[k] {
                constant = constant + coeff * v;
            }
        }
        let _ = writeln!(s, "\"moment problem; maximum = {:.17e} - SDPA optimum", constant.as_f64());
        let _ = writeln!(s, "{}", free.len());
        let _ = writeln!(s, "1");
        let _ = writeln!(s, "{}", self.order());
        let cs: Vec<String> = c.iter().map(|v| format!("{:.17e}", v.as_f64())).collect();
        let _ = writeln!(s, "{}", cs.join(" "));
        let n = self.order();
        for i in 0..n {
            for j in i..n {
                let k = self.entry_class[i * n + j];
                match self.pins[k] {
                    Some(v) if v != T::zero() => {
                        let _ = writeln!(s, "0 1 {} {} {:.17e}", i + 1, j + 1, (-v).as_f64());
                    }
                    Some(_) => {}
                    None => {
                        let _ = writeln!(s, "{} 1 {} {} 1.0", var_of[&k], i + 1, j + 1);
                    }
                }
            }
        }
        s
    }
}
