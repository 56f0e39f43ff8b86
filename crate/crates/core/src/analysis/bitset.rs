use alloc::vec;
use alloc::vec::Vec;

use crate::ir::Var;

/// Dense set of variables.
#[derive(Clone, Debug, Default)]
pub struct VarSet {
    words: Vec<u64>,
}

impl VarSet {
    pub fn with_capacity(n: usize) -> VarSet {
        VarSet { words: vec![0; n.div_ceil(64)] }
    }

    fn grow(&mut self, i: usize) {
        if i / 64 >= self.words.len() {
            self.words.resize(i / 64 + 1, 0);
        }
    }

    pub fn insert(&mut self, v: Var) -> bool {
        let i = v.0 as usize;
        self.grow(i);
        let was = self.words[i / 64] & (1 << (i % 64)) != 0;
        self.words[i / 64] |= 1 << (i % 64);
        !was
    }

    pub fn remove(&mut self, v: Var) {
        let i = v.0 as usize;
        if i / 64 < self.words.len() {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn contains(&self, v: Var) -> bool {
        let i = v.0 as usize;
        self.words.get(i / 64).is_some_and(|w| w & (1 << (i % 64)) != 0)
    }

    /// Adds every element of `other`; returns whether anything changed.
    pub fn union_with(&mut self, other: &VarSet) -> bool {
        if other.words.len() > self.words.len() {
            self.words.resize(other.words.len(), 0);
        }
        let mut changed = false;
        for (w, o) in self.words.iter_mut().zip(&other.words) {
            let n = *w | *o;
            changed |= n != *w;
            *w = n;
        }
        changed
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = Var> + '_ {
        self.words
            .iter()
            .enumerate()
            .flat_map(|(wi, &w)| (0..64).filter(move |b| w & (1u64 << b) != 0).map(move |b| Var((wi * 64 + b) as u32)))
    }
}

impl PartialEq for VarSet {
    fn eq(&self, other: &VarSet) -> bool {
        let n = self.words.len().max(other.words.len());
        (0..n).all(|i| self.words.get(i).copied().unwrap_or(0) == other.words.get(i).copied().unwrap_or(0))
    }
}

impl Eq for VarSet {}

impl FromIterator<Var> for VarSet {
    fn from_iter<I: IntoIterator<Item = Var>>(iter: I) -> Self {
        let mut s = VarSet::default();
        for v in iter {
            s.insert(v);
        }
        s
    }
}
