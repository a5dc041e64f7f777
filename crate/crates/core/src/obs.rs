//! Propositional alphabets and high-level observations (truth assignments).

use std::collections::HashMap;
use std::fmt;

use smallvec::{smallvec, SmallVec};

use crate::error::{Error, Result};

/// One propositional symbol of an alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Proposition {
    pub id: usize,
    pub name: String,
}

/// An ordered, duplicate-free list of propositions. Ids are dense `0..len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    props: Vec<Proposition>,
    by_name: HashMap<String, usize>,
}

impl Alphabet {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut props = Vec::new();
        let mut by_name = HashMap::new();
        for (id, name) in names.into_iter().enumerate() {
            let name = name.into();
            if name.is_empty() {
                return Err(Error::AlphabetMismatch("empty proposition name".into()));
            }
            if by_name.insert(name.clone(), id).is_some() {
                return Err(Error::AlphabetMismatch(format!(
                    "duplicate proposition `{name}`"
                )));
            }
            props.push(Proposition { id, name });
        }
        Ok(Alphabet { props, by_name })
    }

    pub fn len(&self) -> usize {
        self.props.len()
    }

    pub fn is_empty(&self) -> bool {
        self.props.is_empty()
    }

    pub fn propositions(&self) -> &[Proposition] {
        &self.props
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.props.iter().map(|p| p.name.as_str())
    }

    pub fn id_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    /// The empty truth assignment over this alphabet.
    pub fn empty_obs(&self) -> HighLevelObs {
        HighLevelObs::empty()
    }

    /// Builds an observation from the names of the propositions that hold.
    pub fn obs<I, S>(&self, names: I) -> Result<HighLevelObs>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut obs = self.empty_obs();
        for name in names {
            let name = name.as_ref();
            let id = self
                .id_of(name)
                .ok_or_else(|| Error::AlphabetMismatch(format!("unknown proposition `{name}`")))?;
            obs.set(id);
        }
        Ok(obs)
    }

    /// Names of the true propositions, sorted lexicographically (the canonical
    /// external form).
    pub fn sorted_names(&self, obs: &HighLevelObs) -> Vec<String> {
        let mut names: Vec<String> = obs
            .ids()
            .filter_map(|id| self.props.get(id))
            .map(|p| p.name.clone())
            .collect();
        names.sort();
        names
    }

    /// Human-readable label such as `{button_pressed,room_orange}`.
    pub fn display(&self, obs: &HighLevelObs) -> String {
        format!("{{{}}}", self.sorted_names(obs).join(","))
    }

    /// Returns an error if `obs` mentions a proposition id outside this alphabet.
    pub fn check(&self, obs: &HighLevelObs) -> Result<()> {
        match obs.ids().find(|&id| id >= self.len()) {
            Some(id) => Err(Error::AlphabetMismatch(format!(
                "observation uses proposition #{id} but the alphabet has {} propositions",
                self.len()
            ))),
            None => Ok(()),
        }
    }
}

/// A truth assignment over an alphabet, stored as a bit set.
///
/// Up to 64 propositions fit inline; wider alphabets spill into extra words.
/// Trailing zero words are never stored, so equality and hashing are
/// independent of how the value was built.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HighLevelObs {
    words: SmallVec<[u64; 1]>,
}

impl HighLevelObs {
    pub fn empty() -> Self {
        HighLevelObs { words: smallvec![] }
    }

    pub fn from_ids<I: IntoIterator<Item = usize>>(ids: I) -> Self {
        let mut obs = HighLevelObs { words: smallvec![] };
        for id in ids {
            obs.set(id);
        }
        obs
    }

    pub fn set(&mut self, id: usize) {
        let word = id / 64;
        if self.words.len() <= word {
            self.words.resize(word + 1, 0);
        }
        self.words[word] |= 1 << (id % 64);
    }

    pub fn clear(&mut self, id: usize) {
        let word = id / 64;
        if let Some(w) = self.words.get_mut(word) {
            *w &= !(1 << (id % 64));
        }
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }

    pub fn contains(&self, id: usize) -> bool {
        self.words
            .get(id / 64)
            .is_some_and(|w| w & (1 << (id % 64)) != 0)
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Ids of the true propositions, ascending.
    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            (0..64)
                .filter(move |b| w & (1u64 << b) != 0)
                .map(move |b| wi * 64 + b)
        })
    }
}

impl fmt::Debug for HighLevelObs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.ids()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_and_clear_normalise_storage() {
        let mut a = HighLevelObs::from_ids([3, 70]);
        assert!(a.contains(70));
        a.clear(70);
        assert_eq!(a, HighLevelObs::from_ids([3]));
        a.clear(3);
        assert!(a.is_empty());
        assert_eq!(a, HighLevelObs::empty());
    }

    #[test]
    fn wide_alphabets_round_trip_through_names() {
        let names: Vec<String> = (0..130).map(|i| format!("p{i:03}")).collect();
        let alphabet = Alphabet::new(names.clone()).unwrap();
        let obs = alphabet.obs(["p000", "p064", "p129"]).unwrap();
        assert_eq!(obs.ids().collect::<Vec<_>>(), vec![0, 64, 129]);
        assert_eq!(alphabet.sorted_names(&obs), vec!["p000", "p064", "p129"]);
        alphabet.check(&obs).unwrap();
    }

    #[test]
    fn rejects_duplicates_and_unknown_names() {
        assert!(Alphabet::new(["a", "a"]).is_err());
        let alphabet = Alphabet::new(["a", "b"]).unwrap();
        assert!(alphabet.obs(["c"]).is_err());
        assert!(alphabet.check(&HighLevelObs::from_ids([5])).is_err());
    }
}
