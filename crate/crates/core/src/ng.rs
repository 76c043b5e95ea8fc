//! Naming-game state: words, inventories, speaker selection, hearer update.
//!
//! A speaker broadcasts one word picked uniformly from its inventory
//! (inventing a fresh word when the inventory is empty); only hearers
//! update. A hearer that already knows the received word drops everything
//! else (success); otherwise it stores the word (failure).

use std::fmt;
use std::str::FromStr;

use rand::Rng;

pub type AgentId = u32;

/// An opaque token of the open-ended word set.
///
/// Identified by `(creator, serial)`, so concurrently inventing agents can
/// never produce the same word without any coordination. Serialized in
/// logs and CSV as `creator:serial`, e.g. `7:0`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Word {
    pub creator: AgentId,
    pub serial: u32,
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.creator, self.serial)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseWordError(String);

impl fmt::Display for ParseWordError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid word {:?}: expected \"creator:serial\"", self.0)
    }
}

impl std::error::Error for ParseWordError {}

impl FromStr for Word {
    type Err = ParseWordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (c, n) = s.split_once(':').ok_or_else(|| ParseWordError(s.into()))?;
        let creator = c.parse().map_err(|_| ParseWordError(s.into()))?;
        let serial = n.parse().map_err(|_| ParseWordError(s.into()))?;
        Ok(Word { creator, serial })
    }
}

/// Mints a fresh word for `creator` and advances its invention counter.
/// Returned words are unique across a run by construction.
pub fn invent_word(creator: AgentId, counter: &mut u32) -> Word {
    let word = Word { creator, serial: *counter };
    *counter += 1;
    word
}

/// An agent's duplicate-free set of candidate words.
///
/// Insertion order is kept so that uniform selection driven by the agent's
/// own RNG stream is reproducible. Once non-empty an inventory never
/// becomes empty again: the hearer update either grows it or shrinks it to
/// a single word.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Inventory {
    words: Vec<Word>,
}

impl Inventory {
    pub fn new() -> Self {
        Inventory::default()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: Word) -> bool {
        self.words.contains(&word)
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    /// The inventory's word if it holds exactly one.
    pub fn single(&self) -> Option<Word> {
        match self.words[..] {
            [w] => Some(w),
            _ => None,
        }
    }

    /// Adds `word` unless already present. Returns whether it was inserted.
    pub fn insert(&mut self, word: Word) -> bool {
        if self.contains(word) {
            false
        } else {
            self.words.push(word);
            true
        }
    }

    /// Hearer update for a received word.
    ///
    /// If `word` is known, every other word is dropped and the game counts
    /// as a success; otherwise `word` is stored. Returns the success flag.
    pub fn hear(&mut self, word: Word) -> bool {
        if self.contains(word) {
            self.words.clear();
            self.words.push(word);
            true
        } else {
            self.words.push(word);
            false
        }
    }

    /// Speaker selection: a uniform pick from the inventory, or a fresh
    /// invention (kept in the inventory) when it is empty.
    pub fn speak<R: Rng + ?Sized>(
        &mut self,
        speaker: AgentId,
        counter: &mut u32,
        rng: &mut R,
    ) -> Word {
        if self.words.is_empty() {
            let word = invent_word(speaker, counter);
            self.words.push(word);
            word
        } else {
            self.words[rng.random_range(0..self.words.len())]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn w(creator: u32, serial: u32) -> Word {
        Word { creator, serial }
    }

    #[test]
    fn invention_advances_counter_and_disambiguates() {
        let mut counter = 0;
        assert_eq!(invent_word(7, &mut counter), w(7, 0));
        assert_eq!(counter, 1);
        assert_eq!(invent_word(7, &mut counter), w(7, 1));
        assert_ne!(w(7, 0), w(7, 1));
        // same serial, different creators
        assert_ne!(w(3, 0), w(4, 0));
    }

    #[test]
    fn speak_on_empty_inventory_invents_and_keeps_the_word() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut inv = Inventory::new();
        let mut counter = 0;
        let word = inv.speak(9, &mut counter, &mut rng);
        assert_eq!(word, w(9, 0));
        assert_eq!(inv.words(), &[w(9, 0)]);
        assert_eq!(counter, 1);
    }

    #[test]
    fn speak_on_singleton_returns_it_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut inv = Inventory::new();
        inv.insert(w(1, 0));
        let mut counter = 5;
        assert_eq!(inv.speak(1, &mut counter, &mut rng), w(1, 0));
        assert_eq!(inv.words(), &[w(1, 0)]);
        assert_eq!(counter, 5, "no invention on a non-empty inventory");
    }

    #[test]
    fn speak_selects_uniformly() {
        // 10^4 draws from a two-word inventory: each frequency 0.5 +- 0.02.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut inv = Inventory::new();
        inv.insert(w(1, 0));
        inv.insert(w(2, 0));
        let mut counter = 0;
        let draws = 10_000;
        let mut first = 0;
        for _ in 0..draws {
            if inv.speak(1, &mut counter, &mut rng) == w(1, 0) {
                first += 1;
            }
        }
        let freq = first as f64 / draws as f64;
        assert!((freq - 0.5).abs() <= 0.02, "freq = {freq}");
    }

    #[test]
    fn hear_known_word_prunes_to_it() {
        let mut inv = Inventory::new();
        inv.insert(w(1, 0));
        inv.insert(w(2, 0));
        assert!(inv.hear(w(2, 0)));
        assert_eq!(inv.words(), &[w(2, 0)]);
    }

    #[test]
    fn hear_unknown_word_stores_it() {
        let mut inv = Inventory::new();
        inv.insert(w(1, 0));
        assert!(!inv.hear(w(2, 0)));
        assert_eq!(inv.words(), &[w(1, 0), w(2, 0)]);
    }

    #[test]
    fn hear_into_empty_inventory_stores() {
        let mut inv = Inventory::new();
        assert!(!inv.hear(w(2, 0)));
        assert_eq!(inv.words(), &[w(2, 0)]);
    }

    #[test]
    fn hear_is_idempotent_on_success() {
        let mut inv = Inventory::new();
        inv.insert(w(1, 0));
        inv.insert(w(2, 0));
        assert!(inv.hear(w(1, 0)));
        assert!(inv.hear(w(1, 0)));
        assert_eq!(inv.words(), &[w(1, 0)]);
    }

    #[test]
    fn heard_word_is_always_present_afterwards() {
        let mut inv = Inventory::new();
        for word in [w(1, 0), w(2, 0), w(1, 0), w(3, 4), w(3, 4)] {
            inv.hear(word);
            assert!(inv.contains(word));
            assert!(!inv.is_empty());
        }
    }
}
