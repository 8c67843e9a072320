use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::model::AgentId;

/// A set of agents, stored as a 64-bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct AgentSet(u64);

impl AgentSet {
    pub const fn empty() -> Self {
        AgentSet(0)
    }

    /// `{0, …, k-1}`.
    pub fn all(k: usize) -> Self {
        assert!(k <= 64);
        if k == 64 {
            AgentSet(u64::MAX)
        } else {
            AgentSet((1u64 << k) - 1)
        }
    }

    pub fn from_bits(bits: u64) -> Self {
        AgentSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn contains(self, agent: AgentId) -> bool {
        agent < 64 && self.0 & (1 << agent) != 0
    }

    pub fn insert(&mut self, agent: AgentId) {
        self.0 |= 1 << agent;
    }

    pub fn remove(&mut self, agent: AgentId) {
        self.0 &= !(1 << agent);
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_subset(self, other: AgentSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = AgentId> {
        (0..64).filter(move |&i| self.contains(i))
    }

    /// All subsets of `{0, …, k-1}` in increasing bit order.
    pub fn subsets(k: usize) -> impl Iterator<Item = AgentSet> {
        assert!(k < 64, "too many agents to enumerate subsets");
        (0..1u64 << k).map(AgentSet)
    }
}

impl FromIterator<AgentId> for AgentSet {
    fn from_iter<I: IntoIterator<Item = AgentId>>(iter: I) -> Self {
        let mut s = AgentSet::empty();
        for a in iter {
            s.insert(a);
        }
        s
    }
}

impl fmt::Display for AgentSet {
    /// `{0,2}`; the empty set prints as `{}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.iter().map(|a| a.to_string()).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentSetParseError {
    #[error("`{0}` is not an agent id")]
    NotANumber(String),
    #[error("agent id {0} is out of range")]
    OutOfRange(usize),
}

impl FromStr for AgentSet {
    type Err = AgentSetParseError;

    /// Comma-separated ids, or `none` for the empty set.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("none") || s == "{}" {
            return Ok(AgentSet::empty());
        }
        let s = s.trim_start_matches('{').trim_end_matches('}');
        let mut set = AgentSet::empty();
        for part in s.split(',') {
            let part = part.trim();
            let id: usize = part
                .parse()
                .map_err(|_| AgentSetParseError::NotANumber(part.to_string()))?;
            if id >= 64 {
                return Err(AgentSetParseError::OutOfRange(id));
            }
            set.insert(id);
        }
        Ok(set)
    }
}

impl Serialize for AgentSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for AgentSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let ids = Vec::<usize>::deserialize(deserializer)?;
        if let Some(&bad) = ids.iter().find(|&&i| i >= 64) {
            return Err(serde::de::Error::custom(format!(
                "agent id {bad} out of range"
            )));
        }
        Ok(ids.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!("none".parse::<AgentSet>().unwrap(), AgentSet::empty());
        assert_eq!(
            "0,2".parse::<AgentSet>().unwrap(),
            [0, 2].into_iter().collect()
        );
        assert_eq!(
            "{1}".parse::<AgentSet>().unwrap(),
            [1].into_iter().collect()
        );
        assert!("x".parse::<AgentSet>().is_err());
        assert!("".parse::<AgentSet>().is_err());
    }

    #[test]
    fn display_and_subsets() {
        let s: AgentSet = [0, 1].into_iter().collect();
        assert_eq!(s.to_string(), "{0,1}");
        assert_eq!(AgentSet::empty().to_string(), "{}");
        assert_eq!(AgentSet::subsets(3).count(), 8);
        assert!(s.is_subset(AgentSet::all(2)));
        assert!(!AgentSet::all(3).is_subset(s));
    }
}
