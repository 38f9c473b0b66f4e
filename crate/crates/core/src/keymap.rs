//! Deterministic key to index mapping for keyed corpora.
//!
//! Keys are ranked in byte-wise lexicographic order, so index `r` is the
//! `r`-th smallest key. The map file is one `index<TAB>key` line per key in
//! rank order.

use std::path::Path;

use crate::error::{Error, Result};
use crate::hints::write_atomically;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyMap {
    keys: Vec<String>,
}

impl KeyMap {
    /// Fails with every duplicated key, each listed once.
    pub fn from_keys<I, S>(keys: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut keys: Vec<String> = keys.into_iter().map(Into::into).collect();
        keys.sort_unstable();
        let mut dups: Vec<String> = keys.windows(2).filter(|w| w[0] == w[1]).map(|w| w[0].clone()).collect();
        dups.dedup();
        if !dups.is_empty() {
            return Err(Error::DuplicateKeys(dups));
        }
        Ok(KeyMap { keys })
    }

    /// Newline-separated keys. A trailing `\r` is stripped and blank lines
    /// are skipped.
    pub fn parse_keys(text: &str) -> Result<Self> {
        KeyMap::from_keys(
            text.lines()
                .map(|l| l.strip_suffix('\r').unwrap_or(l))
                .filter(|l| !l.is_empty()),
        )
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// 0-based index of `key`.
    pub fn lookup(&self, key: &str) -> Option<u64> {
        self.keys.binary_search_by(|k| k.as_str().cmp(key)).ok().map(|i| i as u64)
    }

    pub fn key(&self, index: u64) -> Option<&str> {
        self.keys.get(usize::try_from(index).ok()?).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &str)> {
        self.keys.iter().enumerate().map(|(i, k)| (i as u64, k.as_str()))
    }

    pub fn to_map_file(&self) -> String {
        let mut out = String::new();
        for (i, k) in self.iter() {
            out.push_str(&format!("{i}\t{k}\n"));
        }
        out
    }

    /// Parses a map file, checking that indices are 0..len in order and keys ascend.
    pub fn from_map_file(text: &str) -> Result<Self> {
        let mut keys = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let (idx, key) = line
                .split_once('\t')
                .ok_or_else(|| Error::Config(format!("map line {}: missing tab", line_no + 1)))?;
            let idx: u64 = idx
                .parse()
                .map_err(|_| Error::Config(format!("map line {}: bad index {idx:?}", line_no + 1)))?;
            if idx != keys.len() as u64 {
                return Err(Error::Config(format!("map line {}: expected index {}", line_no + 1, keys.len())));
            }
            if keys.last().is_some_and(|prev: &String| prev.as_str() >= key) {
                return Err(Error::Config(format!("map line {}: keys out of order", line_no + 1)));
            }
            keys.push(key.to_string());
        }
        Ok(KeyMap { keys })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(write_atomically(path.as_ref(), self.to_map_file().as_bytes())?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        KeyMap::from_map_file(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_rank() {
        let m = KeyMap::parse_keys("b\na\nc\n").unwrap();
        assert_eq!(m.lookup("a"), Some(0));
        assert_eq!(m.lookup("b"), Some(1));
        assert_eq!(m.lookup("c"), Some(2));
        assert_eq!(m.lookup("d"), None);
        assert_eq!(m.to_map_file(), "0\ta\n1\tb\n2\tc\n");
    }

    #[test]
    fn duplicates_listed_once() {
        match KeyMap::parse_keys("x\ny\nx\nz\ny\nx\n") {
            Err(Error::DuplicateKeys(d)) => assert_eq!(d, vec!["x".to_string(), "y".to_string()]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn map_file_round_trip() {
        let m = KeyMap::parse_keys("q:1\r\nq:0\r\n\r\nwith\ttab\n").unwrap();
        let again = KeyMap::from_map_file(&m.to_map_file()).unwrap();
        assert_eq!(m, again);
        assert_eq!(again.lookup("with\ttab"), Some(2));
        assert!(KeyMap::from_map_file("1\ta\n").is_err());
        assert!(KeyMap::from_map_file("0\tb\n1\ta\n").is_err());
    }
}
