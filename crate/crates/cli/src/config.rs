//! Flat `key = value` config files for `train` and `bench`.
//!
//! Lines hold one assignment each; `#` starts a comment and blank lines are
//! skipped. Values are bare tokens (numbers or words). Every key must be
//! consumed by the command reading the file — leftovers are reported as
//! errors so typos never pass silently.

use std::collections::BTreeMap;
use std::str::FromStr;

pub struct ConfigFile {
    entries: BTreeMap<String, (usize, String)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(format!("line {line_no}: expected 'key = value', got '{line}'"));
            };
            let key = key.trim().to_owned();
            let value = value.trim().to_owned();
            if key.is_empty() || value.is_empty() {
                return Err(format!("line {line_no}: empty key or value"));
            }
            if entries.insert(key.clone(), (line_no, value)).is_some() {
                return Err(format!("line {line_no}: duplicate key '{key}'"));
            }
        }
        Ok(Self { entries })
    }

    /// Removes and parses one key. Missing keys yield `Ok(None)`.
    pub fn take<T>(&mut self, key: &str) -> Result<Option<T>, String>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((line, value)) => value
                .parse()
                .map(Some)
                .map_err(|e| format!("line {line}: bad value for '{key}': {e}")),
        }
    }

    /// Fails if any keys were never consumed.
    pub fn finish(self) -> Result<(), String> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((key, (line, _))) => Err(format!("line {line}: unknown key '{key}'")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_comments_and_blanks() {
        let text = "# a comment\n\nsteps = 100\nmode = mlnp  # trailing\n";
        let mut cfg = ConfigFile::parse(text).unwrap();
        assert_eq!(cfg.take::<usize>("steps").unwrap(), Some(100));
        assert_eq!(cfg.take::<String>("mode").unwrap(), Some("mlnp".to_owned()));
        assert_eq!(cfg.take::<usize>("absent").unwrap(), None);
        cfg.finish().unwrap();
    }

    #[test]
    fn rejects_bad_lines_values_and_leftovers() {
        assert!(ConfigFile::parse("steps\n").is_err());
        assert!(ConfigFile::parse("steps = 1\nsteps = 2\n").is_err());
        let mut cfg = ConfigFile::parse("steps = abc\n").unwrap();
        assert!(cfg.take::<usize>("steps").is_err());
        let cfg = ConfigFile::parse("stepz = 1\n").unwrap();
        assert!(cfg.finish().unwrap_err().contains("stepz"));
    }
}
