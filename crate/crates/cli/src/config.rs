//! Plain `key = value` configuration files. Flags always win over file
//! entries; file entries win over built-in defaults.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Default, Clone)]
pub struct ConfigMap {
    entries: HashMap<String, String>,
}

impl ConfigMap {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut entries = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", lineno + 1))?;
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(ConfigMap { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// CLI value, else config-file value, else default.
    pub fn pick<T: FromStr + Clone>(
        &self,
        cli: Option<T>,
        key: &str,
        default: T,
    ) -> Result<T, String>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = cli {
            return Ok(v);
        }
        match self.get(key) {
            Some(raw) => raw
                .parse::<T>()
                .map_err(|e| format!("config key {key:?}: cannot parse {raw:?}: {e}")),
            None => Ok(default),
        }
    }

    /// As [`pick`](Self::pick) but with no default: the value must come
    /// from the command line or the file.
    pub fn require<T: FromStr>(&self, cli: Option<T>, key: &str) -> Result<T, String>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = cli {
            return Ok(v);
        }
        match self.get(key) {
            Some(raw) => raw
                .parse::<T>()
                .map_err(|e| format!("config key {key:?}: cannot parse {raw:?}: {e}")),
            None => Err(format!("missing required option --{key} (or config key {key})")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_merges() {
        let cfg = ConfigMap::parse("ell = 3/10\nw=1/4 # subfair\n\n# comment\n").unwrap();
        assert_eq!(cfg.get("ell"), Some("3/10"));
        assert_eq!(cfg.get("w"), Some("1/4"));
        let picked: u32 = cfg.pick(Some(9), "n-max", 4).unwrap();
        assert_eq!(picked, 9);
        let picked: u32 = cfg.pick(None, "n-max", 4).unwrap();
        assert_eq!(picked, 4);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(ConfigMap::parse("just words\n").is_err());
    }
}
