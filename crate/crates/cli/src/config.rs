//! `key = value` settings with a fixed whitelist per subcommand. Values come
//! from defaults, then a config file, then command-line flags.

use std::collections::BTreeMap;
use std::fmt;

/// `(key, default, help)`.
pub type KeySpec = (&'static str, &'static str, &'static str);

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(dwlab::Error),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(s) => write!(f, "usage error: {s}"),
            CliError::Run(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<dwlab::Error> for CliError {
    fn from(e: dwlab::Error) -> Self {
        CliError::Run(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 64,
            CliError::Run(e) if e.is_numerical() => 3,
            CliError::Run(_) => 2,
            CliError::Io(_) => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_file(text: &str, keys: &[KeySpec]) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("line {}: expected key = value", no + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !keys.iter().any(|s| s.0 == k) {
            return Err(CliError::Usage(format!("line {}: unknown key '{k}'", no + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(CliError::Usage(format!("line {}: duplicate key '{k}'", no + 1)));
        }
    }
    Ok(out)
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub command: String,
    pub values: BTreeMap<String, String>,
}

impl Config {
    pub fn resolve(
        command: &str,
        keys: &[KeySpec],
        file: Option<BTreeMap<String, String>>,
        flags: BTreeMap<String, String>,
    ) -> Config {
        let mut values: BTreeMap<String, String> = keys.iter().map(|(k, d, _)| (k.to_string(), d.to_string())).collect();
        values.extend(file.unwrap_or_default());
        values.extend(flags);
        Config { command: command.to_string(), values }
    }

    pub fn str(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("key '{key}' missing from the whitelist"))
    }

    fn bad(&self, key: &str, what: &str) -> CliError {
        CliError::Usage(format!("{key} = '{}' is not {what}", self.str(key)))
    }

    pub fn f64(&self, key: &str) -> CliResult<f64> {
        self.str(key).parse().map_err(|_| self.bad(key, "a number"))
    }

    pub fn usize(&self, key: &str) -> CliResult<usize> {
        self.str(key).parse().map_err(|_| self.bad(key, "a non-negative integer"))
    }

    pub fn bool(&self, key: &str) -> CliResult<bool> {
        match self.str(key) {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(self.bad(key, "a boolean")),
        }
    }

    /// Comma-separated numbers; the empty string is an empty list.
    pub fn f64_list(&self, key: &str) -> CliResult<Vec<f64>> {
        let s = self.str(key).trim();
        if s.is_empty() {
            return Ok(Vec::new());
        }
        s.split(',').map(|x| x.trim().parse().map_err(|_| self.bad(key, "a comma-separated list of numbers"))).collect()
    }

    /// `# key = value` lines for text artifacts.
    pub fn comment_block(&self) -> String {
        let mut s = format!("# dwlab {} {}\n", dwlab::VERSION, self.command);
        for (k, v) in &self.values {
            s.push_str(&format!("# {k} = {v}\n"));
        }
        s
    }

    pub fn json(&self) -> serde_json::Value {
        serde_json::Value::Object(self.values.iter().map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone()))).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KEYS: &[KeySpec] = &[("a", "1", ""), ("b", "x", "")];

    #[test]
    fn file_flags_and_defaults() {
        let f = parse_file("# comment\n a = 2  # trailing\n\n", KEYS).unwrap();
        let mut flags = BTreeMap::new();
        flags.insert("b".to_string(), "y".to_string());
        let c = Config::resolve("t", KEYS, Some(f), flags);
        assert_eq!(c.f64("a").unwrap(), 2.0);
        assert_eq!(c.str("b"), "y");
    }

    #[test]
    fn strict_keys() {
        assert!(matches!(parse_file("c = 1", KEYS), Err(CliError::Usage(_))));
        assert!(matches!(parse_file("a 1", KEYS), Err(CliError::Usage(_))));
        assert!(matches!(parse_file("a = 1\na = 2", KEYS), Err(CliError::Usage(_))));
    }

    #[test]
    fn lists() {
        let mut flags = BTreeMap::new();
        flags.insert("b".to_string(), "1e-2, 1e-3".to_string());
        let c = Config::resolve("t", KEYS, None, flags.clone());
        assert_eq!(c.f64_list("b").unwrap(), vec![1e-2, 1e-3]);
        flags.insert("b".to_string(), String::new());
        assert!(Config::resolve("t", KEYS, None, flags).f64_list("b").unwrap().is_empty());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 64);
        assert_eq!(CliError::Run(dwlab::Error::Domain("x".into())).exit_code(), 2);
        assert_eq!(CliError::Run(dwlab::Error::Stiffness { t: 0.0, h: 1e-20 }).exit_code(), 3);
        assert_eq!(CliError::Run(dwlab::Error::ShadowLoss { error: 1.0, amplitude: 0.1 }).exit_code(), 3);
    }
}
