use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Parses `key = value` lines. `#` starts a comment; keys are lowercased
/// with `-` and `_` treated alike.
pub fn parse_key_values(text: &str, path: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: path.to_owned(),
            line: i + 1,
            message,
        };
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected 'key = value', got '{line}'")))?;
        let key = normalize_key(k);
        let value = v.trim();
        if key.is_empty() || value.is_empty() {
            return Err(err("empty key or value".into()));
        }
        if out.insert(key.clone(), value.to_owned()).is_some() {
            return Err(err(format!("duplicate key '{key}'")));
        }
    }
    Ok(out)
}

/// Reads a flat config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_key_values(&text, path)
}

/// `Init_Var` and `init-var` both become `init_var`.
pub fn normalize_key(k: &str) -> String {
    k.trim().to_ascii_lowercase().replace('-', "_")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_config() {
        let text = "# best run\nmargin = 2000\ninit-var=5e-5  # beta\n\nneg = s1:1,s2:1,s4:1\n";
        let kv = parse_key_values(text, Path::new("c.conf")).unwrap();
        assert_eq!(kv["margin"], "2000");
        assert_eq!(kv["init_var"], "5e-5");
        assert_eq!(kv["neg"], "s1:1,s2:1,s4:1");
    }

    #[test]
    fn rejects_bad_lines() {
        let p = Path::new("c.conf");
        assert!(matches!(parse_key_values("a = 1\nnonsense\n", p), Err(Error::Parse { line: 2, .. })));
        assert!(parse_key_values("a = 1\nA = 2\n", p).is_err());
        assert!(parse_key_values("a =\n", p).is_err());
    }
}
