//! Flat `key = value` run configuration. Layers are merged in order:
//! command defaults, preset, config files, then command-line overrides.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::CliError;

#[derive(Clone, Debug, Default)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

/// Parses `key = value` lines. `#` starts a comment, blank lines are skipped.
pub fn parse_pairs(text: &str, origin: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = split_pair(line).map_err(|e| CliError::Usage(format!("{origin}:{}: {e}", lineno + 1)))?;
        out.push((k, v));
    }
    Ok(out)
}

pub fn split_pair(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got '{s}'"))?;
    let k = k.trim();
    if k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(format!("bad key '{k}'"));
    }
    Ok((k.to_string(), v.trim().to_string()))
}

pub fn read_file(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_pairs(&text, &path.display().to_string())
}

impl RunConfig {
    pub fn new(defaults: &[(&str, &str)]) -> Self {
        Self { values: defaults.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect() }
    }

    /// Applies a layer; every key must already have a default.
    pub fn apply<I>(&mut self, layer: I, origin: &str) -> Result<(), CliError>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        for (k, v) in layer {
            match self.values.get_mut(&k) {
                Some(slot) => *slot = v,
                None => {
                    let known: Vec<&str> = self.values.keys().map(String::as_str).collect();
                    return Err(CliError::Usage(format!("unknown key '{k}' ({origin}); known keys: {}", known.join(", "))));
                }
            }
        }
        Ok(())
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("no default for key '{key}'"))
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        parse_f64(key, self.raw(key))
    }

    pub fn bool(&self, key: &str) -> Result<bool, CliError> {
        match self.raw(key) {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            v => Err(CliError::Usage(format!("{key}: expected true or false, got '{v}'"))),
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        self.raw(key).parse().map_err(|_| CliError::Usage(format!("{key}: expected a non-negative integer, got '{}'", self.raw(key))))
    }

    pub fn i64(&self, key: &str) -> Result<i64, CliError> {
        parse_i64(key, self.raw(key))
    }

    /// Comma list and/or `start:stop:step` ranges (inclusive).
    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let mut out = Vec::new();
        for item in self.raw(key).split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let parts: Vec<&str> = item.split(':').collect();
            match parts.as_slice() {
                [single] => out.push(parse_f64(key, single)?),
                [a, b, step] => out.extend(range(key, parse_f64(key, a)?, parse_f64(key, b)?, parse_f64(key, step)?)?),
                _ => return Err(CliError::Usage(format!("{key}: bad list item '{item}'"))),
            }
        }
        if out.is_empty() {
            return Err(CliError::Usage(format!("{key}: empty list")));
        }
        Ok(out)
    }

    pub fn i64_list(&self, key: &str) -> Result<Vec<i64>, CliError> {
        let mut out = Vec::new();
        for item in self.raw(key).split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item.split_once(':') {
                None => out.push(parse_i64(key, item)?),
                Some((a, b)) => {
                    let (a, b) = (parse_i64(key, a)?, parse_i64(key, b)?);
                    if b < a {
                        return Err(CliError::Usage(format!("{key}: empty range '{item}'")));
                    }
                    out.extend(a..=b);
                }
            }
        }
        if out.is_empty() {
            return Err(CliError::Usage(format!("{key}: empty list")));
        }
        Ok(out)
    }

    /// `key=value` pairs in key order, for the comment line of outputs.
    pub fn describe(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.values).expect("string map")
    }
}

fn parse_f64(key: &str, s: &str) -> Result<f64, CliError> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(CliError::Usage(format!("{key}: expected a finite number, got '{s}'"))),
    }
}

fn parse_i64(key: &str, s: &str) -> Result<i64, CliError> {
    s.trim().parse().map_err(|_| CliError::Usage(format!("{key}: expected an integer, got '{s}'")))
}

/// Inclusive grid `start, start+step, ..., stop`.
pub fn range(key: &str, start: f64, stop: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0) || stop < start {
        return Err(CliError::Usage(format!("{key}: empty grid {start}:{stop}:{step}")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 10_000_000 {
        return Err(CliError::Usage(format!("{key}: grid of {count} points is too large")));
    }
    // index-based so values do not accumulate rounding; the snap to 12
    // decimals keeps grid labels like 0.03 from printing as 0.030000000000000002
    Ok((0..count).map(|k| ((start + step * k as f64) * 1e12).round() / 1e12).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> RunConfig {
        RunConfig::new(&[("delta", "1"), ("n", "0"), ("flag", "false")])
    }

    #[test]
    fn later_layers_win() {
        let mut c = cfg();
        c.apply(parse_pairs("delta = 2 # comment\n\n n=3", "file").unwrap(), "file").unwrap();
        c.apply([("delta".to_string(), "0.5".to_string())], "cli").unwrap();
        assert_eq!(c.f64("delta").unwrap(), 0.5);
        assert_eq!(c.i64("n").unwrap(), 3);
    }

    #[test]
    fn unknown_key_is_usage_error() {
        let err = cfg().apply([("detla".to_string(), "1".to_string())], "cli").unwrap_err();
        assert!(matches!(err, CliError::Usage(_)));
    }

    #[test]
    fn lists_and_ranges() {
        let mut c = cfg();
        c.apply([("delta".to_string(), "0:1:0.25, 3".to_string()), ("n".to_string(), "0:2,5".to_string())], "cli").unwrap();
        assert_eq!(c.f64_list("delta").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0, 3.0]);
        assert_eq!(c.i64_list("n").unwrap(), vec![0, 1, 2, 5]);
    }

    #[test]
    fn bad_values() {
        let mut c = cfg();
        c.apply([("delta".to_string(), "1:0:0.1".to_string()), ("flag".to_string(), "maybe".to_string())], "cli").unwrap();
        assert!(c.f64_list("delta").is_err());
        assert!(c.bool("flag").is_err());
        assert!(parse_pairs("novalue", "x").is_err());
        assert!(range("k", 0.0, 1.0, 0.0).is_err());
        assert!(parse_f64("k", "nan").is_err());
    }

    #[test]
    fn description_is_sorted() {
        assert_eq!(cfg().describe(), "delta=1 flag=false n=0");
    }
}
