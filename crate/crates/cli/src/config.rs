//! Angle literals and the key=value config file.

use std::f64::consts::PI;
use std::ffi::OsString;
use std::path::Path;

/// Radians as a number or a multiple of `pi`: `1.2`, `pi/2`, `-5pi/6`, `2*pi/3`.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    let bad = || format!("not an angle: {s:?} (use radians, e.g. 1.047 or pi/3)");
    let (sign, body) = match t.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, t.strip_prefix('+').unwrap_or(&t)),
    };
    let (coef, rest) = body.split_once("pi").ok_or_else(bad)?;
    let coef = coef.strip_suffix('*').unwrap_or(coef);
    let c = if coef.is_empty() { 1.0 } else { coef.parse::<f64>().map_err(|_| bad())? };
    let d = match rest {
        "" => 1.0,
        r => r.strip_prefix('/').ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())?,
    };
    if d == 0.0 {
        return Err(bad());
    }
    Ok(sign * c * PI / d)
}

/// `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("config line {}: expected key=value", i + 1))?;
        let k = k.trim().trim_start_matches("--").replace('_', "-");
        if k.is_empty() || k == "config" {
            return Err(format!("config line {}: bad key {:?}", i + 1, k));
        }
        out.push((k, v.trim().to_string()));
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            break;
        }
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

fn has_flag(args: &[OsString], key: &str) -> bool {
    let long = format!("--{key}");
    let with_eq = format!("--{key}=");
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == long || s.starts_with(&with_eq)
    })
}

/// Appends config entries as `--key=value` flags unless the flag is already given.
pub fn merge_config(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&args) else { return Ok(args) };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| format!("cannot read config {}: {e}", Path::new(&path).display()))?;
    let mut merged = args.clone();
    for (k, v) in parse_config(&text)? {
        if has_flag(&args, &k) {
            continue;
        }
        match v.as_str() {
            "true" => merged.push(format!("--{k}").into()),
            "false" => {}
            _ => merged.push(format!("--{k}={v}").into()),
        }
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("1.5").unwrap(), 1.5);
        assert_eq!(parse_angle("pi/2").unwrap(), PI / 2.0);
        assert_eq!(parse_angle("-5pi/6").unwrap(), -5.0 * PI / 6.0);
        assert_eq!(parse_angle("2*pi/3").unwrap(), 2.0 * PI / 3.0);
        assert_eq!(parse_angle("PI").unwrap(), PI);
        assert!(parse_angle("pi/0").is_err());
        assert!(parse_angle("90deg").is_err());
    }

    #[test]
    fn config_lines() {
        let c = parse_config("# run\ndelta = -2\nnu=5pi/6  # black\n\nverify = true\n").unwrap();
        assert_eq!(
            c,
            vec![("delta".into(), "-2".into()), ("nu".into(), "5pi/6".into()), ("verify".into(), "true".into())]
        );
        assert!(parse_config("delta -2").is_err());
    }

    #[test]
    fn command_line_wins() {
        let dir = std::env::temp_dir().join(format!("autores-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        std::fs::write(&path, "delta=-2\nkappa=1\nverify=false\n").unwrap();
        let args: Vec<OsString> =
            ["autores", "region", "--config", path.to_str().unwrap(), "--delta=-1"].iter().map(Into::into).collect();
        let merged = merge_config(args).unwrap();
        let tail: Vec<String> = merged[5..].iter().map(|s| s.to_string_lossy().into_owned()).collect();
        assert_eq!(tail, vec!["--kappa=1"]);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
