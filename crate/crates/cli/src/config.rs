//! `--config` files: UTF-8 lines `key = value`, `#` comments. Each key
//! becomes `--key value` unless that flag is already on the command line;
//! `true` and `false` switch flags without values.

use std::collections::HashSet;

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected 'key = value'", i + 1))?;
        let (k, v) = (k.trim(), v.trim().trim_matches('"'));
        if k.is_empty() {
            return Err(format!("line {}: empty key", i + 1));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

/// Appends config entries as flags after the existing arguments.
pub fn merge_config(argv: Vec<String>) -> Result<Vec<String>, String> {
    let path = argv.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            argv.get(i + 1).cloned()
        } else {
            a.strip_prefix("--config=").map(str::to_string)
        }
    });
    let Some(path) = path else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{path}: {e}"))?;
    let given: HashSet<String> = argv
        .iter()
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();
    let mut argv = argv;
    for (k, v) in parse_config(&text)? {
        if given.contains(&k) {
            continue;
        }
        match v.as_str() {
            "true" => argv.push(format!("--{k}")),
            "false" => {}
            _ => {
                argv.push(format!("--{k}"));
                argv.push(v);
            }
        }
    }
    Ok(argv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lines() {
        let c = parse_config("# run\nmatrix = \"2,1;1,1\"\nn=3 # period\n\n").unwrap();
        assert_eq!(c, vec![("matrix".into(), "2,1;1,1".into()), ("n".into(), "3".into())]);
        assert!(parse_config("oops").is_err());
    }
}
