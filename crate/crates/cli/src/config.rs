//! Flat `key = value` config files, spliced into the argument list so that
//! flags given on the command line win.

use std::fs;
use std::path::Path;

use htf_core::{Error, Result};

/// Converts config text into `--key value` arguments. `key = true` becomes a
/// bare `--key` and `key = false` is dropped, so booleans map onto switches.
pub fn config_args(text: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "config line {}: expected key=value",
                idx + 1
            )));
        };
        let key = key.trim().trim_start_matches("--");
        let value = value.trim();
        if key.is_empty() {
            return Err(Error::Config(format!("config line {}: empty key", idx + 1)));
        }
        match value {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            v => {
                out.push(format!("--{key}"));
                out.push(v.to_owned());
            }
        }
    }
    Ok(out)
}

/// Replaces `--config FILE` (or `--config=FILE`) with the file's settings,
/// placed right after the subcommand name so later flags override them.
pub fn expand_config(args: Vec<String>) -> Result<Vec<String>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut file = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            let path = it
                .next()
                .ok_or_else(|| Error::Config("--config needs a file".into()))?;
            file = Some(path);
        } else if let Some(path) = a.strip_prefix("--config=") {
            file = Some(path.to_owned());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = file else {
        return Ok(rest);
    };
    let text = fs::read_to_string(Path::new(&path))?;
    let extra = config_args(&text)?;
    // program name, then the first non-flag token is the subcommand
    let at = rest
        .iter()
        .skip(1)
        .position(|a| !a.starts_with('-'))
        .map_or(rest.len(), |i| i + 2);
    rest.splice(at..at, extra);
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_values_become_flags() {
        let args = config_args(
            "# run\neps-tot = 0.1\nsmooth=true\nnoiseless = false\n\nmethod=htf # inline\n",
        )
        .unwrap();
        assert_eq!(args, ["--eps-tot", "0.1", "--smooth", "--method", "htf"]);
        assert!(config_args("just words\n").is_err());
    }

    #[test]
    fn config_goes_after_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.cfg");
        fs::write(&p, "eps-tot=0.3\n").unwrap();
        let args: Vec<String> = [
            "htf",
            "release",
            "--config",
            p.to_str().unwrap(),
            "--eps-tot",
            "0.5",
        ]
        .map(String::from)
        .to_vec();
        let out = expand_config(args).unwrap();
        assert_eq!(
            out,
            ["htf", "release", "--eps-tot", "0.3", "--eps-tot", "0.5"]
        );
    }
}
