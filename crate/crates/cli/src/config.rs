//! `--config` files: every `key = value` line becomes the matching flag,
//! inserted right after the subcommand. Keys whose flag also appears on the
//! command line are skipped, so explicit flags win.

use std::collections::HashSet;
use std::path::Path;

use clap::{ArgAction, CommandFactory};
use selex_core::io::{parse_key_values, read_text};

use crate::args::Cli;
use crate::CliError;

pub fn expand(argv: &[String]) -> Result<Vec<String>, CliError> {
    let Some(path) = config_path(argv) else {
        return Ok(argv.to_vec());
    };
    // Without a recognizable subcommand clap reports the problem itself.
    let root = Cli::command();
    let Some(sub) = argv.get(1).and_then(|name| root.find_subcommand(name)) else {
        return Ok(argv.to_vec());
    };

    let path = Path::new(&path);
    let pairs = parse_key_values(&read_text(path)?).map_err(|e| e.in_file(path))?;

    let mut explicit = HashSet::new();
    for tok in &argv[2..] {
        if let Some(long) = tok.strip_prefix("--") {
            explicit.insert(long.split('=').next().unwrap_or(long).to_string());
        } else if let Some(short) = tok.strip_prefix('-').and_then(|s| s.chars().next()) {
            if let Some(a) = sub.get_arguments().find(|a| a.get_short() == Some(short)) {
                if let Some(l) = a.get_long() {
                    explicit.insert(l.to_string());
                }
            }
        }
    }

    let mut injected = Vec::new();
    for (key, value) in pairs {
        let long = key.replace('_', "-");
        if long == "config" {
            return Err(CliError::Usage(format!(
                "{}: config files cannot include other config files",
                path.display()
            )));
        }
        let Some(arg) = sub.get_arguments().find(|a| a.get_long() == Some(long.as_str())) else {
            return Err(CliError::Usage(format!(
                "{}: unknown key '{key}' for '{}'",
                path.display(),
                sub.get_name()
            )));
        };
        if explicit.contains(&long) {
            continue;
        }
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match value.as_str() {
                "true" | "yes" | "1" => injected.push(format!("--{long}")),
                "false" | "no" | "0" => {}
                _ => {
                    return Err(CliError::Usage(format!(
                        "{}: key '{key}' expects true or false, found '{value}'",
                        path.display()
                    )))
                }
            }
        } else {
            injected.push(format!("--{long}={value}"));
        }
    }

    let mut out = argv[..2].to_vec();
    out.extend(injected);
    out.extend_from_slice(&argv[2..]);
    Ok(out)
}

fn config_path(argv: &[String]) -> Option<String> {
    let mut it = argv.iter().skip(1);
    while let Some(tok) = it.next() {
        if tok == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = tok.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}
