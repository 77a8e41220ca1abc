//! `key = value` config files merged into the argument list.
//!
//! Keys are long flag names without dashes. Values are inserted right after
//! the subcommand, so flags given on the command line override them.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context};
use clap::{ArgAction, Command};

const GLOBAL_WITH_VALUE: [&str; 2] = ["--config", "--jobs"];

pub fn parse(text: &str) -> anyhow::Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("line {}: expected key = value, got `{line}`", n + 1);
        };
        out.push((k.trim().trim_start_matches("--").to_owned(), v.trim().to_owned()));
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

fn subcommand_position(args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let s = args[i].to_string_lossy();
        if GLOBAL_WITH_VALUE.contains(&s.as_ref()) {
            i += 2;
            continue;
        }
        if !s.starts_with('-') {
            return Some(i);
        }
        i += 1;
    }
    None
}

fn flag_args(key: &str, value: &str, action: &ArgAction) -> anyhow::Result<Vec<OsString>> {
    if matches!(action, ArgAction::SetTrue) {
        return match value {
            "true" | "yes" | "1" => Ok(vec![format!("--{key}").into()]),
            "false" | "no" | "0" => Ok(vec![]),
            other => bail!("config key `{key}` expects true or false, got `{other}`"),
        };
    }
    Ok(vec![format!("--{key}={value}").into()])
}

/// The argument list with config entries spliced in.
pub fn merge(cmd: &Command, args: Vec<OsString>) -> anyhow::Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else { return Ok(args) };
    let text = std::fs::read_to_string(Path::new(&path))
        .with_context(|| format!("reading config file {}", Path::new(&path).display()))?;
    let entries = parse(&text)?;
    let Some(pos) = subcommand_position(&args) else { return Ok(args) };
    let sub_name = args[pos].to_string_lossy().into_owned();
    let Some(sub) = cmd.find_subcommand(&sub_name) else { return Ok(args) };

    let mut global = Vec::new();
    let mut local = Vec::new();
    for (key, value) in entries {
        if key == "config" {
            bail!("config files cannot include other config files");
        }
        if let Some(a) = cmd.get_arguments().find(|a| a.get_long() == Some(key.as_str())) {
            global.extend(flag_args(&key, &value, a.get_action())?);
        } else if let Some(a) = sub.get_arguments().find(|a| a.get_long() == Some(key.as_str())) {
            local.extend(flag_args(&key, &value, a.get_action())?);
        } else if !cmd
            .get_subcommands()
            .any(|s| s.get_arguments().any(|a| a.get_long() == Some(key.as_str())))
        {
            bail!("unknown config key `{key}`");
        }
    }
    let mut out = vec![args[0].clone()];
    out.extend(global);
    out.extend(args[1..=pos].iter().cloned());
    out.extend(local);
    out.extend(args[pos + 1..].iter().cloned());
    Ok(out)
}
