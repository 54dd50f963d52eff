//! `key = value` config files spliced into the command line.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Command};

/// Expands `--config FILE` into the flags it lists, placed right after the
/// subcommand so that explicit flags (which come later) win.
pub fn expand(args: Vec<OsString>, cmd: &Command) -> Result<Vec<OsString>> {
    let Some(pos) = args.iter().position(|a| a == "--config") else {
        return Ok(args);
    };
    let path = args
        .get(pos + 1)
        .context("--config needs a file path")?
        .clone();
    let mut rest: Vec<OsString> = args[..pos].to_vec();
    rest.extend_from_slice(&args[pos + 2..]);

    let sub_pos = rest
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, a)| cmd.find_subcommand(a).is_some())
        .map(|(i, _)| i)
        .context("--config requires a subcommand")?;
    let sub = cmd.find_subcommand(&rest[sub_pos]).unwrap();
    let injected = flags_from_file(Path::new(&path), sub)?;
    let mut out = rest[..=sub_pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&rest[sub_pos + 1..]);
    Ok(out)
}

fn flags_from_file(path: &Path, sub: &Command) -> Result<Vec<OsString>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    let pairs = tailbound::bench::parse_key_values(&text)?;
    let mut out = Vec::new();
    for (key, value) in pairs {
        let key = key.trim_start_matches("--").replace('_', "-");
        let Some(arg) = sub.get_arguments().find(|a| a.get_long() == Some(key.as_str())) else {
            bail!("config key {key:?} is not an option of `{}`", sub.get_name());
        };
        match arg.get_action() {
            ArgAction::SetTrue => match value.as_str() {
                "true" | "1" | "yes" => out.push(format!("--{key}").into()),
                "false" | "0" | "no" => {}
                other => bail!("config key {key:?} expects true or false, got {other:?}"),
            },
            _ => {
                out.push(format!("--{key}").into());
                out.push(value.into());
            }
        }
    }
    Ok(out)
}
