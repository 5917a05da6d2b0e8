//! CSV with a config echo block, and JSON summaries.

use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

use crate::config::ExperimentConfig;

/// `# insider <command>` and the resolved config as `# `-prefixed TOML,
/// followed by the CSV table.
pub fn render_csv(
    command: &str,
    config: &ExperimentConfig,
    header: &[&str],
    rows: &[Vec<String>],
) -> anyhow::Result<String> {
    let mut out = format!("# insider {command}\n");
    for line in config.to_toml().lines() {
        if line.is_empty() {
            out.push_str("#\n");
        } else {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    out.push_str(std::str::from_utf8(&writer.into_inner()?)?);
    Ok(out)
}

pub fn emit_csv(text: &str, dest: Option<&Path>) -> anyhow::Result<()> {
    match dest {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

pub fn emit_json<T: Serialize>(value: &T, dest: Option<&Path>) -> anyhow::Result<()> {
    if let Some(path) = dest {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

pub fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}
