use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Global {
    pub seed: u64,
    pub workers: Option<usize>,
}

/// Overlays the keys of the JSON config file on the flag values. Unknown keys
/// are rejected so typos do not pass silently.
pub fn resolve<A>(args: A, global: Global, file: Option<&Path>) -> Result<(A, Global)>
where
    A: Serialize + DeserializeOwned,
{
    let Some(file) = file else { return Ok((args, global)) };
    let text = std::fs::read_to_string(file).with_context(|| format!("reading config {}", file.display()))?;
    let overrides: Map<String, Value> =
        serde_json::from_str(&text).with_context(|| format!("config {} must be a JSON object", file.display()))?;

    let Value::Object(mut merged) = serde_json::to_value(&args)? else { unreachable!("argument structs serialize to objects") };
    let Value::Object(mut globals) = serde_json::to_value(global)? else { unreachable!() };
    for (k, v) in overrides {
        if globals.contains_key(&k) {
            globals.insert(k, v);
        } else if merged.contains_key(&k) {
            merged.insert(k, v);
        } else {
            bail!("unknown config key `{k}`");
        }
    }
    Ok((
        serde_json::from_value(Value::Object(merged)).context("applying config")?,
        serde_json::from_value(Value::Object(globals)).context("applying config")?,
    ))
}

pub fn init_workers(workers: Option<usize>) -> Result<()> {
    if let Some(n) = workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("starting worker pool")?;
    }
    Ok(())
}

/// Writes `run_config.json` next to a command's outputs.
pub struct Recorder {
    doc: Value,
}

impl Recorder {
    pub fn new<A: Serialize>(command: &str, args: &A, global: &Global) -> Self {
        let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let doc = serde_json::json!({
            "command": command,
            "seed": global.seed,
            "workers": global.workers,
            "args": args,
            "metadata": { "started_unix": started, "version": env!("CARGO_PKG_VERSION") },
        });
        Self { doc }
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        let path = out_dir.join("run_config.json");
        let text = serde_json::to_string_pretty(&self.doc)? + "\n";
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}
