use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// What is needed to rerun a command and get the same bytes back.
#[derive(Debug, Default, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Vec<String>,
    /// Input name to `sha256:<hex>` of its bytes, or `generator:<spec>`.
    pub inputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tolerances: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(argv: &[String]) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: argv.to_vec(),
            ..Default::default()
        }
    }

    pub fn input_bytes(&mut self, name: &str, bytes: &[u8]) {
        self.inputs.insert(name.into(), format!("sha256:{}", hex::encode(Sha256::digest(bytes))));
    }

    pub fn input_generator(&mut self, name: &str, spec: &str) {
        self.inputs.insert(name.into(), format!("generator:{spec}"));
    }

    pub fn tol(&mut self, name: &str, v: f64) {
        self.tolerances.insert(name.into(), v);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    /// Next to the output file as `<out>.manifest.json`, or on stderr when
    /// the output went to stdout.
    pub fn emit(&self, out: Option<&Path>) -> std::io::Result<()> {
        match out {
            Some(p) => std::fs::write(sibling(p), self.to_json()),
            None => std::io::stderr().write_all(self.to_json().as_bytes()),
        }
    }
}

pub fn sibling(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}
