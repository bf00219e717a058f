//! Provenance block written with every output.

use augfid_core::rng::RNG_ALGORITHM;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunManifest {
    pub command_line: String,
    pub seed: u64,
    pub rng_algorithm: String,
    pub tool_version: String,
    pub timestamp: String,
    pub input_digests: Vec<InputDigest>,
}

/// Flags that change scheduling or destination but not results.
const UNRECORDED_FLAGS: [&str; 2] = ["--workers", "--out"];

impl RunManifest {
    /// `args` excludes the program name. The timestamp comes from
    /// `SOURCE_DATE_EPOCH` so that repeated runs stay byte-identical.
    pub fn new(args: &[String], seed: u64) -> Self {
        let timestamp = match std::env::var("SOURCE_DATE_EPOCH") {
            Ok(s) if !s.trim().is_empty() => format!("unix:{}", s.trim()),
            _ => "unrecorded".to_string(),
        };
        Self {
            command_line: recorded_command_line(args),
            seed,
            rng_algorithm: RNG_ALGORITHM.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp,
            input_digests: Vec::new(),
        }
    }

    pub fn add_input(&mut self, path: &str, contents: &[u8]) {
        self.input_digests.push(InputDigest { path: path.to_string(), sha256: sha256_hex(contents) });
    }

    pub fn header_lines(&self) -> Vec<(String, String)> {
        let mut v = vec![
            ("command".to_string(), self.command_line.clone()),
            ("seed".to_string(), self.seed.to_string()),
            ("rng_algorithm".to_string(), self.rng_algorithm.clone()),
            ("tool_version".to_string(), self.tool_version.clone()),
            ("timestamp".to_string(), self.timestamp.clone()),
        ];
        for d in &self.input_digests {
            v.push(("input".to_string(), format!("{} sha256:{}", d.path, d.sha256)));
        }
        v
    }
}

fn recorded_command_line(args: &[String]) -> String {
    let mut out = vec!["augfid".to_string()];
    let mut skip_next = false;
    for a in args {
        if skip_next {
            skip_next = false;
            continue;
        }
        if UNRECORDED_FLAGS.contains(&a.as_str()) {
            skip_next = true;
            continue;
        }
        if UNRECORDED_FLAGS.iter().any(|f| a.starts_with(&format!("{f}="))) {
            continue;
        }
        if a.is_empty() || a.contains(char::is_whitespace) {
            out.push(format!("'{a}'"));
        } else {
            out.push(a.clone());
        }
    }
    out.join(" ")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        s.split(' ').map(String::from).collect()
    }

    #[test]
    fn scheduling_flags_are_not_recorded() {
        let a = RunManifest::new(&args("envelope --workers 8 --chi00 0.985 --out a.csv"), 1);
        let b = RunManifest::new(&args("envelope --chi00 0.985 --workers=2 --out=b.csv"), 1);
        assert_eq!(a.command_line, "augfid envelope --chi00 0.985");
        assert_eq!(a, b);
    }

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
