use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use ame_core::C64;
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

#[derive(Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// What every command prints. Field names are part of the interface.
#[derive(Serialize)]
pub struct CommandReport {
    pub command: Vec<String>,
    pub inputs: Vec<InputDigest>,
    pub results: Map<String, Value>,
    pub tolerances: Map<String, Value>,
    pub verdicts: Map<String, Value>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub wall_time_s: f64,
    #[serde(skip)]
    started: Option<Instant>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Error => 2,
        }
    }
}

impl CommandReport {
    pub fn new(argv: &[String]) -> Self {
        Self {
            command: argv.to_vec(),
            inputs: Vec::new(),
            results: Map::new(),
            tolerances: Map::new(),
            verdicts: Map::new(),
            status: Status::Pass,
            error: None,
            wall_time_s: 0.0,
            started: Some(Instant::now()),
        }
    }

    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        let digest = Sha256::digest(bytes);
        self.inputs.push(InputDigest { path: path.display().to_string(), sha256: hex::encode(digest) });
    }

    pub fn result(&mut self, key: &str, value: impl Into<Value>) {
        self.results.insert(key.to_string(), value.into());
    }

    pub fn tol(&mut self, key: &str, value: f64) {
        self.tolerances.insert(key.to_string(), json!(value));
    }

    /// A failed verdict turns the whole report into a failure.
    pub fn verdict(&mut self, key: &str, ok: bool) {
        self.verdicts.insert(key.to_string(), json!(ok));
        if !ok && self.status == Status::Pass {
            self.status = Status::Fail;
        }
    }

    pub fn fail_with(&mut self, message: String) {
        self.error = Some(message);
        if self.status == Status::Pass {
            self.status = Status::Fail;
        }
    }

    pub fn input_error(&mut self, message: String) {
        self.error = Some(message);
        self.status = Status::Error;
    }

    pub fn finish(&mut self) {
        if let Some(t) = self.started.take() {
            self.wall_time_s = t.elapsed().as_secs_f64();
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command: {}", self.command.join(" "));
        for i in &self.inputs {
            let _ = writeln!(out, "input: {} sha256={}", i.path, i.sha256);
        }
        for (section, map) in [("result", &self.results), ("tol", &self.tolerances), ("verdict", &self.verdicts)] {
            for (k, v) in map {
                let _ = writeln!(out, "{section}.{k}: {}", text_value(v));
            }
        }
        if let Some(e) = &self.error {
            let _ = writeln!(out, "error: {e}");
        }
        let _ = writeln!(out, "status: {}", serde_json::to_value(self.status).unwrap().as_str().unwrap());
        let _ = writeln!(out, "wall_time_s: {:.3}", self.wall_time_s);
        out
    }
}

fn text_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(items) if items.iter().any(|x| x.is_array()) => {
            let rows: Vec<String> = items.iter().map(|r| format!("\n    {}", compact(r))).collect();
            rows.concat()
        }
        other => compact(other),
    }
}

fn compact(v: &Value) -> String {
    serde_json::to_string(v).expect("value serializes")
}

pub fn complex(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn matrix(m: &DMatrix<C64>) -> Value {
    Value::Array((0..m.nrows()).map(|r| Value::Array((0..m.ncols()).map(|c| complex(m[(r, c)])).collect())).collect())
}
