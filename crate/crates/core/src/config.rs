//! Plain-text `key = value` configuration files.
//!
//! ```text
//! # comment
//! [model]
//! K_c = 2.75
//! tau = 0.01
//! use_piecewise_fsca = false
//!
//! [solver]
//! rel_tol = 1e-9
//! ```
//!
//! Keys before the first section header belong to the `model` section.
//! Model keys are the `ModelParams` field names: `k_vn`, `k_vcy`, `k_nt`,
//! `K_c`, `tau`, `A_cyto`, `A_n`, `m`, `m_sca`, `sigma`,
//! `use_piecewise_fsca`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::integrate::SolverConfig;
use crate::model::ModelParams;

pub const MODEL_KEYS: [&str; 11] = [
    "k_vn",
    "k_vcy",
    "k_nt",
    "K_c",
    "tau",
    "A_cyto",
    "A_n",
    "m",
    "m_sca",
    "sigma",
    "use_piecewise_fsca",
];

pub const SOLVER_KEYS: [&str; 6] = ["rel_tol", "abs_tol", "dt", "t_end", "max_steps", "stride"];

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub section: String,
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// Parsed file: entries in file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KvFile {
    pub name: String,
    pub entries: Vec<Entry>,
}

impl KvFile {
    pub fn section(&self, name: &str) -> impl Iterator<Item = &Entry> {
        let name = name.to_string();
        self.entries.iter().filter(move |e| e.section == name)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.section == section && e.key == key)
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            file: self.name.clone(),
            line,
            msg: msg.into(),
        }
    }

    /// Value parsed as `f64`, with a line-numbered error.
    pub fn f64(&self, e: &Entry) -> Result<f64> {
        e.value
            .parse::<f64>()
            .map_err(|_| self.err(e.line, format!("`{}`: expected a number, got `{}`", e.key, e.value)))
    }

    pub fn usize(&self, e: &Entry) -> Result<usize> {
        e.value
            .parse::<usize>()
            .map_err(|_| self.err(e.line, format!("`{}`: expected a non-negative integer, got `{}`", e.key, e.value)))
    }

    pub fn bool(&self, e: &Entry) -> Result<bool> {
        match e.value.as_str() {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            v => Err(self.err(e.line, format!("`{}`: expected true/false, got `{v}`", e.key))),
        }
    }

    /// Fails on keys of `section` outside `allowed`.
    pub fn check_keys(&self, section: &str, allowed: &[&str]) -> Result<()> {
        for e in self.section(section) {
            if !allowed.contains(&e.key.as_str()) {
                return Err(self.err(e.line, format!("unknown key `{}` in [{}]", e.key, section)));
            }
        }
        Ok(())
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn valid_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
}

pub fn parse_kv(text: &str, name: &str) -> Result<KvFile> {
    let mut file = KvFile {
        name: name.to_string(),
        entries: Vec::new(),
    };
    let mut section = String::from("model");
    let mut seen: BTreeMap<(String, String), usize> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let Some(inner) = rest.strip_suffix(']') else {
                return Err(file.err(line_no, "unterminated section header"));
            };
            let inner = inner.trim();
            if !valid_ident(inner) {
                return Err(file.err(line_no, format!("invalid section name `{inner}`")));
            }
            section = inner.to_string();
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(file.err(line_no, format!("expected `key = value`, got `{line}`")));
        };
        let key = k.trim();
        if !valid_ident(key) {
            return Err(file.err(line_no, format!("invalid key `{key}`")));
        }
        let mut value = v.trim();
        if value.len() >= 2 && value.starts_with('"') && value.ends_with('"') {
            value = &value[1..value.len() - 1];
        }
        if value.is_empty() {
            return Err(file.err(line_no, format!("missing value for `{key}`")));
        }
        if let Some(prev) = seen.insert((section.clone(), key.to_string()), line_no) {
            return Err(file.err(line_no, format!("duplicate key `{key}` (first set on line {prev})")));
        }
        file.entries.push(Entry {
            section: section.clone(),
            key: key.to_string(),
            value: value.to_string(),
            line: line_no,
        });
    }
    Ok(file)
}

/// Overwrite fields of `p` from one `key = value` pair.
pub fn set_model_key(p: &mut ModelParams, key: &str, value: &str) -> std::result::Result<(), String> {
    let num = || value.parse::<f64>().map_err(|_| format!("`{key}`: expected a number, got `{value}`"));
    match key {
        "k_vn" => p.k_vn = num()?,
        "k_vcy" => p.k_vcy = num()?,
        "k_nt" => p.k_nt = num()?,
        "K_c" => p.k_c = num()?,
        "tau" => p.tau = num()?,
        "A_cyto" => p.a_cyto = num()?,
        "A_n" => p.a_n = num()?,
        "m" => p.m = num()?,
        "m_sca" => p.m_sca = num()?,
        "sigma" => p.sigma = num()?,
        "use_piecewise_fsca" => {
            p.use_piecewise_fsca = match value {
                "true" | "1" | "yes" => true,
                "false" | "0" | "no" => false,
                _ => return Err(format!("`{key}`: expected true/false, got `{value}`")),
            }
        }
        _ => return Err(format!("unknown model key `{key}`")),
    }
    Ok(())
}

impl ModelParams {
    /// Defaults overridden by the `[model]` section, then validated.
    pub fn from_kv(file: &KvFile) -> Result<Self> {
        Self::from_kv_over(file, ModelParams::default())
    }

    pub fn from_kv_over(file: &KvFile, base: ModelParams) -> Result<Self> {
        let mut p = base;
        p.apply_kv(file)?;
        p.validate().map_err(|err| Error::Parse {
            file: file.name.clone(),
            line: 0,
            msg: err.to_string(),
        })?;
        Ok(p)
    }

    /// Overwrite fields from the `[model]` section, without validation.
    pub fn apply_kv(&mut self, file: &KvFile) -> Result<()> {
        for e in file.section("model") {
            set_model_key(self, &e.key, &e.value).map_err(|msg| file.err(e.line, msg))?;
        }
        Ok(())
    }

    pub fn parse_config(text: &str, name: &str) -> Result<Self> {
        Self::from_kv(&parse_kv(text, name)?)
    }

    /// `[model]` section with every field, in round-trip decimal form.
    pub fn to_config_string(&self) -> String {
        let mut s = String::from("[model]\n");
        let fields: [(&str, f64); 10] = [
            ("k_vn", self.k_vn),
            ("k_vcy", self.k_vcy),
            ("k_nt", self.k_nt),
            ("K_c", self.k_c),
            ("tau", self.tau),
            ("A_cyto", self.a_cyto),
            ("A_n", self.a_n),
            ("m", self.m),
            ("m_sca", self.m_sca),
            ("sigma", self.sigma),
        ];
        for (k, v) in fields {
            let _ = writeln!(s, "{k} = {v:?}");
        }
        let _ = writeln!(s, "use_piecewise_fsca = {}", self.use_piecewise_fsca);
        s
    }
}

impl SolverConfig {
    pub fn from_kv(file: &KvFile) -> Result<Self> {
        let mut cfg = SolverConfig::default();
        cfg.apply_kv(file)?;
        Ok(cfg)
    }

    /// Overwrite fields from the `[solver]` section.
    pub fn apply_kv(&mut self, file: &KvFile) -> Result<()> {
        file.check_keys("solver", &SOLVER_KEYS)?;
        for e in file.section("solver") {
            match e.key.as_str() {
                "rel_tol" => self.rel_tol = file.f64(e)?,
                "abs_tol" => self.abs_tol = file.f64(e)?,
                "dt" => self.dt = file.f64(e)?,
                "t_end" => self.t_end = file.f64(e)?,
                "max_steps" => self.max_steps = file.usize(e)?,
                "stride" => self.stride = file.usize(e)?,
                _ => unreachable!(),
            }
        }
        Ok(())
    }

    /// `[solver]` section with every file-settable field.
    pub fn to_config_string(&self) -> String {
        format!(
            "[solver]\nrel_tol = {:?}\nabs_tol = {:?}\ndt = {:?}\nt_end = {:?}\nmax_steps = {}\nstride = {}\n",
            self.rel_tol, self.abs_tol, self.dt, self.t_end, self.max_steps, self.stride
        )
    }
}
