//! Layered run configuration: typed flags over `--set` pairs over the
//! config file over built-in defaults.
//!
//! A config file is either a `key = value` file or a `metadata.json` written
//! by an earlier run, whose `config` field holds the resolved file.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use phosdyn::config::{parse_kv, Entry, KvFile};
use phosdyn::integrate::SolverConfig;
use phosdyn::{Error, ModelParams, Param};

/// Sections a config file may contain besides the subcommand ones.
const COMMON_SECTIONS: [&str; 3] = ["model", "solver", "run"];
pub const COMMANDS: [&str; 7] = ["simulate", "nullclines", "diagram", "regime-grid", "sr", "periods", "calibrate"];

pub struct Sources {
    file: KvFile,
    overlay: KvFile,
}

fn config_text(path: &Path) -> Result<String> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    if !text.trim_start().starts_with('{') {
        return Ok(text);
    }
    let v: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("{}: not valid metadata JSON", path.display()))?;
    match v.get("config") {
        Some(serde_json::Value::String(s)) => Ok(s.clone()),
        _ => bail!("{}: metadata JSON has no `config` string", path.display()),
    }
}

impl Sources {
    /// `sets` are `section.key=value` or `key=value` (model section).
    pub fn load(config: Option<&Path>, sets: &[String]) -> Result<Self> {
        let file = match config {
            Some(path) => parse_kv(&config_text(path)?, &path.display().to_string())?,
            None => KvFile::default(),
        };
        let mut overlay = KvFile { name: "--set".into(), entries: Vec::new() };
        for (i, s) in sets.iter().enumerate() {
            let Some((k, v)) = s.split_once('=') else {
                bail!("--set `{s}`: expected key=value");
            };
            let (section, key) = k.trim().split_once('.').unwrap_or(("model", k.trim()));
            let value = v.trim();
            if key.is_empty() || value.is_empty() {
                bail!("--set `{s}`: empty key or value");
            }
            overlay.entries.retain(|e| !(e.section == section && e.key == key));
            overlay.entries.push(Entry { section: section.into(), key: key.into(), value: value.into(), line: i + 1 });
        }
        for f in [&file, &overlay] {
            for e in &f.entries {
                if !COMMON_SECTIONS.contains(&e.section.as_str()) && !COMMANDS.contains(&e.section.as_str()) {
                    return Err(Error::Parse { file: f.name.clone(), line: e.line, msg: format!("unknown section [{}]", e.section) }.into());
                }
            }
        }
        Ok(Self { file, overlay })
    }

    pub fn model(&self) -> Result<ModelParams> {
        let mut p = ModelParams::default();
        p.apply_kv(&self.file)?;
        p.apply_kv(&self.overlay)?;
        if let Err(e) = p.validate() {
            return Err(match self.locate("model", &e) {
                Some((f, line)) => Error::Parse { file: f.to_string(), line, msg: e.to_string() }.into(),
                None => e.into(),
            });
        }
        Ok(p)
    }

    /// Last source that set the offending key of a domain error.
    fn locate(&self, section: &str, e: &Error) -> Option<(&str, usize)> {
        let Error::Domain { name, .. } = e else { return None };
        [&self.overlay, &self.file]
            .into_iter()
            .find_map(|f| f.get(section, name).map(|en| (f.name.as_str(), en.line)))
    }

    pub fn solver(&self) -> Result<SolverConfig> {
        let mut s = SolverConfig::default();
        s.apply_kv(&self.file)?;
        s.apply_kv(&self.overlay)?;
        Ok(s)
    }

    /// Fails on keys of `section` outside `allowed`, before anything runs.
    pub fn check_keys(&self, section: &str, allowed: &[&str]) -> Result<()> {
        for f in [&self.file, &self.overlay] {
            f.check_keys(section, allowed)?;
        }
        Ok(())
    }

    pub fn section(&self, name: &'static str) -> Section<'_> {
        Section { src: self, name, resolved: Vec::new() }
    }
}

/// Values as written back into the resolved config.
pub trait Show {
    fn show(&self) -> String;
}

macro_rules! show_display {
    ($($t:ty),*) => {$(impl Show for $t { fn show(&self) -> String { self.to_string() } })*};
}
show_display!(usize, u64, bool, String, Param);

impl Show for f64 {
    fn show(&self) -> String {
        format!("{self:?}")
    }
}

/// Resolves the keys of one section and records what it resolved.
pub struct Section<'a> {
    src: &'a Sources,
    name: &'static str,
    resolved: Vec<(String, String)>,
}

impl Section<'_> {
    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + Show,
        T::Err: std::fmt::Display,
    {
        let v = match flag {
            Some(v) => v,
            None => match [&self.src.overlay, &self.src.file]
                .into_iter()
                .find_map(|f| f.get(self.name, key).map(|e| (f, e)))
            {
                Some((f, e)) => e.value.parse::<T>().map_err(|err| Error::Parse {
                    file: f.name.clone(),
                    line: e.line,
                    msg: format!("`{key}`: {err}"),
                })?,
                None => default,
            },
        };
        self.resolved.push((key.to_string(), v.show()));
        Ok(v)
    }

    /// Fails on keys of this section nobody asked for.
    pub fn finish(self) -> Result<Vec<(String, String)>> {
        for f in [&self.src.file, &self.src.overlay] {
            for e in f.section(self.name) {
                if !self.resolved.iter().any(|(k, _)| *k == e.key) {
                    return Err(Error::Parse {
                        file: f.name.clone(),
                        line: e.line,
                        msg: format!("unknown key `{}` in [{}]", e.key, self.name),
                    }
                    .into());
                }
            }
        }
        Ok(self.resolved)
    }
}

/// Resolved configuration of one run, in config-file form.
pub fn resolved_text(command: &str, model: &ModelParams, solver: &SolverConfig, sections: &[(&str, Vec<(String, String)>)]) -> String {
    let mut s = format!("# resolved configuration of `phosdyn {command}`\n");
    s.push_str(&model.to_config_string());
    s.push_str(&solver.to_config_string());
    for (name, kv) in sections {
        let _ = writeln!(s, "[{name}]");
        for (k, v) in kv {
            let _ = writeln!(s, "{k} = {v}");
        }
    }
    s
}

/// `lo,hi`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval(pub f64, pub f64);

impl FromStr for Interval {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let v = numbers(s)?;
        match v.as_slice() {
            [a, b] if a < b => Ok(Interval(*a, *b)),
            [_, _] => Err(format!("`{s}`: interval needs lo < hi")),
            _ => Err(format!("`{s}`: expected `lo,hi`")),
        }
    }
}

impl Show for Interval {
    fn show(&self) -> String {
        format!("{:?},{:?}", self.0, self.1)
    }
}

fn numbers(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|x| {
            let x = x.trim();
            x.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("not a finite number: `{x}`"))
        })
        .collect()
}

/// Comma-separated numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct Numbers(pub Vec<f64>);

impl FromStr for Numbers {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        numbers(s).map(Numbers)
    }
}

impl Show for Numbers {
    fn show(&self) -> String {
        self.0.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",")
    }
}

/// Parameter values: `a,b,c`, `lin:lo:hi:n` or `log:lo:hi:n`.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    List(Vec<f64>),
    Lin(f64, f64, usize),
    Log(f64, f64, usize),
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        let spread = |lo: f64, hi: f64, n: usize, f: &dyn Fn(f64) -> f64| -> Vec<f64> {
            if n == 1 {
                return vec![lo];
            }
            (0..n).map(|i| f(lo + (hi - lo) * i as f64 / (n - 1) as f64)).collect()
        };
        match self {
            Grid::List(v) => v.clone(),
            Grid::Lin(lo, hi, n) => spread(*lo, *hi, *n, &|x| x),
            Grid::Log(lo, hi, n) => spread(lo.log10(), hi.log10(), *n, &|x| 10f64.powf(x)),
        }
    }
}

impl FromStr for Grid {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let Some((kind, rest)) = s.split_once(':') else {
            let v = numbers(s)?;
            return Ok(Grid::List(v));
        };
        let parts: Vec<&str> = rest.split(':').collect();
        let [lo, hi, n] = parts.as_slice() else {
            return Err(format!("`{s}`: expected `{kind}:lo:hi:n`"));
        };
        let num = |x: &str| numbers(x).map(|v| v[0]);
        let (lo, hi) = (num(lo)?, num(hi)?);
        let n: usize = n.trim().parse().map_err(|_| format!("`{s}`: bad point count"))?;
        if n == 0 || n > 1_000_000 {
            return Err(format!("`{s}`: point count must be in 1..=1000000"));
        }
        match kind {
            "lin" => Ok(Grid::Lin(lo, hi, n)),
            "log" if lo > 0.0 && hi > 0.0 => Ok(Grid::Log(lo, hi, n)),
            "log" => Err(format!("`{s}`: log grid needs positive ends")),
            _ => Err(format!("`{s}`: unknown grid kind `{kind}`")),
        }
    }
}

impl Show for Grid {
    fn show(&self) -> String {
        match self {
            Grid::List(v) => Numbers(v.clone()).show(),
            Grid::Lin(a, b, n) => format!("lin:{a:?}:{b:?}:{n}"),
            Grid::Log(a, b, n) => format!("log:{a:?}:{b:?}:{n}"),
        }
    }
}

/// `auto` or an explicit state.
#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    Auto,
    At(Vec<f64>),
}

impl FromStr for Start {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.trim() == "auto" {
            Ok(Start::Auto)
        } else {
            numbers(s).map(Start::At)
        }
    }
}

impl Show for Start {
    fn show(&self) -> String {
        match self {
            Start::Auto => "auto".into(),
            Start::At(v) => Numbers(v.clone()).show(),
        }
    }
}

/// Keyword-valued options.
#[macro_export]
macro_rules! keyword {
    ($name:ident { $($var:ident => $s:literal),* $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq)]
        pub enum $name { $($var),* }

        impl std::str::FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s.trim() {
                    $($s => Ok($name::$var),)*
                    _ => Err(format!("`{s}`: expected one of {}", [$($s),*].join(", "))),
                }
            }
        }

        impl $crate::settings::Show for $name {
            fn show(&self) -> String {
                match self { $($name::$var => $s.to_string()),* }
            }
        }
    };
}

pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(anyhow!(msg()))
    }
}
