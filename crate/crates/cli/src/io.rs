use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use urt_core::scalar::format_significant;
use urt_core::{AffineModel, Mapping, Norm};

use crate::error::{CliError, CliResult};

pub const DIGITS: usize = 12;

pub fn num(x: f64) -> String {
    format_significant(x, DIGITS)
}

pub fn nums(xs: &[f64]) -> String {
    xs.iter().map(|&x| num(x)).collect::<Vec<_>>().join(",")
}

/// Input and output paths of one invocation, checked before any work starts.
#[derive(Default)]
pub struct Paths {
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Paths {
    pub fn input(mut self, p: &Path) -> Self {
        self.inputs.push(p.to_path_buf());
        self
    }

    pub fn input_opt(self, p: Option<&PathBuf>) -> Self {
        match p {
            Some(p) => self.input(p),
            None => self,
        }
    }

    pub fn output_opt(mut self, p: Option<&PathBuf>) -> Self {
        self.outputs.extend(p.cloned());
        self
    }

    pub fn validate(&self) -> CliResult<()> {
        for p in &self.inputs {
            if !p.is_file() {
                return Err(CliError::usage(format!("input file {} does not exist", p.display())));
            }
        }
        for p in &self.outputs {
            if p.is_dir() {
                return Err(CliError::usage(format!("output path {} is a directory", p.display())));
            }
            let parent = p.parent().filter(|d| !d.as_os_str().is_empty());
            if let Some(dir) = parent {
                if !dir.is_dir() {
                    return Err(CliError::usage(format!(
                        "output directory {} does not exist",
                        dir.display()
                    )));
                }
            }
        }
        for (i, a) in self.outputs.iter().enumerate() {
            if self.outputs[..i].contains(a) || self.inputs.contains(a) {
                return Err(CliError::usage(format!("path {} is used twice", a.display())));
            }
        }
        Ok(())
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn json_error(path: &Path, err: serde_path_to_error::Error<serde_json::Error>) -> CliError {
    let field = err.path().to_string();
    CliError::Json {
        path: path.to_path_buf(),
        field,
        message: err.into_inner().to_string(),
    }
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read(path)?;
    let mut de = serde_json::Deserializer::from_str(&text);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|e| json_error(path, e))?;
    de.end().map_err(|e| CliError::Json {
        path: path.to_path_buf(),
        field: ".".into(),
        message: e.to_string(),
    })?;
    Ok(value)
}

fn load_value(path: &Path) -> CliResult<serde_json::Value> {
    load_json(path)
}

/// An affine model object, or any mapping tagged with `"kind"`.
pub fn load_mapping(path: &Path) -> CliResult<Mapping> {
    let value = load_value(path)?;
    let tagged = value.get("kind").is_some();
    if tagged {
        serde_path_to_error::deserialize(value).map_err(|e| json_error(path, e))
    } else {
        let model: AffineModel = serde_path_to_error::deserialize(value).map_err(|e| json_error(path, e))?;
        Ok(Mapping::from(model))
    }
}

pub fn load_affine(path: &Path) -> CliResult<AffineModel> {
    match load_mapping(path)? {
        Mapping::Affine(m) => Ok(m),
        _ => Err(CliError::Domain(urt_core::Error::Unsupported(format!(
            "{}: this command needs an affine model",
            path.display()
        )))),
    }
}

pub fn load_norm(path: &Path) -> CliResult<Norm> {
    load_json(path)
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: Option<&PathBuf>, doc: &T) -> CliResult<()> {
    if let Some(path) = path {
        let mut text = serde_json::to_string_pretty(doc).expect("serializable document");
        text.push('\n');
        write_text(path, &text)?;
    }
    Ok(())
}

/// `key=value` lines on standard output.
pub struct Summary(Vec<(String, String)>);

impl Summary {
    pub fn new() -> Self {
        Summary(Vec::new())
    }

    pub fn put(mut self, key: &str, value: impl ToString) -> Self {
        self.0.push((key.to_string(), value.to_string()));
        self
    }

    pub fn num(self, key: &str, x: f64) -> Self {
        self.put(key, num(x))
    }

    pub fn nums(self, key: &str, xs: &[f64]) -> Self {
        self.put(key, nums(xs))
    }

    pub fn print(&self) -> CliResult<()> {
        let stdout = std::io::stdout();
        let mut lock = stdout.lock();
        for (k, v) in &self.0 {
            writeln!(lock, "{k}={v}").map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            })?;
        }
        Ok(())
    }
}
