use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use stieltjes_core::{Error, SolutionTrace};

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError {
            code: EXIT_SOLVER,
            message: format!("{}: {e}", path.display()),
        }
    }

    pub fn context(self, what: &str) -> Self {
        CliError {
            code: self.code,
            message: format!("{what}: {}", self.message),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError {
            code: if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_SOLVER
            },
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Writes to `path`, or to stdout without one.
pub fn emit(text: &str, path: Option<&Path>) -> CliResult<()> {
    match path {
        Some(p) => write_file(p, text.as_bytes()),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Columns `t, post_jump, x_1..x_n`; a grid point where some derivator jumps
/// gets a second row with `post_jump = 1` holding `x(t+)`.
pub fn trace_csv(trace: &SolutionTrace) -> CliResult<Vec<u8>> {
    let n = trace.values.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string(), "post_jump".to_string()];
    header.extend((1..=n).map(|i| format!("x_{i}")));
    let csv_err = |e: csv::Error| CliError {
        code: EXIT_SOLVER,
        message: format!("writing CSV: {e}"),
    };
    w.write_record(&header).map_err(csv_err)?;
    let row = |t: f64, post: bool, x: &[f64]| {
        let mut r = vec![format!("{t:.16e}"), if post { "1" } else { "0" }.to_string()];
        r.extend(x.iter().map(|v| format!("{v:.16e}")));
        r
    };
    for (k, &t) in trace.grid.iter().enumerate() {
        w.write_record(row(t, false, &trace.values[k])).map_err(csv_err)?;
        if let Some(post) = &trace.post_jump[k] {
            w.write_record(row(t, true, post)).map_err(csv_err)?;
        }
    }
    w.into_inner().map_err(|e| CliError {
        code: EXIT_SOLVER,
        message: format!("writing CSV: {e}"),
    })
}
