use serde::Serialize;
use std::io;
use std::path::PathBuf;

/// Writes CSV and JSON artifacts into one directory.
pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn new(dir: PathBuf) -> Output {
        Output { dir }
    }

    fn prepare(&self, name: &str) -> io::Result<PathBuf> {
        std::fs::create_dir_all(&self.dir)?;
        Ok(self.dir.join(name))
    }

    pub fn csv<I>(&self, name: &str, header: &[&str], rows: I) -> io::Result<()>
    where
        I: IntoIterator<Item = Vec<f64>>,
    {
        let mut w = csv::Writer::from_path(self.prepare(name)?)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row.iter().map(|v| format!("{v:e}")))?;
        }
        w.flush()
    }

    /// Write `value` to `name` and echo it on stdout.
    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> io::Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
        std::fs::write(self.prepare(name)?, format!("{text}\n"))?;
        println!("{text}");
        Ok(())
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: &'a str,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: ErrorBody<'a>,
}

/// Print `{"error": {"kind", "message"}}` on stdout.
pub fn emit_error(kind: &str, message: &str) {
    let report = ErrorReport { error: ErrorBody { kind, message } };
    match serde_json::to_string(&report) {
        Ok(text) => println!("{text}"),
        Err(_) => println!("{{\"error\":{{\"kind\":\"{kind}\"}}}}"),
    }
}
