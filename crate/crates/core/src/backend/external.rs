use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use super::{BackendError, CompletionBackend, INPUT_VALID};
use crate::descriptor::format::{read_descriptor, write_descriptor};
use crate::descriptor::KaplanDescriptor;
use crate::scalar::Scalar;

/// Default limit on one backend invocation.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

/// Largest allowed deviation on an input-valid cell before the output is rejected.
const SKIP_TOLERANCE: f64 = 1e-5;

const POLL_INTERVAL: Duration = Duration::from_millis(5);

/// Runs an external program per descriptor.
///
/// The program is called as `program [args..] <io_dir>/in_<uuid>.kpln <io_dir>/out_<uuid>.kpln`
/// and must write the completed descriptor to the second path.
#[derive(Debug, Clone)]
pub struct ExternalBackend {
    program: String,
    args: Vec<String>,
    io_dir: PathBuf,
    timeout: Duration,
    keep_files: bool,
}

impl ExternalBackend {
    pub fn new(program: impl Into<String>, args: Vec<String>, io_dir: impl Into<PathBuf>) -> Self {
        Self { program: program.into(), args, io_dir: io_dir.into(), timeout: DEFAULT_TIMEOUT, keep_files: false }
    }

    /// Splits a command line on whitespace into program and arguments.
    pub fn from_command_line(command: &str, io_dir: impl Into<PathBuf>) -> Option<Self> {
        let mut parts = command.split_whitespace().map(str::to_owned);
        let program = parts.next()?;
        Some(Self::new(program, parts.collect(), io_dir))
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    /// Keep the exchanged `.kpln` files instead of deleting them after each call.
    pub fn keep_files(mut self, keep: bool) -> Self {
        self.keep_files = keep;
        self
    }

    pub fn io_dir(&self) -> &Path {
        &self.io_dir
    }

    fn run(&self, input: &Path, output: &Path) -> Result<(), BackendError> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .arg(input)
            .arg(output)
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::piped())
            .spawn()?;
        let mut stderr_pipe = child.stderr.take().expect("stderr is piped");
        let stderr_reader = std::thread::spawn(move || {
            let mut buf = String::new();
            let _ = stderr_pipe.read_to_string(&mut buf);
            buf
        });
        let started = Instant::now();
        let status = loop {
            if let Some(status) = child.try_wait()? {
                break status;
            }
            if started.elapsed() >= self.timeout {
                let _ = child.kill();
                let _ = child.wait();
                return Err(BackendError::Timeout(self.timeout));
            }
            std::thread::sleep(POLL_INTERVAL);
        };
        let stderr = stderr_reader.join().unwrap_or_default();
        if !status.success() {
            return Err(BackendError::ProcessFailed { status: status.to_string(), stderr: stderr.trim().to_owned() });
        }
        Ok(())
    }
}

/// Rejects outputs that moved an input-valid cell by more than the tolerance.
fn check_skip_preserved<S: Scalar>(k0: &KaplanDescriptor<S>, out: &KaplanDescriptor<S>) -> Result<(), BackendError> {
    let observed = S::lit(INPUT_VALID);
    let tol = S::lit(SKIP_TOLERANCE);
    for (plane, (a, b)) in k0.planes.iter().zip(&out.planes).enumerate() {
        let r = a.frame.resolution;
        for i in 0..r {
            for j in 0..r {
                if a.valid(i, j) < observed {
                    continue;
                }
                let moved = (a.depth(i, j) - b.depth(i, j)).abs() > tol
                    || (a.normal(i, j) - b.normal(i, j)).to_array().iter().any(|c| c.abs() > tol);
                if moved {
                    return Err(BackendError::SkipViolation { plane, i, j });
                }
            }
        }
    }
    Ok(())
}

impl<S: Scalar> CompletionBackend<S> for ExternalBackend {
    fn name(&self) -> &str {
        "external"
    }

    fn max_concurrency(&self) -> Option<usize> {
        Some(1)
    }

    fn predict(&self, k0: &KaplanDescriptor<S>) -> Result<KaplanDescriptor<S>, BackendError> {
        std::fs::create_dir_all(&self.io_dir)?;
        let id = uuid::Uuid::new_v4();
        let input = self.io_dir.join(format!("in_{id}.kpln"));
        let output = self.io_dir.join(format!("out_{id}.kpln"));
        write_descriptor(&input, k0).map_err(BackendError::Malformed)?;
        let result = self
            .run(&input, &output)
            .and_then(|()| read_descriptor::<S>(&output).map_err(BackendError::Malformed));
        if !self.keep_files {
            let _ = std::fs::remove_file(&input);
            let _ = std::fs::remove_file(&output);
        }
        let mut out = result?;
        out.query_index = k0.query_index;
        super::validate_output(k0, &out)?;
        check_skip_preserved(k0, &out)?;
        Ok(out)
    }
}
