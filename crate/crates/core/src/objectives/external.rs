//! External objectives run as child processes.
//!
//! The child is started once per run with `BO_OBJECTIVE_DIM` set to the
//! problem dimension. Each evaluation writes one request line
//! `EVAL v1 v2 ... vD` (shortest round-trip decimal form) to its stdin and
//! reads exactly one reply line holding a single decimal number.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{ExternalCommand, Objective};

pub struct ExternalObjective {
    dim: usize,
    program: String,
    timeout: Duration,
    child: Child,
    stdin: Option<ChildStdin>,
    replies: Receiver<std::io::Result<String>>,
}

impl ExternalObjective {
    pub fn spawn(cmd: &ExternalCommand, dim: usize) -> Result<Self> {
        let mut child = Command::new(&cmd.program)
            .args(&cmd.args)
            .env("BO_OBJECTIVE_DIM", dim.to_string())
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Evaluation(format!("cannot start '{}': {e}", cmd.program)))?;
        let stdin = child.stdin.take();
        let stdout = child
            .stdout
            .take()
            .ok_or_else(|| Error::Evaluation("child stdout unavailable".into()))?;
        let (tx, replies) = mpsc::channel();
        thread::spawn(move || {
            let reader = BufReader::new(stdout);
            for line in reader.lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        Ok(Self {
            dim,
            program: cmd.program.clone(),
            timeout: cmd.timeout,
            child,
            stdin,
            replies,
        })
    }

    /// Sends one request and waits for the reply.
    pub fn request(&mut self, x: &[f64]) -> Result<f64> {
        let mut line = String::from("EVAL");
        for v in x {
            line.push(' ');
            line.push_str(&format!("{v:?}"));
        }
        let fail = |what: String| Error::Evaluation(format!("{what}; request was '{line}'"));
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| fail(format!("'{}' stdin already closed", self.program)))?;
        writeln!(stdin, "{line}")
            .and_then(|_| stdin.flush())
            .map_err(|e| fail(format!("cannot write to '{}': {e}", self.program)))?;
        let reply = match self.replies.recv_timeout(self.timeout) {
            Ok(Ok(reply)) => reply,
            Ok(Err(e)) => return Err(fail(format!("reading from '{}' failed: {e}", self.program))),
            Err(RecvTimeoutError::Timeout) => {
                return Err(fail(format!("'{}' did not answer within {:?}", self.program, self.timeout)))
            }
            Err(RecvTimeoutError::Disconnected) => {
                let status = self.child.try_wait().ok().flatten();
                return Err(fail(format!("'{}' closed its output (exit status {status:?})", self.program)));
            }
        };
        let value: f64 = reply
            .trim()
            .parse()
            .map_err(|_| fail(format!("malformed reply '{}' from '{}'", reply.trim(), self.program)))?;
        Ok(value)
    }
}

impl<T: Scalar> Objective<T> for ExternalObjective {
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&mut self, x: &[T]) -> Result<T> {
        if x.len() != self.dim {
            return Err(Error::Contract(format!("point of dimension {} for a {}-d objective", x.len(), self.dim)));
        }
        let xs: Vec<f64> = x.iter().map(|v| v.to_f64_lossy()).collect();
        self.request(&xs).map(T::lit)
    }
}

impl Drop for ExternalObjective {
    fn drop(&mut self) {
        // closing stdin lets well-behaved servers exit on EOF
        self.stdin.take();
        if let Ok(None) = self.child.try_wait() {
            let _ = self.child.kill();
        }
        let _ = self.child.wait();
    }
}

/// One-shot evaluation: starts the command, sends a single request, stops it.
pub fn external_eval(cmd: &ExternalCommand, x: &[f64]) -> Result<f64> {
    ExternalObjective::spawn(cmd, x.len())?.request(x)
}
