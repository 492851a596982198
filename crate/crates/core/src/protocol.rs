//! Line-delimited JSON protocol for delegating evaluations to a worker
//! process.
//!
//! The worker reads one JSON object per line on stdin and writes one JSON
//! object per line on stdout; anything else goes to stderr. Its first line
//! must be the greeting `{"hello": true, "protocol_version": 1}`. After that
//! each request gets exactly one response, in order:
//!
//! ```text
//! -> {"id":1,"candidate":{"conv_cells":2,"dense_cells":2},"budget":{"epochs":50},"seed":0,"train_config":{...}}
//! <- {"id":1,"status":"ok","fitness":0.86,"accuracy":0.86,"params":849546}
//! <- {"id":2,"status":"error","message":"out of memory"}
//! ```

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::eval::{Budget, EvalContext, EvalResult, Evaluator, Verdict};
use crate::space::Candidate;
use crate::{Error, Result};

pub const PROTOCOL_VERSION: i64 = 1;

/// Training recipe echoed to every worker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub kernel: u32,
    pub base_filters: u32,
    pub cell_filters: u32,
    pub dense_units: u32,
    pub dropout_cell: f64,
    pub dropout_head: f64,
    pub l2: f64,
    pub optimizer: String,
    pub learning_rate: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            kernel: 3,
            base_filters: 32,
            cell_filters: 64,
            dense_units: 512,
            dropout_cell: 0.2,
            dropout_head: 0.5,
            l2: 1e-4,
            optimizer: "adamax".into(),
            learning_rate: 2e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Greeting {
    pub hello: bool,
    pub protocol_version: i64,
}

impl Greeting {
    pub fn current() -> Self {
        Greeting {
            hello: true,
            protocol_version: PROTOCOL_VERSION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRequest {
    pub id: u64,
    pub candidate: Candidate,
    pub budget: Budget,
    pub seed: u64,
    pub train_config: TrainConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseStatus {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResponse {
    pub id: u64,
    pub status: ResponseStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fitness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl EvalResponse {
    pub fn ok(id: u64, fitness: f64) -> Self {
        EvalResponse {
            id,
            status: ResponseStatus::Ok,
            fitness: Some(fitness),
            accuracy: None,
            params: None,
            message: None,
        }
    }

    pub fn error(id: u64, message: impl Into<String>) -> Self {
        EvalResponse {
            id,
            status: ResponseStatus::Error,
            fitness: None,
            accuracy: None,
            params: None,
            message: Some(message.into()),
        }
    }
}

/// What to do when a worker reports an error or the transport breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorPolicy {
    /// Record the trial as penalized (worker error) or failed (transport
    /// error) and keep going.
    #[default]
    Penalize,
    Abort,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalConfig {
    /// Program and arguments of the worker process.
    pub command: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_handshake_timeout")]
    pub handshake_timeout_secs: f64,
    #[serde(default)]
    pub on_error: ErrorPolicy,
    #[serde(default)]
    pub train_config: TrainConfig,
}

fn default_timeout() -> f64 {
    600.0
}

fn default_handshake_timeout() -> f64 {
    30.0
}

impl ExternalConfig {
    pub fn new(command: Vec<String>) -> Self {
        ExternalConfig {
            command,
            timeout_secs: default_timeout(),
            handshake_timeout_secs: default_handshake_timeout(),
            on_error: ErrorPolicy::default(),
            train_config: TrainConfig::default(),
        }
    }

    fn timeout(&self) -> Result<Duration> {
        secs(self.timeout_secs, "timeout_secs")
    }

    fn handshake_timeout(&self) -> Result<Duration> {
        secs(self.handshake_timeout_secs, "handshake_timeout_secs")
    }
}

fn secs(value: f64, name: &str) -> Result<Duration> {
    Duration::try_from_secs_f64(value)
        .ok()
        .filter(|d| !d.is_zero())
        .ok_or_else(|| Error::Config(format!("{name} must be a positive number of seconds")))
}

/// One spawned worker process with a strictly serial request/response pipe.
pub struct Worker {
    child: Child,
    stdin: BufWriter<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
}

impl Worker {
    /// Spawns `command` with piped stdio; stderr is inherited.
    pub fn spawn(command: &[String]) -> Result<Self> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| Error::Config("worker command is empty".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Transport(format!("cannot spawn {program}: {e}")))?;
        let stdin = BufWriter::new(child.stdin.take().expect("piped stdin"));
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        Ok(Worker {
            child,
            stdin,
            lines,
        })
    }

    fn read_line(&mut self, timeout: Duration) -> Result<String> {
        match self.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(Error::Transport(format!("read failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => Err(Error::Timeout(timeout)),
            Err(RecvTimeoutError::Disconnected) => {
                Err(Error::Transport("worker closed its output".into()))
            }
        }
    }

    /// Reads and checks the greeting. Returns the protocol version.
    pub fn handshake(&mut self, timeout: Duration) -> Result<i64> {
        let line = self.read_line(timeout)?;
        let greeting: Greeting = serde_json::from_str(&line)
            .map_err(|e| Error::Transport(format!("malformed greeting {line:?}: {e}")))?;
        if !greeting.hello {
            return Err(Error::Transport(format!("malformed greeting {line:?}")));
        }
        if greeting.protocol_version != PROTOCOL_VERSION {
            return Err(Error::Version {
                found: greeting.protocol_version,
                expected: PROTOCOL_VERSION,
            });
        }
        Ok(greeting.protocol_version)
    }

    /// Sends one request and waits for its response.
    pub fn request(&mut self, request: &EvalRequest, timeout: Duration) -> Result<EvalResponse> {
        let line = serde_json::to_string(request)?;
        writeln!(self.stdin, "{line}")
            .and_then(|_| self.stdin.flush())
            .map_err(|e| Error::Transport(format!("write failed: {e}")))?;
        let reply = self.read_line(timeout)?;
        let response: EvalResponse = serde_json::from_str(&reply)
            .map_err(|e| Error::Transport(format!("unparseable response {reply:?}: {e}")))?;
        if response.id != request.id {
            return Err(Error::Transport(format!(
                "response id {} does not match request id {}",
                response.id, request.id
            )));
        }
        if response.status == ResponseStatus::Ok && !response.fitness.is_some_and(f64::is_finite) {
            return Err(Error::Transport(format!(
                "ok response {} lacks a finite fitness",
                response.id
            )));
        }
        Ok(response)
    }
}

impl Drop for Worker {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Evaluator backed by a pool of worker processes. Each worker serves one
/// request at a time; concurrent callers take turns on idle workers. A
/// worker that hits a transport error is discarded and respawned on next use.
pub struct ExternalEvaluator {
    config: ExternalConfig,
    timeout: Duration,
    handshake_timeout: Duration,
    next_id: AtomicU64,
    idle: Mutex<Vec<Option<Worker>>>,
    available: Condvar,
}

impl ExternalEvaluator {
    /// Spawns `workers` processes and completes every handshake.
    pub fn new(config: ExternalConfig, workers: usize) -> Result<Self> {
        let timeout = config.timeout()?;
        let handshake_timeout = config.handshake_timeout()?;
        let mut pool = Vec::with_capacity(workers.max(1));
        for _ in 0..workers.max(1) {
            let mut worker = Worker::spawn(&config.command)?;
            worker.handshake(handshake_timeout)?;
            pool.push(Some(worker));
        }
        Ok(ExternalEvaluator {
            config,
            timeout,
            handshake_timeout,
            next_id: AtomicU64::new(1),
            idle: Mutex::new(pool),
            available: Condvar::new(),
        })
    }

    fn checkout(&self) -> Option<Worker> {
        let mut idle = self.idle.lock().unwrap();
        loop {
            if let Some(slot) = idle.pop() {
                return slot;
            }
            idle = self.available.wait(idle).unwrap();
        }
    }

    fn checkin(&self, worker: Option<Worker>) {
        self.idle.lock().unwrap().push(worker);
        self.available.notify_one();
    }

    fn exchange(
        &self,
        slot: Option<Worker>,
        request: &EvalRequest,
    ) -> (Option<Worker>, Result<EvalResponse>) {
        let mut worker = match slot {
            Some(w) => w,
            None => {
                let spawned = Worker::spawn(&self.config.command)
                    .and_then(|mut w| w.handshake(self.handshake_timeout).map(|_| w));
                match spawned {
                    Ok(w) => w,
                    Err(e) => return (None, Err(e)),
                }
            }
        };
        match worker.request(request, self.timeout) {
            Ok(response) => (Some(worker), Ok(response)),
            // drop (and kill) the worker; the slot respawns lazily
            Err(e) => (None, Err(e)),
        }
    }

    /// Sends one request on any idle worker.
    pub fn remote_evaluate(&self, request: &EvalRequest) -> Result<EvalResponse> {
        let slot = self.checkout();
        let (slot, response) = self.exchange(slot, request);
        self.checkin(slot);
        response
    }
}

impl Evaluator for ExternalEvaluator {
    fn evaluate(&self, candidate: Candidate, ctx: &EvalContext) -> Result<Verdict> {
        let request = EvalRequest {
            id: self.next_id.fetch_add(1, Ordering::Relaxed),
            candidate,
            budget: ctx.budget,
            seed: ctx.seed,
            train_config: self.config.train_config.clone(),
        };
        let policy = self.config.on_error;
        match self.remote_evaluate(&request) {
            Ok(response) => match response.status {
                ResponseStatus::Ok => {
                    let mut result = EvalResult::ok(response.fitness.expect("checked in request"));
                    result.accuracy = response.accuracy;
                    result.param_count = response.params;
                    result.message = response.message;
                    Ok(Verdict::Scored(result))
                }
                ResponseStatus::Error => {
                    let message = response.message.unwrap_or_else(|| "worker error".into());
                    match policy {
                        ErrorPolicy::Penalize => Ok(Verdict::Rejected(message)),
                        ErrorPolicy::Abort => Err(Error::Aborted(format!(
                            "worker rejected {candidate}: {message}"
                        ))),
                    }
                }
            },
            Err(e) => match policy {
                ErrorPolicy::Penalize => Ok(Verdict::Failed(e.to_string())),
                ErrorPolicy::Abort => Err(e),
            },
        }
    }
}

/// Worker-side loop: writes the greeting, then answers each request line
/// with `handler` until input ends. Malformed lines get an error response
/// (id 0 when none can be recovered) and the loop continues.
pub fn serve<R, W, F>(input: R, mut output: W, mut handler: F) -> std::io::Result<()>
where
    R: BufRead,
    W: Write,
    F: FnMut(&EvalRequest) -> EvalResponse,
{
    writeln!(output, "{}", serde_json::to_string(&Greeting::current())?)?;
    output.flush()?;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = match serde_json::from_str::<EvalRequest>(&line) {
            Ok(request) => handler(&request),
            Err(e) => {
                let id = serde_json::from_str::<serde_json::Value>(&line)
                    .ok()
                    .and_then(|v| v.get("id").and_then(serde_json::Value::as_u64))
                    .unwrap_or(0);
                EvalResponse::error(id, format!("malformed request: {e}"))
            }
        };
        writeln!(output, "{}", serde_json::to_string(&response)?)?;
        output.flush()?;
    }
    Ok(())
}
