//! Reference evaluation worker speaking the line-delimited JSON protocol.
//!
//! ```text
//! cellnas-worker [--mode MODE] [--peak X] [--optimum C,D] [--curvature A,B] [--noise-sd S]
//! ```
//!
//! Modes: `surrogate` (default; same formula as the in-process surrogate,
//! noise keyed by the request seed), `echo` (fitness = conv + dense),
//! `error` (every request answered with status "error"), and fault modes
//! for exercising the client: `silent`, `bad-version`, `garbage`,
//! `wrong-id`, `hang`, `exit-after:N`.

use std::io::{self, BufRead, Write};
use std::process::ExitCode;

use cellnas::eval::{surrogate_fitness, SurrogateParams};
use cellnas::protocol::{serve, EvalRequest, EvalResponse};
use cellnas::space::{build_plan, count_params, PlanConfig};

fn pair(value: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = value.split(',').collect();
    match parts.as_slice() {
        [a, b] => Ok([
            a.trim().parse().map_err(|e| format!("{value}: {e}"))?,
            b.trim().parse().map_err(|e| format!("{value}: {e}"))?,
        ]),
        _ => Err(format!("expected two comma-separated numbers, got {value}")),
    }
}

fn surrogate_response(req: &EvalRequest, params: &SurrogateParams) -> EvalResponse {
    let fitness = surrogate_fitness(req.candidate, params, params.seed.unwrap_or(req.seed));
    let mut resp = EvalResponse::ok(req.id, fitness);
    if (0.0..=1.0).contains(&fitness) {
        resp.accuracy = Some(fitness);
    }
    resp.params = Some(count_params(&build_plan(
        req.candidate,
        &PlanConfig::default(),
    )));
    resp
}

fn run() -> Result<(), String> {
    let mut mode = "surrogate".to_string();
    let mut params = SurrogateParams::default();
    let mut args = std::env::args().skip(1);
    while let Some(flag) = args.next() {
        let mut value = || args.next().ok_or_else(|| format!("{flag} needs a value"));
        match flag.as_str() {
            "--mode" => mode = value()?,
            "--peak" => params.peak = value()?.parse().map_err(|e| format!("--peak: {e}"))?,
            "--optimum" => params.optimum = pair(&value()?)?,
            "--curvature" => params.curvature = pair(&value()?)?,
            "--noise-sd" => {
                params.noise_sd = value()?.parse().map_err(|e| format!("--noise-sd: {e}"))?
            }
            other => return Err(format!("unknown flag {other}")),
        }
    }

    let stdin = io::stdin().lock();
    let mut stdout = io::stdout().lock();
    let io_err = |e: io::Error| e.to_string();

    match mode.as_str() {
        "surrogate" => serve(stdin, stdout, |req| surrogate_response(req, &params)).map_err(io_err),
        "echo" => serve(stdin, stdout, |req| {
            EvalResponse::ok(
                req.id,
                f64::from(req.candidate.conv_cells + req.candidate.dense_cells),
            )
        })
        .map_err(io_err),
        "error" => {
            serve(stdin, stdout, |req| EvalResponse::error(req.id, "refused")).map_err(io_err)
        }
        "silent" => {
            // never greets; wait until stdin closes
            for _ in stdin.lines() {}
            Ok(())
        }
        "bad-version" => {
            writeln!(stdout, r#"{{"hello": true, "protocol_version": 2}}"#).map_err(io_err)?;
            for _ in stdin.lines() {}
            Ok(())
        }
        "garbage" => serve(stdin, GarbageWriter::new(stdout), |req| {
            EvalResponse::ok(req.id, 1.0)
        })
        .map_err(io_err),
        "wrong-id" => {
            serve(stdin, stdout, |req| EvalResponse::ok(req.id + 1000, 1.0)).map_err(io_err)
        }
        "hang" => {
            writeln!(stdout, r#"{{"hello": true, "protocol_version": 1}}"#).map_err(io_err)?;
            stdout.flush().map_err(io_err)?;
            for _ in stdin.lines() {}
            Ok(())
        }
        other => match other.strip_prefix("exit-after:") {
            Some(n) => {
                let limit: usize = n.parse().map_err(|e| format!("{other}: {e}"))?;
                let mut served = 0;
                let mut input = stdin.lines();
                writeln!(stdout, r#"{{"hello": true, "protocol_version": 1}}"#).map_err(io_err)?;
                stdout.flush().map_err(io_err)?;
                while served < limit {
                    let Some(Ok(line)) = input.next() else { break };
                    let req: EvalRequest =
                        serde_json::from_str(&line).map_err(|e| e.to_string())?;
                    let resp = surrogate_response(&req, &params);
                    writeln!(
                        stdout,
                        "{}",
                        serde_json::to_string(&resp).map_err(|e| e.to_string())?
                    )
                    .map_err(io_err)?;
                    stdout.flush().map_err(io_err)?;
                    served += 1;
                }
                Ok(())
            }
            None => Err(format!("unknown mode {other}")),
        },
    }
}

/// Passes the greeting through, then replaces every response with junk.
struct GarbageWriter<W> {
    inner: W,
    lines: usize,
}

impl<W: Write> GarbageWriter<W> {
    fn new(inner: W) -> Self {
        GarbageWriter { inner, lines: 0 }
    }
}

impl<W: Write> Write for GarbageWriter<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        if self.lines == 0 {
            self.inner.write_all(buf)?;
        } else if buf.contains(&b'\n') {
            self.inner.write_all(b"this is not json\n")?;
        }
        self.lines += buf.iter().filter(|b| **b == b'\n').count();
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cellnas-worker: {e}");
            ExitCode::from(2)
        }
    }
}
