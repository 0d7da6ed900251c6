use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::time::Duration;

use qal::circuit::{decode_binary, emit_text, encode_binary, parse_text};
use qal::host::commands::{Request, Response};
use qal::host::{profile_run, DeviceHandle, JobState, Mode, Session, WorkloadJob};
use qal::latency::LatencyReport;
use qal::qsim::Histogram;
use serde_json::json;

use crate::config::{self, Flags, Format, ModeArg, Resolved};
use crate::error::CliError;
use crate::{Cli, Command};

pub fn run(cli: Cli) -> Result<(), CliError> {
    let flags = Flags {
        config: cli.config.as_deref(),
        seed: cli.seed,
        format: cli.format,
        mode: cli.mode,
    };
    let mut out = io::stdout().lock();
    match cli.command {
        Command::Compile { input, output } => {
            let output = output.unwrap_or_else(|| input.with_extension("qalb"));
            compile(&input, &output, &mut out)
        }
        Command::Disasm { input, output } => disasm(&input, output.as_deref(), &mut out),
        Command::DeviceInfo => device_info(&config::resolve(&flags)?, &mut out),
        Command::Bench {
            file,
            count,
            shots,
            priority,
            timing,
            out: report_path,
        } => {
            let mut r = config::resolve(&flags)?;
            if r.mode_flag == Some(ModeArg::Fidelity) {
                return Err(qal::host::HostError::WrongMode(Mode::Latency).into());
            }
            r.device.mode = Mode::Latency;
            if let Some(t) = timing {
                r.device.timing = config::load_timing(&t)?;
            }
            let payload = read_payload(&file)?;
            let workload = vec![
                WorkloadJob {
                    payload,
                    shots,
                    priority
                };
                count
            ];
            let h = DeviceHandle::open(r.device.clone())?;
            let report = profile_run(&h, &workload)?;
            bench_output(&report, r.format, report_path.as_deref(), &mut out)
        }
        Command::Submit {
            file,
            shots,
            priority,
            wait,
        } => {
            let r = config::resolve(&flags)?;
            let payload = read_payload(&file)?;
            let h = restore(&r, &cli.session)?;
            let resp = h.execute(&Request::Submit {
                payload,
                shots,
                priority,
            });
            let id = check(resp)?.job;
            let result = if wait {
                h.resume_dispatch()?;
                check(h.execute(&Request::Wait { job: id, timeout: None }))
                    .and_then(|_| check(h.execute(&Request::GetResults { job: id })))
                    .map(Some)
            } else {
                Ok(None)
            };
            save(&h, &cli.session)?;
            match result? {
                Some(resp) => print_results(&resp, &r, &mut out),
                None => print_line(&mut out, r.format, id, JobState::Queued),
            }
        }
        Command::Status { job } => {
            let r = config::resolve(&flags)?;
            let h = restore(&r, &cli.session)?;
            let resp = check(h.execute(&Request::Check { job }))?;
            print_line(&mut out, r.format, job, resp.state.unwrap_or(JobState::Created))
        }
        Command::Results { job, timeout_ms } => {
            let r = config::resolve(&flags)?;
            let h = restore(&r, &cli.session)?;
            h.resume_dispatch()?;
            let timeout = timeout_ms.map(Duration::from_millis);
            let result = check(h.execute(&Request::Wait { job, timeout }))
                .and_then(|_| check(h.execute(&Request::GetResults { job })));
            save(&h, &cli.session)?;
            print_results(&result?, &r, &mut out)
        }
        Command::Cancel { job } => {
            let r = config::resolve(&flags)?;
            let h = restore(&r, &cli.session)?;
            let resp = check(h.execute(&Request::Cancel { job }))?;
            save(&h, &cli.session)?;
            print_line(&mut out, r.format, job, resp.state.unwrap_or(JobState::Cancelled))
        }
    }
    .and_then(|()| out.flush().map_err(|e| CliError::io(Path::new("<stdout>"), e)))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn stdout_err(e: io::Error) -> CliError {
    CliError::io(Path::new("<stdout>"), e)
}

fn compile(input: &Path, output: &Path, out: &mut impl Write) -> Result<(), CliError> {
    let text = fs::read_to_string(input).map_err(|e| CliError::io(input, e))?;
    let circuit = parse_text(&text).map_err(|source| CliError::Text {
        path: input.to_owned(),
        source,
    })?;
    let bytes = encode_binary(&circuit).map_err(|source| CliError::Circuit {
        path: input.to_owned(),
        source,
    })?;
    write_file(output, &bytes)?;
    writeln!(
        out,
        "{} instructions, {} bytes -> {}",
        circuit.len(),
        bytes.len(),
        output.display()
    )
    .map_err(stdout_err)
}

fn disasm(input: &Path, output: Option<&Path>, out: &mut impl Write) -> Result<(), CliError> {
    let bytes = fs::read(input).map_err(|e| CliError::io(input, e))?;
    let circuit = decode_binary(&bytes).map_err(|source| CliError::Decode {
        path: input.to_owned(),
        source,
    })?;
    let text = emit_text(&circuit).map_err(|source| CliError::Circuit {
        path: input.to_owned(),
        source,
    })?;
    match output {
        Some(p) => write_file(p, text.as_bytes()),
        None => out.write_all(text.as_bytes()).map_err(stdout_err),
    }
}

/// `.qalt` files are assembled first; anything else is sent as-is.
fn read_payload(path: &Path) -> Result<Vec<u8>, CliError> {
    if path.extension().is_some_and(|e| e == "qalt") {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let circuit = parse_text(&text).map_err(|source| CliError::Text {
            path: path.to_owned(),
            source,
        })?;
        encode_binary(&circuit).map_err(|source| CliError::Circuit {
            path: path.to_owned(),
            source,
        })
    } else {
        fs::read(path).map_err(|e| CliError::io(path, e))
    }
}

/// Opens the device with the saved job store and dispatch paused.
fn restore(r: &Resolved, path: &Path) -> Result<DeviceHandle, CliError> {
    let session = match fs::read(path) {
        Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| CliError::Config {
            path: path.to_owned(),
            msg: format!("unreadable session: {e}"),
        })?,
        Err(e) if e.kind() == io::ErrorKind::NotFound => Session::default(),
        Err(e) => return Err(CliError::io(path, e)),
    };
    Ok(DeviceHandle::restore(r.device.clone(), session, true)?)
}

fn save(h: &DeviceHandle, path: &Path) -> Result<(), CliError> {
    let json = serde_json::to_vec_pretty(&h.export_session()).expect("session serializes");
    let tmp = path.with_extension("tmp");
    write_file(&tmp, &json)?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

fn check(resp: Response) -> Result<Response, CliError> {
    if resp.is_ok() {
        Ok(resp)
    } else {
        Err(CliError::Command(resp.message().unwrap_or_default()))
    }
}

fn print_line(out: &mut impl Write, format: Format, job: u64, state: JobState) -> Result<(), CliError> {
    match format {
        Format::Text => writeln!(out, "job {job}: {state}"),
        Format::Json => writeln!(out, "{}", json!({ "job": job, "state": state })),
        Format::Csv => writeln!(out, "job,state\n{job},{state}"),
    }
    .map_err(stdout_err)
}

/// Histogram rows; latency-mode runs also report the model execution time.
fn print_results(resp: &Response, r: &Resolved, out: &mut impl Write) -> Result<(), CliError> {
    let latency = r.device.mode == Mode::Latency;
    let hist: Histogram = resp
        .histogram()
        .map_err(|e| CliError::Command(format!("job {}: undecodable result: {e}", resp.job)))?;
    let rows = hist.rows();
    match r.format {
        Format::Text => {
            for (bits, n) in &rows {
                writeln!(out, "{bits}: {n}").map_err(stdout_err)?;
            }
            if latency {
                writeln!(out, "exec_time_ns: {}", resp.exec_time_ns).map_err(stdout_err)?;
            }
            Ok(())
        }
        Format::Json => {
            let counts: serde_json::Map<_, _> = rows.iter().map(|(b, n)| (b.clone(), json!(n))).collect();
            let v = json!({
                "job": resp.job,
                "state": JobState::Done,
                "num_cbits": hist.num_cbits,
                "counts": counts,
                "exec_time_ns": latency.then_some(resp.exec_time_ns),
            });
            writeln!(out, "{v}").map_err(stdout_err)
        }
        Format::Csv => {
            writeln!(out, "bitstring,count").map_err(stdout_err)?;
            for (bits, n) in &rows {
                writeln!(out, "{bits},{n}").map_err(stdout_err)?;
            }
            Ok(())
        }
    }
}

fn device_info(r: &Resolved, out: &mut impl Write) -> Result<(), CliError> {
    let h = DeviceHandle::open(r.device.clone())?;
    let resp = check(h.execute(&Request::Query))?;
    let info = resp
        .device_info()
        .ok_or_else(|| CliError::Command("QUERY returned no device description".into()))?;
    let gates: Vec<_> = info.native_gates.iter().map(|g| g.mnemonic()).collect();
    let modes: Vec<_> = [("fidelity", info.modes.fidelity), ("latency", info.modes.latency)]
        .iter()
        .filter(|(_, on)| *on)
        .map(|(m, _)| *m)
        .collect();
    let coupling = config::coupling_name(&r.device.coupling);
    match r.format {
        Format::Json => {
            let s = serde_json::to_string_pretty(&info).expect("DeviceInfo serializes");
            writeln!(out, "{s}")
        }
        Format::Text => writeln!(out, "qubits: {}", info.num_qubits)
            .and_then(|()| writeln!(out, "native gates: {}", gates.join(" ")))
            .and_then(|()| writeln!(out, "coupling: {coupling}"))
            .and_then(|()| writeln!(out, "edges: {}", info.coupling_map))
            .and_then(|()| writeln!(out, "modes: {}", modes.join(", ")))
            .and_then(|()| {
                writeln!(
                    out,
                    "queue depths: submission {}, completion {}",
                    info.queue_depths.submission, info.queue_depths.completion
                )
            }),
        Format::Csv => {
            let edges: Vec<_> = info
                .coupling_map
                .edges()
                .iter()
                .map(|(a, b)| format!("{a}-{b}"))
                .collect();
            writeln!(out, "key,value")
                .and_then(|()| writeln!(out, "qubits,{}", info.num_qubits))
                .and_then(|()| writeln!(out, "native_gates,{}", gates.join(" ")))
                .and_then(|()| writeln!(out, "coupling,{coupling}"))
                .and_then(|()| writeln!(out, "edges,{}", edges.join(" ")))
                .and_then(|()| writeln!(out, "modes,{}", modes.join(" ")))
                .and_then(|()| writeln!(out, "submission_queue,{}", info.queue_depths.submission))
                .and_then(|()| writeln!(out, "completion_queue,{}", info.queue_depths.completion))
        }
    }
    .map_err(stdout_err)
}

fn bench_output(
    report: &LatencyReport,
    format: Format,
    path: Option<&Path>,
    out: &mut impl Write,
) -> Result<(), CliError> {
    let serialized = match format {
        Format::Csv => report.to_csv(),
        Format::Json | Format::Text => report.to_json(),
    };
    match (path, format) {
        (Some(p), _) => {
            write_file(p, serialized.as_bytes())?;
            out.write_all(report.summary_table().as_bytes()).map_err(stdout_err)
        }
        (None, Format::Text) => out.write_all(report.summary_table().as_bytes()).map_err(stdout_err),
        (None, _) => out.write_all(serialized.as_bytes()).map_err(stdout_err),
    }
}
