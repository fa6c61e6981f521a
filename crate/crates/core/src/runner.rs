//! Runs one model over one dataset, either inside a container or as a local
//! process speaking the same argument contract, and records a run manifest.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, ExitStatus, Stdio};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::registry::ResolvedInvocation;

/// In-container mount points. Image directory and metadata are read-only.
pub const CONTAINER_IMAGE_DIR: &str = "/mnt/images";
pub const CONTAINER_METADATA_PATH: &str = "/mnt/metadata.json";
pub const CONTAINER_OUTPUT_DIR: &str = "/mnt/output";

/// Container runtime CLI; defaults to `docker`.
pub const RUNTIME_ENV: &str = "MAMMOEVAL_CONTAINER_RUNTIME";
/// Forces accelerator detection: `1` present, `0` absent.
pub const GPU_ENV: &str = "MAMMOEVAL_GPU";

pub const HARNESS_VERSION: &str = env!("CARGO_PKG_VERSION");

const STDERR_TAIL_LINES: usize = 40;
const POLL: Duration = Duration::from_millis(10);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Device {
    Cpu,
    Gpu,
}

impl Device {
    pub fn as_str(self) -> &'static str {
        match self {
            Device::Cpu => "cpu",
            Device::Gpu => "gpu",
        }
    }
}

impl fmt::Display for Device {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExecutionBackend {
    Container,
    LocalProcess,
}

impl fmt::Display for ExecutionBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExecutionBackend::Container => "container",
            ExecutionBackend::LocalProcess => "local-process",
        })
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot launch model: {0}")]
    Launch(String),
    #[error("model exited with status {status:?}; stderr tail:\n{stderr_tail}")]
    Model {
        status: Option<i32>,
        stderr_tail: String,
    },
    #[error("model exited successfully but wrote no output at {0}")]
    OutputMissing(PathBuf),
    #[error("model output {path} is malformed: {message}")]
    OutputMalformed { path: PathBuf, message: String },
    #[error("model did not finish within {0:?}")]
    Timeout(Duration),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> RunError {
    let context = context.into();
    move |source| RunError::Io { context, source }
}

/// Devices usable for a run. CPU is always present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviceSet(BTreeSet<Device>);

impl DeviceSet {
    pub fn from_probe(gpu_present: bool) -> Self {
        let mut set = BTreeSet::from([Device::Cpu]);
        if gpu_present {
            set.insert(Device::Gpu);
        }
        DeviceSet(set)
    }

    pub fn contains(&self, d: Device) -> bool {
        self.0.contains(&d)
    }

    pub fn iter(&self) -> impl Iterator<Item = Device> + '_ {
        self.0.iter().copied()
    }
}

fn detect_gpu() -> bool {
    match std::env::var(GPU_ENV).as_deref() {
        Ok("1") => true,
        Ok("0") => false,
        _ => Path::new("/dev/nvidia0").exists(),
    }
}

pub fn list_devices() -> DeviceSet {
    DeviceSet::from_probe(detect_gpu())
}

/// Provenance of one model execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub model: String,
    pub variant: Option<String>,
    pub dataset: String,
    pub device: Device,
    pub backend: ExecutionBackend,
    pub container_image: String,
    pub args: Vec<String>,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    /// `None` when the process was killed (timeout or signal).
    pub exit_status: Option<i32>,
    pub outcome: RunOutcome,
    pub metadata_sha256: String,
    pub output_sha256: Option<String>,
    pub master_seed: u64,
    pub harness_version: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunOutcome {
    Success,
    ModelError,
    OutputMissing,
    OutputMalformed,
    Timeout,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self, RunError> {
        let bytes = std::fs::read(path).map_err(io_err(format!("reading {}", path.display())))?;
        serde_json::from_slice(&bytes).map_err(|e| RunError::Io {
            context: format!("parsing {}", path.display()),
            source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
        })
    }

    /// Writes to a temporary sibling, then renames over `path`.
    pub fn write_atomic(&self, path: &Path) -> Result<(), RunError> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("manifest serializes");
        bytes.push(b'\n');
        write_atomic(path, &bytes)
    }
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    {
        let mut f = File::create(&tmp).map_err(io_err(format!("creating {}", tmp.display())))?;
        f.write_all(bytes)
            .and_then(|_| f.sync_all())
            .map_err(io_err(format!("writing {}", tmp.display())))?;
    }
    std::fs::rename(&tmp, path).map_err(io_err(format!("renaming to {}", path.display())))
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    let mut hasher = Sha256::new();
    let mut f = File::open(path)?;
    std::io::copy(&mut f, &mut hasher)?;
    Ok(hex::encode(hasher.finalize()))
}

pub fn timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub timeout: Duration,
    pub master_seed: u64,
    pub dataset_name: String,
    /// Where the manifest is written.
    pub manifest_path: PathBuf,
    /// Directory for `stdout.log` and `stderr.log`.
    pub log_dir: PathBuf,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub output: PathBuf,
    pub manifest: RunManifest,
}

static DEVICE_LOCKS: [Mutex<()>; 2] = [Mutex::new(()), Mutex::new(())];

fn device_lock(d: Device) -> &'static Mutex<()> {
    match d {
        Device::Cpu => &DEVICE_LOCKS[0],
        Device::Gpu => &DEVICE_LOCKS[1],
    }
}

/// Runtime command line for the container backend, without the runtime
/// binary itself.
pub fn container_command(inv: &ResolvedInvocation, container_name: &str) -> Vec<String> {
    let output_dir = inv
        .paths
        .output
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .to_path_buf();
    let mut cmd = vec![
        "run".to_string(),
        "--rm".to_string(),
        "--name".to_string(),
        container_name.to_string(),
        "-v".to_string(),
        format!("{}:{CONTAINER_IMAGE_DIR}:ro", inv.paths.image_dir.display()),
        "-v".to_string(),
        format!("{}:{CONTAINER_METADATA_PATH}:ro", inv.paths.metadata.display()),
        "-v".to_string(),
        format!("{}:{CONTAINER_OUTPUT_DIR}", output_dir.display()),
    ];
    if inv.device == Device::Gpu {
        cmd.push("--gpus".into());
        cmd.push("all".into());
    }
    cmd.push(inv.container_image.clone());
    cmd.extend(inv.args.iter().cloned());
    cmd
}

fn container_name(inv: &ResolvedInvocation) -> String {
    let mut h = Sha256::new();
    h.update(inv.args.join("\0"));
    h.update(std::process::id().to_le_bytes());
    h.update(Utc::now().timestamp_nanos_opt().unwrap_or_default().to_le_bytes());
    format!("mammoeval-{}-{}", inv.model, &hex::encode(h.finalize())[..12])
}

#[cfg(unix)]
fn own_process_group(cmd: &mut Command) {
    use std::os::unix::process::CommandExt;
    cmd.process_group(0);
}

#[cfg(not(unix))]
fn own_process_group(_cmd: &mut Command) {}

#[cfg(unix)]
fn kill_tree(child: &mut Child) {
    // the child leads its own process group, so this reaches grandchildren too
    unsafe {
        libc::killpg(child.id() as libc::pid_t, libc::SIGKILL);
    }
    let _ = child.kill();
}

#[cfg(not(unix))]
fn kill_tree(child: &mut Child) {
    let _ = child.kill();
}

fn wait_with_timeout(child: &mut Child, timeout: Duration) -> Result<Option<ExitStatus>, RunError> {
    let deadline = Instant::now() + timeout;
    loop {
        if let Some(status) = child.try_wait().map_err(io_err("waiting for model"))? {
            return Ok(Some(status));
        }
        if Instant::now() >= deadline {
            return Ok(None);
        }
        std::thread::sleep(POLL);
    }
}

fn tail_lines(path: &Path, n: usize) -> String {
    let text = std::fs::read(path)
        .map(|b| String::from_utf8_lossy(&b).into_owned())
        .unwrap_or_default();
    let lines: Vec<&str> = text.lines().collect();
    lines[lines.len().saturating_sub(n)..].join("\n")
}

fn check_output(inv: &ResolvedInvocation) -> Result<(), RunError> {
    let path = &inv.paths.output;
    if !path.is_file() {
        return Err(RunError::OutputMissing(path.clone()));
    }
    let bytes = std::fs::read(path).map_err(io_err(format!("reading {}", path.display())))?;
    let malformed = |message: String| RunError::OutputMalformed {
        path: path.clone(),
        message,
    };
    if bytes.is_empty() {
        return Err(malformed("file is empty".into()));
    }
    let first = bytes.split(|&b| b == b'\n').next().unwrap_or_default();
    let expected = inv.granularity.header();
    if first != expected.as_bytes() {
        return Err(malformed(format!(
            "first line is {:?}, expected the {}-level header {expected:?}",
            String::from_utf8_lossy(&first[..first.len().min(200)]),
            inv.granularity
        )));
    }
    Ok(())
}

/// Executes the model and checks that it produced an output file with the
/// header of its declared granularity.
///
/// A manifest is written whenever the process was launched, including on
/// failure. Runs on the same device are serialized.
pub fn run_model(inv: &ResolvedInvocation, opts: &RunOptions) -> Result<RunResult, RunError> {
    if !list_devices().contains(inv.device) {
        return Err(RunError::Launch(format!("device {} is not available", inv.device)));
    }
    let metadata_sha256 = sha256_file(&inv.paths.metadata)
        .map_err(io_err(format!("hashing {}", inv.paths.metadata.display())))?;
    if let Some(dir) = inv.paths.output.parent() {
        std::fs::create_dir_all(dir).map_err(io_err(format!("creating {}", dir.display())))?;
    }
    match std::fs::remove_file(&inv.paths.output) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => {
            return Err(io_err("removing stale output")(e));
        }
        _ => {}
    }
    std::fs::create_dir_all(&opts.log_dir).map_err(io_err("creating log directory"))?;
    let stdout = File::create(opts.log_dir.join("stdout.log")).map_err(io_err("creating stdout.log"))?;
    let stderr_path = opts.log_dir.join("stderr.log");
    let stderr = File::create(&stderr_path).map_err(io_err("creating stderr.log"))?;

    let name = container_name(inv);
    let runtime = std::env::var(RUNTIME_ENV).unwrap_or_else(|_| "docker".to_string());
    let mut cmd = match inv.backend {
        ExecutionBackend::LocalProcess => {
            let exe = inv.local_entrypoint.as_ref().ok_or_else(|| {
                RunError::Launch(format!("model {:?} has no local_entrypoint", inv.model))
            })?;
            let mut c = Command::new(exe);
            c.args(&inv.args);
            c
        }
        ExecutionBackend::Container => {
            let mut c = Command::new(&runtime);
            c.args(container_command(inv, &name));
            c
        }
    };
    cmd.stdin(Stdio::null())
        .stdout(Stdio::from(stdout))
        .stderr(Stdio::from(stderr));
    own_process_group(&mut cmd);

    let _guard = device_lock(inv.device).lock().unwrap_or_else(|e| e.into_inner());
    let started_at = Utc::now();
    let mut child = cmd
        .spawn()
        .map_err(|e| RunError::Launch(format!("{}: {e}", inv.backend)))?;
    let waited = wait_with_timeout(&mut child, opts.timeout);
    let status = match waited {
        Ok(s) => s,
        Err(e) => {
            kill_tree(&mut child);
            let _ = child.wait();
            return Err(e);
        }
    };
    if status.is_none() {
        kill_tree(&mut child);
        let _ = child.wait();
        if inv.backend == ExecutionBackend::Container {
            let _ = Command::new(&runtime)
                .args(["kill", &name])
                .stdout(Stdio::null())
                .stderr(Stdio::null())
                .status();
        }
    }
    let finished_at = Utc::now();

    let (outcome, result) = match status {
        None => (RunOutcome::Timeout, Err(RunError::Timeout(opts.timeout))),
        Some(s) if !s.success() => (
            RunOutcome::ModelError,
            Err(RunError::Model {
                status: s.code(),
                stderr_tail: tail_lines(&stderr_path, STDERR_TAIL_LINES),
            }),
        ),
        Some(_) => match check_output(inv) {
            Ok(()) => (RunOutcome::Success, Ok(())),
            Err(e @ RunError::OutputMissing(_)) => (RunOutcome::OutputMissing, Err(e)),
            Err(e) => (RunOutcome::OutputMalformed, Err(e)),
        },
    };
    let output_sha256 = inv
        .paths
        .output
        .is_file()
        .then(|| sha256_file(&inv.paths.output).ok())
        .flatten();
    let manifest = RunManifest {
        model: inv.model.clone(),
        variant: inv.variant.clone(),
        dataset: opts.dataset_name.clone(),
        device: inv.device,
        backend: inv.backend,
        container_image: inv.container_image.clone(),
        args: inv.args.clone(),
        started_at,
        finished_at,
        exit_status: status.and_then(|s| s.code()),
        outcome,
        metadata_sha256,
        output_sha256,
        master_seed: opts.master_seed,
        harness_version: HARNESS_VERSION.to_string(),
    };
    manifest.write_atomic(&opts.manifest_path)?;
    result.map(|()| RunResult {
        output: inv.paths.output.clone(),
        manifest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictions::Granularity;
    use crate::registry::InvocationPaths;

    fn invocation(dir: &Path, script: &str, granularity: Granularity) -> ResolvedInvocation {
        let exe = dir.join("model.sh");
        std::fs::write(&exe, format!("#!/bin/sh\n{script}\n")).unwrap();
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            std::fs::set_permissions(&exe, std::fs::Permissions::from_mode(0o755)).unwrap();
        }
        let metadata = dir.join("meta.json");
        std::fs::write(&metadata, b"[]").unwrap();
        let output = dir.join("out").join("preds.csv");
        ResolvedInvocation {
            model: "sh".into(),
            variant: None,
            container_image: "example/sh".into(),
            local_entrypoint: Some(exe),
            granularity,
            device: Device::Cpu,
            backend: ExecutionBackend::LocalProcess,
            args: vec![output.display().to_string()],
            params: Default::default(),
            paths: InvocationPaths {
                image_dir: dir.to_path_buf(),
                metadata,
                output,
            },
        }
    }

    fn opts(dir: &Path, timeout: Duration) -> RunOptions {
        RunOptions {
            timeout,
            master_seed: 1,
            dataset_name: "t".into(),
            manifest_path: dir.join("manifest.json"),
            log_dir: dir.join("logs"),
        }
    }

    #[test]
    fn successful_run_writes_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let inv = invocation(
            dir.path(),
            "printf 'index,left_malignant,right_malignant\\n' > \"$1\"",
            Granularity::Breast,
        );
        let r = run_model(&inv, &opts(dir.path(), Duration::from_secs(20))).unwrap();
        assert_eq!(r.manifest.exit_status, Some(0));
        assert_eq!(r.manifest.outcome, RunOutcome::Success);
        let back = RunManifest::read(&dir.path().join("manifest.json")).unwrap();
        assert_eq!(back, r.manifest);
        assert_eq!(back.output_sha256.unwrap(), sha256_file(&inv.paths.output).unwrap());
        assert_eq!(back.metadata_sha256, sha256_file(&inv.paths.metadata).unwrap());
    }

    #[test]
    fn nonzero_exit_is_model_error_with_stderr() {
        let dir = tempfile::tempdir().unwrap();
        let inv = invocation(dir.path(), "echo boom >&2; exit 3", Granularity::Breast);
        match run_model(&inv, &opts(dir.path(), Duration::from_secs(20))) {
            Err(RunError::Model { status, stderr_tail }) => {
                assert_eq!(status, Some(3));
                assert_eq!(stderr_tail, "boom");
            }
            other => panic!("{other:?}"),
        }
        let m = RunManifest::read(&dir.path().join("manifest.json")).unwrap();
        assert_eq!(m.exit_status, Some(3));
        assert_eq!(m.outcome, RunOutcome::ModelError);
    }

    #[test]
    fn stderr_tail_is_capped() {
        let dir = tempfile::tempdir().unwrap();
        let inv = invocation(dir.path(), "for i in $(seq 1 100); do echo line$i >&2; done; exit 1", Granularity::Breast);
        let Err(RunError::Model { stderr_tail, .. }) = run_model(&inv, &opts(dir.path(), Duration::from_secs(20))) else {
            panic!("expected model error");
        };
        let lines: Vec<_> = stderr_tail.lines().collect();
        assert_eq!(lines.len(), 40);
        assert_eq!(lines[0], "line61");
        assert_eq!(lines[39], "line100");
    }

    #[test]
    fn missing_output_and_wrong_header() {
        let dir = tempfile::tempdir().unwrap();
        let inv = invocation(dir.path(), "exit 0", Granularity::Breast);
        assert!(matches!(
            run_model(&inv, &opts(dir.path(), Duration::from_secs(20))),
            Err(RunError::OutputMissing(_))
        ));
        let inv = invocation(
            dir.path(),
            "printf 'index,left_malignant,right_malignant\\n' > \"$1\"",
            Granularity::Image,
        );
        assert!(matches!(
            run_model(&inv, &opts(dir.path(), Duration::from_secs(20))),
            Err(RunError::OutputMalformed { .. })
        ));
    }

    #[test]
    fn timeout_kills_process_tree() {
        let dir = tempfile::tempdir().unwrap();
        let marker = dir.path().join("grandchild.pid");
        let inv = invocation(
            dir.path(),
            &format!("sleep 30 & echo $! > {}; wait", marker.display()),
            Granularity::Breast,
        );
        let t0 = Instant::now();
        let r = run_model(&inv, &opts(dir.path(), Duration::from_millis(300)));
        assert!(matches!(r, Err(RunError::Timeout(_))), "{r:?}");
        assert!(t0.elapsed() < Duration::from_secs(10));
        let m = RunManifest::read(&dir.path().join("manifest.json")).unwrap();
        assert_eq!(m.outcome, RunOutcome::Timeout);
        assert_eq!(m.exit_status, None);

        #[cfg(target_os = "linux")]
        {
            let pid = std::fs::read_to_string(&marker).unwrap().trim().to_string();
            // a killed grandchild is either gone or a zombie awaiting its reaper
            std::thread::sleep(Duration::from_millis(100));
            if let Ok(stat) = std::fs::read_to_string(format!("/proc/{pid}/stat")) {
                let state = stat.rsplit(')').next().unwrap().split_whitespace().next().unwrap();
                assert_eq!(state, "Z", "grandchild {pid} still running");
            }
        }
    }

    #[test]
    fn missing_entrypoint_is_launch_error_without_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut inv = invocation(dir.path(), "exit 0", Granularity::Breast);
        inv.local_entrypoint = Some(dir.path().join("does-not-exist"));
        assert!(matches!(
            run_model(&inv, &opts(dir.path(), Duration::from_secs(5))),
            Err(RunError::Launch(_))
        ));
        assert!(!dir.path().join("manifest.json").exists());
    }

    #[test]
    fn device_sets() {
        let cpu_only = DeviceSet::from_probe(false);
        assert_eq!(cpu_only.iter().collect::<Vec<_>>(), [Device::Cpu]);
        let both = DeviceSet::from_probe(true);
        assert_eq!(both.iter().collect::<Vec<_>>(), [Device::Cpu, Device::Gpu]);
        assert!(list_devices().contains(Device::Cpu));
    }

    #[test]
    fn gpu_request_without_gpu_fails_to_launch() {
        if list_devices().contains(Device::Gpu) {
            return;
        }
        let dir = tempfile::tempdir().unwrap();
        let mut inv = invocation(dir.path(), "exit 0", Granularity::Breast);
        inv.device = Device::Gpu;
        assert!(matches!(
            run_model(&inv, &opts(dir.path(), Duration::from_secs(5))),
            Err(RunError::Launch(_))
        ));
    }

    #[test]
    fn container_command_mounts_read_only_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut inv = invocation(dir.path(), "", Granularity::Image);
        inv.backend = ExecutionBackend::Container;
        inv.device = Device::Gpu;
        inv.args = vec!["/mnt/images".into()];
        let cmd = container_command(&inv, "n");
        let joined = cmd.join(" ");
        assert!(joined.contains(&format!("{}:/mnt/images:ro", dir.path().display())));
        assert!(joined.contains(":/mnt/metadata.json:ro"));
        assert!(joined.contains(&format!("{}:/mnt/output ", dir.path().join("out").display())));
        assert!(joined.contains("--gpus all"));
        assert_eq!(cmd[cmd.len() - 2], "example/sh");
        assert_eq!(cmd.last().unwrap(), "/mnt/images");
    }
}
