use std::path::PathBuf;
use std::process::ExitCode;

use qhhg::config::parse_config;
use qhhg::run::run;

const USAGE: &str = "usage: qhhg <run.cfg> [--out DIR] [--threads N]";

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("qhhg: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<(), String> {
    let mut args = std::env::args().skip(1);
    let mut cfg_path: Option<PathBuf> = None;
    let mut out_dir: Option<PathBuf> = None;
    let mut threads: Option<usize> = None;
    while let Some(arg) = args.next() {
        match arg.as_str() {
            "--out" => {
                let v = args.next().ok_or("--out needs a directory argument")?;
                out_dir = Some(PathBuf::from(v));
            }
            "--threads" => {
                let v = args.next().ok_or("--threads needs a number")?;
                threads = Some(v.parse().map_err(|_| format!("--threads: `{v}` is not a number"))?);
            }
            "--help" | "-h" => {
                println!("{USAGE}");
                return Ok(());
            }
            _ if arg.starts_with('-') => return Err(format!("unknown flag `{arg}`\n{USAGE}")),
            _ => {
                if cfg_path.is_some() {
                    return Err(format!("unexpected extra argument `{arg}`\n{USAGE}"));
                }
                cfg_path = Some(PathBuf::from(arg));
            }
        }
    }
    let cfg_path = cfg_path.ok_or(USAGE)?;

    let threads = threads.or_else(|| {
        std::env::var("QHHG_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| format!("thread pool: {e}"))?;
    }

    let text = std::fs::read_to_string(&cfg_path)
        .map_err(|e| format!("{}: {e}", cfg_path.display()))?;
    let config = parse_config(&text).map_err(|e| e.to_string())?;
    let out_dir = out_dir
        .or_else(|| config.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let files = run(&config, &out_dir).map_err(|e| e.to_string())?;
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
