use std::process::ExitCode;

use clap::Parser;

use contagion_lab::{run_args, Args};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Some(threads) = std::env::var("CONTAGION_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if threads > 0 {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
                log::warn!("CONTAGION_THREADS ignored: {e}");
            }
        }
    }
    // clap exits with 2 on bad arguments, which is the numerical-failure code here.
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run_args(&args) {
        Ok(report) => {
            log::info!("wrote {} files and {}", report.files.len(), report.manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
